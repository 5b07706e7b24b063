#pragma once

#include <cstdint>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mceb/errors.hpp"
#include "mceb/harness.hpp"
#include "mceb/snapshot_io.hpp"
#include "mceb/version.hpp"

namespace mceb {

using json = nlohmann::ordered_json;

namespace detail {

inline std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline void reject_unknown_keys(const json& obj, const std::set<std::string>& known,
                                const std::string& path) {
    for (const auto& [key, value] : obj.items())
        if (!known.count(key))
            throw ConfigError(path.empty() ? "unknown key '" + key + "'"
                                           : path + ": unknown key '" + key + "'");
}

template <typename T>
T get_field(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.contains(key)) throw ConfigError(path + "." + key + ": missing required field");
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(path + "." + key + ": wrong type");
    }
}

template <typename T>
T get_field_or(const json& obj, const std::string& key, const std::string& path, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(path + "." + key + ": wrong type");
    }
}

} // namespace detail

inline BoundModel model_from_string(const std::string& s) {
    if (s == "bound1_uncorrelated") return BoundModel::Bound1Uncorrelated;
    if (s == "bound2_phase_correlated") return BoundModel::Bound2PhaseCorrelated;
    if (s == "bound3_fully_correlated") return BoundModel::Bound3FullyCorrelated;
    if (s == "crlb_baseline") return BoundModel::CrlbBaseline;
    throw ConfigError("models: unknown model '" + s + "'");
}

inline CorrelationModel correlation_model_from_string(const std::string& s) {
    if (s == "uncorrelated") return CorrelationModel::Uncorrelated;
    if (s == "phase_correlated") return CorrelationModel::PhaseCorrelated;
    if (s == "fully_correlated") return CorrelationModel::FullyCorrelated;
    throw ConfigError("tap_set.correlation_model: unknown value '" + s + "'");
}

// Apply "--set a.b.c=value" overrides onto the raw scenario JSON. The value
// is parsed as JSON when possible, otherwise taken as a string.
inline void apply_overrides(json& doc, const std::vector<std::string>& overrides) {
    for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ConfigError("--set expects key=value, got '" + kv + "'");
        const std::string key = kv.substr(0, eq);
        const std::string raw = kv.substr(eq + 1);
        json value = json::parse(raw, nullptr, false);
        if (value.is_discarded()) value = raw;

        json* node = &doc;
        std::istringstream parts(key);
        std::string part;
        std::vector<std::string> segs;
        while (std::getline(parts, part, '.')) segs.push_back(part);
        for (std::size_t i = 0; i + 1 < segs.size(); ++i) node = &(*node)[segs[i]];
        (*node)[segs.back()] = value;
    }
}

inline Scenario scenario_from_json(const json& doc) {
    using detail::get_field;
    using detail::get_field_or;
    if (!doc.is_object()) throw ConfigError("scenario: top level must be an object");
    detail::reject_unknown_keys(doc,
                                {"config", "tap_set", "beam_covariance", "snr_grid_db",
                                 "n_trials", "master_seed", "models", "n_threads"},
                                "scenario");

    Scenario sc;
    {
        const json cfg = doc.value("config", json::object());
        detail::reject_unknown_keys(cfg, {"n_dft", "n_rb", "n_rx", "n_pilots", "sample_period"},
                                    "config");
        sc.config.n_dft = get_field<int>(cfg, "n_dft", "config");
        sc.config.n_rb = get_field<int>(cfg, "n_rb", "config");
        sc.config.n_rx = get_field_or<int>(cfg, "n_rx", "config", 64);
        sc.config.n_pilots = get_field_or<int>(cfg, "n_pilots", "config", 2);
        sc.config.sample_period =
            get_field_or<double>(cfg, "sample_period", "config", 1.0 / 30.72e6);
    }
    {
        if (!doc.contains("tap_set")) throw ConfigError("tap_set: missing required section");
        const json& taps = doc.at("tap_set");
        detail::reject_unknown_keys(
            taps, {"delays", "powers", "correlation_model", "shared_signature"}, "tap_set");
        sc.tap_set.delays = get_field<std::vector<int>>(taps, "delays", "tap_set");
        sc.tap_set.powers = get_field<std::vector<double>>(taps, "powers", "tap_set");
        sc.tap_set.correlation_model = correlation_model_from_string(
            get_field_or<std::string>(taps, "correlation_model", "tap_set", "uncorrelated"));
        sc.tap_set.shared_signature =
            get_field_or<bool>(taps, "shared_signature", "tap_set", false);
    }
    if (doc.contains("beam_covariance")) {
        const json& cov = doc.at("beam_covariance");
        const int m = sc.tap_set.size();
        if (!cov.is_array() || static_cast<int>(cov.size()) != m)
            throw ConfigError("beam_covariance: must be an MxM array of [re, im] pairs");
        sc.beam_covariance = Matrix(m, m);
        for (int i = 0; i < m; ++i) {
            if (!cov[i].is_array() || static_cast<int>(cov[i].size()) != m)
                throw ConfigError("beam_covariance: row " + std::to_string(i) + " has wrong size");
            for (int j = 0; j < m; ++j) {
                const json& cell = cov[i][j];
                if (cell.is_number()) {
                    sc.beam_covariance(i, j) = cell.get<double>();
                } else if (cell.is_array() && cell.size() == 2) {
                    sc.beam_covariance(i, j) = {cell[0].get<double>(), cell[1].get<double>()};
                } else {
                    throw ConfigError("beam_covariance: entries must be numbers or [re, im]");
                }
            }
        }
    } else {
        sc.beam_covariance = Scenario::diagonal_covariance(sc.tap_set);
    }
    sc.snr_grid_db = get_field<std::vector<double>>(doc, "snr_grid_db", "scenario");
    sc.n_trials = get_field_or<int>(doc, "n_trials", "scenario", 10000);
    sc.master_seed = get_field_or<std::uint64_t>(doc, "master_seed", "scenario", 1);
    sc.n_threads = get_field_or<int>(doc, "n_threads", "scenario", 0);
    if (doc.contains("models")) {
        sc.models.clear();
        for (const auto& name : get_field<std::vector<std::string>>(doc, "models", "scenario"))
            sc.models.push_back(model_from_string(name));
    }
    sc.validate();
    return sc;
}

struct ParsedScenario {
    Scenario scenario;
    std::string config_hash; // digest of the canonical post-override JSON
};

inline ParsedScenario parse_config(const std::string& path,
                                   const std::vector<std::string>& overrides = {},
                                   std::optional<std::uint64_t> seed_override = std::nullopt) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path + "'");
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw ConfigError(path + ": not valid JSON");
    apply_overrides(doc, overrides);
    ParsedScenario out;
    out.config_hash = detail::hex64(detail::fnv1a64(doc.dump()));
    out.scenario = scenario_from_json(doc);
    if (seed_override) out.scenario.master_seed = *seed_override;
    return out;
}

struct CurveMeta {
    std::uint64_t seed = 0;
    std::string config_hash;
};

inline json curve_to_json(const BoundCurve& curve, const CurveMeta& meta) {
    json doc;
    doc["meta"] = {{"version", kVersion}, {"seed", meta.seed}, {"config_hash", meta.config_hash}};
    doc["points"] = json::array();
    for (const auto& point : curve.points) {
        json p;
        p["snr_db"] = point.snr_db;
        p["sigma2"] = point.sigma2;
        p["results"] = json::array();
        for (const auto& r : point.results)
            p["results"].push_back({{"model", to_string(r.model)},
                                    {"theoretical_residual", r.theoretical},
                                    {"empirical_residual", r.empirical},
                                    {"std_err", r.std_err},
                                    {"n_trials", r.n_trials},
                                    {"degeneracies", r.degeneracies}});
        doc["points"].push_back(std::move(p));
    }
    return doc;
}

inline std::string curve_to_csv(const BoundCurve& curve) {
    std::ostringstream out;
    out << "snr_db,sigma2,model,theoretical_residual,empirical_residual,std_err,n_trials,"
           "degeneracies\n";
    for (const auto& point : curve.points)
        for (const auto& r : point.results)
            out << detail::format_double(point.snr_db) << ',' << detail::format_double(point.sigma2)
                << ',' << to_string(r.model) << ',' << detail::format_double(r.theoretical) << ','
                << detail::format_double(r.empirical) << ',' << detail::format_double(r.std_err)
                << ',' << r.n_trials << ',' << r.degeneracies << "\n";
    return out.str();
}

enum class CurveFormat { Csv, Json };

inline void emit_curve(const BoundCurve& curve, CurveFormat format, const std::string& path,
                       const CurveMeta& meta) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    if (format == CurveFormat::Csv)
        out << curve_to_csv(curve);
    else
        out << curve_to_json(curve, meta).dump(2) << "\n";
    if (!out) throw IoError("write failure on '" + path + "'");
}

} // namespace mceb
