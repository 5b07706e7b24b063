// mceb: beam-domain MMSE channel-estimation bound simulator.

#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mceb/scenario_io.hpp"
#include "mceb/snapshot_io.hpp"
#include "mceb/validate.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_path;
    std::string format = "csv";
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool need_out) {
    cmd->add_option("--config", opts.config_path, "scenario config file (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    auto* out = cmd->add_option("--out", opts.out_path, "output curve file");
    if (need_out) out->required();
    cmd->add_option("--format", opts.format, "output format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    cmd->add_option("--set", opts.overrides, "override scenario fields, dotted key=value");
    cmd->add_option("--seed", opts.seed, "override master_seed");
}

mceb::CurveFormat parse_format(const std::string& s) {
    return s == "json" ? mceb::CurveFormat::Json : mceb::CurveFormat::Csv;
}

void write_curve(const mceb::BoundCurve& curve, const CommonOpts& opts,
                 const mceb::ParsedScenario& parsed) {
    mceb::CurveMeta meta{parsed.scenario.master_seed, parsed.config_hash};
    mceb::emit_curve(curve, parse_format(opts.format), opts.out_path, meta);
    std::cout << "wrote " << opts.out_path << " (" << curve.points.size() << " SNR points, "
              << parsed.scenario.models.size() << " models)\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Beam-domain MMSE channel-estimation bound simulator"};
    app.require_subcommand(1);

    CommonOpts bound_opts, sweep_opts, ingest_opts, validate_opts;
    double bound_snr = 0.0;
    bool bound_snr_given = false;
    std::string snapshot_path, golden_path;

    auto* bound_cmd = app.add_subcommand("bound", "evaluate bounds at a single SNR point");
    add_common(bound_cmd, bound_opts, true);
    bound_cmd->add_option("--snr", bound_snr, "SNR point in dB (default: first grid entry)")
        ->each([&](const std::string&) { bound_snr_given = true; });

    auto* sweep_cmd = app.add_subcommand("sweep", "run the full SNR sweep");
    add_common(sweep_cmd, sweep_opts, true);

    auto* ingest_cmd = app.add_subcommand("ingest", "run bounds from an ingested snapshot file");
    add_common(ingest_cmd, ingest_opts, true);
    ingest_cmd->add_option("--snapshot", snapshot_path, "MCEB-SNAP v1 snapshot file")
        ->required()
        ->check(CLI::ExistingFile);

    auto* validate_cmd = app.add_subcommand("validate", "run the self-check invariant suite");
    add_common(validate_cmd, validate_opts, false);
    validate_cmd->add_option("--golden", golden_path,
                             "previously emitted JSON curve to cross-check");

    CLI11_PARSE(app, argc, argv);

    try {
        if (bound_cmd->parsed()) {
            const auto parsed =
                mceb::parse_config(bound_opts.config_path, bound_opts.overrides, bound_opts.seed);
            const double snr =
                bound_snr_given ? bound_snr : parsed.scenario.snr_grid_db.front();
            mceb::BoundCurve curve;
            curve.points.push_back(mceb::run_point(parsed.scenario, snr));
            write_curve(curve, bound_opts, parsed);
        } else if (sweep_cmd->parsed()) {
            const auto parsed =
                mceb::parse_config(sweep_opts.config_path, sweep_opts.overrides, sweep_opts.seed);
            write_curve(mceb::run_sweep(parsed.scenario), sweep_opts, parsed);
        } else if (ingest_cmd->parsed()) {
            const auto parsed = mceb::parse_config(ingest_opts.config_path, ingest_opts.overrides,
                                                   ingest_opts.seed);
            const mceb::ChannelSnapshot snapshot = mceb::load_snapshot(snapshot_path);
            write_curve(mceb::run_from_snapshot(snapshot, parsed.scenario), ingest_opts, parsed);
        } else if (validate_cmd->parsed()) {
            const auto parsed = mceb::parse_config(validate_opts.config_path,
                                                   validate_opts.overrides, validate_opts.seed);
            mceb::ValidationReport report = mceb::run_validation(parsed.scenario);
            if (!golden_path.empty()) {
                auto golden = mceb::check_golden(parsed.scenario, golden_path);
                report.checks.insert(report.checks.end(), golden.checks.begin(),
                                     golden.checks.end());
            }
            std::cout << mceb::format_report(report);
            if (!report.ok()) return 1;
        }
    } catch (const mceb::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const mceb::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 2;
    } catch (const mceb::IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
