#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "mceb/harness.hpp"
#include "mceb/scenario_io.hpp"

namespace mceb {

enum class CheckStatus { Pass, Fail, Skip };

struct CheckResult {
    std::string name;
    CheckStatus status;
    std::string detail;
};

struct ValidationReport {
    std::vector<CheckResult> checks;

    bool ok() const {
        for (const auto& c : checks)
            if (c.status == CheckStatus::Fail) return false;
        return true;
    }
};

namespace detail {

inline void add_check(ValidationReport& report, const std::string& name, bool pass,
                      const std::string& detail) {
    report.checks.push_back({name, pass ? CheckStatus::Pass : CheckStatus::Fail, detail});
}

inline std::string ratio_line(const char* what, double measured, double expected) {
    std::ostringstream os;
    os << what << " measured=" << measured << " expected=" << expected;
    return os.str();
}

} // namespace detail

// Self-check suite over a scenario: QR integrity, projection power ratios,
// trace-formula agreement, bound ordering, determinism.
inline ValidationReport run_validation(const Scenario& scenario) {
    ValidationReport report;
    scenario.validate();
    const auto ctx = ScenarioContext::build(scenario);
    const int m = scenario.tap_set.size();
    const int n_rx = scenario.config.n_rx;

    { // QR integrity
        const double ortho =
            (ctx.basis.q_matrix.adjoint() * ctx.basis.q_matrix - Matrix::Identity(m, m))
                .cwiseAbs()
                .maxCoeff();
        const double recon = (ctx.basis.q_matrix * ctx.basis.r_matrix - ctx.basis.b_matrix).norm() /
                             ctx.basis.b_matrix.norm();
        detail::add_check(report, "qr_orthonormality", ortho <= 1e-10,
                          detail::ratio_line("max |Q^H Q - I|", ortho, 0.0));
        detail::add_check(report, "qr_reconstruction", recon <= 1e-10,
                          detail::ratio_line("rel Frobenius |QR - B|", recon, 0.0));
    }

    { // scalar analytic anchor: M=1, C=[1], sigma2=1, one pilot -> 0.5
        CorrelationMatrix c{Matrix::Identity(1, 1)};
        const double r = residual_power_theoretical(c, NoiseSpec{1.0, 1},
                                                    BoundModel::Bound1Uncorrelated, n_rx);
        detail::add_check(report, "scalar_anchor", std::abs(r - 0.5) <= 1e-12,
                          detail::ratio_line("residual", r, 0.5));
    }

    { // phase projection keeps half the power
        const int entries = 1000000;
        const int cols = 1000;
        NoiseSpec ns{1.0, 1};
        rng::Stream sig_stream(rng::derive_seed(scenario.master_seed, 0xF0A5u));
        double in_power = 0.0, out_power = 0.0;
        for (int block = 0; block < entries / cols; ++block) {
            NoiseMatrix e = draw_noise(1, cols, ns, rng::derive_seed(scenario.master_seed, 0xB10Cu,
                                                                     static_cast<std::uint64_t>(block)));
            AmplitudeMatrix x;
            x.entries = Matrix(1, cols);
            for (int j = 0; j < cols; ++j) x.entries(0, j) = sig_stream.complex_gaussian();
            const NoiseMatrix p = project_noise_phase(e, x);
            in_power += e.entries.squaredNorm();
            out_power += p.entries.squaredNorm();
        }
        const double ratio = out_power / in_power;
        detail::add_check(report, "phase_projection_half_power",
                          std::abs(ratio - 0.5) <= 0.01,
                          detail::ratio_line("power ratio", ratio, 0.5));
    }

    { // full projection keeps 1/N_RX of the power
        const int rows = 10000;
        NoiseSpec ns{1.0, 1};
        const Matrix sig = draw_signatures(rows, n_rx, scenario.master_seed + 17);
        NoiseMatrix e = draw_noise(rows, n_rx, ns, rng::derive_seed(scenario.master_seed, 0xFA11u));
        const NoiseMatrix p = project_noise_full(e, sig);
        const double ratio = p.entries.squaredNorm() / e.entries.squaredNorm();
        const double expected = 1.0 / n_rx;
        detail::add_check(report, "full_projection_power",
                          std::abs(ratio - expected) <= 0.03 * expected,
                          detail::ratio_line("power ratio", ratio, expected));
    }

    { // white noise power preserved through Q^H
        const int cols = std::max(1, 40000 / m);
        rng::Stream g(rng::derive_seed(scenario.master_seed, 0x90A7u));
        Matrix noise(scenario.config.n_dft, cols);
        for (Eigen::Index i = 0; i < noise.rows(); ++i)
            for (Eigen::Index j = 0; j < noise.cols(); ++j) noise(i, j) = g.complex_gaussian();
        const Matrix projected = ctx.basis.q_matrix.adjoint() * noise;
        const double ratio = projected.squaredNorm() / static_cast<double>(m * cols);
        detail::add_check(report, "beam_noise_power_preserved", std::abs(ratio - 1.0) <= 0.03,
                          detail::ratio_line("per-beam power", ratio, 1.0));
    }

    { // theoretical bound ordering along the whole grid
        bool ordered = true;
        std::ostringstream os;
        for (double snr : scenario.snr_grid_db) {
            const NoiseSpec ns{snr_to_sigma2(snr, ctx.beam_correlation), scenario.config.n_pilots};
            const double b1 = residual_power_theoretical(ctx.beam_correlation, ns,
                                                         BoundModel::Bound1Uncorrelated, n_rx);
            const double b2 = residual_power_theoretical(ctx.beam_correlation, ns,
                                                         BoundModel::Bound2PhaseCorrelated, n_rx);
            const double b3 = residual_power_theoretical(ctx.beam_correlation, ns,
                                                         BoundModel::Bound3FullyCorrelated, n_rx);
            const double crlb =
                residual_power_theoretical(ctx.beam_correlation, ns, BoundModel::CrlbBaseline, n_rx);
            if (!(b3 <= b2 && b2 <= b1 && b1 <= crlb)) {
                ordered = false;
                os << " violated at " << snr << " dB";
            }
        }
        detail::add_check(report, "bound_ordering_theoretical", ordered,
                          ordered ? "bound3 <= bound2 <= bound1 <= crlb on all grid points"
                                  : os.str());
    }

    { // Monte Carlo agreement with the trace formula at the middle grid point
        const double snr = scenario.snr_grid_db[scenario.snr_grid_db.size() / 2];
        const CurvePoint point = run_point(scenario, snr, ctx,
                                           static_cast<int>(scenario.snr_grid_db.size() / 2));
        for (const auto& r : point.results) {
            const std::string name = "trace_formula_agreement/" + to_string(r.model);
            if (r.underpowered) {
                report.checks.push_back(
                    {name, CheckStatus::Skip,
                     "underpowered: n_trials=" + std::to_string(r.n_trials) + " < 10000"});
                continue;
            }
            const double tol = std::max(0.02 * r.theoretical, 5.0 * r.std_err);
            detail::add_check(report, name, std::abs(r.empirical - r.theoretical) <= tol,
                              detail::ratio_line("empirical", r.empirical, r.theoretical));
        }
    }

    { // deterministic replay of a miniature sweep
        Scenario mini = scenario;
        mini.n_trials = std::min(mini.n_trials, 64);
        const BoundCurve a = run_sweep(mini);
        const BoundCurve b = run_sweep(mini);
        const std::string ca = curve_to_csv(a);
        const std::string cb = curve_to_csv(b);
        detail::add_check(report, "deterministic_replay", ca == cb,
                          ca == cb ? "two runs byte-identical" : "replay mismatch");
    }

    return report;
}

// Recompute theoretical residuals from the scenario and compare against a
// previously emitted JSON curve file.
inline ValidationReport check_golden(const Scenario& scenario, const std::string& golden_path) {
    ValidationReport report;
    std::ifstream in(golden_path);
    if (!in) throw IoError("cannot open golden file '" + golden_path + "'");
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw ConfigError(golden_path + ": not valid JSON");

    const auto ctx = ScenarioContext::build(scenario);
    bool all_ok = true;
    std::ostringstream os;
    for (const auto& p : doc.at("points")) {
        const double snr = p.at("snr_db").get<double>();
        const NoiseSpec ns{snr_to_sigma2(snr, ctx.beam_correlation), scenario.config.n_pilots};
        for (const auto& r : p.at("results")) {
            const BoundModel model = model_from_string(r.at("model").get<std::string>());
            const double expected = residual_power_theoretical(ctx.beam_correlation, ns, model,
                                                               scenario.config.n_rx);
            const double stored = r.at("theoretical_residual").get<double>();
            if (std::abs(stored - expected) > 1e-12 * std::max(1.0, std::abs(expected))) {
                all_ok = false;
                os << " " << to_string(model) << "@" << snr << "dB stored=" << stored
                   << " recomputed=" << expected;
            }
        }
    }
    detail::add_check(report, "golden_theoretical_residuals", all_ok,
                      all_ok ? "all stored theoretical residuals match" : os.str());
    return report;
}

inline std::string format_report(const ValidationReport& report) {
    std::ostringstream os;
    for (const auto& c : report.checks) {
        const char* tag = c.status == CheckStatus::Pass   ? "PASS"
                          : c.status == CheckStatus::Fail ? "FAIL"
                                                          : "SKIP";
        os << "[" << tag << "] " << c.name << ": " << c.detail << "\n";
    }
    return os.str();
}

} // namespace mceb
