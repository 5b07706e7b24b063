#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <thread>
#include <vector>

#include "mceb/beam_domain.hpp"
#include "mceb/channel_model.hpp"
#include "mceb/estimator.hpp"

namespace mceb {

// A full sweep description: channel geometry, tap layout, signal statistics,
// SNR grid and Monte Carlo budget.
struct Scenario {
    ChannelConfig config;
    TapSet tap_set;
    Matrix beam_covariance; // M x M, diagonal equal to tap powers
    std::vector<double> snr_grid_db;
    int n_trials = 10000;
    std::uint64_t master_seed = 1;
    std::vector<BoundModel> models = {
        BoundModel::Bound1Uncorrelated, BoundModel::Bound2PhaseCorrelated,
        BoundModel::Bound3FullyCorrelated, BoundModel::CrlbBaseline};
    int n_threads = 0; // 0 = hardware concurrency

    void validate() const {
        config.validate();
        tap_set.validate(config);
        const int m = tap_set.size();
        if (beam_covariance.rows() != m || beam_covariance.cols() != m)
            throw ConfigError("beam_covariance: dimension must equal the tap count");
        const double scale = std::max(beam_covariance.cwiseAbs().maxCoeff(), 1e-300);
        if ((beam_covariance - beam_covariance.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale)
            throw ConfigError("beam_covariance: must be Hermitian");
        Eigen::SelfAdjointEigenSolver<Matrix> es(beam_covariance, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -1e-10 * std::abs(es.eigenvalues().maxCoeff()))
            throw ConfigError("beam_covariance: must be positive semidefinite");
        for (int i = 0; i < m; ++i)
            if (std::abs(beam_covariance(i, i).real() - tap_set.powers[i]) >
                1e-9 * std::max(1.0, tap_set.powers[i]))
                throw ConfigError("beam_covariance: diagonal must equal tap_set.powers");
        if (snr_grid_db.empty()) throw ConfigError("snr_grid_db: must be non-empty");
        for (std::size_t i = 1; i < snr_grid_db.size(); ++i)
            if (snr_grid_db[i] <= snr_grid_db[i - 1])
                throw ConfigError("snr_grid_db: must be strictly increasing");
        if (n_trials < 1) throw ConfigError("n_trials: must be >= 1");
        if (models.empty()) throw ConfigError("models: must be non-empty");
    }

    static Matrix diagonal_covariance(const TapSet& taps) {
        Matrix c = Matrix::Zero(taps.size(), taps.size());
        for (int i = 0; i < taps.size(); ++i) c(i, i) = taps.powers[i];
        return c;
    }
};

struct ModelResult {
    BoundModel model;
    double theoretical = 0.0;
    double empirical = 0.0;
    double std_err = 0.0;
    long degeneracies = 0;
    int n_trials = 0;
    bool underpowered = false; // too few trials for the agreement check
    bool agreement_ok = true;  // |empirical - theoretical| <= 5 std errors
};

struct CurvePoint {
    double snr_db = 0.0;
    double sigma2 = 0.0; // raw per-beam noise power before pilot scaling
    std::vector<ModelResult> results;
};

struct BoundCurve {
    std::vector<CurvePoint> points;
};

// sigma^2 = tr(C)/M * 10^(-snr/10): per-beam average signal power over noise.
inline double snr_to_sigma2(double snr_db, const CorrelationMatrix& c) {
    const double avg_power = c.trace() / static_cast<double>(c.dim());
    if (!(avg_power > 0.0)) throw ConfigError("degenerate scenario: tr(C) must be positive");
    return avg_power * std::pow(10.0, -snr_db / 10.0);
}

namespace detail {

// Monte Carlo over one (model, SNR) cell. Residuals are stored per trial
// index and reduced in that order, so serial and threaded runs agree bit
// for bit.
struct TrialAccumulator {
    std::vector<double> residuals;
    std::vector<int> degeneracies;

    explicit TrialAccumulator(int n) : residuals(n, 0.0), degeneracies(n, 0) {}
};

template <typename TrialFn>
inline void run_trials(int n_trials, int n_threads, TrialFn&& fn) {
    if (n_threads <= 0) n_threads = static_cast<int>(std::thread::hardware_concurrency());
    n_threads = std::clamp(n_threads, 1, n_trials);
    if (n_threads == 1) {
        for (int t = 0; t < n_trials; ++t) fn(t);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int w = 0; w < n_threads; ++w)
        pool.emplace_back([&, w] {
            for (int t = w; t < n_trials; t += n_threads) fn(t);
        });
    for (auto& th : pool) th.join();
}

inline ModelResult reduce(BoundModel model, double theoretical, const TrialAccumulator& acc) {
    ModelResult r;
    r.model = model;
    r.theoretical = theoretical;
    r.n_trials = static_cast<int>(acc.residuals.size());
    double sum = 0.0;
    long deg = 0;
    for (std::size_t i = 0; i < acc.residuals.size(); ++i) {
        sum += acc.residuals[i];
        deg += acc.degeneracies[i];
    }
    r.empirical = sum / static_cast<double>(r.n_trials);
    r.degeneracies = deg;
    double ss = 0.0;
    for (double v : acc.residuals) ss += (v - r.empirical) * (v - r.empirical);
    const double var = r.n_trials > 1 ? ss / static_cast<double>(r.n_trials - 1) : 0.0;
    r.std_err = std::sqrt(var / static_cast<double>(r.n_trials));
    r.underpowered = r.n_trials < 10000;
    r.agreement_ok = r.underpowered ||
                     std::abs(r.empirical - r.theoretical) <=
                         std::max(5.0 * r.std_err, 1e-12 * std::max(1.0, r.theoretical));
    return r;
}

} // namespace detail

// Precomputed per-scenario state shared by all sweep points.
struct ScenarioContext {
    BeamBasis basis;
    CorrelationMatrix beam_correlation; // C = R C0 R^H
    Matrix signatures;                  // fully correlated antenna signatures
    TapSet gaussian_taps;               // generation per model
    TapSet correlated_taps;
    Matrix correlated_covariance; // N_RX * C0, keeps per-entry power at C0_ii

    static ScenarioContext build(const Scenario& sc) {
        ScenarioContext ctx;
        ctx.basis = orthogonalize(build_beam_matrix(sc.tap_set, sc.config), &sc.tap_set);
        Matrix c = ctx.basis.r_matrix * sc.beam_covariance * ctx.basis.r_matrix.adjoint();
        c = (c + c.adjoint().eval()) / 2.0;
        ctx.beam_correlation = CorrelationMatrix{std::move(c)};
        ctx.signatures = draw_signatures(sc.tap_set.size(), sc.config.n_rx, sc.master_seed,
                                         sc.tap_set.shared_signature);
        ctx.gaussian_taps = sc.tap_set;
        ctx.gaussian_taps.correlation_model = CorrelationModel::Uncorrelated;
        ctx.correlated_taps = sc.tap_set;
        ctx.correlated_taps.correlation_model = CorrelationModel::FullyCorrelated;
        ctx.correlated_covariance = static_cast<double>(sc.config.n_rx) * sc.beam_covariance;
        return ctx;
    }
};

inline CurvePoint run_point(const Scenario& scenario, double snr_db, const ScenarioContext& ctx,
                            int point_index = 0) {
    const int m = scenario.tap_set.size();
    const int n_rx = scenario.config.n_rx;
    const double inv_nrx = 1.0 / static_cast<double>(n_rx);

    CurvePoint point;
    point.snr_db = snr_db;
    point.sigma2 = snr_to_sigma2(snr_db, ctx.beam_correlation);
    const NoiseSpec noise{point.sigma2, scenario.config.n_pilots};

    for (std::size_t mi = 0; mi < scenario.models.size(); ++mi) {
        const BoundModel model = scenario.models[mi];
        const double theo =
            residual_power_theoretical(ctx.beam_correlation, noise, model, n_rx);
        const Matrix filter =
            model == BoundModel::CrlbBaseline
                ? Matrix()
                : detail::mmse_filter(ctx.beam_correlation, effective_sigma2(noise, model, n_rx));

        detail::TrialAccumulator acc(scenario.n_trials);
        detail::run_trials(scenario.n_trials, scenario.n_threads, [&](int t) {
            const std::uint64_t seed = rng::derive_seed(
                scenario.master_seed, static_cast<std::uint64_t>(model) + 1,
                static_cast<std::uint64_t>(point_index) + 1, static_cast<std::uint64_t>(t) + 1);

            AmplitudeMatrix x0 =
                model == BoundModel::Bound3FullyCorrelated
                    ? generate_amplitudes(ctx.correlated_taps, scenario.config,
                                          ctx.correlated_covariance, seed, ctx.signatures)
                    : generate_amplitudes(ctx.gaussian_taps, scenario.config,
                                          scenario.beam_covariance, seed);
            const Matrix x = ctx.basis.r_matrix * x0.entries;

            NoiseMatrix e = draw_noise(m, n_rx, noise, seed);
            if (model == BoundModel::Bound2PhaseCorrelated) {
                AmplitudeMatrix xa{x, SubspaceTag::Orthogonalized, std::nullopt};
                e = project_noise_phase(e, xa);
                acc.degeneracies[t] = e.degeneracies;
            } else if (model == BoundModel::Bound3FullyCorrelated) {
                e = project_noise_full(e, ctx.signatures);
            }

            if (model == BoundModel::CrlbBaseline) {
                acc.residuals[t] = e.entries.squaredNorm() * inv_nrx;
            } else {
                const Matrix err = x - filter * (x + e.entries);
                acc.residuals[t] = err.squaredNorm() * inv_nrx;
            }
        });
        point.results.push_back(detail::reduce(model, theo, acc));
    }
    return point;
}

inline CurvePoint run_point(const Scenario& scenario, double snr_db) {
    scenario.validate();
    const auto ctx = ScenarioContext::build(scenario);
    int index = 0;
    for (std::size_t i = 0; i < scenario.snr_grid_db.size(); ++i)
        if (scenario.snr_grid_db[i] == snr_db) index = static_cast<int>(i);
    return run_point(scenario, snr_db, ctx, index);
}

inline BoundCurve run_sweep(const Scenario& scenario) {
    scenario.validate();
    const auto ctx = ScenarioContext::build(scenario);
    BoundCurve curve;
    for (std::size_t i = 0; i < scenario.snr_grid_db.size(); ++i)
        curve.points.push_back(
            run_point(scenario, scenario.snr_grid_db[i], ctx, static_cast<int>(i)));
    return curve;
}

// Bounds computed from an ingested snapshot: the LS beam projection of the
// snapshot is the ground truth X and C is estimated from that single sample.
inline BoundCurve run_from_snapshot(const ChannelSnapshot& snapshot, const Scenario& scenario) {
    if (snapshot.config.n_dft != scenario.config.n_dft ||
        snapshot.config.n_rx != scenario.config.n_rx ||
        snapshot.config.n_rb != scenario.config.n_rb)
        throw ShapeError("snapshot geometry (n_dft/n_rx/n_rb) does not match scenario config");
    scenario.config.validate();
    scenario.tap_set.validate(scenario.config);

    const int n_rx = scenario.config.n_rx;
    const double inv_nrx = 1.0 / static_cast<double>(n_rx);
    const BeamBasis basis =
        orthogonalize(build_beam_matrix(scenario.tap_set, scenario.config), &scenario.tap_set);
    const AmplitudeMatrix x_truth = ls_time_domain_estimate(snapshot, basis);
    const CorrelationMatrix c = estimate_correlation(x_truth);
    const int m = c.dim();

    Matrix signatures = x_truth.entries;
    for (Eigen::Index i = 0; i < signatures.rows(); ++i) {
        const double norm = signatures.row(i).norm();
        if (norm > 0.0) signatures.row(i) /= norm;
    }

    BoundCurve curve;
    for (std::size_t pi = 0; pi < scenario.snr_grid_db.size(); ++pi) {
        CurvePoint point;
        point.snr_db = scenario.snr_grid_db[pi];
        point.sigma2 = snr_to_sigma2(point.snr_db, c);
        const NoiseSpec noise{point.sigma2, scenario.config.n_pilots};

        for (const BoundModel model : scenario.models) {
            const double theo = residual_power_theoretical(c, noise, model, n_rx);
            const Matrix filter =
                model == BoundModel::CrlbBaseline
                    ? Matrix()
                    : detail::mmse_filter(c, effective_sigma2(noise, model, n_rx));

            detail::TrialAccumulator acc(scenario.n_trials);
            detail::run_trials(scenario.n_trials, scenario.n_threads, [&](int t) {
                const std::uint64_t seed = rng::derive_seed(
                    scenario.master_seed, static_cast<std::uint64_t>(model) + 1,
                    static_cast<std::uint64_t>(pi) + 1, static_cast<std::uint64_t>(t) + 1);
                NoiseMatrix e = draw_noise(m, n_rx, noise, seed);
                if (model == BoundModel::Bound2PhaseCorrelated) {
                    e = project_noise_phase(e, x_truth);
                    acc.degeneracies[t] = e.degeneracies;
                } else if (model == BoundModel::Bound3FullyCorrelated) {
                    e = project_noise_full(e, signatures);
                }
                if (model == BoundModel::CrlbBaseline) {
                    acc.residuals[t] = e.entries.squaredNorm() * inv_nrx;
                } else {
                    const Matrix err = x_truth.entries - filter * (x_truth.entries + e.entries);
                    acc.residuals[t] = err.squaredNorm() * inv_nrx;
                }
            });
            point.results.push_back(detail::reduce(model, theo, acc));
        }
        curve.points.push_back(std::move(point));
    }
    return curve;
}

} // namespace mceb
