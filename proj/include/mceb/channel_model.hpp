#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mceb/errors.hpp"
#include "mceb/rng.hpp"

namespace mceb {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr int kRbSize = 12;

// DFT/bandwidth geometry and array dimensions.
struct ChannelConfig {
    int n_dft = 2048;
    int n_rb = 1;
    int n_rx = 64;
    int n_pilots = 2;
    double sample_period = 1.0 / 30.72e6;
    // Direct bandwidth override for layouts that are not an RB multiple
    // (diagnostics only; 0 means derived from n_rb).
    int n_used_override = 0;

    int n_used() const { return n_used_override > 0 ? n_used_override : n_rb * kRbSize; }

    void validate() const {
        if (n_dft < 1) throw ConfigError("config.n_dft: must be positive");
        if (n_rb < 1) throw ConfigError("config.n_rb: must be positive");
        if (n_used() > n_dft)
            throw ConfigError("config.n_rb: n_used = n_rb*12 = " +
                              std::to_string(n_used()) +
                              " exceeds n_dft (band-limited case requires n_used <= n_dft)");
        if (n_rx < 1) throw ConfigError("config.n_rx: must be >= 1");
        if (n_pilots < 1) throw ConfigError("config.n_pilots: must be >= 1");
        if (!(sample_period > 0.0))
            throw ConfigError("config.sample_period: must be positive");
    }
};

enum class CorrelationModel { Uncorrelated, PhaseCorrelated, FullyCorrelated };

// Per-tap discrete delays and expected powers (power-delay profile).
struct TapSet {
    std::vector<int> delays;
    std::vector<double> powers;
    CorrelationModel correlation_model = CorrelationModel::Uncorrelated;
    bool shared_signature = false;

    int size() const { return static_cast<int>(delays.size()); }

    void validate(const ChannelConfig& config) const {
        if (delays.empty()) throw ConfigError("tap_set.delays: must be non-empty");
        if (delays.size() != powers.size())
            throw ConfigError("tap_set.powers: size must match tap_set.delays");
        if (static_cast<int>(delays.size()) > config.n_dft)
            throw ConfigError("tap_set.delays: more taps than n_dft");
        for (std::size_t i = 0; i < delays.size(); ++i) {
            if (delays[i] < 0 || delays[i] >= config.n_dft)
                throw ConfigError("tap_set.delays: delay " + std::to_string(delays[i]) +
                                  " outside [0, n_dft)");
            if (i > 0 && delays[i] <= delays[i - 1])
                throw ConfigError("tap_set.delays: must be strictly increasing");
            if (!(powers[i] > 0.0))
                throw ConfigError("tap_set.powers: must be positive");
        }
    }
};

enum class SubspaceTag { Original, Orthogonalized };

// Complex M x N_RX beam-amplitude matrix. For fully correlated generation
// the per-beam unit-norm antenna signatures are kept alongside.
struct AmplitudeMatrix {
    Matrix entries;
    SubspaceTag tag = SubspaceTag::Original;
    std::optional<Matrix> signatures; // M x N_RX, unit-norm rows

    int beams() const { return static_cast<int>(entries.rows()); }
    int antennas() const { return static_cast<int>(entries.cols()); }
};

// One time-domain channel realization across all antennas.
struct ChannelSnapshot {
    Matrix samples; // N_DFT x N_RX
    ChannelConfig config;
};

// sinc(pi * (N_used/N_DFT) * (n - n_m)) with sinc(0) = 1.
inline double sinc_kernel(int n, int n_m, const ChannelConfig& config) {
    const double x = M_PI * static_cast<double>(config.n_used()) /
                     static_cast<double>(config.n_dft) * static_cast<double>(n - n_m);
    if (x == 0.0) return 1.0;
    return std::sin(x) / x;
}

namespace detail {

// Hermitian square root with eigenvalue truncation below 1e-12 * lambda_max.
// Degenerate (singular) PSD covariances are accepted.
inline Matrix psd_sqrt(const Matrix& cov) {
    const auto m = cov.rows();
    if (cov.cols() != m) throw ShapeError("covariance must be square");
    const double scale = cov.cwiseAbs().maxCoeff();
    if ((cov - cov.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * std::max(scale, 1.0))
        throw NumericalError("covariance is not Hermitian");
    Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
    if (es.info() != Eigen::Success)
        throw NumericalError("covariance eigendecomposition failed");
    const auto& lambda = es.eigenvalues();
    const double lmax = lambda.cwiseAbs().maxCoeff();
    Eigen::VectorXd sq(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        if (lambda[i] < -1e-10 * std::max(lmax, 1.0))
            throw NumericalError("covariance is not positive semidefinite (eigenvalue " +
                                 std::to_string(lambda[i]) + ")");
        sq[i] = lambda[i] > 1e-12 * lmax ? std::sqrt(lambda[i]) : 0.0;
    }
    return es.eigenvectors() * sq.asDiagonal() * es.eigenvectors().adjoint();
}

inline Matrix random_matrix(int rows, int cols, rng::Stream& stream) {
    Matrix z(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) z(i, j) = stream.complex_gaussian();
    return z;
}

} // namespace detail

// Per-beam unit-norm antenna signatures, drawn once per scenario.
// With shared = true every beam reuses the first signature.
inline Matrix draw_signatures(int m, int n_rx, std::uint64_t rng_seed, bool shared = false) {
    rng::Stream stream(rng::derive_seed(rng_seed, 0x5169u)); // signature substream
    Matrix sig(m, n_rx);
    for (int i = 0; i < m; ++i) {
        if (shared && i > 0) {
            sig.row(i) = sig.row(0);
            continue;
        }
        for (int j = 0; j < n_rx; ++j) sig(i, j) = stream.complex_gaussian();
        sig.row(i) /= sig.row(i).norm();
    }
    return sig;
}

// Draws the original-subspace amplitude matrix X0. Columns are i.i.d.
// CN(0, beam_covariance) for the uncorrelated and phase-correlated models
// (phase correlation changes only what the estimator is allowed to know).
// For the fully correlated model each row i is eta_i times a fixed
// unit-norm signature, with eta ~ CN(0, beam_covariance).
inline AmplitudeMatrix generate_amplitudes(const TapSet& tap_set, const ChannelConfig& config,
                                           const Matrix& beam_covariance, std::uint64_t rng_seed,
                                           const std::optional<Matrix>& signatures = std::nullopt) {
    const int m = tap_set.size();
    if (beam_covariance.rows() != m || beam_covariance.cols() != m)
        throw ShapeError("beam_covariance dimension does not match tap count");
    const Matrix root = detail::psd_sqrt(beam_covariance);
    rng::Stream stream(rng::derive_seed(rng_seed, 0xA3B1u));

    AmplitudeMatrix out;
    out.tag = SubspaceTag::Original;
    if (tap_set.correlation_model == CorrelationModel::FullyCorrelated) {
        Matrix sig = signatures ? *signatures
                                : draw_signatures(m, config.n_rx, rng_seed, tap_set.shared_signature);
        if (sig.rows() != m || sig.cols() != config.n_rx)
            throw ShapeError("signature matrix dimension mismatch");
        const Vector eta = root * detail::random_matrix(m, 1, stream);
        out.entries = eta.asDiagonal() * sig;
        out.signatures = std::move(sig);
    } else {
        out.entries = root * detail::random_matrix(m, config.n_rx, stream);
    }
    return out;
}

// samples(n, k) = sum_m x0(m, k) * sinc_kernel(n, n_m); equals B * X0.
inline ChannelSnapshot synthesize_snapshot(const AmplitudeMatrix& x0, const TapSet& tap_set,
                                           const ChannelConfig& config) {
    if (x0.beams() != tap_set.size() || x0.antennas() != config.n_rx)
        throw ShapeError("amplitude matrix does not match tap set / config");
    ChannelSnapshot snap;
    snap.config = config;
    snap.samples = Matrix::Zero(config.n_dft, config.n_rx);
    for (int m = 0; m < tap_set.size(); ++m) {
        Eigen::VectorXd col(config.n_dft);
        for (int n = 0; n < config.n_dft; ++n)
            col[n] = sinc_kernel(n, tap_set.delays[m], config);
        snap.samples.noalias() += col.cast<std::complex<double>>() * x0.entries.row(m);
    }
    return snap;
}

} // namespace mceb
