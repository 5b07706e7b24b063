#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "mceb/beam_domain.hpp"
#include "mceb/channel_model.hpp"
#include "mceb/errors.hpp"
#include "mceb/rng.hpp"

namespace mceb {

// Per-beam noise power before pilot averaging; n pilots scale power by 1/n.
struct NoiseSpec {
    double sigma2 = 1.0;
    int n_pilots = 2;

    double effective() const { return sigma2 / static_cast<double>(n_pilots); }

    void validate() const {
        if (!(sigma2 > 0.0)) throw ConfigError("noise.sigma2: must be positive");
        if (n_pilots < 1) throw ConfigError("noise.n_pilots: must be >= 1");
    }
};

enum class ProjectionTag { Raw, PhaseProjected, FullProjected };

struct NoiseMatrix {
    Matrix entries; // M x N_RX
    ProjectionTag tag = ProjectionTag::Raw;
    int degeneracies = 0; // phase projection: entries left raw because arg(X)=undefined
};

enum class BoundModel {
    Bound1Uncorrelated,
    Bound2PhaseCorrelated,
    Bound3FullyCorrelated,
    CrlbBaseline,
};

inline std::string to_string(BoundModel model) {
    switch (model) {
        case BoundModel::Bound1Uncorrelated: return "bound1_uncorrelated";
        case BoundModel::Bound2PhaseCorrelated: return "bound2_phase_correlated";
        case BoundModel::Bound3FullyCorrelated: return "bound3_fully_correlated";
        case BoundModel::CrlbBaseline: return "crlb_baseline";
    }
    throw ConfigError("unknown bound model");
}

// Noise power seen by the MMSE filter: the phase projection keeps only the
// real half, the full projection keeps one of N_RX dimensions.
inline double effective_sigma2(const NoiseSpec& noise, BoundModel model, int n_rx) {
    const double base = noise.effective();
    switch (model) {
        case BoundModel::Bound2PhaseCorrelated: return base / 2.0;
        case BoundModel::Bound3FullyCorrelated:
            if (n_rx < 1) throw ConfigError("n_rx required for the fully correlated model");
            return base / static_cast<double>(n_rx);
        default: return base;
    }
}

// i.i.d. CN(0, sigma2/n_pilots) noise, deterministic under seed.
inline NoiseMatrix draw_noise(int m, int n_rx, const NoiseSpec& noise, std::uint64_t rng_seed) {
    if (m < 1 || n_rx < 1) throw ShapeError("noise matrix dimensions must be >= 1");
    noise.validate();
    rng::Stream stream(rng::derive_seed(rng_seed, 0xE071u));
    NoiseMatrix e;
    e.entries = Matrix(m, n_rx);
    const double power = noise.effective();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n_rx; ++j) e.entries(i, j) = stream.complex_gaussian(power);
    return e;
}

// E_kj <- Re(E_kj * e^{-i phi}) * e^{i phi} with phi = arg(X_kj). Halves the
// noise power in expectation. Zero signal entries pass through unprojected
// and are counted.
inline NoiseMatrix project_noise_phase(const NoiseMatrix& e, const AmplitudeMatrix& x) {
    if (e.entries.rows() != x.entries.rows() || e.entries.cols() != x.entries.cols())
        throw ShapeError("noise and signal shapes differ");
    NoiseMatrix out;
    out.tag = ProjectionTag::PhaseProjected;
    out.entries = e.entries;
    for (Eigen::Index i = 0; i < e.entries.rows(); ++i)
        for (Eigen::Index j = 0; j < e.entries.cols(); ++j) {
            const auto s = x.entries(i, j);
            const double mag = std::abs(s);
            if (mag == 0.0) {
                ++out.degeneracies;
                continue;
            }
            const std::complex<double> phase = s / mag;
            out.entries(i, j) = std::real(e.entries(i, j) * std::conj(phase)) * phase;
        }
    return out;
}

// Row m of E <- (E_m . conj(x0_m)) x0_m for that beam's unit-norm signature.
// Shrinks expected row power by a factor of N_RX.
inline NoiseMatrix project_noise_full(const NoiseMatrix& e, const Matrix& signatures) {
    if (e.entries.rows() != signatures.rows() || e.entries.cols() != signatures.cols())
        throw ShapeError("noise and signature shapes differ");
    NoiseMatrix out;
    out.tag = ProjectionTag::FullProjected;
    out.entries = Matrix(e.entries.rows(), e.entries.cols());
    for (Eigen::Index i = 0; i < e.entries.rows(); ++i) {
        const double n2 = signatures.row(i).squaredNorm();
        if (n2 < 1e-24) throw NumericalError("degenerate (zero) beam signature in row " +
                                             std::to_string(i));
        if (std::abs(n2 - 1.0) > 1e-10)
            throw NumericalError("beam signature row " + std::to_string(i) + " is not unit-norm");
        const std::complex<double> coef = (e.entries.row(i) * signatures.row(i).adjoint())(0, 0);
        out.entries.row(i) = coef / n2 * signatures.row(i);
    }
    return out;
}

namespace detail {

// W = C (C + s2 I)^-1 via eigendecomposition; valid for singular C.
inline Matrix mmse_filter(const CorrelationMatrix& c, double s2_eff) {
    if (!(s2_eff > 0.0)) throw ConfigError("effective noise power must be positive");
    Eigen::SelfAdjointEigenSolver<Matrix> es(c.entries);
    if (es.info() != Eigen::Success) throw NumericalError("correlation eigendecomposition failed");
    const auto& lambda = es.eigenvalues();
    const double lmax = lambda.size() ? lambda.cwiseAbs().maxCoeff() : 0.0;
    Eigen::VectorXd gain(lambda.size());
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        const double l = lambda[i] > 1e-12 * lmax ? lambda[i] : 0.0;
        gain[i] = l / (l + s2_eff);
    }
    return es.eigenvectors() * gain.asDiagonal() * es.eigenvectors().adjoint();
}

} // namespace detail

// X_hat = (I + s2 C^-1)^-1 Y, evaluated as C (C + s2 I)^-1 Y.
inline AmplitudeMatrix mmse_estimate(const AmplitudeMatrix& y, const CorrelationMatrix& c,
                                     const NoiseSpec& noise,
                                     BoundModel model = BoundModel::Bound1Uncorrelated) {
    if (y.entries.rows() != c.entries.rows())
        throw ShapeError("observation rows do not match correlation dimension");
    const double s2 = effective_sigma2(noise, model, y.antennas());
    AmplitudeMatrix xhat;
    xhat.entries = detail::mmse_filter(c, s2) * y.entries;
    xhat.tag = SubspaceTag::Orthogonalized;
    xhat.signatures = y.signatures;
    return xhat;
}

// tr((s^-2 I + C^-1)^-1) = sum_i s2*lambda_i / (s2 + lambda_i), valid for
// lambda_i = 0. CrlbBaseline injects unshrunk noise: M * s2_eff.
inline double residual_power_theoretical(const CorrelationMatrix& c, const NoiseSpec& noise,
                                         BoundModel model, int n_rx) {
    const double s2 = effective_sigma2(noise, model, n_rx);
    if (model == BoundModel::CrlbBaseline) return static_cast<double>(c.dim()) * s2;
    Eigen::SelfAdjointEigenSolver<Matrix> es(c.entries);
    if (es.info() != Eigen::Success) throw NumericalError("correlation eigendecomposition failed");
    const auto& lambda = es.eigenvalues();
    const double lmax = lambda.cwiseAbs().maxCoeff();
    double total = 0.0;
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        const double l = lambda[i] > 1e-12 * lmax ? lambda[i] : 0.0;
        total += s2 * l / (s2 + l);
    }
    return total;
}

// Artificial channel estimate in the original subspace:
//   X0_hat = R^-1 W (R X0 + E'),  E' projected per model.
// CrlbBaseline: X0_hat = X0 + R^-1 E' (no shrinkage).
inline AmplitudeMatrix make_artificial_ce(const AmplitudeMatrix& x0, const BeamBasis& basis,
                                          const CorrelationMatrix& c, const NoiseSpec& noise,
                                          BoundModel model, std::uint64_t rng_seed,
                                          int* degeneracies = nullptr) {
    AmplitudeMatrix x = to_orthogonal_subspace(x0, basis);
    NoiseMatrix e = draw_noise(x.beams(), x.antennas(), noise, rng_seed);
    if (model == BoundModel::Bound2PhaseCorrelated) {
        e = project_noise_phase(e, x);
        if (degeneracies) *degeneracies += e.degeneracies;
    } else if (model == BoundModel::Bound3FullyCorrelated) {
        Matrix sig;
        if (x0.signatures) {
            sig = *x0.signatures;
        } else {
            // Derive from rows of X0; valid because fully correlated rows are
            // scalar multiples of their signature.
            sig = x0.entries;
            for (Eigen::Index i = 0; i < sig.rows(); ++i) {
                const double n = sig.row(i).norm();
                if (n < 1e-24)
                    throw NumericalError("cannot derive signature from zero amplitude row " +
                                         std::to_string(i));
                sig.row(i) /= n;
            }
        }
        e = project_noise_full(e, sig);
    }

    if (model == BoundModel::CrlbBaseline) {
        AmplitudeMatrix xhat0;
        xhat0.tag = SubspaceTag::Original;
        xhat0.signatures = x0.signatures;
        xhat0.entries =
            x0.entries + basis.r_matrix.triangularView<Eigen::Upper>().solve(e.entries);
        return xhat0;
    }

    AmplitudeMatrix y;
    y.tag = SubspaceTag::Orthogonalized;
    y.signatures = x.signatures;
    y.entries = x.entries + e.entries;
    const AmplitudeMatrix xhat = mmse_estimate(y, c, noise, model);
    return from_orthogonal_subspace(xhat, basis);
}

} // namespace mceb
