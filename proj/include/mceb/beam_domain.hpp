#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <string>

#include "mceb/channel_model.hpp"
#include "mceb/errors.hpp"

namespace mceb {

// Thin QR factors of the sinc beam matrix. Q spans the orthogonal beam
// subspace; R (upper triangular, positive real diagonal) maps original
// amplitudes into it.
struct BeamBasis {
    Matrix b_matrix; // N_DFT x M
    Matrix q_matrix; // N_DFT x M, orthonormal columns
    Matrix r_matrix; // M x M upper triangular
};

// Hermitian PSD beam correlation matrix C.
struct CorrelationMatrix {
    Matrix entries;

    int dim() const { return static_cast<int>(entries.rows()); }
    double trace() const { return entries.trace().real(); }
};

// Column m holds the sinc kernel shifted to tap delay n_m.
inline Matrix build_beam_matrix(const TapSet& tap_set, const ChannelConfig& config) {
    tap_set.validate(config);
    Matrix b(config.n_dft, tap_set.size());
    for (int m = 0; m < tap_set.size(); ++m)
        for (int n = 0; n < config.n_dft; ++n)
            b(n, m) = sinc_kernel(n, tap_set.delays[m], config);
    return b;
}

// Thin QR with R's diagonal made real positive for uniqueness. Rejects
// rank-deficient B (taps closer than the resolvable spacing).
inline BeamBasis orthogonalize(const Matrix& b_matrix,
                               const TapSet* tap_set_for_diagnostics = nullptr) {
    const auto m = b_matrix.cols();
    Eigen::JacobiSVD<Matrix> svd(b_matrix);
    const auto& sv = svd.singularValues();
    if (sv[m - 1] <= 1e-8 * sv[0]) {
        std::string msg = "beam matrix is rank deficient (singular value ratio " +
                          std::to_string(sv[m - 1] / sv[0]) + ")";
        if (tap_set_for_diagnostics && tap_set_for_diagnostics->size() > 1) {
            const auto& d = tap_set_for_diagnostics->delays;
            int best = 1;
            for (std::size_t i = 2; i < d.size(); ++i)
                if (d[i] - d[i - 1] < d[best] - d[best - 1]) best = static_cast<int>(i);
            msg += "; nearest delays " + std::to_string(d[best - 1]) + " and " +
                   std::to_string(d[best]);
        }
        throw NumericalError(msg);
    }

    Eigen::HouseholderQR<Matrix> qr(b_matrix);
    BeamBasis basis;
    basis.b_matrix = b_matrix;
    basis.q_matrix = qr.householderQ() * Matrix::Identity(b_matrix.rows(), m);
    basis.r_matrix = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < m; ++j) {
        const auto d = basis.r_matrix(j, j);
        const double mag = std::abs(d);
        if (mag == 0.0) throw NumericalError("zero diagonal in R");
        const std::complex<double> phase = d / mag;
        basis.q_matrix.col(j) *= phase;
        basis.r_matrix.row(j) *= std::conj(phase);
    }
    return basis;
}

// X = R * X0
inline AmplitudeMatrix to_orthogonal_subspace(const AmplitudeMatrix& x0, const BeamBasis& basis) {
    if (x0.entries.rows() != basis.r_matrix.cols())
        throw ShapeError("amplitude matrix does not match basis");
    AmplitudeMatrix x;
    x.entries = basis.r_matrix * x0.entries;
    x.tag = SubspaceTag::Orthogonalized;
    x.signatures = x0.signatures;
    return x;
}

// X0 = R^-1 * X via back-substitution.
inline AmplitudeMatrix from_orthogonal_subspace(const AmplitudeMatrix& x, const BeamBasis& basis) {
    if (x.entries.rows() != basis.r_matrix.rows())
        throw ShapeError("amplitude matrix does not match basis");
    AmplitudeMatrix x0;
    x0.entries = basis.r_matrix.triangularView<Eigen::Upper>().solve(x.entries);
    x0.tag = SubspaceTag::Original;
    x0.signatures = x.signatures;
    return x0;
}

// Single-sample estimate C = X X^H / N_RX (biased normalizer, by contract).
inline CorrelationMatrix estimate_correlation(const AmplitudeMatrix& x) {
    if (x.antennas() < 1) throw ShapeError("need at least one antenna column");
    Matrix c = x.entries * x.entries.adjoint() / static_cast<double>(x.antennas());
    c = (c + c.adjoint().eval()) / 2.0; // exact symmetrization
    return CorrelationMatrix{std::move(c)};
}

// LS projection of each antenna's time-domain response onto the beam subspace.
inline AmplitudeMatrix ls_time_domain_estimate(const ChannelSnapshot& snapshot,
                                               const BeamBasis& basis) {
    if (snapshot.samples.rows() != basis.q_matrix.rows())
        throw ShapeError("snapshot length does not match basis");
    AmplitudeMatrix x;
    x.entries = basis.q_matrix.adjoint() * snapshot.samples;
    x.tag = SubspaceTag::Orthogonalized;
    return x;
}

} // namespace mceb
