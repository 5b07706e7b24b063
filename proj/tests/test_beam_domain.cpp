#include <catch_amalgamated.hpp>

#include "mceb/beam_domain.hpp"
#include "mceb/rng.hpp"

using namespace mceb;

namespace {

ChannelConfig config_with_band(int n_dft, int n_rx, int n_used) {
    ChannelConfig cfg;
    cfg.n_dft = n_dft;
    cfg.n_rb = 1;
    cfg.n_rx = n_rx;
    cfg.n_used_override = n_used;
    return cfg;
}

Matrix random_complex(int rows, int cols, std::uint64_t seed) {
    rng::Stream stream(seed);
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = stream.complex_gaussian();
    return m;
}

} // namespace

TEST_CASE("full-band beam matrix is a Kronecker delta train") {
    ChannelConfig cfg = config_with_band(8, 1, 8);
    TapSet taps{{2, 5}, {1.0, 1.0}, CorrelationModel::Uncorrelated};
    const Matrix b = build_beam_matrix(taps, cfg);
    for (int n = 0; n < 8; ++n) {
        CHECK(std::abs(b(n, 0) - (n == 2 ? 1.0 : 0.0)) < 1e-14);
        CHECK(std::abs(b(n, 1) - (n == 5 ? 1.0 : 0.0)) < 1e-14);
    }
}

TEST_CASE("half-band column inner product matches direct summation") {
    ChannelConfig cfg = config_with_band(64, 1, 32);
    TapSet taps{{0, 1}, {1.0, 1.0}, CorrelationModel::Uncorrelated};
    const Matrix b = build_beam_matrix(taps, cfg);

    // independent oracle: brute-force sum of the shifted sinc products
    auto sinc = [](double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; };
    double expected = 0.0;
    for (int n = 0; n < 64; ++n)
        expected += sinc(M_PI * n / 2.0) * sinc(M_PI * (n - 1) / 2.0);

    const double actual = (b.col(0).adjoint() * b.col(1))(0, 0).real();
    CHECK(actual == Catch::Approx(expected).epsilon(1e-12));
}

TEST_CASE("beam matrix rejects out-of-range delays") {
    ChannelConfig cfg = config_with_band(8, 1, 8);
    CHECK_THROWS_AS(build_beam_matrix(TapSet{{9}, {1.0}}, cfg), ConfigError);
}

TEST_CASE("QR of an already-orthonormal matrix is trivial") {
    Matrix b = Matrix::Zero(6, 2);
    b(1, 0) = 1.0;
    b(4, 1) = 1.0;
    const BeamBasis basis = orthogonalize(b);
    CHECK((basis.q_matrix - b).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((basis.r_matrix - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("single-column QR normalizes the beam") {
    Matrix b = random_complex(16, 1, 21);
    const BeamBasis basis = orthogonalize(b);
    CHECK((basis.q_matrix - b / b.norm()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(basis.r_matrix(0, 0) - b.norm()) < 1e-12);
}

TEST_CASE("QR invariants on random full-rank matrices") {
    const Matrix b = random_complex(64, 6, 33);
    const BeamBasis basis = orthogonalize(b);
    CHECK((basis.q_matrix.adjoint() * basis.q_matrix - Matrix::Identity(6, 6))
              .cwiseAbs()
              .maxCoeff() < 1e-10);
    CHECK((basis.q_matrix * basis.r_matrix - b).norm() / b.norm() < 1e-10);
    for (int j = 0; j < 6; ++j) {
        CHECK(basis.r_matrix(j, j).imag() == Catch::Approx(0.0).margin(1e-12));
        CHECK(basis.r_matrix(j, j).real() > 0.0);
        for (int i = j + 1; i < 6; ++i) CHECK(std::abs(basis.r_matrix(i, j)) < 1e-14);
    }
}

TEST_CASE("rank-deficient beam matrix names the offending delays") {
    ChannelConfig cfg = config_with_band(256, 1, 4);
    TapSet taps{{100, 101}, {1.0, 1.0}, CorrelationModel::Uncorrelated};
    // duplicate columns stand in for taps below the resolvable spacing
    Matrix b(256, 2);
    for (int n = 0; n < 256; ++n) b(n, 0) = b(n, 1) = sinc_kernel(n, 100, cfg);
    CHECK_THROWS_WITH(orthogonalize(b, &taps),
                      Catch::Matchers::ContainsSubstring("100") &&
                          Catch::Matchers::ContainsSubstring("101"));
}

TEST_CASE("subspace transforms are mutually inverse") {
    const Matrix b = random_complex(32, 4, 55);
    const BeamBasis basis = orthogonalize(b);
    AmplitudeMatrix x0{random_complex(4, 8, 56), SubspaceTag::Original, std::nullopt};

    const AmplitudeMatrix x = to_orthogonal_subspace(x0, basis);
    CHECK(x.tag == SubspaceTag::Orthogonalized);
    // B X0 = Q X
    CHECK((b * x0.entries - basis.q_matrix * x.entries).norm() / (b * x0.entries).norm() < 1e-10);

    const AmplitudeMatrix back = from_orthogonal_subspace(x, basis);
    CHECK((back.entries - x0.entries).norm() / x0.entries.norm() < 1e-10);
}

TEST_CASE("identity R leaves amplitudes unchanged") {
    BeamBasis basis;
    basis.r_matrix = Matrix::Identity(3, 3);
    AmplitudeMatrix x0{random_complex(3, 5, 60), SubspaceTag::Original, std::nullopt};
    CHECK(to_orthogonal_subspace(x0, basis).entries == x0.entries);

    basis.r_matrix = 2.0 * Matrix::Identity(3, 3);
    AmplitudeMatrix ones{Matrix::Ones(3, 5), SubspaceTag::Orthogonalized, std::nullopt};
    CHECK((from_orthogonal_subspace(ones, basis).entries - 0.5 * Matrix::Ones(3, 5)).norm() <
          1e-14);
}

TEST_CASE("round trip survives badly conditioned R") {
    // upper triangular with condition number ~1e6
    Matrix r = Matrix::Zero(4, 4);
    const double diag[4] = {1.0, 1e-2, 1e-4, 1e-6};
    for (int i = 0; i < 4; ++i) {
        r(i, i) = diag[i];
        for (int j = i + 1; j < 4; ++j) r(i, j) = 0.1 * diag[i];
    }
    BeamBasis basis;
    basis.r_matrix = r;
    AmplitudeMatrix x0{random_complex(4, 6, 61), SubspaceTag::Original, std::nullopt};
    const auto back = from_orthogonal_subspace(to_orthogonal_subspace(x0, basis), basis);
    CHECK((back.entries - x0.entries).norm() / x0.entries.norm() < 1e-8);
}

TEST_CASE("correlation estimate from a single sample") {
    AmplitudeMatrix row{Matrix::Constant(1, 10, std::complex<double>(0.6, 0.8)),
                        SubspaceTag::Orthogonalized, std::nullopt};
    CHECK(std::abs(estimate_correlation(row).entries(0, 0) - 1.0) < 1e-12);

    AmplitudeMatrix zero{Matrix::Zero(2, 4), SubspaceTag::Orthogonalized, std::nullopt};
    CHECK(estimate_correlation(zero).entries.norm() == 0.0);
}

TEST_CASE("correlation estimate concentrates for i.i.d. entries") {
    AmplitudeMatrix x{random_complex(4, 4096, 77), SubspaceTag::Orthogonalized, std::nullopt};
    const CorrelationMatrix c = estimate_correlation(x);
    CHECK((c.entries - Matrix::Identity(4, 4)).norm() < 0.1);
    Eigen::SelfAdjointEigenSolver<Matrix> es(c.entries, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10 * es.eigenvalues().maxCoeff());
}

TEST_CASE("LS beam projection recovers in-subspace signals") {
    const Matrix b = random_complex(48, 3, 81);
    const BeamBasis basis = orthogonalize(b);
    const Matrix x = random_complex(3, 7, 82);

    ChannelSnapshot snap;
    snap.samples = basis.q_matrix * x;
    const AmplitudeMatrix est = ls_time_domain_estimate(snap, basis);
    CHECK((est.entries - x).norm() / x.norm() < 1e-10);

    // a signal orthogonal to span(Q) projects to zero
    Matrix g = random_complex(48, 2, 83);
    g -= basis.q_matrix * (basis.q_matrix.adjoint() * g);
    snap.samples = g;
    CHECK(ls_time_domain_estimate(snap, basis).entries.cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("white noise keeps its power through the beam projection") {
    const Matrix b = random_complex(128, 4, 91);
    const BeamBasis basis = orthogonalize(b);
    const double sigma2 = 0.7;

    double total = 0.0;
    const int cols = 12800; // 4 beams x 12800 columns >= 1e4 samples
    rng::Stream stream(rng::derive_seed(4242, 1));
    Matrix g(128, cols);
    for (int i = 0; i < 128; ++i)
        for (int j = 0; j < cols; ++j) g(i, j) = stream.complex_gaussian(sigma2);
    total = (basis.q_matrix.adjoint() * g).squaredNorm();
    const double per_beam = total / (4.0 * cols);
    CHECK(per_beam == Catch::Approx(sigma2).epsilon(0.03));
}

TEST_CASE("shape mismatches are rejected") {
    const Matrix b = random_complex(16, 2, 95);
    const BeamBasis basis = orthogonalize(b);
    AmplitudeMatrix wrong{random_complex(3, 4, 96), SubspaceTag::Original, std::nullopt};
    CHECK_THROWS_AS(to_orthogonal_subspace(wrong, basis), ShapeError);
    ChannelSnapshot snap{random_complex(8, 4, 97), ChannelConfig{}};
    CHECK_THROWS_AS(ls_time_domain_estimate(snap, basis), ShapeError);
}

TEST_CASE("synthesized snapshot equals the beam matrix product") {
    ChannelConfig cfg = config_with_band(96, 5, 48);
    TapSet taps{{4, 19, 40}, {1.0, 0.5, 0.25}, CorrelationModel::Uncorrelated};
    const Matrix b = build_beam_matrix(taps, cfg);
    AmplitudeMatrix x0{random_complex(3, 5, 99), SubspaceTag::Original, std::nullopt};
    const auto snap = synthesize_snapshot(x0, taps, cfg);
    const Matrix expected = b * x0.entries;
    CHECK((snap.samples - expected).norm() / expected.norm() < 1e-12);
}
