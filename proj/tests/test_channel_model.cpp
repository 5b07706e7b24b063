#include <catch_amalgamated.hpp>
#include <filesystem>
#include <fstream>

#include "mceb/channel_model.hpp"
#include "mceb/snapshot_io.hpp"

using namespace mceb;
namespace fs = std::filesystem;

namespace {

ChannelConfig small_config(int n_dft, int n_rx, int n_used = 0) {
    ChannelConfig cfg;
    cfg.n_dft = n_dft;
    cfg.n_rb = 1;
    cfg.n_rx = n_rx;
    cfg.n_used_override = n_used > 0 ? n_used : n_dft;
    return cfg;
}

Matrix diag_cov(const std::vector<double>& powers) {
    Matrix c = Matrix::Zero(powers.size(), powers.size());
    for (std::size_t i = 0; i < powers.size(); ++i) c(i, i) = powers[i];
    return c;
}

fs::path temp_file(const std::string& name) {
    return fs::temp_directory_path() / ("mceb_test_" + name);
}

} // namespace

TEST_CASE("sinc kernel closed-form values") {
    ChannelConfig cfg = small_config(64, 1);
    CHECK(sinc_kernel(17, 17, cfg) == 1.0);
    // full band: integer offsets hit the zeros of sinc
    CHECK(std::abs(sinc_kernel(10, 7, cfg)) < 1e-15);
    cfg.n_used_override = 32; // half band
    CHECK(sinc_kernel(5, 4, cfg) == Catch::Approx(2.0 / M_PI).epsilon(1e-12));
}

TEST_CASE("generated amplitude power matches the tap power") {
    ChannelConfig cfg = small_config(16, 10000, 12);
    TapSet taps{{3}, {1.0}, CorrelationModel::Uncorrelated};
    const auto x0 = generate_amplitudes(taps, cfg, Matrix::Identity(1, 1), 42);
    const double mean_power = x0.entries.squaredNorm() / cfg.n_rx;
    CHECK(mean_power == Catch::Approx(1.0).margin(0.05));
}

TEST_CASE("per-beam power converges to the power-delay profile") {
    ChannelConfig cfg = small_config(64, 1000, 48);
    TapSet taps{{0, 10, 25}, {2.0, 0.5, 0.125}, CorrelationModel::Uncorrelated};
    Matrix power_sum = Matrix::Zero(3, 1);
    const int n_draws = 120; // 1000 antennas x 120 draws >= 1e5 samples per beam
    for (int d = 0; d < n_draws; ++d) {
        const auto x0 = generate_amplitudes(taps, cfg, diag_cov(taps.powers), 100 + d);
        for (int i = 0; i < 3; ++i) power_sum(i, 0) += x0.entries.row(i).squaredNorm();
    }
    for (int i = 0; i < 3; ++i) {
        const double mean = power_sum(i, 0).real() / (cfg.n_rx * n_draws);
        CHECK(mean == Catch::Approx(taps.powers[i]).epsilon(0.02));
    }
}

TEST_CASE("fully correlated rows are scalar multiples of their signatures") {
    ChannelConfig cfg = small_config(64, 32, 48);
    TapSet taps{{0, 11}, {1.0, 0.25}, CorrelationModel::FullyCorrelated};
    const auto x0 = generate_amplitudes(taps, cfg, diag_cov(taps.powers), 7);
    REQUIRE(x0.signatures.has_value());
    for (int i = 0; i < 2; ++i) {
        const auto row = x0.entries.row(i);
        const auto sig = x0.signatures->row(i);
        const std::complex<double> coef = (row * sig.adjoint())(0, 0);
        // residual after removing the rank-1 component
        CHECK((row - coef * sig).norm() < 1e-10 * std::max(row.norm(), 1.0));
    }
}

TEST_CASE("zero covariance gives zero amplitudes") {
    ChannelConfig cfg = small_config(16, 8, 12);
    TapSet taps{{2, 5}, {1.0, 1.0}, CorrelationModel::Uncorrelated};
    const auto x0 = generate_amplitudes(taps, cfg, Matrix::Zero(2, 2), 3);
    CHECK(x0.entries.norm() == 0.0);
}

TEST_CASE("generation rejects bad covariance input") {
    ChannelConfig cfg = small_config(16, 8, 12);
    TapSet taps{{2, 5}, {1.0, 1.0}, CorrelationModel::Uncorrelated};
    CHECK_THROWS_AS(generate_amplitudes(taps, cfg, Matrix::Identity(3, 3), 1), ShapeError);
    Matrix bad = Matrix::Identity(2, 2);
    bad(0, 0) = -1.0;
    CHECK_THROWS_AS(generate_amplitudes(taps, cfg, bad, 1), NumericalError);
    Matrix non_hermitian = Matrix::Identity(2, 2);
    non_hermitian(0, 1) = 1.0;
    CHECK_THROWS_AS(generate_amplitudes(taps, cfg, non_hermitian, 1), NumericalError);
}

TEST_CASE("same seed reproduces amplitudes bit for bit") {
    ChannelConfig cfg = small_config(32, 16, 24);
    TapSet taps{{1, 9}, {1.0, 0.5}, CorrelationModel::Uncorrelated};
    const auto a = generate_amplitudes(taps, cfg, diag_cov(taps.powers), 99);
    const auto b = generate_amplitudes(taps, cfg, diag_cov(taps.powers), 99);
    CHECK(a.entries == b.entries);
}

TEST_CASE("full-band snapshot is an impulse train at the tap delays") {
    ChannelConfig cfg = small_config(16, 3);
    TapSet taps{{5}, {1.0}, CorrelationModel::Uncorrelated};
    AmplitudeMatrix x0;
    x0.entries = Matrix::Ones(1, 3);
    const auto snap = synthesize_snapshot(x0, taps, cfg);
    for (int k = 0; k < 3; ++k)
        for (int n = 0; n < 16; ++n)
            CHECK(std::abs(snap.samples(n, k) - (n == 5 ? 1.0 : 0.0)) < 1e-12);
}

TEST_CASE("zero amplitudes give a zero snapshot") {
    ChannelConfig cfg = small_config(16, 4, 12);
    TapSet taps{{2, 7}, {1.0, 1.0}, CorrelationModel::Uncorrelated};
    AmplitudeMatrix x0;
    x0.entries = Matrix::Zero(2, 4);
    CHECK(synthesize_snapshot(x0, taps, cfg).samples.norm() == 0.0);
}

TEST_CASE("snapshot save/load round-trips bit-exactly") {
    ChannelConfig cfg = small_config(16, 3);
    cfg.n_used_override = 0; // n_used = n_rb * 12
    TapSet taps{{1, 4}, {1.0, 0.5}, CorrelationModel::Uncorrelated};
    const auto x0 = generate_amplitudes(taps, cfg, diag_cov(taps.powers), 5);
    const auto snap = synthesize_snapshot(x0, taps, cfg);

    const auto path = temp_file("roundtrip.snap");
    save_snapshot(snap, path.string());
    const auto loaded = load_snapshot(path.string());
    CHECK(loaded.samples == snap.samples);
    CHECK(loaded.config.n_dft == cfg.n_dft);
    CHECK(loaded.config.n_rx == cfg.n_rx);

    // overwrite succeeds and stays identical
    save_snapshot(loaded, path.string());
    CHECK(load_snapshot(path.string()).samples == snap.samples);
    fs::remove(path);
}

TEST_CASE("snapshot parser rejects malformed input") {
    const auto path = temp_file("bad.snap");
    {
        std::ofstream out(path);
    }
    CHECK_THROWS_AS(load_snapshot(path.string()), ParseError);
    const char* header = "MCEB-SNAP v1 n_dft=12 n_rx=1 n_rb=1 sample_period=1\n";
    {
        std::ofstream out(path);
        out << header;
        for (int n = 0; n < 11; ++n) out << n << " 0 1.0 0.0\n"; // one row short
    }
    CHECK_THROWS_AS(load_snapshot(path.string()), ParseError);
    {
        std::ofstream out(path);
        out << header;
        for (int n = 0; n < 11; ++n) out << n << " 0 1.0 0.0\n";
        out << "3 0 2.0 0.0\n"; // duplicate (n,k)
    }
    CHECK_THROWS_AS(load_snapshot(path.string()), ParseError);
    {
        std::ofstream out(path);
        out << header;
        for (int n = 0; n < 11; ++n) out << n << " 0 1.0 0.0\n";
        out << "11 0 nan 0.0\n";
    }
    CHECK_THROWS_AS(load_snapshot(path.string()), ParseError); // non-finite
    {
        std::ofstream out(path);
        out << "MCEB-SNAP v1 n_dft=4 n_rx=1 n_rb=1 sample_period=1\n"; // n_used > n_dft
    }
    CHECK_THROWS_AS(load_snapshot(path.string()), ParseError);
    CHECK_THROWS_AS(load_snapshot("/nonexistent/mceb.snap"), IoError);
    fs::remove(path);
}

TEST_CASE("unwritable snapshot path raises an I/O error") {
    ChannelConfig cfg = small_config(4, 1);
    ChannelSnapshot snap{Matrix::Zero(4, 1), cfg};
    CHECK_THROWS_AS(save_snapshot(snap, "/nonexistent_dir/x.snap"), IoError);
}
