#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mceb/channel_model.hpp"
#include "mceb/errors.hpp"

namespace mceb {

namespace detail {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace detail

// MCEB-SNAP v1: one header line, then N_DFT * N_RX lines "n k re im",
// row-major by n then k, 17 significant digits.
inline void save_snapshot(const ChannelSnapshot& snapshot, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    const auto& cfg = snapshot.config;
    if (snapshot.samples.rows() != cfg.n_dft || snapshot.samples.cols() != cfg.n_rx)
        throw ShapeError("snapshot samples do not match its config");
    out << "MCEB-SNAP v1 n_dft=" << cfg.n_dft << " n_rx=" << cfg.n_rx
        << " n_rb=" << cfg.n_rb << " sample_period=" << detail::format_double(cfg.sample_period)
        << "\n";
    for (int n = 0; n < cfg.n_dft; ++n)
        for (int k = 0; k < cfg.n_rx; ++k) {
            const auto v = snapshot.samples(n, k);
            out << n << ' ' << k << ' ' << detail::format_double(v.real()) << ' '
                << detail::format_double(v.imag()) << "\n";
        }
    if (!out) throw IoError("write failure on '" + path + "'");
}

inline ChannelSnapshot load_snapshot(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ":1: empty snapshot file");

    ChannelConfig cfg;
    {
        std::istringstream hs(line);
        std::string magic, version, field;
        hs >> magic >> version;
        if (magic != "MCEB-SNAP" || version != "v1")
            throw ParseError(path + ":1: bad header, expected 'MCEB-SNAP v1'");
        bool have_dft = false, have_rx = false, have_rb = false, have_t = false;
        while (hs >> field) {
            const auto eq = field.find('=');
            if (eq == std::string::npos)
                throw ParseError(path + ":1: malformed header field '" + field + "'");
            const std::string key = field.substr(0, eq);
            const std::string val = field.substr(eq + 1);
            try {
                if (key == "n_dft") { cfg.n_dft = std::stoi(val); have_dft = true; }
                else if (key == "n_rx") { cfg.n_rx = std::stoi(val); have_rx = true; }
                else if (key == "n_rb") { cfg.n_rb = std::stoi(val); have_rb = true; }
                else if (key == "sample_period") { cfg.sample_period = std::stod(val); have_t = true; }
                else throw ParseError(path + ":1: unknown header key '" + key + "'");
            } catch (const std::invalid_argument&) {
                throw ParseError(path + ":1: bad value for '" + key + "'");
            }
        }
        if (!(have_dft && have_rx && have_rb && have_t))
            throw ParseError(path + ":1: header missing required keys");
        try {
            cfg.validate();
        } catch (const ConfigError& e) {
            throw ParseError(path + ":1: invalid header geometry: " + e.what());
        }
    }

    ChannelSnapshot snap;
    snap.config = cfg;
    snap.samples = Matrix::Zero(cfg.n_dft, cfg.n_rx);
    std::vector<char> seen(static_cast<std::size_t>(cfg.n_dft) * cfg.n_rx, 0);
    std::size_t count = 0;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        int n, k;
        double re, im;
        if (!(ls >> n >> k >> re >> im))
            throw ParseError(path + ":" + std::to_string(lineno) + ": malformed data line");
        if (n < 0 || n >= cfg.n_dft || k < 0 || k >= cfg.n_rx)
            throw ParseError(path + ":" + std::to_string(lineno) + ": (n,k) out of range");
        if (!std::isfinite(re) || !std::isfinite(im))
            throw ParseError(path + ":" + std::to_string(lineno) + ": non-finite value");
        const std::size_t idx = static_cast<std::size_t>(n) * cfg.n_rx + k;
        if (seen[idx])
            throw ParseError(path + ":" + std::to_string(lineno) + ": duplicate (n,k) pair");
        seen[idx] = 1;
        snap.samples(n, k) = {re, im};
        ++count;
    }
    if (count != seen.size())
        throw ParseError(path + ": expected " + std::to_string(seen.size()) +
                         " data lines, got " + std::to_string(count));
    return snap;
}

} // namespace mceb
