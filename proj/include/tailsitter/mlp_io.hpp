// Versioned text weight file:
//
//   MLPWF 1
//   2 10 20 50 10 1
//   linear tanh tanh linear linear
//   biases 0
//   <weights, one transition at a time, row-major, one value per line>
//   <biases per layer, if enabled>
//
// Values are written in shortest round-trip form, so load(save(net)) == net.
#pragma once

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "tailsitter/error.hpp"
#include "tailsitter/mlp.hpp"
#include "tailsitter/numeric.hpp"

namespace tailsitter::mlp {

inline constexpr std::string_view kWeightFileMagic = "MLPWF";
inline constexpr int kWeightFileVersion = 1;

inline void write_weights(const Network &net, std::ostream &out) {
    const Topology &topo = net.topology();
    out << kWeightFileMagic << ' ' << kWeightFileVersion << '\n';
    for (std::size_t i = 0; i < topo.layer_sizes.size(); ++i) {
        out << (i ? " " : "") << topo.layer_sizes[i];
    }
    out << '\n';
    for (std::size_t i = 0; i < topo.activations.size(); ++i) {
        out << (i ? " " : "") << to_string(topo.activations[i]);
    }
    out << '\n' << "biases " << (net.biases_enabled() ? 1 : 0) << '\n';
    for (double v : net.params()) {
        out << format_double(v) << '\n';
    }
}

inline void save_weights(const Network &net, const std::string &path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::io, "cannot open '" + path + "' for writing");
    }
    write_weights(net, out);
    if (!out) {
        throw Error(ErrorKind::io, "write failed for '" + path + "'");
    }
}

namespace detail {

inline std::vector<std::string> split_ws(const std::string &line) {
    std::istringstream in(line);
    std::vector<std::string> tokens;
    for (std::string tok; in >> tok;) {
        tokens.push_back(tok);
    }
    return tokens;
}

inline bool next_line(std::istream &in, std::string &line) {
    if (!std::getline(in, line)) {
        return false;
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    return true;
}

} // namespace detail

inline Network read_weights(std::istream &in) {
    std::string line;
    if (!detail::next_line(in, line)) {
        throw Error(ErrorKind::version_mismatch, "missing weight-file header");
    }
    const auto header = detail::split_ws(line);
    if (header.size() != 2 || header[0] != kWeightFileMagic) {
        throw Error(ErrorKind::version_mismatch, "not a weight file (expected 'MLPWF 1')");
    }
    if (header[1] != std::to_string(kWeightFileVersion)) {
        throw Error(ErrorKind::version_mismatch, "unsupported weight-file version '" + header[1] + "'");
    }

    Topology topo;
    if (!detail::next_line(in, line)) {
        throw Error(ErrorKind::shape_mismatch, "missing layer sizes");
    }
    for (const auto &tok : detail::split_ws(line)) {
        long long n = 0;
        if (!parse_integer(tok, n) || n <= 0) {
            throw Error(ErrorKind::shape_mismatch, "invalid layer size '" + tok + "'");
        }
        topo.layer_sizes.push_back(static_cast<std::size_t>(n));
    }
    if (!detail::next_line(in, line)) {
        throw Error(ErrorKind::shape_mismatch, "missing activation tags");
    }
    for (const auto &tok : detail::split_ws(line)) {
        Activation a{};
        if (!parse_activation(tok, a)) {
            throw Error(ErrorKind::unknown_activation, "unknown activation '" + tok + "'");
        }
        topo.activations.push_back(a);
    }
    try {
        topo.validate();
    } catch (const Error &e) {
        throw Error(ErrorKind::shape_mismatch, e.what());
    }

    if (!detail::next_line(in, line)) {
        throw Error(ErrorKind::shape_mismatch, "missing biases flag");
    }
    const auto flag = detail::split_ws(line);
    if (flag.size() != 2 || flag[0] != "biases" || (flag[1] != "0" && flag[1] != "1")) {
        throw Error(ErrorKind::shape_mismatch, "expected 'biases 0' or 'biases 1'");
    }

    Network net(topo, flag[1] == "1");
    auto params = net.params();
    std::size_t count = 0;
    while (detail::next_line(in, line)) {
        if (line.empty()) {
            continue;
        }
        double v = 0.0;
        if (!parse_double(line, v)) {
            throw Error(ErrorKind::shape_mismatch, "unparseable value '" + line + "'");
        }
        if (!std::isfinite(v)) {
            throw Error(ErrorKind::non_finite, "non-finite parameter at index " + std::to_string(count));
        }
        if (count == params.size()) {
            throw Error(ErrorKind::shape_mismatch, "more values than the topology holds");
        }
        params[count++] = v;
    }
    if (count != params.size()) {
        throw Error(ErrorKind::shape_mismatch, "expected " + std::to_string(params.size()) + " values, found " +
                                                   std::to_string(count));
    }
    return net;
}

inline Network load_weights(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::io, "cannot open '" + path + "'");
    }
    return read_weights(in);
}

} // namespace tailsitter::mlp
