// Supervised samples (u, w) -> (f1, f2) labeled by the aerodynamic model at q = 0.
#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tailsitter/aero.hpp"
#include "tailsitter/error.hpp"
#include "tailsitter/numeric.hpp"

namespace tailsitter::data {

struct Sample {
    double u = 0.0;
    double w = 0.0;
    double f1 = 0.0;
    double f2 = 0.0;

    friend bool operator==(const Sample &, const Sample &) = default;
};

/// Sampling rectangle; defaults cover hover through cruise.
struct Ranges {
    double u_min = 0.0;
    double u_max = 18.0;
    double w_min = -1.0;
    double w_max = 4.0;

    void validate() const {
        if (!std::isfinite(u_min) || !std::isfinite(u_max) || !std::isfinite(w_min) || !std::isfinite(w_max) ||
            !(u_min < u_max) || !(w_min < w_max)) {
            throw Error(ErrorKind::invalid_argument, "ranges must be finite with min < max");
        }
    }

    bool contains(double u, double w) const { return u >= u_min && u <= u_max && w >= w_min && w <= w_max; }

    friend bool operator==(const Ranges &, const Ranges &) = default;
};

struct Dataset {
    std::vector<Sample> samples;
    std::uint64_t seed = 0;
    Ranges ranges;

    std::size_t size() const noexcept { return samples.size(); }

    friend bool operator==(const Dataset &, const Dataset &) = default;
};

inline Sample label_sample(double u, double w, const aero::AeroParams &params, const aero::CoefficientTable &table) {
    const auto f = aero::specific_body_forces(u, w, 0.0, params, table);
    return {u, w, f.f1, f.f2};
}

inline Dataset generate_dataset(std::size_t n, std::uint64_t seed, const Ranges &ranges,
                                const aero::AeroParams &params, const aero::CoefficientTable &table) {
    if (n == 0) {
        throw Error(ErrorKind::invalid_argument, "dataset size must be positive");
    }
    ranges.validate();
    auto rng = seeded_engine(seed);
    Dataset ds{{}, seed, ranges};
    ds.samples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = uniform_between(rng, ranges.u_min, ranges.u_max);
        const double w = uniform_between(rng, ranges.w_min, ranges.w_max);
        ds.samples.push_back(label_sample(u, w, params, table));
    }
    return ds;
}

/// Shuffled disjoint partition; train gets round(fraction * n) samples.
inline std::pair<Dataset, Dataset> split_dataset(const Dataset &ds, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw Error(ErrorKind::invalid_argument, "train fraction must lie in (0, 1)");
    }
    const auto n = ds.samples.size();
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
    if (n_train == 0 || n_train >= n) {
        throw Error(ErrorKind::invalid_argument, "split would leave one side empty");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto rng = seeded_engine(seed, 0x5eed);
    deterministic_shuffle(order.begin(), order.end(), rng);

    Dataset train{{}, ds.seed, ds.ranges};
    Dataset test{{}, ds.seed, ds.ranges};
    train.samples.reserve(n_train);
    test.samples.reserve(n - n_train);
    for (std::size_t i = 0; i < n; ++i) {
        (i < n_train ? train : test).samples.push_back(ds.samples[order[i]]);
    }
    return {std::move(train), std::move(test)};
}

// --- CSV: "# ranges u_min u_max w_min w_max seed N", then "u,w,f1,f2" ---

inline void write_dataset_csv(const Dataset &ds, std::ostream &out) {
    const auto &r = ds.ranges;
    out << "# ranges " << format_double(r.u_min) << ' ' << format_double(r.u_max) << ' ' << format_double(r.w_min)
        << ' ' << format_double(r.w_max) << ' ' << ds.seed << ' ' << ds.samples.size() << '\n';
    out << "u,w,f1,f2\n";
    for (const auto &s : ds.samples) {
        out << format_double(s.u) << ',' << format_double(s.w) << ',' << format_double(s.f1) << ','
            << format_double(s.f2) << '\n';
    }
}

inline void save_dataset_csv(const Dataset &ds, const std::string &path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::io, "cannot open '" + path + "' for writing");
    }
    write_dataset_csv(ds, out);
    if (!out) {
        throw Error(ErrorKind::io, "write failed for '" + path + "'");
    }
}

inline Dataset read_dataset_csv(std::istream &in) {
    std::string line;
    const auto next = [&]() {
        if (!std::getline(in, line)) return false;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
    };
    if (!next() || line.rfind("# ranges ", 0) != 0) {
        throw Error(ErrorKind::format, "dataset must start with '# ranges u_min u_max w_min w_max seed N'");
    }
    Dataset ds;
    long long declared = 0;
    {
        std::istringstream fields(line.substr(9));
        std::string tok[6];
        for (auto &t : tok) fields >> t;
        std::string extra;
        long long seed = 0;
        if (fields >> extra || !parse_double(tok[0], ds.ranges.u_min) || !parse_double(tok[1], ds.ranges.u_max) ||
            !parse_double(tok[2], ds.ranges.w_min) || !parse_double(tok[3], ds.ranges.w_max) ||
            !parse_integer(tok[4], seed) || !parse_integer(tok[5], declared) || declared < 0 || seed < 0) {
            throw Error(ErrorKind::format, "malformed ranges line");
        }
        ds.seed = static_cast<std::uint64_t>(seed);
    }
    try {
        ds.ranges.validate();
    } catch (const Error &e) {
        throw Error(ErrorKind::format, e.what());
    }
    if (!next() || line != "u,w,f1,f2") {
        throw Error(ErrorKind::format, "dataset header must be 'u,w,f1,f2'");
    }
    std::size_t line_no = 2;
    while (next()) {
        ++line_no;
        if (line.empty()) continue;
        double v[4];
        std::size_t start = 0;
        bool ok = true;
        for (int k = 0; k < 4 && ok; ++k) {
            const auto comma = line.find(',', start);
            const bool last = k == 3;
            if (last != (comma == std::string::npos)) {
                ok = false;
                break;
            }
            const auto end = last ? line.size() : comma;
            ok = parse_double(std::string_view(line).substr(start, end - start), v[k]) && std::isfinite(v[k]);
            start = end + 1;
        }
        if (!ok) {
            throw Error(ErrorKind::format, "malformed dataset row at line " + std::to_string(line_no));
        }
        if (!ds.ranges.contains(v[0], v[1])) {
            throw Error(ErrorKind::format, "sample outside declared ranges at line " + std::to_string(line_no));
        }
        ds.samples.push_back({v[0], v[1], v[2], v[3]});
    }
    if (ds.samples.size() != static_cast<std::size_t>(declared)) {
        throw Error(ErrorKind::format, "declared " + std::to_string(declared) + " samples, found " +
                                           std::to_string(ds.samples.size()));
    }
    return ds;
}

inline Dataset load_dataset_csv(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::io, "cannot open '" + path + "'");
    }
    return read_dataset_csv(in);
}

} // namespace tailsitter::data
