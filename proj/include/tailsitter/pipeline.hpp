// End-to-end helpers shared by the command-line tool and the tests:
// dataset -> two trained estimators -> mission trace.
#pragma once

#include <cstdint>
#include <utility>

#include "tailsitter/aero.hpp"
#include "tailsitter/dataset.hpp"
#include "tailsitter/mission.hpp"
#include "tailsitter/mlp.hpp"
#include "tailsitter/numeric.hpp"
#include "tailsitter/train.hpp"

namespace tailsitter::pipeline {

/// Independent seed for one consumer of a master seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) { return seeded_engine(seed, stream)(); }

struct Seeds {
    std::uint64_t data = 1;
    std::uint64_t split = 1;
    std::uint64_t init = 1;
    std::uint64_t shuffle = 1;

    static Seeds from_master(std::uint64_t seed) { return {seed, seed, seed, seed}; }
};

struct Settings {
    std::size_t samples = 10000;
    double train_fraction = 0.9;
    data::Ranges ranges{};
    train::TrainConfig train{};
    Seeds seeds{};
};

struct Estimators {
    mlp::Network f1;
    mlp::Network f2;
};

/// Xavier-initialized, bias-free networks of the default topology; f1 and f2
/// draw from separate streams of the init seed.
inline Estimators initial_estimators(std::uint64_t init_seed) {
    const auto topo = mlp::Topology::paper_default();
    return {mlp::init_network(topo, derive_seed(init_seed, 1), mlp::InitScheme::uniform_xavier),
            mlp::init_network(topo, derive_seed(init_seed, 2), mlp::InitScheme::uniform_xavier)};
}

inline Estimators zero_estimators() {
    const auto topo = mlp::Topology::paper_default();
    return {mlp::Network(topo, false), mlp::Network(topo, false)};
}

inline data::Dataset make_dataset(const Settings &s, const aero::AeroParams &params,
                                  const aero::CoefficientTable &table) {
    return data::generate_dataset(s.samples, s.seeds.data, s.ranges, params, table);
}

inline std::pair<data::Dataset, data::Dataset> split(const data::Dataset &ds, const Settings &s) {
    return data::split_dataset(ds, s.train_fraction, s.seeds.split);
}

struct TrainOutcome {
    Estimators nets;
    train::TrainReport f1;
    train::TrainReport f2;
};

inline TrainOutcome train_estimators(const data::Dataset &dataset, const Settings &s) {
    const auto [train_set, test_set] = split(dataset, s);
    TrainOutcome out{initial_estimators(s.seeds.init), {}, {}};
    train::TrainConfig config = s.train;
    config.shuffle_seed = derive_seed(s.seeds.shuffle, 1);
    out.f1 = train::train(out.nets.f1, train_set, test_set, train::Target::f1, config);
    config.shuffle_seed = derive_seed(s.seeds.shuffle, 2);
    out.f2 = train::train(out.nets.f2, train_set, test_set, train::Target::f2, config);
    return out;
}

} // namespace tailsitter::pipeline
