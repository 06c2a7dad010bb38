// tailsitter: data generation, estimator training, gradient checks, mission
// simulation, inference benchmark and coefficient-table export.
//
// Exit status: 0 ok, 2 configuration, 3 file, 4 numerical or check failure.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <new>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tailsitter/aero.hpp"
#include "tailsitter/dataset.hpp"
#include "tailsitter/mission.hpp"
#include "tailsitter/mlp.hpp"
#include "tailsitter/mlp_io.hpp"
#include "tailsitter/pipeline.hpp"
#include "tailsitter/train.hpp"

// Process-wide allocation counter for the bench command.
namespace {
std::atomic<std::uint64_t> g_allocations{0};
}

void *operator new(std::size_t size) {
    g_allocations.fetch_add(1, std::memory_order_relaxed);
    if (void *p = std::malloc(size == 0 ? 1 : size)) {
        return p;
    }
    throw std::bad_alloc();
}
void operator delete(void *p) noexcept { std::free(p); }
void operator delete(void *p, std::size_t) noexcept { std::free(p); }

namespace {

using namespace tailsitter;

enum ExitCode : int { kOk = 0, kConfig = 2, kFile = 3, kNumerical = 4 };

int exit_code_for(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::invalid_argument:
    case ErrorKind::config: return kConfig;
    case ErrorKind::numerical: return kNumerical;
    case ErrorKind::io:
    case ErrorKind::format:
    case ErrorKind::shape_mismatch:
    case ErrorKind::non_finite:
    case ErrorKind::unknown_activation:
    case ErrorKind::version_mismatch: return kFile;
    }
    return kConfig;
}

struct RunConfig {
    std::string dataset;
    std::string weights_f1;
    std::string weights_f2;
    std::string out;
    std::string summary;
    std::string table;

    std::uint64_t seed = 1;
    std::optional<std::uint64_t> data_seed;
    std::optional<std::uint64_t> init_seed;
    std::optional<std::uint64_t> shuffle_seed;

    aero::AeroParams params{};
    pipeline::Settings settings{};
    std::string schedule = "linear";
    mission::MissionConfig mission{};

    double fd_step = 1e-6;
    std::size_t checks = 10;
    std::size_t calls = 1000000;

    pipeline::Settings resolved_settings() const {
        pipeline::Settings s = settings;
        s.seeds = pipeline::Seeds::from_master(seed);
        if (data_seed) {
            s.seeds.data = *data_seed;
            s.seeds.split = *data_seed;
        }
        if (init_seed) s.seeds.init = *init_seed;
        if (shuffle_seed) s.seeds.shuffle = *shuffle_seed;
        s.train.schedule = schedule == "constant" ? train::LrSchedule::constant : train::LrSchedule::linear_decay;
        return s;
    }

    aero::CoefficientTable load_table() const {
        return table.empty() ? aero::CoefficientTable::flat_plate() : aero::load_coefficient_csv(table);
    }

    std::string out_or(const std::string &fallback) const { return out.empty() ? fallback : out; }
};

void add_options(CLI::App &app, RunConfig &c) {
    app.set_config("--config", "", "Flat key=value file; command-line flags override it");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.add_option("--dataset", c.dataset, "Dataset CSV (input of train and eval)");
    app.add_option("--weights-f1", c.weights_f1, "f1 network weight file");
    app.add_option("--weights-f2", c.weights_f2, "f2 network weight file");
    app.add_option("--out", c.out, "Primary output file");
    app.add_option("--summary", c.summary, "Segment summary CSV for simulate");
    app.add_option("--table", c.table, "Coefficient table CSV (default: flat plate)");

    app.add_option("--seed", c.seed, "Master seed for data, split, init and shuffle");
    app.add_option("--data-seed", c.data_seed, "Dataset and split seed");
    app.add_option("--init-seed", c.init_seed, "Network initialization seed");
    app.add_option("--shuffle-seed", c.shuffle_seed, "Epoch shuffling seed");

    app.add_option("--mass", c.params.mass, "kg");
    app.add_option("--inertia", c.params.inertia_y, "kg m^2");
    app.add_option("--wing-area", c.params.wing_area, "m^2");
    app.add_option("--air-density", c.params.air_density, "kg/m^3");
    app.add_option("--gravity", c.params.gravity, "m/s^2");

    auto &s = c.settings;
    app.add_option("--samples", s.samples, "Dataset size");
    app.add_option("--train-fraction", s.train_fraction, "Share of samples used for training");
    app.add_option("--u-min", s.ranges.u_min, "m/s");
    app.add_option("--u-max", s.ranges.u_max, "m/s");
    app.add_option("--w-min", s.ranges.w_min, "m/s");
    app.add_option("--w-max", s.ranges.w_max, "m/s");
    app.add_option("--epochs", s.train.epochs, "Training epochs");
    app.add_option("--lr", s.train.learning_rate, "Initial learning rate");
    app.add_option("--batch-size", s.train.batch_size, "Samples per update");
    app.add_option("--schedule", c.schedule, "Learning-rate schedule")->check(CLI::IsMember({"linear", "constant"}));
    app.add_option("--standardize", s.train.standardize, "Train on std-scaled inputs and targets");

    app.add_option("--dt", c.mission.dt, "Simulation step (s)");
    app.add_option("--kp", c.mission.attitude.kp, "Attitude proportional gain");
    app.add_option("--kd", c.mission.attitude.kd, "Attitude derivative gain");

    app.add_option("--fd-step", c.fd_step, "Finite-difference step for grad-check");
    app.add_option("--checks", c.checks, "Random inputs for grad-check");
    app.add_option("--calls", c.calls, "Timed forward calls for bench");
}

mlp::Network load_or(const std::string &path, const mlp::Network &fallback) {
    return path.empty() ? fallback : mlp::load_weights(path);
}

int cmd_gen_data(const RunConfig &c) {
    const auto s = c.resolved_settings();
    const auto ds = pipeline::make_dataset(s, c.params, c.load_table());
    const auto path = c.out_or("dataset.csv");
    data::save_dataset_csv(ds, path);
    std::cout << "wrote " << ds.size() << " samples to " << path << '\n';
    return kOk;
}

data::Dataset dataset_for(const RunConfig &c, const pipeline::Settings &s) {
    return c.dataset.empty() ? pipeline::make_dataset(s, c.params, c.load_table()) : data::load_dataset_csv(c.dataset);
}

int cmd_train(const RunConfig &c) {
    const auto s = c.resolved_settings();
    const auto ds = dataset_for(c, s);
    const auto result = pipeline::train_estimators(ds, s);

    const auto f1_path = c.weights_f1.empty() ? std::string("f1.mlpw") : c.weights_f1;
    const auto f2_path = c.weights_f2.empty() ? std::string("f2.mlpw") : c.weights_f2;
    mlp::save_weights(result.nets.f1, f1_path);
    mlp::save_weights(result.nets.f2, f2_path);

    const auto report_path = c.out_or("train_report.csv");
    mission::write_file(report_path, result, [](const pipeline::TrainOutcome &r, std::ostream &out) {
        out << "epoch,mean_loss_f1,mean_loss_f2\n";
        for (std::size_t e = 0; e < r.f1.loss_history.size(); ++e) {
            out << e + 1 << ',' << format_double(r.f1.loss_history[e]) << ','
                << format_double(r.f2.loss_history[e]) << '\n';
        }
    });

    const auto [train_set, test_set] = pipeline::split(ds, s);
    for (const auto &[name, target, report] :
         {std::tuple{"f1", train::Target::f1, &result.f1}, std::tuple{"f2", train::Target::f2, &result.f2}}) {
        const double sd = train::label_stddev(test_set.samples, target);
        std::cout << name << ": loss " << report->loss_history.front() << " -> " << report->loss_history.back()
                  << ", test RMSE " << report->test_rmse << " (" << 100.0 * report->test_rmse / sd
                  << "% of label std), last-epoch max weight change " << report->final_weight_delta << ", "
                  << report->wall_seconds << " s\n";
    }
    std::cout << "wrote " << f1_path << ", " << f2_path << ", " << report_path << '\n';
    return kOk;
}

int cmd_grad_check(const RunConfig &c) {
    const auto s = c.resolved_settings();
    const auto table = c.load_table();
    const auto fresh = pipeline::initial_estimators(s.seeds.init);
    const auto net = load_or(c.weights_f1, fresh.f1);
    auto rng = seeded_engine(s.seeds.data, 0xc4ec);
    double worst = 0.0;
    for (std::size_t i = 0; i < c.checks; ++i) {
        const double u = uniform_between(rng, s.ranges.u_min, s.ranges.u_max);
        const double w = uniform_between(rng, s.ranges.w_min, s.ranges.w_max);
        const double target = data::label_sample(u, w, c.params, table).f1;
        worst = std::max(worst, train::gradient_check(net, u, w, target, c.fd_step));
    }
    std::cout << "max relative error " << worst << " over " << c.checks << " inputs, "
              << net.params().size() << " parameters each\n";
    if (!(worst <= 1e-5)) {
        std::cerr << "gradient check failed (threshold 1e-5)\n";
        return kNumerical;
    }
    return kOk;
}

int cmd_simulate(const RunConfig &c) {
    const auto table = c.load_table();
    const auto zeros = pipeline::zero_estimators();
    if (c.weights_f1.empty() || c.weights_f2.empty()) {
        std::cerr << "note: missing weight file(s) replaced by zero-weight networks\n";
    }
    const auto f1 = load_or(c.weights_f1, zeros.f1);
    const auto f2 = load_or(c.weights_f2, zeros.f2);
    const auto phases = mission::default_mission();
    const auto trace = mission::run_mission(phases, c.params, table, f1, f2, c.mission);
    const auto stats = mission::summarize_mission(trace, phases);

    const auto trace_path = c.out_or("trace.csv");
    std::string summary_path = c.summary;
    if (summary_path.empty()) {
        const auto dot = trace_path.rfind(".csv");
        summary_path = (dot == std::string::npos ? trace_path : trace_path.substr(0, dot)) + "_summary.csv";
    }
    mission::write_file(trace_path, trace, mission::write_trace_csv);
    mission::write_file(summary_path, stats, mission::write_summary_csv);

    for (const auto &st : stats) {
        std::cout << st.name << " [" << st.t_start << ", " << st.t_end << "] mean u " << st.mean_u << ", mean |f2| "
                  << st.mean_abs_f2_true << ", RMSE f1/f2 " << st.rmse_f1 << " / " << st.rmse_f2 << '\n';
    }
    std::cout << "wrote " << trace.size() << " records to " << trace_path << ", summary to " << summary_path << '\n';
    return kOk;
}

int cmd_bench(const RunConfig &c) {
    if (c.calls == 0) {
        throw Error(ErrorKind::config, "--calls must be positive");
    }
    const auto s = c.resolved_settings();
    const auto net = load_or(c.weights_f1, pipeline::initial_estimators(s.seeds.init).f1);
    mlp::ForwardWorkspace<double> ws(net.topology());
    std::vector<double> inputs(2 * 1024);
    auto rng = seeded_engine(s.seeds.data, 0xbe4c);
    for (std::size_t i = 0; i < inputs.size(); i += 2) {
        inputs[i] = uniform_between(rng, s.ranges.u_min, s.ranges.u_max);
        inputs[i + 1] = uniform_between(rng, s.ranges.w_min, s.ranges.w_max);
    }
    std::vector<double> latency_ns(c.calls);
    volatile double sink = 0.0;
    for (std::size_t i = 0; i < 10000; ++i) {
        sink = sink + mlp::forward(net, inputs[(2 * i) % inputs.size()], inputs[(2 * i + 1) % inputs.size()], ws);
    }

    using clock = std::chrono::steady_clock;
    const auto allocations_before = g_allocations.load();
    const auto start = clock::now();
    for (std::size_t i = 0; i < c.calls; ++i) {
        const std::size_t k = (2 * i) % inputs.size();
        const auto t0 = clock::now();
        sink = sink + mlp::forward(net, inputs[k], inputs[k + 1], ws);
        latency_ns[i] = std::chrono::duration<double, std::nano>(clock::now() - t0).count();
    }
    const double total_s = std::chrono::duration<double>(clock::now() - start).count();
    const auto allocations = g_allocations.load() - allocations_before;

    const auto percentile = [&](double p) {
        const auto idx = static_cast<std::size_t>(p * static_cast<double>(latency_ns.size() - 1));
        std::nth_element(latency_ns.begin(), latency_ns.begin() + static_cast<std::ptrdiff_t>(idx), latency_ns.end());
        return latency_ns[idx];
    };
    double mean = 0.0;
    for (double v : latency_ns) mean += v;
    mean /= static_cast<double>(latency_ns.size());
    const double p50 = percentile(0.50);
    const double p99 = percentile(0.99);
    const double worst = *std::max_element(latency_ns.begin(), latency_ns.end());

    std::cout << "forward calls " << c.calls << ", parameters " << net.params().size() << ", workspace values "
              << ws.capacity() << '\n'
              << "latency ns: mean " << mean << ", p50 " << p50 << ", p99 " << p99 << ", max " << worst << '\n'
              << "throughput " << static_cast<double>(c.calls) / total_s << " calls/s (timer overhead included)\n"
              << "heap allocations during timed loop: " << allocations << '\n';
    if (allocations != 0) {
        std::cerr << "forward allocated in steady state\n";
        return kNumerical;
    }
    return kOk;
}

int cmd_dump_table(const RunConfig &c) {
    const auto table = c.load_table();
    const auto path = c.out_or("coefficients.csv");
    aero::save_coefficient_csv(table, path);
    std::cout << "wrote " << table.size() << " rows to " << path << '\n';
    return kOk;
}

int cmd_eval(const RunConfig &c) {
    if (c.weights_f1.empty() && c.weights_f2.empty()) {
        throw Error(ErrorKind::config, "eval needs --weights-f1 and/or --weights-f2");
    }
    const auto s = c.resolved_settings();
    const auto ds = dataset_for(c, s);
    const auto [train_set, test_set] = pipeline::split(ds, s);
    for (const auto &[name, target, path] :
         {std::tuple{"f1", train::Target::f1, &c.weights_f1}, std::tuple{"f2", train::Target::f2, &c.weights_f2}}) {
        if (path->empty()) continue;
        const auto net = mlp::load_weights(*path);
        const double rmse = train::evaluate_rmse(net, test_set.samples, target);
        const double sd = train::label_stddev(test_set.samples, target);
        std::cout << name << ": held-out RMSE " << rmse << " m/s^2 over " << test_set.size() << " samples ("
                  << 100.0 * rmse / sd << "% of label std)\n";
    }
    return kOk;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Tail-sitter longitudinal simulator with learned aerodynamic force estimators"};
    app.fallthrough();
    app.require_subcommand(1);
    RunConfig config;
    add_options(app, config);

    struct Command {
        const char *name;
        const char *help;
        int (*run)(const RunConfig &);
    };
    const Command commands[] = {
        {"gen-data", "Sample (u, w) and label f1, f2 with the aerodynamic model", cmd_gen_data},
        {"train", "Train the f1 and f2 networks; writes two weight files and a loss report", cmd_train},
        {"grad-check", "Compare backprop with central differences; fails above 1e-5", cmd_grad_check},
        {"simulate", "Fly the default mission; writes the trace and a segment summary", cmd_simulate},
        {"bench", "Time forward passes and check they do not allocate", cmd_bench},
        {"dump-table", "Write the active coefficient table", cmd_dump_table},
        {"eval", "Held-out RMSE of the given weight files", cmd_eval},
    };
    for (const auto &cmd : commands) {
        app.add_subcommand(cmd.name, cmd.help);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int status = app.exit(e);
        if (status == 0) return kOk;
        return dynamic_cast<const CLI::FileError *>(&e) ? kFile : kConfig;
    }

    try {
        config.settings.ranges.validate();
        config.params.validate();
        for (const auto &cmd : commands) {
            if (app.got_subcommand(cmd.name)) {
                return cmd.run(config);
            }
        }
    } catch (const Error &e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kNumerical;
    }
    return kConfig;
}
