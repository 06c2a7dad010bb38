// Scripted autonomous flight: take-off, hover, transition to cruise, cruise,
// transition back, hover, landing. Every step logs the model forces (with the
// flown pitch rate) next to the two network estimates.
#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "tailsitter/aero.hpp"
#include "tailsitter/dynamics.hpp"
#include "tailsitter/error.hpp"
#include "tailsitter/mlp.hpp"
#include "tailsitter/numeric.hpp"

namespace tailsitter::mission {

using aero::AeroParams;
using aero::CoefficientTable;
using dynamics::BodyState;
using dynamics::ControlInput;

enum class PhaseName { takeoff, hover, transition_fw, cruise, transition_bk, hover2, land };

inline std::string_view to_string(PhaseName name) {
    switch (name) {
    case PhaseName::takeoff: return "takeoff";
    case PhaseName::hover: return "hover";
    case PhaseName::transition_fw: return "transition_fw";
    case PhaseName::cruise: return "cruise";
    case PhaseName::transition_bk: return "transition_bk";
    case PhaseName::hover2: return "hover2";
    case PhaseName::land: return "land";
    }
    return "unknown";
}

/// Speed-controlled phases track body-x speed; the others track climb rate.
inline bool is_forward_flight(PhaseName name) {
    return name == PhaseName::cruise || name == PhaseName::transition_fw;
}

struct MissionPhase {
    PhaseName name;
    double start;       // s
    double end;         // s
    double theta_from;  // rad, pitch reference at start
    double theta_to;    // rad, pitch reference at end (equal to theta_from unless ramping)
    double u_ref;       // m/s: body-x speed in forward flight, climb rate otherwise

    double theta_ref(double t) const {
        if (theta_from == theta_to || end <= start) {
            return theta_from;
        }
        const double s = std::clamp((t - start) / (end - start), 0.0, 1.0);
        return theta_from + s * (theta_to - theta_from);
    }
};

inline constexpr double kHoverPitch = std::numbers::pi / 2.0;
inline constexpr double kCruisePitch = 0.12;
inline constexpr double kCruiseSpeed = 16.0;

inline std::vector<MissionPhase> default_mission() {
    return {
        {PhaseName::takeoff, 0.0, 10.0, kHoverPitch, kHoverPitch, 1.0},
        {PhaseName::hover, 10.0, 58.0, kHoverPitch, kHoverPitch, 0.0},
        {PhaseName::transition_fw, 58.0, 62.0, kHoverPitch, kCruisePitch, kCruiseSpeed},
        {PhaseName::cruise, 62.0, 100.0, kCruisePitch, kCruisePitch, kCruiseSpeed},
        {PhaseName::transition_bk, 100.0, 104.0, kCruisePitch, kHoverPitch, 0.0},
        {PhaseName::hover2, 104.0, 115.0, kHoverPitch, kHoverPitch, 0.0},
        {PhaseName::land, 115.0, 125.0, kHoverPitch, kHoverPitch, -1.0},
    };
}

inline void validate_phases(const std::vector<MissionPhase> &phases) {
    if (phases.empty()) {
        throw Error(ErrorKind::invalid_argument, "mission has no phases");
    }
    for (std::size_t i = 0; i < phases.size(); ++i) {
        const auto &p = phases[i];
        if (!std::isfinite(p.start) || !std::isfinite(p.end) || !(p.start < p.end) ||
            !std::isfinite(p.theta_from) || !std::isfinite(p.theta_to) || !std::isfinite(p.u_ref)) {
            throw Error(ErrorKind::invalid_argument, "phase '" + std::string(to_string(p.name)) + "' is malformed");
        }
        if (i > 0 && phases[i - 1].end != p.start) {
            throw Error(ErrorKind::invalid_argument, "phases must be contiguous");
        }
    }
}

/// Index of the phase active at t: start <= t < end, the last phase past the end.
inline std::size_t phase_index_at(const std::vector<MissionPhase> &phases, double t) {
    for (std::size_t i = 0; i < phases.size(); ++i) {
        if (t < phases[i].end) {
            return i;
        }
    }
    return phases.size() - 1;
}

struct GuidanceGains {
    double k_vertical = 2.0; // N per m/s of climb-rate error
    double k_speed = 1.5;    // N per m/s of body-x speed error
};

struct GuidanceCommand {
    double thrust;    // N
    double theta_ref; // rad
};

/// Climb rate: projection of the body velocity on the up axis.
inline double climb_rate(const BodyState<double> &s) { return s.u * std::sin(s.theta) - s.w * std::cos(s.theta); }

/**
 * Minimal pilot. Vertical phases hold a climb rate around the hover thrust
 * m*g; forward phases hold body-x speed on top of the thrust that balances
 * aerodynamic resistance and gravity along body-x. Thrust is clamped to
 * [0, 2 m g].
 */
inline GuidanceCommand guidance(const MissionPhase &phase, double t, const BodyState<double> &state,
                                const AeroParams &params, const CoefficientTable &table,
                                const GuidanceGains &gains = {}) {
    const double m = params.mass;
    const double g = params.gravity;
    double thrust = 0.0;
    if (is_forward_flight(phase.name)) {
        const auto aero_only = aero::specific_body_forces(state.u, state.w, 0.0, params, table);
        const double feedforward = -m * aero_only.f1 + m * g * std::sin(state.theta);
        thrust = feedforward + gains.k_speed * (phase.u_ref - state.u);
    } else {
        thrust = m * g + gains.k_vertical * (phase.u_ref - climb_rate(state));
    }
    return {std::clamp(thrust, 0.0, dynamics::max_thrust(params)), phase.theta_ref(t)};
}

struct MissionConfig {
    double dt = 0.004; // s
    dynamics::AttitudeGains attitude{};
    GuidanceGains guidance{};
    BodyState<double> initial{0.0, 0.0, kHoverPitch, 0.0};
};

struct TraceRecord {
    double t = 0.0;
    BodyState<double> state{};
    ControlInput<double> input{};
    double f1_true = 0.0;
    double f2_true = 0.0;
    double f1_est = 0.0;
    double f2_est = 0.0;
    PhaseName phase = PhaseName::takeoff;
    double altitude = 0.0; // m, logging only

    friend bool operator==(const TraceRecord &, const TraceRecord &) = default;
};

/// Integrates the mission at 1/dt with zero-order-held control; one record per
/// step including t = start and t = end. Throws ErrorKind::numerical on divergence.
inline std::vector<TraceRecord> run_mission(const std::vector<MissionPhase> &phases, const AeroParams &params,
                                            const CoefficientTable &table, const mlp::Network &net_f1,
                                            const mlp::Network &net_f2, const MissionConfig &config = {}) {
    validate_phases(phases);
    params.validate();
    config.attitude.validate();
    for (const auto *net : {&net_f1, &net_f2}) {
        if (net->topology().input_size() != 2 || net->topology().output_size() != 1) {
            throw Error(ErrorKind::invalid_argument, "estimator networks must map 2 inputs to 1 output");
        }
    }
    if (!std::isfinite(config.dt) || !(config.dt > 0.0)) {
        throw Error(ErrorKind::invalid_argument, "dt must be finite and positive");
    }
    const double t0 = phases.front().start;
    const double duration = phases.back().end - t0;
    const auto steps = static_cast<std::size_t>(std::llround(duration / config.dt));

    mlp::ForwardWorkspace<double> ws1(net_f1.topology());
    mlp::ForwardWorkspace<double> ws2(net_f2.topology());

    std::vector<TraceRecord> trace;
    trace.reserve(steps + 1);
    BodyState<double> state = config.initial;
    double altitude = 0.0;
    for (std::size_t k = 0; k <= steps; ++k) {
        const double t = t0 + static_cast<double>(k) * config.dt;
        if (!state.is_finite()) {
            throw Error(ErrorKind::numerical, "state became non-finite at t = " + format_double(t) + " s");
        }
        const auto &phase = phases[phase_index_at(phases, t)];
        const auto cmd = guidance(phase, t, state, params, table, config.guidance);
        const double tau = dynamics::attitude_torque(state.theta, state.q, cmd.theta_ref, config.attitude);
        const ControlInput<double> input{cmd.thrust, tau};
        const auto truth = aero::specific_body_forces(state.u, state.w, state.q, params, table);

        TraceRecord rec;
        rec.t = t;
        rec.state = state;
        rec.input = input;
        rec.f1_true = truth.f1;
        rec.f2_true = truth.f2;
        rec.f1_est = mlp::forward(net_f1, state.u, state.w, ws1);
        rec.f2_est = mlp::forward(net_f2, state.u, state.w, ws2);
        rec.phase = phase.name;
        rec.altitude = altitude;
        trace.push_back(rec);

        if (k == steps) {
            break;
        }
        BodyState<double> next;
        try {
            next = dynamics::step_rk4(state, input, params, table, config.dt);
        } catch (const Error &e) {
            // inputs were validated above, so a failing step means the state ran away
            throw Error(ErrorKind::numerical, "integration diverged at t = " + format_double(t) + " s: " + e.what());
        }
        altitude += 0.5 * config.dt * (climb_rate(state) + climb_rate(next));
        state = next;
    }
    return trace;
}

// --- segment statistics ---

struct SegmentStats {
    std::string name;
    double t_start = 0.0;
    double t_end = 0.0;
    std::size_t samples = 0;
    double mean_u = 0.0;
    double mean_abs_u = 0.0;
    double mean_w = 0.0;
    double mean_abs_f1_true = 0.0;
    double mean_abs_f2_true = 0.0;
    double std_f1_true = 0.0;
    double std_f2_true = 0.0;
    double rmse_f1 = 0.0;
    double rmse_f2 = 0.0;
};

/// Statistics over records with t_start <= t <= t_end (population std).
inline SegmentStats summarize(const std::vector<TraceRecord> &trace, std::string name, double t_start,
                              double t_end) {
    SegmentStats s;
    s.name = std::move(name);
    s.t_start = t_start;
    s.t_end = t_end;
    double mean_f1 = 0.0, mean_f2 = 0.0;
    for (const auto &r : trace) {
        if (r.t < t_start || r.t > t_end) continue;
        ++s.samples;
        s.mean_u += r.state.u;
        s.mean_abs_u += std::abs(r.state.u);
        s.mean_w += r.state.w;
        s.mean_abs_f1_true += std::abs(r.f1_true);
        s.mean_abs_f2_true += std::abs(r.f2_true);
        mean_f1 += r.f1_true;
        mean_f2 += r.f2_true;
        s.rmse_f1 += (r.f1_est - r.f1_true) * (r.f1_est - r.f1_true);
        s.rmse_f2 += (r.f2_est - r.f2_true) * (r.f2_est - r.f2_true);
    }
    if (s.samples == 0) {
        throw Error(ErrorKind::invalid_argument, "segment '" + s.name + "' contains no records");
    }
    const double n = static_cast<double>(s.samples);
    s.mean_u /= n;
    s.mean_abs_u /= n;
    s.mean_w /= n;
    s.mean_abs_f1_true /= n;
    s.mean_abs_f2_true /= n;
    mean_f1 /= n;
    mean_f2 /= n;
    s.rmse_f1 = std::sqrt(s.rmse_f1 / n);
    s.rmse_f2 = std::sqrt(s.rmse_f2 / n);
    for (const auto &r : trace) {
        if (r.t < t_start || r.t > t_end) continue;
        s.std_f1_true += (r.f1_true - mean_f1) * (r.f1_true - mean_f1);
        s.std_f2_true += (r.f2_true - mean_f2) * (r.f2_true - mean_f2);
    }
    s.std_f1_true = std::sqrt(s.std_f1_true / n);
    s.std_f2_true = std::sqrt(s.std_f2_true / n);
    return s;
}

/// Steady windows used for the hover/cruise comparisons: hover after the
/// climb-out, cruise after the forward transition has settled.
inline constexpr double kHoverWindowStart = 10.0;
inline constexpr double kHoverWindowEnd = 58.0;
inline constexpr double kCruiseWindowStart = 65.0;
inline constexpr double kCruiseWindowEnd = 100.0;

inline std::vector<SegmentStats> summarize_mission(const std::vector<TraceRecord> &trace,
                                                   const std::vector<MissionPhase> &phases) {
    std::vector<SegmentStats> out;
    for (const auto &p : phases) {
        out.push_back(summarize(trace, std::string(to_string(p.name)), p.start, p.end));
    }
    out.push_back(summarize(trace, "hover_window", kHoverWindowStart, kHoverWindowEnd));
    out.push_back(summarize(trace, "cruise_window", kCruiseWindowStart, kCruiseWindowEnd));
    return out;
}

// --- CSV output ---

inline void write_trace_csv(const std::vector<TraceRecord> &trace, std::ostream &out) {
    out << "t,u,w,theta,q,thrust,tau,f1_true,f2_true,f1_est,f2_est,phase\n";
    for (const auto &r : trace) {
        out << format_double(r.t) << ',' << format_double(r.state.u) << ',' << format_double(r.state.w) << ','
            << format_double(r.state.theta) << ',' << format_double(r.state.q) << ','
            << format_double(r.input.thrust) << ',' << format_double(r.input.pitch_torque) << ','
            << format_double(r.f1_true) << ',' << format_double(r.f2_true) << ',' << format_double(r.f1_est)
            << ',' << format_double(r.f2_est) << ',' << to_string(r.phase) << '\n';
    }
}

inline void write_summary_csv(const std::vector<SegmentStats> &stats, std::ostream &out) {
    out << "segment,t_start,t_end,samples,mean_u,mean_abs_u,mean_w,mean_abs_f1_true,mean_abs_f2_true,"
           "std_f1_true,std_f2_true,rmse_f1,rmse_f2\n";
    for (const auto &s : stats) {
        out << s.name << ',' << format_double(s.t_start) << ',' << format_double(s.t_end) << ',' << s.samples << ','
            << format_double(s.mean_u) << ',' << format_double(s.mean_abs_u) << ',' << format_double(s.mean_w)
            << ',' << format_double(s.mean_abs_f1_true) << ',' << format_double(s.mean_abs_f2_true) << ','
            << format_double(s.std_f1_true) << ',' << format_double(s.std_f2_true) << ','
            << format_double(s.rmse_f1) << ',' << format_double(s.rmse_f2) << '\n';
    }
}

template <typename Writer, typename Value>
void write_file(const std::string &path, const Value &value, Writer writer) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::io, "cannot open '" + path + "' for writing");
    }
    writer(value, out);
    if (!out) {
        throw Error(ErrorKind::io, "write failed for '" + path + "'");
    }
}

} // namespace tailsitter::mission
