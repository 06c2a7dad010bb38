// Longitudinal rigid-body dynamics: translational system in body velocities
// (u, w) and the pitch subsystem (theta, q), with a PD pitch stabilizer.
#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>

#include "tailsitter/aero.hpp"
#include "tailsitter/error.hpp"
#include "tailsitter/numeric.hpp"

namespace tailsitter::dynamics {

using aero::AeroParams;
using aero::CoefficientTable;

template <typename Scalar = double>
struct BodyState {
    Scalar u{};     // m/s, body-x
    Scalar w{};     // m/s, body-z
    Scalar theta{}; // rad, wrapped to (-pi, pi]
    Scalar q{};     // rad/s

    bool is_finite() const {
        return std::isfinite(u) && std::isfinite(w) && std::isfinite(theta) && std::isfinite(q);
    }

    friend bool operator==(const BodyState &, const BodyState &) = default;
};

template <typename Scalar = double>
struct StateRate {
    Scalar du{};
    Scalar dw{};
    Scalar dtheta{};
    Scalar dq{};
};

template <typename Scalar = double>
struct ControlInput {
    Scalar thrust{};       // N, along body-x
    Scalar pitch_torque{}; // N m

    friend bool operator==(const ControlInput &, const ControlInput &) = default;
};

/// Thrust ceiling: twice the hover thrust.
inline double max_thrust(const AeroParams &params) { return 2.0 * params.mass * params.gravity; }

template <typename Scalar>
void validate(const ControlInput<Scalar> &input, const AeroParams &params) {
    if (!std::isfinite(input.thrust) || !std::isfinite(input.pitch_torque)) {
        throw Error(ErrorKind::invalid_argument, "control input must be finite");
    }
    if (input.thrust < Scalar(0) || input.thrust > Scalar(max_thrust(params))) {
        throw Error(ErrorKind::invalid_argument, "thrust outside [0, T_max]");
    }
}

template <typename Scalar>
StateRate<Scalar> derivatives(const BodyState<Scalar> &s, const ControlInput<Scalar> &input, const AeroParams &params,
                              const CoefficientTable &table) {
    const auto f = aero::specific_body_forces(s.u, s.w, s.q, params, table);
    const Scalar g = params.gravity;
    return {input.thrust / Scalar(params.mass) + f.f1 - g * std::sin(s.theta),
            f.f2 + g * std::cos(s.theta),
            s.q,
            input.pitch_torque / Scalar(params.inertia_y)};
}

namespace detail {

template <typename Scalar>
BodyState<Scalar> advance(const BodyState<Scalar> &s, const StateRate<Scalar> &k, Scalar h) {
    return {s.u + h * k.du, s.w + h * k.dw, s.theta + h * k.dtheta, s.q + h * k.dq};
}

inline void check_step(double dt) {
    if (!std::isfinite(dt) || dt <= 0.0) {
        throw Error(ErrorKind::invalid_argument, "time step must be finite and positive");
    }
}

// theta is not wrapped inside the stages so the stage states stay smooth
template <typename Scalar, typename InputAt>
BodyState<Scalar> rk4(const BodyState<Scalar> &s, InputAt &&input_at, const AeroParams &params,
                      const CoefficientTable &table, Scalar dt) {
    const Scalar half = dt / Scalar(2);
    const auto k1 = derivatives(s, input_at(s), params, table);
    const auto s2 = advance(s, k1, half);
    const auto k2 = derivatives(s2, input_at(s2), params, table);
    const auto s3 = advance(s, k2, half);
    const auto k3 = derivatives(s3, input_at(s3), params, table);
    const auto s4 = advance(s, k3, dt);
    const auto k4 = derivatives(s4, input_at(s4), params, table);
    const Scalar sixth = dt / Scalar(6);
    BodyState<Scalar> next{
        s.u + sixth * (k1.du + Scalar(2) * (k2.du + k3.du) + k4.du),
        s.w + sixth * (k1.dw + Scalar(2) * (k2.dw + k3.dw) + k4.dw),
        s.theta + sixth * (k1.dtheta + Scalar(2) * (k2.dtheta + k3.dtheta) + k4.dtheta),
        s.q + sixth * (k1.dq + Scalar(2) * (k2.dq + k3.dq) + k4.dq),
    };
    next.theta = wrap_angle(next.theta);
    return next;
}

} // namespace detail

/// Classical RK4 with the input held over the step (zero-order hold).
template <typename Scalar>
BodyState<Scalar> step_rk4(const BodyState<Scalar> &state, const ControlInput<Scalar> &input, const AeroParams &params,
                           const CoefficientTable &table, Scalar dt) {
    detail::check_step(static_cast<double>(dt));
    return detail::rk4(
        state, [&](const BodyState<Scalar> &) { return input; }, params, table, dt);
}

/// RK4 with a state-feedback policy evaluated at every stage (continuous-time loop).
template <typename Scalar, typename Policy>
    requires std::invocable<Policy &, const BodyState<Scalar> &>
BodyState<Scalar> step_rk4_closed_loop(const BodyState<Scalar> &state, Policy &&policy, const AeroParams &params,
                                       const CoefficientTable &table, Scalar dt) {
    detail::check_step(static_cast<double>(dt));
    return detail::rk4(state, policy, params, table, dt);
}

struct AttitudeGains {
    double kp = 0.4;           // N m / rad
    double kd = 0.2;           // N m s / rad
    double torque_limit = 0.5; // N m

    void validate() const {
        if (!(kp > 0.0) || !(kd > 0.0) || !(torque_limit > 0.0) || !std::isfinite(kp) || !std::isfinite(kd) ||
            !std::isfinite(torque_limit)) {
            throw Error(ErrorKind::invalid_argument, "attitude gains must be finite and positive");
        }
    }
};

/// PD pitch law on the shortest angular error, saturated to +/- torque_limit.
template <typename Scalar>
Scalar attitude_torque(Scalar theta, Scalar q, Scalar theta_ref, const AttitudeGains &gains) {
    const Scalar error = wrap_angle(theta_ref - theta);
    const Scalar tau = Scalar(gains.kp) * error - Scalar(gains.kd) * q;
    return std::clamp(tau, Scalar(-gains.torque_limit), Scalar(gains.torque_limit));
}

} // namespace tailsitter::dynamics
