// Longitudinal aerodynamics of a tail-sitter wing.
//
// Body frame convention: u along body-x (thrust axis), w along body-z.
// Angle of attack is atan2(w, u); airspeed is the body-frame velocity norm.
// The specific-force terms returned here are the aerodynamic accelerations
// plus the q-coupling terms, so that
//
//     u' = T/m + f1 - g sin(theta)
//     w' =       f2 + g cos(theta)
//
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "tailsitter/error.hpp"
#include "tailsitter/numeric.hpp"

namespace tailsitter::aero {

struct AeroParams {
    double mass = 1.2;          // kg
    double inertia_y = 0.05;    // kg m^2
    double wing_area = 0.24;    // m^2
    double air_density = 1.225; // kg/m^3
    double gravity = 9.81;      // m/s^2

    void validate() const {
        const auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
        if (!positive(mass) || !positive(inertia_y) || !positive(wing_area) ||
            !positive(air_density) || !positive(gravity)) {
            throw Error(ErrorKind::invalid_argument, "aero parameters must be finite and strictly positive");
        }
    }
};

template <typename Scalar = double>
struct Coefficients {
    Scalar cl;
    Scalar cd;
};

template <typename Scalar = double>
struct LiftDrag {
    Scalar lift; // N
    Scalar drag; // N
};

template <typename Scalar = double>
struct ForcePair {
    Scalar f1; // m/s^2, body-x
    Scalar f2; // m/s^2, body-z
};

/// Tolerance used when a table is built or loaded without an explicit one.
inline constexpr double kDefaultSymmetryTolerance = 1e-12;

/**
 * @brief Lift and drag coefficients over the full angle-of-attack circle.
 *
 * Samples live on a strictly increasing degree grid from -180 to 180.
 * Evaluation is piecewise linear and 2*pi periodic. Construction checks the
 * symmetric-airfoil invariants (cl odd, cd even, cd >= 0, cl(0) = cl(pi) = 0)
 * so every table in circulation satisfies them.
 */
class CoefficientTable {
public:
    /// Classical 360-degree flat plate: cl = sin(2a), cd = cd0 + 2 sin^2(a).
    static CoefficientTable flat_plate(double cd0 = 0.02, int step_deg = 1) {
        if (step_deg <= 0 || 180 % step_deg != 0) {
            throw Error(ErrorKind::invalid_argument, "flat plate step must divide 180 degrees");
        }
        if (!std::isfinite(cd0) || cd0 < 0.0) {
            throw Error(ErrorKind::invalid_argument, "cd0 must be finite and non-negative");
        }
        std::vector<double> deg, cl, cd;
        for (int a = -180; a <= 180; a += step_deg) {
            const double rad = radians_of(a);
            const double s = std::sin(rad);
            deg.push_back(a);
            cl.push_back(std::sin(2.0 * rad));
            cd.push_back(cd0 + 2.0 * s * s);
        }
        // sin(2*pi) and friends are ~1e-16, not zero; pin the exact zeros of the model
        for (std::size_t i = 0; i < deg.size(); ++i) {
            if (static_cast<int>(deg[i]) % 90 == 0) {
                cl[i] = 0.0;
            }
        }
        return from_degrees(std::move(deg), std::move(cl), std::move(cd));
    }

    static CoefficientTable from_degrees(std::vector<double> alpha_deg, std::vector<double> cl,
                                         std::vector<double> cd,
                                         double tolerance = kDefaultSymmetryTolerance) {
        CoefficientTable table;
        table.alpha_deg_ = std::move(alpha_deg);
        table.cl_ = std::move(cl);
        table.cd_ = std::move(cd);
        table.build_radians();
        table.validate(tolerance);
        return table;
    }

    template <typename Scalar = double>
    Coefficients<Scalar> evaluate(Scalar alpha) const {
        if (!std::isfinite(alpha)) {
            throw Error(ErrorKind::invalid_argument, "angle of attack must be finite");
        }
        const Scalar a = wrap_into_grid(alpha);
        // first grid point strictly greater than a, clamped to a valid cell
        auto upper = std::upper_bound(alpha_rad_.begin(), alpha_rad_.end(), static_cast<double>(a));
        std::size_t hi = static_cast<std::size_t>(upper - alpha_rad_.begin());
        hi = std::clamp<std::size_t>(hi, 1, alpha_rad_.size() - 1);
        const std::size_t lo = hi - 1;
        const Scalar x0 = alpha_rad_[lo];
        const Scalar x1 = alpha_rad_[hi];
        const Scalar t = (a - x0) / (x1 - x0);
        return {Scalar(cl_[lo]) + t * (Scalar(cl_[hi]) - Scalar(cl_[lo])),
                Scalar(cd_[lo]) + t * (Scalar(cd_[hi]) - Scalar(cd_[lo]))};
    }

    const std::vector<double> &alpha_deg() const noexcept { return alpha_deg_; }
    const std::vector<double> &alpha_rad() const noexcept { return alpha_rad_; }
    const std::vector<double> &cl() const noexcept { return cl_; }
    const std::vector<double> &cd() const noexcept { return cd_; }
    std::size_t size() const noexcept { return alpha_deg_.size(); }

    double min_drag() const { return *std::min_element(cd_.begin(), cd_.end()); }

private:
    CoefficientTable() = default;

    static double radians_of(double deg) {
        if (deg == 180.0) return kPi;
        if (deg == -180.0) return -kPi;
        return deg * (kPi / 180.0);
    }

    template <typename Scalar>
    static Scalar wrap_into_grid(Scalar alpha) {
        const Scalar pi = std::numbers::pi_v<Scalar>;
        const Scalar two_pi = Scalar(2) * pi;
        if (alpha >= -pi && alpha <= pi) {
            return alpha;
        }
        Scalar a = alpha - two_pi * std::floor((alpha + pi) / two_pi);
        return std::clamp(a, -pi, pi);
    }

    void build_radians() {
        alpha_rad_.resize(alpha_deg_.size());
        std::transform(alpha_deg_.begin(), alpha_deg_.end(), alpha_rad_.begin(), radians_of);
    }

    void validate(double tol) const {
        const std::size_t n = alpha_deg_.size();
        if (n < 3 || cl_.size() != n || cd_.size() != n) {
            throw Error(ErrorKind::invalid_argument, "coefficient table needs >= 3 rows with matching columns");
        }
        if (alpha_deg_.front() != -180.0 || alpha_deg_.back() != 180.0) {
            throw Error(ErrorKind::invalid_argument, "coefficient grid must span [-180, 180] degrees");
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::isfinite(alpha_deg_[i]) || !std::isfinite(cl_[i]) || !std::isfinite(cd_[i])) {
                throw Error(ErrorKind::invalid_argument, "coefficient table contains non-finite values");
            }
            if (i > 0 && !(alpha_deg_[i] > alpha_deg_[i - 1])) {
                throw Error(ErrorKind::invalid_argument, "coefficient grid must be strictly increasing");
            }
            if (cd_[i] < 0.0) {
                throw Error(ErrorKind::invalid_argument, "drag coefficient must be non-negative");
            }
        }
        const auto fail = [](const std::string &what, double deg) {
            std::ostringstream msg;
            msg << what << " at alpha = " << deg << " deg";
            throw Error(ErrorKind::invalid_argument, msg.str());
        };
        if (std::abs(cl_.front() - cl_.back()) > tol || std::abs(cd_.front() - cd_.back()) > tol) {
            fail("table is not periodic", 180.0);
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double a = alpha_rad_[i];
            const auto mirrored = evaluate(-a);
            if (std::abs(mirrored.cl + cl_[i]) > tol) fail("lift coefficient is not odd", alpha_deg_[i]);
            if (std::abs(mirrored.cd - cd_[i]) > tol) fail("drag coefficient is not even", alpha_deg_[i]);
        }
        if (std::abs(evaluate(0.0).cl) > tol) fail("lift coefficient is not zero", 0.0);
        if (std::abs(evaluate(kPi).cl) > tol) fail("lift coefficient is not zero", 180.0);
    }

    std::vector<double> alpha_deg_;
    std::vector<double> alpha_rad_;
    std::vector<double> cl_;
    std::vector<double> cd_;
};

// --- coefficient CSV: header "alpha_deg,cl,cd" ---

inline void write_coefficient_csv(const CoefficientTable &table, std::ostream &out) {
    out << "alpha_deg,cl,cd\n";
    for (std::size_t i = 0; i < table.size(); ++i) {
        out << format_double(table.alpha_deg()[i]) << ',' << format_double(table.cl()[i]) << ','
            << format_double(table.cd()[i]) << '\n';
    }
}

inline void save_coefficient_csv(const CoefficientTable &table, const std::string &path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::io, "cannot open '" + path + "' for writing");
    }
    write_coefficient_csv(table, out);
    if (!out) {
        throw Error(ErrorKind::io, "write failed for '" + path + "'");
    }
}

inline CoefficientTable read_coefficient_csv(std::istream &in, double tolerance = kDefaultSymmetryTolerance) {
    std::string line;
    if (!std::getline(in, line)) {
        throw Error(ErrorKind::format, "empty coefficient file");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "alpha_deg,cl,cd") {
        throw Error(ErrorKind::format, "coefficient file header must be 'alpha_deg,cl,cd'");
    }
    std::vector<double> deg, cl, cd;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto c1 = line.find(',');
        const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
        double a = 0, l = 0, d = 0;
        if (c2 == std::string::npos || line.find(',', c2 + 1) != std::string::npos ||
            !parse_double(std::string_view(line).substr(0, c1), a) ||
            !parse_double(std::string_view(line).substr(c1 + 1, c2 - c1 - 1), l) ||
            !parse_double(std::string_view(line).substr(c2 + 1), d)) {
            throw Error(ErrorKind::format, "malformed coefficient row at line " + std::to_string(line_no));
        }
        deg.push_back(a);
        cl.push_back(l);
        cd.push_back(d);
    }
    try {
        return CoefficientTable::from_degrees(std::move(deg), std::move(cl), std::move(cd), tolerance);
    } catch (const Error &e) {
        throw Error(ErrorKind::format, std::string("rejected coefficient table: ") + e.what());
    }
}

inline CoefficientTable load_coefficient_csv(const std::string &path,
                                             double tolerance = kDefaultSymmetryTolerance) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::io, "cannot open '" + path + "'");
    }
    return read_coefficient_csv(in, tolerance);
}

// --- force model ---

/// atan2(w, u) in (-pi, pi]; zero at zero airspeed.
template <typename Scalar>
Scalar angle_of_attack(Scalar u, Scalar w) {
    if (u == Scalar(0) && w == Scalar(0)) {
        return Scalar(0);
    }
    const Scalar alpha = std::atan2(w, u);
    // atan2(-0.0, negative) is -pi; fold onto the half-open interval
    return alpha == -std::numbers::pi_v<Scalar> ? std::numbers::pi_v<Scalar> : alpha;
}

template <typename Scalar>
Scalar airspeed(Scalar u, Scalar w) {
    return std::hypot(u, w);
}

template <typename Scalar>
Coefficients<Scalar> coefficients(const CoefficientTable &table, Scalar alpha) {
    return table.evaluate(alpha);
}

/// L = 1/2 cl V^2 rho S, D = 1/2 cd V^2 rho S.
template <typename Scalar>
LiftDrag<Scalar> lift_drag(Scalar v, Scalar alpha, const AeroParams &params, const CoefficientTable &table) {
    if (!std::isfinite(v) || v < Scalar(0)) {
        throw Error(ErrorKind::invalid_argument, "airspeed must be finite and non-negative");
    }
    const auto c = table.evaluate(alpha);
    const Scalar dynamic = Scalar(0.5) * v * v * Scalar(params.air_density) * Scalar(params.wing_area);
    return {c.cl * dynamic, c.cd * dynamic};
}

template <typename Scalar>
ForcePair<Scalar> specific_body_forces(Scalar u, Scalar w, Scalar q, const AeroParams &params,
                                       const CoefficientTable &table) {
    const Scalar alpha = angle_of_attack(u, w);
    const auto [lift, drag] = lift_drag(airspeed(u, w), alpha, params, table);
    const Scalar ca = std::cos(alpha);
    const Scalar sa = std::sin(alpha);
    const Scalar m = params.mass;
    return {(-drag * ca + lift * sa) / m - q * w, (-drag * sa - lift * ca) / m + q * u};
}

} // namespace tailsitter::aero
