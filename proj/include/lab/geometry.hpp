#pragma once
#include <cmath>

#include "lab/mobius.hpp"

namespace lab {

inline double dist0(cplx z) {
    double r2 = std::norm(z);
    return std::acosh(1.0 + 2.0 * r2 / (1.0 - r2));
}

inline double hyp_dist(cplx p, cplx q) {
    return std::acosh(1.0 + 2.0 * std::norm(p - q) /
                                ((1.0 - std::norm(p)) * (1.0 - std::norm(q))));
}

// isometry moving x to the origin (a pure "translation" along [0,x])
inline MoebiusMap chart_to_origin(cplx x) {
    double s = 1.0 / std::sqrt(1.0 - std::norm(x));
    return MoebiusMap::from_ab(cplx{s, 0.0}, -x * s);
}

inline double chart_angle(cplx x, cplx p) {
    cplx w = chart_to_origin(x).act(p);
    return std::atan2(w.imag(), w.real());
}

// boundary endpoint of the geodesic ray from x through p
inline double proj_angle(cplx x, cplx p) {
    MoebiusMap T = chart_to_origin(x);
    double a = chart_angle(x, p);
    cplx xi = T.inverse().act(std::polar(1.0, a));
    return wrap_angle(std::atan2(xi.imag(), xi.real()));
}

// horospherical distance from x to y relative to boundary direction v
inline double busemann(double v_angle, cplx x, cplx y) {
    cplx v = std::polar(1.0, v_angle);
    return (std::log(1.0 - std::norm(y)) - std::log(std::norm(y - v))) -
           (std::log(1.0 - std::norm(x)) - std::log(std::norm(x - v)));
}

// Gromov products: interior/interior by the defining formula, boundary cases by
// the closed form at the origin transported with the visual comparison identity.
inline double gromov_product(cplx a, cplx b, cplx x) {
    return 0.5 * (hyp_dist(x, a) + hyp_dist(x, b) - hyp_dist(a, b));
}

inline double gromov_product(double v_angle, double w_angle, cplx x) {
    cplx v = std::polar(1.0, v_angle), w = std::polar(1.0, w_angle);
    double chord = std::abs(v - w);
    if (chord < 1e-15)
        throw DegenerateBoundaryPair("gromov_product: coincident boundary directions");
    double at0 = -std::log(0.5 * chord);
    return at0 - 0.5 * (busemann(v_angle, cplx{0, 0}, x) + busemann(w_angle, cplx{0, 0}, x));
}

inline double gromov_product(cplx a, double w_angle, cplx x) {
    return 0.5 * (hyp_dist(x, a) + busemann(w_angle, x, a));
}

inline double gromov_product(double v_angle, cplx b, cplx x) {
    return gromov_product(b, v_angle, x);
}

// visual metric d_x(v,w) = exp(-(v,w)_x); d_0 is half the chord length
inline double visual_dist(double v_angle, double w_angle, cplx x) {
    cplx v = std::polar(1.0, v_angle), w = std::polar(1.0, w_angle);
    double chord = std::abs(v - w);
    if (chord == 0.0) return 0.0;
    return std::exp(-gromov_product(v_angle, w_angle, x));
}

// metric derivative of g on (boundary, d_x)
inline double conformal_factor(const MoebiusMap& g, double v_angle, cplx x) {
    return std::exp(busemann(v_angle, x, g.inverse().act(x)));
}

// distance from z to the geodesic ray [0, 1) along the positive real axis
inline double ray_point_dist(cplx z) {
    if (z.real() <= 0.0) return dist0(z);
    return std::asinh(2.0 * std::abs(z.imag()) / (1.0 - std::norm(z)));
}

// Shadow of the ball B(y,R) seen from x: directions v whose ray [x,v) meets the
// ball. Computed by bisection on the angle of the ray's closest approach to y.
inline Arc shadow_arc(cplx x, cplx y, double R) {
    if (hyp_dist(x, y) < 1e-9)
        throw CoincidentPoints("shadow_arc: base point and target coincide");
    MoebiusMap T = chart_to_origin(x);
    cplx y0 = T.act(y);
    double rho = dist0(y0);
    if (rho <= R) return Arc{0.0, kPi};
    double c = std::atan2(y0.imag(), y0.real());
    auto member = [&](double u) {
        return ray_point_dist(y0 * std::polar(1.0, -(c + u))) <= R;
    };
    double lo = 0.0, hi = kPi; // member(0) holds, member(pi) fails (rho > R)
    while (hi - lo > 1e-10) {
        double mid = 0.5 * (lo + hi);
        (member(mid) ? lo : hi) = mid;
    }
    double hw = 0.5 * (lo + hi);
    MoebiusMap Ti = T.inverse();
    cplx e1 = Ti.act(std::polar(1.0, c - hw));
    cplx e2 = Ti.act(std::polar(1.0, c + hw));
    double a1 = std::atan2(e1.imag(), e1.real());
    double a2 = std::atan2(e2.imag(), e2.real());
    double w = wrap_angle(a2 - a1);
    return Arc{wrap_angle(a1 + 0.5 * w), 0.5 * w};
}

} // namespace lab
