#pragma once
#include <cmath>
#include <complex>

#include "lab/errors.hpp"

namespace lab {

using cplx = std::complex<double>;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;
inline constexpr double kPi = 3.1415926535897932384626433832795;
inline constexpr double kBoundaryEps = 1e-12;

// wrap into [0, 2*pi)
inline double wrap_angle(double a) {
    double w = std::fmod(a, kTwoPi);
    return w < 0.0 ? w + kTwoPi : w;
}

// wrap into [-pi, pi)
inline double wrap_signed(double a) {
    return std::fmod(std::fmod(a, kTwoPi) + kTwoPi + kPi, kTwoPi) - kPi;
}

struct DiskPoint {
    double re = 0.0, im = 0.0;
    cplx z() const { return {re, im}; }
    static DiskPoint of(cplx p) {
        DiskPoint d{p.real(), p.imag()};
        if (std::norm(p) >= (1.0 - kBoundaryEps) * (1.0 - kBoundaryEps))
            throw LabError("DiskPoint: not an interior point");
        return d;
    }
};

struct BoundaryDirection {
    double angle = 0.0; // in [0, 2*pi)
    cplx z() const { return std::polar(1.0, angle); }
    static BoundaryDirection of(double a) { return {wrap_angle(a)}; }
};

// Arc on the boundary circle: directions within half_width of center_angle.
struct Arc {
    double center = 0.0;
    double half_width = 0.0; // in (0, pi]; pi means the full circle
};

inline bool arc_contains(const Arc& a, double angle) {
    return std::abs(wrap_signed(angle - a.center)) <= a.half_width;
}

inline bool arcs_intersect(const Arc& a, const Arc& b) {
    return std::abs(wrap_signed(a.center - b.center)) <= a.half_width + b.half_width;
}

// Disk-model isometry z -> (a z + b) / (conj(b) z + conj(a)), |a|^2 - |b|^2 = 1.
// Stored as four reals; the matrix sign is quotiented away after every product.
struct MoebiusMap {
    double a_re = 1.0, a_im = 0.0, b_re = 0.0, b_im = 0.0;

    cplx a() const { return {a_re, a_im}; }
    cplx b() const { return {b_re, b_im}; }
    double det() const { return a_re * a_re + a_im * a_im - b_re * b_re - b_im * b_im; }

    static MoebiusMap identity() { return {}; }

    static MoebiusMap from_ab(cplx a, cplx b) {
        MoebiusMap g{a.real(), a.imag(), b.real(), b.imag()};
        g.normalize();
        return g;
    }

    static MoebiusMap rotation(double theta) {
        // z -> e^{i theta} z, as a = e^{i theta/2}
        return from_ab(std::polar(1.0, 0.5 * theta), 0.0);
    }

    void normalize() {
        double d = det();
        if (!(d > 0.0)) throw LabError("MoebiusMap: determinant not positive");
        double s = std::sqrt(d);
        a_re /= s; a_im /= s; b_re /= s; b_im /= s;
        if (a_re < 0.0 || (a_re == 0.0 && a_im < 0.0)) {
            a_re = -a_re; a_im = -a_im; b_re = -b_re; b_im = -b_im;
        }
    }

    cplx act(cplx z) const {
        cplx A = a(), B = b();
        return (A * z + B) / (std::conj(B) * z + std::conj(A));
    }

    double act_angle(double angle) const {
        cplx w = act(std::polar(1.0, angle));
        return wrap_angle(std::atan2(w.imag(), w.real()));
    }

    MoebiusMap inverse() const { return {a_re, -a_im, -b_re, -b_im}; }

    double trace_abs() const { return 2.0 * std::abs(a_re); }

    bool is_identity(double tol = 1e-12) const {
        return std::abs(a_re - 1.0) < tol && std::abs(a_im) < tol &&
               std::abs(b_re) < tol && std::abs(b_im) < tol;
    }
};

inline MoebiusMap compose(const MoebiusMap& g, const MoebiusMap& h) {
    cplx ag = g.a(), bg = g.b(), ah = h.a(), bh = h.b();
    return MoebiusMap::from_ab(ag * ah + bg * std::conj(bh),
                               ag * bh + bg * std::conj(ah));
}

// 2 log(spectral radius); zero for non-hyperbolic maps.
inline double translation_length(const MoebiusMap& g) {
    double half_tr = 0.5 * g.trace_abs();
    if (half_tr <= 1.0) return 0.0;
    return 2.0 * std::acosh(half_tr);
}

} // namespace lab
