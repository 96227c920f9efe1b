#pragma once
#include <cmath>
#include <functional>
#include <random>
#include <utility>
#include <vector>

#include "lab/engine.hpp"

namespace lab {

// ---- boundary representation at base point x, quadrature on a fixed partition ----

// (pi(g) xi)(v) = e^{(alpha/2) B_v(x, gx)} xi(g^{-1} v), sampled at bin centers
// with nearest-bin lookup for the pullback
inline StepFunction pi_apply(const MoebiusMap& g, const StepFunction& xi, DiskPoint x,
                             const BinnedMeasure& mu, double alpha) {
    if (!(xi.part == mu.part)) throw LabError("pi_apply: partition mismatch");
    cplx gx = g.act(x.z());
    MoebiusMap gi = g.inverse();
    StepFunction out{mu.part, std::vector<double>(xi.values.size(), 0.0)};
    for (int b = 0; b < mu.part.bin_count; ++b) {
        double c = mu.part.center(b);
        double mult = std::exp(0.5 * alpha * busemann(c, x.z(), gx));
        out.values[b] = mult * xi.values[mu.part.bin_of(gi.act_angle(c))];
    }
    return out;
}

// spherical-function value phi_x(g) = integral of the pi(g) multiplier
inline double harish_chandra(const MoebiusMap& g, DiskPoint x, const BinnedMeasure& mu,
                             double alpha) {
    cplx gx = g.act(x.z());
    double s = 0.0;
    for (int b = 0; b < mu.part.bin_count; ++b)
        s += std::exp(0.5 * alpha * busemann(mu.part.center(b), x.z(), gx)) * mu.masses[b];
    return s;
}

// deterministic bank of test step functions with values in [-1, 1]
inline std::vector<StepFunction> random_step_functions(BoundaryPartition part, int count,
                                                       unsigned long long seed) {
    std::mt19937_64 rng(seed);
    std::vector<StepFunction> out;
    for (int k = 0; k < count; ++k) {
        StepFunction f{part, std::vector<double>(static_cast<size_t>(part.bin_count))};
        for (double& v : f.values)
            v = 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
        out.push_back(std::move(f));
    }
    return out;
}

struct IntertwinerReport {
    double sup_defect = 0.0;
    std::vector<double> defects; // per (gamma, test function), gamma-major
};

// U: L2(mu_x) -> L2(mu_y), (U f)(v) = e^{-(alpha/2) B_v(x,y)} f(v); reports the
// worst relative defect of U pi_x(gamma) against pi_y(gamma) U
inline IntertwinerReport intertwiner_check(DiskPoint x, DiskPoint y,
                                           const BinnedMeasure& mu_x,
                                           const BinnedMeasure& mu_y,
                                           const std::vector<MoebiusMap>& gammas,
                                           double alpha,
                                           std::vector<StepFunction> xis = {},
                                           unsigned long long seed = 20260818ULL) {
    if (!(mu_x.part == mu_y.part)) throw LabError("intertwiner_check: partition mismatch");
    BoundaryPartition part = mu_x.part;
    if (xis.empty()) xis = random_step_functions(part, 10, seed);

    std::vector<double> umult(static_cast<size_t>(part.bin_count));
    for (int b = 0; b < part.bin_count; ++b)
        umult[b] = std::exp(-0.5 * alpha * busemann(part.center(b), x.z(), y.z()));
    auto apply_u = [&](const StepFunction& f) {
        StepFunction g = f;
        for (int b = 0; b < part.bin_count; ++b) g.values[b] *= umult[b];
        return g;
    };

    IntertwinerReport rep;
    for (const auto& g : gammas) {
        for (const auto& xi : xis) {
            double nx = l2_norm(xi, mu_x);
            if (!(nx > 0.0)) throw LabError("intertwiner_check: zero test function");
            StepFunction lhs = pi_apply(g, apply_u(xi), y, mu_y, alpha);
            StepFunction rhs = apply_u(pi_apply(g, xi, x, mu_x, alpha));
            double acc = 0.0;
            for (int b = 0; b < part.bin_count; ++b) {
                double dv = lhs.values[b] - rhs.values[b];
                acc += dv * dv * mu_y.masses[b];
            }
            double defect = std::sqrt(acc) / nx;
            rep.defects.push_back(defect);
            rep.sup_defect = std::max(rep.sup_defect, defect);
        }
    }
    return rep;
}

// ---- cones over boundary sets and the admissible side functions ----

struct ConeSet {
    std::vector<Arc> arcs;  // base set U on the boundary, a finite union of arcs
    double radius = 1.0;    // thickening radius of the cone
};

// 1 if the ball B(y, R) casts a shadow (from x) meeting U, else 0
inline int cone_indicator(DiskPoint y, const ConeSet& U, double R, DiskPoint x) {
    if (std::abs(y.z()) >= 1.0) throw OutOfRange("cone_indicator: y must be inside the disk");
    Arc sh = shadow_arc(x.z(), y.z(), R); // throws CoincidentPoints when y == x
    for (const Arc& a : U.arcs)
        if (arcs_intersect(sh, a)) return 1;
    return 0;
}

struct SideFunction {
    enum class Kind { Constant, Cone, Radial };
    Kind kind = Kind::Constant;
    double value = 1.0;
    ConeSet cone;
    std::function<double(double)> radial; // of the displacement d(x, gx)

    static SideFunction constant(double c) {
        SideFunction f;
        f.kind = Kind::Constant;
        f.value = c;
        return f;
    }
    static SideFunction cone_set(ConeSet U) {
        SideFunction f;
        f.kind = Kind::Cone;
        f.cone = std::move(U);
        return f;
    }
    static SideFunction radial_profile(std::function<double(double)> r) {
        SideFunction f;
        f.kind = Kind::Radial;
        f.radial = std::move(r);
        return f;
    }
    double eval(DiskPoint x, DiskPoint gx, double d) const {
        switch (kind) {
            case Kind::Constant: return value;
            case Kind::Cone: return cone_indicator(gx, cone, cone.radius, x);
            case Kind::Radial: return radial(d);
        }
        return 0.0;
    }
};

// ---- weighted matrix coefficients over annuli and their limit form ----

// m_n(f; xi, eta) = (1/|C_n|) sum_{g in C_n} f(gx) <pi(g) xi, eta> / phi(g)
inline double mn_coefficient(const SideFunction& f, const StepFunction& xi,
                             const StepFunction& eta, const AnnulusSpec& spec,
                             const OrbitCatalog& cat, const BinnedMeasure& mu,
                             double alpha) {
    auto idx = annulus(cat, spec);
    if (idx.empty()) throw EmptyAnnulus("mn_coefficient: empty annulus");
    DiskPoint x = cat.base_point;
    BoundaryPartition part = mu.part;
    double acc = 0.0;
    for (size_t i : idx) {
        const OrbitPoint& p = cat.points[i];
        double fv = f.eval(x, DiskPoint::of(p.image), p.dist);
        if (fv == 0.0) continue;
        MoebiusMap gi = p.map.inverse();
        double num = 0.0, phi = 0.0;
        for (int b = 0; b < part.bin_count; ++b) {
            double c = part.center(b);
            double e2 = std::exp(0.5 * alpha * busemann(c, x.z(), p.image));
            phi += e2 * mu.masses[b];
            num += e2 * xi.values[part.bin_of(gi.act_angle(c))] * eta.values[b] * mu.masses[b];
        }
        acc += fv * num / phi;
    }
    return acc / static_cast<double>(idx.size());
}

// the claimed limit: (int xi dmu / |mu|) * (1/|mu|) * int f eta dmu
inline double limit_coefficient(const StepFunction& f_boundary, const StepFunction& xi,
                                const StepFunction& eta, const BinnedMeasure& mu) {
    double fe = 0.0;
    for (int b = 0; b < mu.part.bin_count; ++b)
        fe += f_boundary.values[b] * eta.values[b] * mu.masses[b];
    return integrate(xi, mu) / mu.total * fe / mu.total;
}

// sup over bin centers of the annulus-averaged multiplier kernels
inline std::pair<double, double> fn_hn_supnorms(const AnnulusSpec& spec,
                                                const OrbitCatalog& cat,
                                                const BinnedMeasure& mu, double alpha) {
    auto idx = annulus(cat, spec);
    if (idx.empty()) throw EmptyAnnulus("fn_hn_supnorms: empty annulus");
    cplx x = cat.base_point.z();
    int bins = mu.part.bin_count;
    std::vector<double> F(static_cast<size_t>(bins), 0.0), H(F);
    std::vector<double> e2(F.size()), e1(F.size());
    for (size_t i : idx) {
        const cplx gx = cat.points[i].image;
        double phi = 0.0, den = 0.0;
        for (int b = 0; b < bins; ++b) {
            double beta = busemann(mu.part.center(b), x, gx);
            e2[b] = std::exp(0.5 * alpha * beta);
            e1[b] = std::exp(alpha * beta);
            phi += e2[b] * mu.masses[b];
            den += e1[b] * mu.masses[b];
        }
        for (int b = 0; b < bins; ++b) {
            F[b] += e2[b] / phi;
            H[b] += e1[b] / den;
        }
    }
    double k = static_cast<double>(idx.size());
    double fmax = 0.0, hmax = 0.0;
    for (int b = 0; b < bins; ++b) {
        fmax = std::max(fmax, F[b] / k);
        hmax = std::max(hmax, H[b] / k);
    }
    return {fmax, hmax};
}

// ---- Poisson kernel, its powers, and the harmonic companion measure ----

inline double poisson_eval(DiskPoint y, BoundaryDirection v, DiskPoint x, double alpha) {
    return std::exp(alpha * busemann(v.angle, x.z(), y.z()));
}

// (P_lambda f)(y) = int P(y, v)^{lambda + 1/2} f(v) dmu(v)
inline double p_lambda_apply(double lambda, const StepFunction& f, DiskPoint y,
                             DiskPoint x, const BinnedMeasure& mu, double alpha) {
    if (!(f.part == mu.part)) throw LabError("p_lambda_apply: partition mismatch");
    double s = 0.0;
    double p = alpha * (lambda + 0.5);
    for (int b = 0; b < mu.part.bin_count; ++b)
        s += std::exp(p * busemann(mu.part.center(b), x.z(), y.z())) * f.values[b] * mu.masses[b];
    return s;
}

// normalized sqrt-Poisson reweighting of mu as seen from y
inline BinnedMeasure nu_measure(DiskPoint y, const BinnedMeasure& mu, DiskPoint x,
                                double alpha) {
    std::vector<double> w(mu.masses.size());
    double tot = 0.0;
    for (int b = 0; b < mu.part.bin_count; ++b) {
        w[b] = std::exp(0.5 * alpha * busemann(mu.part.center(b), x.z(), y.z())) * mu.masses[b];
        tot += w[b];
    }
    if (!(tot > 0.0)) throw LabError("nu_measure: empty measure");
    for (double& v : w) v /= tot;
    return BinnedMeasure::from_masses(mu.part, std::move(w), mu.degenerate);
}

// ---- distance-weight kernel family along an approach path to the boundary ----

enum class DwKernel { SqrtPoisson, Poisson };

struct DwRow {
    double t = 0.0;        // path parameter (hyperbolic distance from x)
    double tail = 0.0;     // kernel mass outside the visual ball B(v0, r0)
    double kbar_err = 0.0; // |K f - f(v0)| for the smooth probe f
    double total_dev = 0.0;
};

struct DwReport {
    DwKernel kind = DwKernel::SqrtPoisson;
    double v0 = 0.0;
    double r0 = 0.0;
    double mu_frac_outside = 0.0; // ambient mass beyond r0: how hard the test is
    std::vector<DwRow> rows;
    bool nonneg = true;
    double max_total_dev = 0.0;
    bool tails_decreasing = true;
    double final_tail = 0.0;
    double final_kbar_err = 0.0;
};

inline cplx attracting_fixed_point(const MoebiusMap& g, int iters = 120) {
    cplx z{0.0, 0.0};
    for (int i = 0; i < iters; ++i) z = g.act(z);
    return z;
}

// points at hyperbolic distance t from x along the ray toward `target`
inline std::vector<cplx> radial_path(cplx x, cplx target, const std::vector<double>& ts) {
    double ca = chart_angle(x, target);
    MoebiusMap Ti = chart_to_origin(x).inverse();
    std::vector<cplx> out;
    for (double t : ts) out.push_back(Ti.act(std::tanh(0.5 * t) * std::polar(1.0, ca)));
    return out;
}

inline DwReport dw_family_check(const EngineModel& M, DwKernel kind, double v0, double r0,
                                const std::vector<cplx>& path) {
    if (!(r0 > 0.0)) throw OutOfRange("dw_family_check: r0 must be positive");
    if (path.empty()) throw LabError("dw_family_check: empty approach path");
    DwReport rep;
    rep.kind = kind;
    rep.v0 = wrap_angle(v0);
    rep.r0 = r0;

    size_t na = M.natoms();
    cplx ev0 = std::polar(1.0, rep.v0);
    double b00 = std::log(1.0 - std::norm(M.x)) - std::log(std::norm(M.x - ev0));
    std::vector<char> outside(na, 0);
    std::vector<double> fprobe(na);
    double wout = 0.0, wall = 0.0;
    for (size_t i = 0; i < na; ++i) {
        double chord = std::abs(M.vz_at[i] - ev0);
        double dx = 0.0;
        if (chord > 0.0) {
            double gp0 = -std::log(0.5 * chord);
            dx = std::exp(-(gp0 - 0.5 * (M.cx_at[i] + b00)));
        }
        outside[i] = dx >= r0 ? 1 : 0;
        fprobe[i] = 1.0 + 0.5 * std::cos(M.atoms.ang[i] - rep.v0);
        wall += M.awt[i];
        if (outside[i]) wout += M.awt[i];
    }
    rep.mu_frac_outside = wout / wall;

    double prev_tail = 0.0;
    bool first = true;
    for (size_t pi = 0; pi < path.size(); ++pi) {
        cplx y = path[pi];
        if (std::abs(y) >= 1.0) throw OutOfRange("dw_family_check: path leaves the disk");
        auto [wa, beta] = M.atom_weights(y);
        std::vector<double>& k = wa;
        if (kind == DwKernel::Poisson)
            for (size_t i = 0; i < na; ++i) k[i] = std::exp(M.alpha * beta[i]) * M.awt[i];
        double tot = 0.0;
        for (double v : k) {
            if (v < 0.0) rep.nonneg = false;
            tot += v;
        }
        if (!(tot > 0.0)) throw LabError("dw_family_check: kernel vanished along the path");
        double tail = 0.0, kbar = 0.0, renorm = 0.0;
        for (size_t i = 0; i < na; ++i) {
            double kn = k[i] / tot;
            renorm += kn;
            if (outside[i]) tail += kn;
            kbar += kn * fprobe[i];
        }
        DwRow row;
        row.t = hyp_dist(M.x, y);
        row.tail = tail;
        row.kbar_err = std::abs(kbar - 1.5); // probe value at v0 is exactly 3/2
        row.total_dev = std::abs(renorm - 1.0);
        rep.max_total_dev = std::max(rep.max_total_dev, row.total_dev);
        if (!first && !(tail < prev_tail)) rep.tails_decreasing = false;
        prev_tail = tail;
        first = false;
        rep.rows.push_back(row);
    }
    rep.final_tail = rep.rows.back().tail;
    rep.final_kbar_err = rep.rows.back().kbar_err;
    return rep;
}

} // namespace lab
