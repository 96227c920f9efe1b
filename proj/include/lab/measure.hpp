#pragma once
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "lab/alpha.hpp"
#include "lab/geometry.hpp"
#include "lab/orbit.hpp"
#include "lab/partition.hpp"

namespace lab {

// flat view of the non-identity catalog points used as measure atoms,
// in catalog order (distance, then word order)
struct AtomSet {
    cplx x{0.0, 0.0};
    BoundaryPartition part;
    std::vector<std::string> word;
    std::vector<double> ang;  // boundary direction of the ray x -> image
    std::vector<double> d;
    std::vector<cplx> img;
    std::vector<int> bin;

    size_t size() const { return ang.size(); }
};

inline AtomSet make_atoms(const OrbitCatalog& cat, BoundaryPartition part) {
    AtomSet A;
    A.x = cat.base_point.z();
    A.part = part;
    for (const auto& p : cat.points) {
        if (p.word.empty()) continue;
        double a = proj_angle(A.x, p.image);
        A.word.push_back(p.word);
        A.ang.push_back(a);
        A.d.push_back(p.dist);
        A.img.push_back(p.image);
        A.bin.push_back(part.bin_of(a));
    }
    return A;
}

inline std::vector<double> bin_atoms(const AtomSet& A, const std::vector<double>& wts) {
    std::vector<double> m(static_cast<size_t>(A.part.bin_count), 0.0);
    for (size_t i = 0; i < A.size(); ++i) m[static_cast<size_t>(A.bin[i])] += wts[i];
    return m;
}

// weights of the orbital sum re-based at y: exp(-s d(y, img)); the atom at y
// itself (if any) is dropped, as is everything at or beyond maxcut
inline std::vector<double> rebase_weights(const AtomSet& A, cplx y, double s,
                                          double maxcut = -1.0) {
    std::vector<double> w(A.size(), 0.0);
    for (size_t i = 0; i < A.size(); ++i) {
        double db = hyp_dist(y, A.img[i]);
        if (db <= 1e-12) continue;
        if (maxcut > 0.0 && db >= maxcut) continue;
        w[i] = std::exp(-s * db);
    }
    return w;
}

struct PattersonOptions {
    double s_offset = 0.05;
    double depth = 0.0; // 0: catalog depth
};

inline BinnedMeasure patterson_measure(const OrbitCatalog& cat, double alpha,
                                       BoundaryPartition part, PattersonOptions opt = {}) {
    if (cat.points.empty()) throw EmptyCatalog("patterson_measure: catalog is empty");
    if (cat.points.size() == 1) {
        // identity-only catalog: unit mass at the base point's own direction
        cplx x = cat.base_point.z();
        int b = std::abs(x) > 1e-12 ? part.bin_of(std::atan2(x.imag(), x.real())) : 0;
        std::vector<double> w(static_cast<size_t>(part.bin_count), 0.0);
        w[static_cast<size_t>(b)] = 1.0;
        return BinnedMeasure::from_masses(part, w, true);
    }
    double depth = opt.depth > 0.0 ? opt.depth : cat.max_dist;
    AtomSet A = make_atoms(cat, part);
    std::vector<double> w(A.size(), 0.0);
    double s = alpha + opt.s_offset;
    size_t kept = 0;
    for (size_t i = 0; i < A.size(); ++i)
        if (A.d[i] < depth) {
            w[i] = std::exp(-s * A.d[i]);
            ++kept;
        }
    if (kept == 0) throw EmptyCatalog("patterson_measure: no orbit points below depth");
    return BinnedMeasure::from_masses(part, bin_atoms(A, w), alpha <= 0.0);
}

// mass of an arc with partial bins prorated linearly
inline double arc_mass(const BinnedMeasure& mu, const Arc& arc) {
    int bins = mu.part.bin_count;
    double bw = mu.part.width();
    double lo = wrap_angle(arc.center - arc.half_width);
    double w = 2.0 * arc.half_width;
    if (w >= kTwoPi) return mu.total;
    double m = 0.0;
    int k_lo = static_cast<int>(std::floor(lo / bw));
    int k_hi = static_cast<int>(std::floor((lo + w) / bw));
    for (int k = k_lo; k <= k_hi; ++k) {
        double ov = std::min(lo + w, (k + 1) * bw) - std::max(lo, k * bw);
        if (ov > 0.0) m += mu.masses[static_cast<size_t>(((k % bins) + bins) % bins)] * ov / bw;
    }
    return m;
}

namespace detail {

// audit-grid comparison of two binned mass vectors against a per-bin predicted
// ratio; returns the mass-weighted median relative deviation
inline double ratio_wmedian(const std::vector<double>& my, const std::vector<double>& mx,
                            const std::vector<double>& pred_times_mx, int audit) {
    auto cy = coarsen(my, audit);
    auto cx = coarsen(mx, audit);
    auto cp = coarsen(pred_times_mx, audit);
    double totx = 0.0;
    for (double v : cx) totx += v;
    std::vector<double> rel, wts;
    for (int b = 0; b < audit; ++b) {
        if (!(cx[b] > 1e-9 * totx) || !(cy[b] > 0.0)) continue;
        double cpred = cp[b] / cx[b];
        rel.push_back(std::abs(cy[b] / cx[b] / cpred - 1.0));
        wts.push_back(cx[b]);
    }
    if (rel.empty()) throw LabError("ratio_wmedian: no comparable bins");
    return weighted_median(rel, wts);
}

} // namespace detail

struct ConformalityOptions {
    double s_offset = 0.05;
    double depth = 0.0; // weight gate; 0: catalog depth
    int audit = 64;
};

// d(mu_y)/d(mu_x) against exp(alpha * busemann): weighted median relative error
inline double conformality_check(const OrbitCatalog& cat, double alpha,
                                 BoundaryPartition part, DiskPoint x, DiskPoint y,
                                 ConformalityOptions opt = {}) {
    if (std::abs(x.z() - cat.base_point.z()) > 1e-12)
        throw LabError("conformality_check: x must be the catalog base point");
    double depth = opt.depth > 0.0 ? opt.depth : cat.max_dist;
    double s = alpha + opt.s_offset;
    AtomSet A = make_atoms(cat, part);
    std::vector<double> wx(A.size(), 0.0);
    std::vector<double> wy = rebase_weights(A, y.z(), s);
    for (size_t i = 0; i < A.size(); ++i) {
        if (A.d[i] < depth) wx[i] = std::exp(-s * A.d[i]);
        else wy[i] = 0.0;
    }
    auto mx = bin_atoms(A, wx);
    auto my = bin_atoms(A, wy);
    std::vector<double> pmx(mx.size());
    for (int b = 0; b < part.bin_count; ++b)
        pmx[b] = mx[b] * std::exp(alpha * busemann(part.center(b), x.z(), y.z()));
    return detail::ratio_wmedian(my, mx, pmx, opt.audit);
}

struct InvarianceResult {
    double pushforward_total = 0.0;
    double rebased_total = 0.0;
    double truncated_total = 0.0;
    double wmedian = 0.0;
};

// pushforward of the truncated measure under g versus the orbital sum re-based
// at gx, with matched truncation depth and the degenerate atom pair excluded
inline InvarianceResult invariance_check(const OrbitCatalog& cat, double alpha,
                                         BoundaryPartition part, const OrbitPoint& g,
                                         ConformalityOptions opt = {}) {
    double depth = opt.depth > 0.0 ? opt.depth : cat.max_dist;
    double s = alpha + opt.s_offset;
    cplx x = cat.base_point.z();
    cplx gx = g.map.act(x);
    double tg = hyp_dist(x, gx);
    double Dcut = depth - tg;
    if (Dcut <= 0.0) throw OutOfRange("invariance_check: depth too small for this g");

    AtomSet A = make_atoms(cat, part);
    std::string excluded = invert_word(g.word);
    std::vector<double> wt(A.size(), 0.0);
    for (size_t i = 0; i < A.size(); ++i)
        if (A.d[i] < Dcut && A.word[i] != excluded) wt[i] = std::exp(-s * A.d[i]);
    auto mu_t = bin_atoms(A, wt);

    // image of each bin edge under g; spread each bin's mass over the image
    // interval with linear proration
    int bins = part.bin_count;
    double bw = part.width();
    std::vector<double> ie(bins);
    for (int j = 0; j < bins; ++j) ie[j] = wrap_angle(g.map.act_angle(j * bw));
    std::vector<double> pf(bins, 0.0);
    for (int j = 0; j < bins; ++j) {
        double lo = ie[j];
        double w = wrap_angle(ie[(j + 1) % bins] - lo);
        if (w <= 0.0 || mu_t[j] == 0.0) continue;
        int b_lo = static_cast<int>(lo / bw);
        int b_hi = static_cast<int>((lo + w) / bw);
        for (int b = b_lo; b <= b_hi; ++b) {
            double ov = std::min(lo + w, (b + 1) * bw) - std::max(lo, b * bw);
            if (ov > 0.0) pf[b % bins] += mu_t[j] * ov / w;
        }
    }

    auto reb = bin_atoms(A, rebase_weights(A, gx, s, Dcut));
    InvarianceResult r;
    for (int b = 0; b < bins; ++b) {
        r.pushforward_total += pf[b];
        r.rebased_total += reb[b];
        r.truncated_total += mu_t[b];
    }
    auto cpf = coarsen(pf, opt.audit);
    auto crb = coarsen(reb, opt.audit);
    double tot = 0.0;
    for (double v : crb) tot += v;
    std::vector<double> rel, wts;
    for (int b = 0; b < opt.audit; ++b) {
        if (!(crb[b] > 1e-9 * tot) || !(cpf[b] > 0.0)) continue;
        rel.push_back(std::abs(cpf[b] / crb[b] - 1.0));
        wts.push_back(crb[b]);
    }
    if (rel.empty()) throw LabError("invariance_check: no comparable bins");
    r.wmedian = weighted_median(rel, wts);
    return r;
}

// total variation between two normalized measures on a coarse audit grid
inline double cauchy_check(const BinnedMeasure& a, const BinnedMeasure& b, int audit) {
    std::vector<double> na(a.masses), nb(b.masses);
    for (double& v : na) v /= a.total;
    for (double& v : nb) v /= b.total;
    return tv_distance(coarsen(na, audit), coarsen(nb, audit));
}

struct ShadowReport {
    double min_val = 0.0;
    double max_val = 0.0;
    double band = 0.0; // max/min
    int count = 0;
    bool flagged = false; // no resolvable shadows
};

// mu(shadow(x, gx, R)) * e^{alpha d} across the catalog: empirical two-sided
// shadow-lemma constant
inline ShadowReport shadow_lemma_report(const OrbitCatalog& cat, const BinnedMeasure& mu,
                                        double R, double alpha) {
    cplx x = cat.base_point.z();
    double bw = mu.part.width();
    ShadowReport rep;
    std::vector<double> vals;
    long long narrow = 0;
    for (const auto& p : cat.points) {
        if (p.word.empty() || p.dist <= 3.0) continue;
        Arc sh = shadow_arc(x, p.image, R);
        if (2.0 * sh.half_width < 3.0 * bw) { // below bin resolution
            ++narrow;
            continue;
        }
        double m = arc_mass(mu, sh);
        if (m > 0.0) vals.push_back(m * std::exp(alpha * p.dist));
    }
    if (vals.empty()) {
        if (narrow > 0)
            throw ShadowTooNarrow(
                "shadow_lemma_report: all shadows below bin resolution; "
                "increase bin_count or R");
        rep.flagged = true;
        return rep;
    }
    rep.min_val = *std::min_element(vals.begin(), vals.end());
    rep.max_val = *std::max_element(vals.begin(), vals.end());
    rep.band = rep.max_val / rep.min_val;
    rep.count = static_cast<int>(vals.size());
    return rep;
}

struct AhlforsRow {
    double angle = 0.0;
    double radius = 0.0;
    double mass = 0.0;
    double ratio = 0.0; // mass / r^alpha
};

struct AhlforsReport {
    std::vector<AhlforsRow> rows;
    std::vector<double> slopes; // per-sample log mass / log r slope
    double spread = 0.0;        // max ratio / min ratio
    bool regular = true;
};

// visual-metric ball B(v, r) about a boundary direction, as a boundary arc
inline Arc visual_ball_arc(cplx x, double v_angle, double r) {
    if (!(r > 0.0) || r >= 1.0) throw OutOfRange("visual_ball_arc: need 0 < r < 1");
    MoebiusMap T = chart_to_origin(x);
    double av = std::atan2(T.act(std::polar(1.0, v_angle)).imag(),
                           T.act(std::polar(1.0, v_angle)).real());
    double hc = 2.0 * std::asin(r);
    if (hc >= kPi) return Arc{0.0, kPi};
    MoebiusMap Ti = T.inverse();
    cplx e1 = Ti.act(std::polar(1.0, av - hc));
    cplx e2 = Ti.act(std::polar(1.0, av + hc));
    double a1 = std::atan2(e1.imag(), e1.real());
    double a2 = std::atan2(e2.imag(), e2.real());
    double w = wrap_angle(a2 - a1);
    return Arc{wrap_angle(a1 + 0.5 * w), 0.5 * w};
}

inline AhlforsReport ahlfors_report(const BinnedMeasure& mu, DiskPoint x, double alpha,
                                    std::vector<double> sample_angles = {},
                                    int j_lo = 2, int j_hi = 6) {
    if (sample_angles.empty()) {
        // default: centers of the 8 heaviest bins
        std::vector<int> order(static_cast<size_t>(mu.part.bin_count));
        for (int b = 0; b < mu.part.bin_count; ++b) order[b] = b;
        std::sort(order.begin(), order.end(), [&](int i, int j) {
            if (mu.masses[i] != mu.masses[j]) return mu.masses[i] > mu.masses[j];
            return i < j;
        });
        for (int k = 0; k < 8 && k < mu.part.bin_count; ++k)
            if (mu.masses[order[k]] > 0.0) sample_angles.push_back(mu.part.center(order[k]));
    }
    if (sample_angles.empty()) throw LabError("ahlfors_report: empty measure support");

    AhlforsReport rep;
    double bw = mu.part.width();
    for (double v : sample_angles) {
        std::vector<double> lr, lm;
        for (int j = j_lo; j <= j_hi; ++j) {
            double r = std::ldexp(1.0, -j);
            Arc ball = visual_ball_arc(x.z(), v, r);
            if (2.0 * ball.half_width < 3.0 * bw) continue; // below bin resolution
            double m = arc_mass(mu, ball);
            rep.rows.push_back({v, r, m, m / std::pow(r, alpha)});
            if (m > 0.0) {
                lr.push_back(std::log(r));
                lm.push_back(std::log(m));
            }
        }
        double slope = 0.0;
        if (lr.size() >= 2) {
            double mx = 0, my = 0;
            for (size_t i = 0; i < lr.size(); ++i) { mx += lr[i]; my += lm[i]; }
            mx /= lr.size(); my /= lr.size();
            double sxx = 0, sxy = 0;
            for (size_t i = 0; i < lr.size(); ++i) {
                sxx += (lr[i] - mx) * (lr[i] - mx);
                sxy += (lr[i] - mx) * (lm[i] - my);
            }
            slope = sxx > 0 ? sxy / sxx : 0.0;
        }
        rep.slopes.push_back(slope);
    }

    double lo = 0.0, hi = 0.0;
    for (const auto& row : rep.rows) {
        if (!(row.ratio > 0.0)) continue;
        if (lo == 0.0 || row.ratio < lo) lo = row.ratio;
        if (row.ratio > hi) hi = row.ratio;
    }
    rep.spread = lo > 0.0 ? hi / lo : 0.0;

    std::vector<double> sl(rep.slopes);
    std::sort(sl.begin(), sl.end());
    double med = sl.empty() ? 0.0 : sl[sl.size() / 2];
    rep.regular = med >= 0.5 * alpha && lo > 0.0;
    return rep;
}

} // namespace lab
