#pragma once
#include <cmath>
#include <set>
#include <vector>

#include "lab/orbit.hpp"

namespace lab {

struct AlphaEstimate {
    double slope = 0.0;           // fit of log N(r) over the deep half of the range
    double poincare = 0.0;        // critical exponent of the truncated Poincare series
    bool elementary_warning = false;
    int shells = 0;               // distinct unit-distance shells observed
};

struct GrowthRow {
    int n = 0;
    long long count = 0;
    double normalized = 0.0; // e^{-alpha n} * count
    double ratio = 0.0;      // count / previous count, 0 if previous is empty
};

struct GrowthReport {
    double alpha = 0.0;
    double rho = 0.0;
    std::vector<GrowthRow> rows;
    double trailing_cv = 0.0; // coefficient of variation of the last 5 normalized counts
};

// least-squares slope of ys against xs
inline double trend_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    size_t n = xs.size();
    if (n < 2) return 0.0;
    double mx = 0, my = 0;
    for (size_t i = 0; i < n; ++i) { mx += xs[i]; my += ys[i]; }
    mx /= n; my /= n;
    double sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    return sxx > 0 ? sxy / sxx : 0.0;
}

inline AlphaEstimate estimate_alpha(const OrbitCatalog& cat, double depth = 0.0) {
    double maxd = depth > 0.0 ? depth : cat.max_dist;
    if (maxd > cat.max_dist + 1e-12)
        throw LabError("estimate_alpha: depth exceeds catalog depth");

    std::set<int> shells;
    for (const auto& p : cat.points)
        if (!p.word.empty() && p.dist < maxd) shells.insert(static_cast<int>(p.dist));
    AlphaEstimate est;
    est.shells = static_cast<int>(shells.size());
    if (est.shells < 8)
        throw InsufficientDepth("estimate_alpha: fewer than 8 distance shells");

    est.slope = detail::raw_log_slope(cat.points, maxd);
    if (est.slope < 0.15) {
        est.elementary_warning = true;
        est.slope = 0.0;
        est.poincare = 0.0;
        return est;
    }

    // critical exponent: solve R(s) = 1 + 2/(maxd-2) where R compares the
    // truncated series at depths maxd and maxd-2
    std::vector<double> ds;
    for (const auto& p : cat.points)
        if (p.dist < maxd) ds.push_back(p.dist);
    auto ratio = [&](double s) {
        double num = 0.0, den = 0.0;
        for (double d : ds) {
            double w = std::exp(-s * d);
            num += w;
            if (d < maxd - 2.0) den += w;
        }
        return num / den;
    };
    double target = 1.0 + 2.0 / (maxd - 2.0);
    double lo = 0.01, hi = 1.5;
    for (int it = 0; it < 60; ++it) {
        double mid = 0.5 * (lo + hi);
        if (ratio(mid) > target) lo = mid; else hi = mid;
    }
    est.poincare = 0.5 * (lo + hi);
    return est;
}

inline GrowthReport growth_report(const OrbitCatalog& cat, double rho, double alpha) {
    GrowthReport rep;
    rep.alpha = alpha;
    rep.rho = rho;
    int n_lo = static_cast<int>(std::ceil(rho));
    if (n_lo < 1) n_lo = 1;
    int n_hi = static_cast<int>(std::floor(cat.max_dist - rho + 1e-12));
    if (n_hi < n_lo) throw OutOfRange("growth_report: no feasible annulus");

    long long prev = 0;
    for (int n = n_lo; n <= n_hi; ++n) {
        auto idx = annulus(cat, AnnulusSpec{static_cast<double>(n), rho});
        GrowthRow row;
        row.n = n;
        row.count = static_cast<long long>(idx.size());
        row.normalized = std::exp(-alpha * n) * static_cast<double>(row.count);
        row.ratio = prev > 0 ? static_cast<double>(row.count) / static_cast<double>(prev) : 0.0;
        prev = row.count;
        rep.rows.push_back(row);
    }

    size_t k = rep.rows.size() < 5 ? rep.rows.size() : 5;
    double mean = 0.0;
    for (size_t i = rep.rows.size() - k; i < rep.rows.size(); ++i) mean += rep.rows[i].normalized;
    mean /= static_cast<double>(k);
    double var = 0.0;
    for (size_t i = rep.rows.size() - k; i < rep.rows.size(); ++i) {
        double dlt = rep.rows[i].normalized - mean;
        var += dlt * dlt;
    }
    var /= static_cast<double>(k);
    rep.trailing_cv = mean > 0 ? std::sqrt(var) / mean : 0.0;
    return rep;
}

} // namespace lab
