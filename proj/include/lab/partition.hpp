#pragma once
#include <algorithm>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "lab/mobius.hpp"

namespace lab {

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct BoundaryPartition {
    int bin_count = 4096;

    static BoundaryPartition make(int n) {
        if (n < 256 || (n & (n - 1)) != 0)
            throw LabError("BoundaryPartition: bin_count must be a power of two >= 256");
        return BoundaryPartition{n};
    }
    double width() const { return kTwoPi / bin_count; }
    double center(int i) const { return (i + 0.5) * kTwoPi / bin_count; }
    int bin_of(double angle) const {
        int b = static_cast<int>(wrap_angle(angle) / kTwoPi * bin_count);
        return ((b % bin_count) + bin_count) % bin_count;
    }
    bool operator==(const BoundaryPartition& o) const { return bin_count == o.bin_count; }
};

struct BinnedMeasure {
    BoundaryPartition part;
    std::vector<double> masses;
    double total = 0.0;
    bool degenerate = false; // e.g. built from an identity-only catalog

    static BinnedMeasure from_masses(BoundaryPartition p, std::vector<double> m,
                                     bool degenerate_flag = false) {
        BinnedMeasure mu{p, std::move(m), 0.0, degenerate_flag};
        if (static_cast<int>(mu.masses.size()) != p.bin_count)
            throw LabError("BinnedMeasure: mass vector does not match partition");
        for (double v : mu.masses)
            if (v < 0.0) throw LabError("BinnedMeasure: negative mass");
        mu.total = std::accumulate(mu.masses.begin(), mu.masses.end(), 0.0);
        if (!(mu.total > 0.0)) throw LabError("BinnedMeasure: empty measure");
        return mu;
    }

    BinnedMeasure normalized() const {
        std::vector<double> m(masses);
        for (double& v : m) v /= total;
        return from_masses(part, std::move(m), degenerate);
    }
};

struct StepFunction {
    BoundaryPartition part;
    std::vector<double> values;

    static StepFunction constant(BoundaryPartition p, double c) {
        return {p, std::vector<double>(static_cast<size_t>(p.bin_count), c)};
    }
};

inline double integrate(const StepFunction& f, const BinnedMeasure& mu) {
    if (!(f.part == mu.part)) throw LabError("integrate: partition mismatch");
    double s = 0.0;
    for (int i = 0; i < mu.part.bin_count; ++i) s += f.values[i] * mu.masses[i];
    return s;
}

inline double inner_product(const StepFunction& f, const StepFunction& g,
                            const BinnedMeasure& mu) {
    double s = 0.0;
    for (int i = 0; i < mu.part.bin_count; ++i)
        s += f.values[i] * g.values[i] * mu.masses[i];
    return s;
}

inline double l2_norm(const StepFunction& f, const BinnedMeasure& mu) {
    return std::sqrt(inner_product(f, f, mu));
}

// sum fine bins into k coarse bins (k divides the size)
inline std::vector<double> coarsen(const std::vector<double>& v, int k) {
    size_t block = v.size() / static_cast<size_t>(k);
    std::vector<double> out(static_cast<size_t>(k), 0.0);
    for (size_t i = 0; i < v.size(); ++i) out[i / block] += v[i];
    return out;
}

inline double tv_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return 0.5 * s;
}

// median of rel[] under weights wts[]: smallest value whose cumulative weight
// reaches half the total
inline double weighted_median(std::vector<double> rel, std::vector<double> wts) {
    std::vector<size_t> order(rel.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t i, size_t j) { return rel[i] < rel[j]; });
    double tot = 0.0;
    for (double w : wts) tot += w;
    double cum = 0.0;
    for (size_t i : order) {
        cum += wts[i];
        if (cum >= 0.5 * tot) return rel[i];
    }
    return rel.empty() ? 0.0 : rel[order.back()];
}

// CSV layout: metadata header, then one row per bin.
inline void export_measure_csv(std::ostream& os, const BinnedMeasure& mu,
                               double alpha, double s_offset, double depth) {
    os << "bin_count,total,alpha,s_offset,depth\n";
    os << mu.part.bin_count << ',' << fmt17(mu.total) << ',' << fmt17(alpha) << ','
       << fmt17(s_offset) << ',' << fmt17(depth) << "\n";
    os << "bin_index,center_angle,mass\n";
    for (int i = 0; i < mu.part.bin_count; ++i)
        os << i << ',' << fmt17(mu.part.center(i)) << ',' << fmt17(mu.masses[i]) << "\n";
}

struct MeasureCsv {
    BinnedMeasure mu;
    double alpha = 0.0, s_offset = 0.0, depth = 0.0;
};

inline MeasureCsv import_measure_csv(std::istream& is) {
    std::string line;
    auto next = [&]() {
        if (!std::getline(is, line)) throw LabError("measure csv: truncated");
        return line;
    };
    if (next() != "bin_count,total,alpha,s_offset,depth")
        throw LabError("measure csv: bad header");
    next();
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream meta(line);
    int bins = 0;
    double total = 0, alpha = 0, s_offset = 0, depth = 0;
    if (!(meta >> bins >> total >> alpha >> s_offset >> depth))
        throw LabError("measure csv: bad metadata row");
    if (next() != "bin_index,center_angle,mass")
        throw LabError("measure csv: bad column header");
    std::vector<double> masses(static_cast<size_t>(bins), 0.0);
    for (int i = 0; i < bins; ++i) {
        next();
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream row(line);
        int idx = 0;
        double center = 0, mass = 0;
        if (!(row >> idx >> center >> mass) || idx != i)
            throw LabError("measure csv: bad data row");
        masses[static_cast<size_t>(i)] = mass;
    }
    auto mu = BinnedMeasure::from_masses(BoundaryPartition::make(bins), std::move(masses));
    if (std::abs(mu.total - total) > 1e-12 * total)
        throw LabError("measure csv: total does not match masses");
    return {std::move(mu), alpha, s_offset, depth};
}

} // namespace lab
