#pragma once
#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "lab/partition.hpp"
#include "lab/parallel.hpp"
#include "lab/schottky.hpp"

namespace lab {

struct OrbitPoint {
    std::string word; // "" is the identity
    MoebiusMap map;
    cplx image{0.0, 0.0};
    double dist = 0.0;
};

struct OrbitCatalog {
    DiskPoint base_point;
    double max_dist = 0.0;
    std::vector<OrbitPoint> points; // sorted by (dist, word order)
    long long nodes_seen = 0;       // tree nodes that survived the prune gate
};

struct AnnulusSpec {
    double n = 0.0;
    double rho = 1.0;
};

struct EnumOptions {
    double prune_margin = 0.0;      // <= 0: auto, twice the largest generator displacement
    long long budget_cap = 50'000'000;
    int threads = 0;                // 0: LAB_THREADS / hardware
    bool probe = true;              // cheap growth-rate precheck before deep runs
};

namespace detail {

struct EnumShared {
    const GroupModel* G = nullptr;
    cplx x{0.0, 0.0};
    double maxd = 0.0;
    double cutoff = 0.0; // maxd + margin
    long long cap = 0;
    std::atomic<long long> seen{0};
};

inline void orbit_dfs(EnumShared& sh, const MoebiusMap& mat, int last_letter,
                      std::string& word, std::vector<OrbitPoint>& out) {
    int L = sh.G->letter_count();
    for (int l = 0; l < L; ++l) {
        if (last_letter >= 0 && l == (last_letter ^ 1)) continue; // no backtracking
        MoebiusMap m2 = compose(mat, sh.G->gens[l]);
        cplx img = m2.act(sh.x);
        double d = hyp_dist(sh.x, img);
        if (d > sh.cutoff) continue;
        long long s = sh.seen.fetch_add(1) + 1;
        if (s > sh.cap)
            throw BudgetExceeded("enumerate_orbit: node budget exhausted");
        word.push_back(letter_char(l));
        if (d < sh.maxd) out.push_back(OrbitPoint{word, m2, img, d});
        orbit_dfs(sh, m2, l, word, out);
        word.pop_back();
    }
}

// orbit growth rate from raw shell counts; used by the budget precheck
inline double raw_log_slope(const std::vector<OrbitPoint>& pts, double maxd) {
    int top = static_cast<int>(maxd);
    if (top < 2) return 0.0;
    std::vector<double> ns, ys;
    for (int n = 1; n <= top; ++n) {
        long long c = 0;
        for (const auto& p : pts)
            if (p.dist < n) ++c;
        if (c > 0) {
            ns.push_back(n);
            ys.push_back(std::log(static_cast<double>(c)));
        }
    }
    if (ns.size() < 2) return 0.0;
    size_t lo = ns.size() / 2;
    double mx = 0, my = 0;
    size_t m = ns.size() - lo;
    for (size_t i = lo; i < ns.size(); ++i) { mx += ns[i]; my += ys[i]; }
    mx /= m; my /= m;
    double sxx = 0, sxy = 0;
    for (size_t i = lo; i < ns.size(); ++i) {
        sxx += (ns[i] - mx) * (ns[i] - mx);
        sxy += (ns[i] - mx) * (ys[i] - my);
    }
    return sxx > 0 ? sxy / sxx : 0.0;
}

} // namespace detail

inline OrbitCatalog enumerate_orbit(const GroupModel& G, DiskPoint base, double max_dist,
                                    EnumOptions opts = {}) {
    if (!(max_dist > 0.0)) throw LabError("enumerate_orbit: max_dist must be positive");
    if (G.gens.empty()) throw LabError("enumerate_orbit: group has no generators");

    cplx x = base.z();
    double margin = opts.prune_margin;
    if (margin <= 0.0) {
        double disp = 0.0;
        for (const auto& g : G.gens) disp = std::max(disp, hyp_dist(x, g.act(x)));
        margin = 2.0 * disp;
    }

    // estimate the orbit size from a shallow run before committing to a deep one
    if (opts.probe && max_dist > 12.0) {
        EnumOptions shallow = opts;
        shallow.probe = false;
        shallow.prune_margin = margin;
        shallow.threads = 1;
        OrbitCatalog pre = enumerate_orbit(G, base, 10.0, shallow);
        double slope = detail::raw_log_slope(pre.points, 10.0);
        if (slope * max_dist > std::log(static_cast<double>(opts.budget_cap)))
            throw BudgetExceeded("enumerate_orbit: projected orbit size exceeds budget");
    }

    detail::EnumShared sh;
    sh.G = &G;
    sh.x = x;
    sh.maxd = max_dist;
    sh.cutoff = max_dist + margin;
    sh.cap = opts.budget_cap;

    int L = G.letter_count();
    int nt = opts.threads > 0 ? opts.threads : thread_count();
    if (nt > L) nt = L;

    // one subtree per first letter; merged in letter order, then globally sorted
    std::vector<std::vector<OrbitPoint>> sub(L);
    auto run_subtree = [&](int l) {
        MoebiusMap m = compose(MoebiusMap::identity(), G.gens[l]);
        cplx img = m.act(x);
        double d = hyp_dist(x, img);
        if (d > sh.cutoff) return;
        long long s = sh.seen.fetch_add(1) + 1;
        if (s > sh.cap) throw BudgetExceeded("enumerate_orbit: node budget exhausted");
        std::string word(1, letter_char(l));
        if (d < max_dist) sub[l].push_back(OrbitPoint{word, m, img, d});
        detail::orbit_dfs(sh, m, l, word, sub[l]);
    };

    if (nt <= 1) {
        for (int l = 0; l < L; ++l) run_subtree(l);
    } else {
        std::atomic<int> next{0};
        std::exception_ptr err;
        std::atomic<bool> failed{false};
        auto worker = [&] {
            try {
                for (;;) {
                    int l = next.fetch_add(1);
                    if (l >= L || failed.load()) break;
                    run_subtree(l);
                }
            } catch (...) {
                if (!failed.exchange(true)) err = std::current_exception();
            }
        };
        std::vector<std::thread> pool;
        for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
        if (failed.load()) std::rethrow_exception(err);
    }

    OrbitCatalog cat;
    cat.base_point = base;
    cat.max_dist = max_dist;
    cat.nodes_seen = sh.seen.load();
    cat.points.push_back(OrbitPoint{"", MoebiusMap::identity(), x, 0.0});
    for (auto& v : sub)
        for (auto& p : v) cat.points.push_back(std::move(p));
    std::sort(cat.points.begin(), cat.points.end(), [](const OrbitPoint& a, const OrbitPoint& b) {
        if (a.dist != b.dist) return a.dist < b.dist;
        return word_less(a.word, b.word);
    });
    return cat;
}

// indices of catalog points with n - rho <= dist < n + rho
inline std::vector<size_t> annulus(const OrbitCatalog& cat, const AnnulusSpec& spec) {
    if (!(spec.rho > 0.0)) throw LabError("annulus: rho must be positive");
    if (spec.n < spec.rho) throw OutOfRange("annulus: requires n >= rho");
    if (spec.n + spec.rho > cat.max_dist + 1e-12)
        throw OutOfRange("annulus: band exceeds catalog depth");
    double lo = spec.n - spec.rho, hi = spec.n + spec.rho;
    auto first = std::lower_bound(cat.points.begin(), cat.points.end(), lo,
                                  [](const OrbitPoint& p, double v) { return p.dist < v; });
    std::vector<size_t> idx;
    for (auto it = first; it != cat.points.end() && it->dist < hi; ++it)
        idx.push_back(static_cast<size_t>(it - cat.points.begin()));
    return idx;
}

inline void export_catalog(const OrbitCatalog& cat, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw LabError("export_catalog: cannot open " + path);
    f << "# base " << fmt17(cat.base_point.re) << ' ' << fmt17(cat.base_point.im)
      << " max_dist " << fmt17(cat.max_dist) << " count " << cat.points.size()
      << " seen " << cat.nodes_seen << '\n';
    for (const auto& p : cat.points) {
        f << (p.word.empty() ? std::string("e") : p.word) << ' '
          << fmt17(p.map.a_re) << ' ' << fmt17(p.map.a_im) << ' '
          << fmt17(p.map.b_re) << ' ' << fmt17(p.map.b_im) << ' '
          << fmt17(p.image.real()) << ' ' << fmt17(p.image.imag()) << ' '
          << fmt17(p.dist) << '\n';
    }
    if (!f.good()) throw LabError("export_catalog: write failed");
}

inline OrbitCatalog import_catalog(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw LabError("import_catalog: cannot open " + path);
    std::string line;
    if (!std::getline(f, line)) throw LabError("import_catalog: empty file");
    OrbitCatalog cat;
    size_t count = 0;
    {
        std::istringstream hs(line);
        std::string hash, kb, km, kc, ks;
        double bre, bim;
        long long seen;
        if (!(hs >> hash >> kb >> bre >> bim >> km >> cat.max_dist >> kc >> count >> ks >> seen)
            || hash != "#" || kb != "base" || km != "max_dist" || kc != "count" || ks != "seen")
            throw LabError("import_catalog: bad header");
        cat.base_point = DiskPoint::of(cplx(bre, bim));
        cat.nodes_seen = seen;
    }
    cplx x = cat.base_point.z();
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        OrbitPoint p;
        std::string w;
        double ire, iim;
        if (!(ls >> w >> p.map.a_re >> p.map.a_im >> p.map.b_re >> p.map.b_im >> ire >> iim >> p.dist))
            throw LabError("import_catalog: bad record: " + line);
        p.word = (w == "e") ? std::string() : w;
        p.image = cplx(ire, iim);
        p.map.normalize();
        if (std::abs(p.map.act(x) - p.image) > 1e-9 ||
            std::abs(hyp_dist(x, p.image) - p.dist) > 1e-9)
            throw LabError("import_catalog: inconsistent record: " + line);
        cat.points.push_back(std::move(p));
    }
    if (cat.points.size() != count) throw LabError("import_catalog: record count mismatch");
    if (cat.points.empty() || !cat.points[0].word.empty())
        throw EmptyCatalog("import_catalog: identity record missing");
    return cat;
}

} // namespace lab
