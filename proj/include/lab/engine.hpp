#pragma once
#include <array>
#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "lab/measure.hpp"
#include "lab/parallel.hpp"

namespace lab {

// quarter-circle test arcs used across the equidistribution experiments
inline constexpr double kQuarterHalf = kPi / 4.0;
inline double quarter_center(int k) { return k * kPi / 2.0; }

struct EngineOptions {
    double max_dist = 14.0;  // weight-gate depth; atoms enumerated 2 deeper
    int bin_count = 4096;
    double s_offset = 0.05;
    double cone_R = 1.0;
    double shadow_R = 2.0;
    long long budget_cap = 50'000'000;
    int threads = 0;
};

// the full quadrature state for one group/base point: deep orbit catalog,
// exponent estimates, atomic weights at two depths, binned measures, and the
// atomic Harish-Chandra cache
struct EngineModel {
    GroupModel G;
    cplx x{0.0, 0.0};
    double maxd = 14.0;
    double sigma = 0.05;
    double cone_R = 1.0;
    double shadow_R = 2.0;
    int threads = 0;
    BoundaryPartition part;
    OrbitCatalog cat; // depth maxd + 2

    AtomSet atoms;                  // non-identity points, catalog order
    std::vector<MoebiusMap> amap;
    std::vector<char> sel14;        // atom below the weight-gate depth
    std::vector<double> awt;        // e^{-s d}, gated
    std::vector<double> awt16;      // e^{-s16 d}, full depth
    std::vector<cplx> vz_at;        // unit vectors of atom directions
    std::vector<double> cx_at;      // busemann base part at atom directions
    std::vector<double> cx_bin;     // same at bin centers
    std::vector<double> bin_angles;

    double alpha = 0.0, alpha16 = 0.0, apoin = 0.0;
    double s = 0.0, s16 = 0.0;
    std::vector<double> mu, mu16; // binned masses (raw weights)
    double tot = 0.0, tot16 = 0.0;

    std::unordered_map<std::string, size_t> aidx;
    std::vector<double> phih; // atomic HC value per atom (gated atoms only)

    size_t natoms() const { return atoms.size(); }

    std::vector<double> beta_atoms(cplx y) const {
        double cy = std::log(1.0 - std::norm(y));
        std::vector<double> b(natoms());
        for (size_t i = 0; i < b.size(); ++i)
            b[i] = (cy - std::log(std::norm(y - vz_at[i]))) - cx_at[i];
        return b;
    }

    std::vector<double> beta_bins(cplx y) const {
        double cy = std::log(1.0 - std::norm(y));
        std::vector<double> b(bin_angles.size());
        for (size_t i = 0; i < b.size(); ++i)
            b[i] = (cy - std::log(std::norm(y - std::polar(1.0, bin_angles[i])))) - cx_bin[i];
        return b;
    }

    // sqrt-Poisson-weighted atomic masses and the busemann values behind them
    std::pair<std::vector<double>, std::vector<double>> atom_weights(cplx y) const {
        std::vector<double> beta = beta_atoms(y);
        std::vector<double> wa(natoms());
        for (size_t i = 0; i < wa.size(); ++i)
            wa[i] = std::exp(0.5 * alpha * beta[i]) * awt[i];
        return {std::move(wa), std::move(beta)};
    }

    std::vector<double> binned(const std::vector<double>& wts) const {
        return bin_atoms(atoms, wts);
    }

    // atom indices with n - rho <= d < n + rho below the gate depth
    std::vector<size_t> annulus14(double n, double rho) const {
        std::vector<size_t> idx;
        for (size_t i = 0; i < natoms(); ++i)
            if (atoms.d[i] >= n - rho && atoms.d[i] < n + rho && atoms.d[i] < maxd)
                idx.push_back(i);
        return idx;
    }

    double phi_of(size_t ai) const { return phih[ai]; }
    double phi_sym(size_t ai) const {
        return 0.5 * (phih[ai] + phih[aidx.at(invert_word(atoms.word[ai]))]);
    }
};

inline EngineModel make_engine(const std::vector<DiskSpec>& disks, DiskPoint base,
                               EngineOptions opt = {}) {
    EngineModel M;
    M.G = build_schottky(disks);
    M.x = base.z();
    M.maxd = opt.max_dist;
    M.sigma = opt.s_offset;
    M.cone_R = opt.cone_R;
    M.shadow_R = opt.shadow_R;
    M.threads = opt.threads;
    M.part = BoundaryPartition::make(opt.bin_count);

    EnumOptions eo;
    eo.budget_cap = opt.budget_cap;
    eo.threads = opt.threads;
    M.cat = enumerate_orbit(M.G, base, M.maxd + 2.0, eo);

    AlphaEstimate a14 = estimate_alpha(M.cat, M.maxd);
    AlphaEstimate a16 = estimate_alpha(M.cat);
    M.alpha = a14.elementary_warning ? 0.0 : a14.slope;
    M.apoin = a14.poincare;
    M.alpha16 = a16.elementary_warning ? 0.0 : a16.slope;
    M.s = M.alpha + M.sigma;
    M.s16 = M.alpha16 + 0.5 * M.sigma;

    M.atoms = make_atoms(M.cat, M.part);
    size_t na = M.atoms.size();
    M.amap.reserve(na);
    for (const auto& p : M.cat.points)
        if (!p.word.empty()) M.amap.push_back(p.map);

    M.sel14.resize(na);
    M.awt.resize(na);
    M.awt16.resize(na);
    M.vz_at.resize(na);
    M.cx_at.resize(na);
    double cx0 = std::log(1.0 - std::norm(M.x));
    for (size_t i = 0; i < na; ++i) {
        M.sel14[i] = M.atoms.d[i] < M.maxd ? 1 : 0;
        M.awt[i] = M.sel14[i] ? std::exp(-M.s * M.atoms.d[i]) : 0.0;
        M.awt16[i] = std::exp(-M.s16 * M.atoms.d[i]);
        M.vz_at[i] = std::polar(1.0, M.atoms.ang[i]);
        M.cx_at[i] = cx0 - std::log(std::norm(M.x - M.vz_at[i]));
        M.aidx.emplace(M.atoms.word[i], i);
    }
    M.bin_angles.resize(static_cast<size_t>(M.part.bin_count));
    M.cx_bin.resize(M.bin_angles.size());
    for (size_t b = 0; b < M.bin_angles.size(); ++b) {
        M.bin_angles[b] = M.part.center(static_cast<int>(b));
        M.cx_bin[b] = cx0 - std::log(std::norm(M.x - std::polar(1.0, M.bin_angles[b])));
    }
    M.mu = M.binned(M.awt);
    M.mu16 = M.binned(M.awt16);
    for (double v : M.mu) M.tot += v;
    for (double v : M.mu16) M.tot16 += v;

    // atomic Harish-Chandra cache over the gated atoms
    M.phih.assign(na, 0.0);
    block_reduce<int>(na, 0,
        [&](size_t lo, size_t hi, int acc) {
            for (size_t i = lo; i < hi; ++i) {
                if (!M.sel14[i]) continue;
                auto [wa, beta] = M.atom_weights(M.atoms.img[i]);
                double sum = 0.0;
                for (double w : wa) sum += w;
                M.phih[i] = sum;
            }
            return acc;
        },
        [](int a, int b) { return a + b; }, opt.threads);
    return M;
}

inline BinnedMeasure engine_measure(const EngineModel& M) {
    return BinnedMeasure::from_masses(M.part, M.mu, false);
}

// ---- per-element context for the annulus experiments ----

struct GammaCtx {
    size_t ai = 0;
    double d = 0.0;
    cplx img;
    double phi = 0.0, phit = 0.0;
    std::vector<double> wa, beta_a, eab_a;
    double wa_sum = 0.0, eab_sum = 0.0;
    std::vector<int> prebin; // bin of gamma^{-1} v for each atom direction v
    Arc sh_fwd{0, 0}, sh_inv{0, 0};
};

inline GammaCtx make_gamma_ctx(const EngineModel& M, size_t ai) {
    GammaCtx c;
    c.ai = ai;
    c.d = M.atoms.d[ai];
    c.img = M.atoms.img[ai];
    c.phi = M.phi_of(ai);
    c.phit = M.phi_sym(ai);
    auto wb = M.atom_weights(c.img);
    c.wa = std::move(wb.first);
    c.beta_a = std::move(wb.second);
    c.eab_a.resize(M.natoms());
    for (size_t i = 0; i < c.eab_a.size(); ++i) {
        c.eab_a[i] = std::exp(M.alpha * c.beta_a[i]) * M.awt[i];
        c.wa_sum += c.wa[i];
        c.eab_sum += c.eab_a[i];
    }
    c.sh_fwd = shadow_arc(M.x, c.img, M.cone_R);
    MoebiusMap iv = M.amap[ai].inverse();
    c.sh_inv = shadow_arc(M.x, iv.act(M.x), M.cone_R);
    c.prebin.resize(M.natoms());
    for (size_t i = 0; i < c.prebin.size(); ++i)
        c.prebin[i] = M.part.bin_of(iv.act_angle(M.atoms.ang[i]));
    return c;
}

// ---- the theorem battery: one pass per (rho, n) computing all averages ----

struct TheoremTriple {
    std::vector<int> cone_quarters; // quarters whose union is the cone base U
    std::vector<char> A, B;         // bin masks
    std::vector<int> target_quarters; // quarters of U cap B for the limit value
};

struct TheoremRows {
    double rho = 1.0;
    std::array<double, 5> thmA_target{};
    std::array<double, 16> pm{}; // rank-one projection matrix entries
    double rob_target = 0.0;
    std::vector<int> ns;
    std::vector<size_t> ks;
    std::vector<double> exact_dev, sadj, rob_val, F, H;
    std::vector<std::array<double, 5>> thmA_val;
    std::vector<std::array<double, 16>> B_val;
    std::vector<std::array<double, 3>> tvD, tvN; // audits 64/32/16
    std::vector<double> maxhD, maxhN;            // sup over unit test functions
};

namespace detail {

struct LoopAcc {
    double exact = 0.0;
    std::array<double, 5> accA{};
    std::array<double, 16> accB{};
    long long rob = 0;
    std::vector<double> accD, accNu, Fn, Hn;

    static LoopAcc zero(size_t bins) {
        LoopAcc a;
        a.accD.assign(bins, 0.0);
        a.accNu.assign(bins, 0.0);
        a.Fn.assign(bins, 0.0);
        a.Hn.assign(bins, 0.0);
        return a;
    }
    LoopAcc& operator+=(const LoopAcc& o) {
        exact += o.exact;
        rob += o.rob;
        for (int t = 0; t < 5; ++t) accA[t] += o.accA[t];
        for (int t = 0; t < 16; ++t) accB[t] += o.accB[t];
        for (size_t b = 0; b < accD.size(); ++b) {
            accD[b] += o.accD[b];
            accNu[b] += o.accNu[b];
            Fn[b] += o.Fn[b];
            Hn[b] += o.Hn[b];
        }
        return *this;
    }
};

inline bool cone_hits_quarters(const Arc& sh, const std::vector<int>& qs) {
    for (int q : qs)
        if (arcs_intersect(sh, Arc{quarter_center(q), kQuarterHalf})) return true;
    return false;
}

} // namespace detail

inline std::vector<TheoremTriple> default_triples(const BoundaryPartition& part) {
    int bins = part.bin_count;
    auto quarter = [&](int k) {
        std::vector<char> m(static_cast<size_t>(bins), 0);
        for (int b = 0; b < bins; ++b)
            m[b] = std::abs(wrap_signed(part.center(b) - quarter_center(k))) < kQuarterHalf;
        return m;
    };
    auto mask_or = [](std::vector<char> a, const std::vector<char>& b) {
        for (size_t i = 0; i < a.size(); ++i) a[i] = a[i] || b[i];
        return a;
    };
    std::vector<char> q0 = quarter(0), q1 = quarter(1), q2 = quarter(2), q3 = quarter(3);
    return {
        {{0, 1}, q1, q0, {0}},
        {{1}, q2, q1, {1}},
        {{2, 3}, mask_or(q0, q2), q3, {3}},
        {{3}, mask_or(q1, q3), q3, {3}},
        {{0}, q2, q1, {}},
    };
}

// mean-zero test basis: constants, two quarter indicators, alternating 8-sector
inline std::vector<std::vector<double>> default_test_basis(const BoundaryPartition& part,
                                                           const std::vector<double>& mu_n) {
    int bins = part.bin_count;
    std::vector<std::vector<double>> xi;
    xi.emplace_back(static_cast<size_t>(bins), 1.0);
    for (int k = 0; k < 2; ++k) {
        std::vector<double> v(static_cast<size_t>(bins), 0.0);
        for (int b = 0; b < bins; ++b)
            v[b] = std::abs(wrap_signed(part.center(b) - quarter_center(k))) < kQuarterHalf;
        double mean = 0.0;
        for (int b = 0; b < bins; ++b) mean += mu_n[b] * v[b];
        for (int b = 0; b < bins; ++b) v[b] -= mean;
        xi.push_back(std::move(v));
    }
    std::vector<double> r3(static_cast<size_t>(bins));
    int sector = bins / 8;
    for (int b = 0; b < bins; ++b) r3[b] = (b / sector) % 2 == 0 ? 1.0 : -1.0;
    double mean = 0.0;
    for (int b = 0; b < bins; ++b) mean += mu_n[b] * r3[b];
    for (int b = 0; b < bins; ++b) r3[b] -= mean;
    xi.push_back(std::move(r3));
    return xi;
}

inline TheoremRows run_theorem_rows(const EngineModel& M, double rho) {
    int bins = M.part.bin_count;
    TheoremRows R;
    R.rho = rho;

    std::vector<double> mu_n(M.mu);
    for (double& v : mu_n) v /= M.tot;
    auto triples = default_triples(M.part);
    auto xi = default_test_basis(M.part, mu_n);

    // integral of each basis vector against the normalized measure
    std::array<double, 4> xim{};
    for (int i = 0; i < 4; ++i)
        for (int b = 0; b < bins; ++b) xim[i] += mu_n[b] * xi[i][b];
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) R.pm[i * 4 + j] = xim[i] * xim[j];

    std::array<double, 4> qmass{}; // mu-mass of each quarter
    for (int k = 0; k < 4; ++k) {
        for (int b = 0; b < bins; ++b)
            if (std::abs(wrap_signed(M.part.center(b) - quarter_center(k))) < kQuarterHalf)
                qmass[k] += M.mu[b];
    }
    for (size_t t = 0; t < triples.size(); ++t) {
        double ub = 0.0;
        for (int q : triples[t].target_quarters) ub += qmass[q];
        double am = 0.0;
        for (int b = 0; b < bins; ++b)
            if (triples[t].A[b]) am += M.mu[b];
        R.thmA_target[t] = ub * am / (M.tot * M.tot);
    }
    R.rob_target = qmass[0] * qmass[1] / (M.tot * M.tot);

    // step functions sampled at atom bins
    std::vector<std::vector<double>> xi_at(4, std::vector<double>(M.natoms()));
    for (int i = 0; i < 4; ++i)
        for (size_t a = 0; a < M.natoms(); ++a) xi_at[i][a] = xi[i][M.atoms.bin[a]];
    std::vector<std::pair<std::vector<char>, std::vector<char>>> trA;
    for (const auto& t : triples) {
        std::vector<char> A_at(M.natoms()), B_at(M.natoms());
        for (size_t a = 0; a < M.natoms(); ++a) {
            A_at[a] = t.A[M.atoms.bin[a]];
            B_at[a] = t.B[M.atoms.bin[a]];
        }
        trA.emplace_back(std::move(A_at), std::move(B_at));
    }

    int n_hi = static_cast<int>(std::floor(M.maxd - rho + 1e-12));
    for (int n = 4; n <= n_hi; ++n) {
        auto C = M.annulus14(n, rho);
        if (C.empty()) continue;
        size_t k = C.size();

        auto acc = block_reduce<detail::LoopAcc>(
            k, detail::LoopAcc::zero(static_cast<size_t>(bins)),
            [&](size_t lo, size_t hi, detail::LoopAcc a) {
                for (size_t ci = lo; ci < hi; ++ci) {
                    GammaCtx c = make_gamma_ctx(M, C[ci]);
                    a.exact += c.phi / c.phit;

                    std::array<bool, 5> fU, fUi;
                    for (size_t t = 0; t < triples.size(); ++t) {
                        fU[t] = detail::cone_hits_quarters(c.sh_fwd, triples[t].cone_quarters);
                        fUi[t] = detail::cone_hits_quarters(c.sh_inv, triples[t].cone_quarters);
                    }
                    for (size_t t = 0; t < triples.size(); ++t) {
                        double qf = 0.0, qr = 0.0;
                        const auto& A_at = trA[t].first;
                        const auto& B_at = trA[t].second;
                        const auto& A_bin = triples[t].A;
                        const auto& B_bin = triples[t].B;
                        for (size_t i = 0; i < M.natoms(); ++i) {
                            if (c.wa[i] == 0.0) continue;
                            if (B_at[i] && A_bin[c.prebin[i]]) qf += c.wa[i];
                            if (A_at[i] && B_bin[c.prebin[i]]) qr += c.wa[i];
                        }
                        a.accA[t] += 0.5 * ((fU[t] ? qf : 0.0) + (fUi[t] ? qr : 0.0)) / c.phit;
                    }
                    // symmetrized pairing on the test basis
                    std::array<double, 16> q{};
                    for (size_t i = 0; i < M.natoms(); ++i) {
                        if (c.wa[i] == 0.0) continue;
                        double xg[4], xa[4];
                        for (int t = 0; t < 4; ++t) {
                            xg[t] = xi[t][c.prebin[i]];
                            xa[t] = xi_at[t][i];
                        }
                        for (int t = 0; t < 4; ++t) {
                            double w = c.wa[i] * xg[t];
                            for (int u = 0; u < 4; ++u) q[t * 4 + u] += w * xa[u];
                        }
                    }
                    for (int t = 0; t < 4; ++t)
                        for (int u = 0; u < 4; ++u) {
                            double v = 0.5 * q[t * 4 + u] / c.phit;
                            a.accB[t * 4 + u] += v;
                            a.accB[u * 4 + t] += v;
                        }
                    for (size_t i = 0; i < M.natoms(); ++i) {
                        size_t b = static_cast<size_t>(M.atoms.bin[i]);
                        a.accD[b] += c.eab_a[i] / c.eab_sum;
                        a.accNu[b] += c.wa[i] / c.phi;
                    }
                    if (arcs_intersect(c.sh_inv, Arc{quarter_center(0), kQuarterHalf}) &&
                        arcs_intersect(c.sh_fwd, Arc{quarter_center(1), kQuarterHalf}))
                        a.rob += 1;
                    std::vector<double> beta_b = M.beta_bins(c.img);
                    double den = 0.0;
                    for (int b = 0; b < bins; ++b) den += std::exp(M.alpha * beta_b[b]) * M.mu[b];
                    for (int b = 0; b < bins; ++b) {
                        a.Fn[b] += std::exp(0.5 * M.alpha * beta_b[b]) / c.phi;
                        a.Hn[b] += std::exp(M.alpha * beta_b[b]) / den;
                    }
                }
                return a;
            },
            [&](detail::LoopAcc a, const detail::LoopAcc& b) {
                a += b;
                return a;
            },
            M.threads);

        R.ns.push_back(n);
        R.ks.push_back(k);
        double kk = static_cast<double>(k);
        R.exact_dev.push_back(std::abs(acc.exact / kk - 1.0));
        std::array<double, 5> av{};
        for (int t = 0; t < 5; ++t) av[t] = acc.accA[t] / kk;
        R.thmA_val.push_back(av);
        std::array<double, 16> bv{};
        double sadj = 0.0;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                bv[i * 4 + j] = acc.accB[i * 4 + j] / kk;
                sadj = std::max(sadj, std::abs(acc.accB[i * 4 + j] - acc.accB[j * 4 + i]));
            }
        R.B_val.push_back(bv);
        R.sadj.push_back(sadj);
        R.rob_val.push_back(static_cast<double>(acc.rob) / kk);

        std::vector<double> avgD(acc.accD), avgNu(acc.accNu);
        for (double& v : avgD) v /= kk;
        for (double& v : avgNu) v /= kk;
        std::array<double, 3> tvd{}, tvn{};
        const int audits[3] = {64, 32, 16};
        for (int a3 = 0; a3 < 3; ++a3) {
            tvd[a3] = tv_distance(coarsen(avgD, audits[a3]), coarsen(mu_n, audits[a3]));
            tvn[a3] = tv_distance(coarsen(avgNu, audits[a3]), coarsen(mu_n, audits[a3]));
        }
        R.tvD.push_back(tvd);
        R.tvN.push_back(tvn);
        double mhD = 0.0, mhN = 0.0;
        for (int i = 1; i < 4; ++i) { // mean-zero members of the test basis
            double hd = 0.0, hn = 0.0, hmu = 0.0;
            for (int b = 0; b < bins; ++b) {
                hd += xi[i][b] * avgD[b];
                hn += xi[i][b] * avgNu[b];
                hmu += xi[i][b] * mu_n[b];
            }
            mhD = std::max(mhD, std::abs(hd - hmu));
            mhN = std::max(mhN, std::abs(hn - hmu));
        }
        R.maxhD.push_back(mhD);
        R.maxhN.push_back(mhN);

        double fmax = 0.0, hmax = 0.0;
        for (int b = 0; b < bins; ++b) {
            fmax = std::max(fmax, acc.Fn[b]);
            hmax = std::max(hmax, acc.Hn[b]);
        }
        R.F.push_back(fmax / kk);
        R.H.push_back(hmax / kk);
    }
    if (R.ns.empty()) throw EmptyAnnulus("run_theorem_rows: no feasible annulus");
    return R;
}

// ---- Harish-Chandra band over the catalog (atomic phi) ----

struct HcRow {
    std::string word;
    double d = 0.0;
    double phi = 0.0;
    double normalized = 0.0; // phi e^{alpha d/2} / (1+d)
};

struct HcReport {
    std::vector<HcRow> rows; // catalog order
    double band = 0.0;       // max/min of normalized values, d > 4
    double trailing_slope = 0.0; // slope of log shell-medians, d >= 9
    std::vector<std::pair<int, double>> shell_medians;
};

inline HcReport hc_report(const EngineModel& M) {
    HcReport rep;
    std::vector<std::pair<double, double>> hc; // (d, normalized)
    for (size_t i = 0; i < M.natoms(); ++i) {
        double d = M.atoms.d[i];
        if (d <= 4.0 || d >= M.maxd) continue;
        double v = M.phih[i] * std::exp(0.5 * M.alpha * d) / (1.0 + d);
        rep.rows.push_back({M.atoms.word[i], d, M.phih[i], v});
        hc.emplace_back(d, v);
    }
    if (hc.empty()) throw EmptyCatalog("hc_report: no catalog elements beyond d > 4");
    double lo = hc[0].second, hi = hc[0].second;
    std::unordered_map<int, std::vector<double>> shells;
    for (auto& [d, v] : hc) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        shells[static_cast<int>(d)].push_back(v);
    }
    rep.band = hi / lo;
    std::vector<int> ds;
    for (auto& [d, _] : shells) ds.push_back(d);
    std::sort(ds.begin(), ds.end());
    std::vector<double> xs, ys;
    for (int d : ds) {
        auto& v = shells[d];
        std::sort(v.begin(), v.end());
        double med = v.size() % 2 ? v[v.size() / 2]
                                  : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
        rep.shell_medians.emplace_back(d, med);
        if (d >= 9) {
            xs.push_back(d + 0.5);
            ys.push_back(std::log(med));
        }
    }
    rep.trailing_slope = trend_slope(xs, ys);
    return rep;
}

// ---- shadow-lemma band on the atomic weights ----

struct AtomicShadowBand {
    double band = 0.0;
    int count = 0;
};

inline AtomicShadowBand atomic_shadow_band(const EngineModel& M,
                                           const std::vector<double>& wts) {
    double bw = M.part.width();
    double lo = 0.0, hi = 0.0;
    int count = 0;
    for (size_t a = 0; a < M.natoms(); ++a) {
        double d = M.atoms.d[a];
        if (d <= 3.0 || d >= M.maxd) continue;
        Arc sh = shadow_arc(M.x, M.atoms.img[a], M.shadow_R);
        if (2.0 * sh.half_width < 3.0 * bw) continue;
        double m = 0.0;
        for (size_t i = 0; i < M.natoms(); ++i)
            if (std::abs(wrap_signed(M.atoms.ang[i] - sh.center)) <= sh.half_width)
                m += wts[i];
        if (!(m > 0.0)) continue;
        double v = m * std::exp(M.alpha * d);
        if (count == 0) { lo = hi = v; }
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        ++count;
    }
    if (count == 0) throw ShadowTooNarrow("atomic_shadow_band: no resolvable shadows");
    return {hi / lo, count};
}

// ---- paired-product growth (the unboundedness contrast) ----

struct PairedProductRow {
    int n = 0;
    double log_avg = 0.0;
};

inline std::vector<PairedProductRow> paired_product_rows(const EngineModel& M,
                                                         int last_n, int count) {
    std::vector<PairedProductRow> rows;
    for (int n = last_n - count + 1; n <= last_n; ++n) {
        auto C = M.annulus14(n, 1.0);
        if (C.empty()) continue;
        size_t g0 = C.back();
        double v_ang = proj_angle(M.x, M.amap[g0].inverse().act(M.x));
        double w_ang = proj_angle(M.x, M.atoms.img[g0]);
        double acc = 0.0;
        for (size_t ai : C) {
            double b1 = busemann(v_ang, M.x, M.amap[ai].inverse().act(M.x));
            double b2 = busemann(w_ang, M.x, M.atoms.img[ai]);
            acc += std::exp(M.alpha * (b1 + b2));
        }
        rows.push_back({n, std::log(acc / static_cast<double>(C.size()))});
    }
    return rows;
}

} // namespace lab
