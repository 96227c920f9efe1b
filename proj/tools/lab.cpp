#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "lab/lab.hpp"

namespace {

lab::ExperimentConfig load_or_default(const std::string& path, bool explicit_path) {
    namespace fs = std::filesystem;
    if (!explicit_path && !fs::exists(path)) return lab::ExperimentConfig{};
    return lab::load_config(path);
}

int run_all(const lab::ExperimentConfig& cfg) {
    lab::RunResult res = lab::run_experiments(cfg);
    for (const auto& [name, pass] : res.results)
        std::printf("%-8s %s\n", name.c_str(), pass ? "pass" : "FAIL");
    std::printf("reports: %s\n", res.dir.string().c_str());
    return res.all_pass ? lab::kExitOk : lab::kExitFailure;
}

int run_single(lab::ExperimentConfig cfg, const std::string& name) {
    cfg.experiments = {name};
    return run_all(cfg);
}

int run_orbit(const lab::ExperimentConfig& cfg, const std::string& export_path) {
    lab::EngineOptions eo;
    eo.max_dist = cfg.max_dist;
    eo.bin_count = cfg.bin_count;
    eo.budget_cap = static_cast<long long>(cfg.budget_cap);
    eo.threads = cfg.threads;
    lab::EnumOptions en;
    en.budget_cap = eo.budget_cap;
    en.threads = cfg.threads;
    en.prune_margin = cfg.prune_margin;
    lab::GroupModel G = lab::build_schottky(cfg.disk_specs());
    lab::OrbitCatalog cat = lab::enumerate_orbit(G, cfg.base_point(), cfg.max_dist, en);
    lab::AlphaEstimate a = lab::estimate_alpha(cat);
    std::printf("points %zu  nodes_seen %lld  alpha %.9f  poincare %.9f%s\n",
                cat.points.size(), cat.nodes_seen, a.slope, a.poincare,
                a.elementary_warning ? "  [elementary: zero growth exponent]" : "");
    lab::GrowthReport g = lab::growth_report(cat, cfg.rho, a.slope);
    std::printf("%4s %10s %14s %10s\n", "n", "count", "normalized", "ratio");
    for (const auto& r : g.rows)
        std::printf("%4d %10lld %14.6f %10.4f\n", r.n, r.count, r.normalized, r.ratio);
    if (!export_path.empty()) {
        lab::export_catalog(cat, export_path);
        std::printf("catalog written to %s\n", export_path.c_str());
    }
    return lab::kExitOk;
}

int run_measure(const lab::ExperimentConfig& cfg, const std::string& out_csv) {
    lab::EngineModel M = lab::engine_from_config(cfg);
    lab::BinnedMeasure mu = lab::engine_measure(M);
    if (!out_csv.empty()) {
        std::ofstream f(out_csv, std::ios::binary);
        if (!f) throw lab::LabError("cannot open " + out_csv);
        lab::export_measure_csv(f, mu, M.alpha, M.sigma, M.maxd);
        std::printf("measure written to %s\n", out_csv.c_str());
    } else {
        lab::export_measure_csv(std::cout, mu, M.alpha, M.sigma, M.maxd);
    }
    return lab::kExitOk;
}

int run_hc(const lab::ExperimentConfig& cfg) {
    lab::EngineModel M = lab::engine_from_config(cfg);
    lab::HcReport h = lab::hc_report(M);
    std::printf("%-16s %10s %14s %14s\n", "word", "d", "phi", "normalized");
    for (const auto& r : h.rows)
        std::printf("%-16s %10.6f %14.8f %14.8f\n", r.word.c_str(), r.d, r.phi, r.normalized);
    std::printf("band %.6f  trailing shell-median slope %.6f\n", h.band, h.trailing_slope);
    return lab::kExitOk;
}

int run_checks(const lab::ExperimentConfig& cfg) {
    using namespace lab;
    int failures = 0;
    auto check = [&](const char* name, bool ok, const std::string& detail) {
        std::printf("%-28s %s  %s\n", name, ok ? "pass" : "FAIL", detail.c_str());
        if (!ok) ++failures;
    };

    // geometry identities on a deterministic sample cloud
    {
        std::mt19937_64 rng(cfg.seed);
        auto unif = [&]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
        auto pt = [&]() {
            double r = 0.995 * std::sqrt(unif());
            return std::polar(r, kTwoPi * unif());
        };
        double worst = 0.0;
        for (int i = 0; i < 2000; ++i) {
            cplx x = pt(), y = pt();
            double v = kTwoPi * unif();
            double lhs = busemann(v, x, y) + busemann(v, y, x);
            worst = std::max(worst, std::abs(lhs));
            worst = std::max(worst, std::abs(busemann(v, x, y)) - hyp_dist(x, y));
        }
        check("geometry identities", worst < 1e-9, "max violation " + fmt17(worst));
    }

    EngineModel M = engine_from_config(cfg);
    BinnedMeasure mu = engine_measure(M);

    // quadrature unitarity of the boundary representation: smooth functions on
    // the round measure at exponent 1, where the continuum identity is exact
    {
        BinnedMeasure leb = BinnedMeasure::from_masses(
            M.part, std::vector<double>(static_cast<size_t>(M.part.bin_count),
                                        1.0 / M.part.bin_count));
        StepFunction xi{M.part, {}};
        xi.values.resize(leb.masses.size());
        for (int b = 0; b < M.part.bin_count; ++b) {
            double v = M.part.center(b);
            xi.values[b] = 0.7 + std::cos(v) + 0.3 * std::sin(2.0 * v);
        }
        double n0 = l2_norm(xi, leb);
        double worst = 0.0;
        for (size_t k = 0; k < M.G.gens.size(); k += 2) {
            StepFunction px = pi_apply(M.G.gens[k], xi, DiskPoint{0.0, 0.0}, leb, 1.0);
            worst = std::max(worst, std::abs(l2_norm(px, leb) / n0 - 1.0));
        }
        check("unitarity (quadrature)", worst < 0.01, "max defect " + fmt17(worst));
    }

    // conformality of the density under a change of base point
    {
        double dev = conformality_check(M.cat, M.alpha, M.part, DiskPoint::of(M.x),
                                        DiskPoint{0.1, 0.2},
                                        ConformalityOptions{M.sigma, M.maxd, 64});
        check("conformality", dev < 0.10, "weighted median deviation " + fmt17(dev));
    }

    // two-sided shadow lemma band
    {
        ShadowReport sh = shadow_lemma_report(M.cat, mu, M.shadow_R, M.alpha);
        check("shadow lemma", !sh.flagged && sh.band < 20.0,
              "band " + fmt17(sh.band) + " over " + std::to_string(sh.count) + " shadows");
    }

    // distance-weight kernel family along the attractor ray
    {
        MoebiusMap g = M.G.gens.size() >= 4 ? compose(M.G.gens[0], M.G.gens[2]) : M.G.gens[0];
        cplx z = attracting_fixed_point(g);
        double v0 = wrap_angle(std::atan2(z.imag(), z.real()));
        DwReport r = dw_family_check(M, DwKernel::SqrtPoisson, v0, cfg.dw_r0,
                                     radial_path(M.x, z, {6.0, 10.0, 14.0}));
        check("dirac-weight family", r.nonneg && r.max_total_dev < 1e-12 && r.tails_decreasing &&
                                         r.final_tail < 0.05,
              "final tail " + fmt17(r.final_tail));
    }
    return failures == 0 ? kExitOk : kExitFailure;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"hyperbolic orbit laboratory"};
    app.require_subcommand(1);

    std::string config_path = "configs/reference.cfg";
    bool config_given = false;
    app.add_option("--config", config_path, "configuration file (key = value lines)")
        ->each([&](const std::string&) { config_given = true; });

    double opt_max_dist = -1.0;
    int opt_threads = -1;
    std::string opt_out_dir, opt_export, opt_csv;

    CLI::App* c_run = app.add_subcommand("run", "run the configured experiment suite");
    c_run->add_option("--out-dir", opt_out_dir, "report output directory");
    CLI::App* c_orbit = app.add_subcommand("orbit", "enumerate the orbit and report growth");
    c_orbit->add_option("--max-dist", opt_max_dist, "enumeration depth");
    c_orbit->add_option("--export", opt_export, "write the catalog to a file");
    CLI::App* c_measure = app.add_subcommand("measure", "emit the boundary measure as CSV");
    c_measure->add_option("--out", opt_csv, "output CSV path (default: stdout)");
    CLI::App* c_hc = app.add_subcommand("hc", "spherical-function table over the catalog");
    CLI::App* c_thmA = app.add_subcommand("thmA", "cone-average equidistribution experiment");
    CLI::App* c_corB = app.add_subcommand("corB", "matrix-coefficient projection experiment");
    CLI::App* c_thmD = app.add_subcommand("thmD", "reweighted-family TV convergence experiment");
    CLI::App* c_roblin = app.add_subcommand("roblin", "paired-cone counting experiment");
    CLI::App* c_checks = app.add_subcommand("checks", "fast validation battery");
    for (CLI::App* sc : {c_run, c_orbit, c_measure, c_hc, c_thmA, c_corB, c_thmD, c_roblin, c_checks})
        sc->add_option("--threads", opt_threads, "worker threads (0 = auto)");

    CLI11_PARSE(app, argc, argv);

    try {
        lab::ExperimentConfig cfg = load_or_default(config_path, config_given);
        if (opt_max_dist > 0.0) cfg.max_dist = opt_max_dist;
        if (opt_threads >= 0) cfg.threads = opt_threads;
        if (!opt_out_dir.empty()) cfg.out_dir = opt_out_dir;

        if (c_run->parsed()) return run_all(cfg);
        if (c_orbit->parsed()) return run_orbit(cfg, opt_export);
        if (c_measure->parsed()) return run_measure(cfg, opt_csv);
        if (c_hc->parsed()) return run_hc(cfg);
        if (c_thmA->parsed()) return run_single(cfg, "thmA");
        if (c_corB->parsed()) return run_single(cfg, "corB");
        if (c_thmD->parsed()) return run_single(cfg, "thmD");
        if (c_roblin->parsed()) return run_single(cfg, "roblin");
        if (c_checks->parsed()) return run_checks(cfg);
    } catch (const lab::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return lab::kExitConfig;
    } catch (const lab::BudgetExceeded& e) {
        std::fprintf(stderr, "budget exceeded: %s\n", e.what());
        return lab::kExitBudget;
    } catch (const lab::LabError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return lab::kExitFailure;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "unexpected error: %s\n", e.what());
        return lab::kExitFailure;
    }
    return lab::kExitOk;
}
