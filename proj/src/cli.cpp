#include "occlab/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "occlab/condition_x.hpp"
#include "occlab/config.hpp"
#include "occlab/error.hpp"
#include "occlab/montecarlo.hpp"
#include "occlab/occupation_option.hpp"
#include "occlab/parametrix.hpp"
#include "occlab/rate_lab.hpp"

namespace occlab {

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitAssert = 4;

struct Context {
    std::string sub;
    ConfigDoc doc;
    unsigned workers = 1;
    std::vector<std::string> failures;

    void check(bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    }
};

std::string fmt(double v) { return format_double(v); }

// Optional assert threshold; absent keys are not recorded in the manifest.
std::optional<double> threshold(SectionReader& r, const std::string& key) {
    if (!r.has(key)) return std::nullopt;
    return r.real(key, 0.0);
}

template <class F>
void with_section(const std::string& sec, F&& f) {
    try {
        f();
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        if (msg.rfind(sec + ".", 0) == 0) throw;
        throw ConfigError(sec + "." + msg);
    }
}

void write_rate_rows(std::ostringstream& os, const std::string& sub, const RateReport& rep) {
    os << "# occlab " << sub << " v1\n";
    os << "n,error,ci,theory_bound\n";
    for (const auto& row : rep.rows)
        os << row.n << ',' << fmt(row.error) << ',' << fmt(row.ci) << ',' << fmt(row.theory_bound) << '\n';
    if (rep.fit)
        os << "# fit slope=" << fmt(rep.fit->slope) << " slope_ci=" << fmt(rep.fit->slope_ci)
           << " intercept=" << fmt(rep.fit->intercept) << " used=" << rep.fit->used << '\n';
    else
        os << "# fit none: " << rep.fit_note << '\n';
    for (const auto& row : rep.rows)
        if (row.below_signal) os << "# excluded n=" << row.n << " below 3 ci\n";
    os << "# n_ref=" << rep.n_ref << " m_paths=" << rep.m_paths << '\n';
}

RateConfig read_rate_common(SectionReader& r) {
    RateConfig c;
    c.model = read_model(r);
    c.h = parse_functional(r.text("functional", "below:0"));
    c.x0 = r.real("x0", 0.0);
    c.T = r.real("T", 1.0);
    c.n_list = r.counts("n_list", {8, 16, 32, 64, 128, 256, 512, 1024});
    c.m_paths = r.count("m_paths", 100000);
    c.seed = r.u64("seed", 1);
    c.beta = r.real("beta", 1.0);
    if (!(c.beta >= 1.0)) throw ConfigError("beta: must be >= 1, got " + fmt(c.beta));
    c.B_guess = r.real("B", 1.0);
    if (!(c.B_guess > 0.0)) throw ConfigError("B: must be positive, got " + fmt(c.B_guess));
    c.ref_multiplier = r.count("ref_multiplier", 64);
    c.n_ref = r.count("n_ref", 0);
    return c;
}

// error(n) / sqrt(D(n)), max over min
double shape_ratio(const RateConfig& c, const RateReport& rep) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& row : rep.rows) {
        const double q = row.error / std::sqrt(rate_D(c.beta, c.T, row.n));
        lo = std::min(lo, q);
        hi = std::max(hi, q);
    }
    return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

void check_slope(Context& ctx, const RateReport& rep, std::optional<double> lo, std::optional<double> hi) {
    if (!lo && !hi) return;
    if (!rep.fit) {
        ctx.check(false, "no fitted slope: " + rep.fit_note);
        return;
    }
    if (lo) ctx.check(rep.fit->slope >= *lo, "slope " + fmt(rep.fit->slope) + " < slope_min " + fmt(*lo));
    if (hi) ctx.check(rep.fit->slope <= *hi, "slope " + fmt(rep.fit->slope) + " > slope_max " + fmt(*hi));
}

std::string run_strong(SectionReader& r, Context& ctx) {
    RateConfig c;
    std::optional<double> lo, hi, ratio_max;
    bool decreasing = false;
    with_section(r.name(), [&] {
        c = read_rate_common(r);
        c.p_strong = r.real("p", 2.0);
        lo = threshold(r, "slope_min");
        hi = threshold(r, "slope_max");
        ratio_max = threshold(r, "ratio_max");
        decreasing = r.flag("decreasing", false);
        r.finish();
        c.workers = ctx.workers;
        c.validate();
    });
    const auto rep = strong_error(c);
    std::ostringstream os;
    write_rate_rows(os, ctx.sub, rep);
    const double ratio = shape_ratio(c, rep);
    os << "# shape_ratio=" << fmt(ratio) << '\n';
    check_slope(ctx, rep, lo, hi);
    if (ratio_max) ctx.check(ratio <= *ratio_max, "shape ratio " + fmt(ratio) + " > ratio_max " + fmt(*ratio_max));
    if (decreasing)
        for (std::size_t j = 1; j < rep.rows.size(); ++j)
            ctx.check(rep.rows[j].error < rep.rows[j - 1].error,
                      "error not decreasing at n=" + std::to_string(rep.rows[j].n));
    return os.str();
}

std::string run_weak(SectionReader& r, Context& ctx) {
    RateConfig c;
    std::optional<double> hi;
    with_section(r.name(), [&] {
        c = read_rate_common(r);
        c.k_weak = static_cast<int>(r.integer("k", 1));
        c.f_weak = parse_functional(r.text("f", "const:1"));
        hi = threshold(r, "slope_max");
        r.finish();
        c.workers = ctx.workers;
        c.validate();
    });
    const auto rep = weak_error(c);
    std::ostringstream os;
    write_rate_rows(os, ctx.sub, rep);
    check_slope(ctx, rep, std::nullopt, hi);
    return os.str();
}

std::string run_analytic(SectionReader& r, Context& ctx) {
    RateConfig c;
    AnalyticSpec phi;
    std::optional<double> hi;
    with_section(r.name(), [&] {
        c = read_rate_common(r);
        c.f_weak = parse_functional(r.text("f", "const:1"));
        phi = AnalyticSpec::exp_neg(r.real("R", 4.0));
        hi = threshold(r, "slope_max");
        r.finish();
        c.workers = ctx.workers;
        c.validate();
        analytic_constant(c, phi);
    });
    const auto rep = analytic_report(c, phi, coupled_sample(c));
    std::ostringstream os;
    write_rate_rows(os, ctx.sub, rep);
    os << "# phi=exp(-z) R=" << fmt(phi.R) << " constant=" << fmt(analytic_constant(c, phi)) << '\n';
    check_slope(ctx, rep, std::nullopt, hi);
    return os.str();
}

std::string run_verify_x(SectionReader& r, Context& ctx) {
    StableWithDrift m;
    double t_min = 0, t_max = 0, x = 0, T = 0;
    std::size_t n_t = 0;
    bool fd_check = false;
    std::optional<double> lo, hi, fd_tol;
    with_section(r.name(), [&] {
        const auto pm = read_model(r);
        if (!std::holds_alternative<StableWithDrift>(pm)) throw ConfigError("model: verify-x needs stable_drift");
        m = std::get<StableWithDrift>(pm);
        r.u64("seed", 1);  // deterministic; recorded for the manifest
        t_min = r.real("t_min", 1e-3);
        t_max = r.real("t_max", 1e-1);
        n_t = r.count("n_t", 9);
        x = r.real("x", 0.0);
        T = r.real("T", 1.0);
        fd_check = r.flag("fd_check", false);
        lo = threshold(r, "beta_min");
        hi = threshold(r, "beta_max");
        fd_tol = threshold(r, "fd_tol");
        r.finish();
        require(t_min > 0.0 && t_max > t_min, "t_min, t_max: need 0 < t_min < t_max");
        require(n_t >= 3, "n_t: need at least 3 times");
    });
    const auto ts = logspace(t_min, t_max, n_t);
    const auto e = estimate_beta(m, ts, x, T);
    std::ostringstream os;
    os << "# occlab verify-x v1\n";
    os << "t,N_t\n";
    for (std::size_t i = 0; i < e.t.size(); ++i) os << fmt(e.t[i]) << ',' << fmt(e.N[i]) << '\n';
    os << "# fit beta_hat=" << fmt(e.beta_hat) << " beta_ci=" << fmt(e.beta_ci) << " B_hat=" << fmt(e.B_hat) << '\n';
    if (lo) ctx.check(e.beta_hat >= *lo, "beta_hat " + fmt(e.beta_hat) + " < beta_min " + fmt(*lo));
    if (hi) ctx.check(e.beta_hat <= *hi, "beta_hat " + fmt(e.beta_hat) + " > beta_max " + fmt(*hi));
    if (fd_check) {
        double gap = 0.0;
        for (double t : ts) {
            const quad::SinhGrid g(x + m.c * t, 0.5 * m.p.length(t), 1e6, 0.02);
            const auto an = dt_density(m, t, x, g.nodes(), DtMethod::Analytic);
            const auto fd = dt_density(m, t, x, g.nodes(), DtMethod::FiniteDifference);
            gap = std::max(gap, max_relative_gap(an.dp_dt_values, fd.dp_dt_values));
        }
        os << "# fd_max_relative_gap=" << fmt(gap) << '\n';
        if (fd_tol) ctx.check(gap <= *fd_tol, "fd gap " + fmt(gap) + " > fd_tol " + fmt(*fd_tol));
    }
    return os.str();
}

std::string run_parametrix(SectionReader& r, Context& ctx) {
    ParametrixConfig pc;
    int kernel = -1;
    double y_min = 0, y_max = 0, t_hi = 0;
    std::size_t n_y = 0, n_t = 0;
    bool check_dt = false, refine = false;
    std::optional<double> mass_tol, lo, hi, ptx_change;
    with_section(r.name(), [&] {
        if (!r.has("model")) throw ConfigError("model: parametrix needs model = sde");
        const auto pm = read_model(r);
        if (!std::holds_alternative<LocallyStableSDE>(pm)) throw ConfigError("model: parametrix needs model = sde");
        const auto& sde = std::get<LocallyStableSDE>(pm);
        pc.drift = sde.drift;
        pc.p = sde.p;
        pc.tail = sde.tail;
        r.u64("seed", 1);  // deterministic; recorded for the manifest
        pc.x0 = r.real("x0", pc.x0);
        pc.T = r.real("T", pc.T);
        pc.K_max = static_cast<int>(r.integer("K_max", pc.K_max));
        pc.t_lo = r.real("t_lo", pc.t_lo);
        pc.t_min = r.real("t_min", pc.t_min);
        pc.per_decade = static_cast<int>(r.integer("per_decade", pc.per_decade));
        pc.extra_times = r.reals("extra_times", pc.extra_times);
        pc.du = r.real("du", pc.du);
        pc.width = r.real("width", pc.width);
        pc.reach = r.real("reach", pc.reach);
        pc.n_s = static_cast<int>(r.integer("n_s", pc.n_s));
        pc.tau_series = r.real("tau_series", pc.tau_series);
        kernel = static_cast<int>(r.integer("kernel", -1));
        y_min = r.real("y_min", -3.0);
        y_max = r.real("y_max", 7.0);
        n_y = r.count("n_y", 101);
        check_dt = r.flag("check_dt", false);
        n_t = r.count("n_t", 9);
        t_hi = r.real("t_hi", 0.1);
        refine = r.flag("refine", false);
        mass_tol = threshold(r, "mass_tol");
        lo = threshold(r, "beta_min");
        hi = threshold(r, "beta_max");
        ptx_change = threshold(r, "ptx_change_max");
        r.finish();
        pc.workers = ctx.workers;
        pc.validate();
        require(kernel >= -1 && kernel <= pc.K_max, "kernel: must be -1 (density) or 0..K_max");
        require(n_y >= 2 && y_max > y_min, "y_min, y_max, n_y: need n_y >= 2 and y_max > y_min");
    });
    Parametrix P(pc);
    P.build();
    std::vector<double> ys(n_y);
    for (std::size_t j = 0; j < n_y; ++j)
        ys[j] = y_min + (y_max - y_min) * static_cast<double>(j) / static_cast<double>(n_y - 1);
    std::ostringstream os;
    os << kernel_csv(P, kernel, ys);
    double worst = 0.0;
    for (std::size_t i = 0; i < P.times().size(); ++i) {
        const double m = P.mass(i);
        os << "# mass t=" << fmt(P.times()[i]) << " value=" << fmt(m) << '\n';
        worst = std::max(worst, std::abs(m - 1.0));
    }
    const auto& s = P.series();
    os << "# series C0=" << fmt(s.C0_hat) << " C=" << fmt(s.C_hat) << " tail_bound=" << fmt(s.tail_bound) << '\n';
    const double C = ptx_constant(P);
    os << "# ptx C=" << fmt(C) << '\n';
    if (mass_tol) ctx.check(worst <= *mass_tol, "mass error " + fmt(worst) + " > mass_tol " + fmt(*mass_tol));
    if (refine) {
        ParametrixConfig fine = pc;
        fine.du = 0.5 * pc.du;
        fine.n_s = 2 * pc.n_s;
        Parametrix F(fine);
        F.build();
        const double Cf = ptx_constant(F);
        const double change = std::abs(Cf - C) / Cf;
        os << "# refined ptx C=" << fmt(Cf) << " change=" << fmt(change) << '\n';
        if (ptx_change)
            ctx.check(change <= *ptx_change, "ptx change " + fmt(change) + " > ptx_change_max " + fmt(*ptx_change));
    }
    if (check_dt) {
        const auto d = check_dt_bound(P, n_t, t_hi);
        for (std::size_t i = 0; i < d.t.size(); ++i)
            os << "# dt t=" << fmt(d.t[i]) << " N_t=" << fmt(d.N[i]) << " ratio=" << fmt(d.ratio[i]) << '\n';
        os << "# dt beta_hat=" << fmt(d.beta.beta_hat) << " beta_ci=" << fmt(d.beta.beta_ci)
           << " B_hat=" << fmt(d.beta.B_hat) << " sup_ratio=" << fmt(d.sup_ratio) << '\n';
        if (lo) ctx.check(d.beta.beta_hat >= *lo, "beta_hat " + fmt(d.beta.beta_hat) + " < beta_min " + fmt(*lo));
        if (hi) ctx.check(d.beta.beta_hat <= *hi, "beta_hat " + fmt(d.beta.beta_hat) + " > beta_max " + fmt(*hi));
    }
    return os.str();
}

std::string run_price(SectionReader& r, Context& ctx) {
    OptionConfig c;
    bool gap_decreasing = false;
    with_section(r.name(), [&] {
        c.model = read_model(r);
        c.opt.s0 = r.real("s0", 1.0);
        c.opt.K = r.real("K", 1.0);
        c.opt.L = r.real("L", 0.9);
        c.opt.rho = r.real("rho", 1.0);
        c.opt.r = r.real("r", 0.02);
        c.opt.T = r.real("T", 1.0);
        c.opt.lambda_moment = r.real("lambda", 2.0);
        c.n_list = r.counts("n_list", {4, 8, 16, 32, 64, 128});
        c.m_paths = r.count("m_paths", 100000);
        c.seed = r.u64("seed", 1);
        c.ref_multiplier = r.count("ref_multiplier", 8);
        c.n_ref = r.count("n_ref", 0);
        c.beta = r.real("beta", 1.0);
        if (!(c.beta >= 1.0)) throw ConfigError("beta: must be >= 1, got " + fmt(c.beta));
        c.B = r.real("B", 1.0);
        c.G = r.real("G", 0.0);
        gap_decreasing = r.flag("gap_decreasing", false);
        r.finish();
        c.workers = ctx.workers;
        c.validate();
        require_moment_model(c.model);
    });
    const auto t = price_table(c);
    std::ostringstream os;
    os << "# occlab price-option v1\n";
    os << "n,price,ci,ref_price,ref_ci,gap,bound41,bound42\n";
    for (const auto& row : t.rows)
        os << row.n << ',' << fmt(row.price) << ',' << fmt(row.ci) << ',' << fmt(row.ref_price) << ','
           << fmt(row.ref_ci) << ',' << fmt(row.gap) << ',' << fmt(row.bound41) << ',' << fmt(row.bound42) << '\n';
    os << "# gap_ci";
    for (const auto& row : t.rows) os << ' ' << fmt(row.gap_ci);
    os << '\n';
    os << "# G=" << fmt(t.G.G) << " G_ci=" << fmt(t.G.ci) << " heavy_tail=" << (t.G.heavy_tail ? "true" : "false")
       << " n_ref=" << t.n_ref << '\n';
    if (gap_decreasing)
        for (std::size_t j = 1; j < t.rows.size(); ++j)
            ctx.check(std::abs(t.rows[j].gap) < std::abs(t.rows[j - 1].gap),
                      "|gap| not decreasing at n=" + std::to_string(t.rows[j].n));
    return os.str();
}

std::string run_simulate(SectionReader& r, Context& ctx) {
    ProcessModel m;
    double x0 = 0, T = 0;
    std::size_t n = 0, paths = 0;
    std::uint64_t seed = 0;
    with_section(r.name(), [&] {
        m = read_model(r);
        x0 = r.real("x0", 0.0);
        T = r.real("T", 1.0);
        n = r.count("n", 100);
        paths = r.count("paths", 10);
        seed = r.u64("seed", 1);
        r.finish();
        require(n >= 1, "n: must be >= 1");
        require(paths >= 1, "paths: must be >= 1");
        require(T > 0.0 && std::isfinite(T), "T: must be positive");
    });
    std::vector<PathGrid> out(paths);
    parallel_for(paths, ctx.workers, [&](std::size_t i) {
        RngStream rng = RngStream::for_path(seed, i);
        out[i] = simulate_grid(m, x0, T, n, rng);
    });
    std::ostringstream os;
    os << "# occlab simulate v1\n";
    os << "path,t,x\n";
    for (std::size_t i = 0; i < paths; ++i)
        for (std::size_t k = 0; k <= n; ++k)
            os << i << ',' << fmt(T * static_cast<double>(k) / static_cast<double>(n)) << ',' << fmt(out[i].states[k])
               << '\n';
    return os.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("cannot write " + path);
    f << text;
    if (!f) throw ConfigError("write failed: " + path);
}

std::string manifest(const std::string& sub, const SectionReader& r, const std::vector<std::string>& sets) {
    nlohmann::ordered_json j;
    j["tool"] = "occlab";
    j["version"] = kVersion;
    j["subcommand"] = sub;
    nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.resolved()) cfg[k] = v;
    j["config"] = cfg;
    if (cfg.contains("seed")) j["seed"] = std::stoull(cfg["seed"].get<std::string>());
    j["overrides"] = sets;
    return j.dump(2) + "\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"occlab: Riemann-sum functionals, condition X and occupation-time options"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    std::string config_path, out_path;
    std::optional<std::uint64_t> seed;
    unsigned workers = 1;
    bool do_assert = false;
    std::vector<std::string> sets;

    const std::vector<std::pair<std::string, std::string>> subs{
        {"strong-rate", "strong L_p error of the Riemann sum against n"},
        {"weak-rate", "weak error E I^k f(X_T) against n"},
        {"analytic-weak", "weak error for an analytic phi(I)"},
        {"verify-x", "estimate beta in |d/dt p_t| <= B t^-beta for the stable process with drift"},
        {"parametrix", "parametrix density tables, mass, series and constants"},
        {"price-option", "occupation-time option prices, coupled gaps and error bounds"},
        {"simulate", "dump raw sample paths"},
    };
    for (const auto& [name, help] : subs) {
        auto* sc = app.add_subcommand(name, help);
        sc->add_option("--config", config_path, "config file")->check(CLI::ExistingFile);
        sc->add_option("--seed", seed, "master seed, overrides <section>.seed");
        sc->add_option("--workers", workers, "worker threads; never changes output")->check(CLI::Range(1u, 1024u));
        sc->add_option("--out", out_path, "CSV path (default <subcommand>.csv); manifest goes to <out>.manifest.json");
        sc->add_flag("--assert", do_assert, "exit 4 when a configured threshold is missed");
        sc->add_option("--set", sets, "override, section.key=value")->take_all();
    }

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << '\n';
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "occlab: " << e.what() << '\n';
        return kExitConfig;
    }
    const std::string sub = app.get_subcommands().front()->get_name();

    try {
        Context ctx;
        ctx.sub = sub;
        ctx.workers = workers;
        if (!config_path.empty()) ctx.doc = load_config(config_path);
        for (const auto& s : sets) apply_override(ctx.doc, s);
        if (seed) apply_override(ctx.doc, sub + ".seed=" + std::to_string(*seed));
        for (const auto& [name, _] : ctx.doc.sections) {
            const bool known = std::any_of(subs.begin(), subs.end(), [&](const auto& p) { return p.first == name; });
            if (!known) throw ConfigError("unknown config section [" + name + "]");
        }

        SectionReader r(ctx.doc, sub);
        std::string csv;
        if (sub == "strong-rate")
            csv = run_strong(r, ctx);
        else if (sub == "weak-rate")
            csv = run_weak(r, ctx);
        else if (sub == "analytic-weak")
            csv = run_analytic(r, ctx);
        else if (sub == "verify-x")
            csv = run_verify_x(r, ctx);
        else if (sub == "parametrix")
            csv = run_parametrix(r, ctx);
        else if (sub == "price-option")
            csv = run_price(r, ctx);
        else
            csv = run_simulate(r, ctx);

        const std::string path = out_path.empty() ? sub + ".csv" : out_path;
        write_file(path, csv);
        write_file(path + ".manifest.json", manifest(sub, r, sets));
        out << "wrote " << path << '\n';
        if (do_assert && !ctx.failures.empty()) {
            for (const auto& f : ctx.failures) err << "assert failed: " << f << '\n';
            return kExitAssert;
        }
        return 0;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }
}

}  // namespace occlab
