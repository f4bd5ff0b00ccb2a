#include "occlab/occupation_option.hpp"

#include <algorithm>
#include <cmath>
#include <variant>

#include "occlab/error.hpp"
#include "occlab/functionals.hpp"
#include "occlab/kernels.hpp"
#include "occlab/montecarlo.hpp"
#include "occlab/rate_lab.hpp"
#include "occlab/rng.hpp"

namespace occlab {

namespace {

constexpr double kZ95 = 1.959963984540054;
constexpr std::uint32_t kMomentDomain = 7;

PriceEstimate mean_ci(std::vector<double> a) {
    const double M = static_cast<double>(a.size());
    const double m = kernels::sum(a) / M;
    for (double& v : a) v = (v - m) * (v - m);
    const double var = a.size() > 1 ? kernels::sum(a) / (M - 1.0) : 0.0;
    return {m, kZ95 * std::sqrt(var / M)};
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

PriceEstimate price_on_grid(const OptionSpec& opt, const ProcessModel& model, std::size_t n, std::size_t m_paths,
                            std::uint64_t seed, unsigned workers) {
    opt.validate();
    validate(model);
    require(n >= 2, "price: n must be >= 2");
    require(m_paths >= 2, "price: m_paths must be >= 2");
    std::vector<double> pay(m_paths);
    parallel_for(m_paths, workers, [&](std::size_t i) {
        thread_local std::vector<double> states;
        states.resize(n + 1);
        RngStream rng = RngStream::for_path(seed, i);
        simulate_into(model, 0.0, opt.T, states, rng);
        pay[i] = option_payoff(opt, states, 1, n);
    });
    return mean_ci(std::move(pay));
}

}  // namespace

void OptionSpec::validate() const {
    require(s0 > 0.0 && std::isfinite(s0), "option: s0 must be positive");
    require(K >= 0.0 && std::isfinite(K), "option: K must be nonnegative");
    require(L > 0.0, "option: L must be positive");
    require(rho >= 0.0 && std::isfinite(rho), "option: rho must be nonnegative");
    require(std::isfinite(r), "option: r must be finite");
    require(T > 0.0 && std::isfinite(T), "option: T must be positive");
    require(lambda_moment > 1.0 && std::isfinite(lambda_moment), "option: lambda must be > 1");
}

double OptionSpec::log_barrier() const { return std::log(L / s0); }

double option_payoff(const OptionSpec& opt, std::span<const double> states, std::size_t stride, std::size_t n) {
    const double xT = states[stride * n];
    const double call = std::max(opt.s0 * std::exp(xT) - opt.K, 0.0);
    double damp = 1.0;
    if (opt.rho > 0.0) {
        const auto hits = kernels::count_le_strided(states, stride, n, opt.log_barrier());
        damp = std::exp(-opt.rho * opt.T / static_cast<double>(n) * static_cast<double>(hits));
    }
    return std::exp(-opt.r * opt.T) * damp * call;
}

PriceEstimate price_discrete(const OptionSpec& opt, const ProcessModel& model, std::size_t n, std::size_t m_paths,
                             std::uint64_t seed, unsigned workers) {
    return price_on_grid(opt, model, n, m_paths, seed, workers);
}

PriceEstimate price_reference(const OptionSpec& opt, const ProcessModel& model, std::size_t n_ref,
                              std::size_t m_paths, std::uint64_t seed, unsigned workers) {
    return price_on_grid(opt, model, n_ref, m_paths, seed, workers);
}

double lognormal_call(const OptionSpec& opt, double diffusion) {
    opt.validate();
    const double v = 2.0 * diffusion * opt.T;
    const double disc = std::exp(-opt.r * opt.T);
    if (opt.K == 0.0) return disc * opt.s0 * std::exp(0.5 * v);
    const double sv = std::sqrt(v);
    const double d1 = (std::log(opt.s0 / opt.K) + v) / sv;
    const double d2 = d1 - sv;
    return disc * (opt.s0 * std::exp(0.5 * v) * normal_cdf(d1) - opt.K * normal_cdf(d2));
}

void require_moment_model(const ProcessModel& model) {
    if (std::holds_alternative<StableProcess>(model) || std::holds_alternative<StableWithDrift>(model)) {
        const StableParams& p = std::holds_alternative<StableProcess>(model) ? std::get<StableProcess>(model).p
                                                                              : std::get<StableWithDrift>(model).p;
        if (p.alpha < 2.0)
            throw ConfigError("option bounds: exponential moments of a stable law diverge; use the Brownian model or "
                              "a tempered/truncated SDE");
    }
    if (const auto* sde = std::get_if<LocallyStableSDE>(&model)) {
        if (sde->p.alpha < 2.0 && sde->tail.kind() == TailSpec::Kind::PureStable)
            throw ConfigError("option bounds: a pure stable tail has no exponential moments; use tempered or truncated");
    }
}

MomentEstimate estimate_G(const OptionSpec& opt, const ProcessModel& model, std::size_t m_paths, std::uint64_t seed,
                          unsigned workers) {
    opt.validate();
    require_moment_model(model);
    require(m_paths >= 2, "estimate_G: m_paths must be >= 2");
    std::vector<double> v(m_paths);
    parallel_for(m_paths, workers, [&](std::size_t i) {
        RngStream rng = RngStream::for_path(seed, i, kMomentDomain);
        const double x = simulate_terminal(model, 0.0, opt.T, rng);
        v[i] = std::pow(opt.s0 * std::exp(x), opt.lambda_moment);
    });
    const auto e = mean_ci(std::move(v));
    MomentEstimate out{e.price, e.ci, false};
    out.heavy_tail = !(out.ci <= 0.25 * out.G);
    return out;
}

double bound_prop41(const OptionSpec& opt, double beta, double B, std::size_t n, double G) {
    opt.validate();
    require(G > 0.0 && std::isfinite(G), "bound: G must be positive and finite");
    const double lam = opt.lambda_moment;
    return std::exp(-opt.r * opt.T) * opt.rho * std::pow(G, 1.0 / lam) * const_C(opt.T, lam / (lam - 1.0), B) *
           std::sqrt(rate_D(beta, opt.T, n));
}

double rate_D_tilde(double beta, double T, double lambda, std::size_t n) {
    require(beta >= 1.0, "D~: beta must be >= 1");
    require(lambda > 1.0, "D~: lambda must be > 1");
    require(n >= 2, "D~: n must be >= 2");
    const double nn = static_cast<double>(n);
    const double e = 1.0 - 1.0 / lambda;
    if (beta == 1.0) return std::pow(nn, -e) * std::log(nn);
    return std::max(1.0, std::pow(T, 1.0 - beta) / (beta - 1.0)) * std::pow(nn, -e / beta);
}

double bound_prop42(const OptionSpec& opt, double beta, double B, std::size_t n, double G) {
    opt.validate();
    require(G > 0.0 && std::isfinite(G), "bound: G must be positive and finite");
    require(B > 0.0, "bound: B must be positive");
    const double rT = opt.rho * opt.T;
    const double first = B * opt.rho * opt.T * opt.T * (1.0 + rT) * std::exp(rT);
    return std::pow(2.0, std::max(beta, 2.0) + 1.0) * std::max(first, G) * std::exp(-opt.r * opt.T) *
           rate_D_tilde(beta, opt.T, opt.lambda_moment, n);
}

double truncation_level(double beta, double lambda, std::size_t n) {
    return std::pow(static_cast<double>(n), 1.0 / (beta * lambda));
}

std::size_t OptionConfig::resolved_n_ref() const {
    if (n_ref != 0) return n_ref;
    std::size_t mx = 0;
    for (auto n : n_list) mx = std::max(mx, n);
    return ref_multiplier * mx;
}

void OptionConfig::validate() const {
    opt.validate();
    occlab::validate(model);
    require(!n_list.empty(), "n_list must not be empty");
    for (std::size_t j = 0; j < n_list.size(); ++j) {
        require(n_list[j] >= 2, "n_list entries must be >= 2");
        if (j > 0) require(n_list[j] > n_list[j - 1], "n_list must be strictly ascending");
    }
    require(m_paths >= 2, "m_paths must be >= 2");
    require(ref_multiplier >= 1, "ref_multiplier must be >= 1");
    require(beta >= 1.0 && std::isfinite(beta), "beta must be >= 1");
    require(B > 0.0 && std::isfinite(B), "B must be positive");
    require(G >= 0.0 && std::isfinite(G), "G must be nonnegative (0 = estimate)");
    const std::size_t nr = resolved_n_ref();
    for (auto n : n_list)
        require(nr % n == 0, "n_ref = " + std::to_string(nr) + " is not divisible by n = " + std::to_string(n));
}

PriceTable price_table(const OptionConfig& cfg) {
    cfg.validate();
    require_moment_model(cfg.model);
    PriceTable out;
    out.n_ref = cfg.resolved_n_ref();
    const std::size_t M = cfg.m_paths, nr = out.n_ref, J = cfg.n_list.size();
    std::vector<double> ref(M);
    std::vector<std::vector<double>> coarse(J, std::vector<double>(M));
    parallel_for(M, cfg.workers, [&](std::size_t i) {
        thread_local std::vector<double> states;
        states.resize(nr + 1);
        RngStream rng = RngStream::for_path(cfg.seed, i);
        simulate_into(cfg.model, 0.0, cfg.opt.T, states, rng);
        ref[i] = option_payoff(cfg.opt, states, 1, nr);
        for (std::size_t j = 0; j < J; ++j) {
            const std::size_t n = cfg.n_list[j];
            coarse[j][i] = option_payoff(cfg.opt, states, nr / n, n);
        }
    });
    if (cfg.G > 0.0) {
        out.G = {cfg.G, 0.0, false};
    } else {
        out.G = estimate_G(cfg.opt, cfg.model, M, cfg.seed, cfg.workers);
    }
    const auto r = mean_ci(ref);
    for (std::size_t j = 0; j < J; ++j) {
        PriceRow row;
        row.n = cfg.n_list[j];
        const auto c = mean_ci(coarse[j]);
        std::vector<double> d(M);
        for (std::size_t i = 0; i < M; ++i) d[i] = coarse[j][i] - ref[i];
        const auto g = mean_ci(std::move(d));
        row.price = c.price;
        row.ci = c.ci;
        row.ref_price = r.price;
        row.ref_ci = r.ci;
        row.gap = g.price;
        row.gap_ci = g.ci;
        row.bound41 = bound_prop41(cfg.opt, cfg.beta, cfg.B, row.n, out.G.G);
        row.bound42 = bound_prop42(cfg.opt, cfg.beta, cfg.B, row.n, out.G.G);
        out.rows.push_back(row);
    }
    return out;
}

}  // namespace occlab
