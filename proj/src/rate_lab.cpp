#include "occlab/rate_lab.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>

#include "occlab/error.hpp"
#include "occlab/kernels.hpp"
#include "occlab/montecarlo.hpp"
#include "occlab/rng.hpp"

namespace occlab {

namespace {

constexpr double kZ95 = 1.959963984540054;

struct MeanSd {
    double mean = 0.0;
    double sd = 0.0;
};

MeanSd mean_sd(std::vector<double>& a) {
    const double m = kernels::sum(a) / static_cast<double>(a.size());
    for (double& v : a) v = (v - m) * (v - m);
    const double var = kernels::sum(a) / static_cast<double>(a.size() - 1);
    return {m, std::sqrt(var)};
}

void finish_fit(RateReport& r, bool weak) {
    std::vector<std::size_t> ns;
    std::vector<double> es;
    std::size_t dropped = 0;
    for (const auto& row : r.rows) {
        const double e = std::abs(row.error);
        if (e > 0.0 && !row.below_signal) {
            ns.push_back(row.n);
            es.push_back(e);
        } else {
            ++dropped;
        }
    }
    if (ns.size() < 3) {
        r.fit_note = "slope undefined: " + std::to_string(ns.size()) + " usable rows";
        return;
    }
    r.fit = fit_rate(ns, es);
    if (dropped > 0)
        r.fit_note = std::to_string(dropped) + (weak ? " rows below 3 CI excluded" : " zero rows dropped");
}

}  // namespace

double rate_D(double beta, double T, std::size_t n) {
    require(beta >= 1.0 && std::isfinite(beta), "beta must be >= 1");
    require(T > 0.0 && std::isfinite(T), "T must be positive");
    require(n >= 2, "n must be >= 2");
    const double dn = static_cast<double>(n);
    if (beta == 1.0) return std::log(dn) / dn;
    return std::max(1.0, std::pow(T, 1.0 - beta) / (beta - 1.0)) * std::pow(dn, -1.0 / beta);
}

double const_C(double T, double p, double B) {
    require(p > 0.0 && T > 0.0 && B > 0.0, "const_C needs positive T, p, B");
    if (p >= 2.0) return std::sqrt(14.0 * p * (p - 1.0) * B) * T;
    return std::sqrt(28.0 * B) * T;
}

std::size_t RateConfig::resolved_n_ref() const {
    if (n_ref != 0) return n_ref;
    std::size_t mx = 0;
    for (auto n : n_list) mx = std::max(mx, n);
    return ref_multiplier * mx;
}

void RateConfig::validate() const {
    occlab::validate(model);
    require(std::isfinite(x0), "x0 must be finite");
    require(T > 0.0 && std::isfinite(T), "T must be positive");
    require(!n_list.empty(), "n_list must not be empty");
    for (std::size_t j = 0; j < n_list.size(); ++j) {
        require(n_list[j] >= 2, "n_list entries must be >= 2");
        if (j > 0) require(n_list[j] > n_list[j - 1], "n_list must be strictly ascending");
    }
    require(p_strong > 0.0 && std::isfinite(p_strong), "p_strong must be positive");
    require(k_weak >= 1, "k_weak must be >= 1");
    require(m_paths >= 2, "m_paths must be >= 2");
    require(beta >= 1.0 && std::isfinite(beta), "beta must be >= 1");
    require(B_guess > 0.0 && std::isfinite(B_guess), "B_guess must be positive");
    require(ref_multiplier >= 1, "ref_multiplier must be >= 1");
    require(std::isfinite(h.sup_norm()) && std::isfinite(f_weak.sup_norm()), "functionals must be bounded");
    const std::size_t nr = resolved_n_ref();
    for (auto n : n_list)
        require(nr % n == 0, "n_ref = " + std::to_string(nr) + " is not divisible by n = " + std::to_string(n));
}

FitResult fit_rate(const std::vector<std::size_t>& n, const std::vector<double>& error) {
    require(n.size() == error.size(), "fit_rate: size mismatch");
    std::vector<double> x(n.size());
    for (std::size_t j = 0; j < n.size(); ++j) x[j] = static_cast<double>(n[j]);
    return fit_loglog(x, error);
}

FitResult fit_loglog(std::span<const double> x, std::span<const double> y) {
    require(x.size() == y.size(), "fit: size mismatch");
    std::vector<double> lx, ly;
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (y[j] > 0.0 && x[j] > 0.0) {
            lx.push_back(std::log(x[j]));
            ly.push_back(std::log(y[j]));
        }
    }
    const std::size_t N = lx.size();
    if (N < 3) throw NumericalError("fit: fewer than 3 rows with positive values");
    double mx = 0.0, my = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
        mx += lx[j];
        my += ly[j];
    }
    mx /= N;
    my /= N;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
        sxx += (lx[j] - mx) * (lx[j] - mx);
        sxy += (lx[j] - mx) * (ly[j] - my);
    }
    require(sxx > 0.0, "fit: abscissae must differ");
    FitResult f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.used = N;
    double rss = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
        const double r = ly[j] - f.intercept - f.slope * lx[j];
        rss += r * r;
    }
    const double se = std::sqrt(rss / static_cast<double>(N - 2) / sxx);
    const boost::math::students_t dist(static_cast<double>(N - 2));
    f.slope_ci = boost::math::quantile(dist, 0.975) * se;
    return f;
}

CoupledSample coupled_sample(const RateConfig& cfg) {
    cfg.validate();
    CoupledSample s;
    s.n_list = cfg.n_list;
    s.n_ref = cfg.resolved_n_ref();
    const std::size_t M = cfg.m_paths;
    s.ref.assign(M, 0.0);
    s.terminal.assign(M, 0.0);
    s.coarse.assign(cfg.n_list.size(), std::vector<double>(M, 0.0));
    const double bound = 2.0 * cfg.T * cfg.h.sup_norm() * (1.0 + 1e-12);
    const std::size_t nr = s.n_ref;

    parallel_for(M, cfg.workers, [&](std::size_t i) {
        thread_local std::vector<double> states;
        states.resize(nr + 1);
        RngStream rng = RngStream::for_path(cfg.seed, i);
        simulate_into(cfg.model, cfg.x0, cfg.T, states, rng);
        const double ref = cfg.T / static_cast<double>(nr) * cfg.h.grid_sum(states, 1, nr);
        s.ref[i] = ref;
        s.terminal[i] = states[nr];
        for (std::size_t j = 0; j < cfg.n_list.size(); ++j) {
            const std::size_t n = cfg.n_list[j];
            const double in = cfg.T / static_cast<double>(n) * cfg.h.grid_sum(states, nr / n, n);
            if (!(std::abs(ref - in) <= bound))
                throw NumericalError("path error exceeds 2 T ||h|| on path " + std::to_string(i));
            s.coarse[j][i] = in;
        }
    });
    return s;
}

RateReport strong_report(const RateConfig& cfg, const CoupledSample& s) {
    RateReport r;
    r.n_ref = s.n_ref;
    const std::size_t M = s.ref.size();
    r.m_paths = M;
    const double p = cfg.p_strong;
    const double C = const_C(cfg.T, p, cfg.B_guess) * cfg.h.sup_norm();
    std::vector<double> a(M), l1(M);
    r.bound_satisfied = true;
    for (std::size_t j = 0; j < s.n_list.size(); ++j) {
        for (std::size_t i = 0; i < M; ++i) {
            const double J = std::abs(s.ref[i] - s.coarse[j][i]);
            a[i] = p == 2.0 ? J * J : std::pow(J, p);
            l1[i] = J;
        }
        const double L1 = kernels::sum(l1) / static_cast<double>(M);
        const MeanSd ms = mean_sd(a);
        RateRow row;
        row.n = s.n_list[j];
        row.error = ms.mean > 0.0 ? std::pow(ms.mean, 1.0 / p) : 0.0;
        row.ci = ms.mean > 0.0 ? kZ95 * ms.sd / std::sqrt(static_cast<double>(M)) / p *
                                     std::pow(ms.mean, 1.0 / p - 1.0)
                               : 0.0;
        row.theory_bound = C * std::sqrt(rate_D(cfg.beta, cfg.T, row.n));
        row.wide_ci = row.ci > 0.5 * row.error;
        // Power-mean ordering of the same sample.
        const double slack = 1e-12 * std::max(L1, row.error);
        if (p >= 1.0 ? L1 > row.error + slack : L1 < row.error - slack)
            throw NumericalError("strong error: L_p ordering violated at n = " + std::to_string(row.n));
        if (row.error > row.theory_bound) r.bound_satisfied = false;
        r.rows.push_back(row);
    }
    finish_fit(r, false);
    return r;
}

RateReport weak_report(const RateConfig& cfg, const CoupledSample& s) {
    RateReport r;
    r.n_ref = s.n_ref;
    const std::size_t M = s.ref.size();
    r.m_paths = M;
    const int k = cfg.k_weak;
    const double hn = cfg.h.sup_norm();
    const double C = std::pow(2.0, std::max(cfg.beta, 2.0)) * k * k * cfg.B_guess *
                     std::pow(cfg.T, k + 1) * std::pow(hn, k) * cfg.f_weak.sup_norm();
    const bool plain = k == 1 && cfg.f_weak.is_constant() && cfg.f_weak(0.0) == 1.0;
    std::vector<double> d(M), l1(M), fv(M);
    for (std::size_t i = 0; i < M; ++i) fv[i] = cfg.f_weak(s.terminal[i]);
    r.bound_satisfied = true;
    for (std::size_t j = 0; j < s.n_list.size(); ++j) {
        for (std::size_t i = 0; i < M; ++i) {
            const double a = s.ref[i], b = s.coarse[j][i];
            d[i] = (k == 1 ? a - b : std::pow(a, k) - std::pow(b, k)) * fv[i];
            l1[i] = std::abs(a - b);
        }
        const double signed_mean = plain ? [&] {
            std::vector<double> J(M);
            for (std::size_t i = 0; i < M; ++i) J[i] = s.ref[i] - s.coarse[j][i];
            return kernels::sum(J) / static_cast<double>(M);
        }()
                                         : 0.0;
        const double L1 = kernels::sum(l1) / static_cast<double>(M);
        const MeanSd ms = mean_sd(d);
        RateRow row;
        row.n = s.n_list[j];
        row.error = ms.mean;
        row.ci = kZ95 * ms.sd / std::sqrt(static_cast<double>(M));
        row.theory_bound = C * rate_D(cfg.beta, cfg.T, row.n);
        row.wide_ci = row.ci > 0.5 * std::abs(row.error);
        row.below_signal = !(std::abs(row.error) > 3.0 * row.ci);
        if (plain) {
            if (row.error != signed_mean)
                throw NumericalError("weak error: k = 1 estimate differs from mean signed error");
            if (std::abs(row.error) > L1 * (1.0 + 1e-12))
                throw NumericalError("weak error exceeds strong L1 estimate at n = " + std::to_string(row.n));
        }
        if (std::abs(row.error) > row.theory_bound) r.bound_satisfied = false;
        r.rows.push_back(row);
    }
    finish_fit(r, true);
    return r;
}

RateReport strong_error(const RateConfig& cfg) { return strong_report(cfg, coupled_sample(cfg)); }
RateReport weak_error(const RateConfig& cfg) { return weak_report(cfg, coupled_sample(cfg)); }

double analytic_constant(const RateConfig& cfg, const AnalyticSpec& phi) {
    require(phi.D > 0.0 && phi.R > 0.0, "analytic: D and R must be positive");
    const double u = cfg.T * cfg.h.sup_norm() / phi.R;
    require(u < 1.0, "analytic: T ||h|| must be below R");
    return std::pow(2.0, std::max(cfg.beta, 2.0)) * phi.D * cfg.B_guess * (cfg.T * u) * (1.0 + u) /
           ((1.0 - u) * (1.0 - u) * (1.0 - u));
}

double analytic_weak_bound(const RateConfig& cfg, const AnalyticSpec& phi, std::size_t n) {
    return analytic_constant(cfg, phi) * cfg.f_weak.sup_norm() * rate_D(cfg.beta, cfg.T, n);
}

RateReport analytic_report(const RateConfig& cfg, const AnalyticSpec& phi, const CoupledSample& s) {
    require(static_cast<bool>(phi.phi), "analytic: missing callable");
    const double C = analytic_constant(cfg, phi) * cfg.f_weak.sup_norm();
    RateReport r;
    r.n_ref = s.n_ref;
    const std::size_t M = s.ref.size();
    r.m_paths = M;
    std::vector<double> d(M), pref(M), fv(M);
    for (std::size_t i = 0; i < M; ++i) {
        pref[i] = phi.phi(s.ref[i]);
        fv[i] = cfg.f_weak(s.terminal[i]);
    }
    r.bound_satisfied = true;
    for (std::size_t j = 0; j < s.n_list.size(); ++j) {
        for (std::size_t i = 0; i < M; ++i) d[i] = (pref[i] - phi.phi(s.coarse[j][i])) * fv[i];
        const MeanSd ms = mean_sd(d);
        RateRow row;
        row.n = s.n_list[j];
        row.error = ms.mean;
        row.ci = kZ95 * ms.sd / std::sqrt(static_cast<double>(M));
        row.theory_bound = C * rate_D(cfg.beta, cfg.T, row.n);
        row.wide_ci = row.ci > 0.5 * std::abs(row.error);
        row.below_signal = !(std::abs(row.error) > 3.0 * row.ci);
        if (std::abs(row.error) > row.theory_bound) r.bound_satisfied = false;
        r.rows.push_back(row);
    }
    finish_fit(r, true);
    return r;
}

double weak_bound_k1(const RateConfig& cfg, std::size_t n) {
    return 5.0 * cfg.B_guess * cfg.T * cfg.h.sup_norm() * rate_D(cfg.beta, cfg.T, n);
}

}  // namespace occlab
