#include "occlab/models.hpp"

#include <algorithm>
#include <cmath>

#include "occlab/error.hpp"
#include "occlab/kernels.hpp"

namespace occlab {

DriftSpec DriftSpec::zero() { return DriftSpec{}; }

DriftSpec DriftSpec::linear(double a, double bias, double bound) {
    DriftSpec d;
    d.kind_ = Kind::Linear;
    d.a_ = a;
    d.bias_ = bias;
    d.bound_ = bound;
    d.lip_ = std::abs(a);
    d.sup_ = a == 0.0 ? std::min(std::abs(bias), bound) : bound;
    return d;
}

DriftSpec DriftSpec::tanh(double amp, double rate) {
    DriftSpec d;
    d.kind_ = Kind::Tanh;
    d.amp_ = amp;
    d.rate_ = rate;
    d.lip_ = std::abs(amp * rate);
    d.sup_ = std::abs(amp);
    return d;
}

DriftSpec DriftSpec::custom(std::function<double(double)> b, std::function<double(double)> db,
                            double lipschitz, double sup_norm) {
    DriftSpec d;
    d.kind_ = Kind::Custom;
    d.fn_ = std::move(b);
    d.dfn_ = std::move(db);
    d.lip_ = lipschitz;
    d.sup_ = sup_norm;
    return d;
}

double DriftSpec::operator()(double x) const {
    switch (kind_) {
        case Kind::Zero: return 0.0;
        case Kind::Linear: return std::clamp(a_ * x + bias_, -bound_, bound_);
        case Kind::Tanh: return amp_ * std::tanh(rate_ * x);
        case Kind::Custom: return fn_(x);
    }
    return 0.0;
}

double DriftSpec::derivative(double x) const {
    switch (kind_) {
        case Kind::Zero: return 0.0;
        case Kind::Linear: {
            const double v = a_ * x + bias_;
            return (v > -bound_ && v < bound_) ? a_ : 0.0;
        }
        case Kind::Tanh: {
            const double c = std::cosh(rate_ * x);
            return amp_ * rate_ / (c * c);
        }
        case Kind::Custom: return dfn_ ? dfn_(x) : 0.0;
    }
    return 0.0;
}

double DriftSpec::lipschitz() const { return lip_; }
double DriftSpec::sup_norm() const { return sup_; }

bool DriftSpec::is_constant() const {
    return kind_ == Kind::Zero || (kind_ == Kind::Linear && a_ == 0.0) ||
           (kind_ == Kind::Tanh && (amp_ == 0.0 || rate_ == 0.0));
}

void DriftSpec::validate(bool need_bounded) const {
    require(std::isfinite(lip_) && lip_ >= 0.0, "drift: Lipschitz constant must be finite");
    if (kind_ == Kind::Linear) require(bound_ > 0.0, "drift: linear clip bound must be positive");
    if (need_bounded) require(std::isfinite(sup_), "drift: b must be bounded (set a finite clip bound)");
    if (kind_ != Kind::Custom) return;
    require(static_cast<bool>(fn_), "drift: custom drift has no function");
    const double h = 1e-3;
    for (int i = -50000; i < 50000; ++i) {
        const double x = i * h;
        const double v = fn_(x), w = fn_(x + h);
        require(std::isfinite(v) && std::abs(v) <= sup_ * (1 + 1e-9) + 1e-12,
                "drift: declared sup-norm violated at x = " + std::to_string(x));
        require(std::abs(w - v) <= lip_ * h * (1 + 1e-6) + 1e-12,
                "drift: declared Lipschitz constant violated at x = " + std::to_string(x));
    }
}

double TailSpec::ratio(double u) const {
    const double a = std::abs(u);
    if (a < 1.0) return 1.0;
    switch (kind_) {
        case Kind::PureStable: return 1.0;
        case Kind::Tempered: return std::exp(-lambda_ * (a - 1.0));
        case Kind::Truncated: return 0.0;
    }
    return 1.0;
}

double TailSpec::density(const StableParams& p, double u) const {
    if (u == 0.0) return std::numeric_limits<double>::infinity();
    const auto [cp, cm] = p.levy_weights();
    return (u > 0 ? cp : cm) * std::pow(std::abs(u), -1.0 - p.alpha) * ratio(u);
}

double TailSpec::c_tail(const StableParams& p) const {
    if (kind_ == Kind::Truncated) return 0.0;
    const auto [cp, cm] = p.levy_weights();
    return std::max(cp, cm);
}

void TailSpec::validate() const {
    if (kind_ == Kind::Tempered)
        require(lambda_ > 0.0 && std::isfinite(lambda_), "tail: tempering lambda must be positive");
}

void validate(const ProcessModel& m) {
    std::visit(
        [](const auto& v) {
            using V = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<V, BrownianMotion>) {
                require(v.diffusion > 0.0 && std::isfinite(v.diffusion), "model: diffusion must be positive");
            } else if constexpr (std::is_same_v<V, StableProcess>) {
                v.p.validate();
            } else if constexpr (std::is_same_v<V, StableWithDrift>) {
                v.p.validate();
                require(std::isfinite(v.c), "model: drift c must be finite");
            } else {
                v.p.validate();
                require(v.p.alpha < 1.0, "model: locally stable SDE requires alpha in (0, 1)");
                v.drift.validate(true);
                v.tail.validate();
                require(v.r_euler >= 1, "model: r_euler must be at least 1");
            }
        },
        m);
}

std::string model_name(const ProcessModel& m) {
    static const char* names[] = {"brownian", "stable", "stable_drift", "sde"};
    return names[m.index()];
}

namespace {

std::vector<double>& scratch() {
    thread_local std::vector<double> buf;
    return buf;
}

// Standardized stable draws into `out`, consuming two uniforms each.
void standard_draws(const StableParams& p, std::span<double> out, RngStream& rng) {
    auto& u = scratch();
    u.resize(2 * out.size());
    rng.fill_uniform(u);
    kernels::stable_std(p.alpha, p.skew(), u, out);
}

void stable_steps(const StableParams& p, double ell, double shift, std::span<double> states, RngStream& rng) {
    auto inc = states.subspan(1);
    standard_draws(p, inc, rng);
    double x = states[0];
    for (double& s : inc) {
        x += shift + ell * s;
        s = x;
    }
}

// Euler sub-steps driven by pre-drawn standardized increments `z`; thinning
// uniforms are drawn from `rng` after them, only when needed.
double sde_advance(const LocallyStableSDE& s, double x, double h, double ell, std::span<const double> z,
                   RngStream& rng) {
    const bool thin = s.tail.kind() != TailSpec::Kind::PureStable;
    for (double zj : z) {
        double dz = ell * zj;
        // A stable increment of size >= 1 over a short sub-step is a single
        // large jump to leading order; keep it with probability m / m_stable.
        if (thin && std::abs(dz) >= 1.0 && rng.uniform() >= s.tail.ratio(dz)) dz = 0.0;
        x += s.drift(x) * h + dz;
    }
    return x;
}

}  // namespace

void simulate_into(const ProcessModel& m, double x0, double T, std::span<double> states, RngStream& rng) {
    require(states.size() >= 2, "simulate: n must be at least 1");
    require(T > 0.0 && std::isfinite(T), "simulate: T must be positive");
    const std::size_t n = states.size() - 1;
    const double dt = T / static_cast<double>(n);
    states[0] = x0;
    std::visit(
        [&](const auto& v) {
            using V = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<V, BrownianMotion>) {
                const double sd = std::sqrt(2.0 * v.diffusion * dt);
                auto inc = states.subspan(1);
                rng.fill_normal(inc);
                double x = x0;
                for (double& s : inc) {
                    x += sd * s;
                    s = x;
                }
            } else if constexpr (std::is_same_v<V, StableProcess>) {
                stable_steps(v.p, v.p.length(dt), 0.0, states, rng);
            } else if constexpr (std::is_same_v<V, StableWithDrift>) {
                stable_steps(v.p, v.p.length(dt), v.c * dt, states, rng);
            } else {
                const double h = dt / v.r_euler;
                const double ell = v.p.length(h);
                const auto r = static_cast<std::size_t>(v.r_euler);
                std::vector<double> z(n * r);
                standard_draws(v.p, z, rng);
                for (std::size_t k = 0; k < n; ++k)
                    states[k + 1] = sde_advance(v, states[k], h, ell, std::span<const double>(z).subspan(k * r, r), rng);
            }
        },
        m);
}

PathGrid simulate_grid(const ProcessModel& m, double x0, double T, std::size_t n, RngStream& rng) {
    require(n >= 1, "simulate: n must be at least 1");
    PathGrid g;
    g.t_final = T;
    g.n_steps = n;
    g.x0 = x0;
    g.states.resize(n + 1);
    simulate_into(m, x0, T, g.states, rng);
    return g;
}

double simulate_terminal(const ProcessModel& m, double x0, double T, RngStream& rng) {
    require(T > 0.0 && std::isfinite(T), "simulate: T must be positive");
    return std::visit(
        [&](const auto& v) -> double {
            using V = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<V, BrownianMotion>) {
                return x0 + std::sqrt(2.0 * v.diffusion * T) * rng.normal();
            } else if constexpr (std::is_same_v<V, StableProcess>) {
                return x0 + sample_stable(v.p, T, rng);
            } else if constexpr (std::is_same_v<V, StableWithDrift>) {
                return x0 + v.c * T + sample_stable(v.p, T, rng);
            } else {
                const double h = T / v.r_euler;
                std::vector<double> z(static_cast<std::size_t>(v.r_euler));
                standard_draws(v.p, z, rng);
                return sde_advance(v, x0, h, v.p.length(h), z, rng);
            }
        },
        m);
}

namespace {

double rk4_step(const DriftSpec& b, double sign, double y, double h) {
    const double k1 = sign * b(y);
    const double k2 = sign * b(y + 0.5 * h * k1);
    const double k3 = sign * b(y + 0.5 * h * k2);
    const double k4 = sign * b(y + h * k3);
    return y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
}

// Classical RK4 with step-doubling error control and local extrapolation.
double integrate_flow(const DriftSpec& b, double y, double t, double sign) {
    require(t >= 0.0, "flow: t must be nonnegative");
    if (t == 0.0) return y;
    if (b.is_constant()) return y + sign * b(0.0) * t;
    if (b.kind() == DriftSpec::Kind::Tanh) {
        // sinh(r chi_t) = sinh(r x) exp(amp r t)
        const double r = b.rate(), g = sign * b.amp() * r * t;
        if (std::abs(r * y) < 300.0 && std::abs(g) < 300.0) return std::asinh(std::sinh(r * y) * std::exp(g)) / r;
    }
    if (b.kind() == DriftSpec::Kind::Linear && std::isinf(b.bound()) && b.a() != 0.0) {
        const double fix = b.bias() / b.a();
        return (y + fix) * std::exp(sign * b.a() * t) - fix;
    }
    const double tol = 1e-13;
    double h = std::min(t, 0.25 / std::max(b.lipschitz(), 1e-6));
    double done = 0.0;
    int guard = 0;
    while (done < t) {
        if (++guard > 1000000) throw NumericalError("flow: step control failed");
        h = std::min(h, t - done);
        const double full = rk4_step(b, sign, y, h);
        const double half = rk4_step(b, sign, rk4_step(b, sign, y, 0.5 * h), 0.5 * h);
        const double err = std::abs(half - full) / 15.0;
        const double scale = tol * std::max(1.0, std::abs(y));
        if (err <= scale || h < 1e-12 * std::max(1.0, t)) {
            y = half + (half - full) / 15.0;
            done += h;
            const double grow = err == 0.0 ? 4.0 : std::min(4.0, 0.9 * std::pow(scale / err, 0.2));
            h *= std::max(grow, 0.2);
        } else {
            h *= std::max(0.1, 0.9 * std::pow(scale / err, 0.2));
        }
    }
    return y;
}

}  // namespace

double flow_chi(const DriftSpec& b, double x, double t) { return integrate_flow(b, x, t, 1.0); }
double flow_theta(const DriftSpec& b, double y, double t) { return integrate_flow(b, y, t, -1.0); }

FlowEquivalence flow_equivalence(const DriftSpec& b, std::span<const double> t_grid,
                                 std::span<const double> x_grid, std::span<const double> y_grid) {
    FlowEquivalence fe{std::numeric_limits<double>::infinity(), 0.0};
    for (double t : t_grid) {
        std::vector<double> chi(x_grid.size()), theta(y_grid.size());
        for (std::size_t i = 0; i < x_grid.size(); ++i) chi[i] = flow_chi(b, x_grid[i], t);
        for (std::size_t j = 0; j < y_grid.size(); ++j) theta[j] = flow_theta(b, y_grid[j], t);
        for (std::size_t i = 0; i < x_grid.size(); ++i) {
            for (std::size_t j = 0; j < y_grid.size(); ++j) {
                const double den = std::abs(theta[j] - x_grid[i]);
                if (den < 1e-9) continue;
                const double r = std::abs(chi[i] - y_grid[j]) / den;
                fe.c = std::min(fe.c, r);
                fe.C = std::max(fe.C, r);
            }
        }
    }
    return fe;
}

}  // namespace occlab
