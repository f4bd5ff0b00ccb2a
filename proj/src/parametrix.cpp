#include "occlab/parametrix.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <cmath>
#include <numbers>
#include <sstream>

#include "occlab/error.hpp"
#include "occlab/montecarlo.hpp"

namespace occlab {

namespace {

// Lagrange weights for nodes x[0..3] at point v.
std::array<double, 4> lagrange_nonuniform(const double* x, double v) {
    std::array<double, 4> w{};
    for (int i = 0; i < 4; ++i) {
        double num = 1.0, den = 1.0;
        for (int j = 0; j < 4; ++j) {
            if (j == i) continue;
            num *= v - x[j];
            den *= x[i] - x[j];
        }
        w[i] = num / den;
    }
    return w;
}

// Start of the 4-point window around position `pos` in [0, n).
std::size_t window_start(std::size_t pos, std::size_t n) {
    if (n <= 4) return 0;
    const std::size_t lo = pos == 0 ? 0 : pos - 1;
    return std::min(lo, n - 4);
}

double interp_sorted(const std::vector<double>& x, const std::vector<double>& y, double v) {
    const auto it = std::upper_bound(x.begin(), x.end(), v);
    const std::size_t pos = it == x.begin() ? 0 : static_cast<std::size_t>(it - x.begin()) - 1;
    const std::size_t s = window_start(pos, x.size());
    const auto w = lagrange_nonuniform(&x[s], v);
    return w[0] * y[s] + w[1] * y[s + 1] + w[2] * y[s + 2] + w[3] * y[s + 3];
}

}  // namespace

void ParametrixConfig::validate() const {
    drift.validate(true);
    p.validate();
    tail.validate();
    require(p.alpha < 1.0, "parametrix: alpha must be below 1");
    require(T > 0.0 && std::isfinite(T), "parametrix: T must be positive");
    require(std::isfinite(x0), "parametrix: x0 must be finite");
    require(K_max >= 0 && K_max <= 12, "parametrix: K_max must be in 0..12");
    require(t_lo > 0.0 && t_lo < t_min && t_min < 1.0, "parametrix: need 0 < t_lo < t_min < 1");
    require(per_decade >= 2, "parametrix: per_decade must be >= 2");
    require(du > 0.0 && du <= 0.5, "parametrix: du must be in (0, 0.5]");
    require(width > 0.0 && reach > 10.0, "parametrix: width must be positive and reach > 10");
    require(n_s >= 2 && n_s <= 200, "parametrix: n_s must be in 2..200");
    require(tau_series > 0.0, "parametrix: tau_series must be positive");
}

// ---------------------------------------------------------------- tail part

TailCorrection::TailCorrection(const StableParams& p, const TailSpec& tail) : p_(p), tail_(tail) {
    zero_ = tail.kind() == TailSpec::Kind::PureStable;
    if (zero_) return;
    const auto [cp, cm] = p.levy_weights();
    cp_ = cp;
    cm_ = cm;
    std::vector<double> br{1.0};
    while (br.back() < 1e12) br.push_back(br.back() * 4.0);
    const auto r = quad::integrate<1>(
        [&](double u) { return std::array<double, 1>{(tail.ratio(u) - 1.0) * std::pow(u, -1.0 - p.alpha)}; }, br,
        1e-13, 20000);
    // Beyond 1e12 the ratio is ~0 for tempered and truncated tails.
    const double rest = -std::pow(br.back(), -p.alpha) / p.alpha;
    n_total_ = (cp + cm) * (r.value[0] + rest);
}

double TailCorrection::n(double u) const {
    const double a = std::abs(u);
    if (zero_ || a < 1.0) return 0.0;
    return (tail_.ratio(u) - 1.0) * (u > 0 ? cp_ : cm_) * std::pow(a, -1.0 - p_.alpha);
}

double TailCorrection::a_direct(double s, double w, double tol) const {
    if (zero_) return 0.0;
    const double ell = p_.length(s);
    const auto g = StableDensityTable::get(p_.alpha, p_.skew());
    // With n(w) subtracted the integrand vanishes at the spike u = w, which
    // otherwise cannot be resolved once l_s is a few ulps of w.
    const double nw = std::abs(w) >= 1.0 ? n(w) : 0.0;
    auto side = [&](double sign) {
        const double peak = sign * w;
        std::vector<double> br{1.0};
        if (peak > 1.0) br.push_back(peak);
        for (double d = ell; d < 1e12; d *= 8.0) {
            for (double b : {peak - d, peak + d})
                if (b > 1.0) br.push_back(b);
        }
        for (double v = 4.0; v < 1e12; v *= 16.0) br.push_back(v);
        br.push_back(std::max(1e12, peak + 100.0 * ell));
        std::sort(br.begin(), br.end());
        br.erase(std::unique(br.begin(), br.end()), br.end());
        const auto r = quad::integrate<1>(
            [&](double v) {
                const double u = sign * v;
                return std::array<double, 1>{g->eval((w - u) / ell) / ell * (n(u) - nw)};
            },
            br, tol, 20000);
        if (!r.converged) throw NumericalError("parametrix: tail quadrature did not converge");
        return r.value[0];
    };
    double out = side(1.0) + side(-1.0);
    if (nw != 0.0) {
        // mass of g_s(w - .) on |u| >= 1 is 1 - int_{w-1}^{w+1} g_s(v) dv; 0 lies outside.
        const double lo = w - 1.0, hi = w + 1.0;
        std::vector<double> br{lo, hi};
        const double near = w > 0 ? lo : hi;
        for (double d = ell; d < 2.0; d *= 8.0) {
            const double b = w > 0 ? near + d : near - d;
            if (b > lo && b < hi) br.push_back(b);
        }
        std::sort(br.begin(), br.end());
        const auto r = quad::integrate<1>([&](double v) { return std::array<double, 1>{g->eval(v / ell) / ell}; }, br,
                                          tol * 1e-2, 20000);
        out += nw * (1.0 - r.value[0]);
    }
    return out;
}

const TailCorrection::Table& TailCorrection::table(double s) const {
    {
        std::lock_guard lock(mu_);
        auto it = cache_.find(s);
        if (it != cache_.end()) return *it->second;
    }
    auto tab = std::make_shared<Table>();
    const double ell = p_.length(s);
    quad::SinhGrid core(0.0, 0.05, 1e4, 0.05);
    tab->w.assign(core.nodes().begin(), core.nodes().end());
    for (double c : {-1.0, 1.0}) {
        quad::SinhGrid edge(c, std::max(0.3 * ell, 1e-300), 0.5, 0.2);
        tab->w.insert(tab->w.end(), edge.nodes().begin(), edge.nodes().end());
    }
    std::sort(tab->w.begin(), tab->w.end());
    std::vector<double> uniq;
    for (double w : tab->w)
        if (uniq.empty() || w - uniq.back() > 1e-13 * std::max(1.0, std::abs(w))) uniq.push_back(w);
    tab->w = std::move(uniq);
    tab->v.resize(tab->w.size());
    for (std::size_t j = 0; j < tab->w.size(); ++j) tab->v[j] = a_direct(s, tab->w[j]);
    std::lock_guard lock(mu_);
    auto& slot = cache_[s];
    if (!slot) slot = tab;
    return *slot;
}

double TailCorrection::a(double s, double w) const {
    if (zero_) return 0.0;
    const Table& t = table(s);
    if (w <= t.w.front() || w >= t.w.back()) return n(w);
    return interp_sorted(t.w, t.v, w);
}

double TailCorrection::phi2(double s, double w) const {
    if (zero_) return 0.0;
    const double ell = p_.length(s);
    return a(s, w) - n_total_ * StableDensityTable::get(p_.alpha, p_.skew())->eval(w / ell) / ell;
}

double TailCorrection::domination_constant() const {
    if (zero_) return 0.0;
    double c = 0.0;
    for (double u : logspace(1.0, 1e6, 241)) {
        for (double sgn : {-1.0, 1.0}) {
            c = std::max(c, std::abs(n(sgn * u)) / symmetric_density(p_.alpha, 1.0, u, 0));
        }
    }
    return c;
}

// ------------------------------------------------------------ kernel table

double KernelTable::value(double t, double v, double center, double ell) const {
    const std::size_t n = times.size();
    const double d = v - center;
    auto scaled_at = [&](std::size_t a) {
        const double ella = ells[a];
        const double da = d * (ella + std::abs(d)) / (ell + std::abs(d));
        return ella * grids[a].interpolate(values[a], grids[a].center() + da, 0.0);
    };
    if (t <= times.front()) {
        return scaled_at(0) * std::pow(t / times.front(), order) / ell;
    }
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const std::size_t pos = static_cast<std::size_t>(it - times.begin()) - 1;
    const std::size_t s = window_start(pos, n);
    double lx[4];
    for (int i = 0; i < 4; ++i) lx[i] = std::log(times[s + i]);
    const auto w = lagrange_nonuniform(lx, std::log(t));
    double acc = 0.0;
    for (int i = 0; i < 4; ++i) acc += w[i] * scaled_at(s + i);
    return acc / ell;
}

TailCorrection::Slice TailCorrection::slice(double s) const {
    Slice out;
    out.tc_ = this;
    if (zero_) return out;
    out.tab_ = &table(s);
    out.g_ = StableDensityTable::get(p_.alpha, p_.skew()).get();
    out.ell_ = p_.length(s);
    return out;
}

double TailCorrection::Slice::operator()(double w) const {
    if (!tab_) return 0.0;
    return with_density(w, g_->eval(w / ell_) / ell_);
}

double TailCorrection::Slice::with_density(double w, double gs) const {
    if (!tab_) return 0.0;
    const auto& t = *tab_;
    const double a = (w <= t.w.front() || w >= t.w.back()) ? tc_->n(w) : interp_sorted(t.w, t.v, w);
    return a - tc_->n_total() * gs;
}

// --------------------------------------------------------------- parametrix

namespace {

struct Prepared {
    quad::SinhGrid grid;
    std::vector<double> vals;
};

struct TimePair {
    double tau, sigma, weight;  // tabulated factor at tau, closed kernel at sigma
};

std::vector<TimePair> split_pairs(double t, int n_s) {
    const auto gl = quad::gauss_legendre(n_s, 0.0, 1.0);
    std::vector<TimePair> out;
    for (std::size_t m = 0; m < gl.nodes.size(); ++m) {
        const double u = gl.nodes[m];
        const double s = 0.5 * t * u * u;
        const double w = gl.weights[m] * t * u;
        out.push_back({t - s, s, w});
        out.push_back({s, t - s, w});
    }
    return out;
}

// Weight of the grid (c, w) against (oc, ow): h_o^4 / (h_o^4 + h^4) with
// h = hypot(z - c, w); each grid owns the region where it is finer.
inline double partition(double z, double c, double w, double oc, double ow) {
    const double h2 = (z - c) * (z - c) + w * w, o2 = (z - oc) * (z - oc) + ow * ow;
    const double a = o2 * o2, b = h2 * h2;
    return a / (a + b);
}

// int A(z) k(z) dz with A tabulated on its own grid; the second sinh grid
// sits on the kernel spike (cb, wb).
template <class K>
double prepared_integral(const Prepared& A, double cb, double wb, double du, double reach, K&& kernel) {
    const double ca = A.grid.center(), wa = A.grid.width();
    double acc = 0.0;
    const auto nodes = A.grid.nodes();
    const auto wts = A.grid.weights();
    for (std::size_t j = 0; j < nodes.size(); ++j) {
        if (A.vals[j] == 0.0) continue;
        const double z = nodes[j];
        const double phi = partition(z, ca, wa, cb, wb);
        if (phi < 1e-16) continue;
        acc += wts[j] * phi * A.vals[j] * kernel(z);
    }
    const double umax = std::ceil(std::asinh(reach / wb) / du) * du;
    const auto n = static_cast<long>(std::lround(2.0 * umax / du));
    for (long j = 0; j <= n; ++j) {
        const double u = -umax + static_cast<double>(j) * du;
        const double sh = std::sinh(u);
        const double z = cb + wb * sh;
        const double phi = partition(z, cb, wb, ca, wa);
        if (phi < 1e-16) continue;
        const double a = A.grid.interpolate(A.vals, z, 0.0);
        if (a == 0.0) continue;
        const double wt = (j == 0 || j == n ? 0.5 : 1.0) * du * wb * std::sqrt(1.0 + sh * sh);
        acc += wt * phi * a * kernel(z);
    }
    return acc;
}

template <class Fill>
Prepared prepare(const ParametrixConfig& c, double center, double ell, Fill&& fill) {
    Prepared pr{quad::SinhGrid(center, c.width * ell, c.reach, c.du), {}};
    pr.vals.resize(pr.grid.size());
    for (std::size_t j = 0; j < pr.grid.size(); ++j) pr.vals[j] = fill(pr.grid.node(j));
    return pr;
}

// Row mode: out(y) = int_0^t int R_tau(z) Phi_sigma(z, y) dz ds.
std::vector<double> convolve_rows(const Parametrix& P, const KernelTable* prev, double t, std::span<const double> ys) {
    const auto& c = P.config();
    std::vector<double> out(ys.size(), 0.0);
    const auto g = StableDensityTable::get(c.p.alpha, c.p.skew());
    for (const auto& tp : split_pairs(t, c.n_s)) {
        const double ct = P.chi(tp.tau, c.x0), lt = P.ell(tp.tau);
        const Prepared pr = prepare(c, ct, lt, [&](double z) {
            return prev ? prev->value(tp.tau, z, ct, lt) : P.p0(tp.tau, c.x0, z);
        });
        const double ls = P.ell(tp.sigma);
        const auto phi2 = P.tail().slice(tp.sigma);
        parallel_for(ys.size(), c.workers, [&](std::size_t j) {
            const double th = P.theta(tp.sigma, ys[j]);
            const double bth = c.drift(th);
            const double v = prepared_integral(pr, th, c.width * ls, c.du, c.reach, [&](double z) {
                const double w = th - z;
                const auto gg = g->eval01(w / ls);
                return (bth - c.drift(z)) * gg[1] / (ls * ls) + phi2.with_density(w, gg[0] / ls);
            });
            out[j] += tp.weight * v;
        });
    }
    return out;
}

// Column mode: out(x) = int_0^t int K_sigma(x, w) Q_tau(w) dw ds with K = Phi
// or p0; Q is tabulated around theta_tau(ystar), or is Phi(., ystar) when
// `prev` is null.
std::vector<double> convolve_columns(const Parametrix& P, const KernelTable* prev, bool kernel_is_p0, double ystar,
                                     double t, std::span<const double> xs) {
    const auto& c = P.config();
    std::vector<double> out(xs.size(), 0.0);
    const auto g = StableDensityTable::get(c.p.alpha, c.p.skew());
    for (const auto& tp : split_pairs(t, c.n_s)) {
        const double ct = P.theta(tp.tau, ystar), lt = P.ell(tp.tau);
        const Prepared pr = prepare(c, ct, lt, [&](double w) {
            return prev ? prev->value(tp.tau, w, ct, lt) : P.phi(tp.tau, w, ystar);
        });
        const double ls = P.ell(tp.sigma);
        const auto phi2 = P.tail().slice(tp.sigma);
        parallel_for(xs.size(), c.workers, [&](std::size_t j) {
            const double x = xs[j], bx = c.drift(x);
            const double v = prepared_integral(pr, P.chi(tp.sigma, x), c.width * ls, c.du, c.reach, [&](double w) {
                const double th = P.theta(tp.sigma, w);
                const double d = th - x;
                if (kernel_is_p0) return g->eval(d / ls) / ls;
                const auto gg = g->eval01(d / ls);
                return (c.drift(th) - bx) * gg[1] / (ls * ls) + phi2.with_density(d, gg[0] / ls);
            });
            out[j] += tp.weight * v;
        });
    }
    return out;
}

}  // namespace

Parametrix::Parametrix(ParametrixConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    tail_ = std::make_shared<TailCorrection>(cfg_.p, cfg_.tail);
    g_ = StableDensityTable::get(cfg_.p.alpha, cfg_.p.skew());
    gsym_ = StableDensityTable::get(cfg_.p.alpha, 0.0);
    const double decades = -std::log10(cfg_.t_lo);
    const auto n = static_cast<std::size_t>(std::lround(decades * cfg_.per_decade)) + 1;
    times_ = logspace(cfg_.t_lo * cfg_.T, cfg_.T, n);
    for (double e : cfg_.extra_times)
        if (e > times_.front() && e < cfg_.T) times_.push_back(e);
    std::sort(times_.begin(), times_.end());
    times_.erase(std::unique(times_.begin(), times_.end(),
                             [](double a, double b) { return std::abs(a - b) <= 1e-12 * b; }),
                 times_.end());
    for (double t : times_) grids_.emplace_back(chi(t, cfg_.x0), cfg_.width * ell(t), cfg_.reach, cfg_.du);
}

double Parametrix::p0(double t, double x, double y) const {
    const double l = ell(t);
    return g_->eval((theta(t, y) - x) / l) / l;
}

double Parametrix::phi1(double t, double x, double y) const {
    const double l = ell(t);
    const double th = theta(t, y);
    return (cfg_.drift(th) - cfg_.drift(x)) * g_->eval((th - x) / l, 1) / (l * l);
}

double Parametrix::phi2(double t, double x, double y) const { return tail_->phi2(t, theta(t, y) - x); }

double Parametrix::envelope(double t, double d) const {
    const double a = cfg_.p.alpha;
    const double l0 = std::pow(t, 1.0 / a), l1 = std::pow(t + 1.0, 1.0 / a);
    return gsym_->eval(d / l0) / l0 + gsym_->eval(d / l1) / l1;
}

std::vector<double> Parametrix::convolve_row(const KernelTable* prev, double t, std::span<const double> ys) const {
    return convolve_rows(*this, prev, t, ys);
}

void Parametrix::build() {
    if (built()) return;
    std::vector<KernelTable> rows;
    for (int k = 1; k <= cfg_.K_max; ++k) {
        KernelTable tab;
        tab.order = k;
        tab.times = times_;
        tab.grids = grids_;
        for (double t : times_) tab.ells.push_back(ell(t));
        const KernelTable* prev = k == 1 ? nullptr : &rows.back();
        for (std::size_t i = 0; i < times_.size(); ++i) {
            const auto v = convolve_row(prev, times_[i], grids_[i].nodes());
            for (double x : v)
                if (!std::isfinite(x)) throw NumericalError("parametrix: non-finite kernel value");
            tab.values.push_back(v);
        }
        rows.push_back(std::move(tab));
    }
    rows_ = std::move(rows);
    if (cfg_.K_max == 0) rows_.emplace_back();  // marks the build as done
    fit_envelope();
}

std::vector<double> Parametrix::row(int k, std::size_t i) const {
    require(i < times_.size(), "parametrix: time index out of range");
    if (k == 0) {
        std::vector<double> out(grids_[i].size());
        for (std::size_t j = 0; j < out.size(); ++j) out[j] = p0(times_[i], cfg_.x0, grids_[i].node(j));
        return out;
    }
    require(built() && k >= 1 && k <= cfg_.K_max, "parametrix: row not built");
    return rows_[static_cast<std::size_t>(k - 1)].values[i];
}

std::vector<double> Parametrix::density_row(std::size_t i) const {
    auto out = row(0, i);
    for (int k = 1; k <= cfg_.K_max; ++k) {
        const auto r = row(k, i);
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += r[j];
    }
    return out;
}

std::vector<double> Parametrix::density_at(double t, std::span<const double> ys) const {
    require(built(), "parametrix: build() first");
    require(t > 0.0 && t <= cfg_.T * (1.0 + 1e-12), "parametrix: t outside (0, T]");
    std::vector<double> out(ys.size());
    for (std::size_t j = 0; j < ys.size(); ++j) out[j] = p0(t, cfg_.x0, ys[j]);
    for (int k = 1; k <= cfg_.K_max; ++k) {
        const KernelTable* prev = k == 1 ? nullptr : &rows_[static_cast<std::size_t>(k - 2)];
        const auto r = convolve_row(prev, t, ys);
        for (std::size_t j = 0; j < ys.size(); ++j) out[j] += r[j];
    }
    return out;
}

std::vector<double> Parametrix::dt_density_at(double t, std::span<const double> ys, double* spread) const {
    const double h = t / 100.0;
    const auto a = density_at(t + h, ys), b = density_at(t - h, ys);
    const auto c = density_at(t + 0.5 * h, ys), d = density_at(t - 0.5 * h, ys);
    std::vector<double> out(ys.size());
    double sp = 0.0;
    for (std::size_t j = 0; j < ys.size(); ++j) {
        const double d1 = (a[j] - b[j]) / (2.0 * h), d2 = (c[j] - d[j]) / h;
        out[j] = (4.0 * d2 - d1) / 3.0;
        sp = std::max(sp, std::abs(d2 - d1));
    }
    if (spread) *spread = sp;
    return out;
}

double Parametrix::mass(std::size_t i) const {
    return quad::integrate_with_tails(grids_[i], density_row(i), cfg_.p.alpha);
}

double Parametrix::mass_p0(std::size_t i) const {
    return quad::integrate_with_tails(grids_[i], row(0, i), cfg_.p.alpha);
}

std::size_t Parametrix::time_index(double t) const {
    for (std::size_t i = 0; i < times_.size(); ++i)
        if (std::abs(times_[i] - t) <= 1e-9 * t) return i;
    throw ConfigError("parametrix: t is not a tabulated time");
}

void Parametrix::fit_envelope() {
    SeriesReport r;
    const std::size_t iT = times_.size() - 1;
    for (int k = 0; k <= cfg_.K_max; ++k) {
        const auto v = row(k, iT);
        double m = 0.0;
        for (double x : v) m = std::max(m, std::abs(x));
        r.term_max.push_back(m);
        r.term_mass.push_back(quad::integrate_with_tails(grids_[iT], v, cfg_.p.alpha));
    }
    r.concave_decreasing = true;
    bool vanishing = true;
    for (int k = 1; k <= cfg_.K_max; ++k) vanishing = vanishing && r.term_max[k] == 0.0;
    if (vanishing) {
        // Phi = 0: p = p0 and there is no tail to bound.
        series_ = r;
        return;
    }
    for (int k = 1; k <= cfg_.K_max; ++k)
        if (!(r.term_max[k] < r.term_max[k - 1])) r.concave_decreasing = false;
    for (int k = 1; k + 1 <= cfg_.K_max; ++k) {
        const double d2 = std::log(r.term_max[k + 1]) - 2.0 * std::log(r.term_max[k]) + std::log(r.term_max[k - 1]);
        if (d2 > 1e-9) r.concave_decreasing = false;
    }
    if (cfg_.K_max < 2) {
        series_ = r;
        throw NumericalError("parametrix: K_max >= 2 is needed to bound the series tail");
    }
    // term_max_k ~ C0 (C T)^{k-1} / k!, fitted over k = 1..K.
    std::vector<double> xs, ys;
    for (int k = 1; k <= cfg_.K_max; ++k) {
        xs.push_back(k - 1);
        ys.push_back(std::log(r.term_max[k]) + std::lgamma(k + 1.0));
    }
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t j = 0; j < xs.size(); ++j) {
        sxy += (xs[j] - mx) * (ys[j] - my);
        sxx += (xs[j] - mx) * (xs[j] - mx);
    }
    const double slope = sxy / sxx;
    r.C0_hat = std::exp(my - slope * mx);
    r.C_hat = std::exp(slope) / cfg_.T;
    for (int k = cfg_.K_max + 1; k <= cfg_.K_max + 80; ++k)
        r.tail_bound += r.C0_hat * std::exp((k - 1) * std::log(r.C_hat * cfg_.T) - std::lgamma(k + 1.0));
    series_ = r;
    if (!(r.tail_bound <= cfg_.tau_series)) {
        std::ostringstream os;
        os << "parametrix: series tail bound " << r.tail_bound << " exceeds tau_series " << cfg_.tau_series
           << "; raise K_max";
        throw NumericalError(os.str());
    }
}

// ------------------------------------------------------------- diagnostics

double ptx_constant(const Parametrix& P) {
    const auto& c = P.config();
    double best = 0.0;
    for (std::size_t i = 0; i < P.times().size(); ++i) {
        const double t = P.times()[i];
        if (t < c.t_min * c.T * (1.0 - 1e-12)) continue;
        const auto p = P.density_row(i);
        const double ctr = P.chi(t, c.x0);
        for (std::size_t j = 0; j < p.size(); ++j)
            best = std::max(best, p[j] / P.envelope(t, P.grid(i).node(j) - ctr));
    }
    return best;
}

double phi_bound_constant(const Parametrix& P, std::span<const double> t_list, std::span<const double> x_list,
                          std::span<const double> y_list) {
    double best = 0.0;
    for (double t : t_list)
        for (double x : x_list)
            for (double y : y_list)
                best = std::max(best, std::abs(P.phi(t, x, y)) / P.envelope(t, P.theta(t, y) - x));
    return best;
}

double subconvolution_constant(const Parametrix& P, double t, double s, double x, std::span<const double> y_list) {
    require(s > 0.0 && s < t, "subconvolution_constant: need 0 < s < t");
    const double a = P.config().p.alpha;
    const double W = P.config().width;
    double best = 0.0;
    for (double y : y_list) {
        const double v = P.two_grid_integral(P.chi(t - s, x), W * P.ell(t - s), P.theta(s, y), W * P.ell(s), [&](double z) {
            return symmetric_density(a, t - s, P.theta(t - s, z) - x) * symmetric_density(a, s, P.theta(s, y) - z);
        });
        best = std::max(best, v / symmetric_density(a, t, P.theta(t, y) - x));
    }
    return best;
}

DtBoundReport check_dt_bound(const Parametrix& P, std::size_t n_t, double t_hi) {
    const auto& c = P.config();
    require(n_t >= 3, "check_dt_bound: need at least 3 times");
    require(t_hi > c.t_min && t_hi <= 1.0, "check_dt_bound: need t_min < t_hi <= 1");
    DtBoundReport r;
    r.t = logspace(c.t_min * c.T, t_hi * c.T, n_t);
    for (double t : r.t) {
        const quad::SinhGrid grid(P.chi(t, c.x0), c.width * P.ell(t), c.reach, c.du);
        double spread = 0.0;
        const auto dp = P.dt_density_at(t, grid.nodes(), &spread);
        std::vector<double> adp(dp.size());
        double mx = 0.0, ratio = 0.0;
        const double tpow = std::pow(t, 1.0 / c.p.alpha);
        for (std::size_t j = 0; j < dp.size(); ++j) {
            adp[j] = std::abs(dp[j]);
            mx = std::max(mx, adp[j]);
            ratio = std::max(ratio, adp[j] * tpow / P.envelope(t, grid.node(j) - grid.center()));
        }
        r.N.push_back(quad::integrate_with_tails(grid, adp, c.p.alpha));
        r.ratio.push_back(ratio);
        r.sup_ratio = std::max(r.sup_ratio, ratio);
        r.fd_spread = std::max(r.fd_spread, spread / mx);
    }
    r.beta = fit_beta(r.t, r.N);
    return r;
}

ChapmanKolmogorov chapman_kolmogorov(const Parametrix& P, double s, double t, std::span<const double> ys) {
    require(P.built(), "chapman_kolmogorov: build() first");
    require(s > 0.0 && s < t, "chapman_kolmogorov: need 0 < s < t");
    const auto& c = P.config();
    const std::size_t is = P.time_index(s), it = P.time_index(t);
    const double tau = t - s;
    const auto ps = P.density_row(is);
    const auto& gs = P.grid(is);
    const auto pt = P.density_row(it);
    ChapmanKolmogorov out;
    for (double y : ys) {
        // Columns Q^k(., y) = Phi^{*k}(., y) tabulated on the times <= tau.
        std::vector<KernelTable> cols;
        for (int k = 2; k <= c.K_max; ++k) {
            KernelTable tab;
            tab.order = k - 1;
            for (std::size_t i = 0; i < P.times().size() && P.times()[i] <= tau * (1.0 + 1e-12); ++i) {
                const double ti = P.times()[i];
                tab.times.push_back(ti);
                tab.ells.push_back(P.ell(ti));
                tab.grids.emplace_back(P.theta(ti, y), c.width * P.ell(ti), c.reach, c.du);
                tab.values.push_back(
                    convolve_columns(P, cols.empty() ? nullptr : &cols.back(), false, y, ti, tab.grids.back().nodes()));
            }
            require(tab.times.size() >= 4, "chapman_kolmogorov: t - s too small for the time grid");
            cols.push_back(std::move(tab));
        }
        std::vector<double> col(gs.size());
        for (std::size_t j = 0; j < gs.size(); ++j) col[j] = P.p0(tau, gs.node(j), y);
        for (int k = 1; k <= c.K_max; ++k) {
            const KernelTable* prev = k == 1 ? nullptr : &cols[static_cast<std::size_t>(k - 2)];
            const auto v = convolve_columns(P, prev, true, y, tau, gs.nodes());
            for (std::size_t j = 0; j < col.size(); ++j) col[j] += v[j];
        }
        std::vector<double> prod(gs.size());
        for (std::size_t j = 0; j < prod.size(); ++j) prod[j] = ps[j] * col[j];
        const double lhs = quad::integrate_with_tails(gs, prod, c.p.alpha);
        const double rhs = P.grid(it).interpolate(pt, y, 0.0);
        out.y.push_back(y);
        out.lhs.push_back(lhs);
        out.rhs.push_back(rhs);
        out.max_gap = std::max(out.max_gap, std::abs(lhs - rhs));
    }
    return out;
}

std::string kernel_csv(const Parametrix& P, int k, std::span<const double> y_grid) {
    require(k >= -1 && k <= P.config().K_max, "kernel_csv: k must be -1 (density) or 0..K_max");
    std::ostringstream os;
    os << "# occlab parametrix kernel v1; k=" << k << "; first row is the y grid, then one row per t\n";
    auto put = [&](double v) {
        char buf[32];
        const auto res = std::to_chars(buf, buf + sizeof(buf), v);
        os.write(buf, res.ptr - buf);
    };
    os << "t";
    for (double y : y_grid) {
        os << ',';
        put(y);
    }
    os << '\n';
    for (std::size_t i = 0; i < P.times().size(); ++i) {
        const auto v = k < 0 ? P.density_row(i) : P.row(k, i);
        put(P.times()[i]);
        for (double y : y_grid) {
            os << ',';
            put(P.grid(i).interpolate(v, y, 0.0));
        }
        os << '\n';
    }
    return os.str();
}

}  // namespace occlab
