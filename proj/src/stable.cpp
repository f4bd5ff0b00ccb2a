#include "occlab/stable.hpp"

#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <numbers>
#include <string>

#include "occlab/error.hpp"
#include "occlab/kernels.hpp"
#include "occlab/quadrature.hpp"

namespace occlab {

namespace {

constexpr double kPi = std::numbers::pi;

double sgn(double x) { return (x > 0) - (x < 0); }

}  // namespace

double levy_k(double alpha) { return -std::tgamma(-alpha); }

void StableParams::validate() const {
    require(alpha > 0.0 && alpha <= 2.0, "stable: alpha must be in (0, 2], got " + std::to_string(alpha));
    require(scale > 0.0 && std::isfinite(scale), "stable: scale must be positive");
    if (alpha == 2.0) return;
    require(c_plus >= 0.0 && c_minus >= 0.0, "stable: c_plus and c_minus must be nonnegative");
    require(c_plus + c_minus > 0.0, "stable: c_plus + c_minus must be positive");
    require(alpha != 1.0 || c_plus == c_minus, "stable: skewed alpha = 1 is not supported");
}

double StableParams::skew() const {
    if (is_symmetric()) return 0.0;
    return (c_plus - c_minus) / (c_plus + c_minus);
}

double StableParams::sigma_alpha() const {
    if (is_symmetric()) return scale;
    return levy_k(alpha) * (c_plus + c_minus) * std::cos(kPi * alpha / 2) * scale;
}

double StableParams::length(double t) const { return std::pow(sigma_alpha() * t, 1.0 / alpha); }

std::pair<double, double> StableParams::levy_weights() const {
    if (alpha == 2.0) return {0.0, 0.0};
    if (!is_symmetric()) return {scale * c_plus, scale * c_minus};
    if (alpha == 1.0) return {scale / kPi, scale / kPi};
    const double c = scale / (2.0 * levy_k(alpha) * std::cos(kPi * alpha / 2));
    return {c, c};
}

std::complex<double> char_exponent(const StableParams& p, double xi) {
    if (xi == 0.0) return 0.0;
    const double mag = p.sigma_alpha() * std::pow(std::abs(xi), p.alpha);
    const double b = p.skew();
    if (b == 0.0) return mag;
    return {mag, -mag * b * sgn(xi) * std::tan(kPi * p.alpha / 2)};
}

double sample_standard(double alpha, double beta, RngStream& rng) {
    const double uv = rng.uniform();
    const double uw = rng.uniform();
    return kernels::detail::cms(alpha, beta, uv, uw);
}

double sample_stable(const StableParams& p, double t, RngStream& rng) {
    return p.length(t) * sample_standard(p.alpha, p.skew(), rng);
}

void sample_stable(const StableParams& p, double t, RngStream& rng, std::span<double> out) {
    const double ell = p.length(t);
    const double b = p.skew();
    std::vector<double> u(2 * std::min<std::size_t>(out.size(), 4096));
    for (std::size_t base = 0; base < out.size(); base += u.size() / 2) {
        const std::size_t m = std::min(u.size() / 2, out.size() - base);
        auto uu = std::span<double>(u).first(2 * m);
        rng.fill_uniform(uu);
        auto o = out.subspan(base, m);
        kernels::stable_std(p.alpha, b, uu, o);
        for (double& x : o) x *= ell;
    }
}

namespace {

using Vec4 = std::array<double, 4>;

Vec4 gaussian(double x) {
    const double f = std::exp(-x * x / 4) / std::sqrt(4 * kPi);
    return {f, -x / 2 * f, (x * x / 4 - 0.5) * f, (0.75 * x - x * x * x / 8) * f};
}

Vec4 cauchy(double x) {
    const double q = 1 + x * x;
    return {1 / (kPi * q), -2 * x / (kPi * q * q), (6 * x * x - 2) / (kPi * q * q * q),
            24 * x * (1 - x * x) / (kPi * q * q * q * q)};
}

// Inversion of exp(-|xi|^a (1 - i b sgn tan)) along the real axis. Each
// component is normalized by the integral of xi^n e^{-xi^a} so one absolute
// tolerance serves all four.
Vec4 fourier(double a, double b, double x) {
    const double tau = b == 0.0 ? 0.0 : b * std::tan(kPi * a / 2);
    Vec4 mom;
    for (int n = 0; n < 4; ++n) mom[n] = std::tgamma((n + 1) / a) / a;
    quad::Result<4> res;
    if (a < 1.0) {
        // xi = s^{1/a} makes the integrand smooth at the origin.
        double smax = 40.0;
        for (int i = 0; i < 20; ++i) smax = 40.0 + (3.0 / a) * std::log(smax);
        const double ia = 1.0 / a;
        auto f = [&](double s) -> Vec4 {
            if (s == 0.0) return {0, 0, 0, 0};
            const double xi = std::pow(s, ia);
            const double w = std::exp(-s) * ia * xi / s;
            const double ph = xi * x - tau * s;
            const double c = std::cos(ph), sn = std::sin(ph);
            return {w * c / mom[0], -w * xi * sn / mom[1], -w * xi * xi * c / mom[2],
                    w * xi * xi * xi * sn / mom[3]};
        };
        std::vector<double> br(33);
        for (int i = 0; i <= 32; ++i) br[i] = smax * i / 32.0;
        res = quad::integrate<4>(f, br, 1e-13, 8000);
    } else {
        double xmax = 10.0;
        for (int i = 0; i < 30; ++i) xmax = std::pow(40.0 + 3.0 * std::log(xmax), 1.0 / a);
        auto f = [&](double xi) -> Vec4 {
            const double xa = std::pow(xi, a);
            const double w = std::exp(-xa);
            const double ph = xi * x - tau * xa;
            const double c = std::cos(ph), sn = std::sin(ph);
            return {w * c / mom[0], -w * xi * sn / mom[1], -w * xi * xi * c / mom[2],
                    w * xi * xi * xi * sn / mom[3]};
        };
        std::vector<double> br(33);
        for (int i = 0; i <= 32; ++i) br[i] = xmax * i / 32.0;
        res = quad::integrate<4>(f, br, 1e-13, 8000);
    }
    if (!res.converged)
        throw NumericalError("stable density: Fourier inversion did not converge (alpha=" +
                             std::to_string(a) + ", x=" + std::to_string(x) + ")");
    Vec4 out;
    for (int n = 0; n < 4; ++n) out[n] = res.value[n] * mom[n] / kPi;
    return out;
}

// Inversion along the ray xi = r e^{-i phi}, valid for a < 1 and x > 0. phi
// is the steepest rotation that keeps Re psi >= 0 on the ray, so the
// integrand is damped by exp(-x r sin phi) without cancellation.
Vec4 ray(double a, double b, double x) {
    using C = std::complex<double>;
    const double cos_h = std::cos(kPi * a / 2);
    const double kp = (1 + b) / (2 * cos_h), km = (1 - b) / (2 * cos_h);
    const double phi = std::min(kPi / 2, kPi / (2 * a) - kPi / 2);
    const C w = kp * std::polar(1.0, -a * (phi + kPi / 2)) + km * std::polar(1.0, a * (kPi / 2 - phi));
    const C rot = std::polar(1.0, -phi);
    const double damp = x * std::sin(phi);
    double r = 1.0;
    while (r * damp + std::pow(r, a) * w.real() - 3.0 * std::log(std::max(r * x, 1.0)) < 45.0) r *= 1.25;
    const double rho_max = std::pow(r, a);
    const double ia = 1.0 / a;
    // Rough size of each derivative integrand, to share one tolerance.
    const Vec4 mom = {1.0, 1.0 / std::sin(phi), 2.0 / std::pow(std::sin(phi), 2), 6.0 / std::pow(std::sin(phi), 3)};
    auto f = [&](double rho) -> Vec4 {
        if (rho == 0.0) return {0, 0, 0, 0};
        const double rr = std::pow(rho, ia);
        const C xi = rr * rot;
        const C e = std::exp(C(0, -1) * xi * x - rho * w) * rot * (ia * rr / rho);
        const C m = C(0, -1) * xi * x;
        return {e.real(), (m * e).real() / mom[1], (m * m * e).real() / mom[2],
                (m * m * m * e).real() / mom[3]};
    };
    std::vector<double> br(33);
    for (int i = 0; i <= 32; ++i) br[i] = rho_max * i / 32.0;
    const auto res = quad::integrate<4>(f, br, 1e-13, 8000);
    if (!res.converged)
        throw NumericalError("stable density: contour inversion did not converge (alpha=" +
                             std::to_string(a) + ", x=" + std::to_string(x) + ")");
    Vec4 out;
    for (int n = 0; n < 4; ++n) out[n] = res.value[n] * mom[n] / (kPi * std::pow(x, n));
    return out;
}

// Large-|x| expansion for x > 0: convergent for a < 1, asymptotic for a > 1
// (summed up to the smallest term).
Vec4 series(double a, double b, double x) {
    const std::complex<double> ma = -std::complex<double>(1.0, -b * std::tan(kPi * a / 2));
    const double lma = std::log(std::abs(ma)), ama = std::arg(ma);
    const double lx = std::log(x);
    Vec4 out{};
    for (int n = 0; n < 4; ++n) {
        double sum = 0.0, prev = INFINITY, last = 0.0;
        bool settled = false;
        for (int k = 1; k <= 400; ++k) {
            const double s = k * a + n + 1;
            const double lmag = k * lma + std::lgamma(s) - std::lgamma(k + 1.0) - s * lx;
            const double mag = std::exp(lmag);
            if (a > 1.0 && mag > prev) break;
            const double ph = k * ama - n * kPi / 2 - kPi * s / 2;
            sum += mag * std::cos(ph);
            last = mag;
            prev = mag;
            if (mag < 1e-17 * std::abs(sum) || mag < 1e-300) {
                settled = true;
                break;
            }
        }
        if (!settled && last > 1e-13 * std::max(std::abs(sum), 1e-3 * std::pow(x, -1.0 - a - n)))
            throw NumericalError("stable density: tail series did not settle (alpha=" +
                                 std::to_string(a) + ", x=" + std::to_string(x) + ")");
        out[n] = sum / kPi;
    }
    return out;
}

Vec4 reflect(const Vec4& v) { return {v[0], -v[1], v[2], -v[3]}; }

}  // namespace

std::array<double, 4> standard_density(double alpha, double beta, double x) {
    if (alpha == 2.0) return gaussian(x);
    if (alpha == 1.0) return cauchy(x);
    if (x < 0.0) return reflect(standard_density(alpha, -beta, -x));
    if (alpha < 1.0) {
        if (x <= 1.0) return fourier(alpha, beta, x);
        if (x <= 50.0) return ray(alpha, beta, x);
        return series(alpha, beta, x);
    }
    if (x <= 40.0) return fourier(alpha, beta, x);
    return series(alpha, beta, x);
}

double stable_density(const StableParams& p, double t, double x, int order) {
    require(t > 0.0, "stable_density: t must be positive");
    require(order >= 0 && order <= 3, "stable_density: order must be 0..3");
    const double ell = p.length(t);
    return standard_density(p.alpha, p.skew(), x / ell)[order] / std::pow(ell, order + 1);
}

double symmetric_density(double alpha, double t, double x, int order) {
    return stable_density(StableParams::symmetric(alpha), t, x, order);
}

StableDensityTable::StableDensityTable(double alpha, double beta, double du, double reach,
                                       double width)
    : alpha_(alpha), beta_(beta), du_(du), width_(width) {
    const auto half = static_cast<std::size_t>(std::ceil(std::asinh(reach / width) / du));
    umax_ = static_cast<double>(half) * du;
    z_.resize(2 * half + 1);
    f_.resize(z_.size());
    for (std::size_t j = 0; j < z_.size(); ++j) {
        z_[j] = width * std::sinh(-umax_ + static_cast<double>(j) * du);
        f_[j] = standard_density(alpha, beta, z_[j]);
    }
    if (alpha != 2.0 && alpha != 1.0) {
        for (int side = 0; side < 2; ++side) {
            const double b = side == 0 ? beta : -beta;
            const std::complex<double> ma = -std::complex<double>(1.0, -b * std::tan(kPi * alpha / 2));
            const double lma = std::log(std::abs(ma)), ama = std::arg(ma);
            for (int n = 0; n < 3; ++n)
                for (int k = 1; k <= 8; ++k) {
                    const double sk = k * alpha + n + 1;
                    const double mag = std::exp(k * lma + std::lgamma(sk) - std::lgamma(k + 1.0));
                    const double sign = side == 1 && n % 2 == 1 ? -1.0 : 1.0;
                    tail_[side][n][k - 1] = sign * mag * std::cos(k * ama - n * kPi / 2 - kPi * sk / 2) / kPi;
                }
        }
    }
}

double StableDensityTable::eval(double z, int order) const {
    const double c = (std::asinh(z / width_) + umax_) / du_;
    if (!(c >= 0.0 && c < static_cast<double>(z_.size() - 1))) {
        if (alpha_ == 2.0 || alpha_ == 1.0 || std::isnan(z)) return standard_density(alpha_, beta_, z)[order];
        const double az = std::abs(z);
        const auto& co = tail_[z < 0.0 ? 1 : 0][order];
        const double y = std::pow(az, -alpha_);
        double acc = 0.0;
        for (int k = 7; k >= 0; --k) acc = acc * y + co[k];
        return acc * y * std::pow(az, -1.0 - order);
    }
    const auto j = static_cast<std::size_t>(c);
    const double z0 = z_[j], z1 = z_[j + 1], h = z1 - z0;
    const double s = (z - z0) / h;
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
    return h00 * f_[j][order] + h10 * h * f_[j][order + 1] + h01 * f_[j + 1][order] +
           h11 * h * f_[j + 1][order + 1];
}

std::array<double, 2> StableDensityTable::eval01(double z) const {
    const double c = (std::asinh(z / width_) + umax_) / du_;
    if (!(c >= 0.0 && c < static_cast<double>(z_.size() - 1))) return {eval(z, 0), eval(z, 1)};
    const auto j = static_cast<std::size_t>(c);
    const double z0 = z_[j], z1 = z_[j + 1], h = z1 - z0;
    const double s = (z - z0) / h;
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
    std::array<double, 2> out;
    for (int o = 0; o < 2; ++o)
        out[o] = h00 * f_[j][o] + h10 * h * f_[j][o + 1] + h01 * f_[j + 1][o] + h11 * h * f_[j + 1][o + 1];
    return out;
}

std::shared_ptr<const StableDensityTable> StableDensityTable::get(double alpha, double beta) {
    static std::mutex mu;
    static std::map<std::pair<double, double>, std::shared_ptr<const StableDensityTable>> cache;
    std::lock_guard lock(mu);
    auto& slot = cache[{alpha, beta}];
    if (!slot) slot = std::make_shared<StableDensityTable>(alpha, beta);
    return slot;
}

double stable_density_fast(const StableParams& p, double t, double x, int order) {
    require(order >= 0 && order <= 2, "stable_density_fast: order must be 0..2");
    const double ell = p.length(t);
    const double z = x / ell;
    double v;
    if (p.alpha == 2.0)
        v = gaussian(z)[order];
    else if (p.alpha == 1.0)
        v = cauchy(z)[order];
    else
        v = StableDensityTable::get(p.alpha, p.skew())->eval(z, order);
    return v / std::pow(ell, order + 1);
}

DominationReport check_density_domination(const StableParams& p, std::span<const double> grid) {
    require(grid.size() >= 5, "check_density_domination: grid too small");
    DominationReport rep;
    for (double x : grid) {
        const double ref = symmetric_density(p.alpha, 1.0, x, 0);
        const double w = 1.0 + std::abs(x);
        const std::array<double, 3> r{std::abs(stable_density(p, 1.0, x, 0)) / ref,
                                      std::abs(stable_density(p, 1.0, x, 1)) * w / ref,
                                      std::abs(stable_density(p, 1.0, x, 2)) * w * w / ref};
        for (int k = 0; k < 3; ++k) {
            if (r[k] > rep.constant[k]) {
                rep.constant[k] = r[k];
                rep.argmax[k] = x;
            }
        }
    }
    // Probe one and two decades beyond each edge: a ratio still growing there
    // is treated as unbounded.
    auto ratios_at = [&](double x) {
        const double ref = symmetric_density(p.alpha, 1.0, x, 0);
        const double w = 1.0 + std::abs(x);
        return std::array<double, 3>{std::abs(stable_density(p, 1.0, x, 0)) / ref,
                                     std::abs(stable_density(p, 1.0, x, 1)) * w / ref,
                                     std::abs(stable_density(p, 1.0, x, 2)) * w * w / ref};
    };
    for (double edge : {grid.front(), grid.back()}) {
        if (edge == 0.0) continue;
        const auto r10 = ratios_at(10 * edge), r100 = ratios_at(100 * edge);
        for (int k = 0; k < 3; ++k)
            if (r100[k] > 1.1 * r10[k] && r100[k] > rep.constant[k]) rep.bounded[k] = false;
    }
    return rep;
}

double density_mass(const StableParams& p, double t) {
    require(t > 0.0, "density_mass: t must be positive");
    const double ell = p.length(t);
    const double reach = p.alpha == 2.0 ? 40.0 : std::pow(10.0, std::min(4.5 / p.alpha, 12.0));
    quad::SinhGrid grid(0.0, ell, reach * ell, 0.02);
    std::vector<double> v(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) v[j] = stable_density(p, t, grid.node(j), 0);
    return quad::integrate_with_tails(grid, v, p.alpha);
}

}  // namespace occlab
