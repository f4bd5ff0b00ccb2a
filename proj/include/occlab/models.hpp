#pragma once

// Simulatable Markov models on a uniform time grid, and the drift flows
// chi_t (forward) and theta_t (time-reversed) of the SDE dX = b(X)dt + dZ.

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "occlab/rng.hpp"
#include "occlab/stable.hpp"

namespace occlab {

class DriftSpec {
  public:
    enum class Kind { Zero, Linear, Tanh, Custom };

    static DriftSpec zero();
    /// b(x) = a x + bias, clipped to [-bound, bound].
    static DriftSpec linear(double a, double bias,
                            double bound = std::numeric_limits<double>::infinity());
    /// b(x) = amp tanh(rate x)
    static DriftSpec tanh(double amp, double rate);
    /// Custom drift with declared Lipschitz constant and sup-norm; `db` is b'.
    static DriftSpec custom(std::function<double(double)> b, std::function<double(double)> db,
                            double lipschitz, double sup_norm);

    Kind kind() const { return kind_; }
    double operator()(double x) const;
    double derivative(double x) const;
    double lipschitz() const;
    double sup_norm() const;
    bool is_constant() const;

    /// Soft check: declared constants against a grid sample over [-50, 50].
    /// Throws ConfigError on violation or when `need_bounded` and sup is infinite.
    void validate(bool need_bounded) const;

    double a() const { return a_; }
    double bias() const { return bias_; }
    double bound() const { return bound_; }
    double amp() const { return amp_; }
    double rate() const { return rate_; }

  private:
    Kind kind_ = Kind::Zero;
    double a_ = 0, bias_ = 0, bound_ = std::numeric_limits<double>::infinity();
    double amp_ = 0, rate_ = 0;
    double lip_ = 0, sup_ = 0;
    std::function<double(double)> fn_, dfn_;
};

class TailSpec {
  public:
    enum class Kind { PureStable, Tempered, Truncated };

    static TailSpec pure_stable() { return TailSpec(Kind::PureStable, 0.0); }
    static TailSpec tempered(double lambda) { return TailSpec(Kind::Tempered, lambda); }
    static TailSpec truncated() { return TailSpec(Kind::Truncated, 0.0); }

    Kind kind() const { return kind_; }
    double lambda() const { return lambda_; }
    /// m(u) / m^{(alpha,C+-)}(u) for |u| >= 1; 1 inside (-1, 1).
    double ratio(double u) const;
    /// Levy density m(u) of the locally stable process.
    double density(const StableParams& p, double u) const;
    /// Finite c_tail with m(u) <= c_tail |u|^{-1-alpha} on |u| >= 1.
    double c_tail(const StableParams& p) const;
    void validate() const;

  private:
    TailSpec(Kind k, double l) : kind_(k), lambda_(l) {}
    Kind kind_;
    double lambda_;
};

struct BrownianMotion {
    double diffusion = 1.0;  // generator d * f'', so Var X_t = 2 d t
};
struct StableProcess {
    StableParams p;
};
struct StableWithDrift {
    StableParams p;
    double c = 0.0;
};
struct LocallyStableSDE {
    DriftSpec drift;
    StableParams p;
    TailSpec tail = TailSpec::pure_stable();
    int r_euler = 8;
};

using ProcessModel = std::variant<BrownianMotion, StableProcess, StableWithDrift, LocallyStableSDE>;

/// Throws ConfigError on invalid parameters.
void validate(const ProcessModel& m);
std::string model_name(const ProcessModel& m);

struct PathGrid {
    double t_final = 1.0;
    std::size_t n_steps = 0;
    double x0 = 0.0;
    std::vector<double> states;  // n_steps + 1 values

    double dt() const { return t_final / static_cast<double>(n_steps); }
};

/// Exact increments for the Levy models, Euler with r_euler sub-steps and
/// thinned large jumps for LocallyStableSDE.
PathGrid simulate_grid(const ProcessModel& m, double x0, double T, std::size_t n, RngStream& rng);

/// Same as simulate_grid, writing n + 1 states into `states` (no allocation).
void simulate_into(const ProcessModel& m, double x0, double T, std::span<double> states,
                   RngStream& rng);

/// X_T - x0 only, for models with exact increments; falls back to a full
/// path for the SDE.
double simulate_terminal(const ProcessModel& m, double x0, double T, RngStream& rng);

/// Forward flow d chi = b(chi) dt, chi_0 = x.
double flow_chi(const DriftSpec& b, double x, double t);
/// Reversed flow d theta = -b(theta) dt, theta_0 = y.
double flow_theta(const DriftSpec& b, double y, double t);

struct FlowEquivalence {
    double c = 0.0;  // min |chi_t(x) - y| / |theta_t(y) - x|
    double C = 0.0;  // max of the same ratio
};
FlowEquivalence flow_equivalence(const DriftSpec& b, std::span<const double> t_grid,
                                 std::span<const double> x_grid, std::span<const double> y_grid);

}  // namespace occlab
