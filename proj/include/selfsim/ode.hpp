#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <utility>
#include <vector>

namespace selfsim::ode {

using State = std::vector<double>;

/// dy/dt = f(t, y), written into dydt (same length as y).
using Rhs = std::function<void(double t, const double* y, double* dydt)>;

struct IntegratorConfig {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double max_step_factor = 10.0;  // largest step growth per accepted step
    double min_step = 1e-14;        // relative to max(1, |t|)
    double max_step = std::numeric_limits<double>::infinity();
    std::size_t max_steps = 200000;
};

struct Event {
    std::function<double(double t, const double* y)> g;
    int direction = 0;  // +1 rising only, -1 falling only, 0 both
    bool terminal = false;
};

struct EventHit {
    std::size_t index;
    double t;
    State y;
};

/// Piecewise 7th-order interpolant over the accepted steps of one integration.
class DenseSolution {
public:
    DenseSolution() = default;

    std::size_t dim() const { return dim_; }
    double t_begin() const { return t_.empty() ? 0.0 : t_.front(); }
    double t_end() const { return t_.empty() ? 0.0 : t_.back(); }
    bool increasing() const { return t_.size() < 2 || t_.back() > t_.front(); }
    const std::vector<double>& breakpoints() const { return t_; }
    const State& state_at_breakpoint(std::size_t i) const { return y_[i]; }
    const State& front() const { return y_.front(); }
    const State& back() const { return y_.back(); }
    bool contains(double t) const;

    State operator()(double t) const;
    /// Derivative of the interpolating polynomial (not a fresh rhs call).
    State derivative(double t) const;
    void eval(double t, double* out, double* dout = nullptr) const;

    // used by the integrator
    void start(double t0, const State& y0);
    void push(double t1, const State& y1, std::vector<double> coeffs);
    void truncate_last(double t_new, const State& y_new);

private:
    std::size_t locate(double t) const;

    std::size_t dim_ = 0;
    std::vector<double> t_;
    std::vector<State> y_;
    // per interval: kInterpPower * dim coefficients
    std::vector<std::vector<double>> F_;
};

struct IntegrationResult {
    std::shared_ptr<const DenseSolution> solution;
    std::vector<EventHit> events;
    bool terminated = false;  // stopped by a terminal event
    std::size_t steps = 0;
    std::size_t rhs_evals = 0;
};

/// Adaptive DOP853 integration from t0 to t1 (either direction).
IntegrationResult integrate(const Rhs& f, double t0, const State& y0, double t1,
                            const IntegratorConfig& cfg = {},
                            const std::vector<Event>& events = {});

/// Root of a continuous scalar function on a sign-changing bracket.
double bisect(const std::function<double(double)>& f, double a, double b, double tol);

/// Same contract as bisect but with TOMS 748 steps (fewer evaluations).
double solve_bracketed(const std::function<double(double)>& f, double a, double b,
                       double tol, std::size_t max_iter = 200);

struct SinusoidFit {
    double amplitude;  // c >= 0
    double phase;      // d in [0, 2pi)
    double rms_residual;
};

/// Least squares fit g ~ c sin(omega log y + d) at fixed omega.
SinusoidFit fit_log_sinusoid(const std::vector<double>& y, const std::vector<double>& g,
                             double omega);

/// Fit with one extra decaying correction term y^{-1/2}{1, cos 2phi, sin 2phi}.
SinusoidFit fit_log_sinusoid_corrected(const std::vector<double>& y,
                                       const std::vector<double>& g, double omega);

}  // namespace selfsim::ode
