#pragma once

#include <iosfwd>
#include <vector>

#include "hisd/eigensolve.hpp"
#include "hisd/energy.hpp"

namespace hisd {

/// State advanced by the crossover dynamics: position, orthonormal
/// unstable basis, and the mixing ratio alpha in [0, 1] (0 = gradient
/// flow, 1 = pure reflected dynamics).
struct SearchState {
  Vector x;
  UnstableBasis basis;
  double alpha = 1.0;
  double t = 0.0;
};

struct FlowConfig {
  double beta = 1.0;    // x time scale
  double gamma = 1.0;   // basis time scale
  double rate_c = 2.0;  // alpha rate constant in eps(alpha) = c a (1-a)
  int s = +1;           // +1 upward search, -1 downward
  double h = 1e-3;      // Euler step
  double t_max = 100.0;
  double grad_tol = 1e-6;
  double div_radius = 1e6;
  long sample_stride = 1;
};

enum class FlowStatus { converged, t_max_reached, diverged };

struct TrajectorySample {
  long step = 0;
  double t = 0.0;
  Vector x;
  double alpha = 0.0;
  double energy = 0.0;
  double grad_norm = 0.0;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  FlowStatus status = FlowStatus::t_max_reached;
};

enum class FlowDirection { descent, ascent };

/// Forward-Euler gradient flow, xdot = -grad E (descent) or +grad E
/// (ascent). Descent halves the step whenever the energy increases.
Trajectory gradient_flow(const EnergyModel& model, const Vector& x0,
                         const FlowConfig& config,
                         FlowDirection direction = FlowDirection::descent);

struct FieldEval {
  Vector dx;
  Matrix dv;  // n x k, column i is the velocity of basis vector i
  double dalpha = 0.0;
};

/// Right-hand side of the crossover system at the given state:
///   dx      = beta ((1-alpha) s - alpha) g + 2 beta alpha sum <v_i,g> v_i
///   dv_i    = -gamma (I - v_i v_i^T - 2 sum_{j<i} v_j v_j^T) G v_i
///   dalpha  = c alpha (1 - alpha)
FieldEval ihisd_field(const EnergyModel& model, const SearchState& state,
                      const FlowConfig& config);

/// Forward Euler on (x, V, alpha) with Gram-Schmidt retraction of the basis
/// after every step. Stops converged once |grad| < grad_tol with
/// alpha > 0.99. Alpha stays clamped to [alpha(0), 1 - 1e-15]; with
/// rate_c = 0 or alpha(0) = 1 it is pinned, which reproduces plain HiSD
/// (GAD for k = 1). `state` is advanced to the terminal state.
Trajectory integrate_ihisd(const EnergyModel& model, SearchState& state,
                           const FlowConfig& config);

/// Exact logistic solution alpha0 e^{ct} / (1 - alpha0 + alpha0 e^{ct}) of
/// the alpha equation, for validating the Euler-integrated alpha.
double alpha_closed_form(double alpha0, double c, double t);

/// CSV export: header step,t,alpha,energy,grad_norm,x0,...,x{n-1}, floats
/// with 17 significant digits.
void write_trajectory_csv(const Trajectory& trajectory, std::ostream& os);

}  // namespace hisd
