#pragma once

#include <optional>
#include <string>

#include "hisd/dynamics.hpp"

namespace hisd {

/// Discrete ratio sequence alpha_{m+1} = clamp(alpha_m +
/// eta_alpha c alpha_m (1 - alpha_m)); alpha0 = 1 pins alpha and recovers
/// plain HiSD.
struct AlphaSchedule {
  double alpha0 = 1e-9;
  double rate_c = 2.0;
  double eta_alpha = 1.0;
};

struct StepPolicy {
  enum class Kind { fixed, theoretical };
  Kind kind = Kind::fixed;
  double eta = 1e-2;            // fixed step
  double big_l = 0.0, mu = 0.0; // spectral bounds of |G(x*)| for theoretical

  static StepPolicy fixed_step(double eta) {
    StepPolicy p;
    p.kind = Kind::fixed;
    p.eta = eta;
    return p;
  }
  static StepPolicy theoretical(double big_l, double mu) {
    StepPolicy p;
    p.kind = Kind::theoretical;
    p.big_l = big_l;
    p.mu = mu;
    return p;
  }
};

struct SaddleConfig {
  int k = 1;
  int s = +1;
  AlphaSchedule alpha;
  StepPolicy step;
  double grad_tol = 1e-6;
  long max_iter = 100000;
  EigenOptions eigen;
  /// Zero-mode classification threshold; 0 selects 1e-6 max(1, |lambda|max).
  double zero_threshold = 0.0;
  double div_radius = 1e6;
  /// Extra guard on EnergyModel::extent (cluster dissociation); 0 disables.
  double spread_radius = 0.0;
  /// Record the iterate path every traj_stride steps; 0 disables.
  long traj_stride = 0;
  /// Use finite-difference Hessian products instead of the analytic Hessian.
  bool use_dimer = false;
};

enum class SearchStatus { converged, wrong_index, max_iter_reached, diverged };

/// A classified stationary point. The Morse index counts eigenvalues below
/// -zeta and zero_count those within [-zeta, zeta], so symmetry zero modes
/// are excluded from the index.
struct StationaryPoint {
  Vector x;
  double energy = 0.0;
  double grad_norm = 0.0;
  int index = 0;
  int zero_count = 0;
  Vector eigenvalues;   // ascending
  Matrix eigenvectors;  // columns matching eigenvalues
  std::string fingerprint;  // set by the landscape builder
};

struct SearchResult {
  std::optional<StationaryPoint> point;
  SearchStatus status = SearchStatus::max_iter_reached;
  long iterations = 0;
  Trajectory trajectory;  // populated when traj_stride > 0
};

/// d = ((1 - alpha) s - alpha) g + 2 alpha sum_i <v_i, g> v_i
Vector search_direction(const Vector& g, const UnstableBasis& basis,
                        double alpha, int s);

/// Fixed policy returns its constant; theoretical returns
/// 2 / (L + mu (2 alpha - 1)) and requires L >= mu > 0.
double step_size(const StepPolicy& policy, double alpha);

/// Full spectrum at x, Morse index and zero count under the given
/// threshold (0 selects 1e-6 max(1, |lambda|max)). Fingerprint is left
/// empty.
StationaryPoint classify_stationary_point(const EnergyModel& model,
                                          const Vector& x,
                                          double zero_threshold = 0.0);

/// Discrete crossover search for a k-saddle: per iteration the k lowest
/// Hessian eigenpairs are recomputed (warm-started, symmetry zero modes
/// deflated for cluster models), the reflected direction is assembled, and
/// x advances by the policy step while alpha follows its schedule. Stops
/// when |grad| < grad_tol and classifies the endpoint; a terminal index
/// different from k gives status wrong_index with the point still
/// reported.
SearchResult run_saddle_search(const EnergyModel& model, const Vector& x0,
                               const SaddleConfig& config);

/// Runs the search on a quadratic model (stationary point at the origin)
/// and returns the largest tail ratio |x_{m+1}| / |x_m|, the observed
/// per-step contraction. Ratios are collected while |x_m| stays above the
/// rounding floor; the tail is the later half.
double measure_contraction(const EnergyModel& model, const SaddleConfig& config,
                           const Vector& x0);

}  // namespace hisd
