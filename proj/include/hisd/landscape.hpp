#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hisd/saddle.hpp"

namespace hisd {

enum class IndexStrategy { adjacent_only, all_pairs };

struct LandscapeConfig {
  IndexStrategy strategy = IndexStrategy::adjacent_only;
  /// Perturbation size |x_delta - x|.
  double delta = 1e-2;
  /// Eigenvector directions tried per (vertex, target index) pair;
  /// -1 tries every non-zero-mode Hessian eigenvector.
  int perturb_directions = -1;
  long attempt_cap = 1000;
  double dedup_tol = 1e-4;
  /// Template for the per-edge searches; k, s are filled per work item.
  SaddleConfig saddle;
  std::uint64_t seed = 0;
  /// Perturb along random unit directions instead of eigenvectors.
  bool random_directions = false;
  int jobs = 1;
  /// Highest target index; -1 selects dim - symmetry zero modes.
  int max_index = -1;
};

struct LandscapeEdge {
  std::string from;  // fingerprints
  std::string to;
  int s = 0;  // search direction that discovered the edge
  int k = 0;  // Morse index actually reached at `to`
};

struct LandscapeGraph {
  std::vector<StationaryPoint> vertices;  // discovery order, fingerprints set
  std::vector<LandscapeEdge> edges;
  std::uint64_t seed = 0;
  bool truncated = false;
  long attempts = 0;

  const StationaryPoint* find(const std::string& fingerprint) const;
};

/// Canonical key identifying a stationary point modulo model symmetry:
/// grid-rounded coordinates for plain models; for planar clusters the
/// sorted pairwise distances plus the energy, all rounded to dedup_tol.
std::string fingerprint(const EnergyModel& model, const Vector& x,
                        double dedup_tol);

/// x + sign * delta * w, where w is the unit Hessian eigenvector of the
/// point selected by direction_index, counted in ascending eigenvalue
/// order with zero modes skipped.
Vector perturb(const StationaryPoint& point, int direction_index, int sign,
               double delta);

/// Breadth-first construction of the stationary-point graph: every vertex
/// spawns perturbed searches toward its target indices (adjacent only or
/// all pairs), converged results are deduplicated by fingerprint, new
/// vertices enqueue further work. The seed point is first relaxed by
/// gradient descent if it is not already stationary. Deterministic for a
/// fixed seed in serial mode; with jobs > 1 the vertex set is unchanged
/// but edge discovery order may differ.
LandscapeGraph build_landscape(const EnergyModel& model,
                               const Vector& seed_point,
                               const LandscapeConfig& config);

std::string export_graph_json(const LandscapeGraph& graph,
                              const EnergyModel& model);
std::string export_graph_dot(const LandscapeGraph& graph);

}  // namespace hisd
