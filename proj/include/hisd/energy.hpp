#pragma once

#include <Eigen/Core>

#include <map>
#include <memory>
#include <string>

#include "hisd/errors.hpp"

namespace hisd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Continuous symmetry of an energy model. Planar clusters are invariant
/// under common translations and rotations of all particles, which forces
/// three zero modes into the Hessian at every stationary point.
enum class Symmetry { none, planar_cluster };

/// Settings for matrix-free Hessian-vector products via the central
/// difference (grad(x + l v) - grad(x - l v)) / (2 l).
struct DimerSettings {
  /// Finite-difference half-length; 0 selects 1e-4 * max(1, |x|).
  double half_length = 0.0;
};

/// An energy surface E : R^dim -> R with analytic first derivatives and,
/// for the built-in benchmarks, analytic second derivatives. Models are
/// immutable after construction; all evaluators are pure and thread-safe.
class EnergyModel {
 public:
  virtual ~EnergyModel() = default;

  int dim() const { return dim_; }
  const std::string& name() const { return name_; }
  const std::map<std::string, double>& params() const { return params_; }
  Symmetry symmetry() const { return symmetry_; }

  /// Number of Hessian zero modes forced by the model symmetry
  /// (3 for a planar cluster, otherwise 0).
  int symmetry_zero_modes() const {
    return symmetry_ == Symmetry::planar_cluster ? 3 : 0;
  }

  double energy(const Vector& x) const;
  Vector gradient(const Vector& x) const;

  bool has_analytic_hessian() const { return has_hessian_impl(); }

  /// G(x) v, exact when an analytic Hessian exists, otherwise a central
  /// difference of the gradient with O(l^2) error.
  Vector hessian_vector(const Vector& x, const Vector& v,
                        DimerSettings settings = {}) const;

  /// Full Hessian, symmetrized as (H + H^T)/2. Models without an analytic
  /// Hessian fall back to central differences of the gradient.
  Matrix dense_hessian(const Vector& x) const;

  /// Orthonormal basis of the symmetry-generator subspace at x
  /// (dim x symmetry_zero_modes(); empty for symmetry none).
  Matrix symmetry_generators(const Vector& x) const;

  /// Spatial extent used by divergence guards: |x| for plain models, the
  /// largest pairwise particle distance for clusters (so a dissociating
  /// cluster is caught even though its centroid stays put).
  virtual double extent(const Vector& x) const { return x.norm(); }

  /// Diagonal spectrum for quadratic test models, nullptr otherwise.
  virtual const Vector* quadratic_spectrum() const { return nullptr; }

  static constexpr int kDenseHessianCap = 512;

 protected:
  EnergyModel(std::string name, int dim, Symmetry symmetry,
              std::map<std::string, double> params);

  virtual double energy_impl(const Vector& x) const = 0;
  virtual Vector gradient_impl(const Vector& x) const = 0;
  virtual bool has_hessian_impl() const { return false; }
  virtual Matrix hessian_impl(const Vector& x) const;
  virtual Matrix generators_impl(const Vector& x) const;

  void check_dim(const Vector& x) const;

 private:
  std::string name_;
  int dim_;
  Symmetry symmetry_;
  std::map<std::string, double> params_;
};

/// Two-dimensional benchmark surface
///   E(x, y) = x^4 - 2x^2 + y^4 + y^2 - 1.5 x^2 y^2 + x^2 y - c y^3.
/// The origin is a 1-saddle with Hessian diag(-4, 2) for every c.
std::unique_ptr<EnergyModel> make_butterfly(double c);

/// Planar cluster of n identical particles interacting through the Morse
/// pair potential V(r) = exp(-2a(r-1)) - 2 exp(-a(r-1)). Coordinates are
/// stored as (x_0, y_0, x_1, y_1, ...), so dim = 2n.
std::unique_ptr<EnergyModel> make_morse_cluster(int n_particles, double a);

/// E(x) = x^T diag(spectrum) x / 2.
std::unique_ptr<EnergyModel> make_quadratic(Vector spectrum);

/// Build a model from its CLI identifier ("butterfly", "morse",
/// "quadratic") and key=value parameters. The quadratic model takes
/// spectrum as a comma-separated list.
std::unique_ptr<EnergyModel> make_model(
    const std::string& id, const std::map<std::string, std::string>& params);

/// Finite-difference consistency report: analytic gradient vs central
/// differences of the energy, and analytic Hessian columns vs central
/// differences of the gradient, both as max relative errors.
struct FdReport {
  double grad_rel_err = 0.0;
  double hess_rel_err = 0.0;
};

FdReport fd_check(const EnergyModel& model, const Vector& x);

}  // namespace hisd
