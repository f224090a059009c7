#include "hisd/saddle.hpp"

#include <cmath>
#include <vector>

namespace hisd {

Vector search_direction(const Vector& g, const UnstableBasis& basis,
                        double alpha, int s) {
  Vector d = ((1.0 - alpha) * s - alpha) * g;
  for (int i = 0; i < basis.k(); ++i) {
    const auto vi = basis.vectors.col(i);
    d += (2.0 * alpha * vi.dot(g)) * vi;
  }
  return d;
}

double step_size(const StepPolicy& policy, double alpha) {
  if (policy.kind == StepPolicy::Kind::fixed) {
    if (policy.eta <= 0.0)
      throw InvalidInputError("step_size: fixed step must be > 0");
    return policy.eta;
  }
  if (policy.mu <= 0.0 || policy.big_l < policy.mu)
    throw InvalidInputError("step_size: need L >= mu > 0");
  return 2.0 / (policy.big_l + policy.mu * (2.0 * alpha - 1.0));
}

StationaryPoint classify_stationary_point(const EnergyModel& model,
                                          const Vector& x,
                                          double zero_threshold) {
  StationaryPoint p;
  p.x = x;
  p.energy = model.energy(x);
  p.grad_norm = model.gradient(x).norm();
  Matrix hess = model.dense_hessian(x);
  dense_eigh(hess, p.eigenvalues, p.eigenvectors);
  double zeta = zero_threshold;
  if (zeta <= 0.0) {
    double lmax = p.eigenvalues.size() > 0
                      ? p.eigenvalues.cwiseAbs().maxCoeff()
                      : 0.0;
    zeta = 1e-6 * std::max(1.0, lmax);
  }
  IndexCount counts = morse_index(p.eigenvalues, zeta);
  p.index = counts.index;
  p.zero_count = counts.zero_count;
  return p;
}

namespace {

struct SearchLoopHook {
  // called with the iterate before each step; return false to stop
  virtual bool observe(long m, const Vector& x) = 0;
  virtual ~SearchLoopHook() = default;
};

SearchResult search_loop(const EnergyModel& model, const Vector& x0,
                         const SaddleConfig& config, SearchLoopHook* hook) {
  if (!(config.alpha.alpha0 > 0.0 && config.alpha.alpha0 <= 1.0))
    throw InvalidInputError("run_saddle_search: need 0 < alpha0 <= 1");
  if (config.k < 0 || config.k > model.dim())
    throw InvalidInputError("run_saddle_search: need 0 <= k <= dim");
  if (config.s != 1 && config.s != -1)
    throw InvalidInputError("run_saddle_search: direction must be +1 or -1");

  SearchResult result;
  Vector x = x0;
  double alpha = config.alpha.alpha0;
  const bool pinned = config.alpha.alpha0 >= 1.0 || config.alpha.rate_c == 0.0;

  const bool dense_ok = !config.use_dimer && model.has_analytic_hessian() &&
                        model.dim() <= EnergyModel::kDenseHessianCap;
  EigenOptions eig = config.eigen;
  if (!dense_ok) eig.mode = EigenMode::matrix_free;

  Matrix warm;  // previous basis, matrix-free warm start
  auto record = [&](long m, double energy, double grad_norm) {
    if (config.traj_stride <= 0) return;
    if (m % config.traj_stride != 0) return;
    TrajectorySample s;
    s.step = m;
    s.t = static_cast<double>(m);
    s.x = x;
    s.alpha = alpha;
    s.energy = energy;
    s.grad_norm = grad_norm;
    result.trajectory.samples.push_back(s);
  };

  for (long m = 0; m < config.max_iter; ++m) {
    Vector g;
    double energy;
    try {
      g = model.gradient(x);
      energy = model.energy(x);
    } catch (const Error&) {
      result.status = SearchStatus::diverged;
      result.iterations = m;
      return result;
    }
    double gn = g.norm();
    record(m, energy, gn);

    if (gn < config.grad_tol) {
      StationaryPoint p =
          classify_stationary_point(model, x, config.zero_threshold);
      result.status = p.index == config.k ? SearchStatus::converged
                                          : SearchStatus::wrong_index;
      result.point = std::move(p);
      result.iterations = m;
      result.trajectory.status = FlowStatus::converged;
      return result;
    }
    if (x.norm() > config.div_radius ||
        (config.spread_radius > 0.0 &&
         model.extent(x) > config.spread_radius)) {
      result.status = SearchStatus::diverged;
      result.iterations = m;
      result.trajectory.status = FlowStatus::diverged;
      return result;
    }
    if (hook != nullptr && !hook->observe(m, x)) {
      result.status = SearchStatus::max_iter_reached;
      result.iterations = m;
      return result;
    }

    UnstableBasis basis;
    if (config.k > 0) {
      try {
        SymmetricOperator op =
            dense_ok ? SymmetricOperator::from_matrix(model.dense_hessian(x))
                     : SymmetricOperator::from_function(
                           model.dim(), [&model, &x](const Vector& v) {
                             return model.hessian_vector(x, v);
                           });
        Matrix deflate = model.symmetry_generators(x);
        basis = eigensolve_k(op, config.k, eig,
                             warm.cols() == config.k ? &warm : nullptr,
                             deflate.cols() > 0 ? &deflate : nullptr);
      } catch (const Error&) {
        result.status = SearchStatus::diverged;
        result.iterations = m;
        return result;
      }
      warm = basis.vectors;
    }

    Vector d = search_direction(g, basis, alpha, config.s);
    x += step_size(config.step, alpha) * d;
    if (!pinned) {
      alpha += config.alpha.eta_alpha * config.alpha.rate_c * alpha *
               (1.0 - alpha);
      alpha = std::min(std::max(alpha, config.alpha.alpha0), 1.0 - 1e-15);
    }
  }

  result.status = SearchStatus::max_iter_reached;
  result.iterations = config.max_iter;
  return result;
}

}  // namespace

SearchResult run_saddle_search(const EnergyModel& model, const Vector& x0,
                               const SaddleConfig& config) {
  return search_loop(model, x0, config, nullptr);
}

double measure_contraction(const EnergyModel& model, const SaddleConfig& config,
                           const Vector& x0) {
  if (model.quadratic_spectrum() == nullptr)
    throw InvalidInputError("measure_contraction: quadratic model required");

  struct Recorder : SearchLoopHook {
    std::vector<double> radii;
    bool observe(long, const Vector& x) override {
      radii.push_back(x.norm());
      return radii.back() > 1e-13;
    }
  } recorder;

  SaddleConfig cfg = config;
  cfg.grad_tol = 0.0;  // run until the radius floor or max_iter
  search_loop(model, x0, cfg, &recorder);

  const auto& r = recorder.radii;
  if (r.size() < 2)
    throw InvalidInputError("measure_contraction: too few iterations");
  double floor = 1e-8 * std::max(1.0, r.front());
  std::vector<double> ratios;
  for (std::size_t m = 0; m + 1 < r.size(); ++m) {
    if (r[m] <= floor || r[m + 1] <= 0.0) break;
    ratios.push_back(r[m + 1] / r[m]);
  }
  if (ratios.empty())
    throw InvalidInputError("measure_contraction: no usable ratios");
  double worst = 0.0;
  for (std::size_t m = ratios.size() / 2; m < ratios.size(); ++m)
    worst = std::max(worst, ratios[m]);
  return worst;
}

}  // namespace hisd
