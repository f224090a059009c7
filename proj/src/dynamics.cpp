#include "hisd/dynamics.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace hisd {

namespace {

TrajectorySample make_sample(long step, double t, const Vector& x,
                             double alpha, double energy, double grad_norm) {
  TrajectorySample s;
  s.step = step;
  s.t = t;
  s.x = x;
  s.alpha = alpha;
  s.energy = energy;
  s.grad_norm = grad_norm;
  return s;
}

}  // namespace

Trajectory gradient_flow(const EnergyModel& model, const Vector& x0,
                         const FlowConfig& config, FlowDirection direction) {
  Trajectory traj;
  const double sign = direction == FlowDirection::ascent ? 1.0 : -1.0;
  Vector x = x0;
  double h = config.h;
  double t = 0.0;
  long step = 0;

  double energy, grad_norm;
  Vector g;
  try {
    energy = model.energy(x);
    g = model.gradient(x);
  } catch (const Error&) {
    traj.status = FlowStatus::diverged;
    return traj;
  }
  grad_norm = g.norm();
  traj.samples.push_back(make_sample(0, 0.0, x, 0.0, energy, grad_norm));

  while (true) {
    if (grad_norm < config.grad_tol) {
      traj.status = FlowStatus::converged;
      break;
    }
    if (t >= config.t_max) {
      traj.status = FlowStatus::t_max_reached;
      break;
    }

    bool bad_step = false;
    Vector xn;
    double en = 0.0;
    try {
      xn = x + (sign * h) * g;
      en = model.energy(xn);
      if (direction == FlowDirection::descent) {
        int halvings = 0;
        while (en > energy && halvings < 60) {
          h *= 0.5;
          xn = x + (sign * h) * g;
          en = model.energy(xn);
          ++halvings;
        }
      }
    } catch (const Error&) {
      bad_step = true;
    }
    if (bad_step || !xn.allFinite() || xn.norm() > config.div_radius) {
      traj.status = FlowStatus::diverged;
      if (!bad_step && xn.allFinite()) {
        x = xn;
        t += h;
        ++step;
      }
      break;
    }

    x = xn;
    energy = en;
    t += h;
    ++step;
    if (direction == FlowDirection::descent) h = std::min(h * 1.1, config.h);

    try {
      g = model.gradient(x);
    } catch (const Error&) {
      traj.status = FlowStatus::diverged;
      break;
    }
    grad_norm = g.norm();
    if (step % config.sample_stride == 0)
      traj.samples.push_back(make_sample(step, t, x, 0.0, energy, grad_norm));
  }

  if (traj.samples.back().step != step) {
    double e_final = energy, gn_final = grad_norm;
    try {
      e_final = model.energy(x);
      gn_final = model.gradient(x).norm();
    } catch (const Error&) {
    }
    traj.samples.push_back(make_sample(step, t, x, 0.0, e_final, gn_final));
  }
  return traj;
}

FieldEval ihisd_field(const EnergyModel& model, const SearchState& state,
                      const FlowConfig& config) {
  const int k = state.basis.k();
  const double a = state.alpha;
  Vector g = model.gradient(state.x);

  FieldEval f;
  f.dx = config.beta * ((1.0 - a) * config.s - a) * g;
  for (int i = 0; i < k; ++i) {
    const auto vi = state.basis.vectors.col(i);
    f.dx += (2.0 * config.beta * a * vi.dot(g)) * vi;
  }

  f.dv.resize(state.x.size(), k);
  if (k > 0) {
    Matrix gv(state.x.size(), k);
    if (model.has_analytic_hessian() &&
        model.dim() <= EnergyModel::kDenseHessianCap) {
      Matrix hess = model.dense_hessian(state.x);
      gv = hess * state.basis.vectors;
    } else {
      for (int i = 0; i < k; ++i)
        gv.col(i) = model.hessian_vector(state.x, state.basis.vectors.col(i));
    }
    for (int i = 0; i < k; ++i) {
      const auto vi = state.basis.vectors.col(i);
      Vector w = gv.col(i) - vi * vi.dot(gv.col(i));
      for (int j = 0; j < i; ++j) {
        const auto vj = state.basis.vectors.col(j);
        w -= 2.0 * vj * vj.dot(gv.col(i));
      }
      f.dv.col(i) = -config.gamma * w;
    }
  }

  f.dalpha = config.rate_c * a * (1.0 - a);
  return f;
}

Trajectory integrate_ihisd(const EnergyModel& model, SearchState& state,
                           const FlowConfig& config) {
  Trajectory traj;
  const double alpha0 = state.alpha;
  const bool pinned = config.rate_c == 0.0 || alpha0 >= 1.0;
  if (state.basis.k() > 0)
    state.basis.vectors = orthonormalize(state.basis.vectors);

  long step = 0;
  auto record = [&](double energy, double grad_norm) {
    traj.samples.push_back(
        make_sample(step, state.t, state.x, state.alpha, energy, grad_norm));
  };

  double energy, grad_norm;
  try {
    energy = model.energy(state.x);
    grad_norm = model.gradient(state.x).norm();
  } catch (const Error&) {
    traj.status = FlowStatus::diverged;
    return traj;
  }
  record(energy, grad_norm);

  while (true) {
    if (grad_norm < config.grad_tol && (pinned || state.alpha > 0.99)) {
      traj.status = FlowStatus::converged;
      break;
    }
    if (state.t >= config.t_max) {
      traj.status = FlowStatus::t_max_reached;
      break;
    }

    try {
      FieldEval f = ihisd_field(model, state, config);
      state.x += config.h * f.dx;
      if (state.basis.k() > 0) {
        state.basis.vectors += config.h * f.dv;
        state.basis.vectors = orthonormalize(state.basis.vectors);
      }
      if (!pinned) {
        state.alpha += config.h * f.dalpha;
        state.alpha = std::min(std::max(state.alpha, alpha0), 1.0 - 1e-15);
      }
      state.t += config.h;
      ++step;
      if (!state.x.allFinite() || state.x.norm() > config.div_radius) {
        traj.status = FlowStatus::diverged;
        break;
      }
      energy = model.energy(state.x);
      grad_norm = model.gradient(state.x).norm();
    } catch (const Error&) {
      traj.status = FlowStatus::diverged;
      break;
    }
    if (step % config.sample_stride == 0) record(energy, grad_norm);
  }

  if (traj.samples.back().step != step) record(energy, grad_norm);
  return traj;
}

double alpha_closed_form(double alpha0, double c, double t) {
  if (!(alpha0 > 0.0 && alpha0 < 1.0))
    throw InvalidInputError("alpha_closed_form: need 0 < alpha0 < 1");
  double ct = c * t;
  if (ct > 0.0) {
    // 1 / (1 + (1 - a0)/a0 e^{-ct}), stable for large ct
    return 1.0 / (1.0 + (1.0 - alpha0) / alpha0 * std::exp(-ct));
  }
  double e = std::exp(ct);
  return alpha0 * e / (1.0 - alpha0 + alpha0 * e);
}

void write_trajectory_csv(const Trajectory& trajectory, std::ostream& os) {
  const int n =
      trajectory.samples.empty() ? 0 : static_cast<int>(trajectory.samples[0].x.size());
  os << "step,t,alpha,energy,grad_norm";
  for (int i = 0; i < n; ++i) os << ",x" << i;
  os << "\n";
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << ',' << buf;
  };
  for (const auto& s : trajectory.samples) {
    os << s.step;
    put(s.t);
    put(s.alpha);
    put(s.energy);
    put(s.grad_norm);
    for (int i = 0; i < n; ++i) put(s.x(i));
    os << "\n";
  }
}

}  // namespace hisd
