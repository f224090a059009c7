#include "hisd/verify.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace hisd {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

void add(std::vector<CheckResult>& out, const std::string& suite,
         const std::string& name, bool passed, const std::string& detail) {
  out.push_back({suite, name, passed, detail});
}

// ---------------------------------------------------------------------------
// fd: analytic derivatives vs central differences
// ---------------------------------------------------------------------------

Vector random_morse_positions(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 2.5);
  while (true) {
    Vector x(2 * n);
    for (int i = 0; i < x.size(); ++i) x(i) = u(rng);
    bool ok = true;
    for (int i = 0; i < n && ok; ++i)
      for (int j = i + 1; j < n && ok; ++j)
        if (std::hypot(x(2 * i) - x(2 * j), x(2 * i + 1) - x(2 * j + 1)) < 0.3)
          ok = false;
    if (ok) return x;
  }
}

void suite_fd(std::vector<CheckResult>& out, int trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> box(-2.0, 2.0);
  std::uniform_real_distribution<double> wide(-5.0, 5.0);

  struct Case {
    std::string name;
    std::unique_ptr<EnergyModel> model;
    double grad_tol, hess_tol;
  };
  std::vector<Case> cases;
  cases.push_back({"butterfly c=1", make_butterfly(1.0), 1e-6, 1e-5});
  cases.push_back({"morse n=4 a=6", make_morse_cluster(4, 6.0), 1e-6, 1e-5});
  {
    Vector spec(2);
    spec << -1.0, 2.0;
    cases.push_back({"quadratic(-1,2)", make_quadratic(spec), 1e-10, 1e-10});
  }

  for (auto& c : cases) {
    double worst_g = 0.0, worst_h = 0.0;
    for (int t = 0; t < trials; ++t) {
      Vector x(c.model->dim());
      if (c.model->name() == "morse") {
        x = random_morse_positions(c.model->dim() / 2, rng);
      } else if (c.model->name() == "quadratic") {
        for (int i = 0; i < x.size(); ++i) x(i) = wide(rng);
      } else {
        for (int i = 0; i < x.size(); ++i) x(i) = box(rng);
      }
      FdReport rep = fd_check(*c.model, x);
      worst_g = std::max(worst_g, rep.grad_rel_err);
      worst_h = std::max(worst_h, rep.hess_rel_err);
    }
    add(out, "fd", c.name + " gradient", worst_g <= c.grad_tol,
        "max rel err " + fmt(worst_g));
    add(out, "fd", c.name + " hessian", worst_h <= c.hess_tol,
        "max rel err " + fmt(worst_h));
  }
}

// ---------------------------------------------------------------------------
// eigen: eigensolve_k vs dense oracle
// ---------------------------------------------------------------------------

double subspace_angle(const Matrix& a, const Matrix& b) {
  // largest principal angle via the projector difference
  Matrix diff = a * a.transpose() - b * b.transpose();
  return std::asin(std::min(1.0, diff.norm() / std::sqrt(2.0)));
}

void suite_eigen(std::vector<CheckResult>& out, int trials,
                 std::uint64_t seed) {
  std::mt19937_64 rng(seed + 1);
  std::uniform_int_distribution<int> size_dist(2, 8);

  double worst_val = 0.0, worst_angle = 0.0, worst_rayleigh = 0.0,
         worst_comm = 0.0;
  int angle_checked = 0;
  for (int t = 0; t < trials; ++t) {
    int n = size_dist(rng);
    std::uniform_int_distribution<int> k_dist(1, n);
    int k = k_dist(rng);
    Matrix a = random_symmetric(n, rng);

    UnstableBasis basis =
        eigensolve_k(SymmetricOperator::from_matrix(a), k);
    Eigen::SelfAdjointEigenSolver<Matrix> oracle(a);

    for (int i = 0; i < k; ++i)
      worst_val = std::max(
          worst_val, std::abs(basis.values(i) - oracle.eigenvalues()(i)));

    double gap = k < n ? oracle.eigenvalues()(k) - oracle.eigenvalues()(k - 1)
                       : 1.0;
    if (gap > 1e-4) {
      ++angle_checked;
      worst_angle = std::max(
          worst_angle,
          subspace_angle(basis.vectors, oracle.eigenvectors().leftCols(k)));
    }

    double rayleigh = 0.0;
    for (int i = 0; i < k; ++i)
      rayleigh += basis.vectors.col(i).dot(a * basis.vectors.col(i));
    double sum_lowest = oracle.eigenvalues().head(k).sum();
    worst_rayleigh = std::max(worst_rayleigh, std::abs(rayleigh - sum_lowest));

    // commutator at an invariant subspace
    Matrix r = Matrix::Identity(n, n) -
               2.0 * basis.vectors * basis.vectors.transpose();
    if (gap > 1e-4)
      worst_comm = std::max(worst_comm, (r * a - a * r).norm());
  }
  add(out, "eigen", "dense vs oracle eigenvalues", worst_val <= 1e-8,
      "max err " + fmt(worst_val));
  add(out, "eigen", "dense vs oracle subspace", worst_angle <= 1e-6,
      "max principal angle " + fmt(worst_angle) + " over " +
          std::to_string(angle_checked) + " gapped trials");
  add(out, "eigen", "rayleigh sum equals k lowest", worst_rayleigh <= 1e-8,
      "max err " + fmt(worst_rayleigh));
  add(out, "eigen", "commutator RG-GR at invariant subspace",
      worst_comm <= 1e-8, "max norm " + fmt(worst_comm));

  // matrix-free block descent against the same oracle
  double worst_mf = 0.0, worst_res = 0.0;
  int mf_trials = std::max(5, trials / 10);
  for (int t = 0; t < mf_trials; ++t) {
    int n = 24;
    std::uniform_int_distribution<int> k_dist(1, 4);
    int k = k_dist(rng);
    Matrix a = random_symmetric(n, rng);
    EigenOptions opts;
    opts.mode = EigenMode::matrix_free;
    opts.tol = 1e-9;
    opts.max_iter = 400;
    UnstableBasis basis = eigensolve_k(
        SymmetricOperator::from_function(
            n, [&a](const Vector& v) { return Vector(a * v); }),
        k, opts);
    Eigen::SelfAdjointEigenSolver<Matrix> oracle(a);
    for (int i = 0; i < k; ++i) {
      worst_mf = std::max(
          worst_mf, std::abs(basis.values(i) - oracle.eigenvalues()(i)));
      double res = (a * basis.vectors.col(i) -
                    basis.values(i) * basis.vectors.col(i))
                       .norm() /
                   std::max(1.0, std::abs(basis.values(i)));
      worst_res = std::max(worst_res, res);
    }
  }
  add(out, "eigen", "matrix-free vs oracle eigenvalues", worst_mf <= 1e-6,
      "max err " + fmt(worst_mf));
  add(out, "eigen", "matrix-free residuals", worst_res <= 1e-8,
      "max residual " + fmt(worst_res));
}

// ---------------------------------------------------------------------------
// lemma31: reflection distance extremum property
// ---------------------------------------------------------------------------

Matrix gapped_symmetric(int n, double min_gap, std::mt19937_64& rng) {
  while (true) {
    Matrix a = random_symmetric(n, rng);
    Eigen::SelfAdjointEigenSolver<Matrix> es(a);
    bool ok = true;
    for (int i = 0; i + 1 < n; ++i)
      if (es.eigenvalues()(i + 1) - es.eigenvalues()(i) < min_gap) ok = false;
    if (ok) return a;
  }
}

void suite_lemma31(std::vector<CheckResult>& out, int trials,
                   std::uint64_t seed) {
  std::mt19937_64 rng(seed + 2);
  const int n = 5;
  std::uniform_int_distribution<int> k_dist(1, n - 1);
  double worst_min_violation = 0.0, worst_max_violation = 0.0;
  for (int t = 0; t < trials; ++t) {
    Matrix g = gapped_symmetric(n, 1e-3, rng);
    int k = k_dist(rng);
    Eigen::SelfAdjointEigenSolver<Matrix> es(g);

    UnstableBasis lowest;
    lowest.vectors = es.eigenvectors().leftCols(k);
    lowest.values = es.eigenvalues().head(k);
    double base_min = reflection_distance(lowest, g);

    UnstableBasis highest;
    highest.vectors = es.eigenvectors().rightCols(k);
    highest.values = es.eigenvalues().tail(k);
    double base_max = reflection_distance(highest, g);

    for (int p = 0; p < 50; ++p) {
      UnstableBasis pl = tangent_perturb(lowest, 1e-3, rng);
      worst_min_violation =
          std::max(worst_min_violation, base_min - reflection_distance(pl, g));
      UnstableBasis ph = tangent_perturb(highest, 1e-3, rng);
      worst_max_violation =
          std::max(worst_max_violation, reflection_distance(ph, g) - base_max);
    }
  }
  add(out, "lemma31", "k-lowest reflection is local min",
      worst_min_violation <= 1e-12,
      "max decrease " + fmt(worst_min_violation));
  add(out, "lemma31", "k-highest reflection is local max",
      worst_max_violation <= 1e-12,
      "max increase " + fmt(worst_max_violation));
}

// ---------------------------------------------------------------------------
// equilibrium: Theorem 3.2 equilibrium and linear stability
// ---------------------------------------------------------------------------

Vector flatten_state(const SearchState& state) {
  const int n = static_cast<int>(state.x.size());
  const int k = state.basis.k();
  Vector z(n + n * k + 1);
  z.head(n) = state.x;
  for (int j = 0; j < k; ++j)
    z.segment(n + j * n, n) = state.basis.vectors.col(j);
  z(n + n * k) = state.alpha;
  return z;
}

SearchState unflatten_state(const Vector& z, int n, int k) {
  SearchState state;
  state.x = z.head(n);
  state.basis.vectors.resize(n, k);
  for (int j = 0; j < k; ++j)
    state.basis.vectors.col(j) = z.segment(n + j * n, n);
  state.basis.values = Vector::Zero(k);
  state.alpha = z(n + n * k);
  return state;
}

Vector flatten_field(const FieldEval& f) {
  const int n = static_cast<int>(f.dx.size());
  const int k = static_cast<int>(f.dv.cols());
  Vector z(n + n * k + 1);
  z.head(n) = f.dx;
  for (int j = 0; j < k; ++j) z.segment(n + j * n, n) = f.dv.col(j);
  z(n + n * k) = f.dalpha;
  return z;
}

void suite_equilibrium(std::vector<CheckResult>& out, int /*trials*/,
                       std::uint64_t /*seed*/) {
  struct Case {
    std::string name;
    std::vector<double> spectrum;
    int k;
  };
  std::vector<Case> cases = {{"diag(-1,2) k=1", {-1, 2}, 1},
                             {"diag(-2,-1,3) k=2", {-2, -1, 3}, 2},
                             {"diag(-1,2,5) k=1", {-1, 2, 5}, 1}};
  FlowConfig flow;  // beta = gamma = 1, c = 2

  for (const auto& c : cases) {
    Vector spec(c.spectrum.size());
    for (std::size_t i = 0; i < c.spectrum.size(); ++i) spec(i) = c.spectrum[i];
    auto model = make_quadratic(spec);
    const int n = model->dim();

    SearchState star;
    star.x = Vector::Zero(n);
    star.basis.vectors = Matrix::Identity(n, n).leftCols(c.k);
    star.basis.values = spec.head(c.k);
    star.alpha = 1.0;

    FieldEval f = ihisd_field(*model, star, flow);
    double fnorm = std::sqrt(f.dx.squaredNorm() + f.dv.squaredNorm() +
                             f.dalpha * f.dalpha);
    add(out, "equilibrium", c.name + " field vanishes", fnorm <= 1e-10,
        "field norm " + fmt(fnorm));

    Vector z0 = flatten_state(star);
    const int m = static_cast<int>(z0.size());
    Matrix jac(m, m);
    const double h = 1e-6;
    for (int j = 0; j < m; ++j) {
      Vector zp = z0, zm = z0;
      zp(j) += h;
      zm(j) -= h;
      SearchState sp = unflatten_state(zp, n, c.k);
      SearchState sm = unflatten_state(zm, n, c.k);
      jac.col(j) = (flatten_field(ihisd_field(*model, sp, flow)) -
                    flatten_field(ihisd_field(*model, sm, flow))) /
                   (2.0 * h);
    }
    Eigen::EigenSolver<Matrix> es(jac);
    double max_real = es.eigenvalues().real().maxCoeff();
    add(out, "equilibrium", c.name + " Jacobian stable", max_real <= -1e-8,
        "max Re(lambda) " + fmt(max_real));
  }
}

// ---------------------------------------------------------------------------
// rate: Theorem 4.1 contraction bounds
// ---------------------------------------------------------------------------

void suite_rate(std::vector<CheckResult>& out, int /*trials*/,
                std::uint64_t /*seed*/) {
  for (double lambda2 : {2.0, 5.0, 10.0}) {
    Vector spec(2);
    spec << -1.0, lambda2;
    auto model = make_quadratic(spec);
    double kappa = lambda2;  // L = lambda2, mu = 1
    Vector x0(2);
    x0 << 0.7, 0.7;

    SaddleConfig pinned;
    pinned.k = 1;
    pinned.alpha = {1.0, 0.0, 0.0};
    pinned.step = StepPolicy::theoretical(lambda2, 1.0);
    pinned.max_iter = 2000;
    double tail = measure_contraction(*model, pinned, x0);
    double exact_bound = (kappa - 1.0) / (kappa + 1.0);
    std::ostringstream name;
    name << "diag(-1," << lambda2 << ") alpha=1";
    add(out, "rate", name.str(), tail <= exact_bound + 1e-6,
        "tail " + fmt(tail) + " bound " + fmt(exact_bound));

    SaddleConfig ramp;
    ramp.k = 1;
    ramp.alpha = {0.75, 2.0, 1.0};
    ramp.step = StepPolicy::theoretical(lambda2, 1.0);
    ramp.max_iter = 2000;
    double tail2 = measure_contraction(*model, ramp, x0);
    double eps = 2.0 * 0.75 - 1.0;
    double thm_bound = (kappa + eps) / (kappa + 3.0 * eps);
    std::ostringstream name2;
    name2 << "diag(-1," << lambda2 << ") alpha0=0.75";
    add(out, "rate", name2.str(), tail2 <= thm_bound + 1e-6,
        "tail " + fmt(tail2) + " theorem bound " + fmt(thm_bound));
  }

  // constant alpha = 0.75 (eps = 0.5) per-step bound
  Vector spec(2);
  spec << -1.0, 2.0;
  auto model = make_quadratic(spec);
  SaddleConfig constant;
  constant.k = 1;
  constant.alpha = {0.75, 0.0, 0.0};
  constant.step = StepPolicy::theoretical(2.0, 1.0);
  constant.max_iter = 2000;
  Vector x0(2);
  x0 << 0.7, 0.7;
  double tail = measure_contraction(*model, constant, x0);
  add(out, "rate", "diag(-1,2) alpha=0.75 constant", tail <= 0.6 + 1e-6,
      "tail " + fmt(tail) + " bound 6.000e-01");
}

// ---------------------------------------------------------------------------
// alpha: Euler-integrated ratio vs logistic closed form
// ---------------------------------------------------------------------------

void suite_alpha(std::vector<CheckResult>& out, int /*trials*/,
                 std::uint64_t /*seed*/) {
  double worst = 0.0;
  for (double alpha0 : {1e-9, 1e-4, 0.5}) {
    for (double c : {0.5, 2.0}) {
      const double h = 1e-3;
      double a = alpha0;
      for (double t = 0.0; t < 20.0; t += h) {
        a = std::min(a + h * c * a * (1.0 - a), 1.0 - 1e-15);
        double exact = alpha_closed_form(alpha0, c, t + h);
        worst = std::max(worst, std::abs(a - exact) / (5.0 * h * c));
      }
    }
  }
  add(out, "alpha", "euler alpha matches logistic to O(h)", worst <= 1.0,
      "max err / (5hc) = " + fmt(worst));

  double v = alpha_closed_form(0.5, 2.0, 1.0);
  double expected = std::exp(2.0) / (1.0 + std::exp(2.0));
  add(out, "alpha", "closed form at alpha0=0.5 c=2 t=1",
      std::abs(v - expected) <= 1e-15, fmt(v));
  double limit = alpha_closed_form(0.3, 2.0, 25.0);  // ct = 50 > 40
  add(out, "alpha", "closed form limit alpha -> 1",
      std::abs(limit - 1.0) <= 1e-12, fmt(1.0 - limit));
}

}  // namespace

Matrix random_symmetric(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> dist;
  Matrix b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b(i, j) = dist(rng);
  return 0.5 * (b + b.transpose());
}

UnstableBasis tangent_perturb(const UnstableBasis& basis, double scale,
                              std::mt19937_64& rng) {
  std::normal_distribution<double> dist;
  Matrix w(basis.dim(), basis.k());
  for (int i = 0; i < w.rows(); ++i)
    for (int j = 0; j < w.cols(); ++j) w(i, j) = dist(rng);
  UnstableBasis out;
  out.vectors = orthonormalize(basis.vectors + scale * w);
  out.values = basis.values;
  return out;
}

std::vector<std::string> verify_suite_names() {
  return {"fd", "eigen", "lemma31", "equilibrium", "rate", "alpha"};
}

std::vector<CheckResult> run_verify_suite(const std::string& suite, int trials,
                                          std::uint64_t seed) {
  std::vector<CheckResult> out;
  bool all = suite == "all";
  bool known = all;
  if (all || suite == "fd") suite_fd(out, trials, seed), known = true;
  if (all || suite == "eigen") suite_eigen(out, trials, seed), known = true;
  if (all || suite == "lemma31") suite_lemma31(out, trials, seed), known = true;
  if (all || suite == "equilibrium")
    suite_equilibrium(out, trials, seed), known = true;
  if (all || suite == "rate") suite_rate(out, trials, seed), known = true;
  if (all || suite == "alpha") suite_alpha(out, trials, seed), known = true;
  if (!known) throw InvalidInputError("unknown verify suite '" + suite + "'");
  return out;
}

}  // namespace hisd
