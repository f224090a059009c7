#include "hisd/energy.hpp"

#include <cmath>
#include <sstream>
#include <vector>

namespace hisd {

namespace {

bool all_finite(const Vector& v) { return v.allFinite(); }

double auto_step(const Vector& x, double scale) {
  return scale * std::max(1.0, x.norm());
}

}  // namespace

EnergyModel::EnergyModel(std::string name, int dim, Symmetry symmetry,
                         std::map<std::string, double> params)
    : name_(std::move(name)), dim_(dim), symmetry_(symmetry),
      params_(std::move(params)) {
  if (dim_ < 1) throw InvalidInputError("energy model dimension must be >= 1");
}

void EnergyModel::check_dim(const Vector& x) const {
  if (x.size() != dim_) {
    std::ostringstream os;
    os << name_ << ": expected vector of length " << dim_ << ", got "
       << x.size();
    throw InvalidInputError(os.str());
  }
}

double EnergyModel::energy(const Vector& x) const {
  check_dim(x);
  double e = energy_impl(x);
  if (!std::isfinite(e))
    throw NumericOverflowError(name_ + ": non-finite energy");
  return e;
}

Vector EnergyModel::gradient(const Vector& x) const {
  check_dim(x);
  Vector g = gradient_impl(x);
  if (!all_finite(g))
    throw NumericOverflowError(name_ + ": non-finite gradient");
  return g;
}

Vector EnergyModel::hessian_vector(const Vector& x, const Vector& v,
                                   DimerSettings settings) const {
  check_dim(x);
  check_dim(v);
  if (v.norm() == 0.0)
    throw InvalidInputError("hessian_vector: direction must be nonzero");
  if (settings.half_length < 0.0)
    throw InvalidInputError("hessian_vector: half-length must be positive");
  if (has_hessian_impl()) return hessian_impl(x) * v;

  double l = settings.half_length > 0.0 ? settings.half_length
                                        : auto_step(x, 1e-4);
  Vector hv = (gradient(x + l * v) - gradient(x - l * v)) / (2.0 * l);
  if (!all_finite(hv))
    throw NumericOverflowError(name_ + ": non-finite Hessian product");
  return hv;
}

Matrix EnergyModel::dense_hessian(const Vector& x) const {
  check_dim(x);
  if (dim_ > kDenseHessianCap)
    throw UnsupportedOperationError(
        "dense_hessian: dimension exceeds dense cap, use hessian_vector");
  Matrix h = hessian_impl(x);
  if (!h.allFinite())
    throw NumericOverflowError(name_ + ": non-finite Hessian");
  return 0.5 * (h + h.transpose());
}

Matrix EnergyModel::hessian_impl(const Vector& x) const {
  // Central differences of the gradient, one coordinate at a time.
  double h = auto_step(x, 1e-5);
  Matrix out(dim_, dim_);
  Vector xp = x, xm = x;
  for (int j = 0; j < dim_; ++j) {
    xp(j) += h;
    xm(j) -= h;
    out.col(j) = (gradient(xp) - gradient(xm)) / (2.0 * h);
    xp(j) = x(j);
    xm(j) = x(j);
  }
  return out;
}

Matrix EnergyModel::generators_impl(const Vector&) const {
  return Matrix(dim_, 0);
}

Matrix EnergyModel::symmetry_generators(const Vector& x) const {
  check_dim(x);
  return generators_impl(x);
}

// ---------------------------------------------------------------------------
// Butterfly surface
// ---------------------------------------------------------------------------

namespace {

class ButterflyEnergy final : public EnergyModel {
 public:
  explicit ButterflyEnergy(double c)
      : EnergyModel("butterfly", 2, Symmetry::none, {{"c", c}}), c_(c) {}

 protected:
  double energy_impl(const Vector& p) const override {
    double x = p(0), y = p(1);
    return x * x * x * x - 2 * x * x + y * y * y * y + y * y -
           1.5 * x * x * y * y + x * x * y - c_ * y * y * y;
  }

  Vector gradient_impl(const Vector& p) const override {
    double x = p(0), y = p(1);
    Vector g(2);
    g(0) = 4 * x * x * x - 4 * x - 3 * x * y * y + 2 * x * y;
    g(1) = 4 * y * y * y + 2 * y - 3 * x * x * y + x * x - 3 * c_ * y * y;
    return g;
  }

  bool has_hessian_impl() const override { return true; }

  Matrix hessian_impl(const Vector& p) const override {
    double x = p(0), y = p(1);
    Matrix h(2, 2);
    h(0, 0) = 12 * x * x - 4 - 3 * y * y + 2 * y;
    h(0, 1) = h(1, 0) = -6 * x * y + 2 * x;
    h(1, 1) = 12 * y * y + 2 - 3 * x * x - 6 * c_ * y;
    return h;
  }

 private:
  double c_;
};

// ---------------------------------------------------------------------------
// Morse cluster
// ---------------------------------------------------------------------------

class MorseClusterEnergy final : public EnergyModel {
 public:
  MorseClusterEnergy(int n, double a)
      : EnergyModel("morse", 2 * n, Symmetry::planar_cluster,
                    {{"a", a}, {"n", static_cast<double>(n)}}),
        n_(n), a_(a) {
    if (n < 2) throw InvalidInputError("morse: need at least 2 particles");
    if (a <= 0.0) throw InvalidInputError("morse: rigidity a must be > 0");
  }

 protected:
  double energy_impl(const Vector& x) const override {
    double e = 0.0;
    for (int i = 0; i < n_; ++i)
      for (int j = i + 1; j < n_; ++j) e += pair_v(distance(x, i, j));
    return e;
  }

  Vector gradient_impl(const Vector& x) const override {
    Vector g = Vector::Zero(dim());
    for (int i = 0; i < n_; ++i) {
      for (int j = i + 1; j < n_; ++j) {
        double dx = x(2 * i) - x(2 * j);
        double dy = x(2 * i + 1) - x(2 * j + 1);
        double d = check_distance(std::hypot(dx, dy));
        double w = pair_vp(d) / d;
        g(2 * i) += w * dx;
        g(2 * i + 1) += w * dy;
        g(2 * j) -= w * dx;
        g(2 * j + 1) -= w * dy;
      }
    }
    return g;
  }

  bool has_hessian_impl() const override { return true; }

  Matrix hessian_impl(const Vector& x) const override {
    Matrix h = Matrix::Zero(dim(), dim());
    for (int i = 0; i < n_; ++i) {
      for (int j = i + 1; j < n_; ++j) {
        double dx = x(2 * i) - x(2 * j);
        double dy = x(2 * i + 1) - x(2 * j + 1);
        double d = check_distance(std::hypot(dx, dy));
        double ux = dx / d, uy = dy / d;
        double vp = pair_vp(d), vpp = pair_vpp(d);
        // B = V'' u u^T + (V'/d) (I - u u^T)
        Eigen::Matrix2d uu;
        uu << ux * ux, ux * uy, ux * uy, uy * uy;
        Eigen::Matrix2d b =
            vpp * uu + (vp / d) * (Eigen::Matrix2d::Identity() - uu);
        h.block<2, 2>(2 * i, 2 * i) += b;
        h.block<2, 2>(2 * j, 2 * j) += b;
        h.block<2, 2>(2 * i, 2 * j) -= b;
        h.block<2, 2>(2 * j, 2 * i) -= b;
      }
    }
    return h;
  }

  double extent(const Vector& x) const override {
    check_dim(x);
    double dmax = 0.0;
    for (int i = 0; i < n_; ++i)
      for (int j = i + 1; j < n_; ++j)
        dmax = std::max(dmax, std::hypot(x(2 * i) - x(2 * j),
                                         x(2 * i + 1) - x(2 * j + 1)));
    return dmax;
  }

  Matrix generators_impl(const Vector& x) const override {
    Matrix g = Matrix::Zero(dim(), 3);
    double inv = 1.0 / std::sqrt(static_cast<double>(n_));
    double cx = 0.0, cy = 0.0;
    for (int i = 0; i < n_; ++i) {
      g(2 * i, 0) = inv;
      g(2 * i + 1, 1) = inv;
      cx += x(2 * i);
      cy += x(2 * i + 1);
    }
    cx /= n_;
    cy /= n_;
    for (int i = 0; i < n_; ++i) {
      g(2 * i, 2) = -(x(2 * i + 1) - cy);
      g(2 * i + 1, 2) = x(2 * i) - cx;
    }
    double rn = g.col(2).norm();
    if (rn < 1e-12) return g.leftCols(2);  // all particles coincident
    g.col(2) /= rn;
    return g;
  }

 private:
  double distance(const Vector& x, int i, int j) const {
    return check_distance(std::hypot(x(2 * i) - x(2 * j),
                                     x(2 * i + 1) - x(2 * j + 1)));
  }

  double check_distance(double d) const {
    if (d < 1e-12)
      throw NumericDomainError("morse: coincident particles");
    return d;
  }

  double pair_v(double r) const {
    return std::exp(-2 * a_ * (r - 1)) - 2 * std::exp(-a_ * (r - 1));
  }
  double pair_vp(double r) const {
    return -2 * a_ * std::exp(-2 * a_ * (r - 1)) +
           2 * a_ * std::exp(-a_ * (r - 1));
  }
  double pair_vpp(double r) const {
    return 4 * a_ * a_ * std::exp(-2 * a_ * (r - 1)) -
           2 * a_ * a_ * std::exp(-a_ * (r - 1));
  }

  int n_;
  double a_;
};

// ---------------------------------------------------------------------------
// Quadratic test model
// ---------------------------------------------------------------------------

class QuadraticEnergy final : public EnergyModel {
 public:
  explicit QuadraticEnergy(Vector spectrum)
      : EnergyModel("quadratic", static_cast<int>(spectrum.size()),
                    Symmetry::none, {}),
        spectrum_(std::move(spectrum)) {}

  const Vector* quadratic_spectrum() const override { return &spectrum_; }

 protected:
  double energy_impl(const Vector& x) const override {
    return 0.5 * x.cwiseProduct(x).dot(spectrum_);
  }
  Vector gradient_impl(const Vector& x) const override {
    return spectrum_.cwiseProduct(x);
  }
  bool has_hessian_impl() const override { return true; }
  Matrix hessian_impl(const Vector&) const override {
    return spectrum_.asDiagonal();
  }

 private:
  Vector spectrum_;
};

double parse_double(const std::string& id, const std::string& key,
                    const std::string& value) {
  try {
    std::size_t pos = 0;
    double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw InvalidInputError(id + ": bad value for parameter '" + key +
                            "': " + value);
  }
}

}  // namespace

std::unique_ptr<EnergyModel> make_butterfly(double c) {
  return std::make_unique<ButterflyEnergy>(c);
}

std::unique_ptr<EnergyModel> make_morse_cluster(int n_particles, double a) {
  return std::make_unique<MorseClusterEnergy>(n_particles, a);
}

std::unique_ptr<EnergyModel> make_quadratic(Vector spectrum) {
  if (spectrum.size() == 0)
    throw InvalidInputError("quadratic: spectrum must be nonempty");
  return std::make_unique<QuadraticEnergy>(std::move(spectrum));
}

std::unique_ptr<EnergyModel> make_model(
    const std::string& id, const std::map<std::string, std::string>& params) {
  if (id == "butterfly") {
    double c = 1.0;
    for (const auto& [key, value] : params) {
      if (key == "c") c = parse_double(id, key, value);
      else throw InvalidInputError("butterfly: unknown parameter '" + key + "'");
    }
    return make_butterfly(c);
  }
  if (id == "morse") {
    double a = 6.0;
    int n = 4;
    for (const auto& [key, value] : params) {
      if (key == "a") a = parse_double(id, key, value);
      else if (key == "n") n = static_cast<int>(parse_double(id, key, value));
      else throw InvalidInputError("morse: unknown parameter '" + key + "'");
    }
    return make_morse_cluster(n, a);
  }
  if (id == "quadratic") {
    auto it = params.find("spectrum");
    if (it == params.end())
      throw InvalidInputError("quadratic: missing 'spectrum' parameter");
    for (const auto& [key, value] : params) {
      (void)value;
      if (key != "spectrum")
        throw InvalidInputError("quadratic: unknown parameter '" + key + "'");
    }
    std::vector<double> vals;
    std::stringstream ss(it->second);
    std::string tok;
    while (std::getline(ss, tok, ','))
      vals.push_back(parse_double(id, "spectrum", tok));
    Vector spec(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) spec(i) = vals[i];
    return make_quadratic(std::move(spec));
  }
  throw InvalidInputError("unknown energy model '" + id + "'");
}

FdReport fd_check(const EnergyModel& model, const Vector& x) {
  double h = auto_step(x, 1e-5);
  Vector g = model.gradient(x);
  double gscale = std::max(1.0, g.lpNorm<Eigen::Infinity>());

  FdReport report;
  Vector xp = x, xm = x;
  for (int j = 0; j < model.dim(); ++j) {
    xp(j) += h;
    xm(j) -= h;
    double fd = (model.energy(xp) - model.energy(xm)) / (2.0 * h);
    report.grad_rel_err =
        std::max(report.grad_rel_err, std::abs(g(j) - fd) / gscale);
    xp(j) = x(j);
    xm(j) = x(j);
  }

  Matrix hess = model.dense_hessian(x);
  double hscale = std::max(1.0, hess.cwiseAbs().maxCoeff());
  for (int j = 0; j < model.dim(); ++j) {
    xp(j) += h;
    xm(j) -= h;
    Vector col = (model.gradient(xp) - model.gradient(xm)) / (2.0 * h);
    report.hess_rel_err = std::max(
        report.hess_rel_err,
        (hess.col(j) - col).lpNorm<Eigen::Infinity>() / hscale);
    xp(j) = x(j);
    xm(j) = x(j);
  }
  return report;
}

}  // namespace hisd
