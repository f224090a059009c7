// saddlescape: saddle-point search and solution-landscape construction
// via gradient flow, GAD/HiSD, and the gradient-flow-to-HiSD crossover.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hisd/dynamics.hpp"
#include "hisd/landscape.hpp"
#include "hisd/saddle.hpp"
#include "hisd/verify.hpp"

namespace {

using hisd::Vector;

std::map<std::string, std::string> parse_params(
    const std::vector<std::string>& kvs) {
  std::map<std::string, std::string> out;
  for (const auto& kv : kvs) {
    auto pos = kv.find('=');
    if (pos == std::string::npos || pos == 0)
      throw hisd::InvalidInputError("--param expects key=value, got '" + kv +
                                    "'");
    out[kv.substr(0, pos)] = kv.substr(pos + 1);
  }
  return out;
}

Vector parse_vector(const std::string& csv) {
  std::vector<double> vals;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t pos = 0;
      vals.push_back(std::stod(tok, &pos));
      if (pos != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw hisd::InvalidInputError("bad number in vector: '" + tok + "'");
    }
  }
  if (vals.empty()) throw hisd::InvalidInputError("empty vector argument");
  Vector x(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) x(i) = vals[i];
  return x;
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

const char* status_name(hisd::SearchStatus s) {
  switch (s) {
    case hisd::SearchStatus::converged: return "converged";
    case hisd::SearchStatus::wrong_index: return "wrong_index";
    case hisd::SearchStatus::max_iter_reached: return "max_iter";
    case hisd::SearchStatus::diverged: return "diverged";
  }
  return "unknown";
}

std::string search_result_json(const hisd::SearchResult& res) {
  std::ostringstream os;
  os << "{\n";
  if (res.point.has_value()) {
    const auto& p = *res.point;
    os << "  \"x\": [";
    for (int i = 0; i < p.x.size(); ++i)
      os << (i ? ", " : "") << fmt17(p.x(i));
    os << "],\n";
    os << "  \"energy\": " << fmt17(p.energy) << ",\n";
    os << "  \"grad_norm\": " << fmt17(p.grad_norm) << ",\n";
    os << "  \"index\": " << p.index << ",\n";
    os << "  \"zero_count\": " << p.zero_count << ",\n";
    os << "  \"eigenvalues\": [";
    for (int i = 0; i < p.eigenvalues.size(); ++i)
      os << (i ? ", " : "") << fmt17(p.eigenvalues(i));
    os << "],\n";
  }
  os << "  \"status\": \"" << status_name(res.status) << "\",\n";
  os << "  \"iterations\": " << res.iterations << "\n";
  os << "}\n";
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw hisd::InvalidInputError("cannot open output file " + path);
  out << content;
}

void write_trajectory(const std::string& path, const hisd::Trajectory& traj) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw hisd::InvalidInputError("cannot open output file " + path);
  hisd::write_trajectory_csv(traj, out);
}

Vector random_min_start(const hisd::EnergyModel& model, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  if (model.symmetry() == hisd::Symmetry::planar_cluster) {
    // jittered near-unit grid keeps the descent away from blowups and
    // dissociation plateaus
    int n = model.dim() / 2;
    int side = 1;
    while (side * side < n) ++side;
    std::normal_distribution<double> jitter(0.0, 0.05);
    Vector x(model.dim());
    for (int i = 0; i < n; ++i) {
      x(2 * i) = 1.1 * (i % side) + jitter(rng);
      x(2 * i + 1) = 1.1 * (i / side) + jitter(rng);
    }
    return x;
  }
  std::uniform_real_distribution<double> box(-2.0, 2.0);
  Vector x(model.dim());
  for (int i = 0; i < x.size(); ++i) x(i) = box(rng);
  return x;
}

struct CommonModelOpts {
  std::string energy;
  std::vector<std::string> params;

  void attach(CLI::App* cmd) {
    cmd->add_option("--energy", energy, "energy model id")->required();
    cmd->add_option("--param", params, "model parameter key=value");
  }
  std::unique_ptr<hisd::EnergyModel> make() const {
    return hisd::make_model(energy, parse_params(params));
  }
};

int cmd_search(const CommonModelOpts& modelopts, const std::string& x0_csv,
               int index, const std::string& dir, double alpha0, double rate_c,
               double eta, double eta_alpha, double grad_tol, long max_iter,
               double spread_radius, const std::string& out_path,
               const std::string& traj_path) {
  auto model = modelopts.make();
  Vector x0 = parse_vector(x0_csv);

  hisd::SaddleConfig config;
  config.k = index;
  config.s = dir == "down" ? -1 : +1;
  config.alpha = {alpha0, rate_c, eta_alpha};
  config.step = hisd::StepPolicy::fixed_step(eta);
  config.grad_tol = grad_tol;
  config.max_iter = max_iter;
  config.spread_radius = spread_radius;
  config.traj_stride = traj_path.empty() ? 0 : 1;

  hisd::SearchResult res = hisd::run_saddle_search(*model, x0, config);
  if (!out_path.empty()) write_file(out_path, search_result_json(res));
  if (!traj_path.empty()) write_trajectory(traj_path, res.trajectory);

  std::cout << "status: " << status_name(res.status)
            << "  iterations: " << res.iterations;
  if (res.point.has_value()) {
    std::cout << "  index: " << res.point->index
              << "  energy: " << res.point->energy
              << "  grad_norm: " << res.point->grad_norm;
  }
  std::cout << "\n";

  switch (res.status) {
    case hisd::SearchStatus::converged: return 0;
    case hisd::SearchStatus::wrong_index: return 2;
    default: return 3;
  }
}

int cmd_landscape(const CommonModelOpts& modelopts,
                  const std::string& seed_point_csv, bool from_random_min,
                  const std::string& strategy, double delta, double alpha0,
                  double rate_c, double eta, long cap, std::uint64_t seed,
                  double grad_tol, long max_iter, double dedup_tol, int jobs,
                  double spread_radius, const std::string& out_path,
                  const std::string& dot_path) {
  auto model = modelopts.make();
  if (seed_point_csv.empty() && !from_random_min)
    throw hisd::InvalidInputError(
        "landscape: need --seed-point or --from-random-min");

  Vector seed_point = seed_point_csv.empty()
                          ? random_min_start(*model, seed)
                          : parse_vector(seed_point_csv);

  hisd::LandscapeConfig config;
  config.strategy = strategy == "all" ? hisd::IndexStrategy::all_pairs
                                      : hisd::IndexStrategy::adjacent_only;
  config.delta = delta;
  config.attempt_cap = cap;
  config.dedup_tol = dedup_tol;
  config.seed = seed;
  config.jobs = jobs;
  config.saddle.alpha = {alpha0, rate_c, 1.0};
  config.saddle.step = hisd::StepPolicy::fixed_step(eta);
  config.saddle.grad_tol = grad_tol;
  config.saddle.max_iter = max_iter;
  config.saddle.spread_radius = spread_radius;

  hisd::LandscapeGraph graph =
      hisd::build_landscape(*model, seed_point, config);
  if (!out_path.empty())
    write_file(out_path, hisd::export_graph_json(graph, *model));
  if (!dot_path.empty()) write_file(dot_path, hisd::export_graph_dot(graph));

  std::map<int, int> by_index;
  for (const auto& v : graph.vertices) by_index[v.index]++;
  std::cout << "vertices: " << graph.vertices.size()
            << "  edges: " << graph.edges.size()
            << "  attempts: " << graph.attempts << "  indices:";
  for (const auto& [k, count] : by_index)
    std::cout << " " << k << "x" << count;
  if (graph.truncated) std::cout << "  (truncated)";
  std::cout << "\n";
  return graph.truncated ? 4 : 0;
}

int cmd_flow(const CommonModelOpts& modelopts, const std::string& x0_csv,
             const std::string& mode, int index, double alpha0, double rate_c,
             double beta, double gamma, double t_max, double h,
             double grad_tol, const std::string& traj_path) {
  auto model = modelopts.make();
  Vector x0 = parse_vector(x0_csv);

  hisd::FlowConfig config;
  config.beta = beta;
  config.gamma = gamma;
  config.rate_c = rate_c;
  config.h = h;
  config.t_max = t_max;
  config.grad_tol = grad_tol;

  hisd::Trajectory traj;
  if (mode == "descent" || mode == "ascent") {
    traj = hisd::gradient_flow(*model, x0, config,
                               mode == "ascent"
                                   ? hisd::FlowDirection::ascent
                                   : hisd::FlowDirection::descent);
  } else if (mode == "gad" || mode == "ihisd") {
    hisd::SearchState state;
    state.x = x0;
    hisd::SymmetricOperator op =
        hisd::SymmetricOperator::from_matrix(model->dense_hessian(x0));
    hisd::Matrix deflate = model->symmetry_generators(x0);
    state.basis = hisd::eigensolve_k(op, index, {}, nullptr,
                                     deflate.cols() > 0 ? &deflate : nullptr);
    if (mode == "gad") {
      state.alpha = 1.0;
      config.rate_c = 0.0;
    } else {
      state.alpha = alpha0;
    }
    traj = hisd::integrate_ihisd(*model, state, config);
  } else {
    throw hisd::InvalidInputError("flow: unknown mode '" + mode + "'");
  }

  if (!traj_path.empty()) write_trajectory(traj_path, traj);
  const auto& last = traj.samples.back();
  const char* status = traj.status == hisd::FlowStatus::converged
                           ? "converged"
                           : traj.status == hisd::FlowStatus::diverged
                                 ? "diverged"
                                 : "t_max";
  std::cout << "status: " << status << "  t: " << last.t
            << "  grad_norm: " << last.grad_norm << "\n";
  switch (traj.status) {
    case hisd::FlowStatus::converged: return 0;
    case hisd::FlowStatus::t_max_reached: return 3;
    case hisd::FlowStatus::diverged: return 5;
  }
  return 3;
}

int cmd_verify(const std::string& suite, int trials, std::uint64_t seed) {
  std::vector<hisd::CheckResult> results =
      hisd::run_verify_suite(suite, trials, seed);
  std::size_t width = 0;
  for (const auto& r : results)
    width = std::max(width, r.suite.size() + r.name.size() + 2);
  int failures = 0;
  for (const auto& r : results) {
    std::string label = r.suite + ": " + r.name;
    std::cout << (r.passed ? "[pass] " : "[FAIL] ") << label
              << std::string(width - label.size() + 2, ' ') << r.detail
              << "\n";
    if (!r.passed) ++failures;
  }
  std::cout << results.size() - failures << "/" << results.size()
            << " checks passed\n";
  return failures == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"saddle-point search and solution-landscape toolkit"};
  app.require_subcommand(1);

  // search
  auto* search = app.add_subcommand("search", "run a single k-saddle search");
  CommonModelOpts search_model;
  search_model.attach(search);
  std::string x0_csv, dir = "up", out_path, traj_path;
  int index = 0;
  double alpha0 = 1e-9, rate_c = 2.0, eta = 0.036, eta_alpha = 1.0;
  double grad_tol = 1e-6, spread_radius = 0.0;
  long max_iter = 100000;
  search->add_option("--x0", x0_csv, "initial point, comma separated")
      ->required();
  search->add_option("--index", index, "target Morse index k")->required();
  search->add_option("--dir", dir, "up or down")
      ->check(CLI::IsMember({"up", "down"}));
  search->add_option("--alpha0", alpha0, "initial mixing ratio");
  search->add_option("--rate-c", rate_c, "alpha rate constant");
  search->add_option("--eta", eta, "fixed step size");
  search->add_option("--eta-alpha", eta_alpha, "alpha schedule step");
  search->add_option("--grad-tol", grad_tol, "gradient tolerance");
  search->add_option("--max-iter", max_iter, "iteration cap");
  search->add_option("--spread-radius", spread_radius,
                     "cluster dissociation guard (0 = off)");
  search->add_option("--out", out_path, "result JSON path");
  search->add_option("--traj", traj_path, "trajectory CSV path");

  // landscape
  auto* landscape =
      app.add_subcommand("landscape", "construct the solution landscape");
  CommonModelOpts landscape_model;
  landscape_model.attach(landscape);
  std::string seed_point_csv, strategy = "adjacent", ls_out, ls_dot;
  bool from_random_min = false;
  double ls_delta = 1e-2, ls_alpha0 = 1e-9, ls_rate_c = 2.0, ls_eta = 0.036;
  double ls_grad_tol = 1e-6, ls_dedup = 1e-4, ls_spread = 0.0;
  long ls_cap = 1000, ls_max_iter = 50000;
  std::uint64_t ls_seed = 0;
  int ls_jobs = 1;
  landscape->add_option("--seed-point", seed_point_csv,
                        "starting point, comma separated");
  landscape->add_flag("--from-random-min", from_random_min,
                      "seed from a random descent minimum");
  landscape->add_option("--strategy", strategy, "adjacent or all")
      ->check(CLI::IsMember({"adjacent", "all"}));
  landscape->add_option("--delta", ls_delta, "perturbation size");
  landscape->add_option("--alpha0", ls_alpha0, "initial mixing ratio");
  landscape->add_option("--rate-c", ls_rate_c, "alpha rate constant");
  landscape->add_option("--eta", ls_eta, "fixed step size");
  landscape->add_option("--cap", ls_cap, "total search attempt cap");
  landscape->add_option("--seed", ls_seed, "RNG seed");
  landscape->add_option("--grad-tol", ls_grad_tol, "gradient tolerance");
  landscape->add_option("--max-iter", ls_max_iter, "per-search iteration cap");
  landscape->add_option("--dedup-tol", ls_dedup, "fingerprint grid");
  landscape->add_option("--jobs", ls_jobs, "parallel searches");
  landscape->add_option("--spread-radius", ls_spread,
                        "cluster dissociation guard (0 = auto)");
  landscape->add_option("--out", ls_out, "graph JSON path");
  landscape->add_option("--dot", ls_dot, "graph DOT path");

  // flow
  auto* flow = app.add_subcommand("flow", "integrate continuous dynamics");
  CommonModelOpts flow_model;
  flow_model.attach(flow);
  std::string fl_x0, fl_mode = "descent", fl_traj;
  int fl_index = 1;
  double fl_alpha0 = 1e-9, fl_rate_c = 2.0, fl_beta = 1.0, fl_gamma = 1.0;
  double fl_tmax = 50.0, fl_h = 1e-3, fl_grad_tol = 1e-6;
  flow->add_option("--x0", fl_x0, "initial point")->required();
  flow->add_option("--mode", fl_mode, "descent, ascent, gad, or ihisd")
      ->check(CLI::IsMember({"descent", "ascent", "gad", "ihisd"}));
  flow->add_option("--index", fl_index, "target index for gad/ihisd");
  flow->add_option("--alpha0", fl_alpha0, "initial mixing ratio (ihisd)");
  flow->add_option("--rate-c", fl_rate_c, "alpha rate constant");
  flow->add_option("--beta", fl_beta, "x time scale");
  flow->add_option("--gamma", fl_gamma, "basis time scale");
  flow->add_option("--t-max", fl_tmax, "integration horizon");
  flow->add_option("--h", fl_h, "Euler step");
  flow->add_option("--grad-tol", fl_grad_tol, "gradient tolerance");
  flow->add_option("--traj", fl_traj, "trajectory CSV path");

  // verify
  auto* verify = app.add_subcommand("verify", "run the verification suites");
  std::string vf_suite = "all";
  int vf_trials = 100;
  std::uint64_t vf_seed = 12345;
  verify->add_option("--suite", vf_suite, "suite name (default all)");
  verify->add_option("--trials", vf_trials, "random trials per check");
  verify->add_option("--seed", vf_seed, "RNG seed");

  try {
    app.parse(argc, argv);
    if (search->parsed())
      return cmd_search(search_model, x0_csv, index, dir, alpha0, rate_c, eta,
                        eta_alpha, grad_tol, max_iter, spread_radius, out_path,
                        traj_path);
    if (landscape->parsed())
      return cmd_landscape(landscape_model, seed_point_csv, from_random_min,
                           strategy, ls_delta, ls_alpha0, ls_rate_c, ls_eta,
                           ls_cap, ls_seed, ls_grad_tol, ls_max_iter, ls_dedup,
                           ls_jobs, ls_spread, ls_out, ls_dot);
    if (flow->parsed())
      return cmd_flow(flow_model, fl_x0, fl_mode, fl_index, fl_alpha0,
                      fl_rate_c, fl_beta, fl_gamma, fl_tmax, fl_h, fl_grad_tol,
                      fl_traj);
    if (verify->parsed()) return cmd_verify(vf_suite, vf_trials, vf_seed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const hisd::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
