#include "hisd/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <deque>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

namespace hisd {

const StationaryPoint* LandscapeGraph::find(
    const std::string& fingerprint) const {
  for (const auto& v : vertices)
    if (v.fingerprint == fingerprint) return &v;
  return nullptr;
}

namespace {

long long grid(double v, double tol) {
  long long r = std::llround(v / tol);
  return r == 0 ? 0 : r;  // normalize -0
}

double zero_threshold_of(const StationaryPoint& p) {
  double lmax =
      p.eigenvalues.size() > 0 ? p.eigenvalues.cwiseAbs().maxCoeff() : 0.0;
  return 1e-6 * std::max(1.0, lmax);
}

std::vector<int> nonzero_directions(const StationaryPoint& p) {
  double zeta = zero_threshold_of(p);
  std::vector<int> dirs;
  for (int i = 0; i < p.eigenvalues.size(); ++i)
    if (std::abs(p.eigenvalues(i)) > zeta) dirs.push_back(i);
  return dirs;
}

}  // namespace

std::string fingerprint(const EnergyModel& model, const Vector& x,
                        double dedup_tol) {
  if (dedup_tol <= 0.0)
    throw InvalidInputError("fingerprint: dedup_tol must be > 0");
  std::ostringstream os;
  if (model.symmetry() == Symmetry::planar_cluster) {
    const int n = model.dim() / 2;
    std::vector<long long> dists;
    dists.reserve(n * (n - 1) / 2);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        dists.push_back(grid(std::hypot(x(2 * i) - x(2 * j),
                                        x(2 * i + 1) - x(2 * j + 1)),
                             dedup_tol));
    std::sort(dists.begin(), dists.end());
    os << "c:";
    for (std::size_t i = 0; i < dists.size(); ++i) {
      if (i) os << ',';
      os << dists[i];
    }
    os << ";e:" << grid(model.energy(x), dedup_tol);
  } else {
    os << "p:";
    for (int i = 0; i < x.size(); ++i) {
      if (i) os << ',';
      os << grid(x(i), dedup_tol);
    }
  }
  return os.str();
}

Vector perturb(const StationaryPoint& point, int direction_index, int sign,
               double delta) {
  if (sign != 1 && sign != -1)
    throw InvalidInputError("perturb: sign must be +1 or -1");
  std::vector<int> dirs = nonzero_directions(point);
  if (direction_index < 0 ||
      direction_index >= static_cast<int>(dirs.size()))
    throw InvalidInputError("perturb: direction index out of range");
  return point.x +
         sign * delta * point.eigenvectors.col(dirs[direction_index]);
}

namespace {

struct WorkItem {
  std::string fp;
  int target_k = 0;
};

class Builder {
 public:
  Builder(const EnergyModel& model, const LandscapeConfig& config)
      : model_(model), config_(config), saddle_template_(config.saddle) {
    max_index_ = config.max_index >= 0
                     ? config.max_index
                     : model.dim() - model.symmetry_zero_modes();
    if (saddle_template_.spread_radius == 0.0 &&
        model.symmetry() == Symmetry::planar_cluster)
      saddle_template_.spread_radius = 1.5 * model.dim();  // 3 * n_particles
    graph_.seed = config.seed;
  }

  LandscapeGraph run(const Vector& seed_point) {
    if (config_.delta <= 0.0)
      throw InvalidInputError("build_landscape: delta must be > 0");
    if (config_.attempt_cap < 1)
      throw InvalidInputError("build_landscape: attempt_cap must be >= 1");

    Vector x0 = seed_point;
    if (model_.gradient(x0).norm() >= saddle_template_.grad_tol) {
      SaddleConfig descend = saddle_template_;
      descend.k = 0;
      descend.s = -1;
      SearchResult res = run_saddle_search(model_, x0, descend);
      if (!res.point.has_value())
        throw InvalidInputError(
            "build_landscape: seed point does not relax to a stationary "
            "point");
      x0 = res.point->x;
    }
    StationaryPoint seed =
        classify_stationary_point(model_, x0, saddle_template_.zero_threshold);
    register_point(std::move(seed), nullptr, 0);

    if (config_.jobs <= 1) {
      serial_loop();
    } else {
      parallel_loop();
    }
    graph_.attempts = attempts_;
    return std::move(graph_);
  }

 private:
  void serial_loop() {
    while (!queue_.empty() && !truncated()) {
      WorkItem item = queue_.front();
      queue_.pop_front();
      process(item);
    }
  }

  void parallel_loop() {
    std::vector<std::thread> pool;
    active_ = 0;
    for (int i = 0; i < config_.jobs; ++i)
      pool.emplace_back([this] { worker(); });
    for (auto& th : pool) th.join();
  }

  void worker() {
    std::unique_lock<std::mutex> lock(mutex_);
    while (true) {
      cv_.wait(lock, [this] {
        return !queue_.empty() || active_ == 0 || truncated();
      });
      if (queue_.empty() && (active_ == 0 || truncated())) return;
      if (truncated()) return;
      if (queue_.empty()) continue;
      WorkItem item = queue_.front();
      queue_.pop_front();
      ++active_;
      lock.unlock();
      process(item);
      lock.lock();
      --active_;
      cv_.notify_all();
    }
  }

  bool truncated() const { return graph_.truncated; }

  // One (vertex, target index) pair: perturb along each direction and sign,
  // run the search, merge the outcome.
  void process(const WorkItem& item) {
    StationaryPoint from;
    {
      std::lock_guard<std::mutex> lock(data_mutex_);
      const StationaryPoint* p = graph_.find(item.fp);
      if (p == nullptr) return;
      from = *p;
    }
    const int s = from.index < item.target_k ? +1 : -1;
    SaddleConfig cfg = saddle_template_;
    cfg.k = item.target_k;
    cfg.s = s;

    int n_dirs;
    std::vector<int> eigen_dirs;
    if (config_.random_directions) {
      n_dirs = config_.perturb_directions > 0
                   ? config_.perturb_directions
                   : model_.dim() - model_.symmetry_zero_modes();
    } else {
      eigen_dirs = nonzero_directions(from);
      n_dirs = static_cast<int>(eigen_dirs.size());
      if (config_.perturb_directions >= 0)
        n_dirs = std::min(n_dirs, config_.perturb_directions);
    }

    for (int d = 0; d < n_dirs; ++d) {
      for (int sign : {+1, -1}) {
        {
          std::lock_guard<std::mutex> lock(data_mutex_);
          if (attempts_ >= config_.attempt_cap) {
            graph_.truncated = true;
            cv_.notify_all();
            return;
          }
          ++attempts_;
        }
        Vector start;
        if (config_.random_directions) {
          start = from.x + sign * config_.delta *
                               random_direction(item.fp, item.target_k, d);
        } else {
          start = perturb(from, d, sign, config_.delta);
        }
        SearchResult res = run_saddle_search(model_, start, cfg);
        if (!res.point.has_value()) continue;
        if (res.point->zero_count != model_.symmetry_zero_modes())
          continue;  // degenerate or dissociated plateau
        std::lock_guard<std::mutex> lock(data_mutex_);
        register_point(std::move(*res.point), &from.fingerprint, s);
      }
    }
  }

  Vector random_direction(const std::string& fp, int k, int d) {
    std::uint64_t h = config_.seed ^ 0x9e3779b97f4a7c15ULL;
    for (char c : fp) h = (h ^ static_cast<std::uint64_t>(c)) * 0x100000001b3ULL;
    h ^= static_cast<std::uint64_t>(k) << 32;
    h ^= static_cast<std::uint64_t>(d);
    std::mt19937_64 rng(h);
    std::normal_distribution<double> dist;
    Vector v(model_.dim());
    for (int i = 0; i < v.size(); ++i) v(i) = dist(rng);
    return v / v.norm();
  }

  // data_mutex_ must be held (serial mode: single thread, no contention).
  void register_point(StationaryPoint p, const std::string* from_fp, int s) {
    p.fingerprint = fingerprint(model_, p.x, config_.dedup_tol);
    const StationaryPoint* existing = graph_.find(p.fingerprint);
    if (existing == nullptr) {
      enqueue_targets(p);
      graph_.vertices.push_back(std::move(p));
      existing = &graph_.vertices.back();
      cv_.notify_all();
    }
    if (from_fp != nullptr && *from_fp != existing->fingerprint) {
      const StationaryPoint* from = graph_.find(*from_fp);
      bool consistent = from != nullptr &&
                        ((s == +1 && existing->index > from->index) ||
                         (s == -1 && existing->index < from->index));
      if (consistent) {
        LandscapeEdge e{*from_fp, existing->fingerprint, s, existing->index};
        bool dup = false;
        for (const auto& other : graph_.edges)
          if (other.from == e.from && other.to == e.to && other.s == e.s &&
              other.k == e.k) {
            dup = true;
            break;
          }
        if (!dup) graph_.edges.push_back(std::move(e));
      }
    }
  }

  void enqueue_targets(const StationaryPoint& p) {
    std::vector<int> targets;
    if (config_.strategy == IndexStrategy::adjacent_only) {
      if (p.index - 1 >= 0) targets.push_back(p.index - 1);
      if (p.index + 1 <= max_index_) targets.push_back(p.index + 1);
    } else {
      for (int k = 0; k <= max_index_; ++k)
        if (k != p.index) targets.push_back(k);
    }
    std::lock_guard<std::mutex> lock(mutex_);
    for (int k : targets) queue_.push_back({p.fingerprint, k});
  }

  const EnergyModel& model_;
  const LandscapeConfig& config_;
  SaddleConfig saddle_template_;
  int max_index_ = 0;
  LandscapeGraph graph_;
  long attempts_ = 0;
  std::deque<WorkItem> queue_;
  std::mutex mutex_;       // queue + worker coordination
  std::mutex data_mutex_;  // graph + attempts
  std::condition_variable cv_;
  int active_ = 0;
};

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<int> sorted_vertex_order(const LandscapeGraph& graph) {
  std::vector<int> order(graph.vertices.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&graph](int a, int b) {
    const auto& va = graph.vertices[a];
    const auto& vb = graph.vertices[b];
    if (va.index != vb.index) return va.index < vb.index;
    if (va.energy != vb.energy) return va.energy < vb.energy;
    return va.fingerprint < vb.fingerprint;
  });
  return order;
}

}  // namespace

LandscapeGraph build_landscape(const EnergyModel& model,
                               const Vector& seed_point,
                               const LandscapeConfig& config) {
  Builder builder(model, config);
  return builder.run(seed_point);
}

std::string export_graph_json(const LandscapeGraph& graph,
                              const EnergyModel& model) {
  std::vector<int> order = sorted_vertex_order(graph);
  std::map<std::string, std::string> ids;
  for (std::size_t i = 0; i < order.size(); ++i)
    ids[graph.vertices[order[i]].fingerprint] = "s" + std::to_string(i);

  std::ostringstream os;
  os << "{\n";
  os << "  \"model\": {\"name\": \"" << model.name()
     << "\", \"dim\": " << model.dim() << ", \"params\": {";
  bool first = true;
  for (const auto& [key, value] : model.params()) {
    if (!first) os << ", ";
    os << "\"" << key << "\": " << format_double(value);
    first = false;
  }
  if (const Vector* spec = model.quadratic_spectrum()) {
    if (!first) os << ", ";
    os << "\"spectrum\": [";
    for (int i = 0; i < spec->size(); ++i) {
      if (i) os << ", ";
      os << format_double((*spec)(i));
    }
    os << "]";
  }
  os << "}},\n";
  os << "  \"seed\": " << graph.seed << ",\n";
  os << "  \"vertices\": [\n";
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& v = graph.vertices[order[i]];
    os << "    {\"id\": \"s" << i << "\", \"x\": [";
    for (int j = 0; j < v.x.size(); ++j) {
      if (j) os << ", ";
      os << format_double(v.x(j));
    }
    os << "], \"energy\": " << format_double(v.energy)
       << ", \"index\": " << v.index << ", \"zero_count\": " << v.zero_count
       << ", \"eigenvalues\": [";
    for (int j = 0; j < v.eigenvalues.size(); ++j) {
      if (j) os << ", ";
      os << format_double(v.eigenvalues(j));
    }
    os << "]}";
    os << (i + 1 < order.size() ? ",\n" : "\n");
  }
  os << "  ],\n";

  std::vector<LandscapeEdge> edges = graph.edges;
  std::sort(edges.begin(), edges.end(),
            [&ids](const LandscapeEdge& a, const LandscapeEdge& b) {
              if (ids.at(a.from) != ids.at(b.from))
                return ids.at(a.from) < ids.at(b.from);
              if (ids.at(a.to) != ids.at(b.to)) return ids.at(a.to) < ids.at(b.to);
              if (a.s != b.s) return a.s < b.s;
              return a.k < b.k;
            });
  os << "  \"edges\": [\n";
  for (std::size_t i = 0; i < edges.size(); ++i) {
    os << "    {\"from\": \"" << ids.at(edges[i].from) << "\", \"to\": \""
       << ids.at(edges[i].to) << "\", \"s\": " << edges[i].s
       << ", \"k\": " << edges[i].k << "}"
       << (i + 1 < edges.size() ? ",\n" : "\n");
  }
  os << "  ],\n";
  os << "  \"truncated\": " << (graph.truncated ? "true" : "false") << "\n";
  os << "}\n";
  return os.str();
}

std::string export_graph_dot(const LandscapeGraph& graph) {
  std::vector<int> order = sorted_vertex_order(graph);
  std::map<std::string, std::string> ids;
  for (std::size_t i = 0; i < order.size(); ++i)
    ids[graph.vertices[order[i]].fingerprint] = "s" + std::to_string(i);

  std::ostringstream os;
  os << "digraph solution_landscape {\n";
  os << "  rankdir=TB;\n";
  os << "  node [shape=box];\n";

  // one rank level per Morse index, highest at the top
  std::map<int, std::vector<std::string>, std::greater<int>> levels;
  for (std::size_t i = 0; i < order.size(); ++i)
    levels[graph.vertices[order[i]].index].push_back("s" + std::to_string(i));
  for (const auto& [index, names] : levels) {
    os << "  { rank=same;";
    for (const auto& name : names) os << " \"" << name << "\";";
    os << " }  // index " << index << "\n";
  }

  char label[96];
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& v = graph.vertices[order[i]];
    std::snprintf(label, sizeof(label), "idx=%d E=%.6g", v.index, v.energy);
    os << "  \"s" << i << "\" [label=\"" << label << "\"];\n";
  }

  std::vector<LandscapeEdge> edges = graph.edges;
  std::sort(edges.begin(), edges.end(),
            [&ids](const LandscapeEdge& a, const LandscapeEdge& b) {
              if (ids.at(a.from) != ids.at(b.from))
                return ids.at(a.from) < ids.at(b.from);
              return ids.at(a.to) < ids.at(b.to);
            });
  for (const auto& e : edges)
    os << "  \"" << ids.at(e.from) << "\" -> \"" << ids.at(e.to) << "\";\n";
  os << "}\n";
  return os.str();
}

}  // namespace hisd
