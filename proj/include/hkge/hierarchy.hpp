#pragma once

// Per-relation graph diagnostics: Krackhardt hierarchy score and the sampled
// triangle curvature estimate xi.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hkge/data.hpp"
#include "hkge/error.hpp"
#include "hkge/random.hpp"

namespace hkge {

struct RelationGraph {
  std::uint32_t relation = 0;
  std::vector<std::uint32_t> nodes;                             // entity ids, sorted; local index = position
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;   // directed, local indices, deduplicated
  std::vector<std::vector<std::uint32_t>> neighbors;            // undirected view, sorted, no self-loops

  std::size_t num_nodes() const { return nodes.size(); }
  std::size_t num_edges() const { return edges.size(); }
};

/// Builds a graph from directed (source, target) pairs of arbitrary ids.
inline RelationGraph make_graph(std::span<const std::pair<std::uint32_t, std::uint32_t>> directed,
                                std::uint32_t relation = 0) {
  RelationGraph g;
  g.relation = relation;
  for (const auto& [s, t] : directed) {
    g.nodes.push_back(s);
    g.nodes.push_back(t);
  }
  std::sort(g.nodes.begin(), g.nodes.end());
  g.nodes.erase(std::unique(g.nodes.begin(), g.nodes.end()), g.nodes.end());
  auto local = [&](std::uint32_t id) {
    return static_cast<std::uint32_t>(std::lower_bound(g.nodes.begin(), g.nodes.end(), id) - g.nodes.begin());
  };
  g.edges.reserve(directed.size());
  for (const auto& [s, t] : directed) g.edges.emplace_back(local(s), local(t));
  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
  g.neighbors.assign(g.nodes.size(), {});
  for (const auto& [s, t] : g.edges) {
    if (s == t) continue;
    g.neighbors[s].push_back(t);
    g.neighbors[t].push_back(s);
  }
  for (auto& n : g.neighbors) {
    std::sort(n.begin(), n.end());
    n.erase(std::unique(n.begin(), n.end()), n.end());
  }
  return g;
}

/// Subgraph of one base relation over the training split.
inline RelationGraph relation_subgraph(const TripleStore& store, std::uint32_t relation) {
  if (relation >= store.num_base_relations()) {
    throw DomainError("relation id " + std::to_string(relation) + " is not a base relation");
  }
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  for (const auto& t : store.train) {
    if (t.relation == relation) edges.emplace_back(t.head, t.tail);
  }
  return make_graph(edges, relation);
}

inline RelationGraph relation_subgraph(const TripleStore& store, const std::string& name) {
  auto r = find_relation(store.relations, name);
  if (!r) throw DomainError("unknown relation '" + name + "'");
  return relation_subgraph(store, *r);
}

/// Fraction of directed edges i->j whose reverse j->i is absent.
inline double khs(const RelationGraph& g) {
  if (g.edges.empty()) throw DomainError("khs: graph has no edges");
  std::size_t asymmetric = 0;
  for (const auto& [s, t] : g.edges) {
    asymmetric += !std::binary_search(g.edges.begin(), g.edges.end(), std::make_pair(t, s));
  }
  return static_cast<double>(asymmetric) / static_cast<double>(g.edges.size());
}

/// Breadth-first search over the undirected view. Neighbors are visited in ascending order, so each
/// node's parent is its smallest-index predecessor on the previous level.
class Bfs {
 public:
  static constexpr int kUnreached = -1;

  explicit Bfs(const RelationGraph& g) : g_(&g), dist_(g.num_nodes(), kUnreached), parent_(g.num_nodes()) {}

  /// Runs from `src`; stops early once every node in `targets` has been reached.
  void run(std::uint32_t src, std::span<const std::uint32_t> targets = {}) {
    for (auto v : visited_) dist_[v] = kUnreached;
    visited_.clear();
    queue_.clear();
    dist_[src] = 0;
    parent_[src] = src;
    visited_.push_back(src);
    queue_.push_back(src);
    std::size_t remaining = 0;
    for (auto t : targets) remaining += t != src;
    for (std::size_t head = 0; head < queue_.size(); ++head) {
      const auto u = queue_[head];
      if (!targets.empty() && remaining == 0) break;
      for (auto v : g_->neighbors[u]) {
        if (dist_[v] != kUnreached) continue;
        dist_[v] = dist_[u] + 1;
        parent_[v] = u;
        visited_.push_back(v);
        queue_.push_back(v);
        for (auto t : targets) remaining -= (t == v);
      }
    }
  }

  int distance(std::uint32_t v) const { return dist_[v]; }
  std::uint32_t parent(std::uint32_t v) const { return parent_[v]; }

  /// Full distance vector (kUnreached for other components); runs to completion.
  std::vector<int> all_distances(std::uint32_t src) {
    run(src);
    return dist_;
  }

 private:
  const RelationGraph* g_;
  std::vector<int> dist_;
  std::vector<std::uint32_t> parent_;
  std::vector<std::uint32_t> visited_;
  std::vector<std::uint32_t> queue_;
};

/// xi(a,b,c) = (d(a,m)^2 + d(b,c)^2/4 - (d(a,b)^2 + d(a,c)^2)/2) / (2 d(a,m)), m the midpoint of b-c.
inline double xi_triangle(double d_am, double d_bc, double d_ab, double d_ac) {
  return (d_am * d_am + d_bc * d_bc / 4.0 - (d_ab * d_ab + d_ac * d_ac) / 2.0) / (2.0 * d_am);
}

enum class TriangleOutcome { accepted, odd_base, degenerate, disconnected };

struct TriangleSample {
  TriangleOutcome outcome = TriangleOutcome::accepted;
  double xi = 0;
  std::uint32_t midpoint = 0;
};

/// Evaluates one triangle with local node indices. Rejects odd d(b,c), a == midpoint and
/// disconnected pairs.
inline TriangleSample xi_for_triangle(Bfs& bfs, std::uint32_t a, std::uint32_t b, std::uint32_t c) {
  TriangleSample out;
  const std::uint32_t bc_target[1] = {c};
  bfs.run(b, bc_target);
  const int d_bc = bfs.distance(c);
  if (d_bc == Bfs::kUnreached) {
    out.outcome = TriangleOutcome::disconnected;
    return out;
  }
  if (d_bc % 2 != 0) {
    out.outcome = TriangleOutcome::odd_base;
    return out;
  }
  std::uint32_t m = c;
  for (int step = 0; step < d_bc / 2; ++step) m = bfs.parent(m);
  out.midpoint = m;
  if (m == a) {
    out.outcome = TriangleOutcome::degenerate;
    return out;
  }
  const std::uint32_t a_targets[3] = {b, c, m};
  bfs.run(a, a_targets);
  const int d_ab = bfs.distance(b);
  const int d_ac = bfs.distance(c);
  const int d_am = bfs.distance(m);
  if (d_ab == Bfs::kUnreached || d_ac == Bfs::kUnreached || d_am == Bfs::kUnreached) {
    out.outcome = TriangleOutcome::disconnected;
    return out;
  }
  out.xi = xi_triangle(d_am, d_bc, d_ab, d_ac);
  return out;
}

struct XiEstimate {
  double mean = 0;
  double std_error = 0;
  std::size_t accepted = 0;
  std::size_t rejected_odd = 0;
  std::size_t rejected_degenerate = 0;
  std::size_t rejected_disconnected = 0;

  std::size_t rejected() const { return rejected_odd + rejected_degenerate + rejected_disconnected; }
};

/// Connected components of the undirected view (local indices).
inline std::vector<std::vector<std::uint32_t>> connected_components(const RelationGraph& g) {
  std::vector<std::vector<std::uint32_t>> comps;
  std::vector<char> seen(g.num_nodes(), 0);
  for (std::uint32_t s = 0; s < g.num_nodes(); ++s) {
    if (seen[s]) continue;
    comps.emplace_back();
    auto& comp = comps.back();
    comp.push_back(s);
    seen[s] = 1;
    for (std::size_t i = 0; i < comp.size(); ++i) {
      for (auto v : g.neighbors[comp[i]]) {
        if (!seen[v]) {
          seen[v] = 1;
          comp.push_back(v);
        }
      }
    }
  }
  return comps;
}

/// Mean and standard error of xi over triangles drawn uniformly from ordered triples of distinct
/// nodes lying in one connected component (triples spanning components have infinite distances
/// and are never drawn). Rejected triangles are redrawn up to max_attempts total draws.
inline XiEstimate xi_estimate(const RelationGraph& g, std::size_t n_samples, Rng& rng,
                              std::size_t max_attempts = 0) {
  if (n_samples == 0) throw DomainError("xi_estimate: n_samples must be > 0");
  if (max_attempts == 0) max_attempts = 100 * n_samples;
  auto comps = connected_components(g);
  std::vector<const std::vector<std::uint32_t>*> eligible;
  std::vector<double> cumulative;
  double total = 0;
  for (const auto& c : comps) {
    if (c.size() < 3) continue;
    const double n = static_cast<double>(c.size());
    total += n * (n - 1) * (n - 2);
    eligible.push_back(&c);
    cumulative.push_back(total);
  }
  if (eligible.empty()) throw DomainError("xi_estimate: no connected component with at least 3 nodes");

  Bfs bfs(g);
  XiEstimate est;
  double sum = 0;
  double sum_sq = 0;
  for (std::size_t attempt = 0; attempt < max_attempts && est.accepted < n_samples; ++attempt) {
    const double pick = uniform_unit(rng) * total;
    const auto ci = std::min<std::size_t>(
        static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), pick) - cumulative.begin()),
        eligible.size() - 1);
    const auto& comp = *eligible[ci];
    const auto ia = static_cast<std::size_t>(uniform_index(rng, comp.size()));
    auto ib = static_cast<std::size_t>(uniform_index(rng, comp.size() - 1));
    if (ib >= ia) ++ib;
    auto ic = static_cast<std::size_t>(uniform_index(rng, comp.size() - 2));
    for (auto taken : {std::min(ia, ib), std::max(ia, ib)}) {
      if (ic >= taken) ++ic;
    }
    const auto sample = xi_for_triangle(bfs, comp[ia], comp[ib], comp[ic]);
    switch (sample.outcome) {
      case TriangleOutcome::accepted:
        ++est.accepted;
        sum += sample.xi;
        sum_sq += sample.xi * sample.xi;
        break;
      case TriangleOutcome::odd_base: ++est.rejected_odd; break;
      case TriangleOutcome::degenerate: ++est.rejected_degenerate; break;
      case TriangleOutcome::disconnected: ++est.rejected_disconnected; break;
    }
  }
  if (est.accepted == 0) throw DomainError("xi_estimate: no valid triangle after " + std::to_string(max_attempts) +
                                           " attempts");
  const double n = static_cast<double>(est.accepted);
  est.mean = sum / n;
  if (est.accepted > 1) {
    const double var = std::max(0.0, (sum_sq - n * est.mean * est.mean) / (n - 1));
    est.std_error = std::sqrt(var / n);
  }
  return est;
}

/// One line of hierarchy.csv. `error` is set for unknown relations and empty subgraphs; `xi` is
/// empty when no triangle could be sampled.
struct HierarchyRow {
  std::string relation;
  std::size_t nodes = 0;
  std::size_t edges = 0;
  std::optional<double> khs;
  std::optional<XiEstimate> xi;
  std::string error;
};

inline HierarchyRow analyze_relation(const TripleStore& store, const std::string& name, std::size_t n_samples,
                                     std::uint64_t seed) {
  HierarchyRow row;
  row.relation = name;
  const auto id = find_relation(store.relations, name);
  if (!id || *id >= store.num_base_relations()) {
    row.error = "unknown relation";
    return row;
  }
  row.relation = store.relations.name(*id);
  const auto g = relation_subgraph(store, *id);
  row.nodes = g.num_nodes();
  row.edges = g.num_edges();
  if (g.edges.empty()) {
    row.error = "no training edges";
    return row;
  }
  row.khs = khs(g);
  Rng rng(seed);
  try {
    row.xi = xi_estimate(g, n_samples, rng);
  } catch (const DomainError&) {
  }
  return row;
}

inline void write_hierarchy_csv(const std::filesystem::path& path, std::span<const HierarchyRow> rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out.precision(10);
  out << "relation,nodes,edges,khs,xi_mean,xi_stderr,samples_accepted,samples_rejected\n";
  for (const auto& r : rows) {
    out << r.relation << ',' << r.nodes << ',' << r.edges << ',';
    if (!r.error.empty()) {
      out << "ERROR: " << r.error << ",,,,\n";
      continue;
    }
    out << *r.khs << ',';
    if (r.xi) {
      out << r.xi->mean << ',' << r.xi->std_error << ',' << r.xi->accepted << ',' << r.xi->rejected() << '\n';
    } else {
      out << ",,0,\n";
    }
  }
}

}  // namespace hkge
