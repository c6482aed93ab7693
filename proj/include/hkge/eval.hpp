#pragma once

// Filtered link-prediction ranking and MRR / Hits@K aggregation.

#include <algorithm>
#include <array>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "hkge/data.hpp"
#include "hkge/error.hpp"
#include "hkge/model.hpp"

namespace hkge {

enum class TieBreak : std::uint8_t { random, pessimistic, optimistic };

inline TieBreak parse_tie_break(std::string_view s) {
  if (s == "random") return TieBreak::random;
  if (s == "pessimistic") return TieBreak::pessimistic;
  if (s == "optimistic") return TieBreak::optimistic;
  throw DomainError("unknown tie-break mode '" + std::string(s) + "'");
}

inline std::string_view to_string(TieBreak t) {
  switch (t) {
    case TieBreak::random: return "random";
    case TieBreak::pessimistic: return "pessimistic";
    case TieBreak::optimistic: return "optimistic";
  }
  return "?";
}

inline constexpr std::array<std::size_t, 3> kHitsAt = {1, 3, 10};

struct MetricReport {
  double mrr = 0;
  std::array<double, 3> hits{};  // at kHitsAt
  std::size_t n_queries = 0;

  double hits_at(std::size_t k) const {
    for (std::size_t i = 0; i < kHitsAt.size(); ++i) {
      if (kHitsAt[i] == k) return hits[i];
    }
    throw DomainError("hits@" + std::to_string(k) + " is not tracked");
  }
};

struct EvalOptions {
  TieBreak tie_break = TieBreak::random;
  std::uint64_t seed = 42;
  int threads = 1;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Per-query stream: depends only on the seed and the query, so results do not
// depend on query order or thread count.
inline std::uint64_t query_seed(std::uint64_t seed, const Triple& q) {
  std::uint64_t s = splitmix64(seed);
  s = splitmix64(s ^ q.head);
  s = splitmix64(s ^ (static_cast<std::uint64_t>(q.relation) << 32));
  return splitmix64(s ^ (static_cast<std::uint64_t>(q.tail) << 16));
}

}  // namespace detail

/// 1 + #{competitors scoring above the true tail} + tie adjustment, where competitors are all
/// entities except the true tail and the known-true tails in `filtered` (sorted).
template <std::floating_point T>
std::size_t rank_filtered(std::uint32_t true_tail, std::span<const T> scores, std::span<const std::uint32_t> filtered,
                          TieBreak tie_break = TieBreak::random, std::uint64_t tie_seed = 0) {
  if (true_tail >= scores.size()) {
    throw InternalError("true tail " + std::to_string(true_tail) + " is outside the candidate pool");
  }
  const T target = scores[true_tail];
  std::size_t greater = 0;
  std::size_t ties = 0;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (j == true_tail) continue;
    greater += scores[j] > target;
    ties += scores[j] == target;
  }
  for (auto j : filtered) {
    if (j == true_tail) continue;
    if (j >= scores.size()) throw InternalError("filter index references an unknown entity");
    greater -= scores[j] > target;
    ties -= scores[j] == target;
  }
  std::size_t tie_offset = 0;
  switch (tie_break) {
    case TieBreak::optimistic: break;
    case TieBreak::pessimistic: tie_offset = ties; break;
    case TieBreak::random:
      // one uniform draw per query scaled by the tie count, so removing tied competitors
      // can only lower the offset
      if (ties > 0) {
        const double u = static_cast<double>(detail::splitmix64(tie_seed) >> 11) * 0x1.0p-53;
        tie_offset = std::min(ties, static_cast<std::size_t>(u * static_cast<double>(ties + 1)));
      }
      break;
  }
  return 1 + greater + tie_offset;
}

inline MetricReport report_from_ranks(std::span<const std::size_t> ranks) {
  if (ranks.empty()) throw DomainError("cannot aggregate an empty set of ranks");
  MetricReport r;
  r.n_queries = ranks.size();
  double rr = 0;
  std::array<std::size_t, 3> hit_counts{};
  for (auto rank : ranks) {
    rr += 1.0 / static_cast<double>(rank);
    for (std::size_t k = 0; k < kHitsAt.size(); ++k) hit_counts[k] += rank <= kHitsAt[k];
  }
  r.mrr = rr / static_cast<double>(ranks.size());
  for (std::size_t k = 0; k < kHitsAt.size(); ++k) {
    r.hits[k] = static_cast<double>(hit_counts[k]) / static_cast<double>(ranks.size());
  }
  return r;
}

/// Filtered rank of every query (h, r, t): t is ranked against all entities for (h, r, ?).
template <std::floating_point T>
std::vector<std::size_t> rank_queries(const Model<T>& model, std::span<const Triple> queries,
                                      const FilterIndex& index, const EvalOptions& opts = {}) {
  std::vector<std::size_t> ranks(queries.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    std::vector<T> scores(model.num_entities());
    for (std::size_t i = begin; i < end; ++i) {
      const auto& q = queries[i];
      model.score_against_all(q.head, q.relation, std::span<T>(scores));
      ranks[i] = rank_filtered(q.tail, std::span<const T>(scores), index.tails(q.head, q.relation), opts.tie_break,
                               detail::query_seed(opts.seed, q));
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min<std::size_t>(opts.threads, queries.size()));
  if (n_threads == 1) {
    work(0, queries.size());
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (queries.size() + n_threads - 1) / n_threads;
    for (std::size_t t = 0; t < n_threads; ++t) {
      const std::size_t b = t * chunk;
      const std::size_t e = std::min(queries.size(), b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
  }
  return ranks;
}

/// MRR and Hits@{1,3,10} pooled over all queries of a (reciprocal-augmented) split.
template <std::floating_point T>
MetricReport evaluate_split(const Model<T>& model, std::span<const Triple> queries, const FilterIndex& index,
                            const EvalOptions& opts = {}) {
  if (queries.empty()) throw DomainError("cannot evaluate an empty split");
  const auto ranks = rank_queries(model, queries, index, opts);
  return report_from_ranks(ranks);
}

/// Groups ranks by base relation name; reciprocal queries count toward their base relation.
inline std::map<std::string, MetricReport> per_relation_report(const TripleStore& store,
                                                               std::span<const Triple> queries,
                                                               std::span<const std::size_t> ranks) {
  if (queries.size() != ranks.size()) throw DomainError("per_relation_report: queries and ranks differ in length");
  std::map<std::string, std::vector<std::size_t>> grouped;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    grouped[store.relations.name(store.base_relation(queries[i].relation))].push_back(ranks[i]);
  }
  std::map<std::string, MetricReport> out;
  for (const auto& [name, rs] : grouped) out.emplace(name, report_from_ranks(rs));
  return out;
}

template <std::floating_point T>
std::map<std::string, MetricReport> per_relation_report(const TripleStore& store, const Model<T>& model,
                                                        std::span<const Triple> queries, const FilterIndex& index,
                                                        const EvalOptions& opts = {}) {
  const auto ranks = rank_queries(model, queries, index, opts);
  return per_relation_report(store, queries, ranks);
}

inline void write_metrics_csv(const std::filesystem::path& path, std::string_view split, const MetricReport& r) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out.precision(10);
  out << "split,n,mrr,h1,h3,h10\n";
  out << split << ',' << r.n_queries << ',' << r.mrr << ',' << r.hits[0] << ',' << r.hits[1] << ',' << r.hits[2]
      << '\n';
}

inline void write_per_relation_csv(const std::filesystem::path& path,
                                   const std::map<std::string, MetricReport>& reports) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out.precision(10);
  out << "relation,n,mrr,h1,h3,h10\n";
  for (const auto& [name, r] : reports) {
    out << name << ',' << r.n_queries << ',' << r.mrr << ',' << r.hits[0] << ',' << r.hits[1] << ',' << r.hits[2]
        << '\n';
  }
}

}  // namespace hkge
