#pragma once

// Balanced binary tree knowledge graph used for desk-scale checks.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "hkge/data.hpp"
#include "hkge/error.hpp"
#include "hkge/random.hpp"

namespace hkge {

struct TreeKgOptions {
  int depth = 5;  // levels below the root; 2^(depth+1) - 1 nodes
  double train_fraction = 0.8;
  double valid_fraction = 0.1;
  std::uint64_t seed = 0;
};

/// Nodes n0..n{N-1} in heap order; every tree edge yields (parent, parent_of, child) and
/// (child, child_of, parent). The triples are shuffled with `seed` and split train/valid/test.
/// Every node keeps at least one incident triple in train so no entity is evaluation-only.
inline RawDataset make_binary_tree_kg(const TreeKgOptions& opts = {}) {
  if (opts.depth < 1 || opts.depth > 20) throw DomainError("tree depth must be in [1, 20]");
  if (!(opts.train_fraction > 0) || !(opts.valid_fraction >= 0) || opts.train_fraction + opts.valid_fraction > 1) {
    throw DomainError("invalid split fractions");
  }
  const std::size_t n_nodes = (std::size_t{1} << (opts.depth + 1)) - 1;
  auto name = [](std::size_t i) { return "n" + std::to_string(i); };
  std::vector<StringTriple> all;
  for (std::size_t child = 1; child < n_nodes; ++child) {
    const std::size_t parent = (child - 1) / 2;
    all.push_back({name(parent), "parent_of", name(child)});
    all.push_back({name(child), "child_of", name(parent)});
  }
  Rng rng(opts.seed);
  for (std::size_t i = all.size(); i > 1; --i) std::swap(all[i - 1], all[uniform_index(rng, i)]);
  const auto n_train = static_cast<std::size_t>(opts.train_fraction * static_cast<double>(all.size()) + 0.5);
  const auto n_valid = static_cast<std::size_t>(opts.valid_fraction * static_cast<double>(all.size()) + 0.5);

  // Move held-out triples whose entities would be unseen in train back into train.
  RawDataset raw;
  std::vector<std::size_t> seen(n_nodes, 0);
  auto index_of = [](const std::string& s) { return static_cast<std::size_t>(std::stoul(s.substr(1))); };
  for (std::size_t i = 0; i < n_train && i < all.size(); ++i) {
    raw.train.push_back(all[i]);
    ++seen[index_of(all[i].head)];
    ++seen[index_of(all[i].tail)];
  }
  std::vector<StringTriple> held(all.begin() + static_cast<std::ptrdiff_t>(std::min(n_train, all.size())), all.end());
  std::vector<StringTriple> kept;
  for (auto& t : held) {
    if (seen[index_of(t.head)] == 0 || seen[index_of(t.tail)] == 0) {
      ++seen[index_of(t.head)];
      ++seen[index_of(t.tail)];
      raw.train.push_back(std::move(t));
    } else {
      kept.push_back(std::move(t));
    }
  }
  for (std::size_t i = 0; i < kept.size(); ++i) (i < n_valid ? raw.valid : raw.test).push_back(std::move(kept[i]));
  return raw;
}

inline void write_split(const std::filesystem::path& path, const std::vector<StringTriple>& triples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  for (const auto& t : triples) out << t.head << '\t' << t.relation << '\t' << t.tail << '\n';
}

inline void write_dataset(const std::filesystem::path& dir, const RawDataset& raw) {
  std::filesystem::create_directories(dir);
  write_split(dir / "train.txt", raw.train);
  write_split(dir / "valid.txt", raw.valid);
  write_split(dir / "test.txt", raw.test);
}

}  // namespace hkge
