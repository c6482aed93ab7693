#pragma once

// Dataset ingestion: TSV triple files, first-appearance vocabularies,
// reciprocal augmentation and the filtered-ranking index.

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hkge/error.hpp"

namespace hkge {

struct StringTriple {
  std::string head;
  std::string relation;
  std::string tail;

  bool operator==(const StringTriple&) const = default;
};

struct Triple {
  std::uint32_t head = 0;
  std::uint32_t relation = 0;
  std::uint32_t tail = 0;

  bool operator==(const Triple&) const = default;
};

namespace detail {

inline bool valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len;
    std::uint32_t cp;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > s.size()) return false;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // overlong encodings, surrogates, out of range
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) || cp > 0x10FFFF ||
        (cp >= 0xD800 && cp <= 0xDFFF)) {
      return false;
    }
    i += len;
  }
  return true;
}

}  // namespace detail

/// Parses `head<TAB>relation<TAB>tail` lines in file order. Blank lines are skipped.
inline std::vector<StringTriple> load_split(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open triple file: " + path.string());
  std::vector<StringTriple> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (!detail::valid_utf8(line)) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": invalid UTF-8");
    }
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty() || fields[2].empty()) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": expected 3 non-empty tab-separated fields, got " + std::to_string(fields.size()));
    }
    out.push_back({std::move(fields[0]), std::move(fields[1]), std::move(fields[2])});
  }
  return out;
}

/// Bidirectional name <-> dense id map.
class Vocabulary {
 public:
  std::uint32_t add(const std::string& name) {
    auto [it, inserted] = ids_.try_emplace(name, static_cast<std::uint32_t>(names_.size()));
    if (inserted) names_.push_back(name);
    return it->second;
  }

  std::optional<std::uint32_t> find(const std::string& name) const {
    auto it = ids_.find(name);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }

  std::uint32_t id(const std::string& name) const {
    auto found = find(name);
    if (!found) throw DomainError("unknown symbol '" + name + "'");
    return *found;
  }

  const std::string& name(std::uint32_t id) const {
    if (id >= names_.size()) throw DomainError("vocabulary id " + std::to_string(id) + " out of range");
    return names_[id];
  }

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> ids_;
};

enum class Split { train, valid, test };

inline std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::valid: return "valid";
    case Split::test: return "test";
  }
  return "?";
}

inline Split parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "valid") return Split::valid;
  if (s == "test") return Split::test;
  throw DomainError("unknown split '" + std::string(s) + "'");
}

struct RawDataset {
  std::vector<StringTriple> train, valid, test;
};

/// Reads train.txt / valid.txt / test.txt under `dir`.
inline RawDataset load_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw FormatError("dataset directory not found: " + dir.string());
  return {load_split(dir / "train.txt"), load_split(dir / "valid.txt"), load_split(dir / "test.txt")};
}

struct TripleStore {
  Vocabulary entities;
  Vocabulary relations;  // base relations only; reciprocal of r has id r + |R|
  std::vector<Triple> train, valid, test;
  bool reciprocal = false;

  std::size_t num_entities() const { return entities.size(); }
  std::size_t num_base_relations() const { return relations.size(); }
  /// |R'|: doubled once reciprocal relations are added.
  std::size_t num_relations() const { return reciprocal ? 2 * relations.size() : relations.size(); }

  const std::vector<Triple>& split(Split s) const {
    switch (s) {
      case Split::train: return train;
      case Split::valid: return valid;
      case Split::test: return test;
    }
    return train;
  }

  std::uint32_t base_relation(std::uint32_t r) const {
    return static_cast<std::uint32_t>(r % relations.size());
  }

  std::string relation_name(std::uint32_t r) const {
    const auto& base = relations.name(base_relation(r));
    return r >= relations.size() ? base + "_reverse" : base;
  }

  StringTriple decode(const Triple& t) const {
    if (t.relation >= relations.size()) throw DomainError("cannot decode reciprocal triple");
    return {entities.name(t.head), relations.name(t.relation), entities.name(t.tail)};
  }
};

/// Enumerates entities and relations in first-appearance order over train, valid, test.
inline TripleStore build_vocab(const RawDataset& raw) {
  TripleStore store;
  auto encode = [&](const std::vector<StringTriple>& in, std::vector<Triple>& out) {
    out.reserve(in.size());
    for (const auto& t : in) {
      const auto h = store.entities.add(t.head);
      const auto r = store.relations.add(t.relation);
      const auto tl = store.entities.add(t.tail);
      out.push_back({h, r, tl});
    }
  };
  encode(raw.train, store.train);
  encode(raw.valid, store.valid);
  encode(raw.test, store.test);
  return store;
}

/// Encodes splits against fixed vocabularies; any unseen symbol is an error.
inline TripleStore encode_with_vocab(const RawDataset& raw, Vocabulary entities, Vocabulary relations) {
  TripleStore store;
  store.entities = std::move(entities);
  store.relations = std::move(relations);
  auto encode = [&](const std::vector<StringTriple>& in, std::vector<Triple>& out, Split s) {
    out.reserve(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) {
      const auto& t = in[i];
      auto h = store.entities.find(t.head);
      auto r = store.relations.find(t.relation);
      auto tl = store.entities.find(t.tail);
      if (!h || !r || !tl) {
        const auto& bad = !h ? t.head : (!r ? t.relation : t.tail);
        throw DomainError(std::string(to_string(s)) + " triple " + std::to_string(i + 1) + ": symbol '" + bad +
                          "' is not in the vocabulary");
      }
      out.push_back({*h, *r, *tl});
    }
  };
  encode(raw.train, store.train, Split::train);
  encode(raw.valid, store.valid, Split::valid);
  encode(raw.test, store.test, Split::test);
  return store;
}

/// Appends (t, r + |R|, h) for every (h, r, t) in every split.
inline TripleStore augment_reciprocal(TripleStore store) {
  if (store.reciprocal) throw DomainError("store is already augmented with reciprocal relations");
  const auto n_rel = static_cast<std::uint32_t>(store.relations.size());
  for (auto* split : {&store.train, &store.valid, &store.test}) {
    const std::size_t n = split->size();
    split->reserve(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
      const Triple t = (*split)[i];
      split->push_back({t.tail, t.relation + n_rel, t.head});
    }
  }
  store.reciprocal = true;
  return store;
}

/// (head, relation) -> sorted known-true tails over all splits.
class FilterIndex {
 public:
  void insert(const Triple& t) { index_[key(t.head, t.relation)].push_back(t.tail); }

  void finalize() {
    for (auto& [k, tails] : index_) {
      std::sort(tails.begin(), tails.end());
      tails.erase(std::unique(tails.begin(), tails.end()), tails.end());
    }
  }

  std::span<const std::uint32_t> tails(std::uint32_t h, std::uint32_t r) const {
    auto it = index_.find(key(h, r));
    if (it == index_.end()) return {};
    return it->second;
  }

  bool contains(std::uint32_t h, std::uint32_t r, std::uint32_t t) const {
    auto ts = tails(h, r);
    return std::binary_search(ts.begin(), ts.end(), t);
  }

  std::size_t num_keys() const { return index_.size(); }

 private:
  static std::uint64_t key(std::uint32_t h, std::uint32_t r) {
    return (static_cast<std::uint64_t>(h) << 32) | r;
  }

  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> index_;
};

inline FilterIndex build_filter_index(const TripleStore& store) {
  FilterIndex index;
  for (const auto* split : {&store.train, &store.valid, &store.test}) {
    for (const auto& t : *split) index.insert(t);
  }
  index.finalize();
  return index;
}

// --- reference statistics ----------------------------------------------------

struct DatasetStats {
  std::size_t entities = 0;
  std::size_t relations = 0;
  std::size_t train = 0;
  std::size_t valid = 0;
  std::size_t test = 0;
};

/// Counts over original (pre-reciprocal) triples.
inline DatasetStats dataset_stats(const TripleStore& store) {
  const std::size_t f = store.reciprocal ? 2 : 1;
  return {store.num_entities(), store.num_base_relations(), store.train.size() / f, store.valid.size() / f,
          store.test.size() / f};
}

struct ReferenceStats {
  std::string_view name;
  DatasetStats stats;
};

// Published benchmark statistics. The WN18RR entity count (40,493) differs from the canonical
// distribution (40,943); entity counts are reported as deviations, never failed.
inline constexpr std::array<ReferenceStats, 3> kReferenceStats = {{
    {"WN18RR", {40493, 11, 86835, 3034, 3134}},
    {"FB15K-237", {14541, 237, 272115, 17535, 20466}},
    {"YAGO3-10", {123182, 37, 1079040, 5000, 5000}},
}};

inline const ReferenceStats* find_reference(std::string_view name) {
  auto norm = [](std::string_view s) {
    std::string out;
    for (char c : s) {
      if (c == '-' || c == '_') continue;
      out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    }
    return out;
  };
  for (const auto& r : kReferenceStats) {
    if (norm(r.name) == norm(name)) return &r;
  }
  return nullptr;
}

struct ReferenceCheck {
  bool ok = true;  // triple counts and |R| match exactly
  std::vector<std::string> mismatches;  // fatal
  std::vector<std::string> deviations;  // reported only (entity count)
};

inline ReferenceCheck check_reference(const DatasetStats& measured, const ReferenceStats& ref) {
  ReferenceCheck out;
  auto cmp = [&](std::string_view what, std::size_t got, std::size_t want, bool fatal) {
    if (got == want) return;
    std::ostringstream msg;
    msg << ref.name << " " << what << ": measured " << got << ", reference " << want;
    (fatal ? out.mismatches : out.deviations).push_back(msg.str());
    if (fatal) out.ok = false;
  };
  cmp("|E|", measured.entities, ref.stats.entities, false);
  cmp("|R|", measured.relations, ref.stats.relations, true);
  cmp("#train", measured.train, ref.stats.train, true);
  cmp("#valid", measured.valid, ref.stats.valid, true);
  cmp("#test", measured.test, ref.stats.test, true);
  return out;
}

// --- vocabulary dumps ----------------------------------------------------------

inline void write_vocab(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  for (std::size_t i = 0; i < vocab.size(); ++i) out << i << '\t' << vocab.names()[i] << '\n';
}

inline Vocabulary read_vocab(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  Vocabulary vocab;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw FormatError(path.string() + ":" + std::to_string(line_no) + ": missing tab");
    const auto id_text = line.substr(0, tab);
    if (id_text.empty() || id_text.find_first_not_of("0123456789") != std::string::npos) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": bad id '" + id_text + "'");
    }
    const auto id = std::stoull(id_text);
    if (id != vocab.size() || vocab.add(line.substr(tab + 1)) != id) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": ids must be dense and unique");
    }
  }
  return vocab;
}

/// Looks a relation up by exact name, falling back to the WordNet-style leading-underscore form.
inline std::optional<std::uint32_t> find_relation(const Vocabulary& relations, const std::string& name) {
  if (auto r = relations.find(name)) return r;
  if (auto r = relations.find("_" + name)) return r;
  if (!name.empty() && name.front() == '_') return relations.find(name.substr(1));
  return std::nullopt;
}

}  // namespace hkge
