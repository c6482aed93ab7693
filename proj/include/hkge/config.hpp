#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "hkge/error.hpp"

namespace hkge {

enum class CurvatureMode : std::uint8_t { fixed_one = 0, global = 1, per_relation = 2, attention = 3 };
enum class Geometry : std::uint8_t { hyperbolic = 0, euclidean = 1 };
enum class OptimizerKind : std::uint8_t { adagrad = 0, adam = 1 };

struct ModelConfig {
  int dim = 32;
  CurvatureMode curvature_mode = CurvatureMode::attention;
  Geometry geometry = Geometry::hyperbolic;
  bool use_inter_level = true;
  bool use_intra_level = true;
  double init_scale = 1e-3;

  void validate() const {
    if (dim < 2 || dim % 2 != 0) {
      throw DomainError("embedding dimension must be even and >= 2, got " + std::to_string(dim));
    }
    if (!(init_scale >= 0)) throw DomainError("init_scale must be >= 0");
  }

  bool operator==(const ModelConfig&) const = default;
};

struct TrainConfig {
  int epochs = 500;
  int batch_size = 500;
  int neg_samples = 50;
  double lr = 0.05;
  OptimizerKind optimizer = OptimizerKind::adagrad;
  std::uint64_t seed = 42;
  std::optional<double> grad_clip;
  int eval_every = 10;
  int patience = 10;  // validation rounds without improvement before stopping; 0 disables
  int threads = 1;

  void validate() const {
    if (epochs < 0) throw DomainError("epochs must be >= 0");
    if (batch_size < 1) throw DomainError("batch_size must be >= 1");
    if (neg_samples < 1) throw DomainError("neg_samples must be >= 1");
    if (!(lr > 0)) throw DomainError("lr must be > 0");
    if (eval_every < 1) throw DomainError("eval_every must be >= 1");
    if (threads < 1) throw DomainError("threads must be >= 1");
    if (grad_clip && !(*grad_clip > 0)) throw DomainError("grad_clip must be > 0");
  }
};

inline std::string_view to_string(CurvatureMode m) {
  switch (m) {
    case CurvatureMode::fixed_one: return "fixed";
    case CurvatureMode::global: return "global";
    case CurvatureMode::per_relation: return "relation";
    case CurvatureMode::attention: return "attention";
  }
  return "?";
}

inline std::string_view to_string(Geometry g) { return g == Geometry::hyperbolic ? "hyperbolic" : "euclidean"; }

inline std::string_view to_string(OptimizerKind o) { return o == OptimizerKind::adagrad ? "adagrad" : "adam"; }

inline CurvatureMode parse_curvature_mode(std::string_view s) {
  if (s == "fixed" || s == "fixed_one") return CurvatureMode::fixed_one;
  if (s == "global") return CurvatureMode::global;
  if (s == "relation" || s == "per_relation") return CurvatureMode::per_relation;
  if (s == "attention") return CurvatureMode::attention;
  throw DomainError("unknown curvature mode '" + std::string(s) + "'");
}

inline Geometry parse_geometry(std::string_view s) {
  if (s == "hyperbolic") return Geometry::hyperbolic;
  if (s == "euclidean") return Geometry::euclidean;
  throw DomainError("unknown geometry '" + std::string(s) + "'");
}

inline OptimizerKind parse_optimizer(std::string_view s) {
  if (s == "adagrad") return OptimizerKind::adagrad;
  if (s == "adam") return OptimizerKind::adam;
  throw DomainError("unknown optimizer '" + std::string(s) + "'");
}

}  // namespace hkge
