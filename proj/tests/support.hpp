#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "hkge/model.hpp"
#include "hkge/training.hpp"

namespace support {

/// Model with every parameter group randomized: embeddings ~ N(0, sd^2), scale ~ 1 + N(0, 0.3^2),
/// angles ~ U(-pi, pi), biases ~ N(0, 0.1^2), curvature logits ~ N(0, 1).
template <class T>
hkge::Model<T> random_model(const hkge::ModelConfig& cfg, std::size_t n_entities, std::size_t n_relations,
                            std::uint64_t seed, double sd = 0.3) {
  using hkge::ParamGroup;
  hkge::Model<T> m(cfg, n_entities, n_relations);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0, 1);
  std::uniform_real_distribution<double> angle(-3.14159, 3.14159);
  for (auto g : hkge::kAllParamGroups) {
    for (auto& v : m.table(g).data) {
      switch (g) {
        case ParamGroup::scale: v = static_cast<T>(1 + 0.3 * n(rng)); break;
        case ParamGroup::theta: v = static_cast<T>(angle(rng)); break;
        case ParamGroup::entity_bias: v = static_cast<T>(0.1 * n(rng)); break;
        case ParamGroup::curvature_pre: v = static_cast<T>(n(rng)); break;
        default: v = static_cast<T>(sd * n(rng)); break;
      }
    }
  }
  return m;
}

inline hkge::ModelConfig config(int dim, hkge::CurvatureMode mode, bool inter = true, bool intra = true,
                                hkge::Geometry geometry = hkge::Geometry::hyperbolic) {
  hkge::ModelConfig cfg;
  cfg.dim = dim;
  cfg.curvature_mode = mode;
  cfg.use_inter_level = inter;
  cfg.use_intra_level = intra;
  cfg.geometry = geometry;
  return cfg;
}

inline constexpr hkge::CurvatureMode kAllModes[] = {hkge::CurvatureMode::fixed_one, hkge::CurvatureMode::global,
                                                    hkge::CurvatureMode::per_relation,
                                                    hkge::CurvatureMode::attention};

/// Max relative error |analytic - numeric| / max(|analytic|, |numeric|, floor) per parameter group,
/// where numeric is the central difference of batch_loss with step h.
struct GradCheck {
  std::array<double, hkge::kNumParamGroups> max_rel_error{};
  std::array<std::size_t, hkge::kNumParamGroups> checked{};
  double worst() const { return *std::max_element(max_rel_error.begin(), max_rel_error.end()); }
};

inline GradCheck gradient_check(hkge::Model<double> model, const hkge::Batch& batch, double h = 1e-5,
                                double floor = 1e-6) {
  hkge::Gradients<double> grads(model);
  hkge::batch_gradients(model, batch, grads);
  GradCheck out;
  for (auto g : hkge::kAllParamGroups) {
    const auto gi = static_cast<std::size_t>(g);
    auto& data = model.table(g).data;
    const auto& analytic = grads.table(g).data;
    for (std::size_t k = 0; k < data.size(); ++k) {
      const double saved = data[k];
      data[k] = saved + h;
      const double up = hkge::batch_loss(model, batch);
      data[k] = saved - h;
      const double down = hkge::batch_loss(model, batch);
      data[k] = saved;
      const double numeric = (up - down) / (2 * h);
      const double denom = std::max({std::abs(analytic[k]), std::abs(numeric), floor});
      out.max_rel_error[gi] = std::max(out.max_rel_error[gi], std::abs(analytic[k] - numeric) / denom);
      ++out.checked[gi];
    }
  }
  return out;
}

/// Batch whose positives cover every relation and whose negatives cover every entity.
inline hkge::Batch covering_batch(std::size_t n_entities, std::size_t n_relations, int neg_samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<hkge::Triple> pos;
  for (std::size_t r = 0; r < n_relations; ++r) {
    pos.push_back({static_cast<std::uint32_t>(rng() % n_entities), static_cast<std::uint32_t>(r),
                   static_cast<std::uint32_t>(rng() % n_entities)});
  }
  hkge::Batch b;
  b.positives = pos;
  b.neg_per_positive = static_cast<std::size_t>(neg_samples);
  for (std::size_t i = 0; i < pos.size() * b.neg_per_positive; ++i) {
    b.negatives.push_back(static_cast<std::uint32_t>(i % n_entities));
  }
  return b;
}

}  // namespace support
