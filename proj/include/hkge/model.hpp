#pragma once

// Learnable state and the scoring pipeline
//
//   c      = curvature(h, r)                      fixed / global / per-relation / attention
//   x      = exp0(scale_r * h_E, c)               inter-level transformation
//   y      = rotate_r(x)                          intra-level transformation
//   q      = y (+)_c exp0(trans_r, c)             hyperbolic translation
//   s      = -d_c(q, exp0(t_E, c))^2 + b_h + b_t
//
// The Euclidean variant replaces exp0 by the identity, (+) by vector addition
// and d_c(x, y) by 2|x - y|.

#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hkge/config.hpp"
#include "hkge/error.hpp"
#include "hkge/geometry.hpp"

namespace hkge {

enum class ParamGroup : std::size_t {
  entity_emb = 0,
  entity_bias,
  relation_emb,
  scale,
  theta,
  trans,
  head_a,
  head_p,
  curvature_pre,
};

inline constexpr std::size_t kNumParamGroups = 9;

inline constexpr std::array<ParamGroup, kNumParamGroups> kAllParamGroups = {
    ParamGroup::entity_emb, ParamGroup::entity_bias, ParamGroup::relation_emb,
    ParamGroup::scale,      ParamGroup::theta,       ParamGroup::trans,
    ParamGroup::head_a,     ParamGroup::head_p,      ParamGroup::curvature_pre};

inline constexpr std::string_view group_name(ParamGroup g) {
  constexpr std::array<std::string_view, kNumParamGroups> names = {
      "entity_emb", "entity_bias", "relation_emb", "scale", "theta", "trans", "head_a", "head_p", "curvature_pre"};
  return names[static_cast<std::size_t>(g)];
}

/// Row-major rows x width block of parameters.
template <std::floating_point T>
struct Table {
  std::size_t rows = 0;
  std::size_t width = 0;
  std::vector<T> data;

  Table() = default;
  Table(std::size_t r, std::size_t w, T fill = T(0)) : rows(r), width(w), data(r * w, fill) {}

  std::span<T> row(std::size_t i) { return std::span<T>(data).subspan(i * width, width); }
  std::span<const T> row(std::size_t i) const { return std::span<const T>(data).subspan(i * width, width); }
};

template <std::floating_point T>
using ParameterTables = std::array<Table<T>, kNumParamGroups>;

inline std::size_t curvature_pre_rows(CurvatureMode mode, std::size_t n_relations) {
  switch (mode) {
    case CurvatureMode::global: return 1;
    case CurvatureMode::per_relation: return n_relations;
    default: return 0;
  }
}

template <std::floating_point T>
T softplus(T z) {
  return std::max(z, T(0)) + std::log1p(std::exp(-std::abs(z)));
}

template <std::floating_point T>
T sigmoid(T z) {
  if (z >= 0) return T(1) / (T(1) + std::exp(-z));
  const T e = std::exp(z);
  return e / (T(1) + e);
}

/// Forward intermediates shared by every candidate tail of one (head, relation) query.
template <std::floating_point T>
struct HeadState {
  std::uint32_t head = 0;
  std::uint32_t relation = 0;
  T curvature = 0;    // 0 in Euclidean geometry
  T logit = 0;        // softplus input when the curvature is learned
  T alpha_head = 0;   // attention weight on the head embedding
  std::vector<T> fused;    // alpha_h h_E + alpha_r r_E
  std::vector<T> scaled;   // scale_r * h_E
  std::vector<T> ball;     // exp0(scaled)
  std::vector<T> rotated;  // rotate_r(ball)
  std::vector<T> shift;    // exp0(trans_r)
  std::vector<T> query;    // rotated (+) shift
};

template <std::floating_point T>
class Gradients;

template <std::floating_point T>
class Model {
 public:
  static constexpr T kMinCurvature = T(1e-10);

  Model(const ModelConfig& config, std::size_t n_entities, std::size_t n_relations)
      : config_(config), n_entities_(n_entities), n_relations_(n_relations) {
    config_.validate();
    const auto d = static_cast<std::size_t>(config_.dim);
    tables_[idx(ParamGroup::entity_emb)] = Table<T>(n_entities, d);
    tables_[idx(ParamGroup::entity_bias)] = Table<T>(n_entities, 1);
    tables_[idx(ParamGroup::relation_emb)] = Table<T>(n_relations, d);
    tables_[idx(ParamGroup::scale)] = Table<T>(n_relations, d / 2, T(1));
    tables_[idx(ParamGroup::theta)] = Table<T>(n_relations, d / 2);
    tables_[idx(ParamGroup::trans)] = Table<T>(n_relations, d);
    tables_[idx(ParamGroup::head_a)] = Table<T>(1, d);
    tables_[idx(ParamGroup::head_p)] = Table<T>(1, d);
    tables_[idx(ParamGroup::curvature_pre)] = Table<T>(curvature_pre_rows(config_.curvature_mode, n_relations), 1);
  }

  const ModelConfig& config() const { return config_; }
  std::size_t num_entities() const { return n_entities_; }
  std::size_t num_relations() const { return n_relations_; }
  std::size_t dim() const { return static_cast<std::size_t>(config_.dim); }
  bool hyperbolic() const { return config_.geometry == Geometry::hyperbolic; }

  Table<T>& table(ParamGroup g) { return tables_[idx(g)]; }
  const Table<T>& table(ParamGroup g) const { return tables_[idx(g)]; }
  ParameterTables<T>& tables() { return tables_; }
  const ParameterTables<T>& tables() const { return tables_; }

  std::span<T> row(ParamGroup g, std::size_t i) { return tables_[idx(g)].row(i); }
  std::span<const T> row(ParamGroup g, std::size_t i) const { return tables_[idx(g)].row(i); }

  const geometry::Tolerances& tolerances() const { return tol_; }
  void set_tolerances(const geometry::Tolerances& tol) { tol_ = tol; }

  /// Curvature used for every triple (h, r, *). Zero in Euclidean geometry.
  T curvature(std::uint32_t h, std::uint32_t r) const {
    HeadState<T> st;
    check_ids(h, r);
    st.fused.resize(dim());
    compute_curvature(st, h, r);
    return st.curvature;
  }

  /// Head entity after inter- and intra-level transformations on the ball of curvature c.
  std::vector<T> transform_head(std::uint32_t h, std::uint32_t r, T c) const {
    check_ids(h, r);
    HeadState<T> st;
    st.head = h;
    st.relation = r;
    st.curvature = c;
    transform(st);
    return st.rotated;
  }

  /// Runs the head-side pipeline once; tail_score() then scores any candidate against it.
  void forward_head(HeadState<T>& st, std::uint32_t h, std::uint32_t r) const {
    check_ids(h, r);
    st.head = h;
    st.relation = r;
    st.fused.resize(dim());
    compute_curvature(st, h, r);
    transform(st);
    const auto d = dim();
    st.shift.resize(d);
    st.query.resize(d);
    const auto trans = row(ParamGroup::trans, r);
    if (hyperbolic()) {
      geometry::exp0(trans, st.curvature, std::span<T>(st.shift), tol_);
      geometry::mobius_add(std::span<const T>(st.rotated), std::span<const T>(st.shift), st.curvature,
                           std::span<T>(st.query), tol_);
    } else {
      for (std::size_t i = 0; i < d; ++i) {
        st.shift[i] = trans[i];
        st.query[i] = st.rotated[i] + trans[i];
      }
    }
  }

  T tail_score(const HeadState<T>& st, std::uint32_t t) const {
    check_entity(t);
    const auto tail = row(ParamGroup::entity_emb, t);
    const T biases = row(ParamGroup::entity_bias, st.head)[0] + row(ParamGroup::entity_bias, t)[0];
    T dist;
    if (hyperbolic()) {
      thread_local std::vector<T> tail_ball;
      tail_ball.resize(dim());
      geometry::exp0(tail, st.curvature, std::span<T>(tail_ball), tol_);
      dist = geometry::hyp_distance(std::span<const T>(st.query), std::span<const T>(tail_ball), st.curvature, tol_);
    } else {
      T sq = 0;
      for (std::size_t i = 0; i < dim(); ++i) {
        const T diff = tail[i] - st.query[i];
        sq += diff * diff;
      }
      dist = T(2) * std::sqrt(sq);
    }
    return -dist * dist + biases;
  }

  T score(std::uint32_t h, std::uint32_t r, std::uint32_t t) const {
    HeadState<T> st;
    forward_head(st, h, r);
    return tail_score(st, t);
  }

  /// score(h, r, j) for every entity j, sharing the head-side pass.
  void score_against_all(std::uint32_t h, std::uint32_t r, std::span<T> out) const {
    geometry::detail::check_sizes(out.size(), n_entities_, "score_against_all");
    HeadState<T> st;
    forward_head(st, h, r);
    for (std::size_t j = 0; j < n_entities_; ++j) out[j] = tail_score(st, static_cast<std::uint32_t>(j));
  }

  std::vector<T> score_against_all(std::uint32_t h, std::uint32_t r) const {
    std::vector<T> out(n_entities_);
    score_against_all(h, r, std::span<T>(out));
    return out;
  }

  /// Accumulates the gradient of g_s * score(st, t) w.r.t. the tail side and the entity biases,
  /// and the upstream gradients w.r.t. the query point and the curvature.
  void backward_tail(const HeadState<T>& st, std::uint32_t t, T g_s, std::span<T> g_query, T& g_c,
                     Gradients<T>& grads) const;

  /// Pushes the accumulated query/curvature gradients through the head-side pipeline.
  void backward_head(const HeadState<T>& st, std::span<const T> g_query, T g_c, Gradients<T>& grads) const;

 private:
  static constexpr std::size_t idx(ParamGroup g) { return static_cast<std::size_t>(g); }

  void check_entity(std::uint32_t e) const {
    if (e >= n_entities_) {
      throw DomainError("entity id " + std::to_string(e) + " out of range [0, " + std::to_string(n_entities_) + ")");
    }
  }

  void check_ids(std::uint32_t h, std::uint32_t r) const {
    check_entity(h);
    if (r >= n_relations_) {
      throw DomainError("relation id " + std::to_string(r) + " out of range [0, " + std::to_string(n_relations_) +
                        ")");
    }
  }

  void compute_curvature(HeadState<T>& st, std::uint32_t h, std::uint32_t r) const {
    if (!hyperbolic()) {
      st.curvature = 0;
      return;
    }
    switch (config_.curvature_mode) {
      case CurvatureMode::fixed_one:
        st.curvature = 1;
        return;
      case CurvatureMode::global:
        st.logit = row(ParamGroup::curvature_pre, 0)[0];
        break;
      case CurvatureMode::per_relation:
        st.logit = row(ParamGroup::curvature_pre, r)[0];
        break;
      case CurvatureMode::attention: {
        const auto he = row(ParamGroup::entity_emb, h);
        const auto re = row(ParamGroup::relation_emb, r);
        const auto a = row(ParamGroup::head_a, 0);
        const auto p = row(ParamGroup::head_p, 0);
        // two-way softmax == sigmoid of the logit difference
        const T alpha_h = sigmoid(geometry::dot(a, he) - geometry::dot(a, re));
        const T alpha_r = T(1) - alpha_h;
        st.alpha_head = alpha_h;
        for (std::size_t i = 0; i < dim(); ++i) st.fused[i] = alpha_h * he[i] + alpha_r * re[i];
        st.logit = geometry::dot(p, std::span<const T>(st.fused));
        break;
      }
    }
    st.curvature = std::max(softplus(st.logit), kMinCurvature);
  }

  void transform(HeadState<T>& st) const {
    const auto d = dim();
    const auto he = row(ParamGroup::entity_emb, st.head);
    st.scaled.resize(d);
    st.ball.resize(d);
    st.rotated.resize(d);
    if (config_.use_inter_level) {
      geometry::block_scale(he, row(ParamGroup::scale, st.relation), std::span<T>(st.scaled));
    } else {
      std::copy(he.begin(), he.end(), st.scaled.begin());
    }
    if (hyperbolic()) {
      geometry::exp0(std::span<const T>(st.scaled), st.curvature, std::span<T>(st.ball), tol_);
    } else {
      st.ball = st.scaled;
    }
    if (config_.use_intra_level) {
      geometry::block_rotate(std::span<const T>(st.ball), row(ParamGroup::theta, st.relation),
                             std::span<T>(st.rotated));
    } else {
      st.rotated = st.ball;
    }
  }

  void backward_curvature(const HeadState<T>& st, T g_c, Gradients<T>& grads) const;

  ModelConfig config_;
  std::size_t n_entities_;
  std::size_t n_relations_;
  ParameterTables<T> tables_;
  geometry::Tolerances tol_{};
};

/// Dense gradient buffers shaped like the model, with per-table lists of touched rows.
template <std::floating_point T>
class Gradients {
 public:
  explicit Gradients(const Model<T>& model) {
    for (auto g : kAllParamGroups) {
      const auto& t = model.table(g);
      tables_[idx(g)] = Table<T>(t.rows, t.width);
      marks_[idx(g)].assign(t.rows, 0);
    }
  }

  std::span<T> row(ParamGroup g, std::size_t i) {
    auto& mark = marks_[idx(g)][i];
    if (!mark) {
      mark = 1;
      touched_[idx(g)].push_back(static_cast<std::uint32_t>(i));
    }
    return tables_[idx(g)].row(i);
  }

  std::span<const T> row(ParamGroup g, std::size_t i) const { return tables_[idx(g)].row(i); }
  const Table<T>& table(ParamGroup g) const { return tables_[idx(g)]; }
  const std::vector<std::uint32_t>& touched(ParamGroup g) const { return touched_[idx(g)]; }

  /// Zeroes touched rows and forgets them.
  void clear() {
    for (auto g : kAllParamGroups) {
      auto& tab = tables_[idx(g)];
      for (auto i : touched_[idx(g)]) {
        std::fill(tab.row(i).begin(), tab.row(i).end(), T(0));
        marks_[idx(g)][i] = 0;
      }
      touched_[idx(g)].clear();
    }
  }

  void merge(const Gradients& other) {
    for (auto g : kAllParamGroups) {
      for (auto i : other.touched(g)) {
        auto dst = row(g, i);
        auto src = other.row(g, i);
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
      }
    }
  }

  T squared_norm() const {
    T s = 0;
    for (auto g : kAllParamGroups) {
      for (auto i : touched(g)) s += geometry::squared_norm(row(g, i));
    }
    return s;
  }

  void scale(T factor) {
    for (auto g : kAllParamGroups) {
      for (auto i : touched(g)) {
        for (auto& v : tables_[idx(g)].row(i)) v *= factor;
      }
    }
  }

 private:
  static constexpr std::size_t idx(ParamGroup g) { return static_cast<std::size_t>(g); }

  ParameterTables<T> tables_;
  std::array<std::vector<char>, kNumParamGroups> marks_;
  std::array<std::vector<std::uint32_t>, kNumParamGroups> touched_;
};

template <std::floating_point T>
void Model<T>::backward_tail(const HeadState<T>& st, std::uint32_t t, T g_s, std::span<T> g_query, T& g_c,
                             Gradients<T>& grads) const {
  const auto d = dim();
  const auto tail = row(ParamGroup::entity_emb, t);
  grads.row(ParamGroup::entity_bias, st.head)[0] += g_s;
  grads.row(ParamGroup::entity_bias, t)[0] += g_s;
  auto g_tail = grads.row(ParamGroup::entity_emb, t);
  if (hyperbolic()) {
    thread_local std::vector<T> tail_ball, g_ball;
    tail_ball.resize(d);
    g_ball.assign(d, T(0));
    geometry::exp0(tail, st.curvature, std::span<T>(tail_ball), tol_);
    const T dist =
        geometry::hyp_distance(std::span<const T>(st.query), std::span<const T>(tail_ball), st.curvature, tol_);
    geometry::hyp_distance_vjp(std::span<const T>(st.query), std::span<const T>(tail_ball), st.curvature,
                               T(-2) * dist * g_s, g_query, std::span<T>(g_ball), g_c, tol_);
    geometry::exp0_vjp(tail, st.curvature, std::span<const T>(g_ball), g_tail, g_c, tol_);
  } else {
    // s = -4 |t - q|^2
    for (std::size_t i = 0; i < d; ++i) {
      const T diff = tail[i] - st.query[i];
      g_tail[i] += T(-8) * diff * g_s;
      g_query[i] += T(8) * diff * g_s;
    }
  }
}

template <std::floating_point T>
void Model<T>::backward_head(const HeadState<T>& st, std::span<const T> g_query, T g_c, Gradients<T>& grads) const {
  const auto d = dim();
  const auto h = st.head;
  const auto r = st.relation;
  thread_local std::vector<T> g_rot, g_ball, g_scaled;
  g_rot.assign(d, T(0));
  g_ball.assign(d, T(0));
  g_scaled.assign(d, T(0));

  auto g_trans = grads.row(ParamGroup::trans, r);
  if (hyperbolic()) {
    thread_local std::vector<T> g_shift;
    g_shift.assign(d, T(0));
    geometry::mobius_add_vjp(std::span<const T>(st.rotated), std::span<const T>(st.shift), st.curvature, g_query,
                             std::span<T>(g_rot), std::span<T>(g_shift), g_c, tol_);
    geometry::exp0_vjp(row(ParamGroup::trans, r), st.curvature, std::span<const T>(g_shift), g_trans, g_c, tol_);
  } else {
    for (std::size_t i = 0; i < d; ++i) {
      g_rot[i] = g_query[i];
      g_trans[i] += g_query[i];
    }
  }

  if (config_.use_intra_level) {
    geometry::block_rotate_vjp(std::span<const T>(st.ball), row(ParamGroup::theta, r), std::span<const T>(g_rot),
                               std::span<T>(g_ball), grads.row(ParamGroup::theta, r));
  } else {
    g_ball = g_rot;
  }

  if (hyperbolic()) {
    geometry::exp0_vjp(std::span<const T>(st.scaled), st.curvature, std::span<const T>(g_ball),
                       std::span<T>(g_scaled), g_c, tol_);
  } else {
    g_scaled = g_ball;
  }

  auto g_head = grads.row(ParamGroup::entity_emb, h);
  if (config_.use_inter_level) {
    geometry::block_scale_vjp(row(ParamGroup::entity_emb, h), row(ParamGroup::scale, r),
                              std::span<const T>(g_scaled), g_head, grads.row(ParamGroup::scale, r));
  } else {
    for (std::size_t i = 0; i < d; ++i) g_head[i] += g_scaled[i];
  }

  if (hyperbolic()) backward_curvature(st, g_c, grads);
}

template <std::floating_point T>
void Model<T>::backward_curvature(const HeadState<T>& st, T g_c, Gradients<T>& grads) const {
  if (config_.curvature_mode == CurvatureMode::fixed_one) return;
  if (softplus(st.logit) < kMinCurvature) return;  // floored
  const T g_logit = g_c * sigmoid(st.logit);
  switch (config_.curvature_mode) {
    case CurvatureMode::global:
      grads.row(ParamGroup::curvature_pre, 0)[0] += g_logit;
      return;
    case CurvatureMode::per_relation:
      grads.row(ParamGroup::curvature_pre, st.relation)[0] += g_logit;
      return;
    case CurvatureMode::attention: {
      const auto d = dim();
      const auto he = row(ParamGroup::entity_emb, st.head);
      const auto re = row(ParamGroup::relation_emb, st.relation);
      const auto a = row(ParamGroup::head_a, 0);
      const auto p = row(ParamGroup::head_p, 0);
      auto g_he = grads.row(ParamGroup::entity_emb, st.head);
      auto g_re = grads.row(ParamGroup::relation_emb, st.relation);
      auto g_a = grads.row(ParamGroup::head_a, 0);
      auto g_p = grads.row(ParamGroup::head_p, 0);
      const T alpha_h = st.alpha_head;
      const T alpha_r = T(1) - alpha_h;
      T g_alpha_h = 0, g_alpha_r = 0;
      for (std::size_t i = 0; i < d; ++i) {
        g_p[i] += g_logit * st.fused[i];
        const T g_fused = g_logit * p[i];
        g_he[i] += alpha_h * g_fused;
        g_re[i] += alpha_r * g_fused;
        g_alpha_h += g_fused * he[i];
        g_alpha_r += g_fused * re[i];
      }
      const T g_lh = alpha_h * alpha_r * (g_alpha_h - g_alpha_r);
      for (std::size_t i = 0; i < d; ++i) {
        g_a[i] += g_lh * (he[i] - re[i]);
        g_he[i] += g_lh * a[i];
        g_re[i] -= g_lh * a[i];
      }
      return;
    }
    default: return;
  }
}

/// Fresh model: embeddings, translations and the attention head ~ N(0, init_scale^2); scale factors 1;
/// angles and biases 0; curvature pre-activations at softplus^-1(1).
template <std::floating_point T>
Model<T> init_parameters(const ModelConfig& config, std::size_t n_entities, std::size_t n_relations,
                         std::uint64_t seed) {
  Model<T> model(config, n_entities, n_relations);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double s = config.init_scale;
  for (auto g : {ParamGroup::entity_emb, ParamGroup::relation_emb, ParamGroup::trans, ParamGroup::head_a,
                 ParamGroup::head_p}) {
    for (auto& v : model.table(g).data) v = static_cast<T>(s * gauss(rng));
  }
  const T unit_curvature_logit = static_cast<T>(std::log(std::expm1(1.0)));
  for (auto& v : model.table(ParamGroup::curvature_pre).data) v = unit_curvature_logit;
  return model;
}

}  // namespace hkge
