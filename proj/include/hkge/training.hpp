#pragma once

// Uniform negative sampling, the softplus cross-entropy loss, reverse-mode
// gradients, sparse Adagrad/Adam and the epoch loop.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "hkge/config.hpp"
#include "hkge/data.hpp"
#include "hkge/error.hpp"
#include "hkge/eval.hpp"
#include "hkge/geometry.hpp"
#include "hkge/model.hpp"
#include "hkge/random.hpp"

namespace hkge {

/// n iid uniform tail corruptions over all entities. True tails are not excluded.
inline std::vector<std::uint32_t> sample_negatives(std::size_t n_entities, int n, Rng& rng) {
  if (n < 1) throw DomainError("sample_negatives: n must be >= 1");
  std::vector<std::uint32_t> out(static_cast<std::size_t>(n));
  for (auto& e : out) e = static_cast<std::uint32_t>(uniform_index(rng, n_entities));
  return out;
}

struct Batch {
  std::vector<Triple> positives;
  std::vector<std::uint32_t> negatives;  // positives.size() * neg_per_positive, grouped by positive
  std::size_t neg_per_positive = 0;

  std::span<const std::uint32_t> negatives_of(std::size_t i) const {
    return std::span<const std::uint32_t>(negatives).subspan(i * neg_per_positive, neg_per_positive);
  }

  std::size_t num_terms() const { return positives.size() * (1 + neg_per_positive); }
};

inline Batch make_batch(std::span<const Triple> positives, std::size_t n_entities, int neg_samples, Rng& rng) {
  Batch b;
  b.positives.assign(positives.begin(), positives.end());
  b.neg_per_positive = static_cast<std::size_t>(neg_samples);
  b.negatives.reserve(positives.size() * b.neg_per_positive);
  for (std::size_t i = 0; i < positives.size(); ++i) {
    for (auto e : sample_negatives(n_entities, neg_samples, rng)) b.negatives.push_back(e);
  }
  return b;
}

namespace detail {

template <std::floating_point T>
void check_score(T s, const Triple& t, std::uint32_t tail) {
  if (!std::isfinite(s)) {
    throw NumericError("non-finite score for triple (" + std::to_string(t.head) + ", " + std::to_string(t.relation) +
                       ", " + std::to_string(tail) + ")");
  }
}

// Loss and (optionally) gradients for positives [begin, end), unnormalized.
template <std::floating_point T>
T accumulate_terms(const Model<T>& model, const Batch& batch, std::size_t begin, std::size_t end, T inv_terms,
                   Gradients<T>* grads) {
  HeadState<T> st;
  std::vector<T> g_query(model.dim());
  T total = 0;
  for (std::size_t i = begin; i < end; ++i) {
    const Triple& pos = batch.positives[i];
    model.forward_head(st, pos.head, pos.relation);
    std::fill(g_query.begin(), g_query.end(), T(0));
    T g_c = 0;
    auto term = [&](std::uint32_t tail, T label) {
      const T s = model.tail_score(st, tail);
      check_score(s, pos, tail);
      total += softplus(label * s);
      if (grads) {
        const T g_s = label * sigmoid(label * s) * inv_terms;
        model.backward_tail(st, tail, g_s, std::span<T>(g_query), g_c, *grads);
      }
    };
    term(pos.tail, T(-1));
    for (auto neg : batch.negatives_of(i)) term(neg, T(1));
    if (grads) model.backward_head(st, std::span<const T>(g_query), g_c, *grads);
  }
  return total;
}

template <std::floating_point T>
void check_gradients(const Gradients<T>& grads) {
  for (auto g : kAllParamGroups) {
    for (auto i : grads.touched(g)) {
      for (auto v : grads.row(g, i)) {
        if (!std::isfinite(v)) {
          throw NumericError("non-finite gradient in parameter group '" + std::string(group_name(g)) + "' row " +
                             std::to_string(i));
        }
      }
    }
  }
}

}  // namespace detail

/// Mean of log(1 + exp(y s)) over every positive (y = -1) and corrupted (y = +1) term.
template <std::floating_point T>
T batch_loss(const Model<T>& model, const Batch& batch) {
  if (batch.positives.empty()) throw DomainError("batch_loss: empty batch");
  const T inv = T(1) / static_cast<T>(batch.num_terms());
  return detail::accumulate_terms<T>(model, batch, 0, batch.positives.size(), inv, nullptr) * inv;
}

/// Accumulates d(batch_loss)/d(parameters) into `grads` and returns the loss.
template <std::floating_point T>
T batch_gradients(const Model<T>& model, const Batch& batch, Gradients<T>& grads) {
  if (batch.positives.empty()) throw DomainError("batch_gradients: empty batch");
  const T inv = T(1) / static_cast<T>(batch.num_terms());
  const T loss = detail::accumulate_terms<T>(model, batch, 0, batch.positives.size(), inv, &grads) * inv;
  detail::check_gradients(grads);
  return loss;
}

/// Same as batch_gradients with positives sharded over worker threads; shard gradients are
/// reduced in shard order before returning. `workers` holds one buffer per shard.
template <std::floating_point T>
T batch_gradients_parallel(const Model<T>& model, const Batch& batch, Gradients<T>& grads,
                           std::vector<Gradients<T>>& workers) {
  const std::size_t n_shards = std::min(workers.size(), batch.positives.size());
  if (n_shards <= 1) return batch_gradients(model, batch, grads);
  const T inv = T(1) / static_cast<T>(batch.num_terms());
  std::vector<T> partial(n_shards, T(0));
  std::vector<std::exception_ptr> errors(n_shards);
  const std::size_t chunk = (batch.positives.size() + n_shards - 1) / n_shards;
  {
    std::vector<std::jthread> pool;
    for (std::size_t s = 0; s < n_shards; ++s) {
      pool.emplace_back([&, s] {
        try {
          const std::size_t b = s * chunk;
          const std::size_t e = std::min(batch.positives.size(), b + chunk);
          if (b < e) partial[s] = detail::accumulate_terms<T>(model, batch, b, e, inv, &workers[s]);
        } catch (...) {
          errors[s] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  T total = 0;
  for (std::size_t s = 0; s < n_shards; ++s) {
    total += partial[s];
    grads.merge(workers[s]);
    workers[s].clear();
  }
  detail::check_gradients(grads);
  return total * inv;
}

/// Sparse Adagrad / Adam: only rows touched by the gradient are read or written.
template <std::floating_point T>
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, const Model<T>& model, double lr) : kind_(kind), lr_(static_cast<T>(lr)) {
    for (auto g : kAllParamGroups) {
      const auto& t = model.table(g);
      first_[idx(g)] = Table<T>(t.rows, t.width);
      if (kind_ == OptimizerKind::adam) second_[idx(g)] = Table<T>(t.rows, t.width);
    }
  }

  void step(Model<T>& model, const Gradients<T>& grads) {
    ++steps_;
    for (auto g : kAllParamGroups) {
      for (auto i : grads.touched(g)) {
        auto param = model.row(g, i);
        auto grad = grads.row(g, i);
        auto s1 = first_[idx(g)].row(i);
        if (kind_ == OptimizerKind::adagrad) {
          for (std::size_t k = 0; k < param.size(); ++k) {
            s1[k] += grad[k] * grad[k];
            param[k] -= lr_ * grad[k] / (std::sqrt(s1[k]) + T(1e-10));
          }
        } else {
          auto s2 = second_[idx(g)].row(i);
          const T b1 = T(0.9), b2 = T(0.999);
          const T c1 = T(1) - std::pow(b1, static_cast<T>(steps_));
          const T c2 = T(1) - std::pow(b2, static_cast<T>(steps_));
          for (std::size_t k = 0; k < param.size(); ++k) {
            s1[k] = b1 * s1[k] + (T(1) - b1) * grad[k];
            s2[k] = b2 * s2[k] + (T(1) - b2) * grad[k] * grad[k];
            param[k] -= lr_ * (s1[k] / c1) / (std::sqrt(s2[k] / c2) + T(1e-8));
          }
        }
      }
    }
  }

 private:
  static constexpr std::size_t idx(ParamGroup g) { return static_cast<std::size_t>(g); }

  OptimizerKind kind_;
  T lr_;
  std::uint64_t steps_ = 0;
  ParameterTables<T> first_;
  ParameterTables<T> second_;
};

struct EpochRecord {
  int epoch = 0;
  bool validated = false;
  double loss = 0;
  MetricReport valid;  // meaningful when validated
  std::uint64_t clamp_events = 0;
};

template <std::floating_point T>
struct TrainResult {
  explicit TrainResult(Model<T> initial) : best(std::move(initial)) {}

  Model<T> best;
  int best_epoch = 0;  // 0: the initial model
  std::optional<MetricReport> best_valid;
  std::vector<EpochRecord> log;
  int epochs_run = 0;
  bool aborted = false;
  std::string abort_reason;
};

template <std::floating_point T>
struct TrainHooks {
  std::function<void(const EpochRecord&)> on_epoch;
  std::function<void(const Model<T>&, int epoch, const MetricReport&)> on_best;
};

/// Shuffled mini-batch training on store.train (already reciprocal-augmented). Validation runs every
/// eval_every epochs and on the last epoch; the model with the best validation MRR is retained.
template <std::floating_point T>
TrainResult<T> train(Model<T> model, const TripleStore& store, const FilterIndex& index, const TrainConfig& cfg,
                     const EvalOptions& eval_opts = {}, const TrainHooks<T>& hooks = {}) {
  cfg.validate();
  if (store.train.empty()) throw DomainError("train: empty training split");
  if (model.num_entities() != store.num_entities() || model.num_relations() != store.num_relations()) {
    throw DomainError("train: model shape does not match the dataset vocabulary");
  }

  TrainResult<T> result(model);
  Rng rng(cfg.seed);
  Optimizer<T> opt(cfg.optimizer, model, cfg.lr);
  Gradients<T> grads(model);
  std::vector<Gradients<T>> workers;
  if (cfg.threads > 1) workers.assign(static_cast<std::size_t>(cfg.threads), Gradients<T>(model));

  std::vector<std::size_t> order(store.train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<Triple> chunk;
  double best_mrr = -1;
  int rounds_without_gain = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto clamps_before = geometry::clamp_events();
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);

    double loss_sum = 0;
    try {
      for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(cfg.batch_size)) {
        const std::size_t e = std::min(order.size(), b + static_cast<std::size_t>(cfg.batch_size));
        chunk.clear();
        for (std::size_t k = b; k < e; ++k) chunk.push_back(store.train[order[k]]);
        const Batch batch = make_batch(std::span<const Triple>(chunk), model.num_entities(), cfg.neg_samples, rng);
        const T loss = workers.empty() ? batch_gradients(model, batch, grads)
                                       : batch_gradients_parallel(model, batch, grads, workers);
        if (!std::isfinite(loss)) throw NumericError("non-finite loss at epoch " + std::to_string(epoch));
        if (cfg.grad_clip) {
          const T norm = std::sqrt(grads.squared_norm());
          if (norm > static_cast<T>(*cfg.grad_clip)) grads.scale(static_cast<T>(*cfg.grad_clip) / norm);
        }
        opt.step(model, grads);
        grads.clear();
        loss_sum += static_cast<double>(loss) * static_cast<double>(e - b);
      }
    } catch (const NumericError& err) {
      result.aborted = true;
      result.abort_reason = err.what();
      return result;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = loss_sum / static_cast<double>(order.size());
    result.epochs_run = epoch;

    const bool do_eval = !store.valid.empty() && (epoch % cfg.eval_every == 0 || epoch == cfg.epochs);
    bool stop = false;
    if (do_eval) {
      rec.validated = true;
      rec.valid = evaluate_split(model, std::span<const Triple>(store.valid), index, eval_opts);
      if (rec.valid.mrr > best_mrr) {
        best_mrr = rec.valid.mrr;
        rounds_without_gain = 0;
        result.best = model;
        result.best_epoch = epoch;
        result.best_valid = rec.valid;
        if (hooks.on_best) hooks.on_best(model, epoch, rec.valid);
      } else if (cfg.patience > 0 && ++rounds_without_gain >= cfg.patience) {
        stop = true;
      }
    } else if (store.valid.empty()) {
      result.best = model;
      result.best_epoch = epoch;
    }
    rec.clamp_events = geometry::clamp_events() - clamps_before;
    result.log.push_back(rec);
    if (hooks.on_epoch) hooks.on_epoch(rec);
    if (stop) break;
  }
  return result;
}

}  // namespace hkge
