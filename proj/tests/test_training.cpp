#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "hkge/synthetic.hpp"
#include "hkge/training.hpp"
#include "support.hpp"

using hkge::Batch;
using hkge::CurvatureMode;
using hkge::Geometry;
using hkge::Model;
using hkge::ParamGroup;
using support::config;

namespace {

hkge::TripleStore chain_store() {
  hkge::RawDataset raw;
  raw.train = {{"a", "next", "b"}, {"b", "next", "c"}};
  raw.valid = {{"a", "next", "b"}};
  return hkge::augment_reciprocal(hkge::build_vocab(raw));
}

hkge::TripleStore tree_store(std::uint64_t seed = 0) {
  hkge::TreeKgOptions opts;
  opts.depth = 3;
  opts.seed = seed;
  return hkge::augment_reciprocal(hkge::build_vocab(hkge::make_binary_tree_kg(opts)));
}

// Euclidean model with zero embeddings: every score equals b_h + b_t.
Model<double> bias_only_model(std::vector<double> biases) {
  Model<double> m(config(2, CurvatureMode::fixed_one, false, false, Geometry::euclidean), biases.size(), 1);
  m.table(ParamGroup::entity_bias).data = biases;
  return m;
}

}  // namespace

TEST(Negatives, SingleEntityAndDeterminism) {
  hkge::Rng rng(1);
  for (auto e : hkge::sample_negatives(1, 50, rng)) EXPECT_EQ(e, 0u);
  hkge::Rng a(42), b(42);
  EXPECT_EQ(hkge::sample_negatives(1000, 100, a), hkge::sample_negatives(1000, 100, b));
  EXPECT_THROW(hkge::sample_negatives(10, 0, a), hkge::DomainError);
}

TEST(Negatives, UniformFrequencies) {
  hkge::Rng rng(2024);
  const auto draws = hkge::sample_negatives(10, 1000000, rng);
  std::vector<std::size_t> counts(10, 0);
  for (auto e : draws) ++counts[e];
  const double sigma = std::sqrt(1e6 * 0.1 * 0.9);
  double chi2 = 0;
  for (auto c : counts) {
    EXPECT_LT(std::abs(static_cast<double>(c) - 1e5), 3 * sigma);
    chi2 += (c - 1e5) * (c - 1e5) / 1e5;
  }
  EXPECT_LT(chi2, 27.88);  // chi-square, 9 dof, p = 0.001
}

TEST(Loss, AllZeroScoresGiveLn2) {
  const auto m = bias_only_model({0, 0, 0});
  Batch b;
  b.positives = {{0, 0, 1}, {2, 0, 0}};
  b.negatives = {0, 1, 2, 2, 1, 0};
  b.neg_per_positive = 3;
  EXPECT_NEAR(hkge::batch_loss(m, b), 0.6931471805599453, 1e-15);
}

TEST(Loss, ReferenceValue) {
  const auto m = bias_only_model({0, 2, -1});
  Batch b;
  b.positives = {{0, 0, 1}};
  b.negatives = {2};
  b.neg_per_positive = 1;
  EXPECT_NEAR(hkge::batch_loss(m, b), 0.22009484928059767, 1e-15);
}

TEST(Loss, VanishesForConfidentScores) {
  const auto m = bias_only_model({0, 400, -400});
  Batch b;
  b.positives = {{0, 0, 1}};
  b.negatives = {2, 2};
  b.neg_per_positive = 2;
  EXPECT_LT(hkge::batch_loss(m, b), 1e-100);
}

TEST(Loss, InvariantUnderNegativePermutation) {
  const auto m = support::random_model<double>(config(4, CurvatureMode::attention), 6, 2, 3);
  Batch b;
  b.positives = {{0, 1, 2}};
  b.negatives = {5, 1, 3, 0, 4};
  b.neg_per_positive = 5;
  const double before = hkge::batch_loss(m, b);
  std::reverse(b.negatives.begin(), b.negatives.end());
  EXPECT_NEAR(hkge::batch_loss(m, b), before, 1e-15);
}

TEST(Loss, NonFiniteScoreIsReported) {
  auto m = support::random_model<double>(config(4, CurvatureMode::fixed_one), 3, 1, 3);
  m.row(ParamGroup::entity_bias, 2)[0] = std::nan("");
  Batch b;
  b.positives = {{0, 0, 1}};
  b.negatives = {2};
  b.neg_per_positive = 1;
  try {
    hkge::batch_loss(m, b);
    FAIL() << "expected NumericError";
  } catch (const hkge::NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("(0, 0, 2)"), std::string::npos) << e.what();
  }
}

class GradientCheck : public ::testing::TestWithParam<std::tuple<CurvatureMode, int, Geometry>> {};

TEST_P(GradientCheck, MatchesCentralDifferences) {
  const auto [mode, flags, geometry] = GetParam();
  const auto cfg = config(4, mode, flags & 1, flags & 2, geometry);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto m = support::random_model<double>(cfg, 3, 2, seed);
    const auto batch = support::covering_batch(3, 2, 3, seed);
    const auto res = support::gradient_check(m, batch);
    for (auto g : hkge::kAllParamGroups) {
      EXPECT_LT(res.max_rel_error[static_cast<std::size_t>(g)], 1e-4)
          << hkge::group_name(g) << " seed " << seed;
    }
  }
}

INSTANTIATE_TEST_SUITE_P(AllModesAndFlags, GradientCheck,
                         ::testing::Combine(::testing::ValuesIn(support::kAllModes), ::testing::Values(0, 1, 2, 3),
                                            ::testing::Values(Geometry::hyperbolic, Geometry::euclidean)));

TEST(Gradients, DisabledStagesHaveExactlyZeroGradient) {
  const auto m = support::random_model<double>(config(4, CurvatureMode::attention, true, false), 3, 2, 5);
  hkge::Gradients<double> g(m);
  hkge::batch_gradients(m, support::covering_batch(3, 2, 3, 5), g);
  for (double v : g.table(ParamGroup::theta).data) EXPECT_EQ(v, 0.0);
  EXPECT_TRUE(g.touched(ParamGroup::theta).empty());

  const auto plain = support::random_model<double>(config(4, CurvatureMode::attention, false, false), 3, 2, 5);
  hkge::Gradients<double> gp(plain);
  hkge::batch_gradients(plain, support::covering_batch(3, 2, 3, 5), gp);
  for (double v : gp.table(ParamGroup::scale).data) EXPECT_EQ(v, 0.0);
  for (double v : gp.table(ParamGroup::theta).data) EXPECT_EQ(v, 0.0);
}

TEST(Gradients, ParallelMatchesSerial) {
  const auto m = support::random_model<double>(config(6, CurvatureMode::attention), 10, 4, 6);
  hkge::Rng rng(6);
  std::vector<hkge::Triple> pos;
  for (int i = 0; i < 17; ++i) {
    pos.push_back({static_cast<std::uint32_t>(rng() % 10), static_cast<std::uint32_t>(rng() % 4),
                   static_cast<std::uint32_t>(rng() % 10)});
  }
  const auto batch = hkge::make_batch(std::span<const hkge::Triple>(pos), 10, 4, rng);
  hkge::Gradients<double> serial(m), parallel(m);
  std::vector<hkge::Gradients<double>> workers(3, hkge::Gradients<double>(m));
  const double a = hkge::batch_gradients(m, batch, serial);
  const double b = hkge::batch_gradients_parallel(m, batch, parallel, workers);
  EXPECT_NEAR(a, b, 1e-14);
  for (auto g : hkge::kAllParamGroups) {
    const auto& x = serial.table(g).data;
    const auto& y = parallel.table(g).data;
    for (std::size_t k = 0; k < x.size(); ++k) EXPECT_NEAR(x[k], y[k], 1e-14);
  }
}

TEST(Optimizer, ZeroLearningRateLeavesParametersUnchanged) {
  auto m = support::random_model<double>(config(4, CurvatureMode::attention), 3, 2, 7);
  const auto before = m.tables();
  hkge::Gradients<double> g(m);
  hkge::batch_gradients(m, support::covering_batch(3, 2, 2, 7), g);
  for (auto kind : {hkge::OptimizerKind::adagrad, hkge::OptimizerKind::adam}) {
    hkge::Optimizer<double> opt(kind, m, 0.0);
    opt.step(m, g);
    for (auto grp : hkge::kAllParamGroups) EXPECT_EQ(m.table(grp).data, before[static_cast<std::size_t>(grp)].data);
  }
}

TEST(Optimizer, SmallStepDecreasesTheLoss) {
  for (auto kind : {hkge::OptimizerKind::adagrad, hkge::OptimizerKind::adam}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      auto m = support::random_model<double>(config(4, CurvatureMode::attention), 5, 2, seed);
      hkge::Rng rng(seed);
      const std::vector<hkge::Triple> pos{{1, 0, 3}};
      const auto batch = hkge::make_batch(std::span<const hkge::Triple>(pos), 5, 4, rng);
      hkge::Gradients<double> g(m);
      const double before = hkge::batch_gradients(m, batch, g);
      hkge::Optimizer<double> opt(kind, m, 1e-4);
      opt.step(m, g);
      EXPECT_LT(hkge::batch_loss(m, batch), before) << "seed " << seed;
    }
  }
}

TEST(Optimizer, TouchesOnlyBatchRows) {
  auto m = support::random_model<double>(config(4, CurvatureMode::per_relation), 8, 4, 8);
  const auto before = m.tables();
  Batch b;
  b.positives = {{1, 2, 3}};
  b.negatives = {5};
  b.neg_per_positive = 1;
  hkge::Gradients<double> g(m);
  hkge::batch_gradients(m, b, g);
  hkge::Optimizer<double> opt(hkge::OptimizerKind::adagrad, m, 0.1);
  opt.step(m, g);
  auto changed = [&](ParamGroup grp, std::size_t row) {
    const auto now = m.row(grp, row);
    const auto old = before[static_cast<std::size_t>(grp)].row(row);
    return !std::equal(now.begin(), now.end(), old.begin());
  };
  for (std::size_t e = 0; e < 8; ++e) {
    const bool in_batch = e == 1 || e == 3 || e == 5;
    EXPECT_EQ(changed(ParamGroup::entity_emb, e), in_batch) << e;
    EXPECT_EQ(changed(ParamGroup::entity_bias, e), in_batch) << e;
  }
  for (std::size_t r = 0; r < 4; ++r) {
    EXPECT_EQ(changed(ParamGroup::trans, r), r == 2) << r;
    EXPECT_EQ(changed(ParamGroup::curvature_pre, r), r == 2) << r;
    EXPECT_FALSE(changed(ParamGroup::relation_emb, r)) << "unused outside attention mode";
  }
}

TEST(Train, ZeroEpochsReturnsTheInitialModel) {
  const auto store = chain_store();
  const auto index = hkge::build_filter_index(store);
  const auto m = hkge::init_parameters<double>(config(4, CurvatureMode::attention), store.num_entities(),
                                               store.num_relations(), 1);
  hkge::TrainConfig tc;
  tc.epochs = 0;
  const auto res = hkge::train(m, store, index, tc);
  EXPECT_EQ(res.epochs_run, 0);
  EXPECT_EQ(res.best_epoch, 0);
  for (auto g : hkge::kAllParamGroups) EXPECT_EQ(res.best.table(g).data, m.table(g).data);
}

TEST(Train, ChainLossDecreases) {
  const auto store = chain_store();
  const auto index = hkge::build_filter_index(store);
  const auto m = hkge::init_parameters<double>(config(4, CurvatureMode::attention), store.num_entities(),
                                               store.num_relations(), 3);
  hkge::TrainConfig tc;
  tc.epochs = 200;
  tc.batch_size = 4;
  tc.neg_samples = 2;
  tc.patience = 0;
  const auto res = hkge::train(m, store, index, tc);
  ASSERT_EQ(res.log.size(), 200u);
  EXPECT_LT(res.log.back().loss, res.log.front().loss);
  EXPECT_FALSE(res.aborted);
}

TEST(Train, BitwiseReproducible) {
  for (int threads : {1, 3}) {
    const auto store = tree_store();
    const auto index = hkge::build_filter_index(store);
    const auto m = hkge::init_parameters<float>(config(4, CurvatureMode::attention), store.num_entities(),
                                                store.num_relations(), 5);
    hkge::TrainConfig tc;
    tc.epochs = 6;
    tc.batch_size = 16;
    tc.neg_samples = 5;
    tc.eval_every = 2;
    tc.threads = threads;
    const auto a = hkge::train(m, store, index, tc);
    const auto b = hkge::train(m, store, index, tc);
    for (auto g : hkge::kAllParamGroups) EXPECT_EQ(a.best.table(g).data, b.best.table(g).data);
    ASSERT_EQ(a.log.size(), b.log.size());
    for (std::size_t i = 0; i < a.log.size(); ++i) EXPECT_EQ(a.log[i].loss, b.log[i].loss);
  }
}

TEST(Train, ValidatesOnScheduleAndKeepsTheBestModel) {
  const auto store = tree_store();
  const auto index = hkge::build_filter_index(store);
  const auto m = hkge::init_parameters<double>(config(4, CurvatureMode::attention), store.num_entities(),
                                               store.num_relations(), 5);
  hkge::TrainConfig tc;
  tc.epochs = 7;
  tc.batch_size = 8;
  tc.neg_samples = 4;
  tc.eval_every = 3;
  tc.patience = 0;
  int best_calls = 0;
  hkge::TrainHooks<double> hooks;
  hooks.on_best = [&](const Model<double>&, int, const hkge::MetricReport&) { ++best_calls; };
  const auto res = hkge::train(m, store, index, tc, {}, hooks);
  ASSERT_EQ(res.log.size(), 7u);
  for (const auto& rec : res.log) EXPECT_EQ(rec.validated, rec.epoch == 3 || rec.epoch == 6 || rec.epoch == 7);
  ASSERT_TRUE(res.best_valid.has_value());
  double best = 0;
  for (const auto& rec : res.log) {
    if (rec.validated) best = std::max(best, rec.valid.mrr);
  }
  EXPECT_EQ(res.best_valid->mrr, best);
  EXPECT_GE(best_calls, 1);
  const auto again = hkge::evaluate_split(res.best, std::span<const hkge::Triple>(store.valid), index);
  EXPECT_EQ(again.mrr, res.best_valid->mrr);
}

TEST(Train, NonFiniteLossAbortsWithLastGoodModel) {
  const auto store = chain_store();
  const auto index = hkge::build_filter_index(store);
  auto m = hkge::init_parameters<double>(config(4, CurvatureMode::fixed_one), store.num_entities(),
                                         store.num_relations(), 1);
  m.row(ParamGroup::entity_emb, 1)[0] = std::numeric_limits<double>::infinity();
  hkge::TrainConfig tc;
  tc.epochs = 3;
  tc.batch_size = 2;
  tc.neg_samples = 1;
  const auto res = hkge::train(m, store, index, tc);
  EXPECT_TRUE(res.aborted);
  EXPECT_FALSE(res.abort_reason.empty());
  EXPECT_EQ(res.best_epoch, 0);
}

TEST(Train, RejectsMismatchedModel) {
  const auto store = chain_store();
  const auto index = hkge::build_filter_index(store);
  Model<double> m(config(4, CurvatureMode::fixed_one), store.num_entities() + 1, store.num_relations());
  EXPECT_THROW(hkge::train(m, store, index, hkge::TrainConfig{}), hkge::DomainError);
}
