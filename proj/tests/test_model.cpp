#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "hkge/model.hpp"
#include "oracle.hpp"
#include "support.hpp"

using hkge::CurvatureMode;
using hkge::Geometry;
using hkge::Model;
using hkge::ParamGroup;
using support::config;

namespace {

void set_row(Model<double>& m, ParamGroup g, std::size_t i, std::vector<double> v) {
  auto r = m.row(g, i);
  ASSERT_EQ(r.size(), v.size());
  std::copy(v.begin(), v.end(), r.begin());
}

}  // namespace

TEST(ModelConfig, RejectsOddOrTinyDimension) {
  EXPECT_THROW(Model<double>(config(7, CurvatureMode::fixed_one), 2, 2), hkge::DomainError);
  EXPECT_THROW(Model<double>(config(0, CurvatureMode::fixed_one), 2, 2), hkge::DomainError);
  EXPECT_NO_THROW(Model<double>(config(2, CurvatureMode::fixed_one), 2, 2));
}

TEST(ModelShape, TablesFollowTheConfiguration) {
  Model<double> m(config(6, CurvatureMode::per_relation), 5, 4);
  EXPECT_EQ(m.table(ParamGroup::entity_emb).data.size(), 30u);
  EXPECT_EQ(m.table(ParamGroup::entity_bias).data.size(), 5u);
  EXPECT_EQ(m.table(ParamGroup::scale).width, 3u);
  EXPECT_EQ(m.table(ParamGroup::theta).width, 3u);
  EXPECT_EQ(m.table(ParamGroup::curvature_pre).rows, 4u);
  EXPECT_EQ(Model<double>(config(6, CurvatureMode::global), 5, 4).table(ParamGroup::curvature_pre).rows, 1u);
  EXPECT_EQ(Model<double>(config(6, CurvatureMode::attention), 5, 4).table(ParamGroup::curvature_pre).rows, 0u);
}

TEST(Curvature, EqualAttentionLogitsSplitEvenly) {
  Model<double> m(config(2, CurvatureMode::attention), 1, 1);
  set_row(m, ParamGroup::entity_emb, 0, {0.2, 0.1});
  set_row(m, ParamGroup::relation_emb, 0, {0.1, 0.3});
  set_row(m, ParamGroup::head_a, 0, {1.0, 0.5});  // a.h = a.r = 0.25
  hkge::HeadState<double> st;
  m.forward_head(st, 0, 0);
  EXPECT_DOUBLE_EQ(st.alpha_head, 0.5);
}

TEST(Curvature, ZeroProjectionGivesLn2) {
  auto m = support::random_model<double>(config(4, CurvatureMode::attention), 3, 2, 1);
  for (auto& v : m.table(ParamGroup::head_p).data) v = 0;
  EXPECT_NEAR(m.curvature(1, 1), 0.6931471805599453, 1e-15);
}

TEST(Curvature, AttentionReferenceValue) {
  Model<double> m(config(2, CurvatureMode::attention), 1, 1);
  set_row(m, ParamGroup::entity_emb, 0, {1.0, 0.0});
  set_row(m, ParamGroup::relation_emb, 0, {0.0, 0.0});
  set_row(m, ParamGroup::head_a, 0, {1.0, 0.0});
  const double alpha_h = 0.7310585786300049;
  set_row(m, ParamGroup::head_p, 0, {2.0 / alpha_h, 0.0});
  hkge::HeadState<double> st;
  m.forward_head(st, 0, 0);
  EXPECT_NEAR(st.alpha_head, alpha_h, 1e-15);
  EXPECT_NEAR(1 - st.alpha_head, 0.2689414213699951, 1e-15);
  EXPECT_NEAR(st.curvature, 2.1269280110429725, 1e-14);
}

TEST(Curvature, ModesAndGeometry) {
  auto fixed = support::random_model<double>(config(4, CurvatureMode::fixed_one), 3, 2, 2);
  EXPECT_EQ(fixed.curvature(0, 1), 1.0);

  auto global = support::random_model<double>(config(4, CurvatureMode::global), 3, 2, 2);
  global.row(ParamGroup::curvature_pre, 0)[0] = 2.0;
  EXPECT_NEAR(global.curvature(0, 0), 2.1269280110429725, 1e-15);
  EXPECT_NEAR(global.curvature(2, 1), 2.1269280110429725, 1e-15);

  auto per_rel = support::random_model<double>(config(4, CurvatureMode::per_relation), 3, 2, 2);
  per_rel.row(ParamGroup::curvature_pre, 1)[0] = 0.0;
  EXPECT_NEAR(per_rel.curvature(0, 1), std::numbers::ln2, 1e-15);

  auto euc = support::random_model<double>(config(4, CurvatureMode::attention, true, true, Geometry::euclidean), 3, 2, 2);
  EXPECT_EQ(euc.curvature(0, 0), 0.0);

  EXPECT_THROW(fixed.curvature(3, 0), hkge::DomainError);
  EXPECT_THROW(fixed.curvature(0, 2), hkge::DomainError);
  EXPECT_THROW(fixed.score(0, 0, 7), hkge::DomainError);
}

TEST(Curvature, StrictlyPositiveForExtremeLogits) {
  auto m = support::random_model<double>(config(2, CurvatureMode::global), 1, 1, 3);
  for (double logit : {-800.0, -50.0, 0.0, 50.0}) {
    m.row(ParamGroup::curvature_pre, 0)[0] = logit;
    EXPECT_GT(m.curvature(0, 0), 0.0) << logit;
  }
}

TEST(TransformHead, ReferenceValue) {
  Model<double> m(config(2, CurvatureMode::fixed_one), 1, 1);
  set_row(m, ParamGroup::entity_emb, 0, {0.3, 0.4});
  set_row(m, ParamGroup::scale, 0, {2.0});
  set_row(m, ParamGroup::theta, 0, {std::numbers::pi / 2});
  const auto out = m.transform_head(0, 0, 1.0);
  EXPECT_NEAR(out[0], -0.6092753247646119, 1e-15);
  EXPECT_NEAR(out[1], 0.4569564935734589, 1e-15);
}

TEST(TransformHead, IdentityAndRotationOnlyPaths) {
  auto m = support::random_model<double>(config(4, CurvatureMode::fixed_one), 2, 1, 4);
  std::vector<double> he(m.row(ParamGroup::entity_emb, 0).begin(), m.row(ParamGroup::entity_emb, 0).end());
  std::vector<double> th(m.row(ParamGroup::theta, 0).begin(), m.row(ParamGroup::theta, 0).end());
  for (auto& v : m.table(ParamGroup::scale).data) v = 1;
  const auto rotated_first = hkge::geometry::exp0(
      std::span<const double>(hkge::geometry::block_rotate(std::span<const double>(he), std::span<const double>(th))),
      0.7);
  const auto out = m.transform_head(0, 0, 0.7);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(out[i], rotated_first[i], 1e-15);

  for (auto& v : m.table(ParamGroup::theta).data) v = 0;
  const auto plain = hkge::geometry::exp0(std::span<const double>(he), 0.7);
  EXPECT_EQ(m.transform_head(0, 0, 0.7), plain);
}

TEST(Score, ReferenceValues) {
  Model<double> m(config(2, CurvatureMode::fixed_one), 2, 1);
  set_row(m, ParamGroup::entity_emb, 0, {0.3, 0.4});
  set_row(m, ParamGroup::entity_emb, 1, {0.1, 0.0});
  EXPECT_NEAR(m.score(0, 0, 1), -0.80823342337531, 1e-14);
  EXPECT_EQ(m.score(0, 0, 0), 0.0);
  m.row(ParamGroup::entity_bias, 0)[0] = 0.3;
  m.row(ParamGroup::entity_bias, 1)[0] = 0.2;
  set_row(m, ParamGroup::entity_emb, 1, {0.3, 0.4});
  EXPECT_NEAR(m.score(0, 0, 1), 0.5, 1e-15);
}

TEST(Score, MatchesPipelineOracleInEveryConfiguration) {
  int checked = 0;
  for (auto mode : support::kAllModes) {
    for (int flags = 0; flags < 4; ++flags) {
      for (auto geom : {Geometry::hyperbolic, Geometry::euclidean}) {
        const auto cfg = config(6, mode, flags & 1, flags & 2, geom);
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
          const auto m = support::random_model<double>(cfg, 4, 3, seed);
          for (std::uint32_t h = 0; h < 4; ++h) {
            for (std::uint32_t r = 0; r < 3; ++r) {
              for (std::uint32_t t = 0; t < 4; ++t) {
                const double want = static_cast<double>(oracle::score(m, h, r, t));
                EXPECT_NEAR(m.score(h, r, t), want, 1e-11 * std::max(1.0, std::abs(want)));
                ++checked;
              }
            }
          }
        }
      }
    }
  }
  EXPECT_EQ(checked, 4 * 4 * 2 * 5 * 48);
}

TEST(Score, AgainstAllIsBitwiseEqualToLoop) {
  for (auto mode : support::kAllModes) {
    const auto m = support::random_model<double>(config(4, mode), 5, 2, 9);
    for (std::uint32_t h = 0; h < 5; ++h) {
      const auto all = m.score_against_all(h, 1);
      for (std::uint32_t t = 0; t < 5; ++t) EXPECT_EQ(all[t], m.score(h, 1, t));
    }
  }
  const auto single = support::random_model<double>(config(2, CurvatureMode::attention), 1, 1, 1);
  EXPECT_EQ(single.score_against_all(0, 0), std::vector<double>{single.score(0, 0, 0)});
}

TEST(Score, PermutingEntitiesPermutesScores) {
  auto m = support::random_model<double>(config(4, CurvatureMode::attention), 5, 2, 10);
  const auto before = m.score_against_all(4, 0);
  auto swap_rows = [&](ParamGroup g) {
    auto a = m.row(g, 1), b = m.row(g, 3);
    std::swap_ranges(a.begin(), a.end(), b.begin());
  };
  swap_rows(ParamGroup::entity_emb);
  swap_rows(ParamGroup::entity_bias);
  const auto after = m.score_against_all(4, 0);
  EXPECT_EQ(after[1], before[3]);
  EXPECT_EQ(after[3], before[1]);
  EXPECT_EQ(after[0], before[0]);
}

TEST(Score, ReducedModelIsPlainHyperbolicDistance) {
  auto m = support::random_model<double>(config(4, CurvatureMode::fixed_one, false, false), 4, 2, 11);
  for (auto& v : m.table(ParamGroup::trans).data) v = 0;
  const auto& cm = m;
  for (std::uint32_t h = 0; h < 4; ++h) {
    for (std::uint32_t t = 0; t < 4; ++t) {
      const auto he = hkge::geometry::exp0(cm.row(ParamGroup::entity_emb, h), 1.0);
      const auto te = hkge::geometry::exp0(cm.row(ParamGroup::entity_emb, t), 1.0);
      const double d = hkge::geometry::hyp_distance(std::span<const double>(he), std::span<const double>(te), 1.0);
      const double want = -d * d + (cm.row(ParamGroup::entity_bias, h)[0] + cm.row(ParamGroup::entity_bias, t)[0]);
      EXPECT_EQ(m.score(h, 1, t), want);
    }
  }
}

TEST(Score, FiniteForLargeScaleFactors) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto m = support::random_model<double>(config(8, CurvatureMode::attention), 4, 2, seed, 1.0);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> k(-10, 10);
    for (auto& v : m.table(ParamGroup::scale).data) v = k(rng);
    for (std::uint32_t h = 0; h < 4; ++h) {
      for (double s : m.score_against_all(h, 1)) EXPECT_TRUE(std::isfinite(s));
    }
  }
}

TEST(Score, RotationPreservesLevel) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n(0, 0.3);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> x(6), th(3);
    for (auto& v : x) v = n(rng);
    for (auto& v : th) v = 10 * n(rng);
    const auto ball = hkge::geometry::exp0(std::span<const double>(x), 1.3);
    const auto rot = hkge::geometry::block_rotate(std::span<const double>(ball), std::span<const double>(th));
    const std::vector<double> origin(6, 0.0);
    const double a = hkge::geometry::hyp_distance(std::span<const double>(ball), std::span<const double>(origin), 1.3);
    const double b = hkge::geometry::hyp_distance(std::span<const double>(rot), std::span<const double>(origin), 1.3);
    EXPECT_NEAR(a, b, 1e-12 * std::max(1.0, a));
  }
}

TEST(Score, EuclideanLimitOfSmallCurvature) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto hyp = support::random_model<double>(config(4, CurvatureMode::global), 3, 2, seed, 0.2);
    hyp.row(ParamGroup::curvature_pre, 0)[0] = std::log(std::expm1(1e-6));
    Model<double> euc(config(4, CurvatureMode::global, true, true, Geometry::euclidean), 3, 2);
    euc.tables() = hyp.tables();
    for (std::uint32_t h = 0; h < 3; ++h) {
      for (std::uint32_t t = 0; t < 3; ++t) {
        const double a = hyp.score(h, 1, t);
        const double b = euc.score(h, 1, t);
        EXPECT_NEAR(a, b, 1e-3 * std::abs(b)) << seed;
      }
    }
  }
}

TEST(Init, DeterministicAndScaled) {
  const auto cfg = config(8, CurvatureMode::attention);
  const auto a = hkge::init_parameters<double>(cfg, 10, 4, 7);
  const auto b = hkge::init_parameters<double>(cfg, 10, 4, 7);
  const auto c = hkge::init_parameters<double>(cfg, 10, 4, 8);
  for (auto g : hkge::kAllParamGroups) EXPECT_EQ(a.table(g).data, b.table(g).data);
  EXPECT_NE(a.table(ParamGroup::entity_emb).data, c.table(ParamGroup::entity_emb).data);
  for (double v : a.table(ParamGroup::scale).data) EXPECT_EQ(v, 1.0);
  for (double v : a.table(ParamGroup::theta).data) EXPECT_EQ(v, 0.0);
  for (double v : a.table(ParamGroup::entity_bias).data) EXPECT_EQ(v, 0.0);

  auto zero_cfg = cfg;
  zero_cfg.init_scale = 0;
  const auto z = hkge::init_parameters<double>(zero_cfg, 10, 4, 7);
  for (auto g : {ParamGroup::entity_emb, ParamGroup::relation_emb, ParamGroup::trans, ParamGroup::head_a,
                 ParamGroup::head_p}) {
    for (double v : z.table(g).data) EXPECT_EQ(v, 0.0);
  }

  const auto pr = hkge::init_parameters<double>(config(4, CurvatureMode::per_relation), 3, 2, 1);
  EXPECT_NEAR(pr.curvature(0, 1), 1.0, 1e-15);
}

// Near the origin d(x, y) ~ 2|x - y|, so a fresh score is bounded by 4 (|h| + |t| + |trans|)^2 up to
// higher-order terms; with init_scale 1e-3 this is ~8 d 1e-6 on average.
TEST(Init, FreshScoresAreNearZero) {
  for (int dim : {2, 8, 32}) {
    const auto m = hkge::init_parameters<double>(config(dim, CurvatureMode::attention), 20, 6, 1);
    for (std::uint32_t h = 0; h < 20; ++h) {
      for (std::uint32_t r = 0; r < 6; ++r) {
        const auto scores = m.score_against_all(h, r);
        for (std::uint32_t t = 0; t < 20; ++t) {
          const double reach = hkge::geometry::norm(m.row(ParamGroup::entity_emb, h)) +
                               hkge::geometry::norm(m.row(ParamGroup::entity_emb, t)) +
                               hkge::geometry::norm(m.row(ParamGroup::trans, r));
          EXPECT_LE(std::abs(scores[t]), 4 * reach * reach * (1 + 1e-3));
          EXPECT_LT(std::abs(scores[t]), 2e-3);
        }
      }
    }
  }
}
