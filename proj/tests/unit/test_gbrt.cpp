#include <algorithm>
#include <cmath>
#include <numeric>

#include "fixtures.hpp"
#include "tractflow/gbrt/boosting.hpp"
#include "tractflow/numeric/random.hpp"

using namespace tractflow;
using namespace tractflow::testing;

namespace {

double mse_of(const TreeEnsemble& e, const Matrix& x, std::span<const double> y) {
  double s = 0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double d = predict(e, x.row(i)) - y[i];
    s += d * d;
  }
  return s / static_cast<double>(x.rows());
}

struct Data {
  Matrix x;
  std::vector<double> y;
};

Data noisy_rows(std::size_t n, std::size_t f, Rng& r) {
  Data d{Matrix(n, f), {}};
  for (auto& v : d.x.values()) v = r.uniform(0, 1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = d.x.row(i);
    d.y.push_back(std::max(0.0, 3.0 * row[0] - 2.0 * row[1] * row[1] + 0.3 * r.normal() + 1.0));
  }
  return d;
}

void collect_leaf_counts(const RegressionTree& t, const Matrix& x, std::vector<std::size_t>& counts) {
  counts.assign(t.nodes().size(), 0);
  for (std::size_t i = 0; i < x.rows(); ++i) ++counts[t.leaf_index(x.row(i))];
}

}  // namespace

TEST(Features, Concatenation) {
  const double o[] = {1, 2}, d[] = {3, 4};
  EXPECT_EQ(make_features(o, d, 5), (std::vector<double>{1, 2, 3, 4, 5}));
  const double shorter[] = {1};
  EXPECT_ERRC(make_features(o, shorter, 5), Errc::DimensionMismatch);
  EXPECT_ERRC(make_features(o, d, 0.0), Errc::InvalidArgument);
  EXPECT_ERRC(make_features(o, d, -1.0), Errc::InvalidArgument);
}

TEST(Boost, ConstantTargetsNeedNoTrees) {
  Rng r(1);
  Data d = noisy_rows(40, 3, r);
  std::fill(d.y.begin(), d.y.end(), 2.5);
  BoostLog log;
  const TreeEnsemble e = fit(d.x, d.y, Matrix(), {}, {}, &log);
  EXPECT_TRUE(e.trees.empty());
  EXPECT_EQ(e.base_score, 2.5);
  EXPECT_EQ(mse_of(e, d.x, d.y), 0.0);
  EXPECT_EQ(log.train_mse, (std::vector<double>{0.0}));
}

TEST(Boost, StepFunctionWithStumps) {
  Rng r(2);
  Matrix x(200, 1);
  std::vector<double> y;
  for (std::size_t i = 0; i < 200; ++i) {
    x[i] = r.uniform(0, 1);
    y.push_back(x[i] > 0.5 ? 1.0 : 0.0);
  }
  BoostConfig c;
  c.max_depth = 1;
  c.rounds = 50;
  const TreeEnsemble e = fit(x, y, Matrix(), {}, c);
  EXPECT_LT(mse_of(e, x, y), 1e-3);
  for (const auto& t : e.trees) EXPECT_LE(t.depth(), 1);
}

TEST(Boost, EmptyEnsemblePredictsBase) {
  TreeEnsemble e;
  e.base_score = 4.25;
  e.feature_dim = 2;
  const double x[] = {7, 8};
  EXPECT_EQ(predict(e, x), 4.25);
  const double wrong[] = {1};
  EXPECT_ERRC(predict(e, wrong), Errc::DimensionMismatch);
}

TEST(Boost, NegativeScoresClampToZero) {
  TreeEnsemble e;
  e.base_score = -0.3;
  e.feature_dim = 1;
  const double x[] = {0};
  EXPECT_EQ(e.raw_score(x), -0.3);
  EXPECT_EQ(predict(e, x), 0.0);
  e.clamp_nonnegative = false;
  EXPECT_EQ(predict(e, x), -0.3);
}

TEST(Boost, DeepTreesMemorize) {
  Rng r(3);
  const Data d = noisy_rows(50, 4, r);
  BoostConfig c;
  c.max_depth = 10;
  c.rounds = 500;
  c.min_samples_leaf = 1;
  c.learning_rate = 0.3;
  const TreeEnsemble e = fit(d.x, d.y, Matrix(), {}, c);
  for (std::size_t i = 0; i < d.x.rows(); ++i) EXPECT_NEAR(predict(e, d.x.row(i)), d.y[i], 1e-6);
}

TEST(Boost, RowOrderDoesNotMatter) {
  Rng r(4);
  const Data d = noisy_rows(120, 3, r);
  std::vector<std::size_t> perm(120);
  std::iota(perm.begin(), perm.end(), 0);
  r.shuffle(std::span<std::size_t>(perm));
  Data p{Matrix(120, 3), {}};
  for (std::size_t i = 0; i < 120; ++i) {
    std::copy(d.x.row(perm[i]).begin(), d.x.row(perm[i]).end(), p.x.row(i).begin());
    p.y.push_back(d.y[perm[i]]);
  }
  BoostConfig c;
  c.rounds = 40;
  c.max_depth = 4;
  EXPECT_EQ(fit(d.x, d.y, Matrix(), {}, c), fit(p.x, p.y, Matrix(), {}, c));
}

TEST(Boost, ThreadCountDoesNotMatter) {
  Rng r(5);
  const Data d = noisy_rows(150, 6, r);
  BoostConfig c;
  c.rounds = 30;
  const TreeEnsemble one = fit(d.x, d.y, Matrix(), {}, c);
  c.threads = 3;
  EXPECT_EQ(fit(d.x, d.y, Matrix(), {}, c), one);
}

TEST(Boost, TrainingMseNeverIncreases) {
  for (std::uint64_t seed = 10; seed < 15; ++seed) {
    Rng r(seed);
    const Data d = noisy_rows(300, 4, r);
    BoostConfig c;
    c.rounds = 80;
    c.learning_rate = 0.2;
    BoostLog log;
    fit(d.x, d.y, Matrix(), {}, c, &log);
    ASSERT_GT(log.train_mse.size(), 1u);
    for (std::size_t k = 1; k < log.train_mse.size(); ++k) EXPECT_LE(log.train_mse[k], log.train_mse[k - 1]);
  }
}

TEST(Boost, LeavesPartitionTheSamples) {
  Rng r(6);
  const Data d = noisy_rows(200, 3, r);
  BoostConfig c;
  c.rounds = 10;
  c.max_depth = 5;
  c.min_samples_leaf = 7;
  const TreeEnsemble e = fit(d.x, d.y, Matrix(), {}, c);
  for (const auto& t : e.trees) {
    std::vector<std::size_t> counts;
    collect_leaf_counts(t, d.x, counts);
    std::size_t total = 0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
      if (t.nodes()[k].is_leaf()) {
        EXPECT_GE(counts[k], 7u);
        total += counts[k];
      } else {
        EXPECT_EQ(counts[k], 0u);
      }
    }
    EXPECT_EQ(total, d.x.rows());
    EXPECT_EQ(static_cast<std::size_t>(std::count_if(t.nodes().begin(), t.nodes().end(),
                                                      [](const TreeNode& n) { return n.is_leaf(); })),
              t.leaf_count());
    EXPECT_LE(t.depth(), 5);
  }
}

TEST(Boost, EarlyStoppingKeepsBestRound) {
  Rng r(7);
  const Data train = noisy_rows(100, 3, r);
  const Data val = noisy_rows(60, 3, r);
  BoostConfig c;
  c.rounds = 300;
  c.max_depth = 6;
  c.min_samples_leaf = 1;
  c.learning_rate = 0.5;
  c.early_stop_rounds = 5;
  BoostLog log;
  const TreeEnsemble e = fit(train.x, train.y, val.x, val.y, c, &log);
  ASSERT_FALSE(log.val_mse.empty());
  const auto best = std::min_element(log.val_mse.begin(), log.val_mse.end());
  EXPECT_EQ(static_cast<int>(best - log.val_mse.begin()), log.best_round);
  EXPECT_EQ(e.trees.size(), static_cast<std::size_t>(log.best_round));
  EXPECT_LT(e.trees.size(), 300u);
  EXPECT_NEAR(mse_of(e, val.x, val.y), *best, 1e-12 * *best);
}

TEST(Boost, InsufficientRows) {
  Matrix x(5, 1);
  const std::vector<double> y(5, 1.0);
  BoostConfig c;
  c.min_samples_leaf = 3;
  EXPECT_ERRC(fit(x, y, Matrix(), {}, c), Errc::InsufficientData);
  EXPECT_ERRC(fit(x, std::vector<double>(4, 1.0), Matrix(), {}, {}), Errc::DimensionMismatch);
}

TEST(Boost, ConfigValidation) {
  BoostConfig c;
  c.learning_rate = 0.0;
  EXPECT_ERRC(c.validate(), Errc::InvalidArgument);
  c = {};
  c.max_depth = -1;
  EXPECT_ERRC(c.validate(), Errc::InvalidArgument);
}

TEST(Boost, SplitThresholdRoutesLeftInclusive) {
  const RegressionTree t({TreeNode{0, 0.5, 1, 2, 0}, TreeNode{-1, 0, -1, -1, -1.0}, TreeNode{-1, 0, -1, -1, 1.0}});
  const double at[] = {0.5}, above[] = {0.50001};
  EXPECT_EQ(t.predict(at), -1.0);
  EXPECT_EQ(t.predict(above), 1.0);
  EXPECT_EQ(t.depth(), 1);
  EXPECT_EQ(t.leaf_count(), 2u);
}
