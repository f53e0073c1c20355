#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tractflow/numeric/matrix.hpp"

namespace tractflow {

struct BoostConfig {
  int rounds = 300;
  double learning_rate = 0.1;
  int max_depth = 6;
  int min_samples_leaf = 5;
  int early_stop_rounds = 25;  // on validation MSE; ignored without a validation set
  int threads = 1;             // feature-parallel split search

  void validate() const;

  friend bool operator==(const BoostConfig&, const BoostConfig&) = default;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;  // taken when x[feature] <= threshold
  int right = -1;
  double value = 0.0;  // leaf output (mean residual, before shrinkage)

  bool is_leaf() const noexcept { return feature < 0; }

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

class RegressionTree {
 public:
  RegressionTree() = default;
  explicit RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  std::span<const TreeNode> nodes() const noexcept { return nodes_; }
  std::size_t leaf_index(std::span<const double> x) const;
  double predict(std::span<const double> x) const { return nodes_[leaf_index(x)].value; }
  std::size_t leaf_count() const;
  int depth() const;

  friend bool operator==(const RegressionTree&, const RegressionTree&) = default;

 private:
  std::vector<TreeNode> nodes_;
};

/// base_score + learning_rate * sum of tree outputs, optionally clamped at 0.
struct TreeEnsemble {
  double base_score = 0.0;
  double learning_rate = 0.1;
  std::size_t feature_dim = 0;
  bool clamp_nonnegative = true;
  std::vector<RegressionTree> trees;

  /// Unclamped additive score. Throws DimensionMismatch on wrong length.
  double raw_score(std::span<const double> x) const;

  friend bool operator==(const TreeEnsemble&, const TreeEnsemble&) = default;
};

struct BoostLog {
  std::vector<double> train_mse;  // index 0 = base score only, then one entry per kept tree
  std::vector<double> val_mse;    // same indexing; empty without validation data
  int best_round = 0;
};

/// [origin || destination || km]. Throws DimensionMismatch when the embedding
/// lengths differ and InvalidArgument unless km > 0.
std::vector<double> make_features(std::span<const double> origin, std::span<const double> destination, double km);

/// Squared-error gradient boosting with exact greedy variance-reduction splits.
/// Rows are put into a canonical order first, so the result does not depend on
/// the input row order. Ties between candidate splits go to the smallest
/// feature index, then the smallest threshold. Throws InsufficientData when
/// there are fewer than 2 * min_samples_leaf rows.
TreeEnsemble fit(const Matrix& features, std::span<const double> targets, const Matrix& val_features,
                 std::span<const double> val_targets, const BoostConfig& config, BoostLog* log = nullptr);

/// Ensemble score clamped at zero when the ensemble's clamp flag is set.
double predict(const TreeEnsemble& ensemble, std::span<const double> features);

}  // namespace tractflow
