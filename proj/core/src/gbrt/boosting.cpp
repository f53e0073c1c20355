#include "tractflow/gbrt/boosting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "tractflow/error.hpp"

namespace tractflow {

void BoostConfig::validate() const {
  if (rounds < 0 || max_depth < 0 || min_samples_leaf < 1 || early_stop_rounds < 1 || threads < 1) {
    throw Error(Errc::InvalidArgument, "boosting rounds/depth >= 0, min_samples_leaf/early_stop/threads >= 1");
  }
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
    throw Error(Errc::InvalidArgument, "boosting learning_rate must be in (0, 1]");
  }
}

std::size_t RegressionTree::leaf_index(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto& n = nodes_[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return i;
}

std::size_t RegressionTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

int RegressionTree::depth() const {
  if (nodes_.empty()) return 0;
  std::vector<int> d(nodes_.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].is_leaf()) continue;
    d[static_cast<std::size_t>(nodes_[i].left)] = d[i] + 1;
    d[static_cast<std::size_t>(nodes_[i].right)] = d[i] + 1;
    best = std::max(best, d[i] + 1);
  }
  return best;
}

double TreeEnsemble::raw_score(std::span<const double> x) const {
  if (x.size() != feature_dim) {
    throw Error(Errc::DimensionMismatch, "expected " + std::to_string(feature_dim) + " features, got " +
                                             std::to_string(x.size()));
  }
  double s = 0.0;
  for (const auto& t : trees) s += t.predict(x);
  return base_score + learning_rate * s;
}

double predict(const TreeEnsemble& ensemble, std::span<const double> features) {
  const double s = ensemble.raw_score(features);
  return ensemble.clamp_nonnegative ? std::max(0.0, s) : s;
}

std::vector<double> make_features(std::span<const double> origin, std::span<const double> destination, double km) {
  if (origin.size() != destination.size()) {
    throw Error(Errc::DimensionMismatch, "origin and destination embeddings differ in length");
  }
  if (!(km > 0.0) || !std::isfinite(km)) {
    throw Error(Errc::InvalidArgument, "pair distance must be > 0 (self pairs are excluded)");
  }
  std::vector<double> out;
  out.reserve(2 * origin.size() + 1);
  out.insert(out.end(), origin.begin(), origin.end());
  out.insert(out.end(), destination.begin(), destination.end());
  out.push_back(km);
  return out;
}

namespace {

struct Candidate {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

struct ActiveNode {
  int tree_node = 0;
  double sum = 0.0;
  double sumsq = 0.0;
  std::size_t count = 0;
};

/// Column-major training data in canonical row order.
struct TrainingView {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::vector<double>> columns;
  std::vector<std::vector<std::uint32_t>> sorted;  // per feature: rows ordered by value, then row
};

TrainingView canonical_view(const Matrix& x, std::span<const double> y, std::vector<double>& y_out) {
  const std::size_t n = x.rows();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto ra = x.row(a);
    const auto rb = x.row(b);
    for (std::size_t c = 0; c < ra.size(); ++c) {
      if (ra[c] != rb[c]) return ra[c] < rb[c];
    }
    if (y[a] != y[b]) return y[a] < y[b];
    return false;
  });
  TrainingView v;
  v.rows = n;
  v.cols = x.cols();
  v.columns.assign(v.cols, std::vector<double>(n));
  y_out.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto src = x.row(order[r]);
    for (std::size_t c = 0; c < v.cols; ++c) v.columns[c][r] = src[c];
    y_out[r] = y[order[r]];
  }
  v.sorted.resize(v.cols);
  for (std::size_t c = 0; c < v.cols; ++c) {
    auto& s = v.sorted[c];
    s.resize(n);
    std::iota(s.begin(), s.end(), 0u);
    const auto& col = v.columns[c];
    std::stable_sort(s.begin(), s.end(), [&](std::uint32_t a, std::uint32_t b) { return col[a] < col[b]; });
  }
  return v;
}

class TreeBuilder {
 public:
  TreeBuilder(const TrainingView& view, const BoostConfig& config) : view_(view), config_(config) {}

  /// Grows one tree on the residuals; node_of receives each row's leaf.
  RegressionTree build(std::span<const double> residual, std::vector<int>& node_of) const {
    const std::size_t n = view_.rows;
    std::vector<TreeNode> nodes(1);
    node_of.assign(n, 0);
    std::vector<ActiveNode> active(1);
    for (std::size_t i = 0; i < n; ++i) {
      active[0].sum += residual[i];
      active[0].sumsq += residual[i] * residual[i];
    }
    active[0].count = n;
    std::vector<ActiveNode> leaves;

    for (int depth = 0; depth < config_.max_depth && !active.empty(); ++depth) {
      std::vector<int> slot_of(nodes.size(), -1);
      for (std::size_t s = 0; s < active.size(); ++s) slot_of[static_cast<std::size_t>(active[s].tree_node)] = static_cast<int>(s);
      const std::vector<Candidate> best = search(residual, node_of, slot_of, active);

      std::vector<ActiveNode> next;
      std::vector<char> split(active.size(), 0);
      for (std::size_t s = 0; s < active.size(); ++s) {
        if (best[s].feature < 0) {
          leaves.push_back(active[s]);
          continue;
        }
        split[s] = 1;
        const int left = static_cast<int>(nodes.size());
        nodes.emplace_back();
        nodes.emplace_back();
        auto& parent = nodes[static_cast<std::size_t>(active[s].tree_node)];
        parent.feature = best[s].feature;
        parent.threshold = best[s].threshold;
        parent.left = left;
        parent.right = left + 1;
      }
      if (next.capacity() == 0) next.reserve(2 * active.size());
      // Children stats are accumulated in canonical row order.
      std::vector<ActiveNode> children(nodes.size());
      for (std::size_t i = 0; i < n; ++i) {
        const int s = slot_of[static_cast<std::size_t>(node_of[i])];
        if (s < 0 || !split[static_cast<std::size_t>(s)]) continue;
        const auto& parent = nodes[static_cast<std::size_t>(node_of[i])];
        const int child = view_.columns[static_cast<std::size_t>(parent.feature)][i] <= parent.threshold ? parent.left
                                                                                                        : parent.right;
        node_of[i] = child;
        auto& c = children[static_cast<std::size_t>(child)];
        c.tree_node = child;
        c.sum += residual[i];
        c.sumsq += residual[i] * residual[i];
        ++c.count;
      }
      for (std::size_t s = 0; s < active.size(); ++s) {
        if (!split[s]) continue;
        const auto& parent = nodes[static_cast<std::size_t>(active[s].tree_node)];
        next.push_back(children[static_cast<std::size_t>(parent.left)]);
        next.push_back(children[static_cast<std::size_t>(parent.right)]);
      }
      active = std::move(next);
    }
    for (const auto& a : active) leaves.push_back(a);
    for (const auto& leaf : leaves) {
      nodes[static_cast<std::size_t>(leaf.tree_node)].value = leaf.count > 0 ? leaf.sum / static_cast<double>(leaf.count) : 0.0;
    }
    return RegressionTree(std::move(nodes));
  }

 private:
  std::vector<Candidate> search(std::span<const double> residual, const std::vector<int>& node_of,
                                const std::vector<int>& slot_of, const std::vector<ActiveNode>& active) const {
    const std::size_t features = view_.cols;
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(config_.threads), std::max<std::size_t>(features, 1));
    std::vector<std::vector<Candidate>> partial(workers, std::vector<Candidate>(active.size()));
    auto run = [&](std::size_t w) {
      const std::size_t begin = features * w / workers;
      const std::size_t end = features * (w + 1) / workers;
      for (std::size_t f = begin; f < end; ++f) scan_feature(f, residual, node_of, slot_of, active, partial[w]);
    };
    if (workers == 1) {
      run(0);
    } else {
      std::vector<std::thread> pool;
      for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run, w);
      for (auto& t : pool) t.join();
    }
    // Chunks cover increasing feature ranges; strict > keeps the lowest index on ties.
    std::vector<Candidate> best = partial[0];
    for (std::size_t w = 1; w < workers; ++w) {
      for (std::size_t s = 0; s < active.size(); ++s) {
        if (partial[w][s].feature >= 0 && partial[w][s].gain > best[s].gain) best[s] = partial[w][s];
      }
    }
    return best;
  }

  void scan_feature(std::size_t f, std::span<const double> residual, const std::vector<int>& node_of,
                    const std::vector<int>& slot_of, const std::vector<ActiveNode>& active,
                    std::vector<Candidate>& best) const {
    const std::size_t k = active.size();
    const auto msl = static_cast<std::size_t>(config_.min_samples_leaf);
    std::vector<double> left_sum(k, 0.0);
    std::vector<std::size_t> left_count(k, 0);
    std::vector<double> last(k, 0.0);
    const auto& col = view_.columns[f];
    for (std::uint32_t i : view_.sorted[f]) {
      const int s = slot_of[static_cast<std::size_t>(node_of[i])];
      if (s < 0) continue;
      const auto su = static_cast<std::size_t>(s);
      const double x = col[i];
      const std::size_t lc = left_count[su];
      const ActiveNode& node = active[su];
      if (lc > 0 && x != last[su] && lc >= msl && node.count - lc >= msl) {
        const double nl = static_cast<double>(lc);
        const double nr = static_cast<double>(node.count - lc);
        const double sl = left_sum[su];
        const double sr = node.sum - sl;
        const double gain = sl * sl / nl + sr * sr / nr - node.sum * node.sum / static_cast<double>(node.count);
        const double node_sse = node.sumsq - node.sum * node.sum / static_cast<double>(node.count);
        if (gain > best[su].gain && gain > 1e-12 * node_sse && node_sse > 0.0) {
          double mid = 0.5 * (last[su] + x);
          if (!(mid < x)) mid = last[su];
          best[su] = Candidate{gain, static_cast<int>(f), mid};
        }
      }
      left_sum[su] += residual[i];
      ++left_count[su];
      last[su] = x;
    }
  }

  const TrainingView& view_;
  const BoostConfig& config_;
};

double mse_of(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return a.empty() ? 0.0 : s / static_cast<double>(a.size());
}

}  // namespace

TreeEnsemble fit(const Matrix& features, std::span<const double> targets, const Matrix& val_features,
                 std::span<const double> val_targets, const BoostConfig& config, BoostLog* log) {
  config.validate();
  if (features.rows() != targets.size()) throw Error(Errc::DimensionMismatch, "feature rows differ from targets");
  if (features.rows() < 2 * static_cast<std::size_t>(config.min_samples_leaf) || features.rows() == 0) {
    throw Error(Errc::InsufficientData, "need at least 2 * min_samples_leaf training rows, got " +
                                            std::to_string(features.rows()));
  }
  if (!features.all_finite()) throw Error(Errc::NonFiniteValue, "training features contain non-finite values");
  for (double t : targets) {
    if (!std::isfinite(t)) throw Error(Errc::NonFiniteValue, "training targets contain non-finite values");
  }
  const bool have_val = val_features.rows() > 0;
  if (have_val && (val_features.cols() != features.cols() || val_features.rows() != val_targets.size())) {
    throw Error(Errc::DimensionMismatch, "validation set shape mismatch");
  }

  std::vector<double> y;
  const TrainingView view = canonical_view(features, targets, y);
  const std::size_t n = view.rows;

  TreeEnsemble ens;
  ens.learning_rate = config.learning_rate;
  ens.feature_dim = features.cols();
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  if (*lo == *hi) {
    ens.base_score = *lo;
  } else {
    double s = 0.0;
    for (double v : y) s += v;
    ens.base_score = s / static_cast<double>(n);
  }

  std::vector<double> pred(n, ens.base_score);
  std::vector<double> residual(n);
  std::vector<double> val_raw(val_targets.size(), ens.base_score);
  std::vector<double> val_pred(val_targets.size());
  auto val_mse = [&] {
    for (std::size_t i = 0; i < val_raw.size(); ++i) val_pred[i] = std::max(0.0, val_raw[i]);
    return mse_of(val_pred, val_targets);
  };

  BoostLog local;
  BoostLog& out = log ? *log : local;
  out = BoostLog{};
  out.train_mse.push_back(mse_of(pred, y));
  if (have_val) out.val_mse.push_back(val_mse());
  double best_val = have_val ? out.val_mse.back() : 0.0;
  std::size_t best_trees = 0;

  const TreeBuilder builder(view, config);
  std::vector<int> node_of;
  for (int round = 0; round < config.rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - pred[i];
    RegressionTree tree = builder.build(residual, node_of);
    if (tree.nodes().size() == 1) break;  // no split improves the fit
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] += config.learning_rate * tree.nodes()[static_cast<std::size_t>(node_of[i])].value;
    }
    if (have_val) {
      for (std::size_t i = 0; i < val_raw.size(); ++i) val_raw[i] += config.learning_rate * tree.predict(val_features.row(i));
    }
    ens.trees.push_back(std::move(tree));
    out.train_mse.push_back(mse_of(pred, y));
    if (have_val) {
      out.val_mse.push_back(val_mse());
      if (out.val_mse.back() < best_val) {
        best_val = out.val_mse.back();
        best_trees = ens.trees.size();
      } else if (ens.trees.size() - best_trees >= static_cast<std::size_t>(config.early_stop_rounds)) {
        break;
      }
    }
  }
  if (have_val) {
    ens.trees.resize(best_trees);
    out.train_mse.resize(best_trees + 1);
    out.val_mse.resize(best_trees + 1);
    out.best_round = static_cast<int>(best_trees);
  } else {
    out.best_round = static_cast<int>(ens.trees.size());
  }
  return ens;
}

}  // namespace tractflow
