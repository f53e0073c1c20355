#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tractflow/numeric/matrix.hpp"

namespace tractflow {

class Rng;

/// Named trainable matrices with matching gradient accumulators and
/// optimizer state. Insertion order is preserved so serialization and
/// iteration are deterministic.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Matrix value;
    Matrix grad;
    Matrix velocity;  // momentum buffer / Adam first moment
    Matrix second;    // Adam second moment
  };

  /// Adds a parameter; throws InvalidArgument on duplicate names.
  Matrix& add(std::string name, Matrix init);
  /// Adds a parameter initialized uniformly in +-sqrt(6 / (rows + cols)).
  Matrix& add_glorot(std::string name, std::size_t rows, std::size_t cols, Rng& rng);

  bool contains(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;
  Matrix& value(std::string_view name);
  const Matrix& value(std::string_view name) const;
  const Matrix& grad(std::string_view name) const;

  std::span<Entry> entries() noexcept { return entries_; }
  std::span<const Entry> entries() const noexcept { return entries_; }
  Entry& entry(std::size_t i) { return entries_[i]; }
  const Entry& entry(std::size_t i) const { return entries_[i]; }
  std::size_t size() const noexcept { return entries_.size(); }

  void zero_grad();
  /// Copies values only (used for best-epoch snapshots).
  void copy_values_from(const ParamStore& other);

  std::uint64_t init_seed = 0;

 private:
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

/// Compressed neighbor lists. Row i lists the nodes aggregated into node i,
/// in the order summations are performed.
struct NeighborIndex {
  std::vector<std::size_t> offsets;  // size n + 1
  std::vector<std::size_t> targets;  // size nnz

  std::size_t node_count() const noexcept { return offsets.empty() ? 0 : offsets.size() - 1; }
  std::size_t edge_count() const noexcept { return targets.size(); }
};

/// Handle to a value recorded on a Tape.
struct Var {
  std::size_t id = 0;
};

/// Records a sequence of matrix operations and replays it backwards to
/// accumulate gradients into the bound ParamStore entries.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  /// Binds a parameter by name. Gradients flow back into store.grad on backward().
  Var param(ParamStore& store, std::string_view name);

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  /// Gradient buffer of a node; empty until backward() reaches it.
  const Matrix& grad(Var v) const { return nodes_[v.id].grad; }
  bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Back-propagates from a 1x1 node. Throws NonFiniteLoss when the loss is
  /// not finite; in that case no gradient is accumulated.
  void backward(Var loss);

  // Internal API used by the operation implementations.
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;
  Var push(Matrix value, bool needs_grad, BackwardFn backward);
  Matrix& grad_buffer(std::size_t id);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool needs_grad = false;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
};

/// Records the loss on a fresh tape, back-propagates, and returns the loss.
/// Gradients are accumulated (not overwritten) into params. Throws
/// NonFiniteLoss without touching gradients when the loss diverges.
double forward_backward(ParamStore& params, const std::function<Var(Tape&)>& loss_fn);

// Differentiable operations.

Var matmul(Tape& t, Var a, Var b);
Var add(Tape& t, Var a, Var b);
/// a (r x c) + bias (1 x c) broadcast over rows.
Var add_bias(Tape& t, Var a, Var bias);
Var scale(Tape& t, Var a, double factor);
/// Elementwise product with a constant matrix of the same shape.
Var mul_const(Tape& t, Var a, const Matrix& factors);
Var leaky_relu(Tape& t, Var a, double slope = 0.2);
Var concat_cols(Tape& t, std::span<const Var> parts);
Var gather_rows(Tape& t, Var a, std::span<const std::size_t> rows);
/// Mean of squared differences against a constant target; returns 1x1.
Var mse(Tape& t, Var pred, const Matrix& target);
/// Per-edge score self_scores[i] + neighbor_scores[j] for every (i, j) in the
/// index. Inputs are n x 1, output is nnz x 1.
Var edge_scores(Tape& t, Var self_scores, Var neighbor_scores, const NeighborIndex& index);
/// Softmax of nnz x 1 logits within each node's neighbor list.
Var neighbor_softmax(Tape& t, Var logits, const NeighborIndex& index);
/// out[i] = sum_k weights[k] * values[targets[k]] over node i's list.
Var neighbor_aggregate(Tape& t, Var weights, Var values, const NeighborIndex& index);

}  // namespace tractflow
