#include "tractflow/numeric/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "tractflow/error.hpp"
#include "tractflow/numeric/random.hpp"

namespace tractflow {

// ---------------------------------------------------------------------------
// ParamStore

Matrix& ParamStore::add(std::string name, Matrix init) {
  if (index_.count(name) != 0) throw Error(Errc::InvalidArgument, "duplicate parameter " + name);
  index_.emplace(name, entries_.size());
  Entry e;
  e.name = std::move(name);
  e.grad = Matrix(init.rows(), init.cols());
  e.value = std::move(init);
  entries_.push_back(std::move(e));
  return entries_.back().value;
}

Matrix& ParamStore::add_glorot(std::string name, std::size_t rows, std::size_t cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.uniform(-limit, limit);
  return add(std::move(name), std::move(m));
}

bool ParamStore::contains(std::string_view name) const { return index_.find(name) != index_.end(); }

std::size_t ParamStore::index_of(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error(Errc::InvalidArgument, "unknown parameter " + std::string(name));
  return it->second;
}

Matrix& ParamStore::value(std::string_view name) { return entries_[index_of(name)].value; }
const Matrix& ParamStore::value(std::string_view name) const { return entries_[index_of(name)].value; }
const Matrix& ParamStore::grad(std::string_view name) const { return entries_[index_of(name)].grad; }

void ParamStore::zero_grad() {
  for (auto& e : entries_) e.grad.fill(0.0);
}

void ParamStore::copy_values_from(const ParamStore& other) {
  if (other.entries_.size() != entries_.size()) {
    throw Error(Errc::SchemaMismatch, "parameter stores differ in size");
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!entries_[i].value.same_shape(other.entries_[i].value) || entries_[i].name != other.entries_[i].name) {
      throw Error(Errc::SchemaMismatch, "parameter " + entries_[i].name + " differs");
    }
    entries_[i].value = other.entries_[i].value;
  }
}

// ---------------------------------------------------------------------------
// Tape

Var Tape::push(Matrix value, bool needs_grad, BackwardFn backward) {
  nodes_.push_back(Node{std::move(value), Matrix(), needs_grad, std::move(backward)});
  return Var{nodes_.size() - 1};
}

Matrix& Tape::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty() && !n.value.empty()) n.grad = Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

Var Tape::constant(Matrix value) { return push(std::move(value), false, nullptr); }

Var Tape::param(ParamStore& store, std::string_view name) {
  const std::size_t idx = store.index_of(name);
  return push(store.entry(idx).value, true, [&store, idx](Tape& t, std::size_t self) {
    store.entry(idx).grad += t.nodes_[self].grad;
  });
}

void Tape::backward(Var loss) {
  const Matrix& lv = nodes_[loss.id].value;
  if (lv.rows() != 1 || lv.cols() != 1) throw Error(Errc::DimensionMismatch, "loss must be 1x1");
  if (!std::isfinite(lv[0])) throw Error(Errc::NonFiniteLoss, "loss evaluated to a non-finite value");
  if (!nodes_[loss.id].needs_grad) return;
  grad_buffer(loss.id)[0] = 1.0;
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.needs_grad || n.grad.empty() || !n.backward) continue;
    n.backward(*this, id);
  }
}

double forward_backward(ParamStore& params, const std::function<Var(Tape&)>& loss_fn) {
  (void)params;  // gradients land in the store through the tape's param bindings
  Tape tape;
  Var loss = loss_fn(tape);
  tape.backward(loss);
  return tape.value(loss)[0];
}

// ---------------------------------------------------------------------------
// Operations

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(Errc::DimensionMismatch, what);
}

}  // namespace

Var matmul(Tape& t, Var a, Var b) {
  Matrix out = matmul(t.value(a), t.value(b));
  const bool ng = t.needs_grad(a) || t.needs_grad(b);
  return t.push(std::move(out), ng, [a, b](Tape& tp, std::size_t self) {
    const Matrix g = tp.grad(Var{self});
    if (tp.needs_grad(a)) tp.grad_buffer(a.id) += matmul_nt(g, tp.value(b));
    if (tp.needs_grad(b)) tp.grad_buffer(b.id) += matmul_tn(tp.value(a), g);
  });
}

Var add(Tape& t, Var a, Var b) {
  require(t.value(a).same_shape(t.value(b)), "add shape mismatch");
  Matrix out = t.value(a);
  out += t.value(b);
  const bool ng = t.needs_grad(a) || t.needs_grad(b);
  return t.push(std::move(out), ng, [a, b](Tape& tp, std::size_t self) {
    const Matrix g = tp.grad(Var{self});
    if (tp.needs_grad(a)) tp.grad_buffer(a.id) += g;
    if (tp.needs_grad(b)) tp.grad_buffer(b.id) += g;
  });
}

Var add_bias(Tape& t, Var a, Var bias) {
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(bias);
  require(bv.rows() == 1 && bv.cols() == av.cols(), "bias shape mismatch");
  Matrix out = av;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += bv[c];
  }
  const bool ng = t.needs_grad(a) || t.needs_grad(bias);
  return t.push(std::move(out), ng, [a, bias](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(Var{self});
    if (tp.needs_grad(a)) tp.grad_buffer(a.id) += g;
    if (tp.needs_grad(bias)) {
      Matrix& gb = tp.grad_buffer(bias.id);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        auto row = g.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) gb[c] += row[c];
      }
    }
  });
}

Var scale(Tape& t, Var a, double factor) {
  Matrix out = t.value(a);
  for (double& v : out.values()) v *= factor;
  return t.push(std::move(out), t.needs_grad(a), [a, factor](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(Var{self});
    Matrix& ga = tp.grad_buffer(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += factor * g[i];
  });
}

Var mul_const(Tape& t, Var a, const Matrix& factors) {
  require(t.value(a).same_shape(factors), "mul_const shape mismatch");
  Matrix out = t.value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= factors[i];
  return t.push(std::move(out), t.needs_grad(a), [a, factors](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(Var{self});
    Matrix& ga = tp.grad_buffer(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += factors[i] * g[i];
  });
}

Var leaky_relu(Tape& t, Var a, double slope) {
  Matrix out = t.value(a);
  for (double& v : out.values()) v = v > 0.0 ? v : slope * v;
  return t.push(std::move(out), t.needs_grad(a), [a, slope](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(Var{self});
    const Matrix& x = tp.value(a);
    Matrix& ga = tp.grad_buffer(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += (x[i] > 0.0 ? 1.0 : slope) * g[i];
  });
}

Var concat_cols(Tape& t, std::span<const Var> parts) {
  require(!parts.empty(), "concat of nothing");
  const std::size_t rows = t.value(parts[0]).rows();
  std::size_t cols = 0;
  bool ng = false;
  for (Var p : parts) {
    require(t.value(p).rows() == rows, "concat row mismatch");
    cols += t.value(p).cols();
    ng = ng || t.needs_grad(p);
  }
  Matrix out(rows, cols);
  std::size_t offset = 0;
  for (Var p : parts) {
    const Matrix& v = t.value(p);
    for (std::size_t r = 0; r < rows; ++r) std::copy_n(v.row(r).data(), v.cols(), out.row(r).data() + offset);
    offset += v.cols();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return t.push(std::move(out), ng, [inputs](Tape& tp, std::size_t self) {
    const Matrix g = tp.grad(Var{self});
    std::size_t off = 0;
    for (Var p : inputs) {
      const std::size_t c = tp.value(p).cols();
      if (tp.needs_grad(p)) {
        Matrix& gp = tp.grad_buffer(p.id);
        for (std::size_t r = 0; r < g.rows(); ++r) {
          for (std::size_t j = 0; j < c; ++j) gp(r, j) += g(r, off + j);
        }
      }
      off += c;
    }
  });
}

Var gather_rows(Tape& t, Var a, std::span<const std::size_t> rows) {
  const Matrix& av = t.value(a);
  Matrix out(rows.size(), av.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require(rows[r] < av.rows(), "gather index out of range");
    std::copy_n(av.row(rows[r]).data(), av.cols(), out.row(r).data());
  }
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return t.push(std::move(out), t.needs_grad(a), [a, idx = std::move(idx)](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(Var{self});
    Matrix& ga = tp.grad_buffer(a.id);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      auto dst = ga.row(idx[r]);
      auto src = g.row(r);
      for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
    }
  });
}

Var mse(Tape& t, Var pred, const Matrix& target) {
  const Matrix& p = t.value(pred);
  require(p.same_shape(target), "mse shape mismatch");
  require(p.size() > 0, "mse of empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - target[i];
    s += d * d;
  }
  const double n = static_cast<double>(p.size());
  return t.push(Matrix(1, 1, s / n), t.needs_grad(pred), [pred, target, n](Tape& tp, std::size_t self) {
    const double g = tp.grad(Var{self})[0];
    const Matrix& pv = tp.value(pred);
    Matrix& gp = tp.grad_buffer(pred.id);
    for (std::size_t i = 0; i < pv.size(); ++i) gp[i] += g * 2.0 * (pv[i] - target[i]) / n;
  });
}

Var edge_scores(Tape& t, Var self_scores, Var neighbor_scores, const NeighborIndex& index) {
  const Matrix& s = t.value(self_scores);
  const Matrix& d = t.value(neighbor_scores);
  const std::size_t n = index.node_count();
  require(s.rows() == n && d.rows() == n && s.cols() == 1 && d.cols() == 1, "edge_scores shape mismatch");
  Matrix out(index.edge_count(), 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = index.offsets[i]; k < index.offsets[i + 1]; ++k) out[k] = s[i] + d[index.targets[k]];
  }
  const bool ng = t.needs_grad(self_scores) || t.needs_grad(neighbor_scores);
  return t.push(std::move(out), ng, [self_scores, neighbor_scores, &index](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(Var{self});
    const std::size_t nodes = index.node_count();
    if (tp.needs_grad(self_scores)) {
      Matrix& gs = tp.grad_buffer(self_scores.id);
      for (std::size_t i = 0; i < nodes; ++i) {
        for (std::size_t k = index.offsets[i]; k < index.offsets[i + 1]; ++k) gs[i] += g[k];
      }
    }
    if (tp.needs_grad(neighbor_scores)) {
      Matrix& gd = tp.grad_buffer(neighbor_scores.id);
      for (std::size_t k = 0; k < index.edge_count(); ++k) gd[index.targets[k]] += g[k];
    }
  });
}

Var neighbor_softmax(Tape& t, Var logits, const NeighborIndex& index) {
  const Matrix& x = t.value(logits);
  require(x.rows() == index.edge_count() && x.cols() == 1, "neighbor_softmax shape mismatch");
  Matrix out(x.rows(), 1);
  for (std::size_t i = 0; i < index.node_count(); ++i) {
    const std::size_t b = index.offsets[i];
    const std::size_t e = index.offsets[i + 1];
    if (b == e) continue;
    double m = x[b];
    for (std::size_t k = b + 1; k < e; ++k) m = std::max(m, x[k]);
    double z = 0.0;
    for (std::size_t k = b; k < e; ++k) {
      out[k] = std::exp(x[k] - m);
      z += out[k];
    }
    for (std::size_t k = b; k < e; ++k) out[k] /= z;
  }
  return t.push(std::move(out), t.needs_grad(logits), [logits, &index](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(Var{self});
    const Matrix& y = tp.value(Var{self});
    Matrix& gx = tp.grad_buffer(logits.id);
    for (std::size_t i = 0; i < index.node_count(); ++i) {
      const std::size_t b = index.offsets[i];
      const std::size_t e = index.offsets[i + 1];
      double dot = 0.0;
      for (std::size_t k = b; k < e; ++k) dot += g[k] * y[k];
      for (std::size_t k = b; k < e; ++k) gx[k] += y[k] * (g[k] - dot);
    }
  });
}

Var neighbor_aggregate(Tape& t, Var weights, Var values, const NeighborIndex& index) {
  const Matrix& w = t.value(weights);
  const Matrix& v = t.value(values);
  require(w.rows() == index.edge_count() && w.cols() == 1, "aggregate weight shape mismatch");
  require(v.rows() == index.node_count(), "aggregate value rows mismatch");
  const std::size_t f = v.cols();
  Matrix out(index.node_count(), f);
  for (std::size_t i = 0; i < index.node_count(); ++i) {
    double* dst = out.row(i).data();
    for (std::size_t k = index.offsets[i]; k < index.offsets[i + 1]; ++k) {
      const double wk = w[k];
      const double* src = v.row(index.targets[k]).data();
      for (std::size_t c = 0; c < f; ++c) dst[c] += wk * src[c];
    }
  }
  const bool ng = t.needs_grad(weights) || t.needs_grad(values);
  return t.push(std::move(out), ng, [weights, values, &index](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(Var{self});
    const Matrix& wv = tp.value(weights);
    const Matrix& vv = tp.value(values);
    const std::size_t cols = vv.cols();
    const bool gw = tp.needs_grad(weights);
    const bool gvv = tp.needs_grad(values);
    Matrix* gwb = gw ? &tp.grad_buffer(weights.id) : nullptr;
    Matrix* gvb = gvv ? &tp.grad_buffer(values.id) : nullptr;
    for (std::size_t i = 0; i < index.node_count(); ++i) {
      const double* gi = g.row(i).data();
      for (std::size_t k = index.offsets[i]; k < index.offsets[i + 1]; ++k) {
        const std::size_t j = index.targets[k];
        if (gwb) {
          const double* vj = vv.row(j).data();
          double s = 0.0;
          for (std::size_t c = 0; c < cols; ++c) s += gi[c] * vj[c];
          (*gwb)[k] += s;
        }
        if (gvb) {
          double* dst = gvb->row(j).data();
          const double wk = wv[k];
          for (std::size_t c = 0; c < cols; ++c) dst[c] += wk * gi[c];
        }
      }
    }
  });
}

}  // namespace tractflow
