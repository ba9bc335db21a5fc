#include "upgd/tape.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <string>

#include "upgd/errors.hpp"

namespace upgd {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ContractError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) +
                        "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                        "x" + std::to_string(b.cols()));
  }
}

template <class F>
Tensor map(const Tensor& a, F f) {
  Tensor out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

template <class F>
Tensor zip(const Tensor& a, const Tensor& b, F f) {
  Tensor out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
  return out;
}

void accumulate(std::vector<Tensor>& adj, std::size_t id, const Tensor& g) {
  if (adj[id].size() == 0) {
    adj[id] = g;
  } else {
    adj[id] += g;
  }
}

}  // namespace

const Tensor& Var::value() const { return tape->value(*this); }

const Tensor& Gradients::operator[](Var leaf) const { return grads_.at(leaf.id); }

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

void Tape::check_owner(Var v) const {
  if (v.tape != this || v.id >= nodes_.size()) {
    throw ContractError("variable does not belong to this tape");
  }
}

Var Tape::leaf(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::binary(Op op, Var a, Var b, Tensor value) {
  check_owner(a);
  check_owner(b);
  Node n;
  n.op = op;
  n.in0 = a.id;
  n.in1 = b.id;
  n.arity = 2;
  n.requires_grad = nodes_[a.id].requires_grad || nodes_[b.id].requires_grad;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::unary(Op op, Var a, Tensor value, double scalar) {
  check_owner(a);
  Node n;
  n.op = op;
  n.in0 = a.id;
  n.arity = 1;
  n.requires_grad = nodes_[a.id].requires_grad;
  n.value = std::move(value);
  n.scalar = scalar;
  return push(std::move(n));
}

Var Tape::gather(Var a, std::vector<std::size_t> index, std::size_t rows, std::size_t cols) {
  check_owner(a);
  const Tensor& src = nodes_[a.id].value;
  if (index.size() != rows * cols) throw ContractError("gather: index length != rows*cols");
  Tensor out(rows, cols);
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= src.size()) throw ContractError("gather: index out of range");
    out[i] = src[index[i]];
  }
  Var v = unary(Op::kGather, a, std::move(out));
  nodes_[v.id].index = std::move(index);
  return v;
}

Var Tape::clip(Var a, Tensor lo, Tensor hi) {
  check_owner(a);
  const Tensor& x = nodes_[a.id].value;
  require_same_shape(x, lo, "clip");
  require_same_shape(x, hi, "clip");
  Tensor out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::min(std::max(x[i], lo[i]), hi[i]);
  Var v = unary(Op::kClip, a, std::move(out));
  nodes_[v.id].lo = std::move(lo);
  nodes_[v.id].hi = std::move(hi);
  return v;
}

Var Tape::capped_simplex(Var a, std::size_t begin, std::size_t count, double cap) {
  check_owner(a);
  const Tensor& x = nodes_[a.id].value;
  if (begin + count > x.size()) throw ContractError("capped_simplex: block out of range");
  Tensor out = x;
  const auto proj = project_capped_simplex(x.data().subspan(begin, count), cap);
  bool shifted = false;
  for (std::size_t i = 0; i < count; ++i) {
    shifted = shifted || proj[i] != std::max(x[begin + i], 0.0);
    out[begin + i] = proj[i];
  }
  Var v = unary(Op::kCappedSimplex, a, std::move(out), cap);
  nodes_[v.id].flag = shifted;
  nodes_[v.id].begin = begin;
  nodes_[v.id].count = count;
  return v;
}

Gradients Tape::backward(Var output) {
  check_owner(output);
  if (consumed_) throw ContractError("tape already consumed by a backward pass");
  if (nodes_[output.id].value.size() != 1) {
    throw ContractError("backward requires a scalar output");
  }
  consumed_ = true;

  std::vector<Tensor> adj(nodes_.size());
  adj[output.id] = Tensor::scalar(1.0);
  for (std::size_t id = output.id + 1; id-- > 0;) {
    if (adj[id].size() == 0) continue;
    const Node& n = nodes_[id];
    if (!n.value.all_finite()) throw NumericError("non-finite value at node " + std::to_string(id), id);
    if (!adj[id].all_finite()) {
      throw NumericError("non-finite adjoint at node " + std::to_string(id), id);
    }
    if (n.arity > 0 && n.requires_grad) propagate(id, adj);
  }

  std::vector<Tensor> grads(nodes_.size());
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    const Node& n = nodes_[id];
    if (n.op != Op::kLeaf || !n.requires_grad) continue;
    grads[id] = adj[id].size() == 0 ? Tensor(n.value.rows(), n.value.cols()) : std::move(adj[id]);
  }
  return Gradients(std::move(grads));
}

void Tape::propagate(std::size_t id, std::vector<Tensor>& adj) const {
  const Node& n = nodes_[id];
  const Tensor& g = adj[id];
  const Tensor& y = n.value;
  const Node& a = nodes_[n.in0];
  const bool ga = a.requires_grad;
  const bool gb = n.arity == 2 && nodes_[n.in1].requires_grad;
  const Tensor& x = a.value;

  switch (n.op) {
    case Op::kLeaf:
      break;
    case Op::kAdd:
      if (ga) accumulate(adj, n.in0, g);
      if (gb) accumulate(adj, n.in1, g);
      break;
    case Op::kSub:
      if (ga) accumulate(adj, n.in0, g);
      if (gb) accumulate(adj, n.in1, map(g, [](double v) { return -v; }));
      break;
    case Op::kMul: {
      const Tensor& b = nodes_[n.in1].value;
      if (ga) accumulate(adj, n.in0, zip(g, b, [](double u, double v) { return u * v; }));
      if (gb) accumulate(adj, n.in1, zip(g, x, [](double u, double v) { return u * v; }));
      break;
    }
    case Op::kDiv: {
      const Tensor& b = nodes_[n.in1].value;
      if (ga) accumulate(adj, n.in0, zip(g, b, [](double u, double v) { return u / v; }));
      if (gb) {
        Tensor gbv(b.rows(), b.cols());
        for (std::size_t i = 0; i < b.size(); ++i) gbv[i] = -g[i] * y[i] / b[i];
        accumulate(adj, n.in1, gbv);
      }
      break;
    }
    case Op::kAddScalar:
      accumulate(adj, n.in0, g);
      break;
    case Op::kScale: {
      const double c = n.scalar;
      accumulate(adj, n.in0, map(g, [c](double v) { return c * v; }));
      break;
    }
    case Op::kMatMul: {
      const Tensor& b = nodes_[n.in1].value;
      if (ga) accumulate(adj, n.in0, matmul(g, b.transposed()));
      if (gb) accumulate(adj, n.in1, matmul(x.transposed(), g));
      break;
    }
    case Op::kTranspose:
      accumulate(adj, n.in0, g.transposed());
      break;
    case Op::kTanh:
      accumulate(adj, n.in0, zip(g, y, [](double u, double t) { return u * (1.0 - t * t); }));
      break;
    case Op::kRelu:
      accumulate(adj, n.in0, zip(g, x, [](double u, double v) { return v > 0.0 ? u : 0.0; }));
      break;
    case Op::kExp:
      accumulate(adj, n.in0, zip(g, y, [](double u, double e) { return u * e; }));
      break;
    case Op::kLog:
      accumulate(adj, n.in0, zip(g, x, [](double u, double v) { return u / v; }));
      break;
    case Op::kSqrt:
      accumulate(adj, n.in0, zip(g, y, [](double u, double r) { return u / (2.0 * r); }));
      break;
    case Op::kSum:
      accumulate(adj, n.in0, Tensor(x.rows(), x.cols(), g.item()));
      break;
    case Op::kMean:
      accumulate(adj, n.in0, Tensor(x.rows(), x.cols(), g.item() / static_cast<double>(x.size())));
      break;
    case Op::kMeanRows: {
      Tensor d(x.rows(), x.cols());
      const double inv = 1.0 / static_cast<double>(x.rows());
      for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t c = 0; c < x.cols(); ++c) d(r, c) = g(0, c) * inv;
      accumulate(adj, n.in0, d);
      break;
    }
    case Op::kGather: {
      Tensor d(x.rows(), x.cols());
      for (std::size_t i = 0; i < n.index.size(); ++i) d[n.index[i]] += g[i];
      accumulate(adj, n.in0, d);
      break;
    }
    case Op::kConcatRows: {
      const Tensor& b = nodes_[n.in1].value;
      const std::size_t split = x.size();
      if (ga) {
        Tensor d(x.rows(), x.cols());
        std::copy_n(g.data().begin(), split, d.data().begin());
        accumulate(adj, n.in0, d);
      }
      if (gb) {
        Tensor d(b.rows(), b.cols());
        std::copy_n(g.data().begin() + static_cast<std::ptrdiff_t>(split), b.size(), d.data().begin());
        accumulate(adj, n.in1, d);
      }
      break;
    }
    case Op::kConcatCols: {
      const Tensor& b = nodes_[n.in1].value;
      if (ga) {
        Tensor d(x.rows(), x.cols());
        for (std::size_t r = 0; r < x.rows(); ++r)
          for (std::size_t c = 0; c < x.cols(); ++c) d(r, c) = g(r, c);
        accumulate(adj, n.in0, d);
      }
      if (gb) {
        Tensor d(b.rows(), b.cols());
        for (std::size_t r = 0; r < b.rows(); ++r)
          for (std::size_t c = 0; c < b.cols(); ++c) d(r, c) = g(r, x.cols() + c);
        accumulate(adj, n.in1, d);
      }
      break;
    }
    case Op::kClip: {
      Tensor d(x.rows(), x.cols());
      for (std::size_t i = 0; i < x.size(); ++i) {
        const bool inside = x[i] >= n.lo[i] && x[i] <= n.hi[i];
        d[i] = inside ? g[i] : 0.0;
      }
      accumulate(adj, n.in0, d);
      break;
    }
    case Op::kCappedSimplex: {
      Tensor d = g;
      const auto q_in = x.data().subspan(n.begin, n.count);
      const auto q_out = y.data().subspan(n.begin, n.count);
      if (!n.flag) {
        for (std::size_t i = 0; i < n.count; ++i) d[n.begin + i] = q_in[i] > 0.0 ? g[n.begin + i] : 0.0;
      } else {
        // Active coordinates share a common shift tau with d tau / d q_j = 1/|S| for j in S.
        double g_mean = 0.0;
        std::size_t active = 0;
        for (std::size_t i = 0; i < n.count; ++i) {
          if (q_out[i] > 0.0) {
            g_mean += g[n.begin + i];
            ++active;
          }
        }
        g_mean = active > 0 ? g_mean / static_cast<double>(active) : 0.0;
        for (std::size_t i = 0; i < n.count; ++i) {
          d[n.begin + i] = q_out[i] > 0.0 ? g[n.begin + i] - g_mean : 0.0;
        }
      }
      accumulate(adj, n.in0, d);
      break;
    }
  }
}

std::vector<double> project_capped_simplex(std::span<const double> q, double cap) {
  std::vector<double> out(q.size());
  double clipped_sum = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    out[i] = std::max(q[i], 0.0);
    clipped_sum += out[i];
  }
  // Slack of a few ulps keeps the projection idempotent in floating point.
  const double slack = static_cast<double>(q.size() + 2) * DBL_EPSILON * std::abs(cap);
  if (clipped_sum <= cap + slack) return out;

  // Shift-and-reclip: the active set only shrinks, so at most |q| rounds.
  std::vector<bool> active(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) active[i] = q[i] > 0.0;
  double tau = 0.0;
  for (std::size_t round = 0; round <= q.size(); ++round) {
    double s = 0.0;
    std::size_t m = 0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      if (active[i]) {
        s += q[i];
        ++m;
      }
    }
    tau = (s - cap) / static_cast<double>(m);
    bool changed = false;
    for (std::size_t i = 0; i < q.size(); ++i) {
      if (active[i] && q[i] - tau <= 0.0) {
        active[i] = false;
        changed = true;
      }
    }
    if (!changed) break;
  }
  for (std::size_t i = 0; i < q.size(); ++i) out[i] = active[i] ? q[i] - tau : 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Operators

namespace {
Tape& tape_of(Var a) {
  if (a.tape == nullptr) throw ContractError("variable is not attached to a tape");
  return *a.tape;
}
}  // namespace

Var operator+(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "add");
  return tape_of(a).binary(Tape::Op::kAdd, a, b, zip(a.value(), b.value(), std::plus<>{}));
}

Var operator-(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "sub");
  return tape_of(a).binary(Tape::Op::kSub, a, b, zip(a.value(), b.value(), std::minus<>{}));
}

Var operator*(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "mul");
  return tape_of(a).binary(Tape::Op::kMul, a, b, zip(a.value(), b.value(), std::multiplies<>{}));
}

Var operator/(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "div");
  return tape_of(a).binary(Tape::Op::kDiv, a, b, zip(a.value(), b.value(), std::divides<>{}));
}

Var operator+(Var a, double c) {
  return tape_of(a).unary(Tape::Op::kAddScalar, a, map(a.value(), [c](double v) { return v + c; }), c);
}
Var operator+(double c, Var a) { return a + c; }
Var operator-(Var a, double c) { return a + (-c); }
Var operator-(double c, Var a) { return (-a) + c; }

Var operator*(double c, Var a) {
  return tape_of(a).unary(Tape::Op::kScale, a, map(a.value(), [c](double v) { return c * v; }), c);
}
Var operator*(Var a, double c) { return c * a; }
Var operator-(Var a) { return -1.0 * a; }

Var matmul(Var a, Var b) {
  return tape_of(a).binary(Tape::Op::kMatMul, a, b, matmul(a.value(), b.value()));
}

Var transpose(Var a) { return tape_of(a).unary(Tape::Op::kTranspose, a, a.value().transposed()); }

Var tanh(Var a) {
  return tape_of(a).unary(Tape::Op::kTanh, a, map(a.value(), [](double v) { return std::tanh(v); }));
}

Var relu(Var a) {
  return tape_of(a).unary(Tape::Op::kRelu, a, map(a.value(), [](double v) { return v > 0.0 ? v : 0.0; }));
}

Var exp(Var a) {
  return tape_of(a).unary(Tape::Op::kExp, a, map(a.value(), [](double v) { return std::exp(v); }));
}

Var log(Var a) {
  return tape_of(a).unary(Tape::Op::kLog, a, map(a.value(), [](double v) { return std::log(v); }));
}

Var sqrt(Var a) {
  return tape_of(a).unary(Tape::Op::kSqrt, a, map(a.value(), [](double v) { return std::sqrt(v); }));
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return tape_of(a).unary(Tape::Op::kSum, a, Tensor::scalar(s));
}

Var mean(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return tape_of(a).unary(Tape::Op::kMean, a, Tensor::scalar(s / static_cast<double>(a.value().size())));
}

Var mean_rows(Var a) {
  const Tensor& x = a.value();
  if (x.rows() == 0) throw ContractError("mean_rows of an empty matrix");
  Tensor out(1, x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) out(0, c) += x(r, c);
  for (std::size_t c = 0; c < x.cols(); ++c) out(0, c) /= static_cast<double>(x.rows());
  return tape_of(a).unary(Tape::Op::kMeanRows, a, std::move(out));
}

Var gather(Var a, std::vector<std::size_t> index, std::size_t rows, std::size_t cols) {
  return tape_of(a).gather(a, std::move(index), rows, cols);
}

Var entry(Var a, std::size_t flat_index) { return gather(a, {flat_index}, 1, 1); }

Var concat_rows(Var a, Var b) {
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (x.cols() != y.cols()) throw ContractError("concat_rows: column counts differ");
  Tensor out(x.rows() + y.rows(), x.cols());
  std::copy(x.data().begin(), x.data().end(), out.data().begin());
  std::copy(y.data().begin(), y.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(x.size()));
  return tape_of(a).binary(Tape::Op::kConcatRows, a, b, std::move(out));
}

Var concat_cols(Var a, Var b) {
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (x.rows() != y.rows()) throw ContractError("concat_cols: row counts differ");
  Tensor out(x.rows(), x.cols() + y.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) = x(r, c);
    for (std::size_t c = 0; c < y.cols(); ++c) out(r, x.cols() + c) = y(r, c);
  }
  return tape_of(a).binary(Tape::Op::kConcatCols, a, b, std::move(out));
}

Var clip(Var a, Tensor lo, Tensor hi) { return tape_of(a).clip(a, std::move(lo), std::move(hi)); }

Var capped_simplex(Var a, std::size_t begin, std::size_t count, double cap) {
  return tape_of(a).capped_simplex(a, begin, count, cap);
}

}  // namespace upgd
