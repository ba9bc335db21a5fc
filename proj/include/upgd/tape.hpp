#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "upgd/tensor.hpp"

namespace upgd {

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; only valid while
/// the owning tape is alive.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

/// Gradients of one scalar output with respect to the leaves of a tape.
class Gradients {
 public:
  Gradients() = default;
  explicit Gradients(std::vector<Tensor> per_node) : grads_(std::move(per_node)) {}

  /// Gradient w.r.t. a leaf. Leaves the output does not depend on get zeros.
  const Tensor& operator[](Var leaf) const;

 private:
  std::vector<Tensor> grads_;
};

/// Reverse-mode recorder. Nodes are appended in evaluation order, so the
/// node list is always a topological order of the computation.
///
/// A tape supports exactly one backward pass; build a fresh tape for every
/// evaluation. Tapes are single-owner and not thread-safe.
class Tape {
 public:
  enum class Op : std::uint8_t {
    kLeaf,
    kAdd,
    kSub,
    kMul,
    kDiv,
    kAddScalar,
    kScale,
    kMatMul,
    kTranspose,
    kTanh,
    kRelu,
    kExp,
    kLog,
    kSqrt,
    kSum,
    kMean,
    kMeanRows,
    kGather,
    kConcatRows,
    kConcatCols,
    kClip,
    kCappedSimplex,
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Differentiable input (parameter). Its gradient is reported by backward().
  Var leaf(Tensor value);
  /// Non-differentiable input.
  Var constant(Tensor value);

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  std::size_t size() const noexcept { return nodes_.size(); }
  bool consumed() const noexcept { return consumed_; }

  /// d output / d leaf for every leaf. `output` must be 1x1.
  /// Throws ContractError for a non-scalar output or a second call,
  /// NumericError (with the node index) when a non-finite value appears.
  Gradients backward(Var output);

  // Node constructors used by the free-function operators below.
  Var binary(Op op, Var a, Var b, Tensor value);
  Var unary(Op op, Var a, Tensor value, double scalar = 0.0);
  Var gather(Var a, std::vector<std::size_t> index, std::size_t rows, std::size_t cols);
  Var clip(Var a, Tensor lo, Tensor hi);
  Var capped_simplex(Var a, std::size_t begin, std::size_t count, double cap);

 private:
  struct Node {
    Op op = Op::kLeaf;
    std::size_t in0 = 0;
    std::size_t in1 = 0;
    std::uint8_t arity = 0;
    bool requires_grad = false;
    Tensor value;
    double scalar = 0.0;
    std::vector<std::size_t> index;
    Tensor lo;
    Tensor hi;
    std::size_t begin = 0;
    std::size_t count = 0;
    bool flag = false;
  };

  Var push(Node node);
  void check_owner(Var v) const;
  void propagate(std::size_t id, std::vector<Tensor>& adj) const;

  std::vector<Node> nodes_;
  bool consumed_ = false;
};

// Elementwise arithmetic (operands must have identical shapes).
Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator/(Var a, Var b);
Var operator+(Var a, double c);
Var operator+(double c, Var a);
Var operator-(Var a, double c);
Var operator-(double c, Var a);
Var operator*(double c, Var a);
Var operator*(Var a, double c);
Var operator-(Var a);

Var matmul(Var a, Var b);
Var transpose(Var a);
Var tanh(Var a);
/// max(x, 0); derivative at exactly 0 is 0.
Var relu(Var a);
Var exp(Var a);
Var log(Var a);
Var sqrt(Var a);
/// Sum of all entries, 1x1.
Var sum(Var a);
/// Mean of all entries, 1x1.
Var mean(Var a);
/// Column means of an r x c matrix, 1 x c.
Var mean_rows(Var a);
/// out.data[i] = a.data[index[i]], reshaped to rows x cols.
Var gather(Var a, std::vector<std::size_t> index, std::size_t rows, std::size_t cols);
/// Single entry as 1x1.
Var entry(Var a, std::size_t flat_index);
Var concat_rows(Var a, Var b);
Var concat_cols(Var a, Var b);
/// Elementwise min(max(x, lo), hi). When lo > hi the upper bound wins.
/// Derivative is 1 where lo <= x <= hi and 0 elsewhere.
Var clip(Var a, Tensor lo, Tensor hi);
/// Euclidean projection of entries [begin, begin+count) onto
/// {q >= 0, sum q <= cap}; other entries pass through unchanged.
Var capped_simplex(Var a, std::size_t begin, std::size_t count, double cap);

/// Projection of q onto {q >= 0, sum q <= cap}, shared by the tape op and
/// the plain projection path so both give bit-identical results.
std::vector<double> project_capped_simplex(std::span<const double> q, double cap);

}  // namespace upgd
