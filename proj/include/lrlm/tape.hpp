#pragma once
// Reverse-mode autodiff tape over small dense vectors. Every op records a
// backward closure; Tape::backward replays them in reverse creation order.
// Parameter tensors are referenced by pointer and must outlive the tape;
// their gradients accumulate into Tensor::grad.

#include <cstddef>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "lrlm/tensor.hpp"

namespace lrlm::ad {

using Vec = std::vector<double>;

class Tape {
 public:
  using Var = int;

  // ---- leaves ----
  Var constant(Vec v);
  Var scalar(double v) { return constant(Vec{v}); }
  // Row of an embedding table; backward accumulates into that row.
  Var row(Tensor& table, std::size_t r);

  // ---- linear algebra ----
  Var matvec(Tensor& w, Var x);               // w: m x n, x: n -> m
  Var affine(Tensor& w, Var x, Tensor& b);    // w x + b
  Var dot(Var a, Var b);                      // scalar

  // ---- elementwise ----
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var scale(Var a, double c);
  Var neg(Var a) { return scale(a, -1.0); }
  Var add_const(Var a, double c);

  // ---- structure ----
  Var slice(Var a, std::size_t off, std::size_t len);
  Var concat(Var a, Var b);
  Var pick(Var a, std::size_t idx);           // scalar element
  Var stack(std::span<const Var> scalars);    // vector from scalar vars

  // ---- reductions / probability ----
  Var log_softmax(Var logits);
  Var logsumexp(std::span<const Var> scalars);  // scalar
  Var sum(Var a);                                // scalar

  // Inverted-dropout mask; identity when rate == 0.
  Var dropout(Var a, double rate, std::mt19937_64& rng);

  const Vec& val(Var v) const { return nodes_[v].val; }
  double scalar_val(Var v) const { return nodes_[v].val[0]; }
  std::size_t dim(Var v) const { return nodes_[v].val.size(); }

  // Seeds d(loss)/d(loss) = 1 (loss must be scalar) and runs all backward
  // closures in reverse order. Parameter grads accumulate; call
  // Tensor::zero_grad beforehand if a fresh gradient is wanted.
  void backward(Var loss);

  std::size_t num_nodes() const { return nodes_.size(); }

 private:
  struct Node {
    Vec val;
    Vec grad;
    std::function<void(Tape&)> back;  // empty for leaves
  };

  Var push(Vec v, std::function<void(Tape&)> back = {});
  Vec& grad(Var v) { return nodes_[v].grad; }

  std::vector<Node> nodes_;
};

}  // namespace lrlm::ad
