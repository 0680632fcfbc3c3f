#include "lrlm/tape.hpp"

#include <cmath>
#include <stdexcept>

#include "lrlm/kernels.hpp"

namespace lrlm::ad {

namespace {
const kernels::Kernels& kn() { return kernels::active(); }
}

Tape::Var Tape::push(Vec v, std::function<void(Tape&)> back) {
  nodes_.push_back(Node{std::move(v), {}, std::move(back)});
  return static_cast<Var>(nodes_.size() - 1);
}

Tape::Var Tape::constant(Vec v) { return push(std::move(v)); }

Tape::Var Tape::row(Tensor& table, std::size_t r) {
  std::size_t n = table.cols();
  if (r >= table.rows())
    throw std::out_of_range("row index out of range for " + table.name);
  Vec v(table.data.begin() + r * n, table.data.begin() + (r + 1) * n);
  Tensor* t = &table;
  Var out = push(std::move(v));
  nodes_[out].back = [t, r, n, out](Tape& tp) {
    kn().axpy(n, 1.0, tp.grad(out).data(), t->grad.data() + r * n);
  };
  return out;
}

Tape::Var Tape::matvec(Tensor& w, Var x) {
  std::size_t m = w.rows(), n = w.cols();
  if (dim(x) != n) throw std::invalid_argument("matvec dim mismatch: " + w.name);
  Vec y(m);
  kn().matvec(m, n, w.data.data(), nodes_[x].val.data(), y.data());
  Tensor* t = &w;
  Var out = push(std::move(y));
  nodes_[out].back = [t, x, out, m, n](Tape& tp) {
    const Vec& g = tp.grad(out);
    kn().outer_acc(m, n, g.data(), tp.nodes_[x].val.data(), t->grad.data());
    kn().matvec_t_acc(m, n, t->data.data(), g.data(), tp.grad(x).data());
  };
  return out;
}

Tape::Var Tape::affine(Tensor& w, Var x, Tensor& b) {
  Var y = matvec(w, x);
  std::size_t m = w.rows();
  if (b.size() != m) throw std::invalid_argument("affine bias mismatch: " + b.name);
  Vec v(m);
  kn().add(m, nodes_[y].val.data(), b.data.data(), v.data());
  Tensor* bt = &b;
  Var out = push(std::move(v));
  nodes_[out].back = [bt, y, out, m](Tape& tp) {
    const Vec& g = tp.grad(out);
    kn().axpy(m, 1.0, g.data(), bt->grad.data());
    kn().axpy(m, 1.0, g.data(), tp.grad(y).data());
  };
  return out;
}

Tape::Var Tape::dot(Var a, Var b) {
  if (dim(a) != dim(b)) throw std::invalid_argument("dot dim mismatch");
  std::size_t n = dim(a);
  double s = kn().dot(n, nodes_[a].val.data(), nodes_[b].val.data());
  Var out = push(Vec{s});
  nodes_[out].back = [a, b, out, n](Tape& tp) {
    double g = tp.grad(out)[0];
    kn().axpy(n, g, tp.nodes_[b].val.data(), tp.grad(a).data());
    kn().axpy(n, g, tp.nodes_[a].val.data(), tp.grad(b).data());
  };
  return out;
}

Tape::Var Tape::add(Var a, Var b) {
  if (dim(a) != dim(b)) throw std::invalid_argument("add dim mismatch");
  std::size_t n = dim(a);
  Vec v(n);
  kn().add(n, nodes_[a].val.data(), nodes_[b].val.data(), v.data());
  Var out = push(std::move(v));
  nodes_[out].back = [a, b, out, n](Tape& tp) {
    kn().axpy(n, 1.0, tp.grad(out).data(), tp.grad(a).data());
    kn().axpy(n, 1.0, tp.grad(out).data(), tp.grad(b).data());
  };
  return out;
}

Tape::Var Tape::sub(Var a, Var b) { return add(a, neg(b)); }

Tape::Var Tape::mul(Var a, Var b) {
  if (dim(a) != dim(b)) throw std::invalid_argument("mul dim mismatch");
  std::size_t n = dim(a);
  Vec v(n);
  kn().mul(n, nodes_[a].val.data(), nodes_[b].val.data(), v.data());
  Var out = push(std::move(v));
  nodes_[out].back = [a, b, out, n](Tape& tp) {
    const Vec& g = tp.grad(out);
    const Vec& av = tp.nodes_[a].val;
    const Vec& bv = tp.nodes_[b].val;
    Vec& ga = tp.grad(a);
    Vec& gb = tp.grad(b);
    for (std::size_t i = 0; i < n; ++i) {
      ga[i] += g[i] * bv[i];
      gb[i] += g[i] * av[i];
    }
  };
  return out;
}

Tape::Var Tape::sigmoid(Var a) {
  std::size_t n = dim(a);
  Vec v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 / (1.0 + std::exp(-nodes_[a].val[i]));
  Var out = push(std::move(v));
  nodes_[out].back = [a, out, n](Tape& tp) {
    const Vec& y = tp.nodes_[out].val;
    const Vec& g = tp.grad(out);
    Vec& ga = tp.grad(a);
    for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
  };
  return out;
}

Tape::Var Tape::tanh(Var a) {
  std::size_t n = dim(a);
  Vec v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = std::tanh(nodes_[a].val[i]);
  Var out = push(std::move(v));
  nodes_[out].back = [a, out, n](Tape& tp) {
    const Vec& y = tp.nodes_[out].val;
    const Vec& g = tp.grad(out);
    Vec& ga = tp.grad(a);
    for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
  };
  return out;
}

Tape::Var Tape::scale(Var a, double c) {
  std::size_t n = dim(a);
  Vec v = nodes_[a].val;
  kn().scale(n, c, v.data());
  Var out = push(std::move(v));
  nodes_[out].back = [a, out, c, n](Tape& tp) {
    kn().axpy(n, c, tp.grad(out).data(), tp.grad(a).data());
  };
  return out;
}

Tape::Var Tape::add_const(Var a, double c) {
  std::size_t n = dim(a);
  Vec v = nodes_[a].val;
  for (auto& x : v) x += c;
  Var out = push(std::move(v));
  nodes_[out].back = [a, out, n](Tape& tp) {
    kn().axpy(n, 1.0, tp.grad(out).data(), tp.grad(a).data());
  };
  return out;
}

Tape::Var Tape::slice(Var a, std::size_t off, std::size_t len) {
  if (off + len > dim(a)) throw std::out_of_range("slice out of range");
  Vec v(nodes_[a].val.begin() + off, nodes_[a].val.begin() + off + len);
  Var out = push(std::move(v));
  nodes_[out].back = [a, out, off, len](Tape& tp) {
    kn().axpy(len, 1.0, tp.grad(out).data(), tp.grad(a).data() + off);
  };
  return out;
}

Tape::Var Tape::concat(Var a, Var b) {
  Vec v = nodes_[a].val;
  v.insert(v.end(), nodes_[b].val.begin(), nodes_[b].val.end());
  std::size_t na = dim(a), nb = dim(b);
  Var out = push(std::move(v));
  nodes_[out].back = [a, b, out, na, nb](Tape& tp) {
    kn().axpy(na, 1.0, tp.grad(out).data(), tp.grad(a).data());
    kn().axpy(nb, 1.0, tp.grad(out).data() + na, tp.grad(b).data());
  };
  return out;
}

Tape::Var Tape::pick(Var a, std::size_t idx) {
  if (idx >= dim(a)) throw std::out_of_range("pick out of range");
  Var out = push(Vec{nodes_[a].val[idx]});
  nodes_[out].back = [a, out, idx](Tape& tp) {
    tp.grad(a)[idx] += tp.grad(out)[0];
  };
  return out;
}

Tape::Var Tape::stack(std::span<const Var> scalars) {
  Vec v(scalars.size());
  for (std::size_t i = 0; i < scalars.size(); ++i) v[i] = nodes_[scalars[i]].val[0];
  std::vector<Var> ins(scalars.begin(), scalars.end());
  Var out = push(std::move(v));
  nodes_[out].back = [ins, out](Tape& tp) {
    for (std::size_t i = 0; i < ins.size(); ++i)
      tp.grad(ins[i])[0] += tp.grad(out)[i];
  };
  return out;
}

Tape::Var Tape::log_softmax(Var logits) {
  std::size_t n = dim(logits);
  const Vec& x = nodes_[logits].val;
  double m = kn().max(n, x.data());
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(x[i] - m);
  double lse = m + std::log(s);
  Vec v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = x[i] - lse;
  Var out = push(std::move(v));
  nodes_[out].back = [logits, out, n](Tape& tp) {
    const Vec& y = tp.nodes_[out].val;
    const Vec& g = tp.grad(out);
    double gs = kn().sum(n, g.data());
    Vec& ga = tp.grad(logits);
    for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] - std::exp(y[i]) * gs;
  };
  return out;
}

Tape::Var Tape::logsumexp(std::span<const Var> scalars) {
  if (scalars.empty()) throw std::invalid_argument("logsumexp of empty set");
  Vec x(scalars.size());
  for (std::size_t i = 0; i < scalars.size(); ++i) x[i] = nodes_[scalars[i]].val[0];
  double m = kn().max(x.size(), x.data());
  double s = 0.0;
  for (double xi : x) s += std::exp(xi - m);
  double lse = m + std::log(s);
  std::vector<Var> ins(scalars.begin(), scalars.end());
  Var out = push(Vec{lse});
  nodes_[out].back = [ins, out, lse](Tape& tp) {
    double g = tp.grad(out)[0];
    for (Var in : ins)
      tp.grad(in)[0] += g * std::exp(tp.nodes_[in].val[0] - lse);
  };
  return out;
}

Tape::Var Tape::sum(Var a) {
  std::size_t n = dim(a);
  Var out = push(Vec{kn().sum(n, nodes_[a].val.data())});
  nodes_[out].back = [a, out, n](Tape& tp) {
    double g = tp.grad(out)[0];
    Vec& ga = tp.grad(a);
    for (std::size_t i = 0; i < n; ++i) ga[i] += g;
  };
  return out;
}

Tape::Var Tape::dropout(Var a, double rate, std::mt19937_64& rng) {
  if (rate <= 0.0) return a;
  std::size_t n = dim(a);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vec mask(n);
  double keep = 1.0 - rate;
  for (std::size_t i = 0; i < n; ++i) mask[i] = u(rng) < keep ? 1.0 / keep : 0.0;
  return mul(a, constant(std::move(mask)));
}

void Tape::backward(Var loss) {
  if (dim(loss) != 1) throw std::invalid_argument("backward needs scalar loss");
  for (auto& n : nodes_) n.grad.assign(n.val.size(), 0.0);
  nodes_[loss].grad[0] = 1.0;
  for (Var i = static_cast<Var>(nodes_.size()) - 1; i >= 0; --i)
    if (nodes_[i].back) nodes_[i].back(*this);
}

}  // namespace lrlm::ad
