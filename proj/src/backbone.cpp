#include "lrlm/backbone.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lrlm/kernels.hpp"

namespace lrlm {

double log_sum_exp(std::span<const double> xs) {
  if (xs.empty()) return -std::numeric_limits<double>::infinity();
  double m = kernels::active().max(xs.size(), xs.data());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

std::vector<double> log_softmax(std::span<const double> logits) {
  double lse = log_sum_exp(logits);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

// ---------------------------------------------------------------------------

BottleneckLinear::BottleneckLinear(const std::string& name, std::size_t out,
                                   std::size_t k, std::size_t in)
    : w1(name + ".w1", {out, k}),
      b1(name + ".b1", {out}),
      w2(name + ".w2", {k, in}),
      b2(name + ".b2", {k}) {}

void BottleneckLinear::init(std::mt19937_64& rng) {
  w1.init_uniform(rng, bottleneck());
  w2.init_uniform(rng, in_dim());
  b1.fill(0.0);
  b2.fill(0.0);
}

ad::Tape::Var BottleneckLinear::logits(ad::Tape& tape, ad::Tape::Var h) {
  if (tape.dim(h) != in_dim())
    throw std::invalid_argument("bottleneck input dim mismatch: " + w2.name);
  return tape.affine(w1, tape.affine(w2, h, b2), b1);
}

std::vector<Tensor*> BottleneckLinear::tensors() { return {&w1, &b1, &w2, &b2}; }

// ---------------------------------------------------------------------------

RecurrentEncoder::RecurrentEncoder(const std::string& name, std::size_t input,
                                   std::size_t hidden, std::size_t n_layers,
                                   double drop)
    : input_size(input), hidden_size(hidden), num_layers(n_layers),
      dropout(drop) {
  for (std::size_t l = 0; l < n_layers; ++l) {
    std::size_t in = l == 0 ? input : hidden;
    std::string p = name + ".l" + std::to_string(l);
    layers.push_back(LstmLayer{Tensor(p + ".w_ih", {4 * hidden, in}),
                               Tensor(p + ".w_hh", {4 * hidden, hidden}),
                               Tensor(p + ".b", {4 * hidden})});
  }
}

void RecurrentEncoder::init(std::mt19937_64& rng) {
  for (auto& l : layers) {
    l.w_ih.init_uniform(rng, l.w_ih.cols());
    l.w_hh.init_uniform(rng, hidden_size);
    l.b.fill(0.0);
    // forget-gate bias = 1
    for (std::size_t i = hidden_size; i < 2 * hidden_size; ++i) l.b.data[i] = 1.0;
  }
}

std::vector<Tensor*> RecurrentEncoder::tensors() {
  std::vector<Tensor*> out;
  for (auto& l : layers) {
    out.push_back(&l.w_ih);
    out.push_back(&l.w_hh);
    out.push_back(&l.b);
  }
  return out;
}

RecState RecState::zero(const RecurrentEncoder& enc) {
  RecState s;
  s.h.assign(enc.num_layers, ad::Vec(enc.hidden_size, 0.0));
  s.c.assign(enc.num_layers, ad::Vec(enc.hidden_size, 0.0));
  return s;
}

TapeState lift_state(ad::Tape& tape, const RecState& s) {
  TapeState t;
  for (const auto& h : s.h) t.h.push_back(tape.constant(h));
  for (const auto& c : s.c) t.c.push_back(tape.constant(c));
  return t;
}

RecState detach_state(const ad::Tape& tape, const TapeState& s) {
  RecState r;
  for (auto v : s.h) r.h.push_back(tape.val(v));
  for (auto v : s.c) r.c.push_back(tape.val(v));
  return r;
}

ad::Tape::Var encoder_step(ad::Tape& tape, RecurrentEncoder& enc,
                           ad::Tape::Var x, TapeState& state,
                           std::mt19937_64* dropout_rng) {
  using Var = ad::Tape::Var;
  std::size_t H = enc.hidden_size;
  Var input = x;
  for (std::size_t l = 0; l < enc.num_layers; ++l) {
    auto& ly = enc.layers[l];
    Var pre = tape.add(tape.matvec(ly.w_ih, input),
                       tape.affine(ly.w_hh, state.h[l], ly.b));
    Var i = tape.sigmoid(tape.slice(pre, 0, H));
    Var f = tape.sigmoid(tape.slice(pre, H, H));
    Var g = tape.tanh(tape.slice(pre, 2 * H, H));
    Var o = tape.sigmoid(tape.slice(pre, 3 * H, H));
    Var c = tape.add(tape.mul(f, state.c[l]), tape.mul(i, g));
    Var h = tape.mul(o, tape.tanh(c));
    state.c[l] = c;
    state.h[l] = h;
    input = h;
    if (dropout_rng && enc.dropout > 0.0 && l + 1 < enc.num_layers)
      input = tape.dropout(input, enc.dropout, *dropout_rng);
  }
  return input;
}

std::vector<ad::Tape::Var> encode_sequence(ad::Tape& tape,
                                           RecurrentEncoder& enc,
                                           Tensor& embeddings,
                                           std::span<const int> ids,
                                           const RecState& initial,
                                           RecState* final,
                                           std::mt19937_64* dropout_rng) {
  for (int id : ids)
    if (id < 0 || static_cast<std::size_t>(id) >= embeddings.rows())
      throw std::out_of_range("token id out of embedding range");
  TapeState state = lift_state(tape, initial);
  std::vector<ad::Tape::Var> hs;
  hs.push_back(state.h.back());  // h_1: function of the initial state only
  for (int id : ids) {
    ad::Tape::Var x = tape.row(embeddings, static_cast<std::size_t>(id));
    hs.push_back(encoder_step(tape, enc, x, state, dropout_rng));
  }
  if (final) *final = detach_state(tape, state);
  return hs;
}

ad::Vec plain_encoder_step(const RecurrentEncoder& enc,
                           std::span<const double> x, RecState& state) {
  std::size_t H = enc.hidden_size;
  const auto& k = kernels::active();
  ad::Vec input(x.begin(), x.end());
  for (std::size_t l = 0; l < enc.num_layers; ++l) {
    const auto& ly = enc.layers[l];
    ad::Vec pre(4 * H);
    k.matvec(4 * H, input.size(), ly.w_ih.data.data(), input.data(), pre.data());
    ad::Vec hh(4 * H);
    k.matvec(4 * H, H, ly.w_hh.data.data(), state.h[l].data(), hh.data());
    for (std::size_t i = 0; i < 4 * H; ++i) pre[i] += hh[i] + ly.b.data[i];
    ad::Vec h(H);
    for (std::size_t j = 0; j < H; ++j) {
      double ig = 1.0 / (1.0 + std::exp(-pre[j]));
      double fg = 1.0 / (1.0 + std::exp(-pre[H + j]));
      double gg = std::tanh(pre[2 * H + j]);
      double og = 1.0 / (1.0 + std::exp(-pre[3 * H + j]));
      double c = fg * state.c[l][j] + ig * gg;
      state.c[l][j] = c;
      h[j] = og * std::tanh(c);
    }
    state.h[l] = h;
    input = std::move(h);
  }
  return input;
}

// ---------------------------------------------------------------------------

void Adam::step(std::span<Tensor* const> params) {
  ++t;
  double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (Tensor* p : params) {
    auto& [m, v] = moments[p->name];
    if (m.empty()) {
      m.assign(p->size(), 0.0);
      v.assign(p->size(), 0.0);
    }
    if (m.size() != p->size())
      throw std::invalid_argument("adam state shape mismatch: " + p->name);
    for (std::size_t i = 0; i < p->size(); ++i) {
      double g = p->grad[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
      double mhat = m[i] / bc1;
      double vhat = v[i] / bc2;
      p->data[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

// ---------------------------------------------------------------------------

GradCheckResult grad_check(const std::function<double(bool)>& loss,
                           std::span<Tensor* const> params, double eps,
                           std::size_t max_coords, std::uint64_t seed) {
  for (Tensor* p : params) p->zero_grad();
  loss(true);
  std::vector<std::vector<double>> saved_grads;
  for (Tensor* p : params) saved_grads.push_back(p->grad);

  std::mt19937_64 rng(seed);
  GradCheckResult res;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor* p = params[pi];
    std::vector<std::size_t> coords;
    if (p->size() <= max_coords) {
      for (std::size_t i = 0; i < p->size(); ++i) coords.push_back(i);
    } else {
      std::uniform_int_distribution<std::size_t> dist(0, p->size() - 1);
      for (std::size_t i = 0; i < max_coords; ++i) coords.push_back(dist(rng));
    }
    for (std::size_t i : coords) {
      double orig = p->data[i];
      p->data[i] = orig + eps;
      double lp = loss(false);
      p->data[i] = orig - eps;
      double lm = loss(false);
      p->data[i] = orig;
      double fd = (lp - lm) / (2.0 * eps);
      double g = saved_grads[pi][i];
      double denom = std::max({std::abs(g), std::abs(fd), 1e-8});
      double rel = std::abs(g - fd) / denom;
      if (rel > res.max_rel_err) {
        res.max_rel_err = rel;
        res.worst_tensor = p->name;
        res.worst_index = i;
      }
    }
  }
  for (std::size_t pi = 0; pi < params.size(); ++pi)
    params[pi]->grad = saved_grads[pi];
  return res;
}

}  // namespace lrlm
