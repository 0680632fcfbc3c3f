#pragma once
// Differentiable building blocks: multi-layer LSTM encoder, bottleneck
// output head, Adam, numeric helpers, and a finite-difference grad checker.

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lrlm/tape.hpp"
#include "lrlm/tensor.hpp"

namespace lrlm {

// ---------------------------------------------------------------------------
// numeric helpers (non-tape)

double log_sum_exp(std::span<const double> xs);
std::vector<double> log_softmax(std::span<const double> logits);

// ---------------------------------------------------------------------------
// Bottleneck output head: w1 (w2 h + b2) + b1, with bottleneck width K.

struct BottleneckLinear {
  Tensor w1;  // out x K
  Tensor b1;  // out
  Tensor w2;  // K x in
  Tensor b2;  // K

  BottleneckLinear() = default;
  BottleneckLinear(const std::string& name, std::size_t out, std::size_t k,
                   std::size_t in);

  std::size_t out_dim() const { return w1.rows(); }
  std::size_t in_dim() const { return w2.cols(); }
  std::size_t bottleneck() const { return w2.rows(); }

  void init(std::mt19937_64& rng);
  ad::Tape::Var logits(ad::Tape& tape, ad::Tape::Var h);
  std::vector<Tensor*> tensors();
};

// ---------------------------------------------------------------------------
// LSTM encoder

struct LstmLayer {
  Tensor w_ih;  // 4H x in
  Tensor w_hh;  // 4H x H
  Tensor b;     // 4H (gate order: input, forget, cell, output)
};

struct RecurrentEncoder {
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  std::size_t num_layers = 0;
  double dropout = 0.0;  // between layers, training only
  std::vector<LstmLayer> layers;

  RecurrentEncoder() = default;
  RecurrentEncoder(const std::string& name, std::size_t input,
                   std::size_t hidden, std::size_t n_layers, double drop);

  void init(std::mt19937_64& rng);  // uniform weights, forget-gate bias 1
  std::vector<Tensor*> tensors();
};

// Detached recurrent state (plain values; gradients do not flow through it).
struct RecState {
  std::vector<ad::Vec> h, c;  // per layer
  static RecState zero(const RecurrentEncoder& enc);
};

// Recurrent state living on a tape.
struct TapeState {
  std::vector<ad::Tape::Var> h, c;
};

TapeState lift_state(ad::Tape& tape, const RecState& s);
RecState detach_state(const ad::Tape& tape, const TapeState& s);

// One step: consumes input vector x, updates state in place, returns the
// top-layer hidden state. Pass rng to enable inter-layer dropout (training).
ad::Tape::Var encoder_step(ad::Tape& tape, RecurrentEncoder& enc,
                           ad::Tape::Var x, TapeState& state,
                           std::mt19937_64* dropout_rng = nullptr);

// Runs the encoder over embedded ids. Returns N+1 hidden states: the first
// is the initial state's top-layer h (a function of tokens before the
// window), and state i+1 follows consumption of token i. Final recurrent
// state is written to *final if non-null.
std::vector<ad::Tape::Var> encode_sequence(ad::Tape& tape,
                                           RecurrentEncoder& enc,
                                           Tensor& embeddings,
                                           std::span<const int> ids,
                                           const RecState& initial,
                                           RecState* final = nullptr,
                                           std::mt19937_64* dropout_rng = nullptr);

// Forward-only step without a tape (evaluation/sampling paths). Updates the
// state in place and returns the top-layer hidden state. No dropout.
ad::Vec plain_encoder_step(const RecurrentEncoder& enc,
                           std::span<const double> x, RecState& state);

// ---------------------------------------------------------------------------
// Adam

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct Adam {
  AdamConfig cfg;
  std::uint64_t t = 0;
  // first/second moment per tensor, keyed by name for checkpointing
  std::map<std::string, std::pair<ad::Vec, ad::Vec>> moments;

  explicit Adam(AdamConfig c = {}) : cfg(c) {}
  // One bias-corrected update from the grads currently in the tensors.
  void step(std::span<Tensor* const> params);
};

// ---------------------------------------------------------------------------
// Gradient checking

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::string worst_tensor;
  std::size_t worst_index = 0;
};

// loss(true) must compute the loss and leave gradients in the tensors
// (they are zeroed first); loss(false) only evaluates. Coordinates are
// sampled (up to max_coords per tensor) for large tensors.
GradCheckResult grad_check(const std::function<double(bool)>& loss,
                           std::span<Tensor* const> params, double eps = 1e-5,
                           std::size_t max_coords = 24, std::uint64_t seed = 1);

}  // namespace lrlm
