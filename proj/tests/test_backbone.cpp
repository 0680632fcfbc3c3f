#include <cmath>
#include <random>

#include "doctest.h"
#include "lrlm/backbone.hpp"

using namespace lrlm;
using ad::Tape;

TEST_CASE("log_sum_exp helper") {
  std::vector<double> xs = {1.0, 2.0, -3.0};
  double z = std::log(std::exp(1.0) + std::exp(2.0) + std::exp(-3.0));
  CHECK(log_sum_exp(xs) == doctest::Approx(z).epsilon(1e-14));
  std::vector<double> inf = {-std::numeric_limits<double>::infinity(), 0.0};
  CHECK(log_sum_exp(inf) == doctest::Approx(0.0));
  auto ls = log_softmax(xs);
  double total = 0.0;
  for (double v : ls) total += std::exp(v);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("lstm step reproduces the hand-computed gate equations") {
  // 1-d input, 1-d hidden: every gate is a scalar sigmoid/tanh.
  RecurrentEncoder enc("t", 1, 1, 1, 0.0);
  auto& L = enc.layers[0];
  // gate order: input, forget, cell, output
  L.w_ih.data = {0.5, -0.3, 0.8, 0.1};
  L.w_hh.data = {0.2, 0.4, -0.6, 0.7};
  L.b.data = {0.05, 1.0, -0.1, 0.3};

  double x = 0.7, h0 = -0.2, c0 = 0.4;
  auto sg = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  double i = sg(0.5 * x + 0.2 * h0 + 0.05);
  double f = sg(-0.3 * x + 0.4 * h0 + 1.0);
  double g = std::tanh(0.8 * x - 0.6 * h0 - 0.1);
  double o = sg(0.1 * x + 0.7 * h0 + 0.3);
  double c1 = f * c0 + i * g;
  double h1 = o * std::tanh(c1);

  RecState st;
  st.h = {{h0}};
  st.c = {{c0}};
  Tape tape;
  TapeState ts = lift_state(tape, st);
  auto out = encoder_step(tape, enc, tape.constant({x}), ts);
  CHECK(tape.val(out)[0] == doctest::Approx(h1).epsilon(1e-14));
  CHECK(tape.val(ts.c[0])[0] == doctest::Approx(c1).epsilon(1e-14));

  RecState st2;
  st2.h = {{h0}};
  st2.c = {{c0}};
  double xv[] = {x};
  ad::Vec ph = plain_encoder_step(enc, xv, st2);
  CHECK(ph[0] == doctest::Approx(h1).epsilon(1e-14));
  CHECK(st2.c[0][0] == doctest::Approx(c1).epsilon(1e-14));
}

TEST_CASE("init sets forget-gate bias to one") {
  std::mt19937_64 rng(3);
  RecurrentEncoder enc("t", 4, 3, 2, 0.0);
  enc.init(rng);
  for (const auto& layer : enc.layers) {
    for (std::size_t j = 3; j < 6; ++j) CHECK(layer.b.data[j] == 1.0);
    CHECK(layer.b.data[0] != 1.0);
  }
}

TEST_CASE("encode_sequence returns n+1 states, first from prior context") {
  std::mt19937_64 rng(4);
  RecurrentEncoder enc("t", 2, 3, 2, 0.0);
  enc.init(rng);
  Tensor emb("emb", {5, 2});
  emb.init_uniform(rng, 2);
  std::vector<int> ids = {1, 4, 0};

  Tape tape;
  RecState init = RecState::zero(enc);
  init.h[1] = {0.3, -0.1, 0.2};  // pretend carried-over context
  RecState fin;
  auto hs = encode_sequence(tape, enc, emb, ids, init, &fin);
  REQUIRE(hs.size() == 4);
  CHECK(tape.val(hs[0]) == init.h[1]);

  // plain path agrees step by step
  RecState st = init;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    ad::Vec h = plain_encoder_step(
        enc, {emb.data.data() + ids[i] * 2, 2}, st);
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(h[j] == doctest::Approx(tape.val(hs[i + 1])[j]).epsilon(1e-13));
  }
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(fin.h[1][j] == doctest::Approx(st.h[1][j]).epsilon(1e-13));
    CHECK(fin.c[0][j] == doctest::Approx(st.c[0][j]).epsilon(1e-13));
  }
}

TEST_CASE("lstm gradients pass central differences") {
  std::mt19937_64 rng(7);
  RecurrentEncoder enc("t", 2, 3, 2, 0.0);
  enc.init(rng);
  Tensor emb("emb", {4, 2});
  emb.init_uniform(rng, 2);
  std::vector<Tensor*> params = enc.tensors();
  params.push_back(&emb);

  std::vector<int> ids = {0, 3, 2, 1};
  auto loss = [&](bool grad) {
    Tape tape;
    auto hs = encode_sequence(tape, enc, emb, ids, RecState::zero(enc));
    Tape::Var parts[] = {tape.sum(hs[1]), tape.sum(hs[4]),
                         tape.dot(hs[2], hs[3])};
    auto out = tape.logsumexp(parts);
    if (grad) tape.backward(out);
    return tape.scalar_val(out);
  };
  // eps large enough that round-off does not swamp the tiny true gradients
  auto res = grad_check(loss, params, 1e-4);
  CAPTURE(res.worst_tensor);
  CHECK(res.max_rel_err < 1e-5);
}

TEST_CASE("bottleneck head shape and gradients") {
  std::mt19937_64 rng(9);
  BottleneckLinear head("h", 7, 3, 4);
  head.init(rng);
  Tensor emb("x", {1, 4});
  emb.init_uniform(rng, 4);

  auto loss = [&](bool grad) {
    Tape tape;
    auto x = tape.row(emb, 0);
    auto ls = tape.log_softmax(head.logits(tape, x));
    auto out = tape.pick(ls, 5);
    if (grad) tape.backward(out);
    return tape.scalar_val(out);
  };
  std::vector<Tensor*> params = head.tensors();
  params.push_back(&emb);
  CHECK(head.out_dim() == 7);
  CHECK(head.bottleneck() == 3);
  CHECK(grad_check(loss, params).max_rel_err < 1e-7);
}

TEST_CASE("adam follows the bias-corrected update rule") {
  Tensor p("p", {1});
  p.data = {1.0};
  Adam adam({0.1});

  // constant gradient 2.0 for two steps; compare against the closed form
  double m = 0.0, v = 0.0, x = 1.0;
  for (int t = 1; t <= 2; ++t) {
    p.zero_grad();
    p.grad[0] = 2.0;
    Tensor* ps[] = {&p};
    adam.step(ps);

    m = 0.9 * m + 0.1 * 2.0;
    v = 0.999 * v + 0.001 * 4.0;
    double mh = m / (1.0 - std::pow(0.9, t));
    double vh = v / (1.0 - std::pow(0.999, t));
    x -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
    CHECK(p.data[0] == doctest::Approx(x).epsilon(1e-14));
  }
}

TEST_CASE("grad_check flags a wrong gradient") {
  Tensor p("p", {2});
  p.data = {0.3, -0.4};
  auto loss = [&](bool grad) {
    double v = p.data[0] * p.data[0] + p.data[1];
    if (grad) {
      p.zero_grad();
      p.grad[0] = 2.0 * p.data[0] + 0.5;  // deliberately off
      p.grad[1] = 1.0;
    }
    return v;
  };
  Tensor* ps[] = {&p};
  CHECK(grad_check(loss, ps).max_rel_err > 0.1);
}
