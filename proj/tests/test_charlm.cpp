#include <cmath>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "lrlm/charlm.hpp"
#include "lrlm/checkpoint.hpp"

using namespace lrlm;

namespace {

CharModel make_model(std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  return CharModel({"abc", "cab", "bb", "aa"}, 4, 6, rng);
}

}  // namespace

TEST_CASE("nll equals the negative forward log probability") {
  CharModel cm = make_model();
  for (const std::string& w : {"abc", "a", "cc"}) {
    ad::Tape tape;
    double nll = tape.scalar_val(cm.nll(tape, w));
    CHECK(nll == doctest::Approx(-cm.log_prob(w)).epsilon(1e-12));
  }
}

TEST_CASE("probabilities over fixed-length spellings are consistent") {
  CharModel cm = make_model();
  // alphabet is {a, b, c}; total mass of all words of length <= 2 plus the
  // mass of longer continuations must equal 1. Enumerate exactly.
  const std::string chars = "abc";
  double mass = std::exp(cm.log_prob(""));
  for (char c1 : chars) {
    mass += std::exp(cm.log_prob(std::string(1, c1)));
    for (char c2 : chars)
      mass += std::exp(cm.log_prob(std::string{c1, c2}));
  }
  CHECK(mass < 1.0);
  CHECK(mass > 0.1);  // most mass sits on short words for a fresh model

  // each log_prob must itself be a valid probability
  CHECK(cm.log_prob("abcabc") < 0.0);
}

TEST_CASE("unseen bytes map to the unknown symbol") {
  CharModel cm = make_model();
  // 'z' was not in the training words; both unseen bytes score identically
  CHECK(cm.log_prob("z") == doctest::Approx(cm.log_prob("q")));
  CHECK(cm.log_prob("az") == doctest::Approx(cm.log_prob("aq")));
  CHECK(cm.log_prob("a") != doctest::Approx(cm.log_prob("z")));
}

TEST_CASE("training a few steps lowers the loss on the training words") {
  CharModel cm = make_model();
  std::vector<std::string> words = {"abc", "cab", "bb", "aa"};
  auto avg_nll = [&] {
    double s = 0.0;
    for (const auto& w : words) s -= cm.log_prob(w);
    return s / static_cast<double>(words.size());
  };
  double before = avg_nll();
  Adam adam({1e-2});
  auto tensors = cm.trainable_tensors();
  for (int epoch = 0; epoch < 20; ++epoch) {
    for (const auto& w : words) {
      ad::Tape tape;
      auto loss = cm.nll(tape, w);
      for (Tensor* t : tensors) t->zero_grad();
      tape.backward(loss);
      adam.step(tensors);
    }
  }
  CHECK(avg_nll() < before - 0.5);
}

TEST_CASE("sampling is deterministic per seed and never empty") {
  CharModel cm = make_model();
  std::mt19937_64 r1(5), r2(5), r3(6);
  auto [w1, lp1] = cm.sample(r1, 1.0);
  auto [w2, lp2] = cm.sample(r2, 1.0);
  CHECK(w1 == w2);
  CHECK(lp1 == lp2);
  CHECK(!w1.empty());
  CHECK(lp1 < 0.0);
  bool any_diff = false;
  for (int i = 0; i < 10; ++i) {
    auto [w, lp] = cm.sample(r3, 1.0);
    CHECK(!w.empty());
    if (w != w1) any_diff = true;
  }
  CHECK(any_diff);
}

TEST_CASE("char model round-trips through a checkpoint") {
  CharModel cm = make_model(42);
  auto path = (std::filesystem::temp_directory_path() / "char_rt.ckpt").string();
  auto tensors = cm.tensors();
  save_checkpoint(path, tensors);

  CharModel fresh = make_model(7);  // different init, same architecture
  auto fresh_tensors = fresh.tensors();
  load_checkpoint(path, fresh_tensors);
  fresh.rebuild_alphabet();
  for (const std::string& w : {"abc", "zq", "bbb", ""})
    CHECK(fresh.log_prob(w) == cm.log_prob(w));
}

TEST_CASE("trainable tensors exclude the persisted alphabet") {
  CharModel cm = make_model();
  auto all = cm.tensors();
  auto trainable = cm.trainable_tensors();
  CHECK(all.size() == trainable.size() + 1);
  for (Tensor* t : trainable) CHECK(t->name != "char.alphabet");
}
