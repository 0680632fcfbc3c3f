#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>

#include "doctest.h"
#include "fixtures.hpp"
#include "lrlm/training.hpp"

using namespace lrlm;
using testfix::tiny_doc;
using testfix::tiny_params;

namespace {

SpanMatch mk_match(int start, int end) {
  SpanMatch m;
  m.start = start;
  m.end = end;
  m.edge = {"t", "r", "o"};
  m.edge_index = 0;
  m.alias_index = 0;
  return m;
}

std::vector<TrainDoc> small_corpus(const LrlmParams& p) {
  return {
      tiny_doc(p, {"the", "red", "fox", "sees", "a", "blue", "jay"}, "a"),
      tiny_doc(p, {"rema", "sees", "the", "blue", "jay", "today"}, "b"),
      tiny_doc(p, {"a", "fox", "today"}, "c"),
      tiny_doc(p, {"the", "red", "fox", "today", "sees", "rema"}, "d"),
  };
}

}  // namespace

TEST_CASE("window bounds tile the document and respect span crossings") {
  // no matches: plain fixed-width cuts
  auto plain = window_bounds(10, 4, {});
  REQUIRE(plain.size() == 3);
  CHECK(plain[0] == std::pair<int, int>{1, 4});
  CHECK(plain[1] == std::pair<int, int>{5, 8});
  CHECK(plain[2] == std::pair<int, int>{9, 10});

  // a span crossing the first cut extends the window to cover it
  auto ext = window_bounds(10, 4, {mk_match(4, 6)});
  REQUIRE(ext.size() >= 2);
  CHECK(ext[0] == std::pair<int, int>{1, 6});
  CHECK(ext[1].first == 7);
  CHECK(ext.back().second == 10);

  // chained crossings keep extending
  auto chain = window_bounds(10, 4, {mk_match(4, 6), mk_match(6, 8)});
  CHECK(chain[0] == std::pair<int, int>{1, 8});

  // window wider than the document: one window
  auto one = window_bounds(5, 150, {});
  REQUIRE(one.size() == 1);
  CHECK(one[0] == std::pair<int, int>{1, 5});

  CHECK_THROWS(window_bounds(5, 0, {}));
}

TEST_CASE("truncation is inert: window losses sum to the full-document loss") {
  LrlmParams p = tiny_params(11);
  // mentions straddle the cut points on purpose
  TrainDoc doc = tiny_doc(
      p, {"the", "red", "fox", "sees", "a", "blue", "jay", "today", "rema",
          "sees", "the", "fox", "today", "a", "blue", "jay"});

  double full = corpus_nll(p, {doc}, false);
  for (int window : {3, 4, 5, 150}) {
    CAPTURE(window);
    auto bounds = window_bounds(static_cast<int>(doc.tokens.size()), window,
                                doc.matches);
    double total = 0.0;
    RecState state = RecState::zero(p.encoder);
    for (std::size_t w = 0; w < bounds.size(); ++w) {
      auto [lo, hi] = bounds[w];
      std::vector<SpanMatch> local;
      for (const auto& m : doc.matches)
        if (m.start >= lo && m.end <= hi) {
          SpanMatch lm = m;
          lm.start -= lo - 1;
          lm.end -= lo - 1;
          local.push_back(lm);
        }
      ad::Tape tape;
      ScoreOptions opts;
      opts.ends_with_eos = w + 1 == bounds.size();
      RecState next;
      std::span<const std::pair<int, std::string>> span(
          doc.tokens.data() + lo - 1, static_cast<std::size_t>(hi - lo + 1));
      WindowScore ws = score_window(tape, p, span, doc.subgraph, local, state,
                                    &next, opts);
      total += tape.scalar_val(ws.nll);
      state = next;
    }
    CHECK(std::abs(total - full) <= 1e-9);
  }
}

TEST_CASE("train is deterministic under a fixed seed") {
  TrainConfig cfg;
  cfg.max_epochs = 2;
  cfg.window = 5;
  cfg.seed = 21;
  cfg.lr = 5e-3;

  LrlmParams p1 = tiny_params(11);
  auto r1 = train(p1, small_corpus(p1), small_corpus(p1), cfg);
  LrlmParams p2 = tiny_params(11);
  auto r2 = train(p2, small_corpus(p2), small_corpus(p2), cfg);

  REQUIRE(r1.history.size() == r2.history.size());
  for (std::size_t i = 0; i < r1.history.size(); ++i) {
    CHECK(r1.history[i].train_nll == r2.history[i].train_nll);
    CHECK(r1.history[i].dev_nll == r2.history[i].dev_nll);
  }
  CHECK(p1.tok_emb.data == p2.tok_emb.data);
}

TEST_CASE("training lowers the loss and never touches the spelling model") {
  LrlmParams p = tiny_params(13);
  auto docs = small_corpus(p);
  double before = corpus_nll(p, docs, false);
  auto char_snapshot = p.char_model.tensors();
  std::vector<std::vector<double>> saved;
  for (Tensor* t : char_snapshot) saved.push_back(t->data);

  TrainConfig cfg;
  cfg.max_epochs = 4;
  cfg.seed = 5;
  cfg.lr = 5e-3;
  train(p, docs, docs, cfg);
  CHECK(corpus_nll(p, docs, false) < before);

  auto after = p.char_model.tensors();
  for (std::size_t i = 0; i < after.size(); ++i)
    CHECK(after[i]->data == saved[i]);
}

TEST_CASE("plateau decays the learning rate and restores the best model") {
  LrlmParams p = tiny_params(17);
  auto docs = small_corpus(p);
  TrainConfig cfg;
  cfg.max_epochs = 6;
  cfg.seed = 3;
  cfg.lr = 0.4;  // deliberately unstable so dev regresses
  cfg.decay = 0.9;
  cfg.patience = 2;
  auto res = train(p, docs, docs, cfg);

  bool decayed = false;
  double lr = cfg.lr;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& rec : res.history) {
    // the history records the rate in effect during the epoch; the decay
    // applies from the following epoch on
    CHECK(rec.lr == doctest::Approx(lr).epsilon(1e-12));
    if (rec.dev_nll < best) {
      best = rec.dev_nll;
    } else {
      lr *= cfg.decay;
      decayed = true;
    }
  }
  REQUIRE(decayed);  // fixture must actually hit a plateau
  CHECK(res.best_dev_nll == best);
  // restored parameters reproduce the best dev loss exactly
  CHECK(corpus_nll(p, docs, false) == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("vanilla training path runs and improves") {
  LrlmParams p = tiny_params(19);
  auto docs = small_corpus(p);
  double before = corpus_nll(p, docs, true);
  TrainConfig cfg;
  cfg.max_epochs = 3;
  cfg.seed = 9;
  cfg.lr = 5e-3;
  train(p, docs, docs, cfg, true);
  CHECK(corpus_nll(p, docs, true) < before);
}

TEST_CASE("config validation and divergence reporting") {
  TrainConfig cfg;
  cfg.lr = -1.0;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.window = 0;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.batch = 0;
  CHECK_THROWS(cfg.validate());

  // an absurd learning rate produces NaN quickly and is reported
  LrlmParams p = tiny_params(23);
  auto docs = small_corpus(p);
  TrainConfig wild;
  wild.max_epochs = 30;
  wild.lr = 1e6;
  wild.seed = 2;
  try {
    train(p, docs, docs, wild);
    // divergence is likely but not guaranteed; nothing to assert if it survives
  } catch (const DivergenceError& e) {
    CHECK(std::string(e.what()).find("window") != std::string::npos);
  }
}

TEST_CASE("history csv") {
  std::vector<EpochRecord> hist = {{1, 10.5, 11.0, 1e-3}, {2, 9.0, 10.0, 1e-3}};
  auto path =
      (std::filesystem::temp_directory_path() / "hist.csv").string();
  write_history_csv(path, hist);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "epoch,train_nll,dev_nll,lr");
  std::getline(in, line);
  CHECK(line.substr(0, 2) == "1,");
}
