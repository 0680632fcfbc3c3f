#pragma once
// Optimization loop: truncated backpropagation through time with recurrent
// state carried across windows, plateau learning-rate decay with checkpoint
// restoration, and deterministic seeded shuffling.

#include <cstdint>
#include <string>
#include <vector>

#include "lrlm/backbone.hpp"
#include "lrlm/model.hpp"

namespace lrlm {

struct TrainConfig {
  int window = 150;      // tokens per TBPTT segment
  double lr = 1e-3;
  double decay = 0.9;    // lr multiplier on dev plateau
  int batch = 1;
  int max_epochs = 30;
  std::uint64_t seed = 0;
  int patience = 5;      // consecutive non-improving epochs before stopping

  void validate() const;
};

struct TrainDoc {
  std::string id;
  EncodedDoc tokens;          // EOS-terminated
  TopicSubgraph subgraph;
  std::vector<SpanMatch> matches;  // document coordinates, 1-based
};

struct EpochRecord {
  int epoch = 0;
  double train_nll = 0.0;
  double dev_nll = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  double best_dev_nll = 0.0;
  int best_epoch = 0;
};

struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Window boundaries for one document: nominal cuts every cfg.window tokens,
// each window extended right until no relation span crosses its edge, so
// every span is scored exactly once in the window containing its start.
std::vector<std::pair<int, int>> window_bounds(int n_tokens, int window,
                                               const std::vector<SpanMatch>& matches);

// Trains in place; on return `params` holds the best-dev parameters.
// vanilla = true trains the word-only baseline on the same data.
TrainResult train(LrlmParams& params, const std::vector<TrainDoc>& train_docs,
                  const std::vector<TrainDoc>& dev_docs, const TrainConfig& cfg,
                  bool vanilla = false);

// Evaluation-mode total NLL (full-document exact marginal, no dropout).
double corpus_nll(LrlmParams& params, const std::vector<TrainDoc>& docs,
                  bool vanilla, const OovPolicy& oov = {});

void write_history_csv(const std::string& path,
                       const std::vector<EpochRecord>& history);

}  // namespace lrlm
