#include "lrlm/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

namespace lrlm {

void TrainConfig::validate() const {
  if (window < 1) throw std::invalid_argument("window must be >= 1");
  if (lr <= 0.0) throw std::invalid_argument("lr must be > 0");
  if (decay <= 0.0 || decay >= 1.0)
    throw std::invalid_argument("decay must be in (0, 1)");
  if (batch < 1) throw std::invalid_argument("batch must be >= 1");
  if (max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
}

std::vector<std::pair<int, int>> window_bounds(
    int n_tokens, int window, const std::vector<SpanMatch>& matches) {
  std::vector<std::pair<int, int>> out;
  int s = 1;
  while (s <= n_tokens) {
    int e = std::min(n_tokens, s + window - 1);
    // Extend until no span crosses the right edge.
    bool grew = true;
    while (grew) {
      grew = false;
      for (const auto& m : matches)
        if (m.start <= e && m.end > e) {
          e = m.end;
          grew = true;
        }
    }
    out.emplace_back(s, e);
    s = e + 1;
  }
  return out;
}

namespace {

struct Snapshot {
  std::vector<std::vector<double>> data;
  Adam adam;

  static Snapshot take(std::span<Tensor* const> tensors, const Adam& adam) {
    Snapshot s{.data = {}, .adam = adam};
    for (const Tensor* t : tensors) s.data.push_back(t->data);
    return s;
  }
  void restore(std::span<Tensor* const> tensors, Adam& adam_out) const {
    for (std::size_t i = 0; i < data.size(); ++i) tensors[i]->data = data[i];
    adam_out = adam;
  }
};

std::vector<SpanMatch> window_matches(const std::vector<SpanMatch>& matches,
                                      int s, int e) {
  std::vector<SpanMatch> out;
  for (const auto& m : matches) {
    if (m.start < s || m.start > e) continue;
    SpanMatch local = m;
    local.start = m.start - (s - 1);
    local.end = m.end - (s - 1);
    out.push_back(std::move(local));
  }
  return out;
}

// Per-document streaming state for one epoch.
struct DocStream {
  const TrainDoc* doc = nullptr;
  std::vector<std::pair<int, int>> windows;
  std::size_t next_window = 0;
  RecState state;
};

double run_window(LrlmParams& params, DocStream& ds, bool vanilla,
                  std::mt19937_64& rng) {
  auto [s, e] = ds.windows[ds.next_window++];
  const auto& tokens = ds.doc->tokens;
  std::span<const std::pair<int, std::string>> window_tokens(
      tokens.data() + (s - 1), static_cast<std::size_t>(e - s + 1));
  ScoreOptions opts;
  opts.training = true;
  opts.dropout_rng = &rng;
  opts.ends_with_eos = e == static_cast<int>(tokens.size());

  ad::Tape tape;
  RecState next;
  ad::Tape::Var nll;
  if (vanilla) {
    nll = vanilla_log_likelihood(tape, params, window_tokens, ds.state, &next,
                                 opts);
  } else {
    std::vector<SpanMatch> local = window_matches(ds.doc->matches, s, e);
    WindowScore score = score_window(tape, params, window_tokens, ds.doc->subgraph,
                                     local, ds.state, &next, opts);
    nll = score.nll;
  }
  double loss = tape.scalar_val(nll);
  if (!std::isfinite(loss))
    throw DivergenceError("non-finite loss in document '" + ds.doc->id +
                          "', window [" + std::to_string(s) + "," +
                          std::to_string(e) + "]");
  tape.backward(nll);
  ds.state = std::move(next);
  return loss;
}

}  // namespace

double corpus_nll(LrlmParams& params, const std::vector<TrainDoc>& docs,
                  bool vanilla, const OovPolicy& oov) {
  double total = 0.0;
  for (const auto& d : docs) {
    ad::Tape tape;
    ScoreOptions opts;
    opts.oov = oov;
    if (vanilla) {
      RecState init = RecState::zero(params.encoder);
      total += tape.scalar_val(
          vanilla_log_likelihood(tape, params, d.tokens, init, nullptr, opts));
    } else {
      total += tape.scalar_val(
          score_document(tape, params, d.tokens, d.subgraph, d.matches, opts).nll);
    }
  }
  return total;
}

TrainResult train(LrlmParams& params, const std::vector<TrainDoc>& train_docs,
                  const std::vector<TrainDoc>& dev_docs, const TrainConfig& cfg,
                  bool vanilla) {
  cfg.validate();
  if (train_docs.empty() || dev_docs.empty())
    throw std::invalid_argument("train and dev corpora must be non-empty");

  std::vector<Tensor*> trainables = params.trainable_tensors();
  Adam adam(AdamConfig{.lr = cfg.lr});
  std::mt19937_64 rng(cfg.seed);

  TrainResult result;
  result.best_dev_nll = std::numeric_limits<double>::infinity();
  Snapshot best = Snapshot::take(trainables, adam);
  int non_improving = 0;

  std::vector<std::size_t> order(train_docs.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_lr = adam.cfg.lr;
    double train_nll = 0.0;

    for (std::size_t g = 0; g < order.size(); g += cfg.batch) {
      std::vector<DocStream> group;
      for (std::size_t i = g; i < std::min(order.size(), g + cfg.batch); ++i) {
        const TrainDoc& d = train_docs[order[i]];
        DocStream ds;
        ds.doc = &d;
        ds.windows = window_bounds(static_cast<int>(d.tokens.size()), cfg.window,
                                   d.matches);
        ds.state = RecState::zero(params.encoder);
        group.push_back(std::move(ds));
      }
      bool any = true;
      while (any) {
        any = false;
        for (Tensor* t : trainables) t->zero_grad();
        for (auto& ds : group) {
          if (ds.next_window >= ds.windows.size()) continue;
          train_nll += run_window(params, ds, vanilla, rng);
          any = true;
        }
        if (any) adam.step(trainables);
      }
    }

    double dev_nll = corpus_nll(params, dev_docs, vanilla);
    result.history.push_back({epoch, train_nll, dev_nll, epoch_lr});

    if (dev_nll < result.best_dev_nll) {
      result.best_dev_nll = dev_nll;
      result.best_epoch = epoch;
      best = Snapshot::take(trainables, adam);
      non_improving = 0;
    } else {
      // Plateau: decay the learning rate and reset model and optimizer to
      // the best checkpoint.
      double new_lr = adam.cfg.lr * cfg.decay;
      best.restore(trainables, adam);
      adam.cfg.lr = new_lr;
      best.adam.cfg.lr = new_lr;
      ++non_improving;
      if (non_improving >= cfg.patience) break;
    }
  }

  best.restore(trainables, adam);
  return result;
}

void write_history_csv(const std::string& path,
                       const std::vector<EpochRecord>& history) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write history file: " + path);
  out << "epoch,train_nll,dev_nll,lr\n";
  char buf[128];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g\n", r.epoch, r.train_nll,
                  r.dev_nll, r.lr);
    out << buf;
  }
}

}  // namespace lrlm
