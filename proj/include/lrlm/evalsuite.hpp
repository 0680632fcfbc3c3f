#pragma once
// Open-vocabulary perplexity, unknown-penalized perplexity (UPP), mention
// statistics over samples, posterior span annotation, and subgraph-size
// binning of word-average log-probabilities.

#include <optional>
#include <string>
#include <vector>

#include "lrlm/model.hpp"
#include "lrlm/sampler.hpp"
#include "lrlm/training.hpp"

namespace lrlm {

struct DocEval {
  std::string id;
  std::size_t token_count = 0;  // includes EOS
  double nll = 0.0;
  double word_avg_logp = 0.0;   // log P(X) / token_count
  std::size_t subgraph_edges = 0;
};

struct BinRow {
  std::size_t doc_count = 0;
  double mean_edges = 0.0;
  double mean_word_avg_logp = 0.0;
};

struct EvalReport {
  std::size_t token_count = 0;
  double total_nll = 0.0;
  double perplexity = 0.0;
  std::optional<double> upp;
  std::size_t oov_vocab_size = 0;  // |V_out| over the evaluated split
  std::vector<DocEval> docs;
  std::vector<BinRow> bin_table;
};

// Token-level perplexity over all tokens including EOS; OOV tokens scored as
// P(UNK) * P_char(spelling). LRLM documents use the exact lattice marginal;
// vanilla uses the word-only chain.
EvalReport perplexity(LrlmParams& params, const std::vector<TrainDoc>& docs,
                      bool vanilla = false);

// Appendix-style UPP: OOV token probabilities replaced by P(UNK) / |V_out|,
// with V_out the distinct OOV word types of the evaluated corpus.
double upp(LrlmParams& params, const std::vector<TrainDoc>& docs,
           bool vanilla = false);

struct MentionStats {
  double partial_avg = 0.0;  // structurally zero for this model
  double full_avg = 0.0;
  double valid_avg = 0.0;
  double invalid_avg = 0.0;
};

// Full mentions are REL annotations (always complete alias copies here);
// validity counts come from an external judgment (one count per sample),
// not computed. gold_mention_counts, if given, is reported by the caller.
MentionStats mention_stats(const std::vector<SampleResult>& samples,
                           const std::vector<std::size_t>* valid_counts = nullptr);

struct IntervalReport {
  int start = 0;
  int end = 0;
  std::vector<PatternProb> rows;  // sum to 1
};

// Posterior span annotation for the listed [start, end] intervals.
std::vector<IntervalReport> annotate(LrlmParams& params, const TrainDoc& doc,
                                     const std::vector<std::pair<int, int>>& intervals);

std::string format_interval_report(const TrainDoc& doc, const IntervalReport& r);

// Documents grouped into `bins` equal-count bins by subgraph edge count.
std::vector<BinRow> bin_by_relations(const std::vector<DocEval>& docs,
                                     std::size_t bins);

// Serialization of reports.
void write_report_json(const EvalReport& report, const std::string& path);
void write_report_csv(const EvalReport& report, const std::string& path);
void write_bins_svg(const std::vector<BinRow>& bins, const std::string& path);

}  // namespace lrlm
