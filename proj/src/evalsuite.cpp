#include "lrlm/evalsuite.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "lrlm/training.hpp"

namespace lrlm {

namespace {

double doc_nll(LrlmParams& params, const TrainDoc& doc, bool vanilla,
               const OovPolicy& oov) {
  ad::Tape tape;
  ScoreOptions opts;
  opts.training = false;
  opts.oov = oov;
  if (vanilla) {
    RecState init = RecState::zero(params.encoder);
    ad::Tape::Var nll = vanilla_log_likelihood(tape, params, doc.tokens, init,
                                               nullptr, opts);
    return tape.scalar_val(nll);
  }
  WindowScore ws = score_document(tape, params, doc.tokens, doc.subgraph,
                                  doc.matches, opts);
  return tape.scalar_val(ws.nll);
}

// Distinct word types of the split that fall outside the model vocabulary.
std::size_t count_oov_types(const Vocabulary& vocab,
                            const std::vector<TrainDoc>& docs) {
  std::set<std::string> types;
  for (const auto& doc : docs)
    for (const auto& [id, spelling] : doc.tokens)
      if (id == vocab.unk_id()) types.insert(spelling);
  return types.size();
}

}  // namespace

EvalReport perplexity(LrlmParams& params, const std::vector<TrainDoc>& docs,
                      bool vanilla) {
  EvalReport rep;
  rep.oov_vocab_size = count_oov_types(params.vocab, docs);
  for (const auto& doc : docs) {
    DocEval de;
    de.id = doc.id;
    de.token_count = doc.tokens.size();
    de.subgraph_edges = doc.subgraph.edges.size();
    de.nll = doc_nll(params, doc, vanilla, OovPolicy{});
    de.word_avg_logp = -de.nll / static_cast<double>(de.token_count);
    rep.token_count += de.token_count;
    rep.total_nll += de.nll;
    rep.docs.push_back(std::move(de));
  }
  if (rep.token_count == 0)
    throw std::invalid_argument("perplexity over an empty corpus");
  rep.perplexity = std::exp(rep.total_nll / static_cast<double>(rep.token_count));
  // With no OOV types the penalty policy never fires, so UPP is the same
  // number; otherwise it needs its own scoring pass.
  rep.upp = rep.oov_vocab_size == 0 ? rep.perplexity : upp(params, docs, vanilla);
  if (rep.docs.size() >= 2)
    rep.bin_table = bin_by_relations(rep.docs, 2);
  return rep;
}

double upp(LrlmParams& params, const std::vector<TrainDoc>& docs,
           bool vanilla) {
  OovPolicy oov;
  oov.mode = OovPolicy::kUppPenalty;
  std::size_t vout = count_oov_types(params.vocab, docs);
  oov.log_vout = vout == 0 ? 0.0 : std::log(static_cast<double>(vout));
  double total_nll = 0.0;
  std::size_t tokens = 0;
  for (const auto& doc : docs) {
    total_nll += doc_nll(params, doc, vanilla, oov);
    tokens += doc.tokens.size();
  }
  if (tokens == 0) throw std::invalid_argument("upp over an empty corpus");
  return std::exp(total_nll / static_cast<double>(tokens));
}

MentionStats mention_stats(const std::vector<SampleResult>& samples,
                           const std::vector<std::size_t>* valid_counts) {
  MentionStats ms;
  if (samples.empty()) return ms;
  if (valid_counts && valid_counts->size() != samples.size())
    throw std::invalid_argument("one validity count per sample expected");
  double full = 0.0, valid = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    std::size_t f = 0;
    for (const auto& a : samples[i].annotations)
      if (a.is_rel) ++f;
    full += static_cast<double>(f);
    if (valid_counts) {
      if ((*valid_counts)[i] > f)
        throw std::invalid_argument("validity count exceeds mention count");
      valid += static_cast<double>((*valid_counts)[i]);
    }
  }
  double n = static_cast<double>(samples.size());
  ms.partial_avg = 0.0;  // spans are emitted atomically
  ms.full_avg = full / n;
  if (valid_counts) {
    ms.valid_avg = valid / n;
    ms.invalid_avg = (full - valid) / n;
  }
  return ms;
}

std::vector<IntervalReport> annotate(LrlmParams& params, const TrainDoc& doc,
                                     const std::vector<std::pair<int, int>>& intervals) {
  ad::Tape tape;
  ScoreOptions opts;
  WindowScore ws = score_document(tape, params, doc.tokens, doc.subgraph,
                                  doc.matches, opts);
  LatticeChart chart = forward(ws.lattice, ws.pot);
  backward(ws.lattice, ws.pot, chart);
  std::vector<IntervalReport> out;
  for (auto [l, r] : intervals) {
    IntervalReport rep;
    rep.start = l;
    rep.end = r;
    rep.rows = span_report(ws.lattice, ws.pot, chart, l, r);
    out.push_back(std::move(rep));
  }
  return out;
}

std::string format_interval_report(const TrainDoc& doc,
                                   const IntervalReport& r) {
  std::ostringstream os;
  os << "tokens " << r.start << ".." << r.end << ":";
  for (int i = r.start; i <= r.end; ++i)
    os << ' ' << doc.tokens[static_cast<std::size_t>(i) - 1].second;
  os << '\n';
  for (const auto& row : r.rows)
    os << "  " << std::left << std::setw(40) << row.pattern << ' '
       << std::fixed << std::setprecision(6) << row.prob << '\n';
  return os.str();
}

std::vector<BinRow> bin_by_relations(const std::vector<DocEval>& docs,
                                     std::size_t bins) {
  if (bins == 0 || docs.empty())
    throw std::invalid_argument("bin_by_relations needs docs and bins >= 1");
  bins = std::min(bins, docs.size());
  std::vector<const DocEval*> order;
  for (const auto& d : docs) order.push_back(&d);
  std::stable_sort(order.begin(), order.end(),
                   [](const DocEval* a, const DocEval* b) {
                     return a->subgraph_edges < b->subgraph_edges;
                   });
  std::vector<BinRow> out(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    std::size_t lo = docs.size() * b / bins;
    std::size_t hi = docs.size() * (b + 1) / bins;
    BinRow& row = out[b];
    row.doc_count = hi - lo;
    for (std::size_t i = lo; i < hi; ++i) {
      row.mean_edges += static_cast<double>(order[i]->subgraph_edges);
      row.mean_word_avg_logp += order[i]->word_avg_logp;
    }
    row.mean_edges /= static_cast<double>(row.doc_count);
    row.mean_word_avg_logp /= static_cast<double>(row.doc_count);
  }
  return out;
}

void write_report_json(const EvalReport& report, const std::string& path) {
  nlohmann::json j;
  j["token_count"] = report.token_count;
  j["total_nll"] = report.total_nll;
  j["perplexity"] = report.perplexity;
  if (report.upp) j["upp"] = *report.upp;
  j["oov_vocab_size"] = report.oov_vocab_size;
  j["docs"] = nlohmann::json::array();
  for (const auto& d : report.docs)
    j["docs"].push_back({{"id", d.id},
                         {"token_count", d.token_count},
                         {"nll", d.nll},
                         {"word_avg_logp", d.word_avg_logp},
                         {"subgraph_edges", d.subgraph_edges}});
  j["bins"] = nlohmann::json::array();
  for (const auto& b : report.bin_table)
    j["bins"].push_back({{"doc_count", b.doc_count},
                         {"mean_edges", b.mean_edges},
                         {"mean_word_avg_logp", b.mean_word_avg_logp}});
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

void write_report_csv(const EvalReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "id,token_count,nll,word_avg_logp,subgraph_edges\n";
  out << std::setprecision(17);
  for (const auto& d : report.docs)
    out << d.id << ',' << d.token_count << ',' << d.nll << ','
        << d.word_avg_logp << ',' << d.subgraph_edges << '\n';
}

void write_bins_svg(const std::vector<BinRow>& bins, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  const int bar_w = 80, gap = 20, height = 240, base = 200;
  int width = gap + static_cast<int>(bins.size()) * (bar_w + gap);
  double worst = 1e-9;
  for (const auto& b : bins) worst = std::max(worst, -b.mean_word_avg_logp);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width
      << "' height='" << height << "'>\n";
  for (std::size_t i = 0; i < bins.size(); ++i) {
    double frac = -bins[i].mean_word_avg_logp / worst;
    int h = static_cast<int>(frac * 170);
    int x = gap + static_cast<int>(i) * (bar_w + gap);
    out << "<rect x='" << x << "' y='" << base - h << "' width='" << bar_w
        << "' height='" << h << "' fill='#4878a8'/>\n";
    out << "<text x='" << x + bar_w / 2 << "' y='" << base + 16
        << "' text-anchor='middle' font-size='12'>"
        << std::fixed << std::setprecision(1) << bins[i].mean_edges
        << " edges</text>\n";
    out << "<text x='" << x + bar_w / 2 << "' y='" << base - h - 6
        << "' text-anchor='middle' font-size='12'>"
        << std::setprecision(3) << bins[i].mean_word_avg_logp << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace lrlm
