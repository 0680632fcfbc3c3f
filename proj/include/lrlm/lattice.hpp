#pragma once
// Span segmentation lattice with exact forward-backward marginalization in
// log space, arc posteriors, per-interval tiling reports, and an exhaustive
// enumeration oracle.

#include <string>
#include <vector>

#include "lrlm/corpus.hpp"

namespace lrlm {

// Positions are 1-based; position n is EOS and carries only a word arc.
// Word arcs (i, i) exist at every position and are implicit.
struct RelArc {
  int start = 0;  // l
  int end = 0;    // r, inclusive, < n
  SpanMatch match;
};

struct Lattice {
  int n = 0;  // token count including EOS
  std::vector<RelArc> rel_arcs;
};

// Natural-log arc potentials: word_logp[i] for i in 1..n (index 0 unused),
// rel_logp parallel to Lattice::rel_arcs.
struct ArcPotentials {
  std::vector<double> word_logp;
  std::vector<double> rel_logp;
};

struct LatticeChart {
  std::vector<double> alpha;  // [0..n], alpha[0] = 0
  std::vector<double> beta;   // [0..n], beta[n] = 0
  double log_marginal = 0.0;
};

struct ArcPosteriors {
  std::vector<double> word;  // [1..n], index 0 unused
  std::vector<double> rel;   // parallel to rel_arcs
};

struct Derivation {
  struct Segment {
    bool is_rel = false;
    int start = 0;
    int end = 0;
    int rel_arc_index = -1;  // into Lattice::rel_arcs when is_rel
  };
  std::vector<Segment> segments;
};

struct PatternProb {
  std::string pattern;  // e.g. "word -> <performer>"
  double prob;
};

struct LatticeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Rejects matches out of 1..n-1 (the EOS position is word-only).
Lattice build_lattice(int n, const std::vector<SpanMatch>& matches);

// alpha[i] = logsumexp over arcs ending at i of alpha[l-1] + potential;
// log_marginal = alpha[n].
LatticeChart forward(const Lattice& lat, const ArcPotentials& pot);

// Fills chart.beta: beta[i] = logsumexp over arcs starting at i+1 of
// potential + beta[r].
void backward(const Lattice& lat, const ArcPotentials& pot, LatticeChart& chart);

// posterior(arc (l,r)) = exp(alpha[l-1] + pot + beta[r] - log_marginal).
ArcPosteriors arc_posteriors(const Lattice& lat, const ArcPotentials& pot,
                             const LatticeChart& chart);

// Posterior mass of each distinct arc-label tiling of [l, r], conditioned on
// derivations with segment boundaries at l-1 and r. Sorted by probability
// descending; probabilities sum to 1.
std::vector<PatternProb> span_report(const Lattice& lat, const ArcPotentials& pot,
                                     const LatticeChart& chart, int l, int r);

// Exhaustive enumeration of all valid tilings with log-probabilities.
// Throws if the derivation count exceeds cap.
std::vector<std::pair<Derivation, double>> enumerate_derivations(
    const Lattice& lat, const ArcPotentials& pot, std::size_t cap = 1000000);

// Label used in span_report patterns: "word" or "<rel_type>".
std::string arc_label(const Lattice& lat, const Derivation::Segment& seg);

}  // namespace lrlm
