#include "lrlm/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "lrlm/backbone.hpp"

namespace lrlm {

Lattice build_lattice(int n, const std::vector<SpanMatch>& matches) {
  if (n < 1) throw LatticeError("lattice needs at least one position");
  Lattice lat;
  lat.n = n;
  for (const auto& m : matches) {
    if (m.start < 1 || m.end < m.start || m.end >= n)
      throw LatticeError("span (" + std::to_string(m.start) + "," +
                         std::to_string(m.end) +
                         ") out of range for lattice of size " +
                         std::to_string(n));
    lat.rel_arcs.push_back(RelArc{m.start, m.end, m});
  }
  return lat;
}

LatticeChart forward(const Lattice& lat, const ArcPotentials& pot) {
  int n = lat.n;
  LatticeChart chart;
  chart.alpha.assign(n + 1, 0.0);
  // arcs grouped by end position
  std::vector<std::vector<int>> by_end(n + 1);
  for (std::size_t a = 0; a < lat.rel_arcs.size(); ++a)
    by_end[lat.rel_arcs[a].end].push_back(static_cast<int>(a));

  std::vector<double> cand;
  for (int i = 1; i <= n; ++i) {
    cand.clear();
    cand.push_back(chart.alpha[i - 1] + pot.word_logp[i]);
    for (int a : by_end[i])
      cand.push_back(chart.alpha[lat.rel_arcs[a].start - 1] + pot.rel_logp[a]);
    chart.alpha[i] = log_sum_exp(cand);
  }
  chart.log_marginal = chart.alpha[n];
  return chart;
}

void backward(const Lattice& lat, const ArcPotentials& pot, LatticeChart& chart) {
  int n = lat.n;
  chart.beta.assign(n + 1, 0.0);
  std::vector<std::vector<int>> by_start(n + 2);
  for (std::size_t a = 0; a < lat.rel_arcs.size(); ++a)
    by_start[lat.rel_arcs[a].start].push_back(static_cast<int>(a));

  std::vector<double> cand;
  for (int i = n - 1; i >= 0; --i) {
    cand.clear();
    cand.push_back(pot.word_logp[i + 1] + chart.beta[i + 1]);
    for (int a : by_start[i + 1])
      cand.push_back(pot.rel_logp[a] + chart.beta[lat.rel_arcs[a].end]);
    chart.beta[i] = log_sum_exp(cand);
  }
}

ArcPosteriors arc_posteriors(const Lattice& lat, const ArcPotentials& pot,
                             const LatticeChart& chart) {
  ArcPosteriors post;
  post.word.assign(lat.n + 1, 0.0);
  for (int i = 1; i <= lat.n; ++i)
    post.word[i] = std::exp(chart.alpha[i - 1] + pot.word_logp[i] +
                            chart.beta[i] - chart.log_marginal);
  post.rel.resize(lat.rel_arcs.size());
  for (std::size_t a = 0; a < lat.rel_arcs.size(); ++a) {
    const auto& arc = lat.rel_arcs[a];
    post.rel[a] = std::exp(chart.alpha[arc.start - 1] + pot.rel_logp[a] +
                           chart.beta[arc.end] - chart.log_marginal);
  }
  return post;
}

std::string arc_label(const Lattice& lat, const Derivation::Segment& seg) {
  if (!seg.is_rel) return "word";
  return "<" + lat.rel_arcs[seg.rel_arc_index].match.edge.rel_type + ">";
}

namespace {

// DFS over tilings of [l, r] by arcs fully inside the interval.
void enumerate_interval(const Lattice& lat, const ArcPotentials& pot, int l,
                        int r, int pos, double logp,
                        std::vector<Derivation::Segment>& stack,
                        const std::vector<std::vector<int>>& by_start,
                        std::size_t cap,
                        std::vector<std::pair<Derivation, double>>& out) {
  if (pos > r) {
    if (out.size() >= cap) throw LatticeError("derivation cap exceeded");
    out.push_back({Derivation{stack}, logp});
    return;
  }
  // word arc
  stack.push_back({false, pos, pos, -1});
  enumerate_interval(lat, pot, l, r, pos + 1, logp + pot.word_logp[pos], stack,
                     by_start, cap, out);
  stack.pop_back();
  // rel arcs starting here and ending inside the interval
  for (int a : by_start[pos]) {
    const auto& arc = lat.rel_arcs[a];
    if (arc.end > r) continue;
    stack.push_back({true, arc.start, arc.end, a});
    enumerate_interval(lat, pot, l, r, arc.end + 1, logp + pot.rel_logp[a],
                       stack, by_start, cap, out);
    stack.pop_back();
  }
}

std::vector<std::vector<int>> arcs_by_start(const Lattice& lat) {
  std::vector<std::vector<int>> by_start(lat.n + 2);
  for (std::size_t a = 0; a < lat.rel_arcs.size(); ++a)
    by_start[lat.rel_arcs[a].start].push_back(static_cast<int>(a));
  return by_start;
}

}  // namespace

std::vector<std::pair<Derivation, double>> enumerate_derivations(
    const Lattice& lat, const ArcPotentials& pot, std::size_t cap) {
  std::vector<std::pair<Derivation, double>> out;
  std::vector<Derivation::Segment> stack;
  enumerate_interval(lat, pot, 1, lat.n, 1, 0.0, stack, arcs_by_start(lat), cap,
                     out);
  return out;
}

std::vector<PatternProb> span_report(const Lattice& lat, const ArcPotentials& pot,
                                     const LatticeChart& chart, int l, int r) {
  if (l < 1 || r < l || r > lat.n)
    throw LatticeError("span_report interval out of range");

  // Tilings of [l, r] by arcs fully inside; conditioning excludes derivations
  // whose spans cross l-1 or r, so the normalizer is the interval's own mass.
  std::vector<std::pair<Derivation, double>> tilings;
  std::vector<Derivation::Segment> stack;
  enumerate_interval(lat, pot, l, r, l, 0.0, stack, arcs_by_start(lat), 1000000,
                     tilings);

  std::vector<double> logps;
  for (auto& [d, lp] : tilings) logps.push_back(lp);
  double log_z = log_sum_exp(logps);

  std::map<std::string, double> mass;
  for (auto& [d, lp] : tilings) {
    std::string pattern;
    for (std::size_t s = 0; s < d.segments.size(); ++s) {
      if (s) pattern += " -> ";
      pattern += arc_label(lat, d.segments[s]);
    }
    mass[pattern] += std::exp(lp - log_z);
  }
  std::vector<PatternProb> out;
  for (auto& [p, m] : mass) out.push_back({p, m});
  std::sort(out.begin(), out.end(), [](const PatternProb& a, const PatternProb& b) {
    if (a.prob != b.prob) return a.prob > b.prob;
    return a.pattern < b.pattern;
  });
  return out;
}

}  // namespace lrlm
