#include "lrlm/sampler.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace lrlm {

namespace {

// Tempered draw from log-probabilities; returns the index and adds the
// untempered log-prob of the choice to *logp.
std::size_t draw(std::span<const double> logps, double temperature,
                 std::mt19937_64& rng, double* logp) {
  std::vector<double> w(logps.size());
  double m = -std::numeric_limits<double>::infinity();
  for (double lp : logps) m = std::max(m, lp / temperature);
  double sum = 0.0;
  for (std::size_t i = 0; i < logps.size(); ++i)
    sum += w[i] = std::exp(logps[i] / temperature - m);
  std::uniform_real_distribution<double> u(0.0, sum);
  double x = u(rng);
  std::size_t pick = 0;
  for (; pick + 1 < w.size() && x > w[pick]; ++pick) x -= w[pick];
  if (logp) *logp += logps[pick];
  return pick;
}

std::vector<double> plain_affine(const Tensor& w, const ad::Vec& x,
                                 const Tensor& b) {
  std::vector<double> y(w.rows());
  for (std::size_t i = 0; i < w.rows(); ++i) {
    double s = b.data[i];
    const double* row = w.data.data() + i * w.cols();
    for (std::size_t j = 0; j < w.cols(); ++j) s += row[j] * x[j];
    y[i] = s;
  }
  return y;
}

std::vector<double> plain_bottleneck(const BottleneckLinear& bl,
                                     const ad::Vec& h) {
  return plain_affine(bl.w1, plain_affine(bl.w2, h, bl.b2), bl.b1);
}

double plain_dot(const Tensor& table, std::size_t row, const ad::Vec& u) {
  double s = 0.0;
  const double* r = table.data.data() + row * table.cols();
  for (std::size_t j = 0; j < table.cols(); ++j) s += r[j] * u[j];
  return s;
}

std::string join_alias(const TokenSeq& toks) {
  std::string out;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (i) out += ' ';
    out += toks[i];
  }
  return out;
}

}  // namespace

SampleResult sample(LrlmParams& params, const TopicSubgraph& subgraph,
                    std::size_t max_tokens, double temperature,
                    std::uint64_t seed) {
  if (max_tokens < 1) throw std::invalid_argument("max_tokens must be >= 1");
  if (temperature <= 0.0) throw std::invalid_argument("temperature must be > 0");
  std::mt19937_64 rng(seed);

  SampleResult res;
  res.seed = seed;
  RecState state = RecState::zero(params.encoder);
  ad::Vec h(params.dims.hidden, 0.0);  // h_1 from the zero initial state
  bool rel_available = !subgraph.edges.empty();

  auto feed_token = [&](const std::string& tok) {
    int id = params.vocab.lookup(tok);
    const double* row = params.tok_emb.data.data() + id * params.dims.embed;
    h = plain_encoder_step(params.encoder, {row, params.dims.embed}, state);
  };

  while (res.tokens.size() < max_tokens) {
    int start = static_cast<int>(res.tokens.size()) + 1;
    bool use_rel = false;
    if (rel_available) {
      std::vector<double> src =
          log_softmax(plain_affine(params.w_src, h, params.b_src));
      use_rel = draw(src, temperature, rng, &res.log_prob) == kSourceRel;
    }

    if (use_rel) {
      ad::Vec u = plain_bottleneck(params.rel_proj, h);
      std::vector<double> scores(subgraph.edges.size());
      for (std::size_t e = 0; e < subgraph.edges.size(); ++e) {
        const auto& edge = subgraph.edges[e];
        std::size_t trow = params.kgv.type_row.at(edge.rel_type);
        std::size_t erow = params.kgv.entity_row_or_unk(edge.object);
        double s = 0.0;
        for (std::size_t j = 0; j < params.dims.type_dim; ++j)
          s += params.type_emb.at(trow, j) * u[j];
        for (std::size_t j = 0; j < params.dims.ent_dim; ++j)
          s += params.ent_emb.at(erow, j) * u[params.dims.type_dim + j];
        scores[e] = s;
      }
      std::size_t ei =
          draw(log_softmax(scores), temperature, rng, &res.log_prob);
      const RelationEdge& edge = subgraph.edges[ei];

      const auto& aliases = subgraph.objects.at(edge.object).aliases;
      ad::Vec au = plain_affine(params.w_alias, h, params.b_alias);
      std::vector<double> ascore(aliases.size());
      for (std::size_t a = 0; a < aliases.size(); ++a)
        ascore[a] = plain_dot(params.alias_feat, params.kgv.alias_row.at(join_alias(aliases[a])), au);
      std::size_t ai =
          draw(log_softmax(ascore), temperature, rng, &res.log_prob);

      const TokenSeq& span = aliases[ai];
      for (const auto& tok : span) {
        res.tokens.push_back(tok);
        feed_token(tok);
      }
      res.annotations.push_back({start,
                                 start + static_cast<int>(span.size()) - 1, true,
                                 edge, static_cast<int>(ai), false});
    } else {
      std::vector<double> word_lp =
          log_softmax(plain_bottleneck(params.word_head, h));
      std::size_t wid = draw(word_lp, temperature, rng, &res.log_prob);
      if (static_cast<int>(wid) == params.vocab.eos_id()) {
        res.terminated = true;
        break;
      }
      if (static_cast<int>(wid) == params.vocab.unk_id()) {
        auto [word, char_lp] =
            params.char_model.sample(rng, temperature);
        res.log_prob += char_lp;
        res.tokens.push_back(word);
        feed_token(word);
        res.annotations.push_back({start, start, false, std::nullopt, -1, true});
      } else {
        const std::string& tok = params.vocab.tokens[wid];
        res.tokens.push_back(tok);
        feed_token(tok);
        res.annotations.push_back({start, start, false, std::nullopt, -1, false});
      }
    }
  }
  return res;
}

SampleResult best_of(LrlmParams& params, const TopicSubgraph& subgraph,
                     std::size_t max_tokens, double temperature, std::size_t k,
                     std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("best_of needs k >= 1");
  SampleResult best;
  double best_per_token = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < k; ++i) {
    SampleResult s = sample(params, subgraph, max_tokens, temperature,
                            seed + i);
    double denom = static_cast<double>(std::max<std::size_t>(s.tokens.size(), 1));
    double per_token = -s.log_prob / denom;
    if (per_token < best_per_token) {
      best_per_token = per_token;
      best = std::move(s);
    }
  }
  return best;
}

std::string format_sample(const SampleResult& s) {
  std::string out;
  for (const auto& a : s.annotations) {
    for (int i = a.start; i <= a.end; ++i) {
      if (!out.empty()) out += ' ';
      out += s.tokens[i - 1];
    }
    if (a.is_rel) out += " [" + a.edge->rel_type + "]";
  }
  return out;
}

}  // namespace lrlm
