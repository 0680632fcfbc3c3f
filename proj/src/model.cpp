#include "lrlm/model.hpp"

#include <algorithm>

namespace lrlm {

namespace {

std::string join_alias(const TokenSeq& toks) {
  std::string out;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (i) out += ' ';
    out += toks[i];
  }
  return out;
}

}  // namespace

KgVocab KgVocab::build(const KnowledgeGraph& kg) {
  KgVocab v;
  for (const auto& [id, ent] : kg.entities) {
    v.entity_row.emplace(id, v.entity_row.size() + 1);  // row 0 = UNK
    for (const auto& a : ent.aliases)
      v.alias_row.emplace(join_alias(a), v.alias_row.size());
  }
  for (const auto& t : kg.relation_types)
    v.type_row.emplace(t, v.type_row.size());
  return v;
}

LrlmParams LrlmParams::create(ModelDims dims, const KnowledgeGraph& kg,
                              Vocabulary vocab, CharModel char_model,
                              std::uint64_t seed) {
  dims.vocab = vocab.size();
  if (dims.vocab < 2) throw ModelError("vocab size must include <unk> and <eos>");
  std::mt19937_64 rng(seed);
  LrlmParams p;
  p.dims = dims;
  p.kgv = KgVocab::build(kg);
  p.vocab = std::move(vocab);
  p.tok_emb = Tensor("tok_emb", {dims.vocab, dims.embed});
  p.tok_emb.init_uniform(rng, dims.embed);
  p.encoder = RecurrentEncoder("enc", dims.embed, dims.hidden, dims.layers,
                               dims.dropout);
  p.encoder.init(rng);
  p.w_src = Tensor("src.w", {2, dims.hidden});
  p.w_src.init_uniform(rng, dims.hidden);
  p.b_src = Tensor("src.b", {2});
  p.word_head = BottleneckLinear("word_head", dims.vocab, dims.word_bottleneck,
                                 dims.hidden);
  p.word_head.init(rng);
  p.rel_proj = BottleneckLinear("rel_proj", dims.type_dim + dims.ent_dim,
                                dims.rel_bottleneck, dims.hidden);
  p.rel_proj.init(rng);
  p.ent_emb = Tensor("ent_emb", {p.kgv.entity_row.size() + 1, dims.ent_dim});
  p.ent_emb.init_uniform(rng, dims.ent_dim);
  p.type_emb = Tensor("type_emb", {std::max<std::size_t>(p.kgv.type_row.size(), 1),
                                   dims.type_dim});
  p.type_emb.init_uniform(rng, dims.type_dim);
  p.w_alias = Tensor("alias.w", {dims.alias_dim, dims.hidden});
  p.w_alias.init_uniform(rng, dims.hidden);
  p.b_alias = Tensor("alias.b", {dims.alias_dim});
  p.alias_feat = Tensor("alias_feat", {std::max<std::size_t>(p.kgv.alias_row.size(), 1),
                                       dims.alias_dim});
  p.alias_feat.init_uniform(rng, dims.alias_dim);
  p.char_model = std::move(char_model);
  p.char_model.frozen = true;
  return p;
}

void LrlmParams::import_entity_embeddings(
    const KnowledgeGraph& kg,
    const std::map<std::string, std::vector<double>>& table) {
  for (const auto& [id, ent] : kg.entities) {
    if (!ent.embedding_key) continue;
    auto it = table.find(*ent.embedding_key);
    if (it == table.end()) continue;
    std::size_t r = kgv.entity_row.at(id);
    std::copy(it->second.begin(), it->second.end(),
              ent_emb.data.begin() + r * dims.ent_dim);
  }
}

void LrlmParams::import_alias_features(
    const std::map<std::string, std::vector<double>>& table) {
  for (const auto& [text, row] : kgv.alias_row) {
    auto it = table.find(text);
    if (it == table.end()) continue;
    std::copy(it->second.begin(), it->second.end(),
              alias_feat.data.begin() + row * dims.alias_dim);
  }
}

std::vector<Tensor*> LrlmParams::trainable_tensors() {
  std::vector<Tensor*> out{&tok_emb, &w_src, &b_src, &ent_emb, &type_emb,
                           &w_alias, &b_alias, &alias_feat};
  for (Tensor* t : encoder.tensors()) out.push_back(t);
  for (Tensor* t : word_head.tensors()) out.push_back(t);
  for (Tensor* t : rel_proj.tensors()) out.push_back(t);
  return out;
}

std::vector<Tensor*> LrlmParams::all_tensors() {
  std::vector<Tensor*> out = trainable_tensors();
  for (Tensor* t : char_model.tensors()) out.push_back(t);
  return out;
}

ad::Tape::Var LrlmParams::source_log_probs(ad::Tape& tape, ad::Tape::Var h) {
  return tape.log_softmax(tape.affine(w_src, h, b_src));
}

ad::Tape::Var LrlmParams::word_log_prob(ad::Tape& tape, ad::Tape::Var h,
                                        int token_id,
                                        const std::string* spelling,
                                        const OovPolicy& oov) {
  if (token_id < 0 || static_cast<std::size_t>(token_id) >= dims.vocab)
    throw ModelError("token id out of vocabulary range");
  ad::Tape::Var logp = tape.log_softmax(word_head.logits(tape, h));
  ad::Tape::Var at_id = tape.pick(logp, static_cast<std::size_t>(token_id));
  if (token_id != 0) return at_id;  // in-vocab token
  // UNK: spell out with the frozen char model, or apply the UPP penalty.
  if (oov.mode == OovPolicy::kUppPenalty)
    return tape.add_const(at_id, -oov.log_vout);
  if (!spelling) throw ModelError("UNK token requires its original spelling");
  return tape.add_const(at_id, char_model.log_prob(*spelling));
}

ad::Tape::Var LrlmParams::relation_log_probs(ad::Tape& tape, ad::Tape::Var h,
                                             const TopicSubgraph& subgraph) {
  if (subgraph.edges.empty())
    throw ModelError("relation head called with an empty edge list");
  ad::Tape::Var u = rel_proj.logits(tape, h);
  std::vector<ad::Tape::Var> scores;
  for (const auto& e : subgraph.edges) {
    ad::Tape::Var rel_emb =
        tape.concat(tape.row(type_emb, kgv.type_row.at(e.rel_type)),
                    tape.row(ent_emb, kgv.entity_row_or_unk(e.object)));
    scores.push_back(tape.dot(rel_emb, u));
  }
  return tape.log_softmax(tape.stack(scores));
}

ad::Tape::Var LrlmParams::alias_log_probs(ad::Tape& tape, ad::Tape::Var h,
                                          const RelationEdge& edge,
                                          const TopicSubgraph& subgraph) {
  const auto& aliases = alias_forms(subgraph, edge);
  ad::Tape::Var u = tape.affine(w_alias, h, b_alias);
  std::vector<ad::Tape::Var> scores;
  for (const auto& a : aliases) {
    auto it = kgv.alias_row.find(join_alias(a));
    if (it == kgv.alias_row.end())
      throw ModelError("alias without feature row: " + join_alias(a));
    scores.push_back(tape.dot(tape.row(alias_feat, it->second), u));
  }
  return tape.log_softmax(tape.stack(scores));
}

WindowScore score_window(ad::Tape& tape, LrlmParams& params,
                         std::span<const std::pair<int, std::string>> tokens,
                         const TopicSubgraph& subgraph,
                         std::span<const SpanMatch> matches,
                         const RecState& initial, RecState* final_state,
                         const ScoreOptions& opts) {
  using Var = ad::Tape::Var;
  int n = static_cast<int>(tokens.size());
  if (n < 1) throw ModelError("cannot score an empty window");

  // Lattice over window-local coordinates.
  Lattice lat;
  lat.n = n;
  int max_end = opts.ends_with_eos ? n - 1 : n;
  for (const auto& m : matches) {
    if (m.start < 1 || m.end < m.start || m.end > max_end)
      throw ModelError("span match out of window range");
    lat.rel_arcs.push_back(RelArc{m.start, m.end, m});
  }

  std::vector<int> ids(n);
  for (int i = 0; i < n; ++i) ids[i] = tokens[i].first;
  std::mt19937_64* drop = opts.training ? opts.dropout_rng : nullptr;
  std::vector<Var> hs = encode_sequence(tape, params.encoder, params.tok_emb,
                                        ids, initial, final_state, drop);
  // hs[i-1] is h_i: the state before consuming token i.
  std::vector<Var> hd(n + 1);
  for (int i = 1; i <= n; ++i) {
    hd[i] = hs[i - 1];
    if (drop && params.dims.dropout > 0.0)
      hd[i] = tape.dropout(hd[i], params.dims.dropout, *drop);
  }

  // Word potentials: log P(WORD | h_i) + log P(x_i | h_i), every position.
  std::vector<Var> src(n + 1);
  std::vector<Var> word_pot(n + 1);
  bool has_rel = !lat.rel_arcs.empty();
  for (int i = 1; i <= n; ++i) {
    Var wlp = params.word_log_prob(tape, hd[i], tokens[i - 1].first,
                                   &tokens[i - 1].second, opts.oov);
    if (has_rel) {
      src[i] = params.source_log_probs(tape, hd[i]);
      word_pot[i] = tape.add(tape.pick(src[i], kSourceWord), wlp);
    } else {
      // No candidate relation spans anywhere in the window: the source
      // choice is degenerate and the marginal reduces to the word chain,
      // but the WORD-source cost still applies when edges exist.
      if (!subgraph.edges.empty()) {
        src[i] = params.source_log_probs(tape, hd[i]);
        word_pot[i] = tape.add(tape.pick(src[i], kSourceWord), wlp);
      } else {
        word_pot[i] = wlp;
      }
    }
  }

  // Relation potentials, grouped by start position so each relation softmax
  // is computed once per position and each alias softmax once per edge.
  std::vector<Var> rel_pot(lat.rel_arcs.size());
  std::vector<std::vector<int>> arcs_at(n + 1);
  for (std::size_t a = 0; a < lat.rel_arcs.size(); ++a)
    arcs_at[lat.rel_arcs[a].start].push_back(static_cast<int>(a));
  for (int l = 1; l <= n; ++l) {
    if (arcs_at[l].empty()) continue;
    Var rel_dist = params.relation_log_probs(tape, hd[l], subgraph);
    std::map<int, Var> alias_dist;  // edge_index -> log-probs over aliases
    for (int a : arcs_at[l]) {
      const SpanMatch& m = lat.rel_arcs[a].match;
      auto it = alias_dist.find(m.edge_index);
      if (it == alias_dist.end())
        it = alias_dist
                 .emplace(m.edge_index, params.alias_log_probs(
                                            tape, hd[l], m.edge, subgraph))
                 .first;
      Var pot = tape.add(tape.pick(src[l], kSourceRel),
                         tape.add(tape.pick(rel_dist,
                                            static_cast<std::size_t>(m.edge_index)),
                                  tape.pick(it->second,
                                            static_cast<std::size_t>(m.alias_index))));
      rel_pot[a] = pot;
    }
  }

  // Forward recursion on the tape.
  std::vector<std::vector<int>> by_end(n + 1);
  for (std::size_t a = 0; a < lat.rel_arcs.size(); ++a)
    by_end[lat.rel_arcs[a].end].push_back(static_cast<int>(a));
  std::vector<Var> alpha(n + 1);
  alpha[0] = tape.scalar(0.0);
  for (int i = 1; i <= n; ++i) {
    std::vector<Var> cand{tape.add(alpha[i - 1], word_pot[i])};
    for (int a : by_end[i])
      cand.push_back(tape.add(alpha[lat.rel_arcs[a].start - 1], rel_pot[a]));
    alpha[i] = cand.size() == 1 ? cand[0] : tape.logsumexp(cand);
  }
  Var nll = tape.neg(alpha[n]);

  WindowScore out;
  out.lattice = std::move(lat);
  out.pot.word_logp.assign(n + 1, 0.0);
  for (int i = 1; i <= n; ++i) out.pot.word_logp[i] = tape.scalar_val(word_pot[i]);
  out.pot.rel_logp.resize(rel_pot.size());
  for (std::size_t a = 0; a < rel_pot.size(); ++a)
    out.pot.rel_logp[a] = tape.scalar_val(rel_pot[a]);
  out.nll = nll;
  out.hidden.assign(hd.begin() + 1, hd.end());
  return out;
}

WindowScore score_document(ad::Tape& tape, LrlmParams& params,
                           const EncodedDoc& doc, const TopicSubgraph& subgraph,
                           const std::vector<SpanMatch>& matches,
                           const ScoreOptions& opts) {
  RecState init = RecState::zero(params.encoder);
  return score_window(tape, params, doc, subgraph, matches, init, nullptr, opts);
}

ad::Tape::Var vanilla_log_likelihood(
    ad::Tape& tape, LrlmParams& params,
    std::span<const std::pair<int, std::string>> tokens, const RecState& initial,
    RecState* final_state, const ScoreOptions& opts) {
  int n = static_cast<int>(tokens.size());
  if (n < 1) throw ModelError("cannot score an empty window");
  std::vector<int> ids(n);
  for (int i = 0; i < n; ++i) ids[i] = tokens[i].first;
  std::mt19937_64* drop = opts.training ? opts.dropout_rng : nullptr;
  std::vector<ad::Tape::Var> hs = encode_sequence(
      tape, params.encoder, params.tok_emb, ids, initial, final_state, drop);
  ad::Tape::Var total = tape.scalar(0.0);
  for (int i = 1; i <= n; ++i) {
    ad::Tape::Var h = hs[i - 1];
    if (drop && params.dims.dropout > 0.0)
      h = tape.dropout(h, params.dims.dropout, *drop);
    total = tape.add(total, params.word_log_prob(tape, h, tokens[i - 1].first,
                                                 &tokens[i - 1].second, opts.oov));
  }
  return tape.neg(total);
}

}  // namespace lrlm
