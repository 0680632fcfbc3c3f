#pragma once
// LRLM probability heads: source selection, word generation with UNK
// spell-out, relation and surface-form selection. Produces arc potentials
// for the lattice; also hosts the vanilla word-only baseline.

#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "lrlm/backbone.hpp"
#include "lrlm/charlm.hpp"
#include "lrlm/corpus.hpp"
#include "lrlm/kg.hpp"
#include "lrlm/lattice.hpp"
#include "lrlm/tape.hpp"

namespace lrlm {

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Source head indices.
inline constexpr std::size_t kSourceRel = 0;
inline constexpr std::size_t kSourceWord = 1;

struct ModelDims {
  std::size_t vocab = 0;            // L, set from the vocabulary
  std::size_t embed = 32;
  std::size_t hidden = 32;          // D
  std::size_t layers = 1;
  std::size_t word_bottleneck = 16; // K
  std::size_t ent_dim = 16;
  std::size_t type_dim = 8;
  std::size_t rel_bottleneck = 16;
  std::size_t alias_dim = 16;
  double dropout = 0.1;
};

// Row indices into the KG embedding tables. Row 0 of the entity table is the
// shared UNK entity embedding.
struct KgVocab {
  std::unordered_map<std::string, std::size_t> entity_row;
  std::unordered_map<std::string, std::size_t> type_row;
  std::unordered_map<std::string, std::size_t> alias_row;  // joined alias text

  static KgVocab build(const KnowledgeGraph& kg);
  std::size_t entity_row_or_unk(const std::string& id) const {
    auto it = entity_row.find(id);
    return it == entity_row.end() ? 0 : it->second;
  }
};

// How to score the probability of an out-of-vocabulary word.
struct OovPolicy {
  enum Mode { kCharModel, kUppPenalty } mode = kCharModel;
  double log_vout = 0.0;  // log |V_out|, used by kUppPenalty
};

struct LrlmParams {
  ModelDims dims;
  KgVocab kgv;
  Vocabulary vocab;

  Tensor tok_emb;  // L x embed
  RecurrentEncoder encoder;
  Tensor w_src, b_src;             // 2 x D, 2
  BottleneckLinear word_head;      // D -> L through K
  BottleneckLinear rel_proj;       // D -> type_dim + ent_dim
  Tensor ent_emb;                  // (1 + #entities) x ent_dim, row 0 = UNK
  Tensor type_emb;                 // #types x type_dim
  Tensor w_alias, b_alias;         // alias_dim x D, alias_dim
  Tensor alias_feat;               // #alias-strings x alias_dim

  CharModel char_model;  // frozen while the LRLM trains

  // dims.vocab is taken from the vocabulary.
  static LrlmParams create(ModelDims dims, const KnowledgeGraph& kg,
                           Vocabulary vocab, CharModel char_model,
                           std::uint64_t seed);

  // Optional pretrained imports (same text format as kg_store embeddings).
  // Entities whose embedding_key is missing from the file keep the UNK row.
  void import_entity_embeddings(
      const KnowledgeGraph& kg,
      const std::map<std::string, std::vector<double>>& table);
  void import_alias_features(
      const std::map<std::string, std::vector<double>>& table);

  std::vector<Tensor*> trainable_tensors();  // excludes the char model
  std::vector<Tensor*> all_tensors();        // includes the char model

  // ---- heads (all log-space, on the given tape) ----
  ad::Tape::Var source_log_probs(ad::Tape& tape, ad::Tape::Var h);
  // spelling may be null for in-vocab ids; an UNK id without a spelling is an
  // error (the empty string is a valid, degenerate spelling).
  ad::Tape::Var word_log_prob(ad::Tape& tape, ad::Tape::Var h, int token_id,
                              const std::string* spelling,
                              const OovPolicy& oov = {});
  // Log-probs over subgraph.edges; throws on an empty edge list.
  ad::Tape::Var relation_log_probs(ad::Tape& tape, ad::Tape::Var h,
                                   const TopicSubgraph& subgraph);
  // Log-probs over the object's alias list of the given edge.
  ad::Tape::Var alias_log_probs(ad::Tape& tape, ad::Tape::Var h,
                                const RelationEdge& edge,
                                const TopicSubgraph& subgraph);
};

struct ScoreOptions {
  bool training = false;              // enables dropout
  std::mt19937_64* dropout_rng = nullptr;
  OovPolicy oov{};
  bool ends_with_eos = true;  // false for non-final TBPTT windows
};

struct WindowScore {
  Lattice lattice;
  ArcPotentials pot;          // plain values extracted from the tape
  ad::Tape::Var nll;          // -log marginal, differentiable
  std::vector<ad::Tape::Var> hidden;  // h_1..h_n on the tape
};

// Scores one token window (a whole encoded document, or one TBPTT window).
// `matches` use window-local 1-based coordinates. The encoder runs once over
// the true token sequence; hidden states are functions of X only.
WindowScore score_window(ad::Tape& tape, LrlmParams& params,
                         std::span<const std::pair<int, std::string>> tokens,
                         const TopicSubgraph& subgraph,
                         std::span<const SpanMatch> matches,
                         const RecState& initial, RecState* final_state,
                         const ScoreOptions& opts);

// Full-document convenience wrapper (zero initial state, EOS at the end).
WindowScore score_document(ad::Tape& tape, LrlmParams& params,
                           const EncodedDoc& doc, const TopicSubgraph& subgraph,
                           const std::vector<SpanMatch>& matches,
                           const ScoreOptions& opts = {});

// Word-by-word baseline NLL with UNK spell-out; no source or relation heads.
ad::Tape::Var vanilla_log_likelihood(
    ad::Tape& tape, LrlmParams& params,
    std::span<const std::pair<int, std::string>> tokens, const RecState& initial,
    RecState* final_state, const ScoreOptions& opts);

}  // namespace lrlm
