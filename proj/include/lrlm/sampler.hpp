#pragma once
// Generation from a topic subgraph: at each step draw a source, then either a
// vocabulary word (with char-model spell-out for UNK, EOS ends generation) or
// a relation edge plus surface form, emitting the whole alias span.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lrlm/model.hpp"

namespace lrlm {

struct SampleAnnotation {
  int start = 0;  // 1-based inclusive
  int end = 0;
  bool is_rel = false;
  std::optional<RelationEdge> edge;
  int alias_index = -1;
  bool unk_spellout = false;  // word drawn through the char model
};

struct SampleResult {
  std::vector<std::string> tokens;
  std::vector<SampleAnnotation> annotations;  // tile the token sequence
  bool terminated = false;                    // EOS drawn (vs max_tokens hit)
  double log_prob = 0.0;  // untempered model log-prob of the derivation
  std::uint64_t seed = 0;
};

SampleResult sample(LrlmParams& params, const TopicSubgraph& subgraph,
                    std::size_t max_tokens, double temperature,
                    std::uint64_t seed);

// Draws k samples (per-sample streams derived from seed) and returns the one
// with the lowest per-token NLL.
SampleResult best_of(LrlmParams& params, const TopicSubgraph& subgraph,
                     std::size_t max_tokens, double temperature, std::size_t k,
                     std::uint64_t seed);

// Figure-style display text with bracketed relation types after copied spans.
std::string format_sample(const SampleResult& s);

}  // namespace lrlm
