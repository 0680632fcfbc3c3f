#pragma once
// Tokenized documents, vocabulary construction, surface-form span matching
// (token-level Aho-Corasick), and greedy non-overlap pruning.

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lrlm/kg.hpp"

namespace lrlm {

struct Document {
  std::string id;
  std::string topic;       // entity id
  TokenSeq tokens;         // x_1..x_N, no EOS
  std::size_t n() const { return tokens.size(); }
};

struct Vocabulary {
  static constexpr const char* kUnk = "<unk>";
  static constexpr const char* kEos = "<eos>";

  std::unordered_map<std::string, int> id_of;
  std::vector<std::string> tokens;  // id -> token
  int min_freq = 1;

  int unk_id() const { return 0; }
  int eos_id() const { return 1; }
  std::size_t size() const { return tokens.size(); }
  bool contains(const std::string& t) const { return id_of.count(t) != 0; }
  int lookup(const std::string& t) const {
    auto it = id_of.find(t);
    return it == id_of.end() ? unk_id() : it->second;
  }
};

// A candidate text interval matched to (relation edge, surface form).
// start/end are 1-based inclusive token indices.
struct SpanMatch {
  int start = 0;
  int end = 0;
  RelationEdge edge;
  int edge_index = -1;   // index into the subgraph's edge list
  int alias_index = -1;  // index into the object's alias list
  std::size_t length() const { return static_cast<std::size_t>(end - start + 1); }

  friend bool operator==(const SpanMatch&, const SpanMatch&) = default;
};

struct CorpusError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tokens with corpus frequency >= min_freq (top max_size by frequency if
// capped), plus UNK and EOS. Deterministic: frequency desc, then lexicographic.
Vocabulary build_vocabulary(const std::vector<Document>& docs, int min_freq,
                            long max_size = -1);

// Every (start, end, edge, alias) whose alias token sequence equals
// tokens[start..end]. Overlapping and nested matches are all retained.
std::vector<SpanMatch> match_spans(const Document& doc,
                                   const TopicSubgraph& subgraph);

// Greedy non-overlap selection: length desc, start asc, canonical-form
// matches first, then relation-type id and alias index. Output is sorted by
// start index and pairwise non-overlapping.
std::vector<SpanMatch> prune_overlaps(const std::vector<SpanMatch>& matches,
                                      const TopicSubgraph& subgraph);

// Token ids with original spellings, EOS appended (length N+1). OOV tokens
// map to the UNK id but keep their spelling for char-model scoring.
using EncodedDoc = std::vector<std::pair<int, std::string>>;
EncodedDoc encode(const Document& doc, const Vocabulary& vocab);

// JSON-lines corpus: one {"id","topic","tokens":[...]} object per line.
std::vector<Document> load_corpus(const std::string& path);
void save_corpus(const std::vector<Document>& docs, const std::string& path);

// Vocabulary file: one token per line in id order.
void save_vocabulary(const Vocabulary& vocab, const std::string& path);
Vocabulary load_vocabulary(const std::string& path);

}  // namespace lrlm
