#pragma once
// Knowledge graph storage: entities with alias sets, typed relation edges,
// and star-shaped per-document subgraph extraction.

#include <map>
#include <optional>
#include <stdexcept>
#include <set>
#include <string>
#include <vector>

namespace lrlm {

using TokenSeq = std::vector<std::string>;

struct RelationEdge {
  std::string subject;
  std::string rel_type;
  std::string object;

  friend bool operator==(const RelationEdge&, const RelationEdge&) = default;
  friend auto operator<=>(const RelationEdge&, const RelationEdge&) = default;
};

struct Entity {
  std::string id;
  // Deduplicated, canonical form first. Each alias is a pre-tokenized
  // (whitespace-split) token sequence.
  std::vector<TokenSeq> aliases;
  std::optional<std::string> embedding_key;
};

struct KnowledgeGraph {
  std::map<std::string, Entity> entities;
  std::vector<RelationEdge> edges;
  std::set<std::string> relation_types;
};

// Star-shaped subgraph around a topic: every edge's subject is the topic.
struct TopicSubgraph {
  std::string topic;
  std::vector<RelationEdge> edges;
  // Topic plus the object entity of every edge.
  std::map<std::string, Entity> objects;
};

// Loads the JSON KG format: {"entities": [{"id", "aliases", "embedding_key"?}],
// "relations": [{"subject", "type", "object"}]}. Duplicate edges and aliases
// are deduplicated. Throws KgError on malformed input or dangling references.
KnowledgeGraph load_kg(const std::string& path);
void save_kg(const KnowledgeGraph& kg, const std::string& path);

TopicSubgraph extract_star_subgraph(const KnowledgeGraph& kg,
                                    const std::string& topic);

// The object entity's alias list for an edge of the subgraph, canonical first.
const std::vector<TokenSeq>& alias_forms(const TopicSubgraph& subgraph,
                                         const RelationEdge& edge);

struct KgError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Pretrained embedding text format: one line per key, the key followed by
// whitespace-separated decimal floats of the declared dimension.
std::map<std::string, std::vector<double>> load_embedding_file(
    const std::string& path, std::size_t dim);

}  // namespace lrlm
