#pragma once
// Shared tiny-model fixtures for the unit tests.

#include <random>
#include <string>
#include <vector>

#include "lrlm/model.hpp"
#include "lrlm/training.hpp"

namespace lrlm::testfix {

inline KnowledgeGraph tiny_kg() {
  KnowledgeGraph kg;
  auto add = [&](const std::string& id,
                 std::vector<std::vector<std::string>> aliases) {
    Entity e;
    e.id = id;
    e.aliases = std::move(aliases);
    kg.entities.emplace(id, std::move(e));
  };
  add("t0", {{"rema"}});
  add("o1", {{"red", "fox"}, {"fox"}});
  add("o2", {{"blue", "jay"}});
  kg.edges = {{"t0", "likes", "o1"}, {"t0", "sees", "o2"}};
  kg.relation_types = {"likes", "sees"};
  return kg;
}

inline Vocabulary tiny_vocab() {
  std::vector<Document> docs(1);
  docs[0].tokens = {"the", "the", "red", "fox", "sees", "a", "blue",
                    "jay", "today", "rema"};
  return build_vocabulary(docs, 1);
}

inline LrlmParams tiny_params(std::uint64_t seed = 3, double dropout = 0.0) {
  std::mt19937_64 rng(seed);
  CharModel cm({"the", "red", "fox", "blue", "jay"}, 3, 4, rng);
  ModelDims dims;
  dims.embed = 5;
  dims.hidden = 6;
  dims.layers = 1;
  dims.word_bottleneck = 4;
  dims.ent_dim = 4;
  dims.type_dim = 3;
  dims.rel_bottleneck = 4;
  dims.alias_dim = 3;
  dims.dropout = dropout;
  return LrlmParams::create(dims, tiny_kg(), tiny_vocab(), std::move(cm), seed);
}

inline TrainDoc tiny_doc(const LrlmParams& params,
                         std::vector<std::string> words,
                         const std::string& id = "d0") {
  KnowledgeGraph kg = tiny_kg();
  TrainDoc td;
  td.id = id;
  td.subgraph = extract_star_subgraph(kg, "t0");
  Document doc;
  doc.id = id;
  doc.topic = "t0";
  doc.tokens = std::move(words);
  td.matches = prune_overlaps(match_spans(doc, td.subgraph), td.subgraph);
  td.tokens = encode(doc, params.vocab);
  return td;
}

}  // namespace lrlm::testfix
