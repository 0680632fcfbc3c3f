#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "lrlm/kg.hpp"

using namespace lrlm;

namespace {

std::string write_tmp(const std::string& name, const std::string& text) {
  auto path = (std::filesystem::temp_directory_path() / name).string();
  std::ofstream out(path);
  out << text;
  return path;
}

const char* kSmallKg = R"({
  "entities": [
    {"id": "q1", "aliases": ["barack obama", "obama", "barack obama"]},
    {"id": "q2", "aliases": ["honolulu"], "embedding_key": "hon"},
    {"id": "q3", "aliases": ["politician"]}
  ],
  "relations": [
    {"subject": "q1", "type": "birthplace", "object": "q2"},
    {"subject": "q1", "type": "occupation", "object": "q3"},
    {"subject": "q1", "type": "birthplace", "object": "q2"},
    {"subject": "q2", "type": "occupation", "object": "q3"}
  ]
})";

}  // namespace

TEST_CASE("kg loads with deduplication and whitespace-split aliases") {
  auto path = write_tmp("kg_small.json", kSmallKg);
  KnowledgeGraph kg = load_kg(path);
  CHECK(kg.entities.size() == 3);
  const Entity& e1 = kg.entities.at("q1");
  REQUIRE(e1.aliases.size() == 2);  // duplicate dropped
  CHECK(e1.aliases[0] == TokenSeq{"barack", "obama"});  // canonical first
  CHECK(e1.aliases[1] == TokenSeq{"obama"});
  CHECK(kg.entities.at("q2").embedding_key == "hon");
  CHECK_FALSE(kg.entities.at("q1").embedding_key.has_value());
  CHECK(kg.edges.size() == 3);  // duplicate edge dropped
  CHECK(kg.relation_types == std::set<std::string>{"birthplace", "occupation"});
}

TEST_CASE("kg round-trips through save") {
  auto path = write_tmp("kg_rt_in.json", kSmallKg);
  KnowledgeGraph kg = load_kg(path);
  auto out = (std::filesystem::temp_directory_path() / "kg_rt_out.json").string();
  save_kg(kg, out);
  KnowledgeGraph kg2 = load_kg(out);
  CHECK(kg2.entities.size() == kg.entities.size());
  CHECK(kg2.edges == kg.edges);
  CHECK(kg2.entities.at("q1").aliases == kg.entities.at("q1").aliases);
  CHECK(kg2.entities.at("q2").embedding_key == kg.entities.at("q2").embedding_key);
}

TEST_CASE("kg load errors") {
  CHECK_THROWS_AS(load_kg("/nonexistent/kg.json"), KgError);

  auto bad_json = write_tmp("kg_bad.json", "{\n  \"entities\": [,]\n}");
  CHECK_THROWS_WITH_AS(load_kg(bad_json),
                       doctest::Contains("line 2"), KgError);

  auto dangling = write_tmp("kg_dangling.json", R"({
    "entities": [{"id": "a", "aliases": ["a"]}],
    "relations": [{"subject": "a", "type": "t", "object": "missing"}]
  })");
  CHECK_THROWS_WITH_AS(load_kg(dangling), doctest::Contains("missing"), KgError);

  auto empty_alias = write_tmp("kg_empty_alias.json", R"({
    "entities": [{"id": "a", "aliases": ["  "]}],
    "relations": []
  })");
  CHECK_THROWS_AS(load_kg(empty_alias), KgError);

  auto dup = write_tmp("kg_dup.json", R"({
    "entities": [{"id": "a", "aliases": ["x"]}, {"id": "a", "aliases": ["y"]}],
    "relations": []
  })");
  CHECK_THROWS_WITH_AS(load_kg(dup), doctest::Contains("duplicate"), KgError);

  auto not_obj = write_tmp("kg_not_obj.json", "[1, 2]");
  CHECK_THROWS_AS(load_kg(not_obj), KgError);
}

TEST_CASE("star subgraph keeps only edges whose subject is the topic") {
  auto path = write_tmp("kg_star.json", kSmallKg);
  KnowledgeGraph kg = load_kg(path);
  TopicSubgraph sg = extract_star_subgraph(kg, "q1");
  CHECK(sg.topic == "q1");
  CHECK(sg.edges.size() == 2);
  for (const auto& e : sg.edges) CHECK(e.subject == "q1");
  // objects: topic itself plus both edge objects
  CHECK(sg.objects.size() == 3);
  CHECK(sg.objects.count("q1") == 1);

  TopicSubgraph leaf = extract_star_subgraph(kg, "q3");
  CHECK(leaf.edges.empty());
  CHECK(leaf.objects.size() == 1);

  CHECK_THROWS_AS(extract_star_subgraph(kg, "nope"), KgError);
}

TEST_CASE("alias_forms resolves the object entity of a subgraph edge") {
  auto path = write_tmp("kg_alias.json", kSmallKg);
  KnowledgeGraph kg = load_kg(path);
  TopicSubgraph sg = extract_star_subgraph(kg, "q1");
  const auto& forms = alias_forms(sg, sg.edges[0]);
  CHECK(forms == kg.entities.at(sg.edges[0].object).aliases);
  RelationEdge foreign{"q2", "occupation", "q3"};
  CHECK_THROWS_AS(alias_forms(sg, foreign), KgError);
}

TEST_CASE("embedding file parsing") {
  auto path = write_tmp("emb.txt", "hon 1.5 -2.0\nother 0 3\n");
  auto table = load_embedding_file(path, 2);
  REQUIRE(table.size() == 2);
  CHECK(table.at("hon") == std::vector<double>{1.5, -2.0});
  CHECK_THROWS(load_embedding_file(path, 3));
  CHECK_THROWS(load_embedding_file("/nonexistent/emb.txt", 2));
}
