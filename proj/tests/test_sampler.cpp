#include <algorithm>

#include "doctest.h"
#include "fixtures.hpp"
#include "lrlm/sampler.hpp"

using namespace lrlm;
using testfix::tiny_kg;
using testfix::tiny_params;

namespace {

TopicSubgraph topic_sg() {
  KnowledgeGraph kg = tiny_kg();
  return extract_star_subgraph(kg, "t0");
}

}  // namespace

TEST_CASE("sampling is reproducible per seed") {
  LrlmParams p = tiny_params(31);
  TopicSubgraph sg = topic_sg();
  SampleResult a = sample(p, sg, 40, 1.0, 5);
  SampleResult b = sample(p, sg, 40, 1.0, 5);
  CHECK(a.tokens == b.tokens);
  CHECK(a.log_prob == b.log_prob);
  CHECK(a.seed == 5);

  bool differ = false;
  for (std::uint64_t s = 6; s < 16 && !differ; ++s)
    differ = sample(p, sg, 40, 1.0, s).tokens != a.tokens;
  CHECK(differ);
}

TEST_CASE("annotations tile the output and mention spans are complete copies") {
  LrlmParams p = tiny_params(37);
  TopicSubgraph sg = topic_sg();
  int rel_count = 0;
  for (std::uint64_t s = 0; s < 30; ++s) {
    SampleResult r = sample(p, sg, 25, 1.0, s);
    CHECK(r.tokens.size() <= 26);  // final relation span may overshoot the cap
    int expect_start = 1;
    for (const auto& a : r.annotations) {
      CHECK(a.start == expect_start);
      CHECK(a.end >= a.start);
      expect_start = a.end + 1;
      if (a.is_rel) {
        ++rel_count;
        REQUIRE(a.edge.has_value());
        const auto& aliases = sg.objects.at(a.edge->object).aliases;
        REQUIRE(a.alias_index >= 0);
        REQUIRE(a.alias_index < static_cast<int>(aliases.size()));
        const auto& alias = aliases[a.alias_index];
        // emitted tokens are exactly the chosen surface form: no partial copy
        REQUIRE(a.end - a.start + 1 == static_cast<int>(alias.size()));
        for (std::size_t i = 0; i < alias.size(); ++i)
          CHECK(r.tokens[a.start - 1 + i] == alias[i]);
      } else {
        CHECK(a.end == a.start);
      }
    }
    CHECK(expect_start == static_cast<int>(r.tokens.size()) + 1);
    CHECK(r.log_prob < 0.0);
  }
  CHECK(rel_count > 0);  // an untrained model still proposes relation spans
}

TEST_CASE("a topic without edges yields pure word sampling") {
  LrlmParams p = tiny_params(41);
  KnowledgeGraph kg = tiny_kg();
  TopicSubgraph leaf = extract_star_subgraph(kg, "o1");
  for (std::uint64_t s = 0; s < 10; ++s) {
    SampleResult r = sample(p, leaf, 15, 1.0, s);
    for (const auto& a : r.annotations) CHECK_FALSE(a.is_rel);
  }
}

TEST_CASE("eos terminates generation without emitting a token") {
  LrlmParams p = tiny_params(43);
  TopicSubgraph sg = topic_sg();
  bool saw_eos = false, saw_cut = false;
  for (std::uint64_t s = 0; s < 60; ++s) {
    SampleResult r = sample(p, sg, 8, 1.2, s);
    if (r.terminated) {
      saw_eos = true;
      CHECK(r.tokens.size() < 8);
    } else {
      saw_cut = true;
      // a relation span starting at the budget edge finishes atomically, so
      // the cutoff may overshoot by at most one alias length
      CHECK(r.tokens.size() >= 8);
      CHECK(r.tokens.size() <= 8 + 1);  // longest alias has two tokens
    }
    for (const auto& t : r.tokens) CHECK(t != "<eos>");
  }
  CHECK(saw_eos);
  CHECK(saw_cut);
}

TEST_CASE("best_of picks the lowest per-token surprisal among its draws") {
  LrlmParams p = tiny_params(47);
  TopicSubgraph sg = topic_sg();
  const std::size_t k = 5;
  SampleResult best = best_of(p, sg, 20, 1.0, k, 100);
  double best_rate = -best.log_prob / static_cast<double>(best.tokens.size());
  for (std::size_t i = 0; i < k; ++i) {
    SampleResult s = sample(p, sg, 20, 1.0, 100 + i);
    double rate = -s.log_prob / static_cast<double>(
                                    std::max<std::size_t>(s.tokens.size(), 1));
    CHECK(best_rate <= rate + 1e-12);
  }
  CHECK_THROWS(best_of(p, sg, 20, 1.0, 0, 1));
}

TEST_CASE("invalid arguments are rejected") {
  LrlmParams p = tiny_params(53);
  TopicSubgraph sg = topic_sg();
  CHECK_THROWS(sample(p, sg, 0, 1.0, 1));
  CHECK_THROWS(sample(p, sg, 5, 0.0, 1));
  CHECK_THROWS(sample(p, sg, 5, -1.0, 1));
}

TEST_CASE("formatting brackets relation mentions") {
  SampleResult r;
  r.tokens = {"born", "in", "new", "karsten", "today"};
  SampleAnnotation w1{1, 1, false, std::nullopt, -1, false};
  SampleAnnotation w2{2, 2, false, std::nullopt, -1, false};
  SampleAnnotation rel{3, 4, true, RelationEdge{"t", "birthplace", "o"}, 0,
                       false};
  SampleAnnotation w3{5, 5, false, std::nullopt, -1, false};
  r.annotations = {w1, w2, rel, w3};
  CHECK(format_sample(r) == "born in new karsten [birthplace] today");
}
