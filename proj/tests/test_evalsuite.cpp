#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "json.hpp"
#include "lrlm/evalsuite.hpp"

using namespace lrlm;
using testfix::tiny_doc;
using testfix::tiny_params;

TEST_CASE("perplexity aggregates document nlls over all tokens incl. eos") {
  LrlmParams p = tiny_params(61);
  std::vector<TrainDoc> docs = {
      tiny_doc(p, {"the", "red", "fox", "sees", "a", "blue", "jay"}, "a"),
      tiny_doc(p, {"rema", "sees", "the", "fox"}, "b")};
  EvalReport rep = perplexity(p, docs);
  CHECK(rep.token_count == 8 + 5);  // words + one eos each
  REQUIRE(rep.docs.size() == 2);
  CHECK(rep.docs[0].token_count == 8);
  double total = rep.docs[0].nll + rep.docs[1].nll;
  CHECK(rep.total_nll == doctest::Approx(total).epsilon(1e-12));
  CHECK(rep.perplexity ==
        doctest::Approx(std::exp(total / 13.0)).epsilon(1e-12));
  CHECK(rep.docs[0].word_avg_logp ==
        doctest::Approx(-rep.docs[0].nll / 8.0).epsilon(1e-12));
  CHECK(rep.docs[0].subgraph_edges == 2);
  // matches corpus_nll through the independent code path
  CHECK(rep.total_nll == doctest::Approx(corpus_nll(p, docs, false)).epsilon(1e-12));

  CHECK_THROWS(perplexity(p, {}));
}

TEST_CASE("upp equals perplexity exactly on an oov-free corpus") {
  LrlmParams p = tiny_params(67);
  std::vector<TrainDoc> docs = {
      tiny_doc(p, {"the", "red", "fox", "sees", "a", "blue", "jay"}, "a"),
      tiny_doc(p, {"rema", "sees", "the", "fox"}, "b")};
  EvalReport rep = perplexity(p, docs);
  CHECK(rep.oov_vocab_size == 0);
  REQUIRE(rep.upp.has_value());
  CHECK(*rep.upp == rep.perplexity);            // exact, not approximate
  CHECK(upp(p, docs) == rep.perplexity);        // direct call agrees
}

TEST_CASE("upp swaps each oov spelling cost for the uniform penalty") {
  LrlmParams p = tiny_params(71);
  // two OOV types: "zilf" (twice) and "vorp" (once)
  std::vector<TrainDoc> docs = {
      tiny_doc(p, {"the", "zilf", "fox", "vorp"}, "a"),
      tiny_doc(p, {"a", "zilf", "jay"}, "b")};
  EvalReport rep = perplexity(p, docs);
  CHECK(rep.oov_vocab_size == 2);

  // identity: nll_upp - nll_char = sum over oov tokens of
  //   (char spelling log-prob + log |V_out|)
  double char_mass = 2 * p.char_model.log_prob("zilf") +
                     p.char_model.log_prob("vorp");
  double nll_char = rep.total_nll;
  double nll_upp =
      std::log(*rep.upp) * static_cast<double>(rep.token_count);
  // the exp/log round trip through the two perplexities costs a few ulps
  CHECK(nll_upp - nll_char ==
        doctest::Approx(char_mass + 3 * std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("upp on a three-token document against a hand-built identity") {
  LrlmParams p = tiny_params(73);
  std::vector<TrainDoc> docs = {tiny_doc(p, {"the", "glorp", "fox"}, "a")};
  double ppl = perplexity(p, docs).perplexity;
  double u = upp(p, docs);
  // |V_out| = 1, so the swap is exactly the spelling probability
  double nll_char = std::log(ppl) * 4.0;
  double nll_upp = std::log(u) * 4.0;
  CHECK(nll_upp - nll_char ==
        doctest::Approx(p.char_model.log_prob("glorp")).epsilon(1e-9));
}

TEST_CASE("mention statistics") {
  auto rel_ann = [](int s, int e) {
    return SampleAnnotation{s, e, true, RelationEdge{"t", "r", "o"}, 0, false};
  };
  auto word_ann = [](int s) {
    return SampleAnnotation{s, s, false, std::nullopt, -1, false};
  };
  SampleResult s1;
  s1.annotations = {word_ann(1), rel_ann(2, 3), rel_ann(4, 4)};
  SampleResult s2;
  s2.annotations = {word_ann(1), word_ann(2)};

  MentionStats ms = mention_stats({s1, s2});
  CHECK(ms.partial_avg == 0.0);
  CHECK(ms.full_avg == doctest::Approx(1.0));

  std::vector<std::size_t> valid = {1, 0};
  ms = mention_stats({s1, s2}, &valid);
  CHECK(ms.valid_avg == doctest::Approx(0.5));
  CHECK(ms.invalid_avg == doctest::Approx(0.5));

  std::vector<std::size_t> wrong_len = {1};
  CHECK_THROWS(mention_stats({s1, s2}, &wrong_len));
  std::vector<std::size_t> too_many = {5, 0};
  CHECK_THROWS(mention_stats({s1, s2}, &too_many));
  CHECK(mention_stats({}).full_avg == 0.0);
}

TEST_CASE("annotate reports normalized tilings per interval") {
  LrlmParams p = tiny_params(79);
  TrainDoc doc =
      tiny_doc(p, {"the", "red", "fox", "sees", "a", "blue", "jay"}, "a");
  REQUIRE(doc.matches.size() == 2);
  std::vector<std::pair<int, int>> intervals = {
      {doc.matches[0].start, doc.matches[0].end},
      {doc.matches[1].start, doc.matches[1].end},
      {1, 1}};
  auto reports = annotate(p, doc, intervals);
  REQUIRE(reports.size() == 3);
  for (const auto& rep : reports) {
    double total = 0.0;
    for (const auto& row : rep.rows) total += row.prob;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
  // the mention interval includes a pattern for its relation
  bool found = false;
  for (const auto& row : reports[0].rows)
    if (row.pattern.find(doc.matches[0].edge.rel_type) != std::string::npos)
      found = true;
  CHECK(found);

  std::string text = format_interval_report(doc, reports[0]);
  CHECK(text.find("red") != std::string::npos);
  CHECK(text.find("tokens") != std::string::npos);
}

TEST_CASE("relation-count bins are equal-count and split at the median") {
  std::vector<DocEval> docs;
  for (int i = 0; i < 10; ++i) {
    DocEval d;
    d.id = "d" + std::to_string(i);
    d.subgraph_edges = static_cast<std::size_t>(i);  // 0..9
    d.word_avg_logp = -static_cast<double>(i);
    docs.push_back(d);
  }
  auto bins = bin_by_relations(docs, 2);
  REQUIRE(bins.size() == 2);
  CHECK(bins[0].doc_count == 5);
  CHECK(bins[1].doc_count == 5);
  CHECK(bins[0].mean_edges == doctest::Approx(2.0));  // 0..4
  CHECK(bins[1].mean_edges == doctest::Approx(7.0));  // 5..9
  CHECK(bins[0].mean_word_avg_logp == doctest::Approx(-2.0));

  auto three = bin_by_relations(docs, 3);
  std::size_t total = 0;
  for (const auto& b : three) total += b.doc_count;
  CHECK(total == 10);
  CHECK_THROWS(bin_by_relations({}, 2));
  CHECK_THROWS(bin_by_relations(docs, 0));
}

TEST_CASE("report files are written and parseable") {
  LrlmParams p = tiny_params(83);
  std::vector<TrainDoc> docs = {
      tiny_doc(p, {"the", "red", "fox"}, "a"),
      tiny_doc(p, {"a", "blue", "jay", "sees", "rema"}, "b")};
  EvalReport rep = perplexity(p, docs);
  auto dir = std::filesystem::temp_directory_path();
  auto jpath = (dir / "report.json").string();
  auto cpath = (dir / "report.csv").string();
  auto spath = (dir / "bins.svg").string();
  write_report_json(rep, jpath);
  write_report_csv(rep, cpath);
  write_bins_svg(rep.bin_table, spath);

  std::ifstream jin(jpath);
  nlohmann::json j;
  jin >> j;
  CHECK(j["docs"].size() == 2);
  CHECK(j["perplexity"].get<double>() == doctest::Approx(rep.perplexity));
  std::ifstream cin_(cpath);
  std::string header;
  std::getline(cin_, header);
  CHECK(header == "id,token_count,nll,word_avg_logp,subgraph_edges");
  std::ifstream sin(spath);
  std::string svg((std::istreambuf_iterator<char>(sin)), {});
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("<rect") != std::string::npos);
}
