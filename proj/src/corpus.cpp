#include "lrlm/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <queue>
#include <sstream>

#include "json.hpp"

namespace lrlm {

namespace {
using nlohmann::json;
}

Vocabulary build_vocabulary(const std::vector<Document>& docs, int min_freq,
                            long max_size) {
  if (min_freq < 1) throw CorpusError("min_freq must be >= 1");
  if (docs.empty()) throw CorpusError("cannot build vocabulary from empty corpus");
  std::unordered_map<std::string, long> freq;
  for (const auto& d : docs)
    for (const auto& t : d.tokens) ++freq[t];

  std::vector<std::pair<std::string, long>> items;
  for (auto& [tok, f] : freq)
    if (f >= min_freq && tok != Vocabulary::kUnk && tok != Vocabulary::kEos)
      items.emplace_back(tok, f);
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (max_size >= 0 && items.size() > static_cast<std::size_t>(max_size))
    items.resize(static_cast<std::size_t>(max_size));

  Vocabulary v;
  v.min_freq = min_freq;
  v.tokens = {Vocabulary::kUnk, Vocabulary::kEos};
  for (auto& [tok, f] : items) v.tokens.push_back(tok);
  for (std::size_t i = 0; i < v.tokens.size(); ++i)
    v.id_of[v.tokens[i]] = static_cast<int>(i);
  return v;
}

namespace {

// Token-level Aho-Corasick over the subgraph's alias sequences.
struct AcMatcher {
  struct Node {
    std::map<int, int> next;
    int fail = 0;
    std::vector<int> outputs;  // pattern ids ending here
  };
  struct Pattern {
    int edge_index;
    int alias_index;
    int length;
  };

  std::unordered_map<std::string, int> symbols;
  std::vector<Node> nodes{Node{}};
  std::vector<Pattern> patterns;

  int symbol(const std::string& tok, bool create) {
    auto it = symbols.find(tok);
    if (it != symbols.end()) return it->second;
    if (!create) return -1;
    int id = static_cast<int>(symbols.size());
    symbols.emplace(tok, id);
    return id;
  }

  void add(const TokenSeq& toks, int edge_index, int alias_index) {
    int cur = 0;
    for (const auto& t : toks) {
      int s = symbol(t, true);
      auto it = nodes[cur].next.find(s);
      if (it == nodes[cur].next.end()) {
        nodes.push_back(Node{});
        it = nodes[cur].next.emplace(s, static_cast<int>(nodes.size()) - 1).first;
      }
      cur = it->second;
    }
    patterns.push_back({edge_index, alias_index, static_cast<int>(toks.size())});
    nodes[cur].outputs.push_back(static_cast<int>(patterns.size()) - 1);
  }

  void build() {
    std::queue<int> q;
    for (auto& [s, child] : nodes[0].next) {
      nodes[child].fail = 0;
      q.push(child);
    }
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (auto& [s, child] : nodes[u].next) {
        int f = nodes[u].fail;
        while (f != 0 && !nodes[f].next.count(s)) f = nodes[f].fail;
        auto it = nodes[f].next.find(s);
        nodes[child].fail = (it != nodes[f].next.end() && it->second != child)
                                ? it->second
                                : 0;
        const auto& fo = nodes[nodes[child].fail].outputs;
        nodes[child].outputs.insert(nodes[child].outputs.end(), fo.begin(),
                                    fo.end());
        q.push(child);
      }
    }
  }

  int step(int state, int sym) const {
    if (sym < 0) return 0;
    while (true) {
      auto it = nodes[state].next.find(sym);
      if (it != nodes[state].next.end()) return it->second;
      if (state == 0) return 0;
      state = nodes[state].fail;
    }
  }
};

}  // namespace

std::vector<SpanMatch> match_spans(const Document& doc,
                                   const TopicSubgraph& subgraph) {
  if (doc.topic != subgraph.topic)
    throw CorpusError("document topic '" + doc.topic +
                      "' does not match subgraph topic '" + subgraph.topic + "'");
  AcMatcher ac;
  for (std::size_t ei = 0; ei < subgraph.edges.size(); ++ei) {
    const auto& aliases = subgraph.objects.at(subgraph.edges[ei].object).aliases;
    for (std::size_t ai = 0; ai < aliases.size(); ++ai)
      ac.add(aliases[ai], static_cast<int>(ei), static_cast<int>(ai));
  }
  ac.build();

  std::vector<SpanMatch> out;
  int state = 0;
  for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
    state = ac.step(state, ac.symbol(doc.tokens[i], false));
    for (int pid : ac.nodes[state].outputs) {
      const auto& p = ac.patterns[pid];
      SpanMatch m;
      m.end = static_cast<int>(i) + 1;  // 1-based inclusive
      m.start = m.end - p.length + 1;
      m.edge_index = p.edge_index;
      m.edge = subgraph.edges[p.edge_index];
      m.alias_index = p.alias_index;
      out.push_back(std::move(m));
    }
  }
  std::sort(out.begin(), out.end(), [](const SpanMatch& a, const SpanMatch& b) {
    return std::tie(a.start, a.end, a.edge_index, a.alias_index) <
           std::tie(b.start, b.end, b.edge_index, b.alias_index);
  });
  return out;
}

std::vector<SpanMatch> prune_overlaps(const std::vector<SpanMatch>& matches,
                                      const TopicSubgraph& subgraph) {
  for (const auto& m : matches) {
    if (m.edge_index < 0 ||
        static_cast<std::size_t>(m.edge_index) >= subgraph.edges.size() ||
        !(subgraph.edges[m.edge_index] == m.edge))
      throw CorpusError("span match references an edge outside the subgraph");
  }
  std::vector<SpanMatch> order = matches;
  // Selection order: length desc, start asc, canonical-form matches first,
  // ties by relation-type id then alias index. The trailing keys make the
  // comparator total so output is permutation-invariant.
  std::sort(order.begin(), order.end(), [](const SpanMatch& a, const SpanMatch& b) {
    if (a.length() != b.length()) return a.length() > b.length();
    if (a.start != b.start) return a.start < b.start;
    bool ac = a.alias_index == 0, bc = b.alias_index == 0;
    if (ac != bc) return ac;
    if (a.edge.rel_type != b.edge.rel_type) return a.edge.rel_type < b.edge.rel_type;
    if (a.alias_index != b.alias_index) return a.alias_index < b.alias_index;
    return std::tie(a.edge.object, a.edge_index) <
           std::tie(b.edge.object, b.edge_index);
  });

  std::vector<SpanMatch> kept;
  for (const auto& m : order) {
    bool overlaps = false;
    for (const auto& k : kept)
      if (m.start <= k.end && k.start <= m.end) {
        overlaps = true;
        break;
      }
    if (!overlaps) kept.push_back(m);
  }
  std::sort(kept.begin(), kept.end(),
            [](const SpanMatch& a, const SpanMatch& b) { return a.start < b.start; });
  return kept;
}

EncodedDoc encode(const Document& doc, const Vocabulary& vocab) {
  EncodedDoc out;
  out.reserve(doc.n() + 1);
  for (const auto& t : doc.tokens) out.emplace_back(vocab.lookup(t), t);
  out.emplace_back(vocab.eos_id(), Vocabulary::kEos);
  return out;
}

std::vector<Document> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open corpus file: " + path);
  std::vector<Document> docs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    Document d;
    try {
      json j = json::parse(line);
      d.id = j.at("id").get<std::string>();
      d.topic = j.at("topic").get<std::string>();
      for (const auto& t : j.at("tokens")) {
        std::string tok = t.get<std::string>();
        if (tok.empty())
          throw CorpusError("empty token in document '" + d.id + "'");
        d.tokens.push_back(std::move(tok));
      }
    } catch (const json::exception& e) {
      throw CorpusError("corpus parse error at line " + std::to_string(lineno) +
                        " of " + path + ": " + e.what());
    }
    if (d.tokens.empty())
      throw CorpusError("document '" + d.id + "' has no tokens (line " +
                        std::to_string(lineno) + " of " + path + ")");
    docs.push_back(std::move(d));
  }
  return docs;
}

void save_corpus(const std::vector<Document>& docs, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw CorpusError("cannot write corpus file: " + path);
  for (const auto& d : docs) {
    json j{{"id", d.id}, {"topic", d.topic}, {"tokens", d.tokens}};
    out << j.dump() << '\n';
  }
}

void save_vocabulary(const Vocabulary& vocab, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw CorpusError("cannot write vocabulary file: " + path);
  for (const auto& t : vocab.tokens) out << t << '\n';
}

Vocabulary load_vocabulary(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open vocabulary file: " + path);
  Vocabulary v;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) v.tokens.push_back(line);
  if (v.tokens.size() < 2 || v.tokens[0] != Vocabulary::kUnk ||
      v.tokens[1] != Vocabulary::kEos)
    throw CorpusError("vocabulary file must start with <unk> and <eos>: " + path);
  for (std::size_t i = 0; i < v.tokens.size(); ++i)
    v.id_of[v.tokens[i]] = static_cast<int>(i);
  if (v.id_of.size() != v.tokens.size())
    throw CorpusError("duplicate token in vocabulary file: " + path);
  return v;
}

}  // namespace lrlm
