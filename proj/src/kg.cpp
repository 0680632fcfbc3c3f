#include "lrlm/kg.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace lrlm {

namespace {

using nlohmann::json;

TokenSeq split_tokens(const std::string& s) {
  TokenSeq out;
  std::istringstream iss(s);
  std::string tok;
  while (iss >> tok) out.push_back(tok);
  return out;
}

std::string join_tokens(const TokenSeq& toks) {
  std::string out;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (i) out += ' ';
    out += toks[i];
  }
  return out;
}

std::size_t line_of_offset(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

}  // namespace

KnowledgeGraph load_kg(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw KgError("cannot open KG file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw KgError("KG parse error at line " +
                  std::to_string(line_of_offset(text, e.byte)) + " of " + path +
                  ": " + e.what());
  }

  KnowledgeGraph kg;
  if (!doc.is_object() || !doc.contains("entities") || !doc.contains("relations"))
    throw KgError("KG file must be an object with 'entities' and 'relations': " +
                  path);

  for (std::size_t i = 0; i < doc["entities"].size(); ++i) {
    const auto& je = doc["entities"][i];
    Entity ent;
    try {
      ent.id = je.at("id").get<std::string>();
      for (const auto& a : je.at("aliases")) {
        TokenSeq toks = split_tokens(a.get<std::string>());
        if (toks.empty())
          throw KgError("entity '" + ent.id + "' has an empty alias");
        if (std::find(ent.aliases.begin(), ent.aliases.end(), toks) ==
            ent.aliases.end())
          ent.aliases.push_back(std::move(toks));
      }
      if (je.contains("embedding_key"))
        ent.embedding_key = je["embedding_key"].get<std::string>();
    } catch (const json::exception& e) {
      throw KgError("malformed entity record #" + std::to_string(i) + " in " +
                    path + ": " + e.what());
    }
    if (ent.aliases.empty())
      throw KgError("entity '" + ent.id + "' has no surface forms (" + path + ")");
    if (kg.entities.count(ent.id))
      throw KgError("duplicate entity id '" + ent.id + "' in " + path);
    kg.entities.emplace(ent.id, std::move(ent));
  }

  for (std::size_t i = 0; i < doc["relations"].size(); ++i) {
    const auto& jr = doc["relations"][i];
    RelationEdge e;
    try {
      e.subject = jr.at("subject").get<std::string>();
      e.rel_type = jr.at("type").get<std::string>();
      e.object = jr.at("object").get<std::string>();
    } catch (const json::exception& ex) {
      throw KgError("malformed relation record #" + std::to_string(i) + " in " +
                    path + ": " + ex.what());
    }
    if (!kg.entities.count(e.subject))
      throw KgError("relation #" + std::to_string(i) +
                    " references unknown subject '" + e.subject + "'");
    if (!kg.entities.count(e.object))
      throw KgError("relation #" + std::to_string(i) +
                    " references unknown object '" + e.object + "'");
    kg.relation_types.insert(e.rel_type);
    if (std::find(kg.edges.begin(), kg.edges.end(), e) == kg.edges.end())
      kg.edges.push_back(std::move(e));
  }
  return kg;
}

void save_kg(const KnowledgeGraph& kg, const std::string& path) {
  json doc;
  doc["entities"] = json::array();
  for (const auto& [id, ent] : kg.entities) {
    json je;
    je["id"] = id;
    je["aliases"] = json::array();
    for (const auto& a : ent.aliases) je["aliases"].push_back(join_tokens(a));
    if (ent.embedding_key) je["embedding_key"] = *ent.embedding_key;
    doc["entities"].push_back(std::move(je));
  }
  doc["relations"] = json::array();
  for (const auto& e : kg.edges)
    doc["relations"].push_back(
        {{"subject", e.subject}, {"type", e.rel_type}, {"object", e.object}});
  std::ofstream out(path);
  if (!out) throw KgError("cannot write KG file: " + path);
  out << doc.dump(2) << '\n';
}

TopicSubgraph extract_star_subgraph(const KnowledgeGraph& kg,
                                    const std::string& topic) {
  auto it = kg.entities.find(topic);
  if (it == kg.entities.end()) throw KgError("unknown topic entity: " + topic);
  TopicSubgraph sg;
  sg.topic = topic;
  sg.objects.emplace(topic, it->second);
  for (const auto& e : kg.edges) {
    if (e.subject != topic) continue;
    sg.edges.push_back(e);
    sg.objects.emplace(e.object, kg.entities.at(e.object));
  }
  return sg;
}

const std::vector<TokenSeq>& alias_forms(const TopicSubgraph& subgraph,
                                         const RelationEdge& edge) {
  if (std::find(subgraph.edges.begin(), subgraph.edges.end(), edge) ==
      subgraph.edges.end())
    throw KgError("edge not in subgraph: " + edge.subject + " --" +
                  edge.rel_type + "--> " + edge.object);
  return subgraph.objects.at(edge.object).aliases;
}

std::map<std::string, std::vector<double>> load_embedding_file(
    const std::string& path, std::size_t dim) {
  std::ifstream in(path);
  if (!in) throw KgError("cannot open embedding file: " + path);
  std::map<std::string, std::vector<double>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream iss(line);
    std::string key;
    iss >> key;
    std::vector<double> v;
    double x;
    while (iss >> x) v.push_back(x);
    if (v.size() != dim)
      throw KgError("embedding line " + std::to_string(lineno) + " in " + path +
                    " has dimension " + std::to_string(v.size()) + ", expected " +
                    std::to_string(dim));
    out[key] = std::move(v);
  }
  return out;
}

}  // namespace lrlm
