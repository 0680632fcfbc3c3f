// Deterministic synthetic corpus generator: 20 musician topics with star
// subgraphs (genre / instrument / birthplace / label / associate edges) and
// templated biography documents. Object names are rare multi-token strings,
// so copying them through relations is much cheaper than spelling them out.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "lrlm/corpus.hpp"
#include "lrlm/kg.hpp"

using namespace lrlm;

namespace {

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ' ') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

struct Topic {
  std::string id;
  std::string name;        // canonical 2-token name
  std::string short_name;  // 1-token nickname
  std::string genre, instrument, birthplace, label, associate;
};

}  // namespace

int main(int argc, char** argv) {
  std::string out_dir = argc > 1 ? argv[1] : "data/toy";
  std::filesystem::create_directories(out_dir);

  const std::vector<std::string> first = {
      "mara",  "toren", "elsha", "rilka",  "doven", "ysolde", "patrin",
      "kelda", "orrin", "sable", "fenwick", "ilsa",  "brann",  "zerra",
      "calum", "nyssa", "edric", "wrenna", "josper", "talya"};
  const std::vector<std::string> last = {
      "velden",  "ashgrove", "quillon", "marrow",  "dreyfus", "hollan",
      "ستar",    "brackley", "noviere", "tamsin",  "grell",   "ovart",
      "kestrel", "mirelle",  "dunmore", "farrow",  "iversen", "lockwood",
      "petrell", "venn"};
  // one name above is deliberately non-ascii to exercise byte-level spelling
  const std::vector<std::string> genres = {
      "dustfolk", "glasswave", "tidepunk",  "mirecore",
      "frostjazz", "embersoul", "thornstep", "palegrass"};
  const std::vector<std::string> instruments = {
      "glass harp",   "bone flute",    "brass viol",   "reed organ",
      "tin whistle",  "slate drum",    "wire zither",  "hollow bell"};
  const std::vector<std::string> cities = {
      "port velden",        "ashen hollow",     "new karsten",
      "lower bryne",        "saint maren",      "fort ilsworth",
      "cold harbor point",  "the grey shallows", "upper dunwich",
      "mirren cross",       "old tallow gate",  "west amberfield"};
  const std::vector<std::string> labels = {
      "silver echo records", "tall pine sound",   "broken lantern music",
      "red harbor press",    "quiet owl records", "black kettle sound",
      "paper moon music",    "long winter press", "gilded crow records",
      "far meadow sound"};
  const std::vector<std::string> bands = {
      "the hollow suns",   "iron meadow",      "the velvet shoal",
      "cinder and smoke",  "the last ferry",   "pale river club",
      "the wandering aunts", "stone orchard",  "the glass parade",
      "north of nowhere"};

  KnowledgeGraph kg;
  auto add_entity = [&](const std::string& id,
                        std::vector<std::string> alias_strings) {
    Entity e;
    e.id = id;
    for (const auto& s : alias_strings) e.aliases.push_back(split(s));
    kg.entities.emplace(id, std::move(e));
  };
  auto add_edge = [&](const std::string& s, const std::string& t,
                      const std::string& o) {
    kg.edges.push_back({s, t, o});
    kg.relation_types.insert(t);
  };

  for (const auto& g : genres) add_entity("genre/" + g, {g});
  for (const auto& s : instruments) add_entity("inst/" + split(s)[0], {s});
  for (const auto& s : cities) add_entity("city/" + split(s)[0] + "_" + split(s)[1], {s});
  for (const auto& s : labels) add_entity("label/" + split(s)[0], {s});
  for (const auto& s : bands) add_entity("band/" + split(s)[1], {s});

  std::vector<Topic> topics;
  for (int i = 0; i < 20; ++i) {
    Topic t;
    t.name = first[i] + " " + last[i];
    t.short_name = first[i];
    t.id = "person/" + first[i];
    t.genre = "genre/" + genres[i % genres.size()];
    t.instrument = "inst/" + split(instruments[(i * 3 + 1) % instruments.size()])[0];
    t.birthplace = "city/" + split(cities[(i * 5 + 2) % cities.size()])[0] + "_" +
                   split(cities[(i * 5 + 2) % cities.size()])[1];
    t.label = "label/" + split(labels[(i * 7 + 3) % labels.size()])[0];
    t.associate = "band/" + split(bands[(i * 11 + 4) % bands.size()])[1];
    add_entity(t.id, {t.name, t.short_name});
    add_edge(t.id, "name", t.id);
    add_edge(t.id, "genre", t.genre);
    add_edge(t.id, "instrument", t.instrument);
    add_edge(t.id, "birthplace", t.birthplace);
    add_edge(t.id, "label", t.label);
    add_edge(t.id, "associated_act", t.associate);
    topics.push_back(t);
  }
  save_kg(kg, out_dir + "/kg.json");

  std::mt19937_64 rng(12345);
  auto canonical = [&](const std::string& ent) {
    std::string out;
    for (const auto& tok : kg.entities.at(ent).aliases[0]) {
      if (!out.empty()) out += ' ';
      out += tok;
    }
    return out;
  };

  // Sentence templates; placeholders are replaced by canonical object names.
  const std::vector<std::string> openers = {
      "{N} is a {G} musician from {C} .",
      "{N} was born in {C} and became a noted {G} performer .",
      "the {G} artist {N} grew up near {C} .",
      "{N} , raised in {C} , is best known for {G} music ."};
  const std::vector<std::string> middles = {
      "she plays the {I} on most of her recordings .",
      "critics praised her work on the {I} .",
      "her early records feature the {I} throughout .",
      "live audiences know her for long {I} solos .",
      "the {I} remains central to her sound ."};
  const std::vector<std::string> labels_s = {
      "she records for {L} .",
      "after years without a deal she signed with {L} .",
      "{L} released her first three albums .",
      "most of her catalog appeared on {L} ."};
  const std::vector<std::string> assoc_s = {
      "early tours with {A} made her name .",
      "she often appears on stage with {A} .",
      "a split single with {A} sold out quickly .",
      "fans first heard her as a guest of {A} ."};
  const std::vector<std::string> closers = {
      "a new album is expected next year .",
      "she still lives near her home town .",
      "her influence on the scene keeps growing .",
      "collectors trade her early tapes at high prices .",
      "a short film about her won several awards ."};

  auto fill = [&](std::string tpl, const Topic& t) {
    auto repl = [&](const std::string& key, const std::string& val) {
      std::size_t p;
      while ((p = tpl.find(key)) != std::string::npos)
        tpl.replace(p, key.size(), val);
    };
    repl("{N}", canonical(t.id));
    repl("{G}", canonical(t.genre));
    repl("{I}", canonical(t.instrument));
    repl("{C}", canonical(t.birthplace));
    repl("{L}", canonical(t.label));
    repl("{A}", canonical(t.associate));
    return tpl;
  };

  // Rare one-off words injected into dev/test docs so those splits have OOV.
  int oov_counter = 0;
  auto oov_word = [&]() {
    static const std::vector<std::string> stems = {"quar", "blen", "smol",
                                                   "driv", "plar", "vost"};
    static const std::vector<std::string> ends = {"ixen", "omby", "ulet",
                                                  "arkle", "yne"};
    ++oov_counter;
    return stems[oov_counter % stems.size()] +
           ends[(oov_counter / 3) % ends.size()];
  };

  std::vector<Document> train, dev, test;
  auto make_doc = [&](const Topic& t, int serial, bool with_oov) {
    Document d;
    d.id = t.id.substr(7) + "-" + std::to_string(serial);
    d.topic = t.id;
    std::string text = fill(openers[rng() % openers.size()], t);
    text += " " + fill(middles[rng() % middles.size()], t);
    text += " " + fill(labels_s[rng() % labels_s.size()], t);
    text += " " + fill(assoc_s[rng() % assoc_s.size()], t);
    if (with_oov)
      text += " a reviewer once called her sound " + oov_word() + " .";
    text += " " + closers[rng() % closers.size()];
    d.tokens = split(text);
    return d;
  };

  int serial = 0;
  for (const auto& t : topics) {
    for (int k = 0; k < 10; ++k) train.push_back(make_doc(t, ++serial, false));
    for (int k = 0; k < 2; ++k) dev.push_back(make_doc(t, ++serial, k == 0));
    for (int k = 0; k < 2; ++k) test.push_back(make_doc(t, ++serial, k == 0));
  }
  save_corpus(train, out_dir + "/train.jsonl");
  save_corpus(dev, out_dir + "/dev.jsonl");
  save_corpus(test, out_dir + "/test.jsonl");
  std::cout << "wrote " << train.size() << " train / " << dev.size()
            << " dev / " << test.size() << " test docs to " << out_dir << "\n";
  return 0;
}
