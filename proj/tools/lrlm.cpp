// Command-line driver: prepare / train-char / train / eval / sample /
// annotate. Options may come from a JSON config file (--config); explicit
// flags override it. Failures print one JSON error line on stderr and exit
// nonzero.
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lrlm/charlm.hpp"
#include "lrlm/checkpoint.hpp"
#include "lrlm/evalsuite.hpp"
#include "lrlm/model.hpp"
#include "lrlm/sampler.hpp"
#include "lrlm/training.hpp"

using namespace lrlm;
using nlohmann::json;

namespace {

struct CliError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json load_config_arg(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") {
      std::ifstream in(argv[i + 1]);
      if (!in) throw CliError(std::string("cannot open config file: ") + argv[i + 1]);
      json j;
      try {
        in >> j;
      } catch (const json::exception& e) {
        throw CliError(std::string("bad config JSON: ") + e.what());
      }
      return j;
    }
  }
  return json::object();
}

template <typename T>
void cfg_get(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j[key].get<T>();
}

std::vector<TrainDoc> load_docs(const KnowledgeGraph& kg,
                                const std::string& corpus_path,
                                const Vocabulary& vocab) {
  std::vector<TrainDoc> out;
  for (const auto& doc : load_corpus(corpus_path)) {
    TrainDoc td;
    td.id = doc.id;
    td.subgraph = extract_star_subgraph(kg, doc.topic);
    td.matches = prune_overlaps(match_spans(doc, td.subgraph), td.subgraph);
    td.tokens = encode(doc, vocab);
    out.push_back(std::move(td));
  }
  return out;
}

void write_json_file(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw CliError("cannot write " + path);
  out << j.dump(2) << '\n';
}

// ---- model directory layout: model.ckpt, model.json, vocab.txt ----

struct ModelMeta {
  ModelDims dims;
  std::size_t char_embed = 16, char_hidden = 32;
  bool vanilla = false;
};

json meta_to_json(const ModelMeta& m) {
  return {{"vanilla", m.vanilla},
          {"char", {{"embed", m.char_embed}, {"hidden", m.char_hidden}}},
          {"dims",
           {{"embed", m.dims.embed},
            {"hidden", m.dims.hidden},
            {"layers", m.dims.layers},
            {"word_bottleneck", m.dims.word_bottleneck},
            {"ent_dim", m.dims.ent_dim},
            {"type_dim", m.dims.type_dim},
            {"rel_bottleneck", m.dims.rel_bottleneck},
            {"alias_dim", m.dims.alias_dim},
            {"dropout", m.dims.dropout}}}};
}

ModelMeta meta_from_json(const json& j) {
  ModelMeta m;
  m.vanilla = j.at("vanilla").get<bool>();
  m.char_embed = j.at("char").at("embed").get<std::size_t>();
  m.char_hidden = j.at("char").at("hidden").get<std::size_t>();
  const json& d = j.at("dims");
  m.dims.embed = d.at("embed").get<std::size_t>();
  m.dims.hidden = d.at("hidden").get<std::size_t>();
  m.dims.layers = d.at("layers").get<std::size_t>();
  m.dims.word_bottleneck = d.at("word_bottleneck").get<std::size_t>();
  m.dims.ent_dim = d.at("ent_dim").get<std::size_t>();
  m.dims.type_dim = d.at("type_dim").get<std::size_t>();
  m.dims.rel_bottleneck = d.at("rel_bottleneck").get<std::size_t>();
  m.dims.alias_dim = d.at("alias_dim").get<std::size_t>();
  m.dims.dropout = d.at("dropout").get<double>();
  return m;
}

CharModel make_char_shell(std::size_t embed, std::size_t hidden) {
  std::mt19937_64 rng(0);
  // Placeholder alphabet; shapes and byte map are overwritten on load.
  return CharModel({"a"}, embed, hidden, rng);
}

std::pair<LrlmParams, ModelMeta> load_model_dir(const std::string& dir,
                                                const KnowledgeGraph& kg) {
  std::ifstream mj(dir + "/model.json");
  if (!mj) throw CliError("no model.json in " + dir);
  json j;
  mj >> j;
  ModelMeta meta = meta_from_json(j);
  Vocabulary vocab = load_vocabulary(dir + "/vocab.txt");
  CharModel cm = make_char_shell(meta.char_embed, meta.char_hidden);
  LrlmParams params =
      LrlmParams::create(meta.dims, kg, std::move(vocab), std::move(cm), 0);
  auto tensors = params.all_tensors();
  load_checkpoint(dir + "/model.ckpt", tensors);
  params.char_model.rebuild_alphabet();
  params.char_model.frozen = true;
  return {std::move(params), meta};
}

std::vector<std::string> unique_words(const std::vector<Document>& docs) {
  std::set<std::string> uniq;
  for (const auto& d : docs)
    for (const auto& t : d.tokens) uniq.insert(t);
  return {uniq.begin(), uniq.end()};
}

double train_char_model(CharModel& cm, const std::vector<std::string>& words,
                        int epochs, double lr, std::uint64_t seed) {
  Adam adam({lr});
  auto tensors = cm.trainable_tensors();
  std::mt19937_64 shuffle_rng(seed);
  double avg = 0.0;
  for (int e = 0; e < epochs; ++e) {
    std::vector<std::size_t> order(words.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double total = 0.0;
    for (std::size_t i : order) {
      ad::Tape tape;
      ad::Tape::Var loss = cm.nll(tape, words[i]);
      total += tape.scalar_val(loss);
      for (Tensor* t : tensors) t->zero_grad();
      tape.backward(loss);
      adam.step(tensors);
    }
    avg = total / static_cast<double>(words.size());
    std::cout << "char epoch " << e + 1 << " avg nll " << avg << "\n";
  }
  return avg;
}

// ---------------------------------------------------------------------------

int cmd_prepare(const std::string& kg_path, const std::string& train_path,
                const std::string& dev_path, const std::string& test_path,
                const std::string& out_dir, int min_freq, long max_vocab) {
  KnowledgeGraph kg = load_kg(kg_path);
  auto train = load_corpus(train_path);
  std::filesystem::create_directories(out_dir);
  Vocabulary vocab = build_vocabulary(train, min_freq, max_vocab);
  save_vocabulary(vocab, out_dir + "/vocab.txt");

  json stats;
  auto split_stats = [&](const char* name, const std::vector<Document>& docs) {
    double toks = 0, ments = 0, edges = 0;
    for (const auto& d : docs) {
      TopicSubgraph sg = extract_star_subgraph(kg, d.topic);
      toks += static_cast<double>(d.n());
      ments += static_cast<double>(
          prune_overlaps(match_spans(d, sg), sg).size());
      edges += static_cast<double>(sg.edges.size());
    }
    double n = docs.empty() ? 1.0 : static_cast<double>(docs.size());
    stats[name] = {{"docs", docs.size()},
                   {"tokens_per_doc", toks / n},
                   {"mentions_per_doc", ments / n},
                   {"relations_per_doc", edges / n}};
    std::printf("%-6s docs %5zu  tok/doc %7.2f  ment/doc %6.2f  rel/doc %6.2f\n",
                name, docs.size(), toks / n, ments / n, edges / n);
  };
  split_stats("train", train);
  if (!dev_path.empty()) split_stats("dev", load_corpus(dev_path));
  if (!test_path.empty()) split_stats("test", load_corpus(test_path));
  stats["vocab_size"] = vocab.size();
  stats["entities"] = kg.entities.size();
  stats["relation_types"] = kg.relation_types.size();
  std::printf("vocab %zu  entities %zu  relation types %zu\n", vocab.size(),
              kg.entities.size(), kg.relation_types.size());
  write_json_file(stats, out_dir + "/stats.json");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"latent-relation language model driver"};
  app.require_subcommand(1);
  json cfg;

  // prepare
  auto* prep = app.add_subcommand("prepare", "build vocabulary and corpus stats");
  std::string kg_path, train_path, dev_path, test_path, out_dir, config_path;
  int min_freq = 2;
  long max_vocab = -1;
  // train / train-char / eval / sample / annotate shared options
  std::string model_dir, data_path, vocab_path, char_ckpt, topic, doc_id;
  ModelMeta meta;
  TrainConfig tc;
  int char_epochs = 10;
  double char_lr = 1e-3, temperature = 1.0;
  std::size_t max_tokens = 100, n_samples = 1, best_k = 1;
  std::uint64_t seed = 0;
  bool vanilla = false;
  std::vector<std::string> interval_strs;

  try {
    cfg = load_config_arg(argc, argv);
    cfg_get(cfg, "min_freq", min_freq);
    cfg_get(cfg, "max_vocab", max_vocab);
    cfg_get(cfg, "window", tc.window);
    cfg_get(cfg, "lr", tc.lr);
    cfg_get(cfg, "decay", tc.decay);
    cfg_get(cfg, "batch", tc.batch);
    cfg_get(cfg, "max_epochs", tc.max_epochs);
    cfg_get(cfg, "patience", tc.patience);
    cfg_get(cfg, "embed", meta.dims.embed);
    cfg_get(cfg, "hidden", meta.dims.hidden);
    cfg_get(cfg, "layers", meta.dims.layers);
    cfg_get(cfg, "word_bottleneck", meta.dims.word_bottleneck);
    cfg_get(cfg, "ent_dim", meta.dims.ent_dim);
    cfg_get(cfg, "type_dim", meta.dims.type_dim);
    cfg_get(cfg, "rel_bottleneck", meta.dims.rel_bottleneck);
    cfg_get(cfg, "alias_dim", meta.dims.alias_dim);
    cfg_get(cfg, "dropout", meta.dims.dropout);
    cfg_get(cfg, "char_embed", meta.char_embed);
    cfg_get(cfg, "char_hidden", meta.char_hidden);
    cfg_get(cfg, "char_epochs", char_epochs);
    cfg_get(cfg, "char_lr", char_lr);
    cfg_get(cfg, "seed", seed);
    cfg_get(cfg, "vanilla", vanilla);
  } catch (const CliError& e) {
    std::cerr << json{{"error", e.what()}}.dump() << "\n";
    return 1;
  }

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file");
  };
  prep->add_option("--kg", kg_path)->required();
  prep->add_option("--train", train_path)->required();
  prep->add_option("--dev", dev_path);
  prep->add_option("--test", test_path);
  prep->add_option("--out", out_dir)->required();
  prep->add_option("--min-freq", min_freq);
  prep->add_option("--max-vocab", max_vocab);
  add_common(prep);

  auto* tchar = app.add_subcommand("train-char", "pretrain the byte spelling model");
  tchar->add_option("--train", train_path)->required();
  tchar->add_option("--out", out_dir)->required();
  tchar->add_option("--char-embed", meta.char_embed);
  tchar->add_option("--char-hidden", meta.char_hidden);
  tchar->add_option("--char-epochs", char_epochs);
  tchar->add_option("--char-lr", char_lr);
  tchar->add_option("--seed", seed);
  add_common(tchar);

  auto* tr = app.add_subcommand("train", "train the model");
  tr->add_option("--kg", kg_path)->required();
  tr->add_option("--train", train_path)->required();
  tr->add_option("--dev", dev_path)->required();
  tr->add_option("--vocab", vocab_path)->required();
  tr->add_option("--out", out_dir)->required();
  tr->add_option("--char-ckpt", char_ckpt, "pretrained spelling model dir");
  tr->add_flag("--vanilla", vanilla, "word-only baseline");
  tr->add_option("--window", tc.window);
  tr->add_option("--lr", tc.lr);
  tr->add_option("--decay", tc.decay);
  tr->add_option("--batch", tc.batch);
  tr->add_option("--max-epochs", tc.max_epochs);
  tr->add_option("--patience", tc.patience);
  tr->add_option("--seed", seed);
  tr->add_option("--embed", meta.dims.embed);
  tr->add_option("--hidden", meta.dims.hidden);
  tr->add_option("--layers", meta.dims.layers);
  tr->add_option("--word-bottleneck", meta.dims.word_bottleneck);
  tr->add_option("--ent-dim", meta.dims.ent_dim);
  tr->add_option("--type-dim", meta.dims.type_dim);
  tr->add_option("--rel-bottleneck", meta.dims.rel_bottleneck);
  tr->add_option("--alias-dim", meta.dims.alias_dim);
  tr->add_option("--dropout", meta.dims.dropout);
  tr->add_option("--char-epochs", char_epochs);
  add_common(tr);

  auto* ev = app.add_subcommand("eval", "perplexity and UPP on a split");
  ev->add_option("--kg", kg_path)->required();
  ev->add_option("--model", model_dir)->required();
  ev->add_option("--data", data_path)->required();
  ev->add_option("--out", out_dir, "report directory (default: model dir)");
  add_common(ev);

  auto* sa = app.add_subcommand("sample", "generate text for a topic");
  sa->add_option("--kg", kg_path)->required();
  sa->add_option("--model", model_dir)->required();
  sa->add_option("--topic", topic)->required();
  sa->add_option("--n", n_samples);
  sa->add_option("--best-of", best_k);
  sa->add_option("--max-tokens", max_tokens);
  sa->add_option("--temperature", temperature);
  sa->add_option("--seed", seed);
  add_common(sa);

  auto* an = app.add_subcommand("annotate", "posterior span annotation");
  an->add_option("--kg", kg_path)->required();
  an->add_option("--model", model_dir)->required();
  an->add_option("--data", data_path)->required();
  an->add_option("--doc", doc_id)->required();
  an->add_option("--interval", interval_strs, "l:r (repeatable; default: matched spans)");
  add_common(an);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*prep)
      return cmd_prepare(kg_path, train_path, dev_path, test_path, out_dir,
                         min_freq, max_vocab);

    if (*tchar) {
      std::filesystem::create_directories(out_dir);
      auto words = unique_words(load_corpus(train_path));
      std::mt19937_64 rng(seed);
      CharModel cm(words, meta.char_embed, meta.char_hidden, rng);
      train_char_model(cm, words, char_epochs, char_lr, seed + 1);
      auto tensors = cm.tensors();
      save_checkpoint(out_dir + "/char.ckpt", tensors);
      write_json_file({{"embed", meta.char_embed}, {"hidden", meta.char_hidden}},
                      out_dir + "/char.json");
      return 0;
    }

    if (*tr) {
      tc.seed = seed;
      tc.validate();
      std::filesystem::create_directories(out_dir);
      KnowledgeGraph kg = load_kg(kg_path);
      Vocabulary vocab = load_vocabulary(vocab_path);
      auto train_corpus = load_corpus(train_path);
      auto train_docs = load_docs(kg, train_path, vocab);
      auto dev_docs = load_docs(kg, dev_path, vocab);

      CharModel cm{};
      if (!char_ckpt.empty()) {
        std::ifstream cj(char_ckpt + "/char.json");
        if (!cj) throw CliError("no char.json in " + char_ckpt);
        json j;
        cj >> j;
        meta.char_embed = j.at("embed").get<std::size_t>();
        meta.char_hidden = j.at("hidden").get<std::size_t>();
        cm = make_char_shell(meta.char_embed, meta.char_hidden);
        auto tensors = cm.tensors();
        load_checkpoint(char_ckpt + "/char.ckpt", tensors);
        cm.rebuild_alphabet();
      } else {
        auto words = unique_words(train_corpus);
        std::mt19937_64 rng(seed + 17);
        cm = CharModel(words, meta.char_embed, meta.char_hidden, rng);
        train_char_model(cm, words, char_epochs, char_lr, seed + 18);
      }
      cm.frozen = true;

      meta.vanilla = vanilla;
      LrlmParams params = LrlmParams::create(meta.dims, kg, vocab,
                                             std::move(cm), seed);
      TrainResult res = train(params, train_docs, dev_docs, tc, vanilla);
      auto tensors = params.all_tensors();
      save_checkpoint(out_dir + "/model.ckpt", tensors);
      write_json_file(meta_to_json(meta), out_dir + "/model.json");
      save_vocabulary(params.vocab, out_dir + "/vocab.txt");
      write_history_csv(out_dir + "/history.csv", res.history);
      json eff = meta_to_json(meta);
      eff["train"] = {{"window", tc.window},   {"lr", tc.lr},
                      {"decay", tc.decay},     {"batch", tc.batch},
                      {"max_epochs", tc.max_epochs},
                      {"patience", tc.patience}, {"seed", tc.seed}};
      write_json_file(eff, out_dir + "/effective_config.json");
      std::cout << "best dev nll " << res.best_dev_nll << " at epoch "
                << res.best_epoch << "\n";
      return 0;
    }

    if (*ev) {
      KnowledgeGraph kg = load_kg(kg_path);
      auto [params, m] = load_model_dir(model_dir, kg);
      auto docs = load_docs(kg, data_path, params.vocab);
      EvalReport rep = perplexity(params, docs, m.vanilla);
      std::string dir = out_dir.empty() ? model_dir : out_dir;
      std::filesystem::create_directories(dir);
      write_report_json(rep, dir + "/report.json");
      write_report_csv(rep, dir + "/report.csv");
      if (!rep.bin_table.empty()) write_bins_svg(rep.bin_table, dir + "/bins.svg");
      std::cout << "docs " << rep.docs.size() << "  tokens " << rep.token_count
                << "  ppl " << rep.perplexity << "  upp "
                << (rep.upp ? *rep.upp : 0.0) << "  oov types "
                << rep.oov_vocab_size << "\n";
      return 0;
    }

    if (*sa) {
      KnowledgeGraph kg = load_kg(kg_path);
      auto [params, m] = load_model_dir(model_dir, kg);
      if (m.vanilla) throw CliError("the word-only baseline cannot sample");
      TopicSubgraph sg = extract_star_subgraph(kg, topic);
      for (std::size_t i = 0; i < n_samples; ++i) {
        SampleResult s = best_of(params, sg, max_tokens, temperature, best_k,
                                 seed + i * best_k);
        std::cout << format_sample(s) << "\n  [logprob " << s.log_prob
                  << (s.terminated ? ", eos" : ", cut off") << "]\n";
      }
      return 0;
    }

    if (*an) {
      KnowledgeGraph kg = load_kg(kg_path);
      auto [params, m] = load_model_dir(model_dir, kg);
      if (m.vanilla) throw CliError("the word-only baseline has no span posterior");
      auto docs = load_docs(kg, data_path, params.vocab);
      const TrainDoc* doc = nullptr;
      for (const auto& d : docs)
        if (d.id == doc_id) doc = &d;
      if (!doc) throw CliError("no document with id '" + doc_id + "'");
      std::vector<std::pair<int, int>> intervals;
      for (const auto& s : interval_strs) {
        auto colon = s.find(':');
        if (colon == std::string::npos)
          throw CliError("bad interval '" + s + "', expected l:r");
        intervals.emplace_back(std::stoi(s.substr(0, colon)),
                               std::stoi(s.substr(colon + 1)));
      }
      if (intervals.empty())
        for (const auto& mt : doc->matches)
          intervals.emplace_back(mt.start, mt.end);
      for (const auto& rep : annotate(params, *doc, intervals))
        std::cout << format_interval_report(*doc, rep);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << json{{"error", e.what()}}.dump() << "\n";
    return 1;
  }
  return 0;
}
