#include "hicom/cli.hpp"

#include "hicom/bench.hpp"
#include "hicom/checkpoint.hpp"
#include "hicom/config.hpp"
#include "hicom/error.hpp"
#include "hicom/graph.hpp"
#include "hicom/synth.hpp"
#include "hicom/tokenizer.hpp"
#include "hicom/trainer.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace hicom {
namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

// Config file, then --set overrides, then HICOM_OUT and --seed on top.
RunConfig resolve_config(const CommonArgs& args) {
  TomlTable table;
  if (!args.config_path.empty()) {
    try {
      table = parse_toml_file(args.config_path);
    } catch (const FormatError& e) {
      throw ConfigError(args.config_path + ": " + e.what());
    }
  }
  for (const std::string& spec : args.overrides) apply_override(table, spec);
  RunConfig rc = RunConfig::from_table(table);
  if (const char* env = std::getenv("HICOM_OUT"); env && *env) rc.out_dir = env;
  if (args.seed_set) {
    rc.train.seed = args.seed;
    rc.synth.seed = args.seed;
  }
  rc.validate();
  return rc;
}

void write_text_file(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << body;
}

// Every subcommand calls this once before doing real work.
fs::path prepare_out(const RunConfig& rc) {
  fs::path dir(rc.out_dir);
  fs::create_directories(dir);
  write_text_file(dir / "resolved_config.toml", rc.to_toml());
  return dir;
}

TextGraph load_graph(const RunConfig& rc, IngestStats* stats = nullptr) {
  if (rc.edges.empty() || rc.texts.empty() || rc.labels.empty())
    throw ConfigError("paths.edges, paths.texts and paths.labels are required here");
  return ingest_graph(rc.edges, rc.texts, rc.labels, stats);
}

void write_splits(const DatasetSplit& s, const fs::path& path) {
  ordered_json j;
  j["seed"] = s.seed;
  j["train"] = s.train;
  j["val"] = s.val;
  j["test"] = s.test;
  write_text_file(path, j.dump(2) + "\n");
}

DatasetSplit load_splits(const std::string& path, const TextGraph& g) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read splits file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  DatasetSplit s;
  try {
    s.seed = j.value("seed", 0ull);
    s.train = j.at("train").get<NodeList>();
    s.val = j.value("val", NodeList{});
    s.test = j.value("test", NodeList{});
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  for (const NodeList* part : {&s.train, &s.val, &s.test})
    for (NodeId v : *part)
      if (v < 0 || static_cast<std::size_t>(v) >= g.num_nodes())
        throw ReferenceError("splits file references node " + std::to_string(v));
  return s;
}

std::string fmt(double x, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, x);
  return buf;
}

ordered_json config_echo_json(const RunConfig& rc, int vocab_size, int num_classes) {
  ordered_json c;
  c["mode"] = mode_name(rc.train.mode);
  c["fanouts"] = rc.train.fanouts;
  c["nconcat_neighbors"] = rc.train.nconcat_neighbors;
  c["epochs"] = rc.train.epochs;
  c["batch_size"] = rc.train.batch_size;
  c["lr"] = rc.train.lr;
  c["threshold"] = rc.train.threshold;
  c["seed"] = rc.train.seed;
  c["trim"] = rc.train.trim;
  c["d"] = rc.d;
  c["layers"] = rc.layers;
  c["heads"] = rc.heads;
  c["k"] = rc.k;
  c["t"] = rc.t;
  c["max_len"] = rc.max_len;
  c["vocab_size"] = vocab_size;
  c["num_classes"] = num_classes;
  c["per_class"] = rc.per_class;
  c["val_size"] = rc.val_size;
  c["test_cap"] = rc.test_cap;
  return c;
}

int run_ingest(const CommonArgs& args) {
  RunConfig rc = resolve_config(args);
  fs::path out = prepare_out(rc);
  IngestStats st;
  TextGraph g = load_graph(rc, &st);
  DegreeStats ds = degree_stats(g, count_words);
  std::size_t labeled = 0;
  for (std::size_t v = 0; v < g.num_nodes(); ++v)
    if (g.is_labeled(static_cast<NodeId>(v))) ++labeled;

  ordered_json j;
  j["nodes"] = st.nodes;
  j["edges"] = st.edges;
  j["self_loops_dropped"] = st.self_loops_dropped;
  j["duplicate_edges_dropped"] = st.duplicate_edges_dropped;
  j["labeled"] = labeled;
  j["num_classes"] = g.num_classes;
  j["avg_degree"] = ds.avg_degree;
  j["avg_tokens"] = ds.avg_tokens;
  write_text_file(out / "stats.json", j.dump(2) + "\n");

  std::cout << "nodes " << st.nodes << "  edges " << st.edges << "  self_loops_dropped "
            << st.self_loops_dropped << "  duplicates_dropped " << st.duplicate_edges_dropped
            << "\n"
            << "labeled " << labeled << "  classes " << g.num_classes << "  avg_degree "
            << fmt(ds.avg_degree, 2) << "  avg_tokens " << fmt(ds.avg_tokens, 2) << "\n";
  return 0;
}

int run_kcore(const CommonArgs& args, int k) {
  RunConfig rc = resolve_config(args);
  fs::path out = prepare_out(rc);
  TextGraph g = load_graph(rc);
  KcoreResult res = k_core(g, k);
  write_graph_files(res.graph, out / "edges.tsv", out / "texts.jsonl", out / "labels.jsonl");
  write_id_map(res.old_id, out / "id_map.jsonl");
  std::cout << "k-core k=" << k << ": " << res.graph.num_nodes() << " nodes, "
            << res.graph.num_edges() << " edges (input " << g.num_nodes() << "/" << g.num_edges()
            << ")\n";
  return 0;
}

int run_split(const CommonArgs& args) {
  RunConfig rc = resolve_config(args);
  fs::path out = prepare_out(rc);
  TextGraph g = load_graph(rc);
  if (g.num_classes == 0) throw ConfigError("split: the graph has no labels");
  DatasetSplit s = split_dataset(g, rc.per_class, rc.val_size, rc.test_cap, rc.train.seed);
  write_splits(s, out / "splits.json");
  std::cout << "split: train " << s.train.size() << "  val " << s.val.size() << "  test "
            << s.test.size() << "  (seed " << s.seed << ")\n";
  return 0;
}

int run_train(const CommonArgs& args) {
  RunConfig rc = resolve_config(args);
  fs::path out = prepare_out(rc);
  TextGraph g = load_graph(rc);
  if (g.num_classes == 0) throw ConfigError("train: the graph has no labels");

  Vocabulary vocab = build_vocab(g.text, rc.max_vocab, rc.min_freq);
  TokenTable toks = pre_tokenize(g, vocab, rc.t);
  DatasetSplit split = rc.splits.empty()
                           ? split_dataset(g, rc.per_class, rc.val_size, rc.test_cap, rc.train.seed)
                           : load_splits(rc.splits, g);
  ModelConfig mc = rc.model_config(vocab.size());

  std::cout << "train: mode " << mode_name(rc.train.mode) << "  nodes " << g.num_nodes()
            << "  vocab " << vocab.size() << "  train/val/test " << split.train.size() << "/"
            << split.val.size() << "/" << split.test.size() << "\n";
  TrainResult result = train(g, toks, split, mc, rc.train, [](const EpochStats& es) {
    std::cout << "epoch " << es.epoch << "  loss " << fmt(es.train_loss)
              << "  val_f1 " << fmt(es.val.f1_macro) << "\n";
  });

  save_vocab(vocab, out / "vocab.jsonl");
  write_splits(split, out / "splits.json");
  const fs::path ckpt_path = out / "checkpoint.bin";
  save_checkpoint(ckpt_path.string(), result.params, result.head);

  ordered_json hist;
  hist["best_epoch"] = result.best_epoch;
  hist["best_val_f1"] = result.best_val_f1;
  hist["epochs"] = ordered_json::array();
  for (const EpochStats& es : result.history) {
    ordered_json e;
    e["epoch"] = es.epoch;
    e["train_loss"] = es.train_loss;
    e["val_f1_macro"] = es.val.f1_macro;
    e["val_f1_micro"] = es.val.f1_micro;
    hist["epochs"].push_back(std::move(e));
  }
  write_text_file(out / "history.json", hist.dump(2) + "\n");

  // Final numbers always come from the reloaded checkpoint so that what the
  // report describes is exactly what the artifact on disk reproduces.
  Checkpoint ck = load_checkpoint(ckpt_path.string());
  const std::uint64_t eseed = eval_sample_seed(rc.train.seed);
  ordered_json metrics;
  metrics["mode"] = mode_name(rc.train.mode);
  metrics["best_epoch"] = result.best_epoch;
  metrics["best_val_f1"] = result.best_val_f1;
  metrics["val"] = nullptr;
  metrics["test"] = nullptr;
  if (!split.val.empty())
    metrics["val"] = evaluate(ck.params, ck.head, g, toks, split.val, rc.train, eseed).to_json();
  EvalReport test_report;
  if (!split.test.empty()) {
    test_report = evaluate(ck.params, ck.head, g, toks, split.test, rc.train, eseed);
    metrics["test"] = test_report.to_json();
  }
  metrics["config"] = config_echo_json(rc, vocab.size(), g.num_classes);
  write_text_file(out / "metrics.json", metrics.dump(2) + "\n");

  std::cout << "best epoch " << result.best_epoch << "  val macro-F1 " << fmt(result.best_val_f1);
  if (!split.test.empty())
    std::cout << "  test macro-F1 " << fmt(test_report.f1_macro) << "  micro-F1 "
              << fmt(test_report.f1_micro);
  std::cout << "\n";
  return 0;
}

int run_eval(const CommonArgs& args) {
  RunConfig rc = resolve_config(args);
  fs::path out = prepare_out(rc);
  if (rc.checkpoint.empty()) throw ConfigError("eval: paths.checkpoint is required");
  Checkpoint ck = load_checkpoint(rc.checkpoint);
  TextGraph g = load_graph(rc);

  // The vocabulary travels next to the checkpoint (train writes both).
  fs::path vocab_path = fs::path(rc.checkpoint).parent_path() / "vocab.jsonl";
  Vocabulary vocab = load_vocab(vocab_path);
  if (vocab.size() != ck.params.config.vocab_size)
    throw ConfigError("eval: vocabulary size " + std::to_string(vocab.size()) +
                      " does not match checkpoint (" +
                      std::to_string(ck.params.config.vocab_size) + ")");
  if (g.num_classes > static_cast<int>(ck.head.proj.cols()))
    throw ConfigError("eval: graph has more classes than the checkpoint head");
  TokenTable toks = pre_tokenize(g, vocab, ck.params.config.t);

  const std::uint64_t eseed = eval_sample_seed(rc.train.seed);
  ordered_json j;
  if (!rc.splits.empty()) {
    DatasetSplit s = load_splits(rc.splits, g);
    if (!s.val.empty())
      j["val"] = evaluate(ck.params, ck.head, g, toks, s.val, rc.train, eseed).to_json();
    if (!s.test.empty())
      j["test"] = evaluate(ck.params, ck.head, g, toks, s.test, rc.train, eseed).to_json();
  } else {
    NodeList labeled;
    for (std::size_t v = 0; v < g.num_nodes(); ++v)
      if (g.is_labeled(static_cast<NodeId>(v))) labeled.push_back(static_cast<NodeId>(v));
    if (labeled.empty()) throw ConfigError("eval: the graph has no labeled nodes");
    j["all"] = evaluate(ck.params, ck.head, g, toks, labeled, rc.train, eseed).to_json();
  }
  write_text_file(out / "eval.json", j.dump(2) + "\n");
  for (const auto& [split_name, report] : j.items())
    std::cout << split_name << ": macro-F1 " << fmt(report.at("f1_macro").get<double>())
              << "  micro-F1 " << fmt(report.at("f1_micro").get<double>()) << "\n";
  return 0;
}

int run_bench(const CommonArgs& args) {
  RunConfig rc = resolve_config(args);
  fs::path out = prepare_out(rc);
  BenchReport rep = runtime_bench(rc);
  write_text_file(out / "bench.csv", rep.to_csv());
  write_text_file(out / "bench.json", rep.to_json().dump(2) + "\n");
  std::cout << rep.to_csv();
  return 0;
}

int run_synth(const CommonArgs& args) {
  RunConfig rc = resolve_config(args);
  fs::path out = prepare_out(rc);
  TextGraph g = synth_graph(rc.synth);
  write_graph_files(g, out / "edges.tsv", out / "texts.jsonl", out / "labels.jsonl");
  std::size_t labeled = 0;
  for (std::size_t v = 0; v < g.num_nodes(); ++v)
    if (g.is_labeled(static_cast<NodeId>(v))) ++labeled;
  const double avg_deg = g.num_nodes() ? 2.0 * g.num_edges() / g.num_nodes() : 0.0;
  std::cout << "synth: " << g.num_nodes() << " nodes, " << g.num_edges() << " edges, "
            << g.num_classes << " classes, " << labeled << " labeled, avg_degree "
            << fmt(avg_deg, 2) << " (seed " << rc.synth.seed << ")\n";
  return 0;
}

void add_common(CLI::App* sub, CommonArgs& args) {
  sub->add_option("--config", args.config_path, "TOML run configuration");
  sub->add_option("--set", args.overrides, "Override a config key, e.g. --set train.lr=0.01")
      ->allow_extra_args(false);
  sub->add_option("--seed", args.seed, "Override the run seed everywhere")
      ->each([&args](const std::string&) { args.seed_set = true; });
}

}  // namespace

int cli_dispatch(int argc, char** argv) {
  CLI::App app{"hierarchical neighborhood compression toolkit", "hicom"};
  app.require_subcommand(1);

  CommonArgs args;
  int kcore_k = 1;

  CLI::App* ingest = app.add_subcommand("ingest", "Load a graph and report basic statistics");
  CLI::App* kcore = app.add_subcommand("kcore", "Write the k-core of a graph");
  kcore->add_option("--k", kcore_k, "Minimum degree to keep")->required();
  CLI::App* split = app.add_subcommand("split", "Draw per-class train/val/test node splits");
  CLI::App* train = app.add_subcommand("train", "Train a classifier and write its checkpoint");
  CLI::App* eval = app.add_subcommand("eval", "Score a checkpoint on a graph");
  CLI::App* bench = app.add_subcommand("bench", "Time one training epoch per configuration");
  CLI::App* synth = app.add_subcommand("synth", "Generate the synthetic neighborhood benchmark");
  for (CLI::App* sub : {ingest, kcore, split, train, eval, bench, synth}) add_common(sub, args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (ingest->parsed()) return run_ingest(args);
    if (kcore->parsed()) return run_kcore(args, kcore_k);
    if (split->parsed()) return run_split(args);
    if (train->parsed()) return run_train(args);
    if (eval->parsed()) return run_eval(args);
    if (bench->parsed()) return run_bench(args);
    if (synth->parsed()) return run_synth(args);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace hicom
