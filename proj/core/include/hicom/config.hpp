// Run configuration: a small TOML subset (sections, scalar keys, scalar
// arrays, # comments), dotted --set overrides, and the resolved echo every
// command writes next to its outputs.
#pragma once

#include "hicom/model.hpp"
#include "hicom/synth.hpp"
#include "hicom/trainer.hpp"

#include <map>
#include <string>
#include <vector>

namespace hicom {

struct TomlValue {
  enum class Kind { kBool, kInt, kFloat, kString, kArray };
  Kind kind = Kind::kInt;
  bool b = false;
  long long i = 0;
  double f = 0.0;
  std::string s;
  std::vector<TomlValue> items;  // scalars only

  double as_number() const;  // int or float
};

// Keys are dotted: "train.lr", "paths.edges". Later assignments win.
using TomlTable = std::map<std::string, TomlValue>;

TomlTable parse_toml(const std::string& text);       // FormatError with line number
TomlTable parse_toml_file(const std::string& path);  // Error when unreadable

// spec is "dotted.key=value" with the same value grammar as the file.
void apply_override(TomlTable& table, const std::string& spec);

struct RunConfig {
  // paths
  std::string edges, texts, labels;
  std::string out_dir = "out";
  std::string splits;      // optional precomputed split file
  std::string checkpoint;  // optional, for eval

  // tokenizer
  int max_vocab = 20000;
  int min_freq = 1;
  int t = 32;

  // model
  int d = 64;
  int layers = 2;
  int heads = 4;
  int k = 4;
  int max_len = 512;
  double init_scale = 0.02;

  TrainConfig train;

  // split
  int per_class = 20;
  int val_size = 120;
  int test_cap = 400;

  // bench
  std::vector<std::string> bench_configs = {"hicom:2,2", "nconcat:4"};
  int bench_trials = 5;
  int bench_targets = 16;
  int bench_text_len = 384;

  SynthConfig synth;

  // Unknown keys and type mismatches raise ConfigError.
  static RunConfig from_table(const TomlTable& t);
  std::string to_toml() const;  // every field, defaults applied
  ModelConfig model_config(int vocab_size) const;
  void validate() const;
};

}  // namespace hicom
