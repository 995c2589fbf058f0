#include "hicom/config.hpp"

#include "hicom/error.hpp"
#include "hicom/rng.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace hicom {
namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

// Cuts a # comment, ignoring # inside double-quoted strings.
std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_str = !in_str;
    if (line[i] == '#' && !in_str) return line.substr(0, i);
  }
  return line;
}

bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-' && c != '.')
      return false;
  return true;
}

TomlValue parse_scalar(const std::string& raw, int line) {
  TomlValue v;
  if (raw.empty()) throw FormatError("config: empty value", line);
  if (raw.front() == '"') {
    if (raw.size() < 2 || raw.back() != '"')
      throw FormatError("config: unterminated string", line);
    v.kind = TomlValue::Kind::kString;
    for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
      if (raw[i] == '\\' && i + 2 < raw.size()) {
        const char n = raw[i + 1];
        if (n == '"' || n == '\\') {
          v.s.push_back(n);
          ++i;
          continue;
        }
      }
      if (raw[i] == '"') throw FormatError("config: stray quote inside string", line);
      v.s.push_back(raw[i]);
    }
    return v;
  }
  if (raw == "true" || raw == "false") {
    v.kind = TomlValue::Kind::kBool;
    v.b = raw == "true";
    return v;
  }
  if (raw.find('.') == std::string::npos && raw.find('e') == std::string::npos &&
      raw.find('E') == std::string::npos) {
    long long iv = 0;
    auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), iv);
    if (ec == std::errc{} && p == raw.data() + raw.size()) {
      v.kind = TomlValue::Kind::kInt;
      v.i = iv;
      return v;
    }
  }
  try {
    std::size_t used = 0;
    const double fv = std::stod(raw, &used);
    if (used == raw.size()) {
      v.kind = TomlValue::Kind::kFloat;
      v.f = fv;
      return v;
    }
  } catch (...) {
  }
  throw FormatError("config: cannot parse value '" + raw + "'", line);
}

// Splits a [..] body at top-level commas, respecting quoted strings.
std::vector<std::string> split_array(const std::string& body, int line) {
  std::vector<std::string> parts;
  std::string cur;
  bool in_str = false;
  for (std::size_t i = 0; i < body.size(); ++i) {
    const char c = body[i];
    if (c == '"' && (i == 0 || body[i - 1] != '\\')) in_str = !in_str;
    if (c == ',' && !in_str) {
      parts.push_back(trim(cur));
      cur.clear();
      continue;
    }
    cur.push_back(c);
  }
  if (in_str) throw FormatError("config: unterminated string in array", line);
  const std::string last = trim(cur);
  if (!last.empty()) parts.push_back(last);
  return parts;
}

TomlValue parse_value(const std::string& raw, int line) {
  if (!raw.empty() && raw.front() == '[') {
    if (raw.back() != ']') throw FormatError("config: unterminated array", line);
    TomlValue v;
    v.kind = TomlValue::Kind::kArray;
    for (const std::string& part : split_array(raw.substr(1, raw.size() - 2), line))
      v.items.push_back(parse_scalar(part, line));
    return v;
  }
  return parse_scalar(raw, line);
}

// ---- typed extraction; consumed keys are erased so leftovers can be flagged

bool take(TomlTable& t, const std::string& key, TomlValue& out) {
  auto it = t.find(key);
  if (it == t.end()) return false;
  out = it->second;
  t.erase(it);
  return true;
}

void geti(TomlTable& t, const std::string& key, int& dst) {
  TomlValue v;
  if (!take(t, key, v)) return;
  if (v.kind != TomlValue::Kind::kInt) throw ConfigError("config: " + key + " must be an integer");
  dst = static_cast<int>(v.i);
}

void getu64(TomlTable& t, const std::string& key, std::uint64_t& dst) {
  TomlValue v;
  if (!take(t, key, v)) return;
  if (v.kind != TomlValue::Kind::kInt) throw ConfigError("config: " + key + " must be an integer");
  dst = static_cast<std::uint64_t>(v.i);
}

void getf(TomlTable& t, const std::string& key, double& dst) {
  TomlValue v;
  if (!take(t, key, v)) return;
  if (v.kind != TomlValue::Kind::kFloat && v.kind != TomlValue::Kind::kInt)
    throw ConfigError("config: " + key + " must be a number");
  dst = v.as_number();
}

void getb(TomlTable& t, const std::string& key, bool& dst) {
  TomlValue v;
  if (!take(t, key, v)) return;
  if (v.kind != TomlValue::Kind::kBool) throw ConfigError("config: " + key + " must be a boolean");
  dst = v.b;
}

void gets(TomlTable& t, const std::string& key, std::string& dst) {
  TomlValue v;
  if (!take(t, key, v)) return;
  if (v.kind != TomlValue::Kind::kString) throw ConfigError("config: " + key + " must be a string");
  dst = v.s;
}

void get_ints(TomlTable& t, const std::string& key, std::vector<int>& dst) {
  TomlValue v;
  if (!take(t, key, v)) return;
  if (v.kind != TomlValue::Kind::kArray)
    throw ConfigError("config: " + key + " must be an array of integers");
  dst.clear();
  for (const TomlValue& e : v.items) {
    if (e.kind != TomlValue::Kind::kInt)
      throw ConfigError("config: " + key + " must contain only integers");
    dst.push_back(static_cast<int>(e.i));
  }
}

void get_strings(TomlTable& t, const std::string& key, std::vector<std::string>& dst) {
  TomlValue v;
  if (!take(t, key, v)) return;
  if (v.kind != TomlValue::Kind::kArray)
    throw ConfigError("config: " + key + " must be an array of strings");
  dst.clear();
  for (const TomlValue& e : v.items) {
    if (e.kind != TomlValue::Kind::kString)
      throw ConfigError("config: " + key + " must contain only strings");
    dst.push_back(e.s);
  }
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  // Keep the value float-typed on re-parse.
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
      s.find("inf") == std::string::npos && s.find("nan") == std::string::npos)
    s += ".0";
  return s;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

double TomlValue::as_number() const {
  return kind == Kind::kInt ? static_cast<double>(i) : f;
}

TomlTable parse_toml(const std::string& text) {
  TomlTable table;
  std::istringstream is(text);
  std::string line;
  std::string section;
  int ln = 0;
  while (std::getline(is, line)) {
    ++ln;
    const std::string body = trim(strip_comment(line));
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']') throw FormatError("config: malformed section header", ln);
      section = trim(body.substr(1, body.size() - 2));
      if (!valid_key(section)) throw FormatError("config: bad section name", ln);
      continue;
    }
    const std::size_t eq = body.find('=');
    if (eq == std::string::npos) throw FormatError("config: expected key = value", ln);
    const std::string key = trim(body.substr(0, eq));
    if (!valid_key(key)) throw FormatError("config: bad key '" + key + "'", ln);
    const std::string full = section.empty() ? key : section + "." + key;
    table[full] = parse_value(trim(body.substr(eq + 1)), ln);
  }
  return table;
}

TomlTable parse_toml_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("config: cannot open " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_toml(buf.str());
}

void apply_override(TomlTable& table, const std::string& spec) {
  const std::size_t eq = spec.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("--set expects dotted.key=value, got '" + spec + "'");
  const std::string key = trim(spec.substr(0, eq));
  if (!valid_key(key)) throw ConfigError("--set: bad key '" + key + "'");
  const std::string raw = trim(spec.substr(eq + 1));
  try {
    table[key] = parse_value(raw, -1);
  } catch (const FormatError&) {
    // Command lines pass strings unquoted; fall back to the literal text.
    TomlValue v;
    v.kind = TomlValue::Kind::kString;
    v.s = raw;
    table[key] = v;
  }
}

RunConfig RunConfig::from_table(const TomlTable& src) {
  TomlTable t = src;
  RunConfig c;
  gets(t, "paths.edges", c.edges);
  gets(t, "paths.texts", c.texts);
  gets(t, "paths.labels", c.labels);
  gets(t, "paths.out_dir", c.out_dir);
  gets(t, "paths.splits", c.splits);
  gets(t, "paths.checkpoint", c.checkpoint);

  geti(t, "tokenizer.max_vocab", c.max_vocab);
  geti(t, "tokenizer.min_freq", c.min_freq);
  geti(t, "tokenizer.t", c.t);

  geti(t, "model.d", c.d);
  geti(t, "model.layers", c.layers);
  geti(t, "model.heads", c.heads);
  geti(t, "model.k", c.k);
  geti(t, "model.max_len", c.max_len);
  getf(t, "model.init_scale", c.init_scale);

  std::string mode = mode_name(c.train.mode);
  gets(t, "train.mode", mode);
  c.train.mode = parse_mode(mode);
  get_ints(t, "train.fanouts", c.train.fanouts);
  geti(t, "train.nconcat_neighbors", c.train.nconcat_neighbors);
  geti(t, "train.epochs", c.train.epochs);
  geti(t, "train.batch_size", c.train.batch_size);
  getf(t, "train.lr", c.train.lr);
  getf(t, "train.threshold", c.train.threshold);
  getu64(t, "train.seed", c.train.seed);
  getb(t, "train.trim", c.train.trim);

  geti(t, "split.per_class", c.per_class);
  geti(t, "split.val_size", c.val_size);
  geti(t, "split.test_cap", c.test_cap);

  get_strings(t, "bench.configs", c.bench_configs);
  geti(t, "bench.trials", c.bench_trials);
  geti(t, "bench.targets", c.bench_targets);
  geti(t, "bench.text_len", c.bench_text_len);

  geti(t, "synth.classes", c.synth.classes);
  geti(t, "synth.targets_per_class", c.synth.targets_per_class);
  geti(t, "synth.hubs_per_class", c.synth.hubs_per_class);
  geti(t, "synth.details_per_class", c.synth.details_per_class);
  geti(t, "synth.hub_degree", c.synth.hub_degree);
  geti(t, "synth.detail_degree", c.synth.detail_degree);
  geti(t, "synth.noise_hubs", c.synth.noise_hubs);
  getf(t, "synth.noise_edge_prob", c.synth.noise_edge_prob);
  getf(t, "synth.hub_signal_prob", c.synth.hub_signal_prob);
  getf(t, "synth.detail_signal_prob", c.synth.detail_signal_prob);
  getf(t, "synth.extra_signal_prob", c.synth.extra_signal_prob);
  getf(t, "synth.confuser_prob", c.synth.confuser_prob);
  geti(t, "synth.filler_words", c.synth.filler_words);
  getu64(t, "synth.seed", c.synth.seed);

  if (!t.empty()) throw ConfigError("config: unknown key '" + t.begin()->first + "'");
  return c;
}

std::string RunConfig::to_toml() const {
  std::ostringstream os;
  os << "[paths]\n";
  os << "edges = " << quote(edges) << "\n";
  os << "texts = " << quote(texts) << "\n";
  os << "labels = " << quote(labels) << "\n";
  os << "out_dir = " << quote(out_dir) << "\n";
  os << "splits = " << quote(splits) << "\n";
  os << "checkpoint = " << quote(checkpoint) << "\n";
  os << "\n[tokenizer]\n";
  os << "max_vocab = " << max_vocab << "\n";
  os << "min_freq = " << min_freq << "\n";
  os << "t = " << t << "\n";
  os << "\n[model]\n";
  os << "d = " << d << "\n";
  os << "layers = " << layers << "\n";
  os << "heads = " << heads << "\n";
  os << "k = " << k << "\n";
  os << "max_len = " << max_len << "\n";
  os << "init_scale = " << fmt_double(init_scale) << "\n";
  os << "\n[train]\n";
  os << "mode = " << quote(mode_name(train.mode)) << "\n";
  os << "fanouts = [";
  for (std::size_t i = 0; i < train.fanouts.size(); ++i)
    os << (i ? ", " : "") << train.fanouts[i];
  os << "]\n";
  os << "nconcat_neighbors = " << train.nconcat_neighbors << "\n";
  os << "epochs = " << train.epochs << "\n";
  os << "batch_size = " << train.batch_size << "\n";
  os << "lr = " << fmt_double(train.lr) << "\n";
  os << "threshold = " << fmt_double(train.threshold) << "\n";
  os << "seed = " << train.seed << "\n";
  os << "trim = " << (train.trim ? "true" : "false") << "\n";
  os << "\n[split]\n";
  os << "per_class = " << per_class << "\n";
  os << "val_size = " << val_size << "\n";
  os << "test_cap = " << test_cap << "\n";
  os << "\n[bench]\n";
  os << "configs = [";
  for (std::size_t i = 0; i < bench_configs.size(); ++i)
    os << (i ? ", " : "") << quote(bench_configs[i]);
  os << "]\n";
  os << "trials = " << bench_trials << "\n";
  os << "targets = " << bench_targets << "\n";
  os << "text_len = " << bench_text_len << "\n";
  os << "\n[synth]\n";
  os << "classes = " << synth.classes << "\n";
  os << "targets_per_class = " << synth.targets_per_class << "\n";
  os << "hubs_per_class = " << synth.hubs_per_class << "\n";
  os << "details_per_class = " << synth.details_per_class << "\n";
  os << "hub_degree = " << synth.hub_degree << "\n";
  os << "detail_degree = " << synth.detail_degree << "\n";
  os << "noise_hubs = " << synth.noise_hubs << "\n";
  os << "noise_edge_prob = " << fmt_double(synth.noise_edge_prob) << "\n";
  os << "hub_signal_prob = " << fmt_double(synth.hub_signal_prob) << "\n";
  os << "detail_signal_prob = " << fmt_double(synth.detail_signal_prob) << "\n";
  os << "extra_signal_prob = " << fmt_double(synth.extra_signal_prob) << "\n";
  os << "confuser_prob = " << fmt_double(synth.confuser_prob) << "\n";
  os << "filler_words = " << synth.filler_words << "\n";
  os << "seed = " << synth.seed << "\n";
  return os.str();
}

ModelConfig RunConfig::model_config(int vocab_size) const {
  ModelConfig m;
  m.vocab_size = vocab_size;
  m.d = d;
  m.layers = layers;
  m.heads = heads;
  m.k = k;
  m.t = t;
  m.max_len = max_len;
  m.init_seed = train.seed;
  m.init_scale = init_scale;
  return m;
}

void RunConfig::validate() const {
  if (max_vocab < 2 || min_freq < 1 || t < 1)
    throw ConfigError("config: tokenizer fields must be positive (max_vocab >= 2)");
  if (d < 1 || layers < 1 || heads < 1 || k < 1 || max_len < 1)
    throw ConfigError("config: model fields must be positive");
  if (per_class < 1 || val_size < 0 || test_cap < 0)
    throw ConfigError("config: split fields out of range");
  if (bench_trials < 1 || bench_targets < 1 || bench_text_len < 1)
    throw ConfigError("config: bench fields must be positive");
  train.validate();
  synth.validate();
}

}  // namespace hicom
