#include "hicom/bench.hpp"

#include "hicom/error.hpp"
#include "hicom/rng.hpp"
#include "hicom/tokenizer.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <set>
#include <sstream>

namespace hicom {
namespace {

double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  return parts;
}

}  // namespace

std::size_t model_cost(const std::vector<int>& segments) {
  if (segments.empty()) throw InvalidArgumentError("model_cost: empty segmentation");
  std::size_t total = 0;
  for (int n : segments) {
    if (n < 1) throw InvalidArgumentError("model_cost: segments must be positive");
    total += static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
  }
  return total;
}

std::string BenchReport::to_csv() const {
  std::ostringstream os;
  os << "config,label,time_ms,predicted_cost,waste_before,waste_after\n";
  char buf[128];
  for (const BenchRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%.3f,%zu,%.4f,%.4f", r.time_ms, r.predicted_cost,
                  r.waste_before, r.waste_after);
    os << r.config << "," << r.label << "," << buf << "\n";
  }
  return os.str();
}

nlohmann::ordered_json BenchReport::to_json() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const BenchRow& r : rows) {
    nlohmann::ordered_json row;
    row["config"] = r.config;
    row["label"] = r.label;
    row["time_ms"] = r.time_ms;
    row["predicted_cost"] = r.predicted_cost;
    row["waste_before"] = r.waste_before;
    row["waste_after"] = r.waste_after;
    j.push_back(row);
  }
  return j;
}

SegmentTiming segment_bench(const ModelConfig& mc, int flat_len, int segments, int trials,
                            std::uint64_t seed) {
  if (flat_len < segments || segments < 1 || flat_len % segments != 0)
    throw InvalidArgumentError("segment_bench: flat_len must be a positive multiple of segments");
  CompressorParams params = init_params(mc);
  Rng rng(mix_seed(seed, 0x7365676d));
  Mat x(flat_len, mc.d);
  for (int i = 0; i < flat_len; ++i)
    for (int j = 0; j < mc.d; ++j) x(i, j) = rng.normal(0.0, 1.0);
  const std::vector<std::uint8_t> valid_flat(flat_len, 1);
  const int seg_len = flat_len / segments;
  const std::vector<std::uint8_t> valid_seg(seg_len, 1);
  CompressorParams grads = zeros_like(params);

  auto flat_pass = [&]() {
    StackTrace trace;
    Mat h = stack_forward(params, x, valid_flat, &trace);
    stack_backward(params, trace, Mat::Ones(flat_len, mc.d), grads);
  };
  auto seg_pass = [&]() {
    for (int s = 0; s < segments; ++s) {
      StackTrace trace;
      Mat xs = x.middleRows(s * seg_len, seg_len);
      Mat h = stack_forward(params, xs, valid_seg, &trace);
      stack_backward(params, trace, Mat::Ones(seg_len, mc.d), grads);
    }
  };

  flat_pass();  // warm up allocators and caches once per shape
  seg_pass();
  std::vector<double> flat_ms, seg_ms;
  for (int t = 0; t < trials; ++t) {
    auto t0 = std::chrono::steady_clock::now();
    flat_pass();
    flat_ms.push_back(ms_since(t0));
    t0 = std::chrono::steady_clock::now();
    seg_pass();
    seg_ms.push_back(ms_since(t0));
  }
  return {median(flat_ms), median(seg_ms)};
}

TrainConfig parse_bench_label(const std::string& label, const TrainConfig& base) {
  std::vector<std::string> parts = split_on(label, ':');
  TrainConfig t = base;
  t.mode = parse_mode(parts[0]);
  std::size_t at = 1;
  if (at < parts.size() && parts[at] != "notrim") {
    if (t.mode == Mode::kNconcat) {
      t.nconcat_neighbors = std::stoi(parts[at]);
    } else if (t.mode == Mode::kTargetOnly) {
      throw ConfigError("bench: target_only takes no arguments in '" + label + "'");
    } else {
      t.fanouts.clear();
      for (const std::string& f : split_on(parts[at], ',')) t.fanouts.push_back(std::stoi(f));
    }
    ++at;
  }
  if (at < parts.size()) {
    if (parts[at] != "notrim")
      throw ConfigError("bench: unexpected suffix '" + parts[at] + "' in '" + label + "'");
    t.trim = false;
    ++at;
  }
  if (at != parts.size()) throw ConfigError("bench: malformed label '" + label + "'");
  t.validate();
  return t;
}

TextGraph bench_graph(int nodes, int degree, int classes, std::uint64_t seed) {
  TextGraph g;
  g.adjacency.assign(nodes, {});
  g.text.assign(nodes, "x");  // placeholder; runtime_bench writes real texts
  g.labels.assign(nodes, {});
  g.num_classes = classes;

  Rng rng(mix_seed(seed, 0x62656e63));
  std::set<std::pair<NodeId, NodeId>> edges;
  for (int v = 0; v < nodes; ++v) {
    // Ring edge keeps the graph connected; the rest are random.
    edges.insert({std::min(v, (v + 1) % nodes), std::max(v, (v + 1) % nodes)});
    for (int e = 0; e < degree - 2; ++e) {
      const int u = static_cast<int>(rng.uniform_int(0, nodes - 1));
      if (u != v) edges.insert({std::min(u, v), std::max(u, v)});
    }
  }
  for (const auto& [a, b] : edges) {
    g.adjacency[a].push_back(b);
    g.adjacency[b].push_back(a);
  }
  for (NodeList& adj : g.adjacency) std::sort(adj.begin(), adj.end());
  for (int v = 0; v < nodes; ++v) g.labels[v] = {v % classes};
  g.check_invariants();
  return g;
}

BenchReport runtime_bench(const RunConfig& rc) {
  rc.validate();
  const int nodes = std::max(rc.bench_targets, 48);
  const int t_width = rc.bench_text_len;

  // Texts fill half the row so rearrange-and-trim has real waste to remove.
  TextGraph g = bench_graph(nodes, 6, 4, rc.train.seed);
  const char* kWords[] = {"gear", "flux", "prism", "baffle", "rotor", "vane", "crank", "spool"};
  Rng text_rng(mix_seed(rc.train.seed, 0x7478745f));
  for (int v = 0; v < nodes; ++v) {
    std::ostringstream os;
    for (int w = 0; w < t_width / 2; ++w) {
      if (w) os << ' ';
      os << kWords[text_rng.uniform_int(0, 7)];
    }
    g.text[v] = os.str();
  }

  Vocabulary vocab = build_vocab(g.text, rc.max_vocab, 1);
  TokenTable toks = pre_tokenize(g, vocab, t_width);

  std::vector<TrainConfig> configs;
  int widest_window = 1;
  for (const std::string& label : rc.bench_configs) {
    TrainConfig tcfg = parse_bench_label(label, rc.train);
    if (tcfg.mode == Mode::kNconcat) widest_window = std::max(widest_window, tcfg.nconcat_neighbors + 1);
    configs.push_back(tcfg);
  }

  RunConfig mrc = rc;
  mrc.t = t_width;
  // The comparison is about attention windows, so the context must hold the
  // widest configured concatenation; truncation would time a smaller input.
  mrc.max_len = std::max(rc.max_len, widest_window * t_width + 8);
  ModelConfig mc = mrc.model_config(static_cast<int>(vocab.id_to_token.size()));
  CompressorParams params = init_params(mc);
  ClassifierHead head = init_head(mc.d, g.num_classes, mix_seed(rc.train.seed, 0x68656164), mc.init_scale);

  NodeList targets;
  for (int v = 0; v < rc.bench_targets; ++v) targets.push_back(v);

  // Trials are interleaved across configs so slow drift in ambient load (a
  // shared machine, frequency scaling) biases every config equally instead
  // of whichever one happened to run last.
  const std::uint64_t seed = mix_seed(rc.train.seed, 0x62727568);
  std::vector<std::vector<double>> times(configs.size());
  std::vector<CostStats> costs(configs.size());
  for (std::size_t ci = 0; ci < configs.size(); ++ci)
    epoch_pass(g, toks, targets, params, head, configs[ci], seed, &costs[ci]);  // warm up
  for (int trial = 0; trial < rc.bench_trials; ++trial) {
    for (std::size_t ci = 0; ci < configs.size(); ++ci) {
      const auto t0 = std::chrono::steady_clock::now();
      epoch_pass(g, toks, targets, params, head, configs[ci], seed, nullptr);
      times[ci].push_back(ms_since(t0));
    }
  }

  BenchReport report;
  for (std::size_t ci = 0; ci < configs.size(); ++ci) {
    BenchRow row;
    row.config = rc.bench_configs[ci];
    row.label = mode_name(configs[ci].mode) + (configs[ci].trim ? "" : " (trim off)");
    row.time_ms = median(times[ci]);
    row.predicted_cost = costs[ci].predicted_cost;
    row.waste_before = costs[ci].waste_before();
    row.waste_after = costs[ci].waste_after();
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace hicom
