// Runtime measurements behind the complexity claim: flat-vs-segmented stack
// cost, per-mode epoch timings, and the trim on/off comparison.
#pragma once

#include "hicom/config.hpp"
#include "hicom/graph.hpp"
#include "hicom/trainer.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace hicom {

// Sum of n_i^2: the attention-dominated cost of processing the segments
// separately. Empty or nonpositive segments are invalid.
std::size_t model_cost(const std::vector<int>& segments);

struct BenchRow {
  std::string config;  // label as given
  std::string label;   // expanded description
  double time_ms = 0.0;
  std::size_t predicted_cost = 0;
  double waste_before = 0.0;
  double waste_after = 0.0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  std::string to_csv() const;
  nlohmann::ordered_json to_json() const;
};

struct SegmentTiming {
  double flat_ms = 0.0;
  double segmented_ms = 0.0;
};

// Median wall time of one forward+backward over a flat length-flat_len input
// vs the same rows split into `segments` equal pieces, identical model.
SegmentTiming segment_bench(const ModelConfig& mc, int flat_len, int segments, int trials,
                            std::uint64_t seed);

// Label grammar: mode[:fanouts-or-neighbor-count][:notrim]. Examples:
// "hicom:2,2", "hicom:4,4:notrim", "hicom_no_hierarchy:2,2", "nconcat:4",
// "target_only".
TrainConfig parse_bench_label(const std::string& label, const TrainConfig& base);

// Fixed random graph whose texts fill half of width t, so trimming has 50%
// dummy tokens to remove.
TextGraph bench_graph(int nodes, int degree, int classes, std::uint64_t seed);

// Times one forward+backward epoch per configured label on the same graph
// and model; wall times are medians over rc.bench_trials runs.
BenchReport runtime_bench(const RunConfig& rc);

}  // namespace hicom
