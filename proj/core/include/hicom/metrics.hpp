// Multi-label F1 metrics with the 0/0 := 0 convention.
#pragma once

#include <nlohmann/json.hpp>

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace hicom {

struct ClassCounts {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  double precision() const;
  double recall() const;
  double f1() const;  // 2tp / (2tp + fp + fn), 0 when the denominator is 0
};

struct EvalReport {
  double f1_macro = 0.0;
  double f1_micro = 0.0;
  std::vector<ClassCounts> per_class;
  std::map<std::string, std::size_t> split_sizes;

  // Key order is fixed so repeated runs serialize byte-identically.
  nlohmann::ordered_json to_json() const;
};

// truth/pred: per node, the set of label ids (any order, duplicates ignored).
// Macro-F1 averages over all num_classes classes, absent ones included.
EvalReport compute_metrics(const std::vector<std::vector<int>>& truth,
                           const std::vector<std::vector<int>>& pred, int num_classes);

}  // namespace hicom
