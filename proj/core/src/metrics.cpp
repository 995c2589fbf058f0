#include "hicom/metrics.hpp"

#include "hicom/error.hpp"

#include <set>

namespace hicom {

double ClassCounts::precision() const {
  const long den = tp + fp;
  return den == 0 ? 0.0 : static_cast<double>(tp) / den;
}

double ClassCounts::recall() const {
  const long den = tp + fn;
  return den == 0 ? 0.0 : static_cast<double>(tp) / den;
}

double ClassCounts::f1() const {
  const long den = 2 * tp + fp + fn;
  return den == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / den;
}

nlohmann::ordered_json EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["f1_macro"] = f1_macro;
  j["f1_micro"] = f1_micro;
  j["per_class"] = nlohmann::ordered_json::array();
  for (const ClassCounts& c : per_class) {
    nlohmann::ordered_json cj;
    cj["tp"] = c.tp;
    cj["fp"] = c.fp;
    cj["fn"] = c.fn;
    cj["precision"] = c.precision();
    cj["recall"] = c.recall();
    cj["f1"] = c.f1();
    j["per_class"].push_back(cj);
  }
  j["split_sizes"] = split_sizes;
  return j;
}

EvalReport compute_metrics(const std::vector<std::vector<int>>& truth,
                           const std::vector<std::vector<int>>& pred, int num_classes) {
  if (truth.size() != pred.size())
    throw InvalidArgumentError("compute_metrics: truth/pred length mismatch");
  if (num_classes < 1) throw InvalidArgumentError("compute_metrics: need at least one class");

  EvalReport r;
  r.per_class.assign(num_classes, ClassCounts{});
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const std::set<int> t(truth[i].begin(), truth[i].end());
    const std::set<int> p(pred[i].begin(), pred[i].end());
    for (int c : p) {
      if (c < 0 || c >= num_classes)
        throw ReferenceError("compute_metrics: label id out of range");
      if (t.count(c))
        ++r.per_class[c].tp;
      else
        ++r.per_class[c].fp;
    }
    for (int c : t) {
      if (c < 0 || c >= num_classes)
        throw ReferenceError("compute_metrics: label id out of range");
      if (!p.count(c)) ++r.per_class[c].fn;
    }
  }

  double macro = 0.0;
  ClassCounts pooled;
  for (const ClassCounts& c : r.per_class) {
    macro += c.f1();
    pooled.tp += c.tp;
    pooled.fp += c.fp;
    pooled.fn += c.fn;
  }
  r.f1_macro = macro / num_classes;
  r.f1_micro = pooled.f1();
  return r;
}

}  // namespace hicom
