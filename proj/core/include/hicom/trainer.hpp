// Node-classification training and evaluation: predictor head over
// [summaries, target text], ablation modes, Adam loop, F1 reporting.
#pragma once

#include "hicom/compressor.hpp"
#include "hicom/graph.hpp"
#include "hicom/metrics.hpp"
#include "hicom/model.hpp"
#include "hicom/tokenizer.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace hicom {

enum class Mode { kHicom, kHicomNoHierarchy, kHicomNoAccumulation, kNconcat, kTargetOnly };

Mode parse_mode(const std::string& name);  // unknown name -> ConfigError
std::string mode_name(Mode m);

struct ClassifierHead {
  Mat proj;  // d x C
  Vec bias;  // C
};

ClassifierHead init_head(int d, int num_classes, std::uint64_t seed, double scale);

struct TrainConfig {
  Mode mode = Mode::kHicom;
  std::vector<int> fanouts = {4, 4};
  int nconcat_neighbors = 4;  // neighbor texts the nconcat baseline appends
  int epochs = 30;
  int batch_size = 4;
  double lr = 3e-3;
  double threshold = 0.5;  // class predicted when its score exceeds this
  std::uint64_t seed = 7;
  bool trim = true;
  void validate() const;  // fanouts may be empty only for target_only
};

// sigma(h * proj + bias); split out so tests can pin the arithmetic.
Vec head_scores(const ClassifierHead& head, const Eigen::RowVectorXd& h);

// Runs the stack over [summary rows ++ target tokens] and reads the hidden
// state at the last valid element (zero vector when there is none). summary
// may be null.
Vec predict(const CompressorParams& p, const ClassifierHead& head, const Mat* summary,
            const TokenSeq& target_tokens);

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  EvalReport val;  // empty when no validation split was given
};

struct TrainResult {
  CompressorParams params;  // best-validation snapshot
  ClassifierHead head;
  std::vector<EpochStats> history;
  int best_epoch = -1;
  double best_val_f1 = 0.0;
};

// Wall-time-free cost accounting for the bench module: every stack call adds
// (sequence rows)^2, and pad cells are counted before and after trimming.
struct CostStats {
  std::size_t predicted_cost = 0;
  std::size_t tokens_processed = 0;
  std::size_t cells_before = 0;
  std::size_t dummy_before = 0;
  std::size_t cells_after = 0;
  std::size_t dummy_after = 0;
  double waste_before() const {
    return cells_before ? static_cast<double>(dummy_before) / cells_before : 0.0;
  }
  double waste_after() const {
    return cells_after ? static_cast<double>(dummy_after) / cells_after : 0.0;
  }
};

// on_epoch, when set, is called after each epoch's validation pass.
TrainResult train(const TextGraph& g, const TokenTable& toks, const DatasetSplit& split,
                  const ModelConfig& mcfg, const TrainConfig& tcfg,
                  const std::function<void(const EpochStats&)>& on_epoch = {});

// Scores every node in split_nodes under the trained model; sample_seed fixes
// the neighbor draws so repeated evaluations agree. empty split -> error.
EvalReport evaluate(const CompressorParams& p, const ClassifierHead& head, const TextGraph& g,
                    const TokenTable& toks, const NodeList& split_nodes, const TrainConfig& tcfg,
                    std::uint64_t sample_seed);

// The sample seed train() uses for its per-epoch validation passes; final
// evaluation with this seed scores the best snapshot under the same draws.
std::uint64_t eval_sample_seed(std::uint64_t seed);

// Mean batch loss at fixed parameters; when grads/d_proj/d_bias are all
// given they accumulate the analytic gradients. Exposed so the
// finite-difference check can probe the exact training objective.
double batch_pass(const TextGraph& g, const TokenTable& toks, const NodeList& batch,
                  const CompressorParams& params, const ClassifierHead& head,
                  const TrainConfig& tcfg, std::uint64_t seed, CompressorParams* grads,
                  Mat* d_proj, Vec* d_bias);

// One presampled epoch of forward+backward at the current parameters without
// applying updates; the bench module times this. Returns mean loss.
double epoch_pass(const TextGraph& g, const TokenTable& toks, const NodeList& targets,
                  const CompressorParams& p, const ClassifierHead& head, const TrainConfig& tcfg,
                  std::uint64_t seed, CostStats* cost = nullptr);

}  // namespace hicom
