#include "hicom/trainer.hpp"

#include "hicom/error.hpp"
#include "hicom/rng.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>

namespace hicom {
namespace {

constexpr std::uint64_t kSaltOrder = 0x6f726472;   // epoch shuffle
constexpr std::uint64_t kSaltSample = 0x73616d70;  // per-epoch neighbor draws
constexpr std::uint64_t kSaltEval = 0x6576616c;    // fixed evaluation draws
constexpr std::uint64_t kSaltHead = 0x68656164;
constexpr std::uint64_t kSaltNconcat = 0x6e636174;
constexpr std::uint64_t kSaltFlat = 0x666c6174;

// The head starts much larger than the 0.02-scale stack weights. Its
// backward signal into the stack scales with the projection, and a small
// head makes the early epochs crawl before features reach the readout
// position at all.
constexpr double kHeadInitScale = 0.5;

// Decoupled weight decay applied after each optimizer step, norm scales and
// the head bias exempt. Small train splits are cheap to memorize through
// the target text alone; the decay keeps that shortcut expensive relative
// to features shared across targets, which is what has to generalize.
constexpr double kWeightDecay = 0.1;

// Nodes within `hops` of target, excluding target itself, in BFS order (so
// 1-hop nodes come first; deterministic because adjacency lists are sorted).
NodeList multi_hop_pool(const TextGraph& g, NodeId target, int hops) {
  std::vector<std::uint8_t> seen(g.num_nodes(), 0);
  seen[target] = 1;
  NodeList frontier{target};
  NodeList pool;
  for (int h = 0; h < hops && !frontier.empty(); ++h) {
    NodeList next;
    for (NodeId u : frontier) {
      for (NodeId v : g.adjacency[u]) {
        if (seen[v]) continue;
        seen[v] = 1;
        next.push_back(v);
        pool.push_back(v);
      }
    }
    frontier = std::move(next);
  }
  return pool;
}

// Capacity of the sampling tree below one target; the no-hierarchy ablation
// draws the same number of nodes.
int tree_budget(const std::vector<int>& fanouts) {
  int total = 0;
  int width = 1;
  for (int l = static_cast<int>(fanouts.size()); l >= 1; --l) {
    width *= fanouts[l - 1];
    total += width;
  }
  return total;
}

// Per-target predictor inputs plus whatever backward needs to reach them.
struct TargetForward {
  bool has_summary = false;
  Mat summary;    // rows are k-blocks in `blocks` order (hicom family) or the
                  // final chain summary (no-hierarchy)
  TokenSeq text;  // row fed after the summaries
  std::vector<std::pair<int, int>> blocks;  // (level, occurrence) per k-block
  std::vector<CompressTrace> chain;         // no-hierarchy chunks, oldest first
};

struct ForwardBundle {
  std::optional<HicomTrace> htrace;
  HicomResult hres;
  std::vector<TargetForward> tf;
};

// Chunks the no-hierarchy ablation feeds: sampled nodes in draw order,
// fanouts.back() texts per chunk, valid tokens only. Each chunk is
// compressed with the accumulated summaries of the chunks before it
// prepended, and every chunk summary reaches the predictor, so the flat
// variant keeps the same readout bandwidth as the structured one and
// differs only in how the texts are grouped.
std::vector<TokenSeq> flat_chunks(const TextGraph& g, const TokenTable& toks, NodeId node,
                                  const TrainConfig& tcfg, std::uint64_t seed) {
  const int hops = static_cast<int>(tcfg.fanouts.size());
  NodeList pool = multi_hop_pool(g, node, hops);
  const int budget = tree_budget(tcfg.fanouts);
  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(node), kSaltFlat));
  const std::size_t m = std::min<std::size_t>(budget, pool.size());
  NodeList picked = rng.sample_without_replacement(std::move(pool), m);

  const int per_chunk = tcfg.fanouts.back();
  std::vector<TokenSeq> chunks;
  for (std::size_t at = 0; at < picked.size(); at += per_chunk) {
    TokenSeq chunk;
    for (std::size_t j = at; j < std::min(picked.size(), at + per_chunk); ++j) {
      const TokenSeq& s = toks[static_cast<std::size_t>(picked[j])];
      for (int c = 0; c < s.length(); ++c) {
        if (!s.mask[c]) continue;
        chunk.ids.push_back(s.ids[c]);
        chunk.mask.push_back(1);
      }
    }
    if (!chunk.ids.empty()) chunks.push_back(std::move(chunk));
  }
  return chunks;
}

// Target text followed by sampled neighbor texts, valid tokens only,
// truncated at max_len.
TokenSeq nconcat_row(const TextGraph& g, const TokenTable& toks, NodeId node,
                     const TrainConfig& tcfg, int max_len, std::uint64_t seed) {
  const int hops = tcfg.fanouts.empty() ? 1 : static_cast<int>(tcfg.fanouts.size());
  NodeList pool = multi_hop_pool(g, node, hops);
  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(node), kSaltNconcat));
  const std::size_t m = std::min<std::size_t>(tcfg.nconcat_neighbors, pool.size());
  NodeList picked = rng.sample_without_replacement(std::move(pool), m);

  TokenSeq row;
  auto append = [&](const TokenSeq& s) {
    for (int c = 0; c < s.length(); ++c) {
      if (!s.mask[c] || static_cast<int>(row.ids.size()) >= max_len) continue;
      row.ids.push_back(s.ids[c]);
      row.mask.push_back(1);
    }
  };
  append(toks[static_cast<std::size_t>(node)]);
  for (NodeId nb : picked) append(toks[static_cast<std::size_t>(nb)]);
  return row;
}

ForwardBundle forward_summaries(const TextGraph& g, const TokenTable& toks, const NodeList& batch,
                                const CompressorParams& params, const TrainConfig& tcfg,
                                std::uint64_t seed, bool with_trace) {
  ForwardBundle fb;
  fb.tf.resize(batch.size());

  switch (tcfg.mode) {
    case Mode::kTargetOnly:
      for (std::size_t i = 0; i < batch.size(); ++i)
        fb.tf[i].text = toks[static_cast<std::size_t>(batch[i])];
      break;

    case Mode::kNconcat:
      for (std::size_t i = 0; i < batch.size(); ++i)
        fb.tf[i].text = nconcat_row(g, toks, batch[i], tcfg, params.config.max_len, seed);
      break;

    case Mode::kHicomNoHierarchy:
      for (std::size_t i = 0; i < batch.size(); ++i) {
        TargetForward& t = fb.tf[i];
        t.text = toks[static_cast<std::size_t>(batch[i])];
        std::vector<Mat> sums;
        Mat prefix;
        for (TokenSeq& chunk : flat_chunks(g, toks, batch[i], tcfg, seed)) {
          CompressTrace trace;
          if (!sums.empty()) prefix = summary_accumulate(sums);
          Mat s = compress(params, sums.empty() ? nullptr : &prefix, nullptr, chunk.ids.data(),
                           chunk.mask.data(), static_cast<int>(chunk.length()),
                           with_trace ? &trace : nullptr);
          if (with_trace) t.chain.push_back(std::move(trace));
          sums.push_back(std::move(s));
        }
        if (!sums.empty()) {
          t.summary = summary_accumulate(sums);
          t.has_summary = true;
        }
      }
      break;

    case Mode::kHicom:
    case Mode::kHicomNoAccumulation: {
      Hierarchy h = build_hierarchy(g, batch, tcfg.fanouts, seed);
      if (with_trace) fb.htrace.emplace();
      fb.hres = compress_hierarchy(h, toks, params, tcfg.trim,
                                   fb.htrace ? &*fb.htrace : nullptr);
      const int L = h.depth();
      for (std::size_t i = 0; i < batch.size(); ++i) {
        TargetForward& t = fb.tf[i];
        t.text = toks[static_cast<std::size_t>(batch[i])];
        if (tcfg.mode == Mode::kHicom) {
          for (int l = 1; l < L; ++l) {
            const Hierarchy::Level& lv = h.levels[l];
            for (std::size_t o = 0; o < lv.size(); ++o)
              if (lv.root[o] == static_cast<int>(i)) t.blocks.emplace_back(l, static_cast<int>(o));
          }
        }
        t.blocks.emplace_back(L, static_cast<int>(i));  // s0 last
        std::vector<Mat> parts;
        parts.reserve(t.blocks.size());
        for (const auto& [l, o] : t.blocks) parts.push_back(fb.hres.summaries[l - 1][o]);
        t.summary = summary_accumulate(parts);
        t.has_summary = true;
      }
      if (!with_trace) fb.hres.summaries.clear();
      break;
    }
  }
  return fb;
}

struct PredTrace {
  ComposedSeq seq;
  StackTrace stack;
  Mat hidden;
  int pool_idx = -1;
  Vec logits;
  Vec scores;
};

PredTrace predict_forward(const CompressorParams& p, const ClassifierHead& head,
                          const TargetForward& t, bool with_trace) {
  PredTrace pt;
  ComposedSeq seq = compose_input(p, t.has_summary ? &t.summary : nullptr, nullptr,
                                  t.text.ids.data(), t.text.mask.data(),
                                  static_cast<int>(t.text.length()), false);
  Mat hidden = stack_forward(p, seq.x, seq.valid, with_trace ? &pt.stack : nullptr);
  for (int i = static_cast<int>(seq.valid.size()) - 1; i >= 0; --i) {
    if (seq.valid[i]) {
      pt.pool_idx = i;
      break;
    }
  }
  Eigen::RowVectorXd h = pt.pool_idx >= 0
                             ? Eigen::RowVectorXd(hidden.row(pt.pool_idx))
                             : Eigen::RowVectorXd(Eigen::RowVectorXd::Zero(p.config.d));
  pt.logits = (h * head.proj).transpose() + head.bias;
  pt.scores = pt.logits.unaryExpr([](double z) { return 1.0 / (1.0 + std::exp(-z)); });
  if (with_trace) {
    pt.seq = std::move(seq);
    pt.hidden = std::move(hidden);
  }
  return pt;
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

// Mean-over-classes, mean-over-batch binary cross-entropy and its gradients.
// Returns the batch loss; when grads is set, also backpropagates through the
// predictor, the summaries, and (for hicom modes) the whole hierarchy.
double run_batch(const TextGraph& g, const TokenTable& toks, const NodeList& batch,
                 const CompressorParams& params, const ClassifierHead& head,
                 const TrainConfig& tcfg, std::uint64_t seed, CompressorParams* grads,
                 Mat* d_proj, Vec* d_bias, std::vector<Vec>* scores_out) {
  const bool backward = grads != nullptr;
  const int C = g.num_classes;
  const int k = params.config.k;
  const int d = params.config.d;
  ForwardBundle fb = forward_summaries(g, toks, batch, params, tcfg, seed, backward);

  // Zero gradient holders for every occurrence; predictor contributions land
  // here and hicom_backward chains the rest.
  std::vector<std::vector<Mat>> d_sums;
  if (backward && fb.htrace) {
    d_sums.resize(fb.hres.summaries.size());
    for (std::size_t l = 0; l < d_sums.size(); ++l)
      d_sums[l].assign(fb.hres.summaries[l].size(), Mat::Zero(k, d));
  }

  double loss = 0.0;
  const double B = static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const TargetForward& t = fb.tf[i];
    PredTrace pt = predict_forward(params, head, t, backward);
    if (scores_out) scores_out->push_back(pt.scores);

    const auto& labels = g.labels[static_cast<std::size_t>(batch[i])];
    Vec y = Vec::Zero(C);
    for (int c : labels) y(c) = 1.0;
    for (int c = 0; c < C; ++c) loss += (softplus(pt.logits(c)) - y(c) * pt.logits(c)) / C / B;
    if (!backward) continue;

    Vec d_logits = (pt.scores - y) / (C * B);
    *d_bias += d_logits;
    Eigen::RowVectorXd h = pt.pool_idx >= 0
                               ? Eigen::RowVectorXd(pt.hidden.row(pt.pool_idx))
                               : Eigen::RowVectorXd(Eigen::RowVectorXd::Zero(d));
    *d_proj += h.transpose() * d_logits.transpose();
    if (pt.pool_idx < 0) continue;

    Mat d_hidden = Mat::Zero(pt.hidden.rows(), d);
    d_hidden.row(pt.pool_idx) = (head.proj * d_logits).transpose();
    Mat d_x = stack_backward(params, pt.stack, d_hidden, *grads);
    Mat d_prefix = route_embedding_grads(params, pt.seq, d_x, *grads);
    if (!t.has_summary) continue;

    if (fb.htrace) {
      for (std::size_t b = 0; b < t.blocks.size(); ++b) {
        const auto& [l, o] = t.blocks[b];
        d_sums[l - 1][o] += d_prefix.middleRows(static_cast<Eigen::Index>(b) * k, k);
      }
    } else {
      // Flat chunks: every summary feeds the predictor, and each chunk's
      // prefix gradient fans back over all earlier summaries.
      const int m = static_cast<int>(t.chain.size());
      std::vector<Mat> d_s(m);
      for (int c = 0; c < m; ++c)
        d_s[c] = d_prefix.middleRows(static_cast<Eigen::Index>(c) * k, k);
      for (int c = m - 1; c >= 0; --c) {
        Mat d_pref = compress_backward(params, t.chain[c], d_s[c], *grads);
        for (int b = 0; b < c; ++b)
          d_s[b] += d_pref.middleRows(static_cast<Eigen::Index>(b) * k, k);
      }
    }
  }

  if (backward && fb.htrace) hicom_backward(params, *fb.htrace, d_sums, *grads);
  return loss;
}

void adam_step(Mat& p, const Mat& g, Mat& m, Mat& v, double lr, long t) {
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  m = b1 * m + (1.0 - b1) * g;
  v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
  p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
}

// Analytic mirror of the sequence shapes each mode feeds the stack, so the
// bench module can report predicted cost and pad waste without timers.
void add_cost(const TextGraph& g, const TokenTable& toks, const NodeList& batch,
              const ModelConfig& mc, const TrainConfig& tcfg, std::uint64_t seed, CostStats& cs) {
  const long k = mc.k;
  auto add_sq = [&cs](long n) { cs.predicted_cost += static_cast<std::size_t>(n * n); };

  switch (tcfg.mode) {
    case Mode::kTargetOnly:
      for (NodeId n : batch) {
        const TokenSeq& s = toks[static_cast<std::size_t>(n)];
        add_sq(static_cast<long>(s.length()));
        cs.tokens_processed += s.valid_count();
      }
      break;

    case Mode::kNconcat:
      for (NodeId n : batch) {
        TokenSeq row = nconcat_row(g, toks, n, tcfg, mc.max_len, seed);
        add_sq(static_cast<long>(row.length()));
        cs.tokens_processed += row.valid_count();
      }
      break;

    case Mode::kHicomNoHierarchy:
      for (NodeId n : batch) {
        const auto chunks = flat_chunks(g, toks, n, tcfg, seed);
        long blocks = 0;
        for (const TokenSeq& c : chunks) {
          add_sq(blocks * k + static_cast<long>(c.length()) + k);
          cs.tokens_processed += c.valid_count();
          ++blocks;
        }
        const TokenSeq& s = toks[static_cast<std::size_t>(n)];
        add_sq(blocks * k + static_cast<long>(s.length()));
        cs.tokens_processed += s.valid_count();
      }
      break;

    case Mode::kHicom:
    case Mode::kHicomNoAccumulation: {
      Hierarchy h = build_hierarchy(g, batch, tcfg.fanouts, seed);
      const long t = toks.empty() ? 0 : static_cast<long>(toks[0].length());
      const int L = h.depth();
      for (int l = 1; l <= L; ++l) {
        const Hierarchy::Level& parents = h.levels[l];
        const Hierarchy::Level& children = h.levels[l - 1];
        const long fanout = h.fanouts[l - 1];
        std::vector<long> per_parent(parents.size(), 0);
        long level_tokens = 0;
        for (std::size_t j = 0; j < children.size(); ++j) {
          const long v =
              static_cast<long>(toks[static_cast<std::size_t>(children.node[j])].valid_count());
          per_parent[children.parent[j]] += v;
          level_tokens += v;
        }
        long trim_w = 0;
        for (long v : per_parent) trim_w = std::max(trim_w, v);
        const long pre_w = fanout * t;
        const long width = tcfg.trim ? trim_w : pre_w;
        const long n_row = fanout * k + width + k;
        for (std::size_t pi = 0; pi < parents.size(); ++pi) add_sq(n_row);
        cs.tokens_processed += static_cast<std::size_t>(level_tokens);
        cs.cells_before += static_cast<std::size_t>(parents.size() * pre_w);
        cs.dummy_before += static_cast<std::size_t>(parents.size() * pre_w - level_tokens);
        cs.cells_after += static_cast<std::size_t>(parents.size() * width);
        cs.dummy_after += static_cast<std::size_t>(parents.size() * width - level_tokens);
      }
      // Predictor rows: every accumulated block adds k summary rows.
      for (std::size_t i = 0; i < batch.size(); ++i) {
        long blocks = 1;
        if (tcfg.mode == Mode::kHicom) {
          for (int l = 1; l < L; ++l)
            for (std::size_t o = 0; o < h.levels[l].size(); ++o)
              if (h.levels[l].root[o] == static_cast<int>(i)) ++blocks;
        }
        const TokenSeq& s = toks[static_cast<std::size_t>(batch[i])];
        add_sq(blocks * k + static_cast<long>(s.length()));
        cs.tokens_processed += s.valid_count();
      }
      break;
    }
  }

}

}  // namespace

Mode parse_mode(const std::string& name) {
  if (name == "hicom") return Mode::kHicom;
  if (name == "hicom_no_hierarchy") return Mode::kHicomNoHierarchy;
  if (name == "hicom_no_accumulation") return Mode::kHicomNoAccumulation;
  if (name == "nconcat") return Mode::kNconcat;
  if (name == "target_only") return Mode::kTargetOnly;
  throw ConfigError("unknown mode '" + name + "'");
}

std::string mode_name(Mode m) {
  switch (m) {
    case Mode::kHicom: return "hicom";
    case Mode::kHicomNoHierarchy: return "hicom_no_hierarchy";
    case Mode::kHicomNoAccumulation: return "hicom_no_accumulation";
    case Mode::kNconcat: return "nconcat";
    case Mode::kTargetOnly: return "target_only";
  }
  throw ConfigError("unknown mode value");
}

void TrainConfig::validate() const {
  if (mode != Mode::kTargetOnly) {
    if (fanouts.empty()) throw ConfigError("train: fanouts required for this mode");
    for (int f : fanouts)
      if (f < 1) throw ConfigError("train: fanout entries must be >= 1");
  }
  if (nconcat_neighbors < 0) throw ConfigError("train: nconcat_neighbors must be >= 0");
  if (epochs < 1 || batch_size < 1) throw ConfigError("train: epochs and batch size must be >= 1");
  if (lr <= 0.0) throw ConfigError("train: learning rate must be positive");
  if (threshold <= 0.0 || threshold >= 1.0) throw ConfigError("train: threshold must be in (0,1)");
}

ClassifierHead init_head(int d, int num_classes, std::uint64_t seed, double scale) {
  ClassifierHead h;
  h.proj.resize(d, num_classes);
  h.bias = Vec::Zero(num_classes);
  Rng rng(seed);
  for (int i = 0; i < d; ++i)
    for (int c = 0; c < num_classes; ++c) h.proj(i, c) = rng.normal(0.0, scale);
  return h;
}

Vec head_scores(const ClassifierHead& head, const Eigen::RowVectorXd& h) {
  Vec z = (h * head.proj).transpose() + head.bias;
  return z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

Vec predict(const CompressorParams& p, const ClassifierHead& head, const Mat* summary,
            const TokenSeq& target_tokens) {
  TargetForward t;
  if (summary) {
    t.summary = *summary;
    t.has_summary = true;
  }
  t.text = target_tokens;
  return predict_forward(p, head, t, false).scores;
}

std::uint64_t eval_sample_seed(std::uint64_t seed) { return mix_seed(seed, kSaltEval); }

double batch_pass(const TextGraph& g, const TokenTable& toks, const NodeList& batch,
                  const CompressorParams& params, const ClassifierHead& head,
                  const TrainConfig& tcfg, std::uint64_t seed, CompressorParams* grads,
                  Mat* d_proj, Vec* d_bias) {
  return run_batch(g, toks, batch, params, head, tcfg, seed, grads, d_proj, d_bias, nullptr);
}

TrainResult train(const TextGraph& g, const TokenTable& toks, const DatasetSplit& split,
                  const ModelConfig& mcfg, const TrainConfig& tcfg,
                  const std::function<void(const EpochStats&)>& on_epoch) {
  tcfg.validate();
  if (split.train.empty()) throw InvalidArgumentError("train: empty train split");

  CompressorParams params = init_params(mcfg);
  ClassifierHead head =
      init_head(mcfg.d, g.num_classes, mix_seed(tcfg.seed, kSaltHead), kHeadInitScale);
  CompressorParams grads = zeros_like(params);
  CompressorParams adam_m = zeros_like(params);
  CompressorParams adam_v = zeros_like(params);
  Mat d_proj = Mat::Zero(mcfg.d, g.num_classes);
  Mat m_proj = d_proj, v_proj = d_proj;
  Mat d_bias = Mat::Zero(g.num_classes, 1);
  Mat m_bias = d_bias, v_bias = d_bias;

  // Start the bias at the logit of a uniform positive rate so the first
  // epochs refine features instead of relearning the base rate.
  head.bias.setConstant(-std::log(static_cast<double>(std::max(2, g.num_classes)) - 1.0));

  TrainResult out;
  long step = 0;
  const std::uint64_t eval_seed = eval_sample_seed(tcfg.seed);
  for (int epoch = 1; epoch <= tcfg.epochs; ++epoch) {
    NodeList order = split.train;
    Rng(mix_seed(tcfg.seed, kSaltOrder, static_cast<std::uint64_t>(epoch))).shuffle(order);
    const std::uint64_t sample_seed =
        mix_seed(tcfg.seed, kSaltSample, static_cast<std::uint64_t>(epoch));

    double epoch_loss = 0.0;
    int batches = 0;
    for (std::size_t at = 0; at < order.size(); at += tcfg.batch_size) {
      NodeList batch(order.begin() + at,
                     order.begin() + std::min(order.size(), at + tcfg.batch_size));
      auto refs = named_tensors(grads);
      for (TensorRef& r : refs) r.mat->setZero();
      d_proj.setZero();
      d_bias.setZero();
      Vec d_bias_v = Vec::Zero(g.num_classes);
      double loss = run_batch(g, toks, batch, params, head, tcfg, sample_seed, &grads, &d_proj,
                              &d_bias_v, nullptr);
      d_bias.col(0) = d_bias_v;
      if (!std::isfinite(loss)) throw TrainingError("train: non-finite loss", step);
      ++step;
      auto pr = named_tensors(params);
      auto gr = named_tensors(grads);
      auto mr = named_tensors(adam_m);
      auto vr = named_tensors(adam_v);
      // Clip at a global norm of 1 across every tensor including the head;
      // occasional spiky batches otherwise knock the run off course.
      double sq = d_proj.squaredNorm() + d_bias.squaredNorm();
      for (std::size_t i = 0; i < gr.size(); ++i) sq += gr[i].mat->squaredNorm();
      if (const double norm = std::sqrt(sq); norm > 1.0) {
        const double scale = 1.0 / norm;
        for (std::size_t i = 0; i < gr.size(); ++i) *gr[i].mat *= scale;
        d_proj *= scale;
        d_bias *= scale;
      }
      for (std::size_t i = 0; i < pr.size(); ++i) {
        adam_step(*pr[i].mat, *gr[i].mat, *mr[i].mat, *vr[i].mat, tcfg.lr, step);
        if (pr[i].name.find("ln") == std::string::npos)
          *pr[i].mat *= 1.0 - tcfg.lr * kWeightDecay;
      }
      adam_step(head.proj, d_proj, m_proj, v_proj, tcfg.lr, step);
      head.proj *= 1.0 - tcfg.lr * kWeightDecay;
      Mat bias_mat = head.bias;
      adam_step(bias_mat, d_bias, m_bias, v_bias, tcfg.lr, step);
      head.bias = bias_mat.col(0);
      epoch_loss += loss;
      ++batches;
    }

    EpochStats es;
    es.epoch = epoch;
    es.train_loss = epoch_loss / std::max(batches, 1);
    if (!split.val.empty()) {
      es.val = evaluate(params, head, g, toks, split.val, tcfg, eval_seed);
      es.val.split_sizes["train"] = split.train.size();
    }
    const double f1 = es.val.f1_macro;
    out.history.push_back(std::move(es));
    if (on_epoch) on_epoch(out.history.back());
    if (out.best_epoch < 0 || f1 > out.best_val_f1) {
      out.best_epoch = epoch;
      out.best_val_f1 = f1;
      out.params = params;
      out.head = head;
    }
  }
  return out;
}

EvalReport evaluate(const CompressorParams& p, const ClassifierHead& head, const TextGraph& g,
                    const TokenTable& toks, const NodeList& split_nodes, const TrainConfig& tcfg,
                    std::uint64_t sample_seed) {
  if (split_nodes.empty()) throw InvalidArgumentError("evaluate: empty split");
  std::vector<std::vector<int>> truth, pred;
  truth.reserve(split_nodes.size());
  pred.reserve(split_nodes.size());
  constexpr std::size_t kChunk = 128;  // bounds peak memory, result unchanged
  for (std::size_t at = 0; at < split_nodes.size(); at += kChunk) {
    NodeList chunk(split_nodes.begin() + at,
                   split_nodes.begin() + std::min(split_nodes.size(), at + kChunk));
    std::vector<Vec> scores;
    run_batch(g, toks, chunk, p, head, tcfg, sample_seed, nullptr, nullptr, nullptr, &scores);
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      const auto& labels = g.labels[static_cast<std::size_t>(chunk[i])];
      truth.emplace_back(labels.begin(), labels.end());
      std::vector<int> ps;
      for (int c = 0; c < g.num_classes; ++c)
        if (scores[i](c) > tcfg.threshold) ps.push_back(c);
      pred.push_back(std::move(ps));
    }
  }
  EvalReport r = compute_metrics(truth, pred, g.num_classes);
  r.split_sizes["split"] = split_nodes.size();
  return r;
}

double epoch_pass(const TextGraph& g, const TokenTable& toks, const NodeList& targets,
                  const CompressorParams& p, const ClassifierHead& head, const TrainConfig& tcfg,
                  std::uint64_t seed, CostStats* cost) {
  tcfg.validate();
  CompressorParams grads = zeros_like(p);
  Mat d_proj = Mat::Zero(p.config.d, static_cast<int>(head.bias.size()));
  double loss_sum = 0.0;
  int batches = 0;
  for (std::size_t at = 0; at < targets.size(); at += tcfg.batch_size) {
    NodeList batch(targets.begin() + at,
                   targets.begin() + std::min(targets.size(), at + tcfg.batch_size));
    auto refs = named_tensors(grads);
    for (TensorRef& r : refs) r.mat->setZero();
    d_proj.setZero();
    Vec d_bias = Vec::Zero(head.bias.size());
    loss_sum += run_batch(g, toks, batch, p, head, tcfg, seed, &grads, &d_proj, &d_bias, nullptr);
    ++batches;
    if (cost) add_cost(g, toks, batch, p.config, tcfg, seed, *cost);
  }
  return loss_sum / std::max(batches, 1);
}

}  // namespace hicom
