#include "hicom/compressor.hpp"

#include "hicom/error.hpp"

#include <cmath>
#include <utility>

namespace hicom {

ComposedSeq compose_input(const CompressorParams& p, const Mat* prefix,
                          const std::vector<std::uint8_t>* prefix_valid, const TokenId* tokens,
                          const std::uint8_t* token_mask, int n_tokens, bool with_prompt) {
  const int d = p.config.d;
  const int prefix_rows = prefix ? static_cast<int>(prefix->rows()) : 0;
  if (prefix && prefix->cols() != d)
    throw ConfigError("compose_input: summary width does not match d");
  if (prefix_valid && static_cast<int>(prefix_valid->size()) != prefix_rows)
    throw ConfigError("compose_input: prefix validity length mismatch");
  const int n_prompt = with_prompt ? p.config.k : 0;
  const int n = prefix_rows + n_tokens + n_prompt;

  ComposedSeq s;
  s.x = Mat::Zero(n, d);
  s.valid.assign(n, 0);
  s.kind.resize(n);
  s.src.resize(n);
  s.pos.assign(n, -1);

  // Positions count valid elements only; a masked element embeds as a zero
  // row and shifts nothing, which is what makes padding inert.
  int rank = 0;
  auto next_rank = [&]() {
    if (rank >= p.config.max_len) throw ConfigError("compose_input: sequence exceeds max_len");
    return rank++;
  };

  int i = 0;
  for (int r = 0; r < prefix_rows; ++r, ++i) {
    s.kind[i] = ElemKind::kSummary;
    s.src[i] = r;
    if (!prefix_valid || (*prefix_valid)[r]) {
      s.pos[i] = next_rank();
      s.x.row(i) = prefix->row(r) + p.pos_emb.row(s.pos[i]);
      s.valid[i] = 1;
    }
  }
  for (int c = 0; c < n_tokens; ++c, ++i) {
    s.kind[i] = ElemKind::kToken;
    s.src[i] = tokens[c];
    if (!token_mask || token_mask[c]) {
      if (tokens[c] < 0 || tokens[c] >= p.config.vocab_size)
        throw ReferenceError("compose_input: token id outside vocabulary");
      s.pos[i] = next_rank();
      s.x.row(i) = p.tok_emb.row(tokens[c]) + p.pos_emb.row(s.pos[i]);
      s.valid[i] = 1;
    }
  }
  for (int j = 0; j < n_prompt; ++j, ++i) {
    s.kind[i] = ElemKind::kPrompt;
    s.src[i] = j;
    s.pos[i] = next_rank();
    s.x.row(i) = p.prompt_emb.row(j) + p.pos_emb.row(s.pos[i]);
    s.valid[i] = 1;
  }
  return s;
}

Mat route_embedding_grads(const CompressorParams& p, const ComposedSeq& seq, const Mat& d_x,
                          CompressorParams& grads) {
  int prefix_rows = 0;
  for (std::size_t i = 0; i < seq.kind.size(); ++i)
    if (seq.kind[i] == ElemKind::kSummary) ++prefix_rows;
  Mat d_prefix = Mat::Zero(prefix_rows, p.config.d);
  for (std::size_t i = 0; i < seq.kind.size(); ++i) {
    if (!seq.valid[i]) continue;  // masked rows carry exactly zero gradient
    switch (seq.kind[i]) {
      case ElemKind::kSummary:
        d_prefix.row(seq.src[i]) += d_x.row(static_cast<Eigen::Index>(i));
        break;
      case ElemKind::kToken:
        grads.tok_emb.row(seq.src[i]) += d_x.row(static_cast<Eigen::Index>(i));
        break;
      case ElemKind::kPrompt:
        grads.prompt_emb.row(seq.src[i]) += d_x.row(static_cast<Eigen::Index>(i));
        break;
    }
    grads.pos_emb.row(seq.pos[i]) += d_x.row(static_cast<Eigen::Index>(i));
  }
  return d_prefix;
}

Mat compress(const CompressorParams& p, const Mat* prefix,
             const std::vector<std::uint8_t>* prefix_valid, const TokenId* tokens,
             const std::uint8_t* token_mask, int n_tokens, CompressTrace* trace) {
  ComposedSeq seq = compose_input(p, prefix, prefix_valid, tokens, token_mask, n_tokens, true);
  Mat hidden = stack_forward(p, seq.x, seq.valid, trace ? &trace->stack : nullptr);
  Mat out = hidden.bottomRows(p.config.k);
  if (trace) trace->seq = std::move(seq);
  return out;
}

Mat compress_row(const CompressorParams& p, const CompactBatch& b, int r, CompressTrace* trace) {
  std::vector<std::uint8_t> pv(static_cast<std::size_t>(b.fanout) * b.k);
  for (int s = 0; s < b.fanout; ++s) {
    const std::uint8_t v = b.summary_valid[static_cast<std::size_t>(r) * b.fanout + s];
    for (int j = 0; j < b.k; ++j) pv[static_cast<std::size_t>(s) * b.k + j] = v;
  }
  const std::size_t off = static_cast<std::size_t>(r) * b.tokens.cols;
  return compress(p, &b.summary[r], &pv, b.tokens.ids.data() + off, b.tokens.mask.data() + off,
                  b.tokens.cols, trace);
}

Mat compress_backward(const CompressorParams& p, const CompressTrace& trace, const Mat& d_summary,
                      CompressorParams& grads) {
  if (d_summary.rows() != p.config.k || d_summary.cols() != p.config.d)
    throw ConfigError("compress_backward: d_summary must be k x d");
  const Eigen::Index n = trace.seq.x.rows();
  Mat d_out = Mat::Zero(n, p.config.d);
  d_out.bottomRows(p.config.k) = d_summary;
  Mat d_x = stack_backward(p, trace.stack, d_out, grads);
  return route_embedding_grads(p, trace.seq, d_x, grads);
}

Mat mean_pool_compress(const CompressorParams& p, const Mat* prefix,
                       const std::vector<std::uint8_t>* prefix_valid, const TokenId* tokens,
                       const std::uint8_t* token_mask, int n_tokens) {
  const int d = p.config.d;
  Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(d);
  int count = 0;
  if (prefix) {
    for (Eigen::Index r = 0; r < prefix->rows(); ++r) {
      if (prefix_valid && !(*prefix_valid)[static_cast<std::size_t>(r)]) continue;
      sum += prefix->row(r);
      ++count;
    }
  }
  for (int c = 0; c < n_tokens; ++c) {
    if (token_mask && !token_mask[c]) continue;
    sum += p.tok_emb.row(tokens[c]);
    ++count;
  }
  Mat out = Mat::Zero(p.config.k, d);
  if (count > 0) out.rowwise() = sum / count;
  return out;
}

HicomResult compress_hierarchy(const Hierarchy& h, const TokenTable& toks,
                               const CompressorParams& p, bool trim, HicomTrace* trace) {
  const int L = h.depth();
  const int k = p.config.k;
  const int d = p.config.d;
  HicomResult res;
  res.summaries.resize(L);
  if (trace) {
    trace->h = h;
    trace->levels.resize(L);
  }
  for (int l = 1; l <= L; ++l) {
    PackedLevel pl = pack_level(h, l, toks, l == 1 ? nullptr : &res.summaries[l - 2], k, d);
    CompactBatch b = concat_rows(pl);
    if (trim) rearrange_and_trim(b);
    LevelTrace* lt = trace ? &trace->levels[l - 1] : nullptr;
    if (lt) lt->rows.resize(b.rows);
    std::vector<Mat>& out = res.summaries[l - 1];
    out.resize(b.rows);
    for (int r = 0; r < b.rows; ++r)
      out[r] = compress_row(p, b, r, lt ? &lt->rows[r] : nullptr);
    if (lt) lt->batch = std::move(b);
  }
  return res;
}

void hicom_backward(const CompressorParams& p, const HicomTrace& trace,
                    const std::vector<std::vector<Mat>>& d_summaries, CompressorParams& grads) {
  const int L = trace.h.depth();
  const int k = p.config.k;
  const int d = p.config.d;
  if (static_cast<int>(d_summaries.size()) != L)
    throw InvalidArgumentError("hicom_backward: one gradient list per level expected");
  std::vector<std::vector<Mat>> d_sums = d_summaries;
  for (int l = L; l >= 1; --l) {
    const LevelTrace& lt = trace.levels[l - 1];
    const Hierarchy::Level& children = trace.h.levels[l - 1];
    std::vector<Mat> d_prefix(lt.rows.size());
    for (std::size_t i = 0; i < lt.rows.size(); ++i)
      d_prefix[i] = compress_backward(p, lt.rows[i], d_sums[l - 1][i], grads);
    if (l > 1) {
      // Each child occurrence owns k rows of its parent's summary prefix.
      for (std::size_t j = 0; j < children.size(); ++j)
        d_sums[l - 2][j] += d_prefix[children.parent[j]].block(children.slot[j] * k, 0, k, d);
    }
  }
}

HicomOutput hicom_forward(const TextGraph& g, const NodeList& targets,
                          const std::vector<int>& fanouts, std::uint64_t seed,
                          const TokenTable& toks, const CompressorParams& p, bool accumulate) {
  Hierarchy h = build_hierarchy(g, targets, fanouts, seed);
  HicomResult r = compress_hierarchy(h, toks, p);
  HicomOutput out;
  out.target_summary = r.summaries[h.depth() - 1];
  if (accumulate) {
    out.accumulated.resize(targets.size());
    for (std::size_t t = 0; t < targets.size(); ++t)
      out.accumulated[t] = accumulation_list(h, r, static_cast<int>(t));
  }
  return out;
}

std::vector<Mat> accumulation_list(const Hierarchy& h, const HicomResult& r, int tgt) {
  std::vector<Mat> out;
  for (int l = 1; l < h.depth(); ++l) {
    const Hierarchy::Level& lv = h.levels[l];
    for (std::size_t i = 0; i < lv.size(); ++i)
      if (lv.root[i] == tgt) out.push_back(r.summaries[l - 1][i]);
  }
  return out;
}

Mat summary_accumulate(const std::vector<Mat>& blocks) {
  if (blocks.empty()) throw InvalidArgumentError("summary_accumulate: empty list");
  const Eigen::Index d = blocks[0].cols();
  Eigen::Index rows = 0;
  for (const Mat& b : blocks) {
    if (b.cols() != d) throw ConfigError("summary_accumulate: mixed summary widths");
    rows += b.rows();
  }
  Mat out(rows, d);
  Eigen::Index at = 0;
  for (const Mat& b : blocks) {
    out.middleRows(at, b.rows()) = b;
    at += b.rows();
  }
  return out;
}

double lm_soft_prompt_loss(const CompressorParams& p, const Mat* prefix,
                           const std::vector<std::uint8_t>* prefix_valid, const TokenId* cont,
                           const std::uint8_t* cont_mask, int n, LmLossTrace* trace) {
  int valid_cont = 0;
  for (int c = 0; c < n; ++c)
    if (!cont_mask || cont_mask[c]) ++valid_cont;
  if (valid_cont < 2)
    throw InvalidArgumentError("lm_soft_prompt_loss: need at least 2 valid continuation tokens");

  ComposedSeq seq = compose_input(p, prefix, prefix_valid, cont, cont_mask, n, false);
  Mat hidden = stack_forward(p, seq.x, seq.valid, trace ? &trace->stack : nullptr);

  // Each valid token is predicted from the hidden state of the closest valid
  // element before it; the first one is skipped when nothing precedes it.
  std::vector<int> pred_pos;
  std::vector<TokenId> pred_tok;
  int prev = -1;
  for (std::size_t i = 0; i < seq.kind.size(); ++i) {
    if (!seq.valid[i]) continue;
    if (seq.kind[i] == ElemKind::kToken && prev >= 0) {
      pred_pos.push_back(prev);
      pred_tok.push_back(static_cast<TokenId>(seq.src[i]));
    }
    prev = static_cast<int>(i);
  }
  const int P = static_cast<int>(pred_pos.size());

  Mat probs;
  if (trace) probs.resize(P, p.config.vocab_size);
  double loss = 0.0;
  for (int r = 0; r < P; ++r) {
    Eigen::RowVectorXd logits = hidden.row(pred_pos[r]) * p.out_proj;
    const double m = logits.maxCoeff();
    const double lse = m + std::log((logits.array() - m).exp().sum());
    loss += lse - logits(pred_tok[r]);
    if (trace) probs.row(r) = (logits.array() - lse).exp().matrix();
  }
  loss /= P;

  if (trace) {
    trace->seq = std::move(seq);
    trace->hidden = std::move(hidden);
    trace->pred_pos = std::move(pred_pos);
    trace->pred_tok = std::move(pred_tok);
    trace->probs = std::move(probs);
  }
  return loss;
}

Mat lm_soft_prompt_loss_backward(const CompressorParams& p, const LmLossTrace& trace,
                                 CompressorParams& grads) {
  const int P = static_cast<int>(trace.pred_pos.size());
  Mat d_hidden = Mat::Zero(trace.hidden.rows(), p.config.d);
  for (int r = 0; r < P; ++r) {
    Eigen::RowVectorXd d_logits = trace.probs.row(r);
    d_logits(trace.pred_tok[r]) -= 1.0;
    d_logits /= P;
    d_hidden.row(trace.pred_pos[r]) += d_logits * p.out_proj.transpose();
    grads.out_proj += trace.hidden.row(trace.pred_pos[r]).transpose() * d_logits;
  }
  Mat d_x = stack_backward(p, trace.stack, d_hidden, grads);
  return route_embedding_grads(p, trace.seq, d_x, grads);
}

}  // namespace hicom
