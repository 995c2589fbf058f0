// Comp(.): soft-prompt compression of summary prefixes and token rows into
// exactly k summary vectors, the level-by-level hierarchy walk built on it,
// and the soft-prompt language-modeling objective.
#pragma once

#include "hicom/graph.hpp"
#include "hicom/model.hpp"
#include "hicom/packing.hpp"
#include "hicom/sampler.hpp"
#include "hicom/tokenizer.hpp"

#include <cstdint>
#include <vector>

namespace hicom {

enum class ElemKind { kSummary, kToken, kPrompt };

// A composed input sequence plus enough bookkeeping to route gradients back
// to the tables each element came from.
struct ComposedSeq {
  Mat x;                             // n x d, positions already added
  std::vector<std::uint8_t> valid;   // per element
  std::vector<ElemKind> kind;
  std::vector<int> src;              // prefix row / token id / prompt row
  std::vector<int> pos;              // valid-rank position, -1 when masked
};

// Builds [summary prefix rows ++ token embeddings ++ optional prompt].
// Positions count valid elements only, so masked padding shifts nothing;
// masked elements embed as zero rows. prefix may be null (no summaries);
// prefix_valid is per prefix row, null meaning all valid.
ComposedSeq compose_input(const CompressorParams& p, const Mat* prefix,
                          const std::vector<std::uint8_t>* prefix_valid, const TokenId* tokens,
                          const std::uint8_t* token_mask, int n_tokens, bool with_prompt);

// Scatters d_x into token/position/prompt embedding gradients and returns
// the gradient wrt the prefix rows (empty matrix when there was no prefix).
Mat route_embedding_grads(const CompressorParams& p, const ComposedSeq& seq, const Mat& d_x,
                          CompressorParams& grads);

struct CompressTrace {
  ComposedSeq seq;
  StackTrace stack;
};

// Returns the final hidden states at the k prompt positions, shape k x d for
// any input, including a fully empty one.
Mat compress(const CompressorParams& p, const Mat* prefix,
             const std::vector<std::uint8_t>* prefix_valid, const TokenId* tokens,
             const std::uint8_t* token_mask, int n_tokens, CompressTrace* trace = nullptr);

// compress() applied to row r of a packed batch.
Mat compress_row(const CompressorParams& p, const CompactBatch& b, int r,
                 CompressTrace* trace = nullptr);

// d_summary is k x d. Accumulates parameter gradients, returns d wrt prefix.
Mat compress_backward(const CompressorParams& p, const CompressTrace& trace,
                      const Mat& d_summary, CompressorParams& grads);

// Deterministic stand-in: every summary row is the mean of the valid input
// rows (prefix rows and raw token embeddings, no positions), zeros if empty.
Mat mean_pool_compress(const CompressorParams& p, const Mat* prefix,
                       const std::vector<std::uint8_t>* prefix_valid, const TokenId* tokens,
                       const std::uint8_t* token_mask, int n_tokens);

struct LevelTrace {
  CompactBatch batch;               // as fed to the compressor (post-trim when trimming)
  std::vector<CompressTrace> rows;  // one per occurrence at this level
};

struct HicomTrace {
  Hierarchy h;
  std::vector<LevelTrace> levels;  // index l-1 holds level l
};

// summaries[l-1][i] is the k x d summary of occurrence i at levels[l];
// summaries[L-1] holds the per-target s0.
struct HicomResult {
  std::vector<std::vector<Mat>> summaries;
};

// The batched walk: for l = 1..L, pack_level -> concat_rows ->
// rearrange_and_trim -> compress, each level consuming the previous one's
// summaries. trim=false skips the compaction (results are identical, only
// slower); trace enables hicom_backward.
HicomResult compress_hierarchy(const Hierarchy& h, const TokenTable& toks,
                               const CompressorParams& p, bool trim = true,
                               HicomTrace* trace = nullptr);

// d_summaries mirrors HicomResult::summaries with zero matrices where a
// level's output feeds nothing; cross-level chaining is handled here.
void hicom_backward(const CompressorParams& p, const HicomTrace& trace,
                    const std::vector<std::vector<Mat>>& d_summaries, CompressorParams& grads);

// Convenience wrapper matching the end-to-end contract: builds the hierarchy
// and returns per-target s0, plus per-target ordered lower-level summary
// lists when accumulate is set.
struct HicomOutput {
  std::vector<Mat> target_summary;
  std::vector<std::vector<Mat>> accumulated;  // excludes s0 itself
};
HicomOutput hicom_forward(const TextGraph& g, const NodeList& targets,
                          const std::vector<int>& fanouts, std::uint64_t seed,
                          const TokenTable& toks, const CompressorParams& p, bool accumulate);

// Ordered lower-level summaries for target tgt: levels 1..L-1 ascending,
// occurrences in hierarchy order within each level. s0 is not included.
std::vector<Mat> accumulation_list(const Hierarchy& h, const HicomResult& r, int tgt);

// Row-wise concatenation of summary blocks in the given order.
Mat summary_accumulate(const std::vector<Mat>& blocks);

struct LmLossTrace {
  ComposedSeq seq;
  StackTrace stack;
  Mat hidden;                     // n x d final hidden states
  std::vector<int> pred_pos;      // hidden row predicting each target token
  std::vector<TokenId> pred_tok;
  Mat probs;                      // one softmax row per predicted position
};

// Mean next-token cross-entropy over the continuation, each position
// conditioned on [summary prefix ++ earlier continuation tokens]. The first
// continuation token is predicted only when a valid prefix element precedes
// it. Requires at least 2 valid continuation tokens.
double lm_soft_prompt_loss(const CompressorParams& p, const Mat* prefix,
                           const std::vector<std::uint8_t>* prefix_valid, const TokenId* cont,
                           const std::uint8_t* cont_mask, int n, LmLossTrace* trace = nullptr);

// Accumulates parameter gradients; returns d wrt the summary prefix rows.
Mat lm_soft_prompt_loss_backward(const CompressorParams& p, const LmLossTrace& trace,
                                 CompressorParams& grads);

}  // namespace hicom
