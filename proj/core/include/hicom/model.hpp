// Tiny causal transformer used by the compressor: pre-LN blocks with RMSNorm,
// multi-head attention, GELU feed-forward. Double precision throughout so
// finite-difference gradient checks have headroom.
#pragma once

#include "hicom/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hicom {

struct ModelConfig {
  int vocab_size = 0;
  int d = 64;
  int layers = 2;
  int heads = 4;
  int k = 4;        // summary vectors per compression
  int t = 32;       // tokens kept per node text
  int max_len = 512;
  std::uint64_t init_seed = 7;
  double init_scale = 0.02;

  int head_dim() const { return d / heads; }
  void validate() const;
};

struct LayerParams {
  Mat ln1, ln2;        // 1 x d RMSNorm scales
  Mat wq, wk, wv, wo;  // d x d
  Mat w1;              // d x 4d
  Mat w2;              // 4d x d
};

struct CompressorParams {
  ModelConfig config;
  Mat tok_emb;     // vocab x d
  Mat pos_emb;     // max_len x d
  Mat prompt_emb;  // k x d, the learnable soft prompt
  std::vector<LayerParams> layers;
  Mat out_proj;    // d x vocab, next-token head for the LM objective
};

// Embeddings and projections drawn from N(0, init_scale^2) under init_seed;
// norm scales start at 1.
CompressorParams init_params(const ModelConfig& cfg);

// Same shapes as p, all zeros. Gradient and optimizer-state holder.
CompressorParams zeros_like(const CompressorParams& p);

// Every tensor in a fixed order shared by the optimizer, the checkpoint
// format, and the gradient checker.
struct TensorRef {
  std::string name;
  Mat* mat;
};
std::vector<TensorRef> named_tensors(CompressorParams& p);

struct ConstTensorRef {
  std::string name;
  const Mat* mat;
};
std::vector<ConstTensorRef> named_tensors(const CompressorParams& p);

// Per-layer forward caches needed by the backward pass.
struct LayerTrace {
  Mat x_in;              // n x d, block input
  Mat a;                 // normed attention input
  Vec inv1, inv2;        // per-row RMSNorm reciprocals
  Mat q, kk, v;          // n x d projections
  std::vector<Mat> att;  // per head, n x n attention weights
  Mat att_concat;        // n x d, heads concatenated before wo
  Mat x_mid;             // after attention residual
  Mat f;                 // normed FFN input
  Mat h1;                // n x 4d pre-activation
  Mat g;                 // gelu(h1)
};

struct StackTrace {
  std::vector<std::uint8_t> valid;
  std::vector<LayerTrace> layers;
};

// Runs the block stack over embedded input x (n x d). Causal over valid
// elements: row i attends to valid rows j <= i; invalid keys are masked out
// entirely, and a row with no valid key gets a zero attention output instead
// of a softmax over nothing. Pass trace when a backward pass will follow.
Mat stack_forward(const CompressorParams& p, const Mat& x,
                  const std::vector<std::uint8_t>& valid, StackTrace* trace);

// Accumulates parameter gradients into grads and returns d_loss/d_x.
Mat stack_backward(const CompressorParams& p, const StackTrace& trace, const Mat& d_out,
                   CompressorParams& grads);

}  // namespace hicom
