#include "hicom/model.hpp"

#include "hicom/error.hpp"
#include "hicom/rng.hpp"

#include <cmath>
#include <string>

namespace hicom {
namespace {

constexpr double kNormEps = 1e-6;
// Masked attention logit. Large enough that exp(logit - rowmax) is absorbed
// without a trace against any real attention weight in double arithmetic,
// but small enough that the vectorized exp yields a normal number: the
// clamped exp of extreme inputs returns subnormals, and subnormal operands
// put the GEMMs on a microcode-assist path an order of magnitude slower.
constexpr double kMaskedLogit = -600.0;

// tanh approximation; smooth everywhere, which the finite-difference gradient
// check relies on.
double gelu(double x) {
  const double c = std::sqrt(2.0 / M_PI);
  const double u = c * (x + 0.044715 * x * x * x);
  return 0.5 * x * (1.0 + std::tanh(u));
}

double gelu_prime(double x) {
  const double c = std::sqrt(2.0 / M_PI);
  const double u = c * (x + 0.044715 * x * x * x);
  const double th = std::tanh(u);
  const double du = c * (1.0 + 3.0 * 0.044715 * x * x);
  return 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * du;
}

// y = (x * inv) .* scale with inv = 1/sqrt(mean(x^2) + eps), per row.
Mat rmsnorm(const Mat& x, const Mat& scale, Vec& inv_out) {
  const int n = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  inv_out.resize(n);
  Mat y(n, d);
  for (int r = 0; r < n; ++r) {
    const double ms = x.row(r).squaredNorm() / d;
    const double inv = 1.0 / std::sqrt(ms + kNormEps);
    inv_out(r) = inv;
    y.row(r) = (x.row(r) * inv).cwiseProduct(scale.row(0));
  }
  return y;
}

// Adds d_x contribution for y = rmsnorm(x) given upstream d_y; accumulates
// the scale gradient.
void rmsnorm_backward(const Mat& x, const Mat& scale, const Vec& inv, const Mat& d_y,
                      Mat& d_x_accum, Mat& d_scale_accum) {
  const int n = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  for (int r = 0; r < n; ++r) {
    const Eigen::RowVectorXd u = d_y.row(r).cwiseProduct(scale.row(0));
    const double dot = u.dot(x.row(r));
    const double iv = inv(r);
    d_x_accum.row(r) += u * iv - x.row(r) * (iv * iv * iv / d * dot);
    d_scale_accum.row(0) += d_y.row(r).cwiseProduct(x.row(r) * iv);
  }
}

}  // namespace

void ModelConfig::validate() const {
  if (vocab_size < 2) throw ConfigError("model: vocab_size must be at least 2");
  if (d < 1 || layers < 1 || heads < 1 || k < 1 || t < 1)
    throw ConfigError("model: dimensions must be positive");
  if (d % heads != 0) throw ConfigError("model: head count must divide d");
  if (max_len < k + 1) throw ConfigError("model: max_len too small for the prompt");
  if (init_scale <= 0.0) throw ConfigError("model: init_scale must be positive");
}

CompressorParams init_params(const ModelConfig& cfg) {
  cfg.validate();
  CompressorParams p;
  p.config = cfg;
  p.tok_emb.resize(cfg.vocab_size, cfg.d);
  p.pos_emb.resize(cfg.max_len, cfg.d);
  p.prompt_emb.resize(cfg.k, cfg.d);
  p.layers.resize(cfg.layers);
  for (LayerParams& l : p.layers) {
    l.ln1 = Mat::Ones(1, cfg.d);
    l.ln2 = Mat::Ones(1, cfg.d);
    l.wq.resize(cfg.d, cfg.d);
    l.wk.resize(cfg.d, cfg.d);
    l.wv.resize(cfg.d, cfg.d);
    l.wo.resize(cfg.d, cfg.d);
    l.w1.resize(cfg.d, 4 * cfg.d);
    l.w2.resize(4 * cfg.d, cfg.d);
  }
  p.out_proj.resize(cfg.d, cfg.vocab_size);

  // One stream over the tensor enumeration keeps initialization reproducible
  // for any shape; norm scales stay at 1 and draw nothing.
  Rng rng(mix_seed(cfg.init_seed, 0x696e6974));
  for (TensorRef& t : named_tensors(p)) {
    if (t.name.find("ln") != std::string::npos) continue;
    for (Eigen::Index i = 0; i < t.mat->rows(); ++i)
      for (Eigen::Index j = 0; j < t.mat->cols(); ++j)
        (*t.mat)(i, j) = rng.normal(0.0, cfg.init_scale);
  }
  return p;
}

CompressorParams zeros_like(const CompressorParams& p) {
  CompressorParams z;
  z.config = p.config;
  z.tok_emb = Mat::Zero(p.tok_emb.rows(), p.tok_emb.cols());
  z.pos_emb = Mat::Zero(p.pos_emb.rows(), p.pos_emb.cols());
  z.prompt_emb = Mat::Zero(p.prompt_emb.rows(), p.prompt_emb.cols());
  z.layers.resize(p.layers.size());
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    const LayerParams& s = p.layers[i];
    LayerParams& l = z.layers[i];
    l.ln1 = Mat::Zero(1, s.ln1.cols());
    l.ln2 = Mat::Zero(1, s.ln2.cols());
    l.wq = Mat::Zero(s.wq.rows(), s.wq.cols());
    l.wk = Mat::Zero(s.wk.rows(), s.wk.cols());
    l.wv = Mat::Zero(s.wv.rows(), s.wv.cols());
    l.wo = Mat::Zero(s.wo.rows(), s.wo.cols());
    l.w1 = Mat::Zero(s.w1.rows(), s.w1.cols());
    l.w2 = Mat::Zero(s.w2.rows(), s.w2.cols());
  }
  z.out_proj = Mat::Zero(p.out_proj.rows(), p.out_proj.cols());
  return z;
}

std::vector<TensorRef> named_tensors(CompressorParams& p) {
  std::vector<TensorRef> out;
  out.push_back({"tok_emb", &p.tok_emb});
  out.push_back({"pos_emb", &p.pos_emb});
  out.push_back({"prompt_emb", &p.prompt_emb});
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    const std::string base = "layers." + std::to_string(i) + ".";
    LayerParams& l = p.layers[i];
    out.push_back({base + "ln1", &l.ln1});
    out.push_back({base + "ln2", &l.ln2});
    out.push_back({base + "wq", &l.wq});
    out.push_back({base + "wk", &l.wk});
    out.push_back({base + "wv", &l.wv});
    out.push_back({base + "wo", &l.wo});
    out.push_back({base + "w1", &l.w1});
    out.push_back({base + "w2", &l.w2});
  }
  out.push_back({"out_proj", &p.out_proj});
  return out;
}

std::vector<ConstTensorRef> named_tensors(const CompressorParams& p) {
  auto refs = named_tensors(const_cast<CompressorParams&>(p));  // read-only view
  std::vector<ConstTensorRef> out;
  out.reserve(refs.size());
  for (const TensorRef& r : refs) out.push_back({r.name, r.mat});
  return out;
}

Mat stack_forward(const CompressorParams& p, const Mat& x,
                  const std::vector<std::uint8_t>& valid, StackTrace* trace) {
  const int n = static_cast<int>(x.rows());
  const int d = p.config.d;
  const int heads = p.config.heads;
  const int dh = p.config.head_dim();
  if (x.cols() != d) throw ConfigError("stack_forward: input width does not match d");
  if (static_cast<int>(valid.size()) != n)
    throw ConfigError("stack_forward: validity length does not match rows");

  // Row i may attend only to valid rows j <= i; any_key marks rows with at
  // least one such key.
  std::vector<std::uint8_t> any_key(valid.size(), 0);
  bool seen = false;
  for (int i = 0; i < n; ++i) {
    seen = seen || valid[i] != 0;
    any_key[i] = seen ? 1 : 0;
  }

  if (trace) {
    trace->valid = valid;
    trace->layers.assign(p.layers.size(), LayerTrace{});
  }

  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
  Mat cur = x;
  for (std::size_t li = 0; li < p.layers.size(); ++li) {
    const LayerParams& lp = p.layers[li];
    LayerTrace* lt = trace ? &trace->layers[li] : nullptr;

    Vec inv1;
    Mat a = rmsnorm(cur, lp.ln1, inv1);
    Mat q = a * lp.wq;
    Mat k = a * lp.wk;
    Mat v = a * lp.wv;

    Mat att_concat(n, d);
    std::vector<Mat> att_store;
    if (lt) att_store.reserve(heads);
    for (int h = 0; h < heads; ++h) {
      Mat qh = q.middleCols(h * dh, dh);
      Mat kh = k.middleCols(h * dh, dh);
      Mat scores = qh * kh.transpose() * inv_sqrt_dh;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if (j > i || !valid[j]) scores(i, j) = kMaskedLogit;
      Mat att(n, n);
      for (int i = 0; i < n; ++i) {
        if (!any_key[i]) {
          att.row(i).setZero();
          continue;
        }
        const double m = scores.row(i).maxCoeff();
        att.row(i) = (scores.row(i).array() - m).exp().matrix();
        att.row(i) /= att.row(i).sum();
      }
      att_concat.middleCols(h * dh, dh) = att * v.middleCols(h * dh, dh);
      if (lt) att_store.push_back(std::move(att));
    }
    Mat x_mid = cur + att_concat * lp.wo;

    Vec inv2;
    Mat f = rmsnorm(x_mid, lp.ln2, inv2);
    Mat h1 = f * lp.w1;
    Mat g = h1.unaryExpr([](double v_) { return gelu(v_); });
    Mat next = x_mid + g * lp.w2;

    if (lt) {
      lt->x_in = std::move(cur);
      lt->a = std::move(a);
      lt->inv1 = std::move(inv1);
      lt->inv2 = std::move(inv2);
      lt->q = std::move(q);
      lt->kk = std::move(k);
      lt->v = std::move(v);
      lt->att = std::move(att_store);
      lt->att_concat = std::move(att_concat);
      lt->x_mid = std::move(x_mid);
      lt->f = std::move(f);
      lt->h1 = std::move(h1);
      lt->g = std::move(g);
    }
    cur = std::move(next);
  }
  return cur;
}

Mat stack_backward(const CompressorParams& p, const StackTrace& trace, const Mat& d_out,
                   CompressorParams& grads) {
  const int n = static_cast<int>(d_out.rows());
  const int d = p.config.d;
  const int heads = p.config.heads;
  const int dh = p.config.head_dim();
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

  Mat d_cur = d_out;
  for (int li = static_cast<int>(p.layers.size()) - 1; li >= 0; --li) {
    const LayerParams& lp = p.layers[li];
    const LayerTrace& lt = trace.layers[li];
    LayerParams& lg = grads.layers[li];

    // FFN branch: next = x_mid + gelu(f*w1)*w2.
    Mat d_g = d_cur * lp.w2.transpose();
    lg.w2 += lt.g.transpose() * d_cur;
    Mat d_h1 = d_g.cwiseProduct(lt.h1.unaryExpr([](double v_) { return gelu_prime(v_); }));
    Mat d_f = d_h1 * lp.w1.transpose();
    lg.w1 += lt.f.transpose() * d_h1;
    Mat d_xmid = d_cur;  // residual path
    rmsnorm_backward(lt.x_mid, lp.ln2, lt.inv2, d_f, d_xmid, lg.ln2);

    // Attention branch: x_mid = x_in + att_concat*wo.
    Mat d_attconcat = d_xmid * lp.wo.transpose();
    lg.wo += lt.att_concat.transpose() * d_xmid;
    Mat d_q = Mat::Zero(n, d);
    Mat d_k = Mat::Zero(n, d);
    Mat d_v = Mat::Zero(n, d);
    for (int h = 0; h < heads; ++h) {
      const Mat& att = lt.att[h];
      Mat d_oh = d_attconcat.middleCols(h * dh, dh);
      Mat vh = lt.v.middleCols(h * dh, dh);
      Mat d_att = d_oh * vh.transpose();
      d_v.middleCols(h * dh, dh) = att.transpose() * d_oh;
      // Softmax rows: dS = att .* (dA - rowsum(dA .* att)). Guarded all-zero
      // rows fall out as zero automatically.
      Mat d_scores(n, n);
      for (int i = 0; i < n; ++i) {
        const double dot = d_att.row(i).dot(att.row(i));
        d_scores.row(i) = att.row(i).cwiseProduct((d_att.row(i).array() - dot).matrix());
      }
      d_q.middleCols(h * dh, dh) = d_scores * lt.kk.middleCols(h * dh, dh) * inv_sqrt_dh;
      d_k.middleCols(h * dh, dh) =
          d_scores.transpose() * lt.q.middleCols(h * dh, dh) * inv_sqrt_dh;
    }
    Mat d_a = d_q * lp.wq.transpose() + d_k * lp.wk.transpose() + d_v * lp.wv.transpose();
    lg.wq += lt.a.transpose() * d_q;
    lg.wk += lt.a.transpose() * d_k;
    lg.wv += lt.a.transpose() * d_v;

    Mat d_xin = d_xmid;  // residual path
    rmsnorm_backward(lt.x_in, lp.ln1, lt.inv1, d_a, d_xin, lg.ln1);
    d_cur = std::move(d_xin);
  }
  return d_cur;
}

}  // namespace hicom
