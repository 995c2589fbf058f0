#include "hicom/packing.hpp"

#include "hicom/error.hpp"

#include <algorithm>
#include <string>

namespace hicom {

int TokenGrid::valid_count(int r) const {
  int n = 0;
  for (int c = 0; c < cols; ++c)
    if (is_valid(r, c)) ++n;
  return n;
}

PackedLevel pack_level(const Hierarchy& h, int l, const TokenTable& toks,
                       const std::vector<Mat>* child_summaries, int k, int d) {
  if (l < 1 || l > h.depth())
    throw InvalidArgumentError("pack_level: level " + std::to_string(l) + " out of range");
  if ((l == 1) != (child_summaries == nullptr))
    throw InvalidArgumentError("pack_level: child summaries required exactly for levels above 1");

  const Hierarchy::Level& parents = h.levels[l];
  const Hierarchy::Level& children = h.levels[l - 1];
  if (child_summaries && child_summaries->size() != children.size())
    throw InvalidArgumentError("pack_level: one summary per child occurrence expected");

  PackedLevel p;
  p.parents = static_cast<int>(parents.size());
  p.fanout = h.fanouts[l - 1];
  p.t = toks.empty() ? 0 : static_cast<int>(toks[0].length());
  p.k = k;
  p.d = d;
  const int slots = p.parents * p.fanout;
  p.tokens = TokenGrid(slots, p.t);
  p.summaries.assign(slots, Mat::Zero(k, d));
  p.summary_mask.assign(slots, 0);

  std::vector<std::uint8_t> occupied(static_cast<std::size_t>(slots), 0);
  for (std::size_t i = 0; i < children.size(); ++i) {
    const int row = children.parent[i] * p.fanout + children.slot[i];
    // Hierarchy invariants make collisions impossible; a hit means corrupted
    // parent/slot indices, not bad input.
    if (occupied[row])
      throw InternalError("pack_level: slot collision at row " + std::to_string(row));
    occupied[row] = 1;
    const TokenSeq& seq = toks.at(static_cast<std::size_t>(children.node[i]));
    if (static_cast<int>(seq.length()) != p.t)
      throw InvalidArgumentError("pack_level: token table rows must share one width");
    for (int c = 0; c < p.t; ++c) {
      p.tokens.id(row, c) = seq.ids[c];
      p.tokens.valid(row, c) = seq.mask[c];
    }
    if (child_summaries) {
      const Mat& s = (*child_summaries)[i];
      if (s.rows() != k || s.cols() != d)
        throw ConfigError("pack_level: summary shape mismatch");
      p.summaries[row] = s;
      p.summary_mask[row] = 1;
    }
  }
  return p;
}

CompactBatch concat_rows(const PackedLevel& p) {
  CompactBatch b;
  b.rows = p.parents;
  b.width = p.fanout * p.t;
  b.fanout = p.fanout;
  b.k = p.k;
  b.d = p.d;
  b.tokens = TokenGrid(b.rows, b.width);
  b.summary.assign(b.rows, Mat::Zero(p.fanout * p.k, p.d));
  b.summary_valid.assign(static_cast<std::size_t>(b.rows) * p.fanout, 0);

  for (int r = 0; r < b.rows; ++r) {
    for (int s = 0; s < p.fanout; ++s) {
      const int src = r * p.fanout + s;
      for (int c = 0; c < p.t; ++c) {
        b.tokens.id(r, s * p.t + c) = p.tokens.id(src, c);
        b.tokens.valid(r, s * p.t + c) = p.tokens.is_valid(src, c) ? 1 : 0;
      }
      b.summary[r].block(s * p.k, 0, p.k, p.d) = p.summaries[src];
      b.summary_valid[static_cast<std::size_t>(r) * p.fanout + s] = p.summary_mask[src];
    }
  }
  return b;
}

TokenGrid rearrange_and_trim(const TokenGrid& g) {
  int trimmed = 0;
  for (int r = 0; r < g.rows; ++r) trimmed = std::max(trimmed, g.valid_count(r));

  TokenGrid out(g.rows, trimmed);
  for (int r = 0; r < g.rows; ++r) {
    int w = 0;
    for (int c = 0; c < g.cols; ++c) {
      if (!g.is_valid(r, c)) continue;
      out.id(r, w) = g.id(r, c);
      out.valid(r, w) = 1;
      ++w;
    }
  }
  return out;
}

void rearrange_and_trim(CompactBatch& b) {
  b.tokens = rearrange_and_trim(b.tokens);
  b.width = b.tokens.cols;
}

double pad_waste(const TokenGrid& g) {
  const std::size_t cells = static_cast<std::size_t>(g.rows) * g.cols;
  if (cells == 0) return 0.0;
  std::size_t invalid = 0;
  for (std::uint8_t m : g.mask)
    if (m == 0) ++invalid;
  return static_cast<double>(invalid) / static_cast<double>(cells);
}

}  // namespace hicom
