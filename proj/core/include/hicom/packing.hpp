// Batched packing for level-by-level compression: scatter child tokens and
// summaries into fixed-fanout parent slots, concatenate per parent, and
// compact rows with rearrange-and-trim.
#pragma once

#include "hicom/sampler.hpp"
#include "hicom/tokenizer.hpp"
#include "hicom/types.hpp"

#include <cstdint>
#include <vector>

namespace hicom {

// Dense token grid with a parallel 0/1 validity mask, row-major.
// Invalid cells hold Vocabulary::kPad.
struct TokenGrid {
  int rows = 0;
  int cols = 0;
  std::vector<TokenId> ids;
  std::vector<std::uint8_t> mask;

  TokenGrid() = default;
  TokenGrid(int r, int c)
      : rows(r), cols(c), ids(static_cast<std::size_t>(r) * c, Vocabulary::kPad),
        mask(static_cast<std::size_t>(r) * c, 0) {}

  TokenId& id(int r, int c) { return ids[static_cast<std::size_t>(r) * cols + c]; }
  TokenId id(int r, int c) const { return ids[static_cast<std::size_t>(r) * cols + c]; }
  std::uint8_t& valid(int r, int c) { return mask[static_cast<std::size_t>(r) * cols + c]; }
  bool is_valid(int r, int c) const { return mask[static_cast<std::size_t>(r) * cols + c] != 0; }
  int valid_count(int r) const;
};

// Slot-structured blocks for one compression level: row index = parent * fanout + slot.
// Unoccupied slots stay pad/zero with mask 0.
struct PackedLevel {
  int parents = 0;  // occurrences at level l
  int fanout = 0;   // n_l
  int t = 0;
  int k = 0;
  int d = 0;
  TokenGrid tokens;                        // [parents * fanout, t]
  std::vector<Mat> summaries;              // parents * fanout entries, each k x d
  std::vector<std::uint8_t> summary_mask;  // per slot
};

// Per-parent concatenated rows ready for the compressor. Token width shrinks
// under rearrange_and_trim; the summary prefix keeps slot granularity.
struct CompactBatch {
  int rows = 0;
  int width = 0;  // token columns (fanout * t before trim)
  int fanout = 0;
  int k = 0;
  int d = 0;
  TokenGrid tokens;                         // [rows, width]
  std::vector<Mat> summary;                 // rows entries, each (fanout * k) x d
  std::vector<std::uint8_t> summary_valid;  // rows * fanout, per slot
};

// Scatters level l-1 occurrences into their parents' slots at level l.
// child_summaries indexes occurrences of level l-1 (one k x d matrix each) and
// must be null exactly when l == 1 (leaves carry no summaries).
PackedLevel pack_level(const Hierarchy& h, int l, const TokenTable& toks,
                       const std::vector<Mat>* child_summaries, int k, int d);

// One row per parent: slot token sequences side by side, slot summaries
// stacked in slot order (dummy slots zero with validity 0).
CompactBatch concat_rows(const PackedLevel& p);

// Left-justifies each row's valid tokens (order preserved) and trims the
// width to the largest per-row valid count. All-dummy input yields width 0.
TokenGrid rearrange_and_trim(const TokenGrid& g);

// In-place variant for a batch: only the token grid changes.
void rearrange_and_trim(CompactBatch& b);

// Fraction of cells that are padding; the waste trimming is meant to cut.
double pad_waste(const TokenGrid& g);

}  // namespace hicom
