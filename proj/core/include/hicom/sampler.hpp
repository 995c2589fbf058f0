#pragma once

#include "hicom/graph.hpp"
#include "hicom/types.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <vector>

namespace hicom {

// L-level sampling hierarchy for a batch of target nodes. Level L holds the
// targets; level l-1 holds up to fanouts[l-1] sampled neighbors per level-l
// occurrence. A node can occur several times (under different parents); each
// occurrence is a distinct entry with its own parent/slot link.
struct Hierarchy {
  struct Level {
    NodeList node;            // node id per occurrence
    std::vector<int> parent;  // index into the level above (empty at level L)
    std::vector<int> slot;    // slot within the parent, < fanout of that step
    std::vector<int> root;    // index into levels[L].node of the owning target

    std::size_t size() const { return node.size(); }
  };

  std::vector<int> fanouts;   // [n_1 .. n_L]; fanouts[l-1] governs sampling of level l-1
  std::vector<Level> levels;  // levels[0..L]

  int depth() const { return static_cast<int>(fanouts.size()); }
  const Level& targets() const { return levels.back(); }
};

// Builds the hierarchy by uniform sampling without replacement, at most
// fanouts[l-1] children per level-l occurrence. The owning target is never
// sampled into its own hierarchy. Deterministic in (g, targets, fanouts,
// seed), and each target's subtree depends only on its own node id, so a
// batched build equals the union of single-target builds under one seed.
Hierarchy build_hierarchy(const TextGraph& g, const NodeList& targets,
                          const std::vector<int>& fanouts, std::uint64_t seed);

// Debug dump: levels and parent/slot arrays.
nlohmann::json hierarchy_to_json(const Hierarchy& h);

}  // namespace hicom
