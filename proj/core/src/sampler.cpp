#include "hicom/sampler.hpp"

#include "hicom/error.hpp"
#include "hicom/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>

namespace hicom {

Hierarchy build_hierarchy(const TextGraph& g, const NodeList& targets,
                          const std::vector<int>& fanouts, std::uint64_t seed) {
  if (fanouts.empty()) throw InvalidArgumentError("build_hierarchy requires at least one level");
  for (int f : fanouts)
    if (f < 1) throw InvalidArgumentError("fanout entries must be >= 1");
  if (targets.empty()) throw InvalidArgumentError("build_hierarchy requires targets");
  for (NodeId v : targets)
    if (v < 0 || v >= static_cast<NodeId>(g.num_nodes()))
      throw ReferenceError("target node " + std::to_string(v) + " not in graph");

  const int L = static_cast<int>(fanouts.size());
  Hierarchy h;
  h.fanouts = fanouts;
  h.levels.resize(L + 1);

  Hierarchy::Level& top = h.levels[L];
  top.node = targets;
  top.root.resize(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) top.root[i] = static_cast<int>(i);

  for (int l = L; l >= 1; --l) {
    const int fanout = fanouts[l - 1];
    const Hierarchy::Level& cur = h.levels[l];
    Hierarchy::Level& below = h.levels[l - 1];
    // Occurrences at a level are grouped by target (children are appended in
    // parent order and level L is the target list), so a per-target local
    // index is a running counter that resets when the root changes.
    int local_idx = 0;
    int prev_root = -1;
    for (std::size_t i = 0; i < cur.size(); ++i) {
      const NodeId u = cur.node[i];
      const int root = cur.root[i];
      const NodeId root_node = targets[root];
      if (root != prev_root) {
        local_idx = 0;
        prev_root = root;
      }
      // Seeded by the target's node id, not its batch position: a
      // single-target rebuild draws the same children.
      Rng rng(mix_seed(seed, static_cast<std::uint64_t>(root_node),
                       static_cast<std::uint64_t>(l), static_cast<std::uint64_t>(local_idx)));
      ++local_idx;

      NodeList pool;
      pool.reserve(g.adjacency[u].size());
      for (NodeId nb : g.adjacency[u])
        if (nb != root_node) pool.push_back(nb);
      const std::size_t m = std::min<std::size_t>(pool.size(), static_cast<std::size_t>(fanout));
      NodeList children = rng.sample_without_replacement(std::move(pool), m);
      for (std::size_t s = 0; s < children.size(); ++s) {
        below.node.push_back(children[s]);
        below.parent.push_back(static_cast<int>(i));
        below.slot.push_back(static_cast<int>(s));
        below.root.push_back(root);
      }
    }
  }
  return h;
}

nlohmann::json hierarchy_to_json(const Hierarchy& h) {
  nlohmann::json j;
  j["fanouts"] = h.fanouts;
  j["levels"] = nlohmann::json::array();
  for (int l = 0; l <= h.depth(); ++l) {
    const auto& lv = h.levels[l];
    nlohmann::json lj;
    lj["level"] = l;
    lj["node"] = lv.node;
    lj["root"] = lv.root;
    if (l < h.depth()) {
      lj["parent"] = lv.parent;
      lj["slot"] = lv.slot;
    }
    j["levels"].push_back(lj);
  }
  return j;
}

}  // namespace hicom
