#pragma once

#include "hicom/types.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace hicom {

// Undirected text-rich graph. Node ids are contiguous 0..N-1. Adjacency
// lists are sorted, deduplicated and symmetric; self-loops are never stored.
// Immutable after ingest; concurrent reads are safe.
struct TextGraph {
  std::vector<std::vector<NodeId>> adjacency;
  std::vector<std::string> text;           // raw text per node, possibly empty
  std::vector<std::vector<int>> labels;    // sorted class ids per node, possibly empty
  int num_classes = 0;                     // 1 + max label id seen (0 when unlabeled)

  std::size_t num_nodes() const { return adjacency.size(); }
  std::size_t num_edges() const;           // undirected edge count
  int degree(NodeId v) const { return static_cast<int>(adjacency[v].size()); }
  bool has_edge(NodeId u, NodeId v) const;
  bool is_labeled(NodeId v) const { return !labels[v].empty(); }

  // Throws InternalError if symmetry/sortedness/self-loop invariants are broken.
  void check_invariants() const;
};

struct IngestStats {
  std::size_t nodes = 0;
  std::size_t edges = 0;
  std::size_t self_loops_dropped = 0;
  std::size_t duplicate_edges_dropped = 0;
};

// Loads a graph from the on-disk formats:
//   edges:  one edge per line, "src<TAB>dst", integer ids
//   texts:  JSON lines, {"id": <int>, "text": <string>}; defines the node set,
//           ids must cover 0..N-1
//   labels: JSON lines, {"id": <int>, "labels": [<int>, ...]}
// Edges are symmetrized, duplicates collapsed, self-loops dropped (counted in
// stats). Any record referencing an id outside 0..N-1 raises ReferenceError;
// malformed lines raise FormatError with the line number.
TextGraph ingest_graph(const std::filesystem::path& edge_path,
                       const std::filesystem::path& text_path,
                       const std::filesystem::path& label_path,
                       IngestStats* stats = nullptr);

struct KcoreResult {
  TextGraph graph;                 // re-indexed induced subgraph
  std::vector<NodeId> old_id;      // old_id[new] = id in the input graph
};

// Maximal induced subgraph with minimum degree >= k (may be empty).
KcoreResult k_core(const TextGraph& g, int k);

struct DegreeStats {
  double avg_degree = 0.0;
  double avg_tokens = 0.0;
};

// token_count maps a node's raw text to its token count.
DegreeStats degree_stats(const TextGraph& g,
                         const std::function<std::size_t(const std::string&)>& token_count);

struct DatasetSplit {
  NodeList train;
  NodeList val;
  NodeList test;
  std::uint64_t seed = 0;
};

// Picks up to per_class labeled nodes per class for training (a node already
// chosen for an earlier class counts toward later classes it carries), then
// draws val and test uniformly from the remaining labeled nodes. Pure
// function of (g, parameters, seed).
DatasetSplit split_dataset(const TextGraph& g, int per_class, int val_size, int test_cap,
                           std::uint64_t seed);

// Writers for the same formats ingest_graph reads (used by kcore/synth).
void write_graph_files(const TextGraph& g, const std::filesystem::path& edge_path,
                       const std::filesystem::path& text_path,
                       const std::filesystem::path& label_path);

// JSON lines {"new": <int>, "old": <int>}.
void write_id_map(const std::vector<NodeId>& old_id, const std::filesystem::path& path);

}  // namespace hicom
