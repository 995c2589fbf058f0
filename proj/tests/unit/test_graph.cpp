#include "doctest.h"

#include "hicom/error.hpp"
#include "hicom/graph.hpp"
#include "hicom/rng.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace hicom;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const fs::path p = fs::temp_directory_path() / "hicom_test_graph";
  fs::create_directories(p);
  return p;
}

void write_file(const fs::path& p, const std::string& body) {
  std::ofstream out(p, std::ios::binary);
  out << body;
}

// Writes a three-node graph with one duplicate edge and one self-loop.
struct SmallFiles {
  fs::path edges, texts, labels;
  SmallFiles() {
    const fs::path d = scratch_dir();
    edges = d / "edges.tsv";
    texts = d / "texts.jsonl";
    labels = d / "labels.jsonl";
    write_file(edges, "0\t1\n1\t0\n2\t2\n1\t2\n");
    write_file(texts,
               "{\"id\": 0, \"text\": \"alpha beta\"}\n"
               "{\"id\": 1, \"text\": \"\"}\n"
               "{\"id\": 2, \"text\": \"gamma\"}\n");
    write_file(labels, "{\"id\": 0, \"labels\": [1]}\n{\"id\": 2, \"labels\": [0, 2]}\n");
  }
};

TextGraph random_ugraph(std::uint64_t seed, int max_nodes) {
  Rng rng(seed);
  const int n = 2 + static_cast<int>(rng.uniform_int(0, max_nodes - 2));
  TextGraph g;
  g.adjacency.assign(n, {});
  g.text.assign(n, "x");
  g.labels.assign(n, {});
  std::set<std::pair<NodeId, NodeId>> edges;
  for (int e = 0; e < 3 * n; ++e) {
    const NodeId a = static_cast<NodeId>(rng.uniform_int(0, n - 1));
    const NodeId b = static_cast<NodeId>(rng.uniform_int(0, n - 1));
    if (a != b) edges.insert({std::min(a, b), std::max(a, b)});
  }
  for (const auto& [a, b] : edges) {
    g.adjacency[a].push_back(b);
    g.adjacency[b].push_back(a);
  }
  for (auto& adj : g.adjacency) std::sort(adj.begin(), adj.end());
  return g;
}

}  // namespace

TEST_SUITE("graph") {
  TEST_CASE("ingest symmetrizes, dedupes, drops self-loops") {
    SmallFiles f;
    IngestStats stats;
    TextGraph g = ingest_graph(f.edges, f.texts, f.labels, &stats);
    CHECK(g.num_nodes() == 3);
    CHECK(g.num_edges() == 2);
    CHECK(stats.self_loops_dropped == 1);
    CHECK(stats.duplicate_edges_dropped == 1);
    CHECK(g.has_edge(0, 1));
    CHECK(g.has_edge(1, 0));
    CHECK(g.has_edge(1, 2));
    CHECK_FALSE(g.has_edge(0, 2));
    CHECK(g.text[0] == "alpha beta");
    CHECK(g.text[1].empty());
    CHECK(g.labels[0] == std::vector<int>{1});
    CHECK(g.labels[1].empty());
    CHECK(g.labels[2] == std::vector<int>{0, 2});
    CHECK(g.num_classes == 3);
    CHECK_NOTHROW(g.check_invariants());
  }

  TEST_CASE("ingest rejects out-of-range ids and malformed lines") {
    SmallFiles f;
    const fs::path d = scratch_dir();
    const fs::path bad_edges = d / "bad_edges.tsv";
    write_file(bad_edges, "0\t9\n");
    CHECK_THROWS_AS(ingest_graph(bad_edges, f.texts, f.labels), ReferenceError);
    write_file(bad_edges, "0 1\n");
    CHECK_THROWS_AS(ingest_graph(bad_edges, f.texts, f.labels), FormatError);
    const fs::path bad_texts = d / "bad_texts.jsonl";
    write_file(bad_texts, "{\"id\": 0}\n");
    CHECK_THROWS_AS(ingest_graph(f.edges, bad_texts, f.labels), FormatError);
  }

  TEST_CASE("write then re-ingest round trips the graph") {
    TextGraph g = random_ugraph(11, 40);
    g.labels[0] = {0, 1};
    g.labels[1] = {1};
    g.num_classes = 2;
    g.text[0] = "line with \"quotes\" and tabs\t";
    const fs::path d = scratch_dir();
    write_graph_files(g, d / "rt_e.tsv", d / "rt_t.jsonl", d / "rt_l.jsonl");
    TextGraph h = ingest_graph(d / "rt_e.tsv", d / "rt_t.jsonl", d / "rt_l.jsonl");
    REQUIRE(h.num_nodes() == g.num_nodes());
    CHECK(h.adjacency == g.adjacency);
    CHECK(h.text == g.text);
    CHECK(h.labels == g.labels);
    CHECK(h.num_classes == g.num_classes);
  }

  TEST_CASE("k-core of a star is empty for k >= 2") {
    TextGraph g;
    g.adjacency.assign(9, {});
    g.text.assign(9, "x");
    g.labels.assign(9, {});
    for (NodeId leaf = 1; leaf < 9; ++leaf) {
      g.adjacency[0].push_back(leaf);
      g.adjacency[leaf].push_back(0);
    }
    std::sort(g.adjacency[0].begin(), g.adjacency[0].end());
    KcoreResult r1 = k_core(g, 1);
    CHECK(r1.graph.num_nodes() == 9);
    KcoreResult r2 = k_core(g, 2);
    CHECK(r2.graph.num_nodes() == 0);
    CHECK(r2.old_id.empty());
  }

  TEST_CASE("k-core keeps labels, texts and degrees consistent") {
    TextGraph g = random_ugraph(77, 60);
    for (std::size_t v = 0; v < g.num_nodes(); ++v) {
      g.text[v] = "node " + std::to_string(v);
      if (v % 3 == 0) g.labels[v] = {static_cast<int>(v % 2)};
    }
    g.num_classes = 2;
    KcoreResult r = k_core(g, 3);
    r.graph.check_invariants();
    for (std::size_t nv = 0; nv < r.graph.num_nodes(); ++nv) {
      CHECK(r.graph.degree(static_cast<NodeId>(nv)) >= 3);
      CHECK(r.graph.text[nv] == g.text[r.old_id[nv]]);
      CHECK(r.graph.labels[nv] == g.labels[r.old_id[nv]]);
    }
    // Edges in the core are exactly the induced edges of the kept set.
    std::set<NodeId> kept(r.old_id.begin(), r.old_id.end());
    for (std::size_t nv = 0; nv < r.graph.num_nodes(); ++nv)
      for (NodeId nu : r.graph.adjacency[nv])
        CHECK(g.has_edge(r.old_id[nv], r.old_id[nu]));
    for (NodeId u : kept)
      for (NodeId w : g.adjacency[u])
        if (kept.count(w))
          CHECK(r.graph.has_edge(
              static_cast<NodeId>(std::distance(r.old_id.begin(),
                                                std::find(r.old_id.begin(), r.old_id.end(), u))),
              static_cast<NodeId>(std::distance(r.old_id.begin(),
                                                std::find(r.old_id.begin(), r.old_id.end(), w)))));
  }

  TEST_CASE("split_dataset honors quotas and determinism") {
    const int n = 60;
    TextGraph g;
    g.adjacency.assign(n, {});
    g.text.assign(n, "x");
    g.labels.assign(n, {});
    for (NodeId v = 0; v < n; ++v) {
      g.adjacency[v] = {static_cast<NodeId>((v + n - 1) % n), static_cast<NodeId>((v + 1) % n)};
      std::sort(g.adjacency[v].begin(), g.adjacency[v].end());
      g.labels[v] = {v % 4};
    }
    g.num_classes = 4;
    DatasetSplit s = split_dataset(g, 5, 10, 20, 99);
    CHECK(s.train.size() <= 20);
    CHECK(s.val.size() <= 10);
    CHECK(s.test.size() <= 20);
    // No overlap between splits.
    std::set<NodeId> seen;
    for (const NodeList* part : {&s.train, &s.val, &s.test})
      for (NodeId v : *part) CHECK(seen.insert(v).second);
    // Each class reaches its training quota when enough nodes exist.
    std::vector<int> per_class(4, 0);
    for (NodeId v : s.train) ++per_class[g.labels[v][0]];
    for (int c = 0; c < 4; ++c) CHECK(per_class[c] == 5);
    DatasetSplit again = split_dataset(g, 5, 10, 20, 99);
    CHECK(again.train == s.train);
    CHECK(again.val == s.val);
    CHECK(again.test == s.test);
    DatasetSplit other = split_dataset(g, 5, 10, 20, 100);
    CHECK((other.val != s.val || other.test != s.test));
  }

  TEST_CASE("degree stats average over nodes") {
    TextGraph g;
    g.adjacency = {{1}, {0, 2}, {1}};
    g.text = {"a b", "c", ""};
    g.labels.assign(3, {});
    DegreeStats ds = degree_stats(g, [](const std::string& s) {
      if (s.empty()) return std::size_t{0};
      return static_cast<std::size_t>(std::count(s.begin(), s.end(), ' ') + 1);
    });
    CHECK(ds.avg_degree == doctest::Approx(4.0 / 3.0));
    CHECK(ds.avg_tokens == doctest::Approx(1.0));
  }
}
