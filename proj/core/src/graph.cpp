#include "hicom/graph.hpp"

#include "hicom/error.hpp"
#include "hicom/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <deque>
#include <fstream>
#include <numeric>
#include <set>
#include <unordered_map>

namespace hicom {

namespace {

using nlohmann::json;

std::ifstream open_or_throw(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw FormatError("cannot open " + p.string());
  return in;
}

// Parses a base-10 integer occupying the whole string view.
bool parse_int(std::string_view s, long& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

std::size_t TextGraph::num_edges() const {
  std::size_t total = 0;
  for (const auto& nbrs : adjacency) total += nbrs.size();
  return total / 2;
}

bool TextGraph::has_edge(NodeId u, NodeId v) const {
  const auto& nbrs = adjacency[u];
  return std::binary_search(nbrs.begin(), nbrs.end(), v);
}

void TextGraph::check_invariants() const {
  if (text.size() != adjacency.size() || labels.size() != adjacency.size())
    throw InternalError("graph arrays have inconsistent sizes");
  for (NodeId u = 0; u < static_cast<NodeId>(adjacency.size()); ++u) {
    const auto& nbrs = adjacency[u];
    if (!std::is_sorted(nbrs.begin(), nbrs.end()))
      throw InternalError("adjacency not sorted at node " + std::to_string(u));
    if (std::adjacent_find(nbrs.begin(), nbrs.end()) != nbrs.end())
      throw InternalError("duplicate edge at node " + std::to_string(u));
    for (NodeId v : nbrs) {
      if (v == u) throw InternalError("self-loop at node " + std::to_string(u));
      if (v < 0 || v >= static_cast<NodeId>(adjacency.size()))
        throw InternalError("edge endpoint out of range at node " + std::to_string(u));
      if (!has_edge(v, u))
        throw InternalError("asymmetric edge " + std::to_string(u) + "-" + std::to_string(v));
    }
  }
}

TextGraph ingest_graph(const std::filesystem::path& edge_path,
                       const std::filesystem::path& text_path,
                       const std::filesystem::path& label_path, IngestStats* stats) {
  TextGraph g;
  IngestStats local;

  // The text file defines the node set: ids must cover 0..N-1 exactly.
  {
    std::ifstream in = open_or_throw(text_path);
    std::string line;
    long lineno = 0;
    std::vector<std::pair<long, std::string>> rows;
    long max_id = -1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object() || !j.contains("id") || !j.contains("text") ||
          !j["id"].is_number_integer() || !j["text"].is_string())
        throw FormatError("bad text record in " + text_path.string(), lineno);
      long id = j["id"].get<long>();
      if (id < 0) throw FormatError("negative node id in " + text_path.string(), lineno);
      rows.emplace_back(id, j["text"].get<std::string>());
      max_id = std::max(max_id, id);
    }
    const std::size_t n = rows.size();
    if (max_id + 1 != static_cast<long>(n))
      throw FormatError("text ids in " + text_path.string() + " do not cover 0.." +
                        std::to_string(n ? n - 1 : 0));
    g.text.assign(n, {});
    std::vector<bool> seen(n, false);
    for (auto& [id, txt] : rows) {
      if (seen[id]) throw FormatError("duplicate text id " + std::to_string(id));
      seen[id] = true;
      g.text[id] = std::move(txt);
    }
    g.adjacency.assign(n, {});
    g.labels.assign(n, {});
    local.nodes = n;
  }
  const long n = static_cast<long>(g.num_nodes());

  {
    std::ifstream in = open_or_throw(edge_path);
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      auto tab = line.find('\t');
      long src, dst;
      if (tab == std::string::npos || !parse_int(std::string_view(line).substr(0, tab), src) ||
          !parse_int(std::string_view(line).substr(tab + 1), dst))
        throw FormatError("bad edge line in " + edge_path.string(), lineno);
      if (src < 0 || src >= n || dst < 0 || dst >= n)
        throw ReferenceError("edge " + std::to_string(src) + "-" + std::to_string(dst) +
                             " references unknown node id (line " + std::to_string(lineno) + ")");
      if (src == dst) {
        ++local.self_loops_dropped;
        continue;
      }
      g.adjacency[src].push_back(static_cast<NodeId>(dst));
      g.adjacency[dst].push_back(static_cast<NodeId>(src));
    }
    for (auto& nbrs : g.adjacency) {
      std::sort(nbrs.begin(), nbrs.end());
      auto last = std::unique(nbrs.begin(), nbrs.end());
      local.duplicate_edges_dropped += static_cast<std::size_t>(nbrs.end() - last);
      nbrs.erase(last, nbrs.end());
    }
    // Both orientations of a duplicate were counted; an undirected duplicate is one event.
    local.duplicate_edges_dropped /= 2;
    local.edges = g.num_edges();
  }

  {
    std::ifstream in = open_or_throw(label_path);
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object() || !j.contains("id") || !j.contains("labels") ||
          !j["id"].is_number_integer() || !j["labels"].is_array())
        throw FormatError("bad label record in " + label_path.string(), lineno);
      long id = j["id"].get<long>();
      if (id < 0 || id >= n)
        throw ReferenceError("label record references unknown node id " + std::to_string(id) +
                             " (line " + std::to_string(lineno) + ")");
      std::set<int> cls;
      for (const auto& c : j["labels"]) {
        if (!c.is_number_integer() || c.get<long>() < 0)
          throw FormatError("bad class id in " + label_path.string(), lineno);
        cls.insert(c.get<int>());
      }
      g.labels[id].assign(cls.begin(), cls.end());
      if (!g.labels[id].empty()) g.num_classes = std::max(g.num_classes, g.labels[id].back() + 1);
    }
  }

  g.check_invariants();
  if (stats) *stats = local;
  return g;
}

KcoreResult k_core(const TextGraph& g, int k) {
  if (k < 1) throw InvalidArgumentError("k_core requires k >= 1");
  const std::size_t n = g.num_nodes();
  std::vector<int> deg(n);
  for (std::size_t v = 0; v < n; ++v) deg[v] = g.degree(static_cast<NodeId>(v));

  // Queue-based peeling: delete nodes of degree < k until fixpoint.
  std::vector<bool> removed(n, false);
  std::deque<NodeId> work;
  for (std::size_t v = 0; v < n; ++v)
    if (deg[v] < k) work.push_back(static_cast<NodeId>(v));
  while (!work.empty()) {
    NodeId v = work.front();
    work.pop_front();
    if (removed[v]) continue;
    removed[v] = true;
    for (NodeId u : g.adjacency[v]) {
      if (removed[u]) continue;
      if (--deg[u] < k) work.push_back(u);
    }
  }

  KcoreResult res;
  std::vector<NodeId> new_id(n, -1);
  for (std::size_t v = 0; v < n; ++v) {
    if (removed[v]) continue;
    new_id[v] = static_cast<NodeId>(res.old_id.size());
    res.old_id.push_back(static_cast<NodeId>(v));
  }
  TextGraph& out = res.graph;
  out.adjacency.resize(res.old_id.size());
  out.text.resize(res.old_id.size());
  out.labels.resize(res.old_id.size());
  for (std::size_t nv = 0; nv < res.old_id.size(); ++nv) {
    NodeId ov = res.old_id[nv];
    out.text[nv] = g.text[ov];
    out.labels[nv] = g.labels[ov];
    if (!out.labels[nv].empty())
      out.num_classes = std::max(out.num_classes, out.labels[nv].back() + 1);
    for (NodeId ou : g.adjacency[ov])
      if (new_id[ou] >= 0) out.adjacency[nv].push_back(new_id[ou]);
    std::sort(out.adjacency[nv].begin(), out.adjacency[nv].end());
  }
  return res;
}

DegreeStats degree_stats(const TextGraph& g,
                         const std::function<std::size_t(const std::string&)>& token_count) {
  if (g.num_nodes() == 0) throw InvalidArgumentError("degree_stats undefined on an empty graph");
  DegreeStats s;
  s.avg_degree = 2.0 * static_cast<double>(g.num_edges()) / static_cast<double>(g.num_nodes());
  std::size_t total = 0;
  for (const auto& txt : g.text) total += token_count(txt);
  s.avg_tokens = static_cast<double>(total) / static_cast<double>(g.num_nodes());
  return s;
}

DatasetSplit split_dataset(const TextGraph& g, int per_class, int val_size, int test_cap,
                           std::uint64_t seed) {
  if (per_class < 1) throw InvalidArgumentError("split_dataset requires per_class >= 1");
  if (g.num_classes == 0) throw InvalidArgumentError("split_dataset: graph has no labeled nodes");

  std::vector<NodeList> by_class(g.num_classes);
  NodeList labeled;
  for (NodeId v = 0; v < static_cast<NodeId>(g.num_nodes()); ++v) {
    if (!g.is_labeled(v)) continue;
    labeled.push_back(v);
    for (int c : g.labels[v]) by_class[c].push_back(v);
  }

  DatasetSplit split;
  split.seed = seed;
  std::vector<bool> in_train(g.num_nodes(), false);
  for (int c = 0; c < g.num_classes; ++c) {
    Rng rng(mix_seed(seed, 0x74726e, static_cast<std::uint64_t>(c)));
    NodeList members = by_class[c];
    rng.shuffle(members);
    // Nodes already drawn for an earlier class count toward this class's quota.
    int have = 0;
    for (NodeId v : members)
      if (in_train[v]) ++have;
    for (NodeId v : members) {
      if (have >= per_class) break;
      if (in_train[v]) continue;
      in_train[v] = true;
      split.train.push_back(v);
      ++have;
    }
  }
  std::sort(split.train.begin(), split.train.end());

  NodeList rest;
  for (NodeId v : labeled)
    if (!in_train[v]) rest.push_back(v);
  Rng rng(mix_seed(seed, 0x76616c));
  rng.shuffle(rest);
  const std::size_t nv = std::min<std::size_t>(rest.size(), std::max(val_size, 0));
  split.val.assign(rest.begin(), rest.begin() + nv);
  const std::size_t nt = std::min<std::size_t>(rest.size() - nv, std::max(test_cap, 0));
  split.test.assign(rest.begin() + nv, rest.begin() + nv + nt);
  return split;
}

void write_graph_files(const TextGraph& g, const std::filesystem::path& edge_path,
                       const std::filesystem::path& text_path,
                       const std::filesystem::path& label_path) {
  {
    std::ofstream out(edge_path);
    if (!out) throw FormatError("cannot write " + edge_path.string());
    for (NodeId u = 0; u < static_cast<NodeId>(g.num_nodes()); ++u)
      for (NodeId v : g.adjacency[u])
        if (u < v) out << u << '\t' << v << '\n';
  }
  {
    std::ofstream out(text_path);
    if (!out) throw FormatError("cannot write " + text_path.string());
    for (NodeId v = 0; v < static_cast<NodeId>(g.num_nodes()); ++v) {
      json j{{"id", v}, {"text", g.text[v]}};
      out << j.dump() << '\n';
    }
  }
  {
    std::ofstream out(label_path);
    if (!out) throw FormatError("cannot write " + label_path.string());
    for (NodeId v = 0; v < static_cast<NodeId>(g.num_nodes()); ++v) {
      if (g.labels[v].empty()) continue;
      json j{{"id", v}, {"labels", g.labels[v]}};
      out << j.dump() << '\n';
    }
  }
}

void write_id_map(const std::vector<NodeId>& old_id, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  for (std::size_t nv = 0; nv < old_id.size(); ++nv) {
    json j{{"new", static_cast<NodeId>(nv)}, {"old", old_id[nv]}};
    out << j.dump() << '\n';
  }
}

}  // namespace hicom
