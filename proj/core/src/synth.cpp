#include "hicom/synth.hpp"

#include "hicom/error.hpp"
#include "hicom/rng.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <vector>

namespace hicom {
namespace {

const char* kFiller[] = {
    "river",  "stone",  "cloud",  "meadow", "lantern", "copper", "willow", "harbor",
    "ember",  "quartz", "fern",   "drift",  "hollow",  "cinder", "maple",  "ridge",
    "breeze", "garnet", "thicket", "shoal", "prairie", "basalt", "heron",  "tundra",
    "mesa",   "juniper", "cobble", "strand", "gully",   "bramble", "dune",  "alder",
    "crag",   "inlet",  "moss",   "slate",  "verge",   "wheat",  "yarrow", "zephyr"};
constexpr int kFillerCount = static_cast<int>(sizeof(kFiller) / sizeof(kFiller[0]));

std::string class_token(int c) { return "cat" + std::to_string(c); }

std::string make_text(Rng& rng, int filler_words, const std::vector<std::string>& signals) {
  std::vector<std::string> words;
  for (int i = 0; i < filler_words; ++i) words.push_back(kFiller[rng.uniform_int(0, kFillerCount - 1)]);
  for (const std::string& s : signals) {
    const int at = rng.uniform_int(0, static_cast<int>(words.size()));
    words.insert(words.begin() + at, s);
  }
  std::ostringstream os;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) os << ' ';
    os << words[i];
  }
  return os.str();
}

}  // namespace

void SynthConfig::validate() const {
  if (classes < 2) throw ConfigError("synth: need at least 2 classes");
  if (targets_per_class < 1 || hubs_per_class < 1 || details_per_class < 1)
    throw ConfigError("synth: per-class node counts must be positive");
  if (hub_degree < 1 || hub_degree > hubs_per_class)
    throw ConfigError("synth: hub_degree out of range");
  if (detail_degree < 1 || detail_degree > details_per_class)
    throw ConfigError("synth: detail_degree out of range");
  if (noise_hubs < 0) throw ConfigError("synth: noise_hubs must be nonnegative");
  if (detail_copies < 1) throw ConfigError("synth: detail_copies must be positive");
  for (double pr : {noise_edge_prob, hub_signal_prob, detail_signal_prob, extra_signal_prob,
                    confuser_prob})
    if (pr < 0.0 || pr > 1.0) throw ConfigError("synth: probabilities must be in [0,1]");
  if (filler_words < 1) throw ConfigError("synth: filler_words must be positive");
}

TextGraph synth_graph(const SynthConfig& cfg) {
  cfg.validate();
  const int per_class = cfg.targets_per_class + cfg.hubs_per_class + cfg.details_per_class;
  const int n = cfg.classes * per_class;

  // Layout per class: targets, then hubs, then details.
  auto target_id = [&](int c, int i) { return c * per_class + i; };
  auto hub_id = [&](int c, int i) { return c * per_class + cfg.targets_per_class + i; };
  auto detail_id = [&](int c, int i) {
    return c * per_class + cfg.targets_per_class + cfg.hubs_per_class + i;
  };

  TextGraph g;
  g.adjacency.assign(n, {});
  g.text.assign(n, "");
  g.labels.assign(n, {});
  g.num_classes = cfg.classes;

  Rng text_rng(mix_seed(cfg.seed, 0x74657874));
  for (int c = 0; c < cfg.classes; ++c) {
    for (int i = 0; i < cfg.targets_per_class; ++i)
      g.text[target_id(c, i)] = make_text(text_rng, cfg.filler_words, {});
    for (int i = 0; i < cfg.hubs_per_class; ++i) {
      std::vector<std::string> sig;
      if (text_rng.uniform_real() < cfg.hub_signal_prob) sig.push_back(class_token(c));
      if (text_rng.uniform_real() < cfg.confuser_prob) {
        int other = text_rng.uniform_int(0, cfg.classes - 2);
        if (other >= c) ++other;
        sig.push_back(class_token(other));
      }
      g.text[hub_id(c, i)] = make_text(text_rng, cfg.filler_words, sig);
    }
    for (int i = 0; i < cfg.details_per_class; ++i) {
      std::vector<std::string> sig;
      if (text_rng.uniform_real() < cfg.detail_signal_prob)
        sig.insert(sig.end(), cfg.detail_copies, class_token(c));
      if (text_rng.uniform_real() < cfg.extra_signal_prob) sig.push_back(class_token(c));
      if (text_rng.uniform_real() < cfg.confuser_prob) {
        int other = text_rng.uniform_int(0, cfg.classes - 2);
        if (other >= c) ++other;
        sig.push_back(class_token(other));
      }
      g.text[detail_id(c, i)] = make_text(text_rng, cfg.filler_words, sig);
    }
  }

  std::set<std::pair<NodeId, NodeId>> edges;
  auto add_edge = [&](NodeId a, NodeId b) {
    if (a == b) return;
    edges.insert({std::min(a, b), std::max(a, b)});
  };
  Rng edge_rng(mix_seed(cfg.seed, 0x65646765));
  for (int c = 0; c < cfg.classes; ++c) {
    NodeList hub_pool(cfg.hubs_per_class);
    for (int i = 0; i < cfg.hubs_per_class; ++i) hub_pool[i] = hub_id(c, i);
    for (int i = 0; i < cfg.targets_per_class; ++i) {
      for (NodeId h : edge_rng.sample_without_replacement(hub_pool, cfg.hub_degree))
        add_edge(target_id(c, i), h);
      // Other-class hubs pollute the flat 2-hop pool: baselines that sample a
      // handful of nodes from it pay for the dilution, the structured
      // hierarchy mostly does not.
      int noise = cfg.noise_hubs + (edge_rng.uniform_real() < cfg.noise_edge_prob ? 1 : 0);
      for (int nh = 0; nh < noise; ++nh) {
        int other = edge_rng.uniform_int(0, cfg.classes - 2);
        if (other >= c) ++other;
        add_edge(target_id(c, i), hub_id(other, edge_rng.uniform_int(0, cfg.hubs_per_class - 1)));
      }
    }
    NodeList detail_pool(cfg.details_per_class);
    for (int i = 0; i < cfg.details_per_class; ++i) detail_pool[i] = detail_id(c, i);
    for (int i = 0; i < cfg.hubs_per_class; ++i)
      for (NodeId dt : edge_rng.sample_without_replacement(detail_pool, cfg.detail_degree))
        add_edge(hub_id(c, i), dt);
  }
  for (const auto& [a, b] : edges) {
    g.adjacency[a].push_back(b);
    g.adjacency[b].push_back(a);
  }
  for (NodeList& adj : g.adjacency) std::sort(adj.begin(), adj.end());

  // Labels from the realized texts: count class tokens over the exact 1&2-hop
  // neighborhood. The target's own text never participates.
  std::vector<std::vector<int>> token_counts(n, std::vector<int>(cfg.classes, 0));
  for (int v = 0; v < n; ++v) {
    std::istringstream is(g.text[v]);
    std::string w;
    while (is >> w)
      for (int c = 0; c < cfg.classes; ++c)
        if (w == class_token(c)) ++token_counts[v][c];
  }
  for (int c = 0; c < cfg.classes; ++c) {
    for (int i = 0; i < cfg.targets_per_class; ++i) {
      const NodeId tgt = target_id(c, i);
      std::set<NodeId> hood;
      for (NodeId u : g.adjacency[tgt]) {
        hood.insert(u);
        for (NodeId v : g.adjacency[u])
          if (v != tgt) hood.insert(v);
      }
      std::vector<long> counts(cfg.classes, 0);
      for (NodeId u : hood)
        for (int cc = 0; cc < cfg.classes; ++cc) counts[cc] += token_counts[u][cc];
      int label = 0;
      for (int cc = 1; cc < cfg.classes; ++cc)
        if (counts[cc] > counts[label]) label = cc;
      g.labels[tgt] = {label};
    }
  }

  g.check_invariants();
  return g;
}

}  // namespace hicom
