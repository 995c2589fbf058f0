// Synthetic neighborhood-label benchmark: targets whose label is a
// deterministic function of class tokens that appear only on 1- and 2-hop
// neighbors, never on the target's own text.
#pragma once

#include "hicom/graph.hpp"

#include <cstdint>
#include <string>

namespace hicom {

// Per class: `targets_per_class` labeled nodes with filler-only text, a pool
// of hub nodes (1-hop from targets, weak signal) and detail nodes (2-hop,
// dense signal). Hubs alone give an unreliable vote: the decisive evidence
// sits on the details behind them, so readers confined to a few raw
// neighbors stay weak while anything that aggregates the two-hop pool can
// count its way to the label.
struct SynthConfig {
  int classes = 8;
  int targets_per_class = 125;
  int hubs_per_class = 75;
  int details_per_class = 50;
  int hub_degree = 3;     // same-class hubs wired to each target
  int detail_degree = 7;  // same-class details wired to each hub
  int noise_hubs = 1;     // other-class hubs wired to each target
  double noise_edge_prob = 0.25;    // chance of one extra noise hub on top
  double hub_signal_prob = 0.7;     // hub text carries its class token
  double detail_signal_prob = 0.5;  // detail text carries `detail_copies` class tokens
  int detail_copies = 4;
  double extra_signal_prob = 0.5;   // one more class token on details
  double confuser_prob = 0.35;      // random other-class token on any context node
  int filler_words = 4;
  std::uint64_t seed = 3;
  void validate() const;
};

// Labels come from the generated texts themselves: argmax over class-token
// counts in the full 1&2-hop neighborhood, ties to the lowest class id.
TextGraph synth_graph(const SynthConfig& cfg);

}  // namespace hicom
