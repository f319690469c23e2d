#pragma once

#include <algorithm>
#include <optional>
#include <span>
#include <vector>

#include "aag/algo/types.hpp"
#include "aag/core/error.hpp"

namespace aag::algo {

/// Pairwise (cascade) summation; error grows with log n instead of n.
inline double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kBlock = 8;
  if (values.size() <= kBlock) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const auto half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

struct FlowOptions {
  std::optional<std::uint32_t> focus;        // restrict output to this node
  std::optional<std::uint32_t> group_table;  // only nodes of this entity table
};

/// Per-node incoming and outgoing totals over the weighted edges of `g`.
/// Rows exist for nodes with at least one incident edge and are ordered by
/// key. net is computed as in_total - out_total from the stored totals.
inline FlowSummary aggregate_flows(const CsrGraph& g, const FlowOptions& opt = {}) {
  if (!g.weights) fail(ErrorCode::MissingWeightColumn, "aggregate_flows needs a weighted graph");
  std::vector<std::vector<double>> in(g.n), out(g.n);
  for (std::uint32_t u = 0; u < g.n; ++u) {
    if (opt.focus && u != *opt.focus) {
      // Only edges touching the focus matter; still scan for incoming ones.
      for (auto i = g.offsets[u]; i < g.offsets[u + 1]; ++i)
        if (g.targets[i] == *opt.focus) in[*opt.focus].push_back((*g.weights)[i]);
      continue;
    }
    for (auto i = g.offsets[u]; i < g.offsets[u + 1]; ++i) {
      const double w = (*g.weights)[i];
      out[u].push_back(w);
      in[g.targets[i]].push_back(w);
    }
  }

  FlowSummary summary;
  for (std::uint32_t v = 0; v < g.n; ++v) {
    if (opt.focus && v != *opt.focus) continue;
    if (in[v].empty() && out[v].empty()) continue;
    if (opt.group_table && g.universe && g.universe->refs[v].table != *opt.group_table) continue;
    FlowRow row;
    row.group = key_of(g.universe, v);
    row.in_total = pairwise_sum(in[v]);
    row.out_total = pairwise_sum(out[v]);
    row.in_count = in[v].size();
    row.out_count = out[v].size();
    row.net = row.in_total - row.out_total;
    summary.rows.push_back(std::move(row));
  }
  std::stable_sort(summary.rows.begin(), summary.rows.end(),
                   [](const FlowRow& a, const FlowRow& b) { return a.group < b.group; });
  return summary;
}

}  // namespace aag::algo
