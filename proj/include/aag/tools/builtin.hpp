#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "aag/algo/components.hpp"
#include "aag/algo/cycles.hpp"
#include "aag/algo/flows.hpp"
#include "aag/algo/pagerank.hpp"
#include "aag/algo/traversal.hpp"
#include "aag/tools/registry.hpp"

namespace aag::tools {

namespace detail {

inline const graph::CsrGraph& graph_input(const Inputs& in, const std::string& slot = "graph") {
  return *std::get<GraphValue>(in.at(slot)).csr;
}

/// Node id named by an optional Scalar slot; nullopt when unbound or null.
inline std::optional<std::uint32_t> scalar_node(const Inputs& in, const std::string& slot,
                                                const graph::CsrGraph& g) {
  auto it = in.find(slot);
  if (it == in.end()) return std::nullopt;
  const auto& s = std::get<Scalar>(it->second);
  if (s.value.is_null()) return std::nullopt;
  return resolve_keys(g, {scalar_text(s)}).front();
}

/// Seeds from a NodeSet slot "seeds" and/or a Scalar slot "seed".
inline std::vector<std::uint32_t> seed_ids(const Inputs& in, const graph::CsrGraph& g) {
  std::vector<std::uint32_t> seeds;
  if (auto it = in.find("seeds"); it != in.end()) seeds = resolve(g, std::get<algo::NodeSet>(it->second));
  if (auto s = scalar_node(in, "seed", g)) seeds.push_back(*s);
  return seeds;
}

inline algo::PageRankOptions pagerank_options(const json& p) {
  return {p.at("damping").get<double>(), p.at("tol").get<double>(), p.at("max_iter").get<int>()};
}

inline ParamSpec integer(std::string name, double lo, double hi, std::optional<std::int64_t> def, std::string doc) {
  ParamSpec p{std::move(name), ParamType::Integer, lo, hi};
  if (def) p.default_value = *def;
  p.description = std::move(doc);
  return p;
}

inline std::vector<ParamSpec> pagerank_params() {
  ParamSpec damping{"damping", ParamType::Number, 0.0, 1.0, true, true};
  damping.default_value = 0.85;
  damping.description = "probability of following an edge";
  ParamSpec tol{"tol", ParamType::Number, 0.0, std::nullopt, true};
  tol.default_value = 1e-10;
  tol.description = "L1 convergence threshold";
  return {damping, tol, integer("max_iter", 1, 100000, 200, "iteration cap")};
}

inline InputSlot graph_slot(bool directed = false, bool weighted = false) {
  return {"graph", Kind::Graph, true, directed, weighted};
}

}  // namespace detail

/// The seven built-in analytics tools.
inline void register_builtin_tools(ToolRegistry& reg) {
  using detail::graph_input;

  reg.register_tool(
      {"pagerank", "fam.ranking", "alg.pagerank", "Global PageRank importance of every node.",
       {detail::graph_slot()}, detail::pagerank_params(), Kind::NodeScores,
       "Power iteration; dangling mass is redistributed uniformly. Scores sum to 1."},
      [](const Inputs& in, const json& p) -> Value {
        return algo::pagerank(graph_input(in), detail::pagerank_options(p));
      });

  reg.register_tool(
      {"personalized_pagerank", "fam.ranking", "alg.personalized_pagerank",
       "PageRank with teleportation restricted to a seed set.",
       {detail::graph_slot(), {"seeds", Kind::NodeSet, false}, {"seed", Kind::Scalar, false}},
       detail::pagerank_params(), Kind::NodeScores,
       "Seeds come from the seeds node set and/or a single seed node key; at least one is needed."},
      [](const Inputs& in, const json& p) -> Value {
        const auto& g = graph_input(in);
        auto seeds = detail::seed_ids(in, g);
        return algo::personalized_pagerank(g, seeds, detail::pagerank_options(p));
      });

  {
    ParamSpec min_weight{"min_weight", ParamType::Number};
    min_weight.description = "only edges with weight >= min_weight take part";
    reg.register_tool(
        {"enumerate_cycles", "fam.cycle_detection", "alg.johnson_cycles",
         "Enumerates simple directed cycles within a length window.",
         {detail::graph_slot(true), {"anchor", Kind::Scalar, false}},
         {detail::integer("min_len", 2, 8, 2, "shortest cycle length"),
          detail::integer("max_len", 2, 8, 6, "longest cycle length"), min_weight,
          detail::integer("max_cycles", 1, 1'000'000, 10'000, "enumeration cap")},
         Kind::CycleSet,
         "Parallel edges collapse to their largest weight; self loops are ignored. With an anchor only "
         "cycles through that node are reported."},
        [](const Inputs& in, const json& p) -> Value {
          const auto& g = graph_input(in);
          algo::CycleOptions opt;
          opt.min_len = p.at("min_len").get<int>();
          opt.max_len = p.at("max_len").get<int>();
          opt.max_cycles = p.at("max_cycles").get<std::size_t>();
          opt.anchor = detail::scalar_node(in, "anchor", g);
          if (p.contains("min_weight")) {
            if (!g.weights)
              fail(ErrorCode::MissingWeightColumn, "min_weight needs a weighted graph", "min_weight");
            opt.edge_filter = algo::WeightFilter{graph::FilterOp::Ge, p.at("min_weight").get<double>()};
          }
          return algo::enumerate_cycles(g, opt);
        });
  }

  {
    ParamSpec mode{"mode", ParamType::String};
    mode.choices = {"weak", "strong"};
    mode.default_value = "weak";
    reg.register_tool({"connected_components", "fam.community", "alg.connected_components",
                       "Labels each node with the smallest node id of its component.",
                       {detail::graph_slot()}, {mode}, Kind::NodeScores,
                       "weak ignores edge direction; strong uses strongly connected components."},
                      [](const Inputs& in, const json& p) -> Value {
                        return algo::connected_components(graph_input(in), p.at("mode") == "strong"
                                                                               ? algo::ComponentMode::Strong
                                                                               : algo::ComponentMode::Weak);
                      });
  }

  reg.register_tool(
      {"khop", "fam.neighborhood", "alg.khop", "Nodes within k out-hops of the seeds.",
       {detail::graph_slot(), {"seeds", Kind::NodeSet, false}, {"seed", Kind::Scalar, false}},
       {detail::integer("k", 0, 64, 2, "hop radius")}, Kind::NodeSet, "Seeds are included; output ascends by id."},
      [](const Inputs& in, const json& p) -> Value {
        const auto& g = graph_input(in);
        auto seeds = detail::seed_ids(in, g);
        if (seeds.empty()) fail(ErrorCode::EmptySeedSet, "khop needs at least one seed", "seeds");
        return algo::khop(g, seeds, p.at("k").get<int>());
      });

  {
    ParamSpec group{"group", ParamType::String};
    group.description = "restrict rows to nodes of this entity label";
    reg.register_tool(
        {"aggregate_flows", "fam.flow_aggregation", "alg.flow_summary",
         "Per-node incoming and outgoing weight totals.",
         {detail::graph_slot(true, true), {"focus", Kind::Scalar, false}},
         {group}, Kind::Table,
         "Columns: group, in_total, out_total, in_count, out_count, net (= in_total - out_total). With a focus "
         "only that node's row is produced."},
        [](const Inputs& in, const json& p) -> Value {
          const auto& g = graph_input(in);
          algo::FlowOptions opt;
          opt.focus = detail::scalar_node(in, "focus", g);
          if (p.contains("group")) {
            const auto label = p.at("group").get<std::string>();
            if (!g.universe || !g.universe->base)
              fail(ErrorCode::SchemaViolation, "group needs a graph built from a property graph", "group");
            auto t = g.universe->base->table_index(label);
            if (!t) fail(ErrorCode::SchemaViolation, "no entity '" + label + "'", "group");
            opt.group_table = *t;
          }
          return flow_table(algo::aggregate_flows(g, opt));
        });
  }

  reg.register_tool(
      {"top_k", "fam.selection", "alg.top_k", "The k highest-scoring nodes.",
       {{"scores", Kind::NodeScores, true}}, {detail::integer("k", 1, 1'000'000, 10, "number of nodes")},
       Kind::NodeSet, "Descending score, ascending id among ties."},
      [](const Inputs& in, const json& p) -> Value {
        const auto& s = std::get<algo::NodeScores>(in.at("scores"));
        algo::NodeSet out;
        out.universe = s.universe;
        if (s.scores.empty()) return out;
        for (const auto& r : algo::top_k(s.scores, p.at("k").get<std::size_t>())) out.ids.push_back(r.id);
        return out;
      });
}

inline ToolRegistry default_registry() {
  ToolRegistry reg;
  register_builtin_tools(reg);
  return reg;
}

}  // namespace aag::tools
