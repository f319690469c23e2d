#pragma once

#include <cctype>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "aag/coordinator/coordinator.hpp"
#include "aag/core/text.hpp"
#include "aag/graph/derive_schema.hpp"

namespace aag::coord {

inline constexpr std::string_view kMockRulesVersion = "mock-rules/v1";

/// First pair of adjacent capitalized words that are not common sentence
/// openers, e.g. "Anna Lee" in "...whether Anna Lee is involved...".
inline std::optional<std::string> extract_focus(std::string_view query) {
  static const std::set<std::string> openers{"I",     "The",  "A",     "An",    "Is",    "Are",  "Does",
                                             "Did",   "Do",   "Can",   "Could", "Please", "Identify",
                                             "Check", "Find", "Rank",  "Show",  "List",  "Whether", "Detect",
                                             "Summarize", "Which", "Who", "What", "How"};
  std::vector<std::string> words;
  std::string cur;
  for (char ch : query) {
    if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '\'' || ch == '-') {
      cur += ch;
    } else {
      if (!cur.empty()) words.push_back(cur);
      cur.clear();
      if (ch != ' ') words.push_back("");  // punctuation breaks a name
    }
  }
  if (!cur.empty()) words.push_back(cur);
  auto capitalized = [&](const std::string& w) {
    return w.size() > 1 && std::isupper(static_cast<unsigned char>(w[0])) && !openers.count(w) &&
           std::all_of(w.begin() + 1, w.end(), [](char c) { return !std::isupper(static_cast<unsigned char>(c)); });
  };
  for (std::size_t i = 0; i + 1 < words.size(); ++i)
    if (capitalized(words[i]) && capitalized(words[i + 1])) return words[i] + " " + words[i + 1];
  return std::nullopt;
}

/// Deterministic rule-table coordinator: every reply is a pure function of
/// the request payload.
class MockCoordinator : public Coordinator {
 public:
  using Coordinator::Coordinator;
  std::string name() const override { return "mock"; }

  static json plan_reply(const json& payload) {
    const auto query = payload.value("query", "");
    std::set<std::string> words;
    for (auto& t : text::tokenize(query)) words.insert(t);
    auto any = [&](std::initializer_list<const char*> ks) {
      for (const char* k : ks)
        if (words.count(k)) return true;
      return false;
    };

    const auto focus = extract_focus(query);
    std::string relation = "transfer";
    std::optional<double> threshold;
    if (payload.contains("schema")) {
      auto spec = graph::schema_from_json(payload["schema"]);
      if (!spec.relations.empty() && !spec.relation(relation)) relation = spec.relations.front().label;
      threshold = graph::weight_annotation(payload.value("catalog", json::array()), spec, relation, "threshold");
    }
    const json source = {{"source", relation}};
    auto who = [&](const std::string& fallback) { return focus ? *focus : fallback; };
    auto with_focus = [&](json bindings, const char* slot) {
      if (focus) bindings[slot] = {{"literal", *focus}};
      return bindings;
    };
    auto stage = [](std::string goal, const char* family, json bindings, json params = json::object()) {
      return json{{"goal", std::move(goal)}, {"suggested_family", family}, {"bindings", std::move(bindings)},
                  {"params", std::move(params)}};
    };
    json cycle_params = json::object();
    if (threshold) cycle_params["min_weight"] = *threshold;

    json stages = json::array();
    if (any({"launder", "laundering", "laundered", "aml"})) {
      stages.push_back(stage("Assess whether " + who("any account") +
                                 " is a high-risk account by ranking accounts with PageRank importance",
                             "fam.ranking", {{"graph", source}}));
      stages.push_back(stage("Detect high-value transaction cycles involving " + who("the accounts"),
                             "fam.cycle_detection", with_focus({{"graph", source}}, "anchor"), cycle_params));
      auto flow = stage("Estimate the money flow along the detected cycles", "fam.flow_aggregation",
                        {{"graph", {{"stage", "s2"}, {"selector", "induced_subgraph"}}}});
      flow["gate"] = {{"stage", "s2"}, {"selector", "nonempty"}};
      stages.push_back(flow);
      stages.push_back(stage("Summarize the transaction flow totals of " + who("every account"),
                             "fam.flow_aggregation", with_focus({{"graph", source}}, "focus")));
    } else if (any({"gnn", "neural", "classify", "classification", "embedding", "embeddings"})) {
      stages.push_back(stage("Classify accounts with a graph neural network", "fam.node_classification",
                             {{"graph", source}}));
    } else if (any({"personalized", "personalised", "proximity", "closest"})) {
      stages.push_back(stage("Rank accounts by personalized PageRank proximity to " + who("the seed"),
                             "fam.ranking", with_focus({{"graph", source}}, "seed")));
    } else if (any({"cycle", "cycles", "loop", "loops", "circular", "round"})) {
      stages.push_back(stage("Detect transaction cycles" + (focus ? " involving " + *focus : std::string()),
                             "fam.cycle_detection", with_focus({{"graph", source}}, "anchor"), cycle_params));
    } else if (any({"community", "communities", "component", "components", "cluster", "clusters", "connected"})) {
      stages.push_back(stage("Group accounts into connected components", "fam.community", {{"graph", source}}));
    } else if (any({"hop", "hops", "neighborhood", "neighbourhood", "neighbors", "neighbours", "around"})) {
      stages.push_back(stage("Collect the k-hop neighborhood of " + who("the seed"), "fam.neighborhood",
                             with_focus({{"graph", source}}, "seed")));
    } else if (any({"flow", "flows", "summary", "summarize", "summarise", "totals", "volume"})) {
      stages.push_back(stage("Summarize transaction flow totals of " + who("every account"), "fam.flow_aggregation",
                             with_focus({{"graph", source}}, "focus")));
    } else if (any({"rank", "ranking", "important", "importance", "influential", "central", "pagerank"})) {
      stages.push_back(stage("Rank all accounts by PageRank importance", "fam.ranking", {{"graph", source}}));
    }
    return {{"rules", kMockRulesVersion}, {"focus", focus ? json(*focus) : json(nullptr)}, {"stages", stages}};
  }

  static json refine_reply(const json& payload) {
    std::map<std::string, json> nodes;
    for (const auto& n : payload.at("dag").at("nodes")) nodes[n.at("id").get<std::string>()] = n;
    json actions = json::array();
    for (const auto& fb : payload.at("feedback")) {
      const auto id = fb.at("node_id").get<std::string>();
      const auto outcome = fb.at("outcome").get<std::string>();
      const auto& detail = fb.value("detail", json::object());
      const auto tool = nodes.count(id) ? nodes[id].value("tool", "") : std::string();
      if (outcome == "Ok") continue;
      if (outcome == "Error" && detail.value("error_class", "") == "ParameterOutOfRange" && detail.contains("param")) {
        actions.push_back({{"op", "reset_param"}, {"node", id}, {"param", detail["param"]}});
      } else if (outcome == "LowQuality" && tool == "enumerate_cycles") {
        const auto max_len = nodes[id].value("params", json::object()).value("max_len", 6);
        if (max_len < 8)
          actions.push_back({{"op", "set_param"}, {"node", id}, {"param", "max_len"}, {"value", std::min(8, max_len + 2)}});
        else
          actions.push_back({{"op", "accept"}, {"node", id}});
      } else if (outcome == "LowQuality") {
        actions.push_back({{"op", "accept"}, {"node", id}});
      } else {
        actions.push_back({{"op", "fail"}, {"node", id}, {"reason", detail.value("message", "no rule applies")}});
      }
    }
    return {{"rules", kMockRulesVersion}, {"actions", actions}};
  }

  static json report_reply(const json& payload) {
    json claims = json::array();
    for (const auto& s : payload.value("stages", json::array())) {
      if (s.value("status", "") != "Ok") continue;
      auto summary = s.value("summary_text", "");
      summary = summary.substr(0, summary.find('\n'));
      claims.push_back({{"text", s.value("goal", "") + ": " + summary}, {"cites", {s.at("id")}}});
    }
    return {{"title", "Analysis report"}, {"claims", claims}};
  }

 protected:
  std::string ask(const CoordinatorRequest& req, const std::string&) override {
    switch (req.role) {
      case Role::Plan: return dump(plan_reply(req.payload));
      case Role::Schema:
        return dump(graph::to_json(
            graph::derive_schema_from_roles(req.payload.value("task", ""), req.payload.value("catalog", json::array()))));
      case Role::Refine: return dump(refine_reply(req.payload));
      case Role::Report: return dump(report_reply(req.payload));
    }
    return "{}";
  }
};

}  // namespace aag::coord
