#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "aag/core/error.hpp"
#include "aag/core/json.hpp"
#include "aag/core/text.hpp"
#include "aag/kb/bm25.hpp"

namespace aag::kb {

enum class Level { Category = 0, Family = 1, Algorithm = 2 };
enum class Relation { Contains, VariantOf, Refines };
enum class Feedback { Useful, NotUseful };

inline std::string_view to_string(Level l) {
  switch (l) {
    case Level::Category: return "Category";
    case Level::Family: return "Family";
    case Level::Algorithm: return "Algorithm";
  }
  return "?";
}

inline std::string_view to_string(Relation r) {
  switch (r) {
    case Relation::Contains: return "Contains";
    case Relation::VariantOf: return "VariantOf";
    case Relation::Refines: return "Refines";
  }
  return "?";
}

inline Level parse_level(const std::string& s, const std::string& node_id) {
  if (s == "Category") return Level::Category;
  if (s == "Family") return Level::Family;
  if (s == "Algorithm") return Level::Algorithm;
  fail(ErrorCode::ParseError, "unknown level '" + s + "' on node " + node_id, node_id);
}

inline Relation parse_relation(const std::string& s) {
  if (s == "Contains") return Relation::Contains;
  if (s == "VariantOf") return Relation::VariantOf;
  if (s == "Refines") return Relation::Refines;
  fail(ErrorCode::ParseError, "unknown relation '" + s + "'");
}

constexpr std::size_t kMaxSummaryChars = 512;

struct KnowledgeNode {
  std::string id;
  Level level = Level::Category;
  std::string name;
  std::string summary;
  std::map<std::string, std::string> attributes;
  std::optional<std::string> detail_ref;  // path relative to the knowledge file's directory
  double usefulness = 1.0;
};

struct KnowledgeEdge {
  std::string src;
  std::string dst;
  Relation relation = Relation::Contains;
};

struct FeedbackPolicy {
  double alpha = 1.25;
  double beta = 0.8;
  double u_min = 0.05;
  double u_max = 10.0;
};

struct Candidate {
  std::string id;
  double score = 0.0;
  std::vector<std::string> trail;  // category id, family id
};

struct RetrievalResult {
  std::vector<Candidate> candidates;
  std::vector<std::string> accessed_details;
  std::vector<std::string> selected_families;
};

struct Detail {
  std::string algorithm_id;
  std::string document;
  std::map<std::string, std::string> attributes;
};

/// Append-only record of detail loads; shared by every snapshot derived from
/// the same loaded graph.
class AccessLog {
 public:
  void record(const std::string& id) {
    std::lock_guard lock(mu_);
    entries_.push_back(id);
  }
  std::vector<std::string> entries() const {
    std::lock_guard lock(mu_);
    return entries_;
  }
  std::size_t size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
  }
  void clear() {
    std::lock_guard lock(mu_);
    entries_.clear();
  }

 private:
  mutable std::mutex mu_;
  std::vector<std::string> entries_;
};

class KnowledgeGraph {
 public:
  KnowledgeGraph() : log_(std::make_shared<AccessLog>()) {}

  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  bool contains(const std::string& id) const { return nodes_.count(id) != 0; }

  const KnowledgeNode& node(const std::string& id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) fail(ErrorCode::UnknownNode, "no knowledge node '" + id + "'", id);
    return it->second;
  }

  const std::map<std::string, KnowledgeNode>& nodes() const { return nodes_; }
  const std::vector<KnowledgeEdge>& edges() const { return edges_; }

  std::optional<std::string> parent(const std::string& id) const {
    auto it = parent_.find(id);
    if (it == parent_.end()) return std::nullopt;
    return it->second;
  }

  /// Contains-children in id order.
  std::vector<std::string> children(const std::string& id) const {
    auto it = children_.find(id);
    if (it == children_.end()) return {};
    return {it->second.begin(), it->second.end()};
  }

  std::vector<std::string> ids_at(Level level) const {
    std::vector<std::string> out;
    for (const auto& [id, n] : nodes_)
      if (n.level == level) out.push_back(id);
    return out;
  }

  /// Same-level neighbours through VariantOf edges (either direction), id order.
  std::vector<std::string> variants_of(const std::string& id) const {
    std::set<std::string> out;
    for (const auto& e : edges_) {
      if (e.relation != Relation::VariantOf) continue;
      if (e.src == id) out.insert(e.dst);
      if (e.dst == id) out.insert(e.src);
    }
    return {out.begin(), out.end()};
  }

  /// Ancestor chain from the root category down to the direct parent.
  std::vector<std::string> trail(const std::string& id) const {
    std::vector<std::string> chain;
    auto p = parent(id);
    while (p) {
      chain.push_back(*p);
      p = parent(*p);
    }
    std::reverse(chain.begin(), chain.end());
    return chain;
  }

  const std::filesystem::path& base_dir() const { return base_dir_; }
  void set_base_dir(std::filesystem::path dir) { base_dir_ = std::move(dir); }

  AccessLog& access_log() const { return *log_; }

  // Mutation primitives; callers go through load/insert, which validate.
  void add_node_unchecked(KnowledgeNode node) { nodes_.emplace(node.id, std::move(node)); }
  void add_edge_unchecked(KnowledgeEdge edge) {
    if (edge.relation == Relation::Contains) {
      parent_[edge.dst] = edge.src;
      children_[edge.src].insert(edge.dst);
    }
    edges_.push_back(std::move(edge));
  }
  KnowledgeNode& mutable_node(const std::string& id) {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) fail(ErrorCode::UnknownNode, "no knowledge node '" + id + "'", id);
    return it->second;
  }

 private:
  std::map<std::string, KnowledgeNode> nodes_;
  std::vector<KnowledgeEdge> edges_;
  std::map<std::string, std::string> parent_;
  std::map<std::string, std::set<std::string>> children_;
  std::filesystem::path base_dir_;
  std::shared_ptr<AccessLog> log_;
};

namespace detail {

inline void check_node(const KnowledgeNode& n, const FeedbackPolicy& policy = {}) {
  if (n.id.empty()) fail(ErrorCode::ParseError, "node with empty id");
  if (n.summary.size() > kMaxSummaryChars)
    fail(ErrorCode::ParseError, "summary of " + n.id + " exceeds 512 chars", n.id);
  if (n.level == Level::Algorithm && !n.detail_ref)
    fail(ErrorCode::HierarchyError, "algorithm node " + n.id + " has no detail_ref", n.id);
  if (n.level == Level::Category && n.detail_ref)
    fail(ErrorCode::HierarchyError, "category node " + n.id + " must not carry a detail_ref", n.id);
  if (!(n.usefulness > 0.0) || n.usefulness > policy.u_max || !std::isfinite(n.usefulness))
    fail(ErrorCode::ParseError, "usefulness of " + n.id + " outside (0, u_max]", n.id);
}

}  // namespace detail

/// Full structural check: level rules on every edge and the single-parent
/// Contains forest. Throws HierarchyError naming the first offending node.
inline void validate_hierarchy(const KnowledgeGraph& kg) {
  std::map<std::string, int> contains_parents;
  for (const auto& e : kg.edges()) {
    if (!kg.contains(e.src))
      fail(ErrorCode::HierarchyError, "edge references unknown node " + e.src, e.src);
    if (!kg.contains(e.dst))
      fail(ErrorCode::HierarchyError, "edge references unknown node " + e.dst, e.dst);
    const auto ls = kg.node(e.src).level, ld = kg.node(e.dst).level;
    if (e.relation == Relation::Contains) {
      if (static_cast<int>(ld) != static_cast<int>(ls) + 1)
        fail(ErrorCode::HierarchyError,
             "Contains edge " + e.src + " -> " + e.dst + " skips or inverts a level", e.dst);
      ++contains_parents[e.dst];
    } else if (ls != ld) {
      fail(ErrorCode::HierarchyError,
           std::string(to_string(e.relation)) + " edge " + e.src + " -> " + e.dst + " crosses levels", e.dst);
    }
  }
  for (const auto& [id, n] : kg.nodes()) {
    const int parents = contains_parents.count(id) ? contains_parents.at(id) : 0;
    if (n.level == Level::Category && parents != 0)
      fail(ErrorCode::HierarchyError, "category " + id + " has a parent", id);
    if (n.level != Level::Category && parents == 0)
      fail(ErrorCode::HierarchyError, "orphan node " + id, id);
    if (parents > 1) fail(ErrorCode::HierarchyError, "node " + id + " has multiple parents", id);
  }
}

inline KnowledgeNode node_from_json(const json& j) {
  KnowledgeNode n;
  try {
    n.id = j.at("id").get<std::string>();
    n.level = parse_level(j.at("level").get<std::string>(), n.id);
    n.name = j.value("name", n.id);
    n.summary = j.value("summary", "");
    if (j.contains("attributes"))
      for (const auto& [k, v] : j.at("attributes").items())
        n.attributes[k] = v.is_string() ? v.get<std::string>() : dump(v);
    if (j.contains("detail_path") && !j.at("detail_path").is_null())
      n.detail_ref = j.at("detail_path").get<std::string>();
    n.usefulness = j.value("usefulness", 1.0);
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("malformed node: ") + e.what(), j.value("id", ""));
  }
  return n;
}

inline json node_to_json(const KnowledgeNode& n) {
  json j = {{"id", n.id}, {"level", to_string(n.level)}, {"name", n.name}, {"summary", n.summary},
            {"attributes", n.attributes}};
  if (n.detail_ref) j["detail_path"] = *n.detail_ref;
  if (n.usefulness != 1.0) j["usefulness"] = n.usefulness;
  return j;
}

inline json to_json(const KnowledgeGraph& kg) {
  json nodes = json::array(), edges = json::array();
  for (const auto& [_, n] : kg.nodes()) nodes.push_back(node_to_json(n));
  for (const auto& e : kg.edges())
    edges.push_back({{"src", e.src}, {"dst", e.dst}, {"relation", to_string(e.relation)}});
  return {{"nodes", nodes}, {"edges", edges}};
}

inline KnowledgeGraph parse_knowledge(std::string_view content, std::filesystem::path base_dir) {
  KnowledgeGraph kg;
  kg.set_base_dir(std::move(base_dir));
  if (text::trim(content).empty()) return kg;

  json doc;
  try {
    doc = json::parse(content);
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("knowledge file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail(ErrorCode::ParseError, "knowledge file must be an object");

  for (const auto& jn : doc.value("nodes", json::array())) {
    auto n = node_from_json(jn);
    detail::check_node(n);
    if (kg.contains(n.id)) fail(ErrorCode::DuplicateId, "duplicate node id " + n.id, n.id);
    kg.add_node_unchecked(std::move(n));
  }
  for (const auto& je : doc.value("edges", json::array())) {
    try {
      kg.add_edge_unchecked({je.at("src").get<std::string>(), je.at("dst").get<std::string>(),
                             parse_relation(je.at("relation").get<std::string>())});
    } catch (const json::exception& e) {
      fail(ErrorCode::ParseError, std::string("malformed edge: ") + e.what());
    }
  }
  validate_hierarchy(kg);
  return kg;
}

inline KnowledgeGraph load(const std::filesystem::path& path) {
  return parse_knowledge(text::read_file(path), path.parent_path());
}

inline Detail fetch_detail(const KnowledgeGraph& kg, const std::string& algorithm_id) {
  const auto& n = kg.node(algorithm_id);
  if (n.level != Level::Algorithm)
    fail(ErrorCode::LevelError, algorithm_id + " is a " + std::string(to_string(n.level)) + ", not an Algorithm",
         algorithm_id);
  Detail d{algorithm_id, {}, n.attributes};
  auto path = kg.base_dir() / *n.detail_ref;
  std::error_code ec;
  if (std::filesystem::exists(path, ec)) d.document = text::read_file(path);
  kg.access_log().record(algorithm_id);
  return d;
}

namespace detail {

inline TokenList algorithm_tokens(const KnowledgeNode& n) {
  std::string doc = n.name + " " + n.summary;
  for (const auto& [k, v] : n.attributes) doc += " " + v;
  return text::tokenize(doc);
}

}  // namespace detail

/// Coarse-to-fine retrieval. Phase one ranks Family summaries by BM25 times
/// usefulness; phase two expands only the best ceil(k/2) families, scores
/// their Algorithm children (name, summary, attribute values), and loads the
/// details of the final top k. Candidate score = family score + algorithm score.
inline RetrievalResult retrieve(const KnowledgeGraph& kg, std::string_view query, int k,
                                const LexicalScorer& scorer = Bm25Scorer{}) {
  if (k < 1) fail(ErrorCode::SchemaViolation, "k must be >= 1");
  if (kg.empty()) fail(ErrorCode::EmptyKnowledgeBase, "knowledge base has no nodes");

  const auto q = text::tokenize(query);
  RetrievalResult result;

  auto by_score = [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  };

  const auto families = kg.ids_at(Level::Family);
  std::vector<TokenList> fam_docs;
  for (const auto& f : families) fam_docs.push_back(text::tokenize(kg.node(f).summary));
  const auto fam_raw = scorer.score(fam_docs, q);

  std::vector<std::pair<std::string, double>> fam_ranked;
  for (std::size_t i = 0; i < families.size(); ++i)
    fam_ranked.emplace_back(families[i], fam_raw[i] * kg.node(families[i]).usefulness);
  std::sort(fam_ranked.begin(), fam_ranked.end(), by_score);

  const std::size_t fanout = std::min<std::size_t>((static_cast<std::size_t>(k) + 1) / 2, fam_ranked.size());
  fam_ranked.resize(fanout);

  std::vector<std::string> algos;
  std::vector<double> algo_family_score;
  for (const auto& [fam, fscore] : fam_ranked) {
    result.selected_families.push_back(fam);
    for (const auto& child : kg.children(fam)) {
      if (kg.node(child).level != Level::Algorithm) continue;
      algos.push_back(child);
      algo_family_score.push_back(fscore);
    }
  }

  std::vector<TokenList> algo_docs;
  for (const auto& a : algos) algo_docs.push_back(detail::algorithm_tokens(kg.node(a)));
  const auto algo_raw = scorer.score(algo_docs, q);

  std::vector<std::pair<std::string, double>> ranked;
  for (std::size_t i = 0; i < algos.size(); ++i)
    ranked.emplace_back(algos[i], algo_family_score[i] + algo_raw[i] * kg.node(algos[i]).usefulness);
  std::sort(ranked.begin(), ranked.end(), by_score);
  if (ranked.size() > static_cast<std::size_t>(k)) ranked.resize(static_cast<std::size_t>(k));

  for (const auto& [id, score] : ranked) {
    result.candidates.push_back({id, score, kg.trail(id)});
    fetch_detail(kg, id);
    result.accessed_details.push_back(id);
  }
  return result;
}

inline double record_feedback(KnowledgeGraph& kg, const std::string& node_id, Feedback signal,
                              const FeedbackPolicy& policy = {}) {
  auto& n = kg.mutable_node(node_id);
  double u = n.usefulness * (signal == Feedback::Useful ? policy.alpha : policy.beta);
  n.usefulness = std::clamp(u, policy.u_min, policy.u_max);
  return n.usefulness;
}

/// Adds `node` under `parent_id` (empty for a new Category). The graph is
/// untouched when any check fails.
inline void insert(KnowledgeGraph& kg, KnowledgeNode node, const std::string& parent_id) {
  if (kg.contains(node.id)) fail(ErrorCode::DuplicateId, "node id " + node.id + " already exists", node.id);
  detail::check_node(node);
  if (node.level == Level::Category) {
    if (!parent_id.empty()) fail(ErrorCode::LevelError, "categories are roots and take no parent", node.id);
    kg.add_node_unchecked(std::move(node));
    return;
  }
  const auto& parent = kg.node(parent_id);
  if (static_cast<int>(parent.level) + 1 != static_cast<int>(node.level))
    fail(ErrorCode::LevelError,
         "cannot place " + std::string(to_string(node.level)) + " under " + std::string(to_string(parent.level)),
         node.id);
  std::string id = node.id;
  kg.add_node_unchecked(std::move(node));
  kg.add_edge_unchecked({parent_id, id, Relation::Contains});
}

inline void add_relation(KnowledgeGraph& kg, const std::string& src, const std::string& dst, Relation rel) {
  if (rel == Relation::Contains) fail(ErrorCode::LevelError, "use insert() for Contains edges", dst);
  if (kg.node(src).level != kg.node(dst).level)
    fail(ErrorCode::LevelError, "relation endpoints must share a level", dst);
  kg.add_edge_unchecked({src, dst, rel});
}

/// A request for knowledge the base does not hold. Nothing is fetched; the
/// record is written for an external expansion process to pick up.
struct ExpansionRequest {
  std::string query;
  std::string requesting_task;
  std::vector<std::string> keywords;
  std::vector<std::string> nearest_families;

  json to_json() const {
    return {{"query", query},
            {"requesting_task", requesting_task},
            {"keywords", keywords},
            {"nearest_families", nearest_families},
            {"network_activity", false}};
  }
};

inline ExpansionRequest expand_stub(const KnowledgeGraph& kg, std::string_view query, std::string requesting_task,
                                    const std::filesystem::path& run_dir = {}) {
  ExpansionRequest req;
  req.query = std::string(query);
  req.requesting_task = std::move(requesting_task);
  std::set<std::string> seen;
  for (auto& t : text::tokenize(query))
    if (t.size() > 2 && seen.insert(t).second) req.keywords.push_back(t);

  auto families = kg.ids_at(Level::Family);
  if (!families.empty()) {
    std::vector<TokenList> docs;
    for (const auto& f : families) docs.push_back(text::tokenize(kg.node(f).summary));
    auto scores = Bm25Scorer{}.score(docs, text::tokenize(query));
    std::vector<std::pair<std::string, double>> ranked;
    for (std::size_t i = 0; i < families.size(); ++i)
      if (scores[i] > 0) ranked.emplace_back(families[i], scores[i]);
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    for (std::size_t i = 0; i < ranked.size() && i < 3; ++i) req.nearest_families.push_back(ranked[i].first);
  }

  if (!run_dir.empty()) {
    std::filesystem::create_directories(run_dir);
    std::ofstream out(run_dir / "expansion_requests.jsonl", std::ios::app | std::ios::binary);
    out << dump(req.to_json()) << '\n';
  }
  return req;
}

/// Copy-on-write holder: readers take an immutable snapshot, writers publish
/// a fresh graph. A reader never sees a half-applied mutation.
class KnowledgeBase {
 public:
  explicit KnowledgeBase(KnowledgeGraph kg) : current_(std::make_shared<const KnowledgeGraph>(std::move(kg))) {}

  std::shared_ptr<const KnowledgeGraph> snapshot() const {
    std::lock_guard lock(mu_);
    return current_;
  }

  double record_feedback(const std::string& node_id, Feedback signal, const FeedbackPolicy& policy = {}) {
    std::lock_guard write(write_mu_);
    auto next = *snapshot();
    double u = kb::record_feedback(next, node_id, signal, policy);
    publish(std::move(next));
    return u;
  }

  void insert(KnowledgeNode node, const std::string& parent_id) {
    std::lock_guard write(write_mu_);
    auto next = *snapshot();
    kb::insert(next, std::move(node), parent_id);
    publish(std::move(next));
  }

 private:
  void publish(KnowledgeGraph next) {
    auto ptr = std::make_shared<const KnowledgeGraph>(std::move(next));
    std::lock_guard lock(mu_);
    current_ = std::move(ptr);
  }

  mutable std::mutex mu_;
  std::mutex write_mu_;
  std::shared_ptr<const KnowledgeGraph> current_;
};

}  // namespace aag::kb
