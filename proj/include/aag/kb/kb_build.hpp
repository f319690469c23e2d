#pragma once

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "aag/kb/knowledge_base.hpp"

namespace aag::kb {

// Builds a knowledge file from a directory of markdown documents. Each
// document opens with a front-matter block:
//
//   ---
//   id: alg.pagerank
//   level: Algorithm
//   parent: fam.ranking
//   name: PageRank
//   summary: one line
//   attr.tool: pagerank
//   variant_of: alg.personalized_pagerank
//   ---
//   free text (the algorithm's detail document)
//
// Algorithm documents become their own detail_path.

namespace detail {

struct FrontMatter {
  std::vector<std::pair<std::string, std::string>> fields;
  std::string body;
};

inline FrontMatter split_front_matter(const std::string& content, const std::string& origin) {
  FrontMatter fm;
  std::istringstream in(content);
  std::string line;
  if (!std::getline(in, line) || text::trim(line) != "---")
    fail(ErrorCode::ParseError, origin + ": missing front matter", origin);
  bool closed = false;
  while (std::getline(in, line)) {
    if (text::trim(line) == "---") {
      closed = true;
      break;
    }
    if (text::trim(line).empty()) continue;
    auto colon = line.find(':');
    if (colon == std::string::npos) fail(ErrorCode::ParseError, origin + ": bad front matter line '" + line + "'", origin);
    fm.fields.emplace_back(text::trim(line.substr(0, colon)), text::trim(line.substr(colon + 1)));
  }
  if (!closed) fail(ErrorCode::ParseError, origin + ": unterminated front matter", origin);
  std::ostringstream rest;
  rest << in.rdbuf();
  fm.body = rest.str();
  return fm;
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s + ",") {
    if (c == ',') {
      auto t = text::trim(cur);
      if (!t.empty()) out.push_back(t);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  return out;
}

}  // namespace detail

inline KnowledgeGraph build_from_docs(const std::filesystem::path& docs_dir, const std::filesystem::path& output_file) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(docs_dir)) fail(ErrorCode::ConfigError, docs_dir.string() + " is not a directory");

  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(docs_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".md") files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  const fs::path out_dir = fs::absolute(output_file).parent_path();
  KnowledgeGraph kg;
  kg.set_base_dir(out_dir);

  struct Pending {
    std::string src, dst;
    Relation rel;
  };
  std::vector<Pending> edges;

  for (const auto& file : files) {
    auto fm = detail::split_front_matter(text::read_file(file), file.string());
    KnowledgeNode n;
    std::string parent;
    for (const auto& [key, value] : fm.fields) {
      if (key == "id") n.id = value;
      else if (key == "level") n.level = parse_level(value, n.id.empty() ? file.string() : n.id);
      else if (key == "name") n.name = value;
      else if (key == "summary") n.summary = value;
      else if (key == "parent") parent = value;
      else if (key == "usefulness") n.usefulness = std::stod(value);
      else if (key.rfind("attr.", 0) == 0) n.attributes[key.substr(5)] = value;
      else if (key == "variant_of" || key == "refines") {
        for (auto& dst : detail::split_list(value))
          edges.push_back({"", dst, key == "variant_of" ? Relation::VariantOf : Relation::Refines});
      } else {
        fail(ErrorCode::ParseError, file.string() + ": unknown front matter key '" + key + "'", n.id);
      }
    }
    if (n.id.empty()) fail(ErrorCode::ParseError, file.string() + ": missing id", file.string());
    if (n.name.empty()) n.name = n.id;
    for (auto& e : edges)
      if (e.src.empty()) e.src = n.id;
    if (n.level == Level::Algorithm)
      n.detail_ref = fs::relative(fs::absolute(file), out_dir).generic_string();
    if (!parent.empty()) edges.push_back({parent, n.id, Relation::Contains});
    detail::check_node(n);
    if (kg.contains(n.id)) fail(ErrorCode::DuplicateId, "duplicate node id " + n.id, n.id);
    kg.add_node_unchecked(std::move(n));
  }
  for (auto& e : edges) kg.add_edge_unchecked({e.src, e.dst, e.rel});
  validate_hierarchy(kg);
  text::write_file(output_file, dump(to_json(kg), 2) + "\n");
  return kg;
}

}  // namespace aag::kb
