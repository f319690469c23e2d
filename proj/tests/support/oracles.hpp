#pragma once

// Reference implementations used only by tests. Each one is written the
// simplest possible way (dense matrices, exhaustive search) and shares no
// code with the library beyond plain data types.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace oracle {

struct Edge {
  std::uint32_t src = 0;
  std::uint32_t dst = 0;
  double weight = 1.0;
};

/// Dense PageRank: M[v][u] = multiplicity(u->v) / outdeg(u); dangling columns
/// follow the teleport vector. Iterated until the L1 change drops below 1e-15
/// or 100000 steps.
inline std::vector<double> dense_pagerank(std::uint32_t n, const std::vector<Edge>& edges, double d,
                                          const std::vector<double>& teleport) {
  std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
  std::vector<double> outdeg(n, 0.0);
  for (const auto& e : edges) outdeg[e.src] += 1.0;
  for (const auto& e : edges) m[e.dst][e.src] += 1.0 / outdeg[e.src];
  for (std::uint32_t u = 0; u < n; ++u)
    if (outdeg[u] == 0.0)
      for (std::uint32_t v = 0; v < n; ++v) m[v][u] = teleport[v];

  std::vector<double> x = teleport, y(n);
  for (int it = 0; it < 100000; ++it) {
    double change = 0.0;
    for (std::uint32_t v = 0; v < n; ++v) {
      double s = 0.0;
      for (std::uint32_t u = 0; u < n; ++u) s += m[v][u] * x[u];
      y[v] = d * s + (1.0 - d) * teleport[v];
    }
    for (std::uint32_t v = 0; v < n; ++v) change += std::fabs(y[v] - x[v]);
    x = y;
    if (change < 1e-15) break;
  }
  return x;
}

/// Every simple directed cycle with length in [lo, hi], found by extending
/// all simple paths from every start node and closing back to it. Each cycle
/// is rotated to start at its smallest node; duplicates from other starts are
/// removed by the set.
inline std::set<std::vector<std::uint32_t>> all_cycles(std::uint32_t n, const std::vector<Edge>& edges, int lo,
                                                       int hi) {
  std::vector<std::set<std::uint32_t>> adj(n);
  for (const auto& e : edges)
    if (e.src != e.dst) adj[e.src].insert(e.dst);
  std::set<std::vector<std::uint32_t>> out;
  std::vector<std::uint32_t> path;
  std::vector<bool> used(n, false);
  auto dfs = [&](auto&& self, std::uint32_t start, std::uint32_t v) -> void {
    for (auto w : adj[v]) {
      if (w == start && static_cast<int>(path.size()) >= lo) {
        auto c = path;
        std::rotate(c.begin(), std::min_element(c.begin(), c.end()), c.end());
        out.insert(c);
      }
      if (used[w] || static_cast<int>(path.size()) >= hi) continue;
      used[w] = true;
      path.push_back(w);
      self(self, start, w);
      path.pop_back();
      used[w] = false;
    }
  };
  for (std::uint32_t s = 0; s < n; ++s) {
    path = {s};
    used.assign(n, false);
    used[s] = true;
    dfs(dfs, s, s);
  }
  return out;
}

/// Weak components by repeated label propagation until nothing changes;
/// each node ends with the smallest id reachable ignoring direction.
inline std::vector<std::uint32_t> weak_labels(std::uint32_t n, const std::vector<Edge>& edges) {
  std::vector<std::uint32_t> label(n);
  for (std::uint32_t i = 0; i < n; ++i) label[i] = i;
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& e : edges) {
      auto m = std::min(label[e.src], label[e.dst]);
      if (label[e.src] != m || label[e.dst] != m) {
        label[e.src] = label[e.dst] = m;
        changed = true;
      }
    }
  }
  return label;
}

/// Strong components from the transitive closure: u and v share a component
/// iff each reaches the other. Label = smallest member id.
inline std::vector<std::uint32_t> strong_labels(std::uint32_t n, const std::vector<Edge>& edges) {
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (std::uint32_t i = 0; i < n; ++i) reach[i][i] = true;
  for (const auto& e : edges) reach[e.src][e.dst] = true;
  for (std::uint32_t k = 0; k < n; ++k)
    for (std::uint32_t i = 0; i < n; ++i)
      if (reach[i][k])
        for (std::uint32_t j = 0; j < n; ++j)
          if (reach[k][j]) reach[i][j] = true;
  std::vector<std::uint32_t> label(n);
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = 0; j <= i; ++j)
      if (reach[i][j] && reach[j][i]) {
        label[i] = j;
        break;
      }
  return label;
}

/// Nodes within k hops via boolean matrix powers of the adjacency.
inline std::vector<std::uint32_t> within_hops(std::uint32_t n, const std::vector<Edge>& edges,
                                              const std::vector<std::uint32_t>& seeds, int k) {
  std::vector<bool> frontier(n, false), seen(n, false);
  for (auto s : seeds) frontier[s] = seen[s] = true;
  for (int step = 0; step < k; ++step) {
    std::vector<bool> next(n, false);
    for (const auto& e : edges)
      if (frontier[e.src]) next[e.dst] = true;
    for (std::uint32_t v = 0; v < n; ++v) seen[v] = seen[v] || next[v];
    frontier = next;
  }
  std::vector<std::uint32_t> out;
  for (std::uint32_t v = 0; v < n; ++v)
    if (seen[v]) out.push_back(v);
  return out;
}

// ---------------------------------------------------------------------------
// Lexical scoring

inline std::vector<std::string> words(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s + " ") {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  return out;
}

/// Okapi BM25, k1 = 1.2, b = 0.75, idf = ln(1 + (N - df + 0.5) / (df + 0.5)).
inline std::vector<double> bm25(const std::vector<std::vector<std::string>>& docs,
                                const std::vector<std::string>& query) {
  std::vector<double> out(docs.size(), 0.0);
  if (docs.empty()) return out;
  double avg = 0.0;
  for (const auto& d : docs) avg += static_cast<double>(d.size());
  avg /= static_cast<double>(docs.size());
  std::set<std::string> terms(query.begin(), query.end());
  for (const auto& t : terms) {
    double df = 0.0;
    for (const auto& d : docs)
      if (std::find(d.begin(), d.end(), t) != d.end()) df += 1.0;
    if (df == 0.0) continue;
    const double idf = std::log(1.0 + (static_cast<double>(docs.size()) - df + 0.5) / (df + 0.5));
    for (std::size_t i = 0; i < docs.size(); ++i) {
      const double f = static_cast<double>(std::count(docs[i].begin(), docs[i].end(), t));
      if (f == 0.0) continue;
      out[i] += idf * f * 2.2 / (f + 1.2 * (0.25 + 0.75 * static_cast<double>(docs[i].size()) / avg));
    }
  }
  return out;
}

}  // namespace oracle
