#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "aag/algo/types.hpp"
#include "aag/core/error.hpp"

namespace aag::algo {

struct PageRankOptions {
  double damping = 0.85;
  double tol = 1e-10;
  int max_iter = 200;
};

namespace detail {

// Power iteration x' = d * P^T x + (d * dangling(x) + 1 - d) * teleport,
// where P spreads a node's mass evenly over its CSR entries (parallel edges
// count with multiplicity) and dangling mass follows the teleport vector.
inline NodeScores power_iteration(const CsrGraph& g, const std::vector<double>& teleport, const PageRankOptions& opt) {
  if (!(opt.damping > 0.0 && opt.damping < 1.0))
    fail(ErrorCode::SchemaViolation, "damping must lie in (0, 1)", "damping");
  if (!(opt.tol > 0.0)) fail(ErrorCode::SchemaViolation, "tol must be positive", "tol");
  if (opt.max_iter < 1) fail(ErrorCode::SchemaViolation, "max_iter must be >= 1", "max_iter");

  const std::size_t n = g.n;
  const double d = opt.damping;
  std::vector<double> x = teleport, y(n);

  NodeScores out;
  out.universe = g.universe;
  out.converged = false;
  for (int it = 1; it <= opt.max_iter; ++it) {
    double dangling = 0.0;
    std::fill(y.begin(), y.end(), 0.0);
    for (std::uint32_t u = 0; u < n; ++u) {
      const auto deg = g.degree(u);
      if (deg == 0) {
        dangling += x[u];
        continue;
      }
      const double share = d * x[u] / static_cast<double>(deg);
      for (auto v : g.neighbors(u)) y[v] += share;
    }
    const double restart = d * dangling + (1.0 - d);
    double delta = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      y[v] += restart * teleport[v];
      delta += std::abs(y[v] - x[v]);
    }
    x.swap(y);
    out.iterations = it;
    out.residual = delta;
    if (delta < opt.tol) {
      out.converged = true;
      break;
    }
  }
  out.scores = std::move(x);
  return out;
}

}  // namespace detail

inline NodeScores pagerank(const CsrGraph& g, const PageRankOptions& opt = {}) {
  if (g.n == 0) fail(ErrorCode::EmptyGraph, "pagerank needs at least one node");
  std::vector<double> teleport(g.n, 1.0 / static_cast<double>(g.n));
  auto out = detail::power_iteration(g, teleport, opt);
  out.semantics = "pagerank";
  return out;
}

/// Teleport (and dangling redistribution) uniform over the distinct seeds.
inline NodeScores personalized_pagerank(const CsrGraph& g, std::span<const std::uint32_t> seeds,
                                        const PageRankOptions& opt = {}) {
  if (g.n == 0) fail(ErrorCode::EmptyGraph, "personalized pagerank needs at least one node");
  if (seeds.empty()) fail(ErrorCode::EmptySeedSet, "seed set is empty");
  std::vector<double> teleport(g.n, 0.0);
  std::vector<bool> is_seed(g.n, false);
  std::size_t distinct = 0;
  for (auto s : seeds) {
    if (s >= g.n) fail(ErrorCode::InvalidNode, "seed " + std::to_string(s) + " is not a node", std::to_string(s));
    if (!is_seed[s]) {
      is_seed[s] = true;
      ++distinct;
    }
  }
  for (std::uint32_t v = 0; v < g.n; ++v)
    if (is_seed[v]) teleport[v] = 1.0 / static_cast<double>(distinct);
  auto out = detail::power_iteration(g, teleport, opt);
  out.semantics = "personalized_pagerank";
  return out;
}

}  // namespace aag::algo
