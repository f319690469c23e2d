#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "aag/core/csv.hpp"
#include "aag/core/error.hpp"
#include "aag/core/json.hpp"
#include "aag/core/text.hpp"

namespace aag::pipeline {

struct PlantedCycle {
  int length = 3;
  double lo = 20000.0;
  double hi = 90000.0;
  std::vector<std::string> members;  // empty: focus plus fresh accounts
};

struct DatagenSpec {
  std::size_t users = 1446;
  std::size_t txns = 17512;
  std::vector<PlantedCycle> planted;
  std::uint64_t seed = 7;
  double threshold = 10000.0;  // background amounts stay strictly below
  std::string focus = "Anna Lee";
};

struct Transaction {
  std::string src;
  std::string dst;
  double amount = 0.0;  // cents precision
  std::int64_t time = 0;  // seconds since the epoch
};

struct Dataset {
  std::vector<std::string> users;
  std::vector<Transaction> txns;  // time order; txn ids are positions
  json manifest;
};

inline constexpr int kMaxPlantedLength = 8;

/// "len[:lo-hi][@m1|m2|...]" items joined by ';'. "none" or "" is no cycles.
inline std::vector<PlantedCycle> parse_cycle_specs(const std::string& spec) {
  std::vector<PlantedCycle> out;
  const auto s = text::trim(spec);
  if (s.empty() || s == "none" || s == "0") return out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto end = s.find(';', start);
    if (end == std::string::npos) end = s.size();
    auto item = text::trim(std::string_view(s).substr(start, end - start));
    start = end + 1;
    if (item.empty()) continue;
    PlantedCycle c;
    try {
      std::string members;
      if (auto at = item.find('@'); at != std::string::npos) {
        members = item.substr(at + 1);
        item = item.substr(0, at);
      }
      std::string range;
      if (auto colon = item.find(':'); colon != std::string::npos) {
        range = item.substr(colon + 1);
        item = item.substr(0, colon);
      }
      std::size_t used = 0;
      c.length = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      if (!range.empty()) {
        auto dash = range.find('-');
        if (dash == std::string::npos) throw std::invalid_argument(range);
        c.lo = std::stod(range.substr(0, dash));
        c.hi = std::stod(range.substr(dash + 1));
      }
      for (std::size_t p = 0; !members.empty() && p <= members.size();) {
        auto bar = members.find('|', p);
        if (bar == std::string::npos) bar = members.size();
        c.members.push_back(text::trim(std::string_view(members).substr(p, bar - p)));
        p = bar + 1;
      }
    } catch (const std::logic_error&) {
      fail(ErrorCode::ConfigError, "bad cycle spec '" + item + "'", "cycles");
    }
    out.push_back(std::move(c));
  }
  return out;
}

inline std::vector<PlantedCycle> default_planted() { return parse_cycle_specs("3;4;5;3;4"); }

namespace detail {

inline const std::vector<std::string>& first_names() {
  static const std::vector<std::string> v{
      "Anna",  "Ben",    "Carla", "David", "Elena",  "Farid", "Grace", "Hugo",   "Irene", "Jonas",
      "Kira",  "Liam",   "Maya",  "Nils",  "Olga",   "Pablo", "Quinn", "Rosa",   "Samir", "Tara",
      "Umar",  "Vera",   "Wes",   "Xenia", "Yusuf",  "Zoe",   "Aaron", "Bianca", "Chen",  "Dana",
      "Emil",  "Fatima", "Gil",   "Hana",  "Ivan",   "Julia", "Karl",  "Lena",   "Marco", "Nora",
      "Oscar", "Petra",  "Raj",   "Sofia", "Tomas",  "Uma",   "Viktor", "Wanda", "Yara",  "Zane"};
  return v;
}

inline const std::vector<std::string>& last_names() {
  static const std::vector<std::string> v{
      "Lee",    "Smith",  "Garcia", "Novak",  "Okafor", "Rossi",  "Kim",    "Silva",  "Khan",   "Meyer",
      "Dubois", "Ivanova", "Tanaka", "Hansen", "Moreau", "Costa",  "Nguyen", "Fischer", "Lopez", "Brown",
      "Sato",   "Weber",  "Jensen", "Haddad", "Popescu", "Kowalski", "Ali",  "Berg",   "Cruz",   "Duarte",
      "Eriksen", "Fontaine", "Gupta", "Horvat", "Ito",   "Jovanovic", "Klein", "Larsen", "Mendes", "Nakamura",
      "Ortiz",  "Park",   "Quist",  "Reyes",  "Schulz", "Torres", "Ueda",   "Varga",  "Wolf",   "Young"};
  return v;
}

/// n distinct account names in seeded order, `focus` first.
inline std::vector<std::string> account_names(std::size_t n, const std::string& focus, std::mt19937_64& rng) {
  std::vector<std::string> pool;
  for (const auto& l : last_names())
    for (const auto& f : first_names())
      if (f + " " + l != focus) pool.push_back(f + " " + l);
  std::shuffle(pool.begin(), pool.end(), rng);
  const std::size_t base = pool.size();
  for (std::size_t i = 0; pool.size() + 1 < n; ++i) pool.push_back(pool[i % base] + " " + std::to_string(i / base + 2));
  std::vector<std::string> out{focus};
  out.insert(out.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(std::min(pool.size(), n - 1)));
  return out;
}

inline double cents(double v) { return std::round(v * 100.0) / 100.0; }

inline std::string iso_time(std::int64_t t) {
  const std::time_t tt = static_cast<std::time_t>(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Exhaustive DFS over a small edge set; cycles start at their
/// lexicographically smallest member.
inline std::vector<std::vector<std::string>> brute_force_cycles(const std::set<std::pair<std::string, std::string>>& edges,
                                                                int max_len) {
  std::map<std::string, std::vector<std::string>> adj;
  for (const auto& [s, d] : edges) adj[s].push_back(d);
  std::vector<std::vector<std::string>> out;
  std::vector<std::string> path;
  std::function<void(const std::string&)> dfs = [&](const std::string& u) {
    for (const auto& v : adj[u]) {
      if (v == path.front()) {
        if (path.size() >= 2) out.push_back(path);
      } else if (v > path.front() && std::find(path.begin(), path.end(), v) == path.end() &&
                 static_cast<int>(path.size()) < max_len) {
        path.push_back(v);
        dfs(v);
        path.pop_back();
      }
    }
  };
  for (const auto& [s, _] : adj) {
    path = {s};
    dfs(s);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.size() != b.size() ? a.size() < b.size() : a < b;
  });
  return out;
}

inline std::vector<std::string> canonical_rotation(std::vector<std::string> c) {
  std::rotate(c.begin(), std::min_element(c.begin(), c.end()), c.end());
  return c;
}

}  // namespace detail

/// Synthetic transfer network: low-amount background traffic plus planted
/// high-amount cycles. The amount threshold separates the two exactly, so
/// the manifest's list of above-threshold cycles is the ground truth.
inline Dataset generate_dataset(const DatagenSpec& spec) {
  auto infeasible = [](const std::string& why) { fail(ErrorCode::SpecInfeasible, why); };
  if (spec.users < 2) infeasible("need at least 2 users");
  if (!(spec.threshold > 0)) infeasible("threshold must be positive");

  std::mt19937_64 rng(spec.seed);
  Dataset ds;
  ds.users = detail::account_names(spec.users, spec.focus, rng);
  if (ds.users.size() != spec.users) infeasible("could not name " + std::to_string(spec.users) + " users");
  const std::set<std::string> known(ds.users.begin(), ds.users.end());

  // Planted members: explicit ones first, then fresh accounts disjoint from
  // every other cycle except for the focus.
  std::set<std::string> taken{spec.focus};
  std::size_t planted_edges = 0;
  for (const auto& c : spec.planted) {
    if (c.length < 2 || c.length > kMaxPlantedLength)
      infeasible("cycle length " + std::to_string(c.length) + " outside [2, " + std::to_string(kMaxPlantedLength) + "]");
    if (!(c.lo > spec.threshold) || c.hi < c.lo)
      infeasible("planted amounts must satisfy threshold < lo <= hi");
    if (!c.members.empty()) {
      if (static_cast<int>(c.members.size()) != c.length) infeasible("member list does not match cycle length");
      std::set<std::string> distinct(c.members.begin(), c.members.end());
      if (distinct.size() != c.members.size()) infeasible("cycle members repeat");
      for (const auto& m : c.members) {
        if (!known.count(m)) infeasible("unknown cycle member '" + m + "'");
        taken.insert(m);
      }
    }
    planted_edges += static_cast<std::size_t>(c.length);
  }
  std::size_t fresh_needed = 0;
  for (const auto& c : spec.planted)
    if (c.members.empty()) fresh_needed += static_cast<std::size_t>(c.length - 1);
  if (taken.size() + fresh_needed > spec.users) infeasible("planted cycles need more users than exist");
  if (planted_edges > spec.txns) infeasible("planted cycles need more transactions than requested");

  std::vector<std::string> free_users;
  for (const auto& u : ds.users)
    if (!taken.count(u)) free_users.push_back(u);
  std::shuffle(free_users.begin(), free_users.end(), rng);
  std::size_t next_free = 0;

  constexpr std::int64_t kStart = 1704067200;  // 2024-01-01T00:00:00Z
  constexpr std::int64_t kSpan = 90LL * 24 * 3600;
  std::uniform_int_distribution<std::int64_t> when(0, kSpan - 1);

  std::set<std::pair<std::string, std::string>> high_edges;
  std::set<std::string> covered;
  json planted = json::array();
  for (const auto& c : spec.planted) {
    auto members = c.members;
    if (members.empty()) {
      members.push_back(spec.focus);
      for (int i = 1; i < c.length; ++i) members.push_back(free_users[next_free++]);
    }
    std::uniform_real_distribution<double> amount(c.lo, c.hi);
    const auto t0 = kStart + when(rng) / 2;
    json amounts = json::array();
    for (int i = 0; i < c.length; ++i) {
      const auto& src = members[i];
      const auto& dst = members[(i + 1) % c.length];
      const double a = std::clamp(detail::cents(amount(rng)), c.lo, c.hi);
      ds.txns.push_back({src, dst, a, t0 + 3600LL * (i + 1)});
      high_edges.insert({src, dst});
      covered.insert(src);
      covered.insert(dst);
      amounts.push_back(a);
    }
    planted.push_back({{"length", c.length},
                       {"members", members},
                       {"canonical", detail::canonical_rotation(members)},
                       {"amounts", amounts}});
  }

  // Background: first make every account appear, then uniform random pairs
  // with log-normal amounts kept strictly below the threshold.
  std::lognormal_distribution<double> amount(std::log(spec.threshold / 12.0), 0.9);
  auto low_amount = [&] {
    for (;;) {
      const double a = detail::cents(amount(rng));
      if (a >= 0.01 && a < spec.threshold) return a;
    }
  };
  std::uniform_int_distribution<std::size_t> pick(0, ds.users.size() - 1);
  std::vector<std::string> uncovered;
  for (const auto& u : ds.users)
    if (!covered.count(u)) uncovered.push_back(u);
  std::shuffle(uncovered.begin(), uncovered.end(), rng);
  const std::size_t background = spec.txns - planted_edges;
  if ((uncovered.size() + 1) / 2 > background)
    infeasible("too few transactions for every user to appear at least once");
  for (std::size_t i = 0; i < uncovered.size(); i += 2) {
    std::string src = uncovered[i], dst;
    if (i + 1 < uncovered.size()) {
      dst = uncovered[i + 1];
    } else {
      do dst = ds.users[pick(rng)];
      while (dst == src);
    }
    ds.txns.push_back({src, dst, low_amount(), kStart + when(rng)});
  }
  while (ds.txns.size() < spec.txns) {
    const auto& src = ds.users[pick(rng)];
    const auto& dst = ds.users[pick(rng)];
    if (src == dst) continue;
    ds.txns.push_back({src, dst, low_amount(), kStart + when(rng)});
  }
  std::stable_sort(ds.txns.begin(), ds.txns.end(), [](const auto& a, const auto& b) { return a.time < b.time; });

  json cycles = json::array();
  for (const auto& c : detail::brute_force_cycles(high_edges, kMaxPlantedLength)) cycles.push_back(c);
  ds.manifest = {{"seed", spec.seed},
                 {"users", spec.users},
                 {"transactions", spec.txns},
                 {"threshold", spec.threshold},
                 {"focus", spec.focus},
                 {"planted", planted},
                 {"above_threshold_cycles", cycles}};
  return ds;
}

inline std::string txn_id(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "T%06zu", i + 1);
  return buf;
}

/// accounts.csv, transactions.csv, catalog.json (column roles and the
/// threshold annotation) and manifest.json.
inline void write_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  csv::Document accounts{{"account"}, {}};
  for (const auto& u : ds.users) accounts.rows.push_back({u});
  text::write_file(dir / "accounts.csv", csv::write(accounts));

  csv::Document txns{{"txn_id", "src_account", "dst_account", "amount", "timestamp"}, {}};
  for (std::size_t i = 0; i < ds.txns.size(); ++i) {
    const auto& t = ds.txns[i];
    txns.rows.push_back({txn_id(i), t.src, t.dst, text::fmt_amount(t.amount), detail::iso_time(t.time)});
  }
  text::write_file(dir / "transactions.csv", csv::write(txns));

  const json catalog = {
      {"sources",
       {{{"id", "accounts"}, {"file", "accounts.csv"}, {"columns", {{{"name", "account"}, {"type", "String"}}}}},
        {{"id", "transactions"},
         {"file", "transactions.csv"},
         {"columns",
          {{{"name", "txn_id"}, {"type", "String"}, {"role", "id"}},
           {{"name", "src_account"}, {"type", "String"}, {"role", "entity-key"}},
           {{"name", "dst_account"}, {"type", "String"}, {"role", "counterparty-key"}},
           {{"name", "amount"}, {"type", "Float"}, {"role", "weight"}, {"threshold", ds.manifest["threshold"]}},
           {{"name", "timestamp"}, {"type", "Timestamp"}, {"role", "time"}}}}}}}};
  text::write_file(dir / "catalog.json", dump(catalog, 2) + "\n");
  text::write_file(dir / "manifest.json", dump(ds.manifest, 2) + "\n");
}

}  // namespace aag::pipeline
