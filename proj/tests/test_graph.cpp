#include <gtest/gtest.h>

#include <numeric>

#include "aag/core/csv.hpp"
#include "aag/graph/csr.hpp"
#include "aag/graph/derive_schema.hpp"
#include "aag/graph/property_graph.hpp"
#include "aag/graph/source.hpp"
#include "aag/tools/value.hpp"
#include "support/common.hpp"
#include "support/criteria.hpp"

using namespace aag;
using namespace aag::graph;
using support::TempDir;

namespace {

template <typename F>
Error error_from(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "expected an aag::Error";
  return Error(ErrorCode::ConfigError, "none");
}

SourceCatalog transfers() { return load_catalog(support::fixture("transfers")); }

SchemaSpec fraud_schema() { return derive_schema_from_roles("detect fraud between accounts", transfers()); }

std::vector<std::string> keys_of(const PropertyGraph& pg, const std::string& label) {
  return pg.nodes[*pg.table_index(label)].keys;
}

}  // namespace

// ---------------------------------------------------------------------------
// CSV and catalog

TEST(Csv, QuotingEscapesAndLineEndings) {
  auto doc = csv::parse("\xEF\xBB\xBF" "a,b,c\r\n\"x, y\",\"say \"\"hi\"\"\",\"two\nlines\"\r\n1,,3\n\n");
  EXPECT_EQ(doc.header, (std::vector<std::string>{"a", "b", "c"}));
  ASSERT_EQ(doc.rows.size(), 2u);
  EXPECT_EQ(doc.rows[0], (std::vector<std::string>{"x, y", "say \"hi\"", "two\nlines"}));
  EXPECT_EQ(doc.rows[1], (std::vector<std::string>{"1", "", "3"}));
  EXPECT_EQ(csv::parse(csv::write(doc)).rows, doc.rows);
  EXPECT_EQ(error_from([] { csv::parse("a\nab\"c\n"); }).code(), ErrorCode::ParseError);
  EXPECT_EQ(error_from([] { csv::parse("a\n\"open\n"); }).code(), ErrorCode::ParseError);
  EXPECT_TRUE(csv::parse("").header.empty());
}

TEST(Catalog, DeclaredAndInferredTypes) {
  const auto cat = transfers();
  const auto& src = cat.at("transactions");
  EXPECT_EQ(src.row_count(), 10u);
  EXPECT_EQ(src.find_column("amount")->type, ColumnType::Float);
  EXPECT_EQ(src.find_column("amount")->annotations["threshold"], 1000);
  EXPECT_EQ(src.find_column("timestamp")->role, "time");

  std::vector<std::vector<std::string>> rows = {{"1", "2.5", "2024-01-01T00:00:00Z", "x"}, {"7", "", "2024-02-01", "3"}};
  EXPECT_EQ(infer_type(rows, 0), ColumnType::Int);
  EXPECT_EQ(infer_type(rows, 1), ColumnType::Float);
  EXPECT_EQ(infer_type(rows, 2), ColumnType::Timestamp);
  EXPECT_EQ(infer_type(rows, 3), ColumnType::String);

  const auto described = cat.describe();
  EXPECT_EQ(described[0]["rows"], 10);
  EXPECT_EQ(described[0]["columns"].size(), 6u);
  EXPECT_FALSE(dump(described).find("shop1") != std::string::npos);  // never row data
}

TEST(Catalog, SidecarProblems) {
  TempDir dir;
  EXPECT_EQ(error_from([&] { load_catalog(dir.path()); }).code(), ErrorCode::ConfigError);
  text::write_file(dir / "t.csv", "a,b\n1,2\n");
  text::write_file(dir / "catalog.json", R"({"sources":[{"id":"t","file":"t.csv","columns":[{"name":"c"}]}]})");
  auto e = error_from([&] { load_catalog(dir.path()); });
  EXPECT_EQ(e.code(), ErrorCode::CatalogMismatch);
  EXPECT_EQ(e.subject(), "c");
  text::write_file(dir / "catalog.json", R"({"sources":[]})");
  EXPECT_EQ(error_from([&] { load_catalog(dir.path()); }).code(), ErrorCode::ConfigError);
  EXPECT_EQ(error_from([] { TabularSource("x", {{"a"}, {"a"}}, {}); }).code(), ErrorCode::ConfigError);
}

// ---------------------------------------------------------------------------
// Schema derivation

TEST(DeriveSchema, FraudTaskGivesWeightedUserToUserTransfers) {
  const auto s = fraud_schema();
  ASSERT_EQ(s.entities.size(), 1u);
  EXPECT_EQ(s.entities[0].label, "user");
  ASSERT_EQ(s.relations.size(), 1u);
  const auto& r = s.relations[0];
  EXPECT_EQ(r.label, "transfer");
  EXPECT_EQ(r.src_entity, "user");
  EXPECT_EQ(r.dst_entity, "user");
  EXPECT_EQ(r.src_column, "src_account");
  EXPECT_EQ(r.dst_column, "dst_account");
  EXPECT_EQ(r.weight_column, "amount");
  EXPECT_NO_THROW(validate_schema(s, transfers()));
  EXPECT_EQ(weight_annotation(transfers().describe(), s, "transfer", "threshold"), 1000.0);
}

TEST(DeriveSchema, RecommendationTaskGivesUserToMerchantPurchases) {
  const auto s = derive_schema_from_roles("recommend merchants to users", transfers());
  ASSERT_EQ(s.entities.size(), 2u);
  EXPECT_EQ(s.entities[1].label, "merchant");
  EXPECT_EQ(s.relations[0].label, "purchase");
  EXPECT_EQ(s.relations[0].dst_entity, "merchant");
  EXPECT_EQ(s.relations[0].dst_column, "merchant");
  const auto pg = extract(transfers(), s);
  EXPECT_EQ(keys_of(pg, "merchant"), (std::vector<std::string>{"shop1", "shop2", "shop3"}));
}

TEST(DeriveSchema, CorruptedSchemaNamesTheMissingColumn) {
  auto j = to_json(fraud_schema());
  j["relations"][0]["weight_column"] = "amount_usd";
  auto e = error_from([&] { validate_schema(schema_from_json(j), transfers()); });
  EXPECT_EQ(e.code(), ErrorCode::CatalogMismatch);
  EXPECT_EQ(e.subject(), "amount_usd");

  auto non_numeric = to_json(fraud_schema());
  non_numeric["relations"][0]["weight_column"] = "merchant";
  EXPECT_EQ(error_from([&] { validate_schema(schema_from_json(non_numeric), transfers()); }).code(),
            ErrorCode::CatalogMismatch);
  auto undeclared = to_json(fraud_schema());
  undeclared["relations"][0]["dst_entity"] = "merchant";
  EXPECT_EQ(error_from([&] { validate_schema(schema_from_json(undeclared), transfers()); }).code(),
            ErrorCode::SchemaInferenceFailed);
  EXPECT_EQ(error_from([] { schema_from_json(json{{"entities", 3}}); }).code(), ErrorCode::SchemaInferenceFailed);
  EXPECT_EQ(error_from([] { derive_schema_from_roles("x", json::array()); }).code(), ErrorCode::SchemaInferenceFailed);
}

TEST(DeriveSchema, JsonRoundTrip) {
  auto s = fraud_schema();
  s.relations[0].filters.push_back({"amount", FilterOp::Ge, "1000"});
  EXPECT_EQ(dump(to_json(schema_from_json(to_json(s)))), dump(to_json(s)));
}

// ---------------------------------------------------------------------------
// Extraction

TEST(Extract, TenTransfersAmongFourAccounts) {
  const auto cat = transfers();
  const auto pg = extract(cat, fraud_schema());
  EXPECT_EQ(keys_of(pg, "user"), (std::vector<std::string>{"A", "B", "C", "D"}));  // first-seen order
  const auto& rel = pg.relation("transfer");
  EXPECT_EQ(rel.size(), 10u);
  EXPECT_DOUBLE_EQ((*rel.weights)[8], 999.99);
  EXPECT_EQ(rel.attributes.at("txn_id")[6], "T07");
  EXPECT_EQ(pg.report.rows_kept, 10u);
  // Only referenced columns were read.
  std::set<std::string> expected{"src_account", "dst_account", "amount", "txn_id", "timestamp"};
  EXPECT_EQ(cat.at("transactions").accessed_columns(), expected);
}

TEST(Extract, FilterKeepsThreeRowsAndOnlyTheirEndpoints) {
  auto s = fraud_schema();
  s.relations[0].filters.push_back({"amount", FilterOp::Ge, "1000"});
  const auto pg = extract(transfers(), s);
  EXPECT_EQ(keys_of(pg, "user"), (std::vector<std::string>{"B", "C", "D"}));
  const auto& rel = pg.relation("transfer");
  EXPECT_EQ(rel.source_rows, (std::vector<std::size_t>{1, 3, 6}));
  EXPECT_EQ(pg.report.rows_filtered, 7u);
}

TEST(Extract, EmptySourceGivesEmptyGraph) {
  SourceCatalog cat;
  cat.add(TabularSource("t", {{"s", ColumnType::String, "entity-key"}, {"d", ColumnType::String, "counterparty-key"}}, {}));
  const auto pg = extract(cat, derive_schema_from_roles("fraud", cat));
  EXPECT_EQ(pg.node_count(), 0u);
  EXPECT_EQ(pg.edge_count(), 0u);
}

TEST(Extract, DirtyRowsAreSkippedWithReasons) {
  SourceCatalog cat;
  cat.add(TabularSource("t",
                        {{"s", ColumnType::String, "entity-key"},
                         {"d", ColumnType::String, "counterparty-key"},
                         {"w", ColumnType::Float, "weight"}},
                        {{"a", "b", "1.5"}, {"a", "", "2"}, {"b", "c", "lots"}, {"c", "a", "3"}}));
  const auto pg = extract(cat, derive_schema_from_roles("fraud", cat));
  EXPECT_EQ(pg.relation("transfer").size(), 2u);
  EXPECT_EQ(pg.report.rows_skipped, 2u);
  ASSERT_EQ(pg.report.skip_log.size(), 2u);
  EXPECT_EQ(pg.report.skip_log[0], "t:3: empty endpoint key");
  EXPECT_EQ(pg.report.skip_log[1], "t:4: column w is not Float");

  SourceCatalog bad;
  bad.add(TabularSource("t",
                        {{"s", ColumnType::String, "entity-key"},
                         {"d", ColumnType::String, "counterparty-key"},
                         {"w", ColumnType::Float, "weight"}},
                        {{"a", "b", "x"}, {"b", "c", "y"}}));
  EXPECT_EQ(error_from([&] { extract(bad, derive_schema_from_roles("fraud", bad)); }).code(),
            ErrorCode::ExtractionError);
}

// Every kept edge's row satisfies every predicate; every dropped valid row
// fails at least one. Predicates re-evaluated here on the raw strings.
TEST(Extract, FilterSoundnessOnRandomRows) {
  support::Rng rng(8);
  const std::vector<FilterOp> ops{FilterOp::Ge, FilterOp::Le, FilterOp::Eq, FilterOp::Ne};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::vector<std::string>> rows;
    const auto n = support::uniform(rng, 0, 40);
    for (std::uint32_t i = 0; i < n; ++i)
      rows.push_back({"k" + std::to_string(support::uniform(rng, 0, 9)), "k" + std::to_string(support::uniform(rng, 0, 9)),
                      std::to_string(support::uniform(rng, 0, 20) * 50), support::coin(rng, 0.5) ? "red" : "blue"});
    SourceCatalog cat;
    cat.add(TabularSource("t",
                          {{"s", ColumnType::String, "entity-key"},
                           {"d", ColumnType::String, "counterparty-key"},
                           {"amt", ColumnType::Int, "weight"},
                           {"tag", ColumnType::String, ""}},
                          rows));
    auto schema = derive_schema_from_roles("fraud", cat);
    const FilterPredicate f1{"amt", ops[support::uniform(rng, 0, 3)], std::to_string(support::uniform(rng, 0, 20) * 50)};
    const FilterPredicate f2{"tag", support::coin(rng, 0.5) ? FilterOp::Eq : FilterOp::Ne, "red"};
    schema.relations[0].filters = {f1, f2};
    const auto pg = extract(cat, schema);

    auto holds = [](double a, FilterOp op, double b) {
      return op == FilterOp::Ge ? a >= b : op == FilterOp::Le ? a <= b : op == FilterOp::Eq ? a == b : a != b;
    };
    std::vector<std::size_t> want;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const bool tag_ok = f2.op == FilterOp::Eq ? rows[i][3] == "red" : rows[i][3] != "red";
      if (holds(std::stod(rows[i][2]), f1.op, std::stod(f1.literal)) && tag_ok) want.push_back(i);
    }
    ASSERT_EQ(pg.relation("transfer").source_rows, want) << "trial " << trial;
    EXPECT_EQ(cat.at("t").accessed_columns(), (std::set<std::string>{"s", "d", "amt", "tag"}));
  }
}

// ---------------------------------------------------------------------------
// CSR

TEST(Csr, SmallExamples) {
  const auto g = build_csr(3, {{0, 2}, {1, 2}, {0, 1}}, Direction::Out, Weighting::None);
  EXPECT_EQ(g.offsets, (std::vector<std::uint64_t>{0, 2, 3, 3}));
  EXPECT_EQ(g.targets, (std::vector<std::uint32_t>{1, 2, 2}));
  EXPECT_FALSE(g.weights);

  const auto s = build_csr(3, {{0, 1}, {0, 2}, {1, 2}}, Direction::Symmetrized, Weighting::None);
  EXPECT_EQ(s.edge_count(), 6u);
  EXPECT_FALSE(s.directed);

  const auto c = build_csr(2, {{0, 1}, {0, 1}, {0, 1}}, Direction::Out, Weighting::Count);
  EXPECT_EQ(c.targets, std::vector<std::uint32_t>{1});
  EXPECT_EQ(*c.weights, std::vector<double>{3.0});

  const auto in = build_csr(3, {{0, 1, 4.0}, {2, 1, 5.0}}, Direction::In, Weighting::Column);
  EXPECT_EQ(in.offsets, (std::vector<std::uint64_t>{0, 0, 2, 2}));
  EXPECT_EQ(*in.weights, (std::vector<double>{4.0, 5.0}));
  EXPECT_EQ(error_from([] { build_csr(2, {{0, 2}}, Direction::Out, Weighting::None); }).code(), ErrorCode::InvalidNode);
}

TEST(Csr, RelationErrors) {
  const auto pg = extract(transfers(), fraud_schema());
  EXPECT_EQ(error_from([&] { to_csr(pg, "nope", Direction::Out, Weighting::None); }).code(), ErrorCode::UnknownRelation);
  auto unweighted = fraud_schema();
  unweighted.relations[0].weight_column.reset();
  const auto pg2 = extract(transfers(), unweighted);
  EXPECT_EQ(error_from([&] { to_csr(pg2, "transfer", Direction::Out, Weighting::Column); }).code(),
            ErrorCode::MissingWeightColumn);
}

TEST(Csr, RoundTripAndInducedViewsOnRandomGraphs) {
  auto out = criteria::csr_roundtrip_and_induced(300, 17);
  EXPECT_TRUE(out.ok) << out.detail;
}

// ---------------------------------------------------------------------------
// Stage views from upstream outputs

TEST(StageView, CycleInALargeGraphInducesExactlyItsEdges) {
  support::Rng rng(2);
  PropertyGraph pg;
  NodeTable users{"user", {}, {}, {}};
  for (int i = 0; i < 1446; ++i) users.get_or_add("u" + std::to_string(i));
  pg.nodes.push_back(users);
  EdgeTable et;
  et.label = "transfer";
  et.weights.emplace();
  auto add = [&](std::uint32_t a, std::uint32_t b) {
    et.src.push_back(a);
    et.dst.push_back(b);
    et.weights->push_back(1.0);
    et.source_rows.push_back(et.src.size() - 1);
  };
  for (int i = 0; i < 5000; ++i) add(support::uniform(rng, 0, 1445), support::uniform(rng, 0, 1445));
  add(10, 20);
  add(20, 30);
  add(30, 10);
  add(20, 10);  // extra edge inside the node set
  pg.edges.push_back(et);
  auto shared = std::make_shared<const PropertyGraph>(pg);
  const auto csr = to_csr(shared, "transfer", Direction::Out, Weighting::Column);

  algo::CycleSet cs{{{{10, 20, 30}, std::nullopt, std::nullopt}}, false, csr.universe};
  const auto view = tools::materialize_stage_input(cs, "s2");
  EXPECT_EQ(view.nodes.size(), 3u);
  std::vector<std::size_t> brute;
  for (std::size_t i = 0; i < et.src.size(); ++i) {
    const std::set<std::uint32_t> in{10, 20, 30};
    if (in.count(et.src[i]) && in.count(et.dst[i])) brute.push_back(i);
  }
  EXPECT_EQ(view.edges, brute);
  EXPECT_GE(view.edges.size(), 4u);
  EXPECT_EQ(view.provenance, "s2");

  const auto empty = tools::materialize_stage_input(algo::NodeSet{{}, csr.universe}, "s3");
  EXPECT_TRUE(empty.nodes.empty());
  EXPECT_TRUE(empty.edges.empty());

  std::vector<std::uint32_t> all(1446);
  std::iota(all.begin(), all.end(), 0);
  const auto full = tools::materialize_stage_input(algo::NodeSet{all, csr.universe}, "s4");
  EXPECT_EQ(full.edges.size(), et.src.size());

  EXPECT_EQ(error_from([&] { tools::materialize_stage_input(algo::NodeScores{{1.0}, csr.universe}, "s5"); }).code(),
            ErrorCode::KindMismatch);
}

// ---------------------------------------------------------------------------
// Two-hop projection

TEST(Project, SharedMerchantConnectsUsers) {
  PropertyGraph pg;
  NodeTable users{"user", {}, {}, {}}, shops{"merchant", {}, {}, {}};
  users.get_or_add("a");
  users.get_or_add("b");
  shops.get_or_add("m");
  pg.nodes = {users, shops};
  EdgeTable buys;
  buys.label = "purchase";
  buys.src_table = 0;
  buys.dst_table = 1;
  buys.src = {0, 1};
  buys.dst = {0, 0};
  buys.source_rows = {0, 1};
  pg.edges.push_back(buys);

  const auto p = project(pg, {"purchase", "purchase", 1, "co"});
  const auto& co = p.relation("co");
  ASSERT_EQ(co.size(), 1u);
  EXPECT_EQ(co.src[0], 0u);
  EXPECT_EQ(co.dst[0], 1u);
  EXPECT_EQ((*co.weights)[0], 1.0);
  EXPECT_FALSE(co.directed);
  EXPECT_EQ(project(pg, {"purchase", "purchase", 2, "co"}).relation("co").size(), 0u);
  EXPECT_EQ(error_from([&] { project(p, {"purchase", "purchase", 1, "co"}); }).code(), ErrorCode::ProjectionMismatch);
}

TEST(Project, MatchesBruteForceCoNeighbourCounts) {
  support::Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const auto nu = support::uniform(rng, 1, 12), nm = support::uniform(rng, 1, 8);
    PropertyGraph pg;
    NodeTable users{"user", {}, {}, {}}, shops{"merchant", {}, {}, {}};
    for (std::uint32_t i = 0; i < nu; ++i) users.get_or_add("u" + std::to_string(i));
    for (std::uint32_t i = 0; i < nm; ++i) shops.get_or_add("m" + std::to_string(i));
    pg.nodes = {users, shops};
    EdgeTable buys;
    buys.label = "purchase";
    buys.src_table = 0;
    buys.dst_table = 1;
    std::vector<std::vector<bool>> bought(nu, std::vector<bool>(nm, false));
    for (int e = 0, m = static_cast<int>(support::uniform(rng, 0, 40)); e < m; ++e) {
      auto u = support::uniform(rng, 0, nu - 1), s = support::uniform(rng, 0, nm - 1);
      buys.src.push_back(u);
      buys.dst.push_back(s);
      buys.source_rows.push_back(0);
      bought[u][s] = true;
    }
    pg.edges.push_back(buys);
    const std::size_t tau = support::uniform(rng, 1, 3);
    const auto p = project(pg, {"purchase", "purchase", tau, "co"});

    std::map<std::pair<std::uint32_t, std::uint32_t>, double> want, got;
    for (std::uint32_t a = 0; a < nu; ++a)
      for (std::uint32_t b = a + 1; b < nu; ++b) {
        std::size_t shared = 0;
        for (std::uint32_t s = 0; s < nm; ++s) shared += bought[a][s] && bought[b][s];
        if (shared >= tau) want[{a, b}] = static_cast<double>(shared);
      }
    const auto& co = p.relation("co");
    for (std::size_t i = 0; i < co.size(); ++i) got[{co.src[i], co.dst[i]}] = (*co.weights)[i];
    EXPECT_EQ(got, want) << "trial " << trial;
  }
}
