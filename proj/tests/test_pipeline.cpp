#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>

#include "support/criteria.hpp"

using namespace aag;
using namespace aag::pipeline;
using planner::Binding;

namespace {

template <typename F>
std::optional<ErrorCode> code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

DatagenSpec small_spec(const std::string& cycles = "3;4;5", std::uint64_t seed = 3) {
  DatagenSpec s;
  s.users = 150;
  s.txns = 1200;
  s.planted = parse_cycle_specs(cycles);
  s.seed = seed;
  return s;
}

std::vector<json> log_events(const std::filesystem::path& run_dir, const std::string& name) {
  std::vector<json> out;
  std::istringstream in(text::read_file(run_dir / "run.log"));
  for (std::string line; std::getline(in, line);) {
    auto j = json::parse(line);
    if (j["event"] == name) out.push_back(j);
  }
  return out;
}

int run_cli(const std::string& args, const std::filesystem::path& capture) {
  const std::string cmd = std::string("'") + AAG_CLI_PATH + "' " + args + " > '" + capture.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

// ---------------------------------------------------------------------------
// Dataset generation

TEST(Datagen, ShapeAndSeparationByThreshold) {
  const auto ds = generate_dataset(small_spec());
  EXPECT_EQ(ds.users.size(), 150u);
  EXPECT_EQ(ds.txns.size(), 1200u);
  EXPECT_EQ(std::set<std::string>(ds.users.begin(), ds.users.end()).size(), 150u);
  EXPECT_EQ(std::count(ds.users.begin(), ds.users.end(), "Anna Lee"), 1);

  std::set<std::string> seen;
  std::size_t high = 0;
  for (std::size_t i = 0; i < ds.txns.size(); ++i) {
    const auto& t = ds.txns[i];
    EXPECT_NE(t.src, t.dst);
    EXPECT_EQ(t.amount, std::round(t.amount * 100) / 100);
    if (i) {
      EXPECT_LE(ds.txns[i - 1].time, t.time);
    }
    seen.insert(t.src);
    seen.insert(t.dst);
    if (t.amount >= 10000.0) {
      ++high;
      EXPECT_GE(t.amount, 20000.0);
      EXPECT_LE(t.amount, 90000.0);
    }
  }
  EXPECT_EQ(seen.size(), 150u);  // every account transacts
  EXPECT_EQ(high, 3u + 4u + 5u);

  ASSERT_EQ(ds.manifest["planted"].size(), 3u);
  std::set<std::string> members;
  for (const auto& c : ds.manifest["planted"]) {
    EXPECT_EQ(c["members"][0], "Anna Lee");
    for (const auto& m : c["members"]) members.insert(m.get<std::string>());
  }
  EXPECT_EQ(members.size(), 1u + 2u + 3u + 4u);  // disjoint apart from the focus
  EXPECT_EQ(ds.manifest["above_threshold_cycles"].size(), 3u);
}

TEST(Datagen, SameSeedSameBytes) {
  support::TempDir dir("gen");
  write_dataset(generate_dataset(small_spec("3;4", 5)), dir / "a");
  write_dataset(generate_dataset(small_spec("3;4", 5)), dir / "b");
  write_dataset(generate_dataset(small_spec("3;4", 6)), dir / "c");
  for (const char* f : {"accounts.csv", "transactions.csv", "catalog.json", "manifest.json"})
    EXPECT_EQ(text::read_file(dir / "a" / f), text::read_file(dir / "b" / f)) << f;
  EXPECT_NE(text::read_file(dir / "a/transactions.csv"), text::read_file(dir / "c/transactions.csv"));
}

TEST(Datagen, WrittenCatalogDrivesExtraction) {
  support::TempDir dir("gen");
  const auto ds = generate_dataset(small_spec("3"));
  write_dataset(ds, dir.path());
  const auto cat = graph::load_catalog(dir.path());
  const auto schema = graph::derive_schema_from_roles("trace money transfers", cat);
  const auto pg = graph::extract(cat, schema);
  ASSERT_EQ(pg.edges.size(), 1u);
  EXPECT_EQ(pg.edges[0].label, "transfer");
  EXPECT_TRUE(pg.edges[0].weights.has_value());
  EXPECT_EQ(graph::weight_annotation(cat.describe(), schema, "transfer", "threshold"), 10000.0);
  const auto truth = criteria::cycles_above(dir / "transactions.csv", 10000.0);
  EXPECT_EQ(truth.size(), 1u);
}

TEST(Datagen, ExplicitMembersAndRanges) {
  auto spec = small_spec("");
  const auto probe = generate_dataset(spec);
  const auto a = probe.users[10], b = probe.users[20];
  spec.planted = parse_cycle_specs("2:15000-16000@" + a + "|" + b + "; 3");
  const auto ds = generate_dataset(spec);
  const auto& first = ds.manifest["planted"][0];
  EXPECT_EQ(first["members"], (json{a, b}));
  for (const auto& amt : first["amounts"]) {
    EXPECT_GE(amt.get<double>(), 15000.0);
    EXPECT_LE(amt.get<double>(), 16000.0);
  }
  EXPECT_EQ(ds.manifest["above_threshold_cycles"].size(), 2u);
}

TEST(Datagen, InfeasibleSpecs) {
  auto with = [](auto mutate) {
    auto s = small_spec();
    mutate(s);
    return code_of([&] { generate_dataset(s); });
  };
  EXPECT_EQ(with([](DatagenSpec& s) { s.users = 1; }), ErrorCode::SpecInfeasible);
  EXPECT_EQ(with([](DatagenSpec& s) { s.users = 8; }), ErrorCode::SpecInfeasible);
  EXPECT_EQ(with([](DatagenSpec& s) { s.txns = 10; }), ErrorCode::SpecInfeasible);
  EXPECT_EQ(with([](DatagenSpec& s) { s.planted = parse_cycle_specs("9"); }), ErrorCode::SpecInfeasible);
  EXPECT_EQ(with([](DatagenSpec& s) { s.planted = parse_cycle_specs("3:5000-9000"); }), ErrorCode::SpecInfeasible);
  EXPECT_EQ(with([](DatagenSpec& s) { s.planted = parse_cycle_specs("2@Nobody Here|Anna Lee"); }),
            ErrorCode::SpecInfeasible);
  EXPECT_EQ(with([](DatagenSpec& s) { s.threshold = 0; }), ErrorCode::SpecInfeasible);
  EXPECT_EQ(code_of([] { parse_cycle_specs("three"); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([] { parse_cycle_specs("3:100"); }), ErrorCode::ConfigError);
  EXPECT_TRUE(parse_cycle_specs("none").empty());
  EXPECT_EQ(default_planted().size(), 5u);
}

// ---------------------------------------------------------------------------
// Compounding failure bench

TEST(FailureBench, ExactValues) {
  EXPECT_NEAR(failure_bench(4, 0.9, 1, 0).exact, 0.6561, 1e-15);
  EXPECT_NEAR(failure_bench(1, 0.5, 1, 0).exact, 0.5, 1e-15);
  EXPECT_NEAR(failure_bench(10, 0.95, 1, 0).exact, 0.5987369392383789, 1e-15);
  EXPECT_EQ(failure_bench(3, 1.0, 500, 1).successes, 500u);
  EXPECT_EQ(failure_bench(3, 0.0, 500, 1).successes, 0u);
  const auto j = to_json(failure_bench(4, 0.9, 100, 2));
  EXPECT_NEAR(j["exact_failure"].get<double>(), 0.3439, 1e-12);
}

TEST(FailureBench, EmpiricalTracksExact) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto r = failure_bench(4, 0.9, 10000, seed);
    EXPECT_NEAR(r.empirical, r.exact, 0.02) << seed;
    EXPECT_EQ(r.empirical, failure_bench(4, 0.9, 10000, seed).empirical);
  }
}

TEST(FailureBench, RejectsBadArguments) {
  EXPECT_EQ(code_of([] { failure_bench(0, 0.9, 10); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([] { failure_bench(4, 1.1, 10); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([] { failure_bench(4, 0.9, 0); }), ErrorCode::ConfigError);
}

TEST(FailureBench, Criterion) {
  const auto o = criteria::failure_bench(1);
  EXPECT_TRUE(o.ok) << o.detail;
}

// ---------------------------------------------------------------------------
// Stage store and run log

TEST(StageStore, WriteOnce) {
  support::TempDir dir("store");
  StageStore store(dir.path());
  StageOutput s;
  s.id = "s1";
  s.tool = "pagerank";
  s.status = StageStatus::Skipped;
  s.skip_reason = "gate false";
  auto rec = store.put(s);
  EXPECT_EQ(store.get("s1"), rec);
  EXPECT_EQ(code_of([&] { store.put(s); }), ErrorCode::WriteOnceViolation);
  EXPECT_EQ(store.get("s1")->skip_reason, "gate false");
  const auto raw = json::parse(text::read_file(dir / "s1/raw.json"));
  EXPECT_EQ(raw["status"], "Skipped");
  EXPECT_EQ(raw["reason"], "gate false");
  EXPECT_EQ(json::parse(text::read_file(dir / "s1/distilled.json"))["summary_text"], nullptr);
}

TEST(StageStore, ConcurrentReadersSeeCompleteRecords) {
  StageStore store;
  std::atomic<bool> done{false};
  std::atomic<int> bad{0};
  std::thread reader([&] {
    while (!done) {
      for (const auto& id : store.ids()) {
        auto r = store.get(id);
        if (!r || r->tool != "t" + id) ++bad;
      }
    }
  });
  for (int i = 0; i < 500; ++i) {
    StageOutput s;
    s.id = std::to_string(i);
    s.tool = "t" + s.id;
    store.put(std::move(s));
  }
  done = true;
  reader.join();
  EXPECT_EQ(bad, 0);
  EXPECT_EQ(store.ids().size(), 500u);
}

TEST(RunLog, SequencedEvents) {
  support::TempDir dir("log");
  {
    RunLog log(dir / "run.log");
    log.event("a", {{"x", 1}});
    log.event("b");
    log.event("a");
    EXPECT_EQ(log.events("a").size(), 2u);
    EXPECT_EQ(log.events().size(), 3u);
  }
  std::istringstream in(text::read_file(dir / "run.log"));
  std::string line;
  for (int seq = 0; std::getline(in, line); ++seq) EXPECT_EQ(json::parse(line)["seq"], seq);
}

// ---------------------------------------------------------------------------
// DAG execution

namespace {

struct ExecFixture {
  std::shared_ptr<const graph::PropertyGraph> pg;
  tools::ToolRegistry registry = tools::default_registry();

  ExecFixture() {
    const auto cat = graph::load_catalog(support::fixture("transfers"));
    pg = std::make_shared<const graph::PropertyGraph>(
        graph::extract(cat, graph::derive_schema_from_roles("detect fraud between accounts", cat)));
  }
  ExecContext ctx(int width) {
    ExecContext c;
    c.registry = &registry;
    c.sources = source_graphs(pg);
    c.width = width;
    return c;
  }
};

planner::TaskNode node(std::string id, std::string tool, std::map<std::string, Binding> inputs, json params = json::object()) {
  planner::TaskNode n;
  n.id = std::move(id);
  n.tool = std::move(tool);
  n.inputs = std::move(inputs);
  n.params = std::move(params);
  return n;
}

planner::TaskDag with_report(std::vector<planner::TaskNode> nodes, const tools::ToolRegistry& reg) {
  planner::TaskDag dag;
  planner::TaskNode r;
  r.id = "report";
  r.tool = "report";
  r.terminal = true;
  for (const auto& n : nodes) r.inputs[n.id] = Binding::stage(n.id);
  dag.nodes = std::move(nodes);
  dag.nodes.push_back(r);
  dag.edges = planner::derive_edges(dag, reg);
  return dag;
}

std::map<std::string, std::string> snapshot(const StageStore& store) {
  std::map<std::string, std::string> out;
  for (const auto& id : store.ids()) {
    auto raw = raw_json(*store.get(id));
    raw.erase("timing");
    out[id] = dump(raw) + dump(distilled_json(*store.get(id)));
  }
  return out;
}

}  // namespace

TEST(ExecuteDag, WideDagIsConfluent) {
  ExecFixture f;
  const auto dag = with_report(
      {node("a", "pagerank", {{"graph", Binding::source("transfer")}}),
       node("b", "connected_components", {{"graph", Binding::source("transfer")}}, {{"mode", "strong"}}),
       node("c", "enumerate_cycles", {{"graph", Binding::source("transfer")}}),
       node("d", "aggregate_flows", {{"graph", Binding::stage("c", "induced_subgraph")}}),
       node("e", "top_k", {{"scores", Binding::stage("a")}}, {{"k", 2}}),
       node("f", "khop", {{"graph", Binding::source("transfer")}, {"seeds", Binding::stage("e")}}, {{"k", 1}}),
       node("g", "personalized_pagerank", {{"graph", Binding::source("transfer")}, {"seed", Binding::stage("e", "top1")}})},
      f.registry);
  ASSERT_TRUE(planner::validate_dag(dag, f.registry).empty());

  std::optional<std::map<std::string, std::string>> reference;
  for (int width : {1, 2, 3, 4, 8}) {
    for (int rep = 0; rep < 3; ++rep) {
      auto ctx = f.ctx(width);
      StageStore store;
      const auto rep_out = execute_dag(dag, ctx, store);
      EXPECT_TRUE(rep_out.feedback.empty());
      EXPECT_EQ(store.ids().size(), 7u);
      const auto snap = snapshot(store);
      if (!reference) reference = snap;
      EXPECT_EQ(snap, *reference) << "width " << width;
    }
  }
}

TEST(ExecuteDag, FalseGateSkipsDownstream) {
  ExecFixture f;
  auto gated = node("b", "aggregate_flows", {{"graph", Binding::stage("a", "induced_subgraph")}});
  gated.gate = Binding::stage("a", "nonempty");
  auto after = node("c", "aggregate_flows", {{"graph", Binding::stage("b", "induced_subgraph")}});
  // min_weight above every amount leaves no cycles.
  const auto dag = with_report(
      {node("a", "enumerate_cycles", {{"graph", Binding::source("transfer")}}, {{"min_weight", 1e9}}), gated,
       node("z", "pagerank", {{"graph", Binding::source("transfer")}})},
      f.registry);
  auto ctx = f.ctx(2);
  StageStore store;
  Verdicts verdicts;
  auto first = execute_dag(dag, ctx, store, verdicts);
  ASSERT_EQ(first.feedback.size(), 1u);
  EXPECT_EQ(first.feedback[0].node_id, "a");
  EXPECT_EQ(first.feedback[0].outcome, planner::Outcome::LowQuality);
  EXPECT_EQ(first.blocked, (std::vector<std::string>{"b"}));
  EXPECT_FALSE(store.contains("b"));
  EXPECT_TRUE(store.contains("z"));

  verdicts.accepted.insert("a");
  auto second = execute_dag(dag, ctx, store, verdicts);
  EXPECT_TRUE(second.feedback.empty());
  ASSERT_TRUE(store.contains("b"));
  EXPECT_EQ(store.get("b")->status, StageStatus::Skipped);
  EXPECT_NE(store.get("b")->skip_reason.find("gate a.nonempty is false"), std::string::npos);
}

TEST(ExecuteDag, SkipPropagatesAndErrorsBlock) {
  ExecFixture f;
  auto gated = node("b", "pagerank", {{"graph", Binding::source("transfer")}});
  gated.gate = Binding::value(false);
  const auto dag = with_report({node("a", "khop", {{"graph", Binding::source("transfer")}, {"seed", Binding::value("nobody")}}),
                                gated, node("c", "top_k", {{"scores", Binding::stage("b")}}),
                                node("d", "top_k", {{"scores", Binding::stage("a")}})},
                               f.registry);
  auto ctx = f.ctx(4);
  StageStore store;
  const auto r = execute_dag(dag, ctx, store);
  EXPECT_EQ(store.get("a")->status, StageStatus::Error);
  EXPECT_EQ(store.get("a")->error["cause"], "InvalidNode");
  EXPECT_EQ(store.get("b")->status, StageStatus::Skipped);
  EXPECT_EQ(store.get("c")->status, StageStatus::Skipped);
  EXPECT_EQ(store.get("c")->skip_reason, "producer b was skipped");
  EXPECT_FALSE(store.contains("d"));
  ASSERT_EQ(r.feedback.size(), 1u);
  EXPECT_EQ(r.feedback[0].detail["error_class"], "InvalidNode");
}

TEST(ExecuteDag, InjectedFaultsFireOnce) {
  ExecFixture f;
  const auto dag = with_report({node("a", "pagerank", {{"graph", Binding::source("transfer")}})}, f.registry);
  auto ctx = f.ctx(1);
  ctx.faults = {{"a", "ParameterOutOfRange", "damping", 1}};
  StageStore s1, s2;
  auto r = execute_dag(dag, ctx, s1);
  ASSERT_EQ(r.feedback.size(), 1u);
  EXPECT_EQ(r.feedback[0].detail["error_class"], "ParameterOutOfRange");
  EXPECT_EQ(r.feedback[0].detail["param"], "damping");
  EXPECT_TRUE(execute_dag(dag, ctx, s2).feedback.empty());
}

// ---------------------------------------------------------------------------
// Whole runs

namespace {

struct RunFixture {
  support::TempDir dir{"run"};
  std::filesystem::path data = dir / "data";

  explicit RunFixture(const std::string& cycles = "3;4;5") { write_dataset(generate_dataset(small_spec(cycles)), data); }
  RunConfig config(const std::string& id) { return criteria::run_config(data, dir / "runs", id, 3, 4); }
};

}  // namespace

TEST(Run, AmlQueryWritesRunDirectory) {
  RunFixture fx;
  coord::MockCoordinator mock;
  const auto out = run(criteria::kAmlQuery, fx.config("r"), mock);
  ASSERT_EQ(out.exit_code, 0) << out.error;
  for (const char* f : {"plan.json", "run.log", "report.md", "report.json", "stages/s1/raw.json", "stages/s4/distilled.json"})
    EXPECT_TRUE(std::filesystem::exists(out.run_dir / f)) << f;

  const auto plan = json::parse(text::read_file(out.run_dir / "plan.json"));
  EXPECT_EQ(plan["dag"]["nodes"].size(), 5u);
  EXPECT_EQ(plan["trace"]["stages"].size(), 4u);
  EXPECT_TRUE(plan["revisions"].empty());

  const auto report = json::parse(text::read_file(out.run_dir / "report.json"));
  EXPECT_EQ(report["verdict"]["focus"], "Anna Lee");
  EXPECT_EQ(report["verdict"]["flagged_cycles"].size(), 3u);
  EXPECT_EQ(report["verdict"]["focus_cycle_count"], 3);
  EXPECT_EQ(report["evidence"].size(), 4u);
  for (const auto& c : report["claims"]) {
    ASSERT_FALSE(c["cites"].empty());
    for (const auto& id : c["cites"]) EXPECT_TRUE(out.dag->find(id.get<std::string>())) << id;
  }
  const auto md = text::read_file(out.run_dir / "report.md");
  for (const char* section : {"## Verdict", "## Findings", "## Evidence", "### s1:", "### s4:"})
    EXPECT_NE(md.find(section), std::string::npos) << section;

  // Stage events come in completion order with increasing sequence numbers.
  const auto done = log_events(out.run_dir, "stage_done");
  ASSERT_EQ(done.size(), 4u);
  EXPECT_EQ(done[0]["node"], "s1");
  EXPECT_EQ(log_events(out.run_dir, "run_done").size(), 1u);
}

TEST(Run, EmptyCycleStageIsRefinedThenGateSkips) {
  RunFixture fx("none");
  coord::MockCoordinator mock;
  const auto out = run(criteria::kAmlQuery, fx.config("r"), mock);
  ASSERT_EQ(out.exit_code, 0) << out.error;
  EXPECT_EQ(out.refinement_rounds, 2);  // widen max_len to 8, then accept
  const auto* cycles = out.dag->find("s2_r1");
  ASSERT_NE(cycles, nullptr);
  EXPECT_EQ(cycles->params["max_len"], 8);
  EXPECT_EQ(out.dag->find("s3")->gate, Binding::stage("s2_r1", "nonempty"));
  // The original attempt stays on disk under its own id.
  EXPECT_TRUE(std::filesystem::exists(out.run_dir / "stages/s2/raw.json"));
  EXPECT_EQ(json::parse(text::read_file(out.run_dir / "stages/s3/raw.json"))["status"], "Skipped");
  EXPECT_EQ(out.report->skipped.size(), 1u);
  EXPECT_EQ(out.report->verdict["flagged_cycles"].size(), 0u);
  EXPECT_NE(out.report->markdown.find("## Skipped stages"), std::string::npos);
  EXPECT_EQ(json::parse(text::read_file(out.run_dir / "plan.json"))["revisions"].size(), 2u);
}

TEST(Run, ParameterFaultIsRepaired) {
  RunFixture fx;
  auto cfg = fx.config("fault");
  cfg.faults = {{"s2", "ParameterOutOfRange", "max_len", 1}};
  coord::MockCoordinator mock;
  const auto out = run(criteria::kAmlQuery, cfg, mock);
  ASSERT_EQ(out.exit_code, 0) << out.error;
  EXPECT_EQ(out.refinement_rounds, 1);
  ASSERT_NE(out.dag->find("s2_r1"), nullptr);
  EXPECT_EQ(out.dag->find("s2_r1")->params["max_len"], 6);
  EXPECT_EQ(json::parse(text::read_file(out.run_dir / "stages/s2/raw.json"))["status"], "Error");
  EXPECT_EQ(out.report->verdict["flagged_cycles"].size(), 3u);
  const auto refinements = log_events(out.run_dir, "refinement");
  ASSERT_EQ(refinements.size(), 1u);
  EXPECT_EQ(refinements[0]["actions"][0]["op"], "reset_param");
}

TEST(Run, UnrepairableFaultFailsExecution) {
  RunFixture fx;
  auto cfg = fx.config("fault");
  cfg.faults = {{"s1", "Timeout", "", 1}};
  coord::MockCoordinator mock;
  const auto out = run(criteria::kAmlQuery, cfg, mock);
  EXPECT_EQ(out.exit_code, kExitExecution);
  EXPECT_EQ(out.phase, "execute");
  EXPECT_EQ(out.stage, "s1");
  EXPECT_TRUE(std::filesystem::exists(out.run_dir / "plan.json"));
  EXPECT_FALSE(std::filesystem::exists(out.run_dir / "report.md"));
  EXPECT_EQ(log_events(out.run_dir, "run_failed").size(), 1u);
}

TEST(Run, RepeatedFaultsExhaustRefinement) {
  RunFixture fx;
  auto cfg = fx.config("fault");
  cfg.max_rounds = 1;
  cfg.faults = {{"s2", "ParameterOutOfRange", "max_len", 1}, {"s2_r1", "ParameterOutOfRange", "max_len", 1}};
  coord::MockCoordinator mock;
  const auto out = run(criteria::kAmlQuery, cfg, mock);
  EXPECT_EQ(out.exit_code, kExitExecution);
  EXPECT_NE(out.error.find("RefinementExhausted"), std::string::npos) << out.error;
}

TEST(Run, MissingToolIsAPlanningFailure) {
  RunFixture fx;
  coord::MockCoordinator mock;
  const auto out = run("classify accounts with a graph neural network", fx.config("gnn"), mock);
  EXPECT_EQ(out.exit_code, kExitPlanning);
  EXPECT_EQ(out.stage, "s1");
  const auto req = json::parse(text::read_file(out.run_dir / "expansion_requests.jsonl"));
  EXPECT_EQ(req["requesting_task"], "s1");
  const auto plan = json::parse(text::read_file(out.run_dir / "plan.json"));
  EXPECT_TRUE(plan["dag"].is_null());
  EXPECT_EQ(plan["trace"]["stages"].size(), 1u);
}

TEST(Run, ConfigurationErrors) {
  RunFixture fx;
  coord::MockCoordinator mock;
  auto cfg = fx.config("bad");
  cfg.kb_path = fx.dir / "missing.json";
  EXPECT_EQ(run("rank accounts", cfg, mock).exit_code, kExitConfig);
  cfg = fx.config("bad");
  cfg.data_dir = fx.dir / "nowhere";
  EXPECT_EQ(run("rank accounts", cfg, mock).exit_code, kExitConfig);

  // A non-empty directory that is not a run directory is left alone.
  cfg = fx.config("precious");
  text::write_file(cfg.run_dir() / "notes.txt", "keep");
  EXPECT_EQ(run("rank accounts", cfg, mock).exit_code, kExitConfig);
  EXPECT_EQ(text::read_file(cfg.run_dir() / "notes.txt"), "keep");
}

TEST(Run, RerunReplacesPreviousRunDirectory) {
  RunFixture fx;
  coord::MockCoordinator mock;
  const auto cfg = fx.config("again");
  ASSERT_EQ(run(criteria::kAmlQuery, cfg, mock).exit_code, 0);
  ASSERT_EQ(run("rank accounts by importance", cfg, mock).exit_code, 0);
  EXPECT_FALSE(std::filesystem::exists(cfg.run_dir() / "stages/s2"));
}

TEST(Run, ContextBudgetIsEnforced) {
  RunFixture fx;
  coord::MockCoordinator tiny(200);
  const auto out = run(criteria::kAmlQuery, fx.config("tiny"), tiny);
  EXPECT_NE(out.exit_code, 0);
  EXPECT_NE(out.error.find("BudgetExceeded"), std::string::npos) << out.error;
}

TEST(Run, AmlCriterion) {
  const auto o = criteria::aml_case_study(11);
  EXPECT_TRUE(o.ok) << o.detail;
}

TEST(Run, DeterminismCriterion) {
  const auto o = criteria::determinism_confluence(5);
  EXPECT_TRUE(o.ok) << o.detail;
}

// ---------------------------------------------------------------------------
// Configuration

TEST(Config, OverlayAndValidation) {
  const auto c = config_from_json(json::parse(R"({"data":"d","kb":"k.json","width":2,"seed":9,
      "budget":{"max_items":5,"max_chars":300,"context_chars":9000},
      "faults":[{"node":"s2","param":"max_len"}]})"));
  EXPECT_EQ(c.data_dir, "d");
  EXPECT_EQ(c.width, 2);
  EXPECT_EQ(c.budget.max_items, 5u);
  EXPECT_EQ(c.context_budget, 9000u);
  ASSERT_EQ(c.faults.size(), 1u);
  EXPECT_EQ(c.faults[0].error_class, "ParameterOutOfRange");
  EXPECT_EQ(c.faults[0].times, 1);
  EXPECT_EQ(c.run_dir(), std::filesystem::path("runs/run-9"));

  for (const char* bad : {R"([])", R"({"width":0})", R"({"coordinator":"oracle"})", R"({"budget":{"max_chars":0}})",
                          R"({"faults":[{"param":"x"}]})", R"({"seed":"nine"})", R"({"max_rounds":-1})"})
    EXPECT_EQ(code_of([&] { config_from_json(json::parse(bad)); }), ErrorCode::ConfigError) << bad;

  support::TempDir dir("cfg");
  text::write_file(dir / "c.json", "{not json");
  EXPECT_EQ(code_of([&] { load_config(dir / "c.json"); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([&] { load_config(dir / "none.json"); }), ErrorCode::ConfigError);
}

TEST(Config, SampleConfigsLoad) {
  for (const auto& e : std::filesystem::directory_iterator(support::source_dir() / "samples"))
    if (e.path().extension() == ".json" && e.path().filename().string().rfind("config", 0) == 0) {
      EXPECT_NO_THROW(load_config(e.path())) << e.path();
    }
}

// ---------------------------------------------------------------------------
// Command line

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    if (std::string(AAG_CLI_PATH).empty()) GTEST_SKIP() << "CLI not built";
  }
  support::TempDir dir{"cli"};
  std::string kb() const { return (support::source_dir() / "kb/knowledge.json").string(); }
};

TEST_F(Cli, GenerateRunAndExitCodes) {
  const auto data = (dir / "data").string();
  ASSERT_EQ(run_cli("gen-data --users 150 --txns 1200 --cycles '3;4' --seed 4 -o '" + data + "'", dir / "gen.txt"), 0);
  EXPECT_NE(text::read_file(dir / "gen.txt").find("2 planted cycles, 2 cycles above 10000.00"), std::string::npos);

  const auto common = " --data '" + data + "' --kb '" + kb() + "' --out '" + (dir / "runs").string() + "'";
  EXPECT_EQ(run_cli("run --query \"" + std::string(criteria::kAmlQuery) + "\"" + common + " --run-id ok", dir / "ok.txt"), 0)
      << text::read_file(dir / "ok.txt");
  EXPECT_TRUE(std::filesystem::exists(dir / "runs/ok/report.md"));
  EXPECT_EQ(run_cli("run --query 'classify accounts with a graph neural network'" + common + " --run-id gnn", dir / "gnn.txt"), 2);
  EXPECT_NE(text::read_file(dir / "gnn.txt").find("NoToolForStage"), std::string::npos);
  EXPECT_EQ(run_cli("run --query 'rank accounts' --data '" + (dir / "nothing").string() + "' --kb '" + kb() + "' --out '" +
                        (dir / "runs").string() + "'",
                    dir / "nodata.txt"),
            4);
  EXPECT_EQ(run_cli("run --query x --data '" + data + "'", dir / "nokb.txt"), 4);
  EXPECT_EQ(run_cli("run --query x --width 0", dir / "w.txt"), 4);
  EXPECT_EQ(run_cli("frobnicate", dir / "u.txt"), 4);

  text::write_file(dir / "fault.json", R"({"faults":[{"node":"s1","error_class":"Timeout"}]})");
  EXPECT_EQ(run_cli("run --query \"" + std::string(criteria::kAmlQuery) + "\"" + common + " --config '" +
                        (dir / "fault.json").string() + "' --run-id fault",
                    dir / "fault.txt"),
            3);
}

TEST_F(Cli, ToolsAndBench) {
  ASSERT_EQ(run_cli("tools list --json", dir / "tools.json"), 0);
  EXPECT_EQ(json::parse(text::read_file(dir / "tools.json")), tools::default_registry().describe_all());
  ASSERT_EQ(run_cli("tools list", dir / "tools.txt"), 0);
  EXPECT_NE(text::read_file(dir / "tools.txt").find("enumerate_cycles"), std::string::npos);
  ASSERT_EQ(run_cli("bench-failure --stages 4 --p 0.9 --trials 10000", dir / "bench.json"), 0);
  const auto b = json::parse(text::read_file(dir / "bench.json"));
  EXPECT_EQ(b["exact_success"], 0.6561);
  EXPECT_EQ(run_cli("bench-failure --p 2", dir / "bad.txt"), 4);
}

TEST_F(Cli, KbBuildRoundTrip) {
  const auto out = dir / "kb.json";
  ASSERT_EQ(run_cli("kb build '" + (support::source_dir() / "kb/docs").string() + "' -o '" + out.string() + "'",
                    dir / "kb.txt"),
            0)
      << text::read_file(dir / "kb.txt");
  EXPECT_EQ(kb::load(out).nodes().size(), kb::load(support::source_dir() / "kb/knowledge.json").nodes().size());
}
