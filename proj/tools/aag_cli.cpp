// aag: command-line front end.
//
//   aag run --query "..." --data <dir> --kb <file> --config <file> [--coordinator mock|remote] [--seed N]
//   aag kb build <docs-dir> -o <file>
//   aag tools list [--json]
//   aag serve [--socket <path> | --stdio]
//   aag gen-data --users N --txns M --cycles <spec> --seed S -o <dir>
//   aag bench-failure --stages S --p P --trials T [--seed S]
//
// Exit codes: 0 success, 2 planning failure, 3 execution failure,
// 4 configuration or data error.

#include <pthread.h>
#include <csignal>
#include <cstdio>
#include <iostream>
#include <memory>
#include <thread>

#include <CLI11.hpp>

#include "aag/aag.hpp"
#include "aag/coordinator/remote.hpp"

namespace {

using namespace aag;

int cmd_run(const std::string& query, const std::string& data, const std::string& kb_path, const std::string& config_path,
            const std::string& coordinator_override, std::optional<std::uint64_t> seed, std::optional<int> width,
            const std::string& out_dir, const std::string& run_id) {
  pipeline::RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = pipeline::load_config(config_path);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return pipeline::kExitConfig;
  }
  if (!data.empty()) cfg.data_dir = data;
  if (!kb_path.empty()) cfg.kb_path = kb_path;
  if (!coordinator_override.empty()) cfg.coordinator = coordinator_override;
  if (seed) cfg.seed = *seed;
  if (width) cfg.width = *width;
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  if (!run_id.empty()) cfg.run_id = run_id;

  std::unique_ptr<coord::Coordinator> coordinator;
  try {
    if (cfg.data_dir.empty() || cfg.kb_path.empty()) fail(ErrorCode::ConfigError, "--data and --kb are required");
    if (cfg.coordinator == "remote")
      coordinator = std::make_unique<coord::RemoteCoordinator>(coord::remote_config_from_json(cfg.remote),
                                                               cfg.context_budget);
    else if (cfg.coordinator == "mock")
      coordinator = std::make_unique<coord::MockCoordinator>(cfg.context_budget);
    else
      fail(ErrorCode::ConfigError, "unknown coordinator '" + cfg.coordinator + "'");
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return pipeline::kExitConfig;
  }

  auto out = pipeline::run(query, cfg, *coordinator);
  if (out.exit_code != pipeline::kExitOk) {
    std::cerr << "run failed in " << out.phase;
    if (!out.stage.empty()) std::cerr << " (" << out.stage << ")";
    std::cerr << ": " << out.error << "\n";
    std::cerr << "partial run directory: " << out.run_dir.string() << "\n";
    return out.exit_code;
  }
  std::cout << "run directory: " << out.run_dir.string() << "\n";
  std::cout << "stages: " << out.dag->stages().size() << ", refinement rounds: " << out.refinement_rounds << "\n";
  std::cout << "report: " << (out.run_dir / "report.md").string() << "\n";
  return pipeline::kExitOk;
}

int cmd_kb_build(const std::string& docs, const std::string& output) {
  try {
    auto kg = kb::build_from_docs(docs, output);
    std::size_t algorithms = kg.ids_at(kb::Level::Algorithm).size();
    std::cout << "wrote " << output << ": " << kg.nodes().size() << " nodes (" << algorithms << " algorithms)\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return pipeline::kExitConfig;
  }
}

int cmd_tools_list(bool as_json) {
  const auto reg = tools::default_registry();
  if (as_json) {
    std::cout << dump(reg.describe_all(), 2) << "\n";
    return 0;
  }
  for (const auto* d : reg.descriptors()) {
    std::vector<std::string> inputs;
    for (const auto& s : d->inputs)
      inputs.push_back(s.name + ":" + std::string(tools::to_string(s.kind)) + (s.required ? "" : "?"));
    std::printf("%-22s %-22s %-11s (%s)\n", d->name.c_str(), d->family.c_str(),
                std::string(tools::to_string(d->output_kind)).c_str(), text::join(inputs, ", ").c_str());
  }
  return 0;
}

int cmd_serve(const std::string& socket_path) {
  const auto reg = tools::default_registry();
  tools::RpcServer rpc(reg);
  if (socket_path.empty()) {
    rpc.serve_stream(std::cin, std::cout);
    return 0;
  }
  // Signals are taken synchronously by one thread so stop() never runs
  // inside a handler.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);
  try {
    tools::SocketServer server(rpc, socket_path);
    std::thread waiter([&] {
      int sig = 0;
      sigwait(&signals, &sig);
      server.stop();
    });
    std::cerr << "listening on " << socket_path << "\n";
    waiter.join();
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return pipeline::kExitConfig;
  }
}

int cmd_gen_data(pipeline::DatagenSpec spec, const std::string& cycles, const std::string& out) {
  try {
    spec.planted = pipeline::parse_cycle_specs(cycles);
    const auto ds = pipeline::generate_dataset(spec);
    pipeline::write_dataset(ds, out);
    std::cout << "wrote " << out << ": " << ds.users.size() << " users, " << ds.txns.size() << " transactions, "
              << ds.manifest["planted"].size() << " planted cycles, " << ds.manifest["above_threshold_cycles"].size()
              << " cycles above " << text::fmt_amount(spec.threshold) << "\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return pipeline::kExitConfig;
  }
}

int cmd_bench(int stages, double p, std::uint64_t trials, std::uint64_t seed) {
  try {
    std::cout << dump(pipeline::to_json(pipeline::failure_bench(stages, p, trials, seed)), 2) << "\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return pipeline::kExitConfig;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Analytics-augmented graph analysis: plan, run and report graph analytics for a question"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Answer a query against a dataset");
  std::string query, data, kb_path, config_path, coordinator, out_dir, run_id;
  std::optional<std::uint64_t> seed;
  std::optional<int> width;
  run->add_option("--query,-q", query, "Natural-language question")->required();
  run->add_option("--data", data, "Dataset directory with catalog.json");
  run->add_option("--kb", kb_path, "Knowledge file (from `kb build`)");
  run->add_option("--config", config_path, "Run configuration JSON");
  run->add_option("--coordinator", coordinator, "mock or remote")->check(CLI::IsMember({"mock", "remote"}));
  run->add_option("--seed", seed, "Random seed");
  run->add_option("--width", width, "Concurrent stages")->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "Parent directory of run directories");
  run->add_option("--run-id", run_id, "Run directory name (default run-<seed>)");

  auto* kb = app.add_subcommand("kb", "Knowledge base utilities");
  kb->require_subcommand(1);
  auto* kb_build = kb->add_subcommand("build", "Compile markdown documents into a knowledge file");
  std::string docs_dir, kb_out;
  kb_build->add_option("docs", docs_dir, "Documents directory")->required();
  kb_build->add_option("-o,--output", kb_out, "Output knowledge file")->required();

  auto* tools_cmd = app.add_subcommand("tools", "Tool registry");
  tools_cmd->require_subcommand(1);
  auto* tools_list = tools_cmd->add_subcommand("list", "List registered tools");
  bool as_json = false;
  tools_list->add_flag("--json", as_json, "Print full descriptors");

  auto* serve = app.add_subcommand("serve", "Serve the tool registry over JSON-RPC");
  std::string socket_path;
  bool stdio = false;
  auto* sock_opt = serve->add_option("--socket", socket_path, "Unix socket path");
  serve->add_flag("--stdio", stdio, "Serve on stdin/stdout (default)")->excludes(sock_opt);

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic transfer dataset with planted cycles");
  pipeline::DatagenSpec spec;
  std::string cycles = "3;4;5;3;4", gen_out;
  gen->add_option("--users", spec.users, "Number of accounts")->capture_default_str();
  gen->add_option("--txns", spec.txns, "Number of transactions")->capture_default_str();
  gen->add_option("--cycles", cycles, "Planted cycles: len[:lo-hi][@a|b|...] joined by ';', or none")
      ->capture_default_str();
  gen->add_option("--seed", spec.seed, "Random seed")->capture_default_str();
  gen->add_option("--threshold", spec.threshold, "Amount separating background from planted")->capture_default_str();
  gen->add_option("--focus", spec.focus, "Account on every generated cycle")->capture_default_str();
  gen->add_option("-o,--output", gen_out, "Output directory")->required();

  auto* bench = app.add_subcommand("bench-failure", "Monte-Carlo compounding failure of chained stages");
  int stages = 4;
  double p = 0.9;
  std::uint64_t trials = 10000, bench_seed = 0;
  bench->add_option("--stages", stages, "Stages in the chain")->capture_default_str();
  bench->add_option("--p", p, "Per-stage success probability")->capture_default_str();
  bench->add_option("--trials", trials, "Trials")->capture_default_str();
  bench->add_option("--seed", bench_seed, "Random seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : pipeline::kExitConfig;
  }

  if (run->parsed()) return cmd_run(query, data, kb_path, config_path, coordinator, seed, width, out_dir, run_id);
  if (kb_build->parsed()) return cmd_kb_build(docs_dir, kb_out);
  if (tools_list->parsed()) return cmd_tools_list(as_json);
  if (serve->parsed()) return cmd_serve(socket_path);
  if (gen->parsed()) return cmd_gen_data(spec, cycles, gen_out);
  if (bench->parsed()) return cmd_bench(stages, p, trials, bench_seed);
  return pipeline::kExitConfig;
}
