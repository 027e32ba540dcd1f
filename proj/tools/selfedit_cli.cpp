#include <atomic>
#include <chrono>
#include <csignal>
#include <iostream>
#include <optional>
#include <thread>

#include <CLI11.hpp>

#include "selfedit/core/error.hpp"
#include "selfedit/experiment/config.hpp"
#include "selfedit/experiment/report.hpp"
#include "selfedit/experiment/runner.hpp"
#include "selfedit/remote/stub_server.hpp"

namespace {

using namespace selfedit;
using namespace selfedit::experiment;

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop = true; }

int print_error(const std::exception& e) {
  std::cerr << "error: " << e.what() << '\n';
  return kExitConfigError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-editing language model experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out;

  auto* run = app.add_subcommand("run", "Run an experiment from a config file");
  run->add_option("--config", config_path, "JSON or YAML config")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Override the global seed");
  run->add_option("--workers", workers, "Cap on parallel inner-loop jobs")->check(CLI::PositiveNumber);
  run->add_option("--out", out, "Override the output directory");

  auto* validate = app.add_subcommand("validate-config", "Check a config and print its canonical form");
  validate->add_option("--config", config_path, "JSON or YAML config")->required()->check(CLI::ExistingFile);

  std::string results_dir;
  auto* report = app.add_subcommand("report", "Write tables and plot data for a results directory");
  report->add_option("--out,results", results_dir, "Results directory")->required();

  int port = 8080;
  std::string host = "127.0.0.1";
  std::string reply = "ok";
  auto* stub = app.add_subcommand("stub-server", "Serve the protocol stub used by contract tests");
  stub->add_option("--port", port, "Port, 0 picks a free one");
  stub->add_option("--host", host, "Bind address");
  stub->add_option("--reply", reply, "Canned chat reply");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    RunConfig config;
    try {
      config = load_config(config_path);
    } catch (const Error& e) {
      return print_error(e);
    }
    if (seed) config.seed = *seed;
    if (workers) config.loop.workers = *workers;
    if (!out.empty()) config.output_dir = out;
    try {
      const auto outcome = run_experiment(config, &std::cerr);
      std::cout << outcome.output_dir.string() << '\n';
      return outcome.exit_code;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 1;
    }
  }

  if (validate->parsed()) {
    try {
      std::cout << to_json(load_config(config_path)).dump(2) << '\n';
      return kExitOk;
    } catch (const Error& e) {
      return print_error(e);
    }
  }

  if (report->parsed()) {
    try {
      for (const auto& path : write_report(results_dir)) std::cout << path.string() << '\n';
      return kExitOk;
    } catch (const Error& e) {
      return print_error(e);
    }
  }

  if (stub->parsed()) {
    remote::StubScript script;
    script.canned_reply = reply;
    remote::StubServer server(std::move(script));
    try {
      server.start(port, host);
    } catch (const Error& e) {
      return print_error(e);
    }
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cout << server.base_url() << std::endl;
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    server.stop();
    return kExitOk;
  }
  return kExitOk;
}
