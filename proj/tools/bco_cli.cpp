#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "bco/runner.hpp"

namespace {

int run_command(const std::string& config_path, const std::string& output_dir, unsigned parallel) {
  auto config = bco::runner::load_config(config_path);
  if (!output_dir.empty()) config.output_dir = output_dir;
  bco::runner::run_experiment(config, parallel);
  std::cout << "wrote " << config.output_dir << "\n";
  return 0;
}

int summarize_command(const std::string& input_dir, bool write) {
  const auto rows = bco::runner::summarize(input_dir);
  const auto text = bco::runner::format_summary_csv(rows);
  if (write) {
    const auto path = std::filesystem::path(input_dir) / "summary.csv";
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!(out << text)) throw bco::Error("cannot write " + path.string());
  }
  std::cout << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-point bandit convex optimisation with hard constraints: experiment runner"};
  app.require_subcommand(1);

  std::string config_path, output_dir;
  unsigned parallel = 1;
  auto* run = app.add_subcommand("run", "Run every configured (algorithm, seed, T) and write traces and a summary");
  run->add_option("--config", config_path, "TOML config file")->required()->check(CLI::ExistingFile);
  run->add_option("--output-dir", output_dir, "Override run.output_dir");
  run->add_option("--parallel", parallel, "Concurrent runs")->check(CLI::PositiveNumber);

  std::string input_dir;
  bool no_write = false;
  auto* summarize = app.add_subcommand("summarize", "Recompute the summary table from a directory of traces");
  summarize->add_option("--input-dir", input_dir, "Directory written by `run`")->required();
  summarize->add_flag("--no-write", no_write, "Print only; leave summary.csv untouched");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return run_command(config_path, output_dir, parallel);
    return summarize_command(input_dir, !no_write);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
