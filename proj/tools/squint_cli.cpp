// Command-line driver: run experiments, audit their output, inspect concept
// classes and learning-rate grids.
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "squint/bounds.hpp"
#include "squint/harness.hpp"
#include "squint/polytopes.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_run(const std::string& config_path, std::string csv, std::string summary) {
  using namespace squint::harness;
  const auto config = ExperimentConfig::load(config_path);
  if (csv.empty()) csv = config.csv_path;
  if (summary.empty()) summary = config.summary_path;
  const auto result = run_experiment(config);
  const auto text = format_csv(result);
  if (csv.empty()) {
    std::cout << text;
  } else {
    write_text(csv, text);
  }
  const auto summary_text = result.summary.dump(2) + "\n";
  if (summary.empty()) {
    std::cerr << summary_text;
  } else {
    write_text(summary, summary_text);
  }
  if (result.violations > 0) {
    std::cerr << "violations: " << result.violations << "\n";
    return 1;
  }
  return 0;
}

int cmd_audit(const std::string& csv_path, const std::string& config_path) {
  using namespace squint::harness;
  std::optional<ExperimentConfig> config;
  if (!config_path.empty()) config = ExperimentConfig::load(config_path);
  const auto report = audit_csv(slurp(csv_path), config ? &*config : nullptr);
  for (const auto& f : report.failures) std::cout << "FAIL " << f << "\n";
  std::cout << "rows " << report.rows << ", bound checks " << report.checks << ", failures "
            << report.failures.size() << "\n";
  return report.ok() ? 0 : 1;
}

int cmd_enumerate(const std::string& class_path, std::size_t cap) {
  using namespace squint::polytopes;
  const auto cls = ConceptClass::from_json(nlohmann::json::parse(slurp(class_path)));
  for (const auto& c : enumerate_vertices(cls, cap)) {
    for (auto b : c) std::cout << static_cast<int>(b);
    std::cout << "\n";
  }
  return 0;
}

int cmd_grid(std::uint64_t T) {
  const std::size_t n = squint::bounds::grid_size(T);
  std::cout << "size " << n << "\n";
  for (std::size_t i = 1; i <= n; ++i) std::cout << "2^-" << i << " " << std::ldexp(1.0, -static_cast<int>(i)) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Squint, iProd and Component iProd experiment harness"};
  app.require_subcommand(1);

  std::string config_path, csv_out, summary_out;
  auto* run = app.add_subcommand("run", "Run an experiment config");
  run->add_option("config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--csv", csv_out, "Per-round CSV output (overrides the config)");
  run->add_option("--summary", summary_out, "JSON summary output (overrides the config)");

  std::string audit_csv_path, audit_config;
  auto* audit = app.add_subcommand("audit", "Re-check bound columns of a run CSV");
  audit->add_option("csv", audit_csv_path, "CSV written by 'run'")->required()->check(CLI::ExistingFile);
  audit->add_option("--config", audit_config, "Config that produced the CSV; enables full recomputation")
      ->check(CLI::ExistingFile);

  std::string class_path;
  std::size_t cap = 100000;
  auto* enumerate = app.add_subcommand("enumerate", "List the vertices of a concept class");
  enumerate->add_option("class", class_path, "Concept class spec (JSON)")->required()->check(CLI::ExistingFile);
  enumerate->add_option("--cap", cap, "Maximum number of vertices");

  std::uint64_t T = 1;
  auto* grid = app.add_subcommand("grid", "Print the exponential learning-rate grid for horizon T");
  grid->add_option("T", T, "Horizon")->required()->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(config_path, csv_out, summary_out);
    if (*audit) return cmd_audit(audit_csv_path, audit_config);
    if (*enumerate) return cmd_enumerate(class_path, cap);
    if (*grid) return cmd_grid(T);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
