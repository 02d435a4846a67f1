// pif: prediction-interval experiment runner.
//
//   pif run      --config experiment.json [--output DIR]
//   pif sweep    --config sweep.json [--output DIR]
//   pif validate --report aggregate.json --nominal 0.95 [--alpha-test 0.05]

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "pif/errors.hpp"
#include "pif/evaluation.hpp"
#include "pif/experiment.hpp"

namespace {

void print_report(const pif::ExperimentReport& report) {
  std::printf("dataset=%s grid_half_width=%.6g\n", report.dataset_label.c_str(),
              report.grid_half_width);
  for (const auto& m : report.methods) {
    if (m.replicates.empty()) {
      std::printf("%-32s no results (%zu errors)\n", m.label.c_str(), m.errors.size());
      continue;
    }
    std::printf("%-32s coverage=%.4f width=%.4f trainings=%ld empties=%ld\n", m.label.c_str(),
                m.coverage_mean, m.width_mean, m.trainings_total, m.empty_total);
  }
  for (const auto& m : report.methods)
    for (const auto& e : m.errors) std::fprintf(stderr, "%s: %s\n", m.label.c_str(), e.c_str());
}

int run_command(const std::string& config_path, const std::string& output_override) {
  pif::ExperimentConfig config = pif::experiment_config_from_file(config_path);
  if (!output_override.empty()) config.output_dir = output_override;
  for (const auto& w : config.warnings()) std::fprintf(stderr, "warning: %s\n", w.c_str());
  const pif::ExperimentReport report = pif::run_experiment(config);
  print_report(report);
  return report.any_method_without_results() ? 1 : 0;
}

int sweep_command(const std::string& config_path, const std::string& output_override) {
  pif::SweepConfig sweep = pif::sweep_config_from_file(config_path);
  if (!output_override.empty()) sweep.base.output_dir = output_override;
  for (const auto& w : sweep.base.warnings()) std::fprintf(stderr, "warning: %s\n", w.c_str());
  const pif::SweepReport report = pif::run_sweep(sweep);
  bool any_empty = false;
  for (const auto& [label, result] : report.designs) {
    std::printf("== %s ==\n", label.c_str());
    print_report(result);
    any_empty = any_empty || result.any_method_without_results();
  }
  return any_empty ? 1 : 0;
}

int validate_command(const std::string& report_path, double nominal, double alpha_test) {
  std::ifstream in(report_path, std::ios::binary);
  if (!in) throw pif::ConfigError("validate: cannot open '" + report_path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(buffer.str());
  } catch (const nlohmann::json::exception& e) {
    throw pif::ConfigError(std::string("validate: invalid report JSON: ") + e.what());
  }
  if (!j.contains("methods") || !j.at("methods").is_object())
    throw pif::ConfigError("validate: report has no 'methods' object");

  bool all_valid = true;
  for (const auto& [label, mj] : j.at("methods").items()) {
    if (!mj.contains("aggregate")) continue;
    const auto& agg = mj.at("aggregate");
    const long hits = agg.value("hits_total", 0L);
    const long count = agg.value("count_total", 0L);
    if (count == 0) {
      std::printf("%-32s no observations\n", label.c_str());
      all_valid = false;
      continue;
    }
    const auto r = pif::agresti_coull_valid(hits, count, nominal, alpha_test);
    std::printf("%-32s coverage=%.4f ci=[%.4f, %.4f] %s\n", label.c_str(),
                static_cast<double>(hits) / static_cast<double>(count), r.ci_low, r.ci_high,
                r.valid ? "valid" : "INVALID");
    all_valid = all_valid && r.valid;
  }
  return all_valid ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distribution-free prediction intervals for regression"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_override;
  auto* run = app.add_subcommand("run", "Run a configured experiment");
  run->add_option("--config", config_path, "Experiment JSON config")->required();
  run->add_option("--output", output_override, "Override the config's output_dir");

  std::string sweep_config_path;
  std::string sweep_output_override;
  auto* sweep = app.add_subcommand("sweep", "Run an experiment per learner design point");
  sweep->add_option("--config", sweep_config_path, "Sweep JSON config")->required();
  sweep->add_option("--output", sweep_output_override, "Override the config's output_dir");

  std::string report_path;
  double nominal = 0.95;
  double alpha_test = 0.05;
  auto* validate = app.add_subcommand("validate", "Test report coverage against a nominal level");
  validate->add_option("--report", report_path, "aggregate.json produced by pif run")->required();
  validate->add_option("--nominal", nominal, "Nominal coverage level (default 0.95)");
  validate->add_option("--alpha-test", alpha_test, "Significance level of the validity test");

  try {
    app.parse(argc, argv);
    if (run->parsed()) return run_command(config_path, output_override);
    if (sweep->parsed()) return sweep_command(sweep_config_path, sweep_output_override);
    if (validate->parsed()) return validate_command(report_path, nominal, alpha_test);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const pif::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const pif::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
