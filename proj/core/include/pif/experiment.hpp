#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "pif/burden.hpp"
#include "pif/conformal.hpp"
#include "pif/dataset.hpp"
#include "pif/evaluation.hpp"
#include "pif/learner.hpp"
#include "pif/synthetic.hpp"

namespace pif {

// ---------------------------------------------------------------------------
// Configuration

enum class MethodKind {
  pivot_bootstrap,
  percentile_bootstrap,
  split_conformal,
  full_conformal,
  cross_conformal,
  bootstrap_conformal,
};

struct MethodSpec {
  MethodKind kind = MethodKind::split_conformal;
  int resamples = 0;  // pivot / percentile / bootstrap_conformal
  int folds = 0;      // cross_conformal
  ConformityKind conformity = ConformityKind::absolute_residual;
  std::optional<double> kde_bandwidth;
  /// Leave-one-out bandwidth selection grid; overrides kde_bandwidth when set.
  std::vector<double> kde_bandwidths;

  /// Stable label used for output directories, report rows and the ledger,
  /// e.g. "cross_conformal_k20_kde".
  std::string label() const;
  bool is_conformal() const;
  /// 100 candidates for the full method, 1000 otherwise.
  int default_grid_size() const;
  void validate() const;
};

struct CsvSource {
  std::string path;
  std::string target_column;  // name, or decimal index
  bool header = true;
};

struct DataSource {
  std::variant<CsvSource, GeneratorSpec> source = GeneratorSpec{};

  std::string label() const;
  Dataset load() const;
};

struct GridConfig {
  /// Absent: measured once from a split-conformal probe run (the mean width of
  /// its intervals becomes the half-width of every candidate grid).
  std::optional<double> half_width;
  /// Absent: per-method default.
  std::optional<int> size;
};

struct ExperimentConfig {
  DataSource dataset;
  LearnerSpec learner;
  std::vector<MethodSpec> methods;
  double alpha = 0.05;
  std::size_t test_count = 100;
  int replicates = 10;
  GridConfig grid;
  std::uint64_t seed = 0;
  std::string output_dir;
  /// Edges for the conditional-coverage report keyed on the predicted target;
  /// empty = interior quintiles of the pooled predictions.
  std::vector<double> conditional_bins;

  void validate() const;  // throws ConfigError
  std::vector<std::string> warnings() const;
};

ExperimentConfig experiment_config_from_json(const std::string& text);
ExperimentConfig experiment_config_from_file(const std::string& path);

// ---------------------------------------------------------------------------
// Reports

struct ReplicateResult {
  int replicate = 0;
  CoverageSummary summary;
  long trainings = 0;
  double rmse = 0.0;
};

struct MethodReport {
  std::string label;
  std::vector<ReplicateResult> replicates;  // successful replicates only
  std::vector<std::string> errors;

  // across replicate means (empty-replicate-safe: zero when no replicates)
  double coverage_mean = 0.0;
  double coverage_se = 0.0;
  double width_mean = 0.0;
  double width_se = 0.0;
  double rmse_mean = 0.0;
  long trainings_total = 0;
  long hits_total = 0;
  long count_total = 0;
  long empty_total = 0;

  ConditionalBinReport conditional;
};

struct ExperimentReport {
  std::string dataset_label;
  double grid_half_width = 0.0;
  std::vector<MethodReport> methods;
  std::map<std::string, long> ledger;

  bool any_method_without_results() const;
  const MethodReport& method(const std::string& label) const;
};

/// Runs the full protocol: per replicate, split off test_count rows, run every
/// configured method on every test observation, record outcomes and burden.
/// Writes per-replicate CSVs, report.csv and aggregate.json under output_dir
/// (file writing is skipped when output_dir is empty). Re-running with the
/// same config and seed reproduces byte-identical CSV output.
ExperimentReport run_experiment(const ExperimentConfig& config);

/// Serialized forms of the report (also written to disk by run_experiment).
std::string report_csv(const ExperimentReport& report);
std::string report_json(const ExperimentReport& report, const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// Hyperparameter sweep

struct SweepConfig {
  ExperimentConfig base;
  std::vector<std::pair<std::string, LearnerSpec>> design_points;  // label + spec
  /// Evaluate each design point with K-fold cross validation (every row used
  /// as a test observation exactly once) instead of random test splits.
  bool cross_validation = false;
  int cv_folds = 5;
};

SweepConfig sweep_config_from_json(const std::string& text);
SweepConfig sweep_config_from_file(const std::string& path);

struct SweepReport {
  std::vector<std::pair<std::string, ExperimentReport>> designs;
};

SweepReport run_sweep(const SweepConfig& config);

}  // namespace pif
