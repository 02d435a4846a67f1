#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "pif/burden.hpp"
#include "pif/dataset.hpp"
#include "pif/interval.hpp"
#include "pif/kde.hpp"
#include "pif/learner.hpp"

namespace pif {

// ---------------------------------------------------------------------------
// Conformity measures

enum class ConformityKind { absolute_residual, kde_neg_log_density };

/// Scores how strange a (prediction, target) pair is; larger means stranger
/// for both kinds. The KDE kind scores -log density(target - prediction)
/// under a density fitted to signed calibration residuals.
class ConformityMeasure {
 public:
  static ConformityMeasure absolute_residual();
  static ConformityMeasure kde_neg_log_density(KdeModel residual_density);

  double score(double prediction, double target) const;
  ConformityKind kind() const { return kind_; }
  const KdeModel& kde() const;

 private:
  ConformityKind kind_ = ConformityKind::absolute_residual;
  std::optional<KdeModel> kde_;
};

// ---------------------------------------------------------------------------
// p-values

struct PValueOptions {
  /// Off (default): count of reference scores strictly greater than the test
  /// score, divided by (l + 1). On: (count of >= plus one) / (l + 1), the
  /// common inclusive alternative.
  bool tie_inclusive = false;
};

/// p-value of a test score against l reference scores.
double p_value(std::span<const double> reference_scores, double test_score,
               const PValueOptions& options = {});

/// Same, for many test scores against one ascending-sorted reference set.
std::vector<double> p_values_against_sorted(std::span<const double> sorted_reference,
                                            std::span<const double> test_scores,
                                            const PValueOptions& options = {});

/// Smallest integer count c with c / (l + 1) >= alpha, using the same floating
/// comparison as the p-value acceptance test.
long min_accepted_count(double alpha, std::size_t reference_size,
                        const PValueOptions& options = {});

/// With absolute-residual conformity the split-conformal accepted set is
/// {q : |prediction - q| < s*} for an order-statistic threshold s*. Returns
/// s*, or nullopt when no candidate can be accepted at this alpha.
std::optional<double> split_score_threshold(std::span<const double> calibration_scores,
                                            double alpha, const PValueOptions& options = {});

// ---------------------------------------------------------------------------
// Candidate grids

/// size evenly spaced values spanning [center - half_width, center + half_width].
struct CandidateGrid {
  std::vector<double> values;
  double center = 0.0;
  double half_width = 0.0;

  double step() const {
    return values.size() > 1 ? 2.0 * half_width / static_cast<double>(values.size() - 1) : 0.0;
  }
};

CandidateGrid build_grid(double center, double half_width, int size);

/// Grid to be resolved at prediction time: when center is absent it is placed
/// at the method's own point prediction for the test observation.
struct GridRequest {
  double half_width = 0.0;
  int size = 1000;
  std::optional<double> center;
};

// ---------------------------------------------------------------------------
// Results

struct PValueTable {
  /// One value per grid candidate; for aggregated methods the arithmetic mean
  /// of the per-source rows.
  std::vector<double> aggregated;
  /// One row per source (fold / resample); empty for single-source methods.
  std::vector<std::vector<double>> per_source;
};

struct ConformalResult {
  PredictionInterval interval;
  CandidateGrid grid;
  PValueTable pvalues;
  double center_prediction = 0.0;
};

/// Audit export, columns: candidate, source index or "agg", p-value.
void write_pvalue_csv(std::ostream& out, const CandidateGrid& grid, const PValueTable& table);

struct ConformalConfig {
  ConformityKind conformity = ConformityKind::absolute_residual;
  /// KDE bandwidth for the kde_neg_log_density measure; absent = Silverman.
  std::optional<double> kde_bandwidth;
  /// When non-empty, the bandwidth is instead selected from this grid by
  /// leave-one-out log-likelihood, per calibration set.
  std::vector<double> kde_bandwidth_grid;
  PValueOptions pvalue;
};

// ---------------------------------------------------------------------------
// Methods

/// One trained model plus the calibration scores it is compared against.
struct ConformalSource {
  Regressor model;
  ConformityMeasure measure;
  std::vector<double> calibration_scores;  // ascending
  std::vector<std::size_t> calibration_rows;
};

ConformalSource make_conformal_source(Regressor model, const Dataset& data,
                                      std::span<const std::size_t> calibration_rows,
                                      const ConformalConfig& config);

/// Inductive method: one even random split into proper-training and
/// calibration halves, one training. The fitted object is reusable across any
/// number of test observations at no additional training cost.
class SplitConformal {
 public:
  static SplitConformal fit(const LearnerSpec& spec, const Dataset& train, std::uint64_t seed,
                            const ConformalConfig& config = {}, const Burden& burden = {});

  ConformalResult interval(std::span<const double> x, const GridRequest& request,
                           double alpha) const;
  ConformalResult interval(std::span<const double> x, const CandidateGrid& grid,
                           double alpha) const;
  double point_prediction(std::span<const double> x) const;

  const ConformalSource& source() const { return source_; }
  const ConformalConfig& config() const { return config_; }

  explicit SplitConformal(ConformalSource source, ConformalConfig config = {});

 private:
  ConformalSource source_;
  ConformalConfig config_;
};

/// Aggregated conformal predictor over K folds; K trainings, p-values averaged
/// across folds. Each fold's calibration scores come from the held-out fold.
class CrossConformal {
 public:
  static CrossConformal fit(const LearnerSpec& spec, const Dataset& train, int folds,
                            std::uint64_t seed, const ConformalConfig& config = {},
                            const Burden& burden = {});

  ConformalResult interval(std::span<const double> x, const GridRequest& request,
                           double alpha) const;
  ConformalResult interval(std::span<const double> x, const CandidateGrid& grid,
                           double alpha) const;
  /// Mean of the fold models' predictions; used to center requested grids.
  double point_prediction(std::span<const double> x) const;

  std::span<const ConformalSource> sources() const { return sources_; }
  const FoldAssignment& folds() const { return folds_; }
  const ConformalConfig& config() const { return config_; }

  CrossConformal(std::vector<ConformalSource> sources, FoldAssignment folds,
                 ConformalConfig config = {});

 private:
  std::vector<ConformalSource> sources_;
  FoldAssignment folds_;
  ConformalConfig config_;
};

/// Aggregated conformal predictor over B bootstrap resamples; B trainings,
/// out-of-bag rows form each resample's calibration set.
class BootstrapConformal {
 public:
  static BootstrapConformal fit(const LearnerSpec& spec, const Dataset& train, int resamples,
                                std::uint64_t seed, const ConformalConfig& config = {},
                                const Burden& burden = {});

  ConformalResult interval(std::span<const double> x, const GridRequest& request,
                           double alpha) const;
  ConformalResult interval(std::span<const double> x, const CandidateGrid& grid,
                           double alpha) const;
  double point_prediction(std::span<const double> x) const;

  std::span<const ConformalSource> sources() const { return sources_; }
  const ConformalConfig& config() const { return config_; }

  BootstrapConformal(std::vector<ConformalSource> sources, ConformalConfig config = {});

 private:
  std::vector<ConformalSource> sources_;
  ConformalConfig config_;
};

/// Transductive method: refits on train + (x, q) for every grid candidate q,
/// scoring the whole augmented set each time. Charges |grid| trainings, plus
/// one more when the grid center has to be resolved with a dedicated fit on
/// the original training set.
ConformalResult full_conformal_pi(const LearnerSpec& spec, const Dataset& train,
                                  std::span<const double> x, const GridRequest& request,
                                  double alpha, const ConformalConfig& config = {},
                                  const Burden& burden = {});
ConformalResult full_conformal_pi(const LearnerSpec& spec, const Dataset& train,
                                  std::span<const double> x, const CandidateGrid& grid,
                                  double alpha, const ConformalConfig& config = {},
                                  const Burden& burden = {});

// Single-call forms; each fits the method once and evaluates one observation.
ConformalResult split_conformal_pi(const LearnerSpec& spec, const Dataset& train,
                                   std::span<const double> x, const GridRequest& request,
                                   double alpha, const ConformalConfig& config = {},
                                   std::uint64_t seed = 0, const Burden& burden = {});
ConformalResult cross_conformal_pi(const LearnerSpec& spec, const Dataset& train,
                                   std::span<const double> x, const GridRequest& request,
                                   double alpha, int folds, const ConformalConfig& config = {},
                                   std::uint64_t seed = 0, const Burden& burden = {});
ConformalResult bootstrap_conformal_pi(const LearnerSpec& spec, const Dataset& train,
                                       std::span<const double> x, const GridRequest& request,
                                       double alpha, int resamples,
                                       const ConformalConfig& config = {},
                                       std::uint64_t seed = 0, const Burden& burden = {});

}  // namespace pif
