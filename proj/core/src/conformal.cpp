#include "pif/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include "pif/errors.hpp"
#include "pif/rng.hpp"

namespace pif {

// ---------------------------------------------------------------------------
// Conformity measures

ConformityMeasure ConformityMeasure::absolute_residual() {
  ConformityMeasure m;
  m.kind_ = ConformityKind::absolute_residual;
  return m;
}

ConformityMeasure ConformityMeasure::kde_neg_log_density(KdeModel residual_density) {
  ConformityMeasure m;
  m.kind_ = ConformityKind::kde_neg_log_density;
  m.kde_ = std::move(residual_density);
  return m;
}

double ConformityMeasure::score(double prediction, double target) const {
  if (!std::isfinite(prediction) || !std::isfinite(target))
    throw Error("ConformityMeasure::score: non-finite input");
  if (kind_ == ConformityKind::absolute_residual) return std::fabs(prediction - target);
  if (!kde_.has_value()) throw Error("ConformityMeasure::score: KDE measure is unfitted");
  return -kde_log_density(*kde_, target - prediction);
}

const KdeModel& ConformityMeasure::kde() const {
  if (!kde_.has_value()) throw Error("ConformityMeasure::kde: not a KDE measure");
  return *kde_;
}

// ---------------------------------------------------------------------------
// p-values

double p_value(std::span<const double> reference_scores, double test_score,
               const PValueOptions& options) {
  if (reference_scores.empty()) throw Error("p_value: empty reference score set");
  const double denom = static_cast<double>(reference_scores.size() + 1);
  std::size_t count = 0;
  if (options.tie_inclusive) {
    for (double s : reference_scores) count += (s >= test_score) ? 1 : 0;
    return (static_cast<double>(count) + 1.0) / denom;
  }
  for (double s : reference_scores) count += (s > test_score) ? 1 : 0;
  return static_cast<double>(count) / denom;
}

std::vector<double> p_values_against_sorted(std::span<const double> sorted_reference,
                                            std::span<const double> test_scores,
                                            const PValueOptions& options) {
  if (sorted_reference.empty()) throw Error("p_values_against_sorted: empty reference set");
  const double denom = static_cast<double>(sorted_reference.size() + 1);
  std::vector<double> out;
  out.reserve(test_scores.size());
  for (double t : test_scores) {
    if (options.tie_inclusive) {
      const auto it = std::lower_bound(sorted_reference.begin(), sorted_reference.end(), t);
      const double count = static_cast<double>(sorted_reference.end() - it);
      out.push_back((count + 1.0) / denom);
    } else {
      const auto it = std::upper_bound(sorted_reference.begin(), sorted_reference.end(), t);
      out.push_back(static_cast<double>(sorted_reference.end() - it) / denom);
    }
  }
  return out;
}

long min_accepted_count(double alpha, std::size_t reference_size, const PValueOptions& options) {
  const double denom = static_cast<double>(reference_size + 1);
  const double offset = options.tie_inclusive ? 1.0 : 0.0;
  long k = static_cast<long>(std::ceil(alpha * denom - offset));
  if (k < 0) k = 0;
  // Align with the exact floating comparison used for acceptance.
  while (k > 0 && (static_cast<double>(k - 1) + offset) / denom >= alpha) --k;
  while ((static_cast<double>(k) + offset) / denom < alpha) ++k;
  return k;
}

std::optional<double> split_score_threshold(std::span<const double> calibration_scores,
                                            double alpha, const PValueOptions& options) {
  if (calibration_scores.empty()) throw Error("split_score_threshold: empty calibration set");
  const long l = static_cast<long>(calibration_scores.size());
  const long k = min_accepted_count(alpha, calibration_scores.size(), options);
  if (k > l) return std::nullopt;  // even the best score cannot be accepted
  if (k <= 0) return std::numeric_limits<double>::infinity();
  std::vector<double> sorted(calibration_scores.begin(), calibration_scores.end());
  std::sort(sorted.begin(), sorted.end());
  // accept <=> at least k calibration scores exceed the test score
  // <=> test score < k-th largest = (l - k + 1)-th smallest.
  return sorted[static_cast<std::size_t>(l - k)];
}

// ---------------------------------------------------------------------------
// Candidate grids

CandidateGrid build_grid(double center, double half_width, int size) {
  if (!(half_width > 0.0)) throw Error("build_grid: half_width must be > 0");
  if (size < 2) throw Error("build_grid: needs at least 2 candidates");
  if (!std::isfinite(center)) throw Error("build_grid: non-finite center");
  CandidateGrid grid;
  grid.center = center;
  grid.half_width = half_width;
  grid.values.resize(static_cast<std::size_t>(size));
  const double step = 2.0 * half_width / static_cast<double>(size - 1);
  for (int j = 0; j < size; ++j)
    grid.values[static_cast<std::size_t>(j)] = center - half_width + step * j;
  // pin the endpoints exactly
  grid.values.front() = center - half_width;
  grid.values.back() = center + half_width;
  return grid;
}

// ---------------------------------------------------------------------------
// Shared machinery

ConformalSource make_conformal_source(Regressor model, const Dataset& data,
                                      std::span<const std::size_t> calibration_rows,
                                      const ConformalConfig& config) {
  if (calibration_rows.empty())
    throw Error("make_conformal_source: empty calibration set");
  ConformalSource source{std::move(model), ConformityMeasure::absolute_residual(), {}, {}};
  source.calibration_rows.assign(calibration_rows.begin(), calibration_rows.end());

  std::vector<double> predictions(calibration_rows.size());
  for (std::size_t i = 0; i < calibration_rows.size(); ++i)
    predictions[i] = source.model.predict(data.row(calibration_rows[i]));

  if (config.conformity == ConformityKind::kde_neg_log_density) {
    std::vector<double> residuals(calibration_rows.size());
    for (std::size_t i = 0; i < calibration_rows.size(); ++i)
      residuals[i] = data.target(calibration_rows[i]) - predictions[i];
    KdeModel density = !config.kde_bandwidth_grid.empty()
                           ? fit_kde_select(residuals, config.kde_bandwidth_grid)
                       : config.kde_bandwidth.has_value()
                           ? fit_kde(residuals, *config.kde_bandwidth)
                           : fit_kde_auto(residuals);
    source.measure = ConformityMeasure::kde_neg_log_density(std::move(density));
  }

  source.calibration_scores.resize(calibration_rows.size());
  for (std::size_t i = 0; i < calibration_rows.size(); ++i)
    source.calibration_scores[i] =
        source.measure.score(predictions[i], data.target(calibration_rows[i]));
  std::sort(source.calibration_scores.begin(), source.calibration_scores.end());
  return source;
}

namespace {

PredictionInterval hull_of_accepted(const CandidateGrid& grid,
                                    const std::vector<double>& aggregated, double alpha) {
  PredictionInterval interval;
  interval.level = 1.0 - alpha;
  for (std::size_t j = 0; j < grid.values.size(); ++j)
    if (aggregated[j] >= alpha) interval.accepted.push_back(grid.values[j]);
  if (interval.accepted.empty()) {
    interval.empty_set = true;
    interval.lower = interval.upper = std::numeric_limits<double>::quiet_NaN();
  } else {
    interval.lower = interval.accepted.front();
    interval.upper = interval.accepted.back();
  }
  return interval;
}

ConformalResult aggregate_interval(std::span<const ConformalSource> sources,
                                   std::span<const double> x, const CandidateGrid& grid,
                                   double alpha, const PValueOptions& options,
                                   double center_prediction) {
  if (sources.empty()) throw Error("conformal interval: no sources");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("conformal interval: alpha must lie in (0, 1)");
  const std::size_t candidate_count = grid.values.size();

  ConformalResult result;
  result.grid = grid;
  result.center_prediction = center_prediction;
  result.pvalues.aggregated.assign(candidate_count, 0.0);
  const bool aggregated_method = sources.size() > 1;
  if (aggregated_method) result.pvalues.per_source.reserve(sources.size());

  std::vector<double> test_scores(candidate_count);
  for (const auto& source : sources) {
    const double prediction = source.model.predict(x);
    for (std::size_t j = 0; j < candidate_count; ++j)
      test_scores[j] = source.measure.score(prediction, grid.values[j]);
    std::vector<double> row =
        p_values_against_sorted(source.calibration_scores, test_scores, options);
    for (std::size_t j = 0; j < candidate_count; ++j) result.pvalues.aggregated[j] += row[j];
    if (aggregated_method) result.pvalues.per_source.push_back(std::move(row));
  }
  const double source_count = static_cast<double>(sources.size());
  for (double& p : result.pvalues.aggregated) p /= source_count;

  result.interval = hull_of_accepted(grid, result.pvalues.aggregated, alpha);
  return result;
}

double mean_point_prediction(std::span<const ConformalSource> sources,
                             std::span<const double> x) {
  double sum = 0.0;
  for (const auto& source : sources) sum += source.model.predict(x);
  return sum / static_cast<double>(sources.size());
}

CandidateGrid resolve_grid(const GridRequest& request, double center_prediction) {
  const double center = request.center.value_or(center_prediction);
  return build_grid(center, request.half_width, request.size);
}

}  // namespace

// ---------------------------------------------------------------------------
// Split conformal

SplitConformal::SplitConformal(ConformalSource source, ConformalConfig config)
    : source_(std::move(source)), config_(std::move(config)) {}

SplitConformal SplitConformal::fit(const LearnerSpec& spec, const Dataset& train,
                                   std::uint64_t seed, const ConformalConfig& config,
                                   const Burden& burden) {
  const std::size_t n = train.rows();
  if (n < 4) throw Error("SplitConformal::fit: needs at least 4 rows");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(fork_seed(seed, 0));
  rng.shuffle(order);
  const std::size_t proper_count = n - n / 2;  // even split; odd row goes to training
  std::vector<std::size_t> proper(order.begin(), order.begin() + proper_count);
  std::vector<std::size_t> calibration(order.begin() + proper_count, order.end());
  std::sort(proper.begin(), proper.end());
  std::sort(calibration.begin(), calibration.end());

  Regressor model = pif::fit(reseeded(spec, fork_seed(seed, 1)), train.subset(proper));
  burden.add();
  return SplitConformal(make_conformal_source(std::move(model), train, calibration, config),
                        config);
}

double SplitConformal::point_prediction(std::span<const double> x) const {
  return source_.model.predict(x);
}

ConformalResult SplitConformal::interval(std::span<const double> x, const GridRequest& request,
                                         double alpha) const {
  const double center = request.center.value_or(point_prediction(x));
  return aggregate_interval({&source_, 1}, x, resolve_grid(request, center), alpha,
                            config_.pvalue, center);
}

ConformalResult SplitConformal::interval(std::span<const double> x, const CandidateGrid& grid,
                                         double alpha) const {
  return aggregate_interval({&source_, 1}, x, grid, alpha, config_.pvalue, point_prediction(x));
}

// ---------------------------------------------------------------------------
// Cross conformal

CrossConformal::CrossConformal(std::vector<ConformalSource> sources, FoldAssignment folds,
                               ConformalConfig config)
    : sources_(std::move(sources)), folds_(std::move(folds)), config_(std::move(config)) {
  if (sources_.empty()) throw Error("CrossConformal: needs at least one source");
}

CrossConformal CrossConformal::fit(const LearnerSpec& spec, const Dataset& train, int folds,
                                   std::uint64_t seed, const ConformalConfig& config,
                                   const Burden& burden) {
  const std::size_t n = train.rows();
  if (folds < 2 || static_cast<std::size_t>(folds) * 2 > n)
    throw Error("CrossConformal::fit: fold count must lie in [2, n/2]");

  FoldAssignment assignment = kfold_split(n, folds, fork_seed(seed, 0));
  std::vector<ConformalSource> sources;
  sources.reserve(static_cast<std::size_t>(folds));
  for (int k = 0; k < folds; ++k) {
    try {
      const std::vector<std::size_t> proper = assignment.complement(k);
      const std::vector<std::size_t> calibration = assignment.fold(k);
      Regressor model = pif::fit(reseeded(spec, fork_seed(seed, 1 + static_cast<std::uint64_t>(k))),
                                 train.subset(proper));
      burden.add();
      sources.push_back(make_conformal_source(std::move(model), train, calibration, config));
    } catch (const Error& e) {
      throw Error("CrossConformal::fit: fold " + std::to_string(k) + ": " + e.what());
    }
  }
  return CrossConformal(std::move(sources), std::move(assignment), config);
}

double CrossConformal::point_prediction(std::span<const double> x) const {
  return mean_point_prediction(sources_, x);
}

ConformalResult CrossConformal::interval(std::span<const double> x, const GridRequest& request,
                                         double alpha) const {
  const double center = request.center.value_or(point_prediction(x));
  return aggregate_interval(sources_, x, resolve_grid(request, center), alpha, config_.pvalue,
                            center);
}

ConformalResult CrossConformal::interval(std::span<const double> x, const CandidateGrid& grid,
                                         double alpha) const {
  return aggregate_interval(sources_, x, grid, alpha, config_.pvalue, point_prediction(x));
}

// ---------------------------------------------------------------------------
// Bootstrap conformal

BootstrapConformal::BootstrapConformal(std::vector<ConformalSource> sources,
                                       ConformalConfig config)
    : sources_(std::move(sources)), config_(std::move(config)) {
  if (sources_.empty()) throw Error("BootstrapConformal: needs at least one source");
}

BootstrapConformal BootstrapConformal::fit(const LearnerSpec& spec, const Dataset& train,
                                           int resamples, std::uint64_t seed,
                                           const ConformalConfig& config, const Burden& burden) {
  if (resamples < 2) throw Error("BootstrapConformal::fit: needs at least 2 resamples");
  if (train.rows() < 2) throw Error("BootstrapConformal::fit: needs at least 2 rows");

  std::vector<ConformalSource> sources;
  sources.reserve(static_cast<std::size_t>(resamples));
  for (int b = 0; b < resamples; ++b) {
    try {
      const std::uint64_t member_seed = fork_seed(seed, static_cast<std::uint64_t>(b));
      BootstrapResample resample = bootstrap_resample(train.rows(), member_seed);
      Regressor model =
          pif::fit(reseeded(spec, fork_seed(member_seed, 1)), train.subset(resample.in_bag));
      burden.add();
      sources.push_back(
          make_conformal_source(std::move(model), train, resample.out_of_bag, config));
    } catch (const Error& e) {
      throw Error("BootstrapConformal::fit: resample " + std::to_string(b) + ": " + e.what());
    }
  }
  return BootstrapConformal(std::move(sources), config);
}

double BootstrapConformal::point_prediction(std::span<const double> x) const {
  return mean_point_prediction(sources_, x);
}

ConformalResult BootstrapConformal::interval(std::span<const double> x,
                                             const GridRequest& request, double alpha) const {
  const double center = request.center.value_or(point_prediction(x));
  return aggregate_interval(sources_, x, resolve_grid(request, center), alpha, config_.pvalue,
                            center);
}

ConformalResult BootstrapConformal::interval(std::span<const double> x,
                                             const CandidateGrid& grid, double alpha) const {
  return aggregate_interval(sources_, x, grid, alpha, config_.pvalue, point_prediction(x));
}

// ---------------------------------------------------------------------------
// Full conformal

ConformalResult full_conformal_pi(const LearnerSpec& spec, const Dataset& train,
                                  std::span<const double> x, const CandidateGrid& grid,
                                  double alpha, const ConformalConfig& config,
                                  const Burden& burden) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("full_conformal_pi: alpha must lie in (0, 1)");

  ConformalResult result;
  result.grid = grid;
  result.center_prediction = grid.center;
  result.pvalues.aggregated.assign(grid.values.size(), 0.0);

  for (std::size_t j = 0; j < grid.values.size(); ++j) {
    try {
      const double candidate = grid.values[j];
      const Dataset augmented = train.with_row(x, candidate);
      const Regressor model = pif::fit(spec, augmented);
      burden.add();

      std::vector<double> predictions(augmented.rows());
      for (std::size_t i = 0; i < augmented.rows(); ++i)
        predictions[i] = model.predict(augmented.row(i));

      ConformityMeasure measure = ConformityMeasure::absolute_residual();
      if (config.conformity == ConformityKind::kde_neg_log_density) {
        std::vector<double> residuals(augmented.rows());
        for (std::size_t i = 0; i < augmented.rows(); ++i)
          residuals[i] = augmented.target(i) - predictions[i];
        KdeModel density = !config.kde_bandwidth_grid.empty()
                               ? fit_kde_select(residuals, config.kde_bandwidth_grid)
                           : config.kde_bandwidth.has_value()
                               ? fit_kde(residuals, *config.kde_bandwidth)
                               : fit_kde_auto(residuals);
        measure = ConformityMeasure::kde_neg_log_density(std::move(density));
      }

      // The reference set covers the whole augmented sample, test pair included;
      // under the strict count the test score never counts itself.
      std::vector<double> scores(augmented.rows());
      for (std::size_t i = 0; i < augmented.rows(); ++i)
        scores[i] = measure.score(predictions[i], augmented.target(i));
      const double test_score = scores.back();
      std::sort(scores.begin(), scores.end());
      result.pvalues.aggregated[j] =
          p_values_against_sorted(scores, {&test_score, 1}, config.pvalue)[0];
    } catch (const Error& e) {
      throw Error("full_conformal_pi: candidate " + std::to_string(j) + ": " + e.what());
    }
  }

  result.interval = hull_of_accepted(grid, result.pvalues.aggregated, alpha);
  return result;
}

ConformalResult full_conformal_pi(const LearnerSpec& spec, const Dataset& train,
                                  std::span<const double> x, const GridRequest& request,
                                  double alpha, const ConformalConfig& config,
                                  const Burden& burden) {
  double center = 0.0;
  if (request.center.has_value()) {
    center = *request.center;
  } else {
    // Grid placement needs a point prediction from the original training set.
    const Regressor centering = pif::fit(spec, train);
    burden.add();
    center = centering.predict(x);
  }
  return full_conformal_pi(spec, train, x, build_grid(center, request.half_width, request.size),
                           alpha, config, burden);
}

// ---------------------------------------------------------------------------
// Single-call forms

ConformalResult split_conformal_pi(const LearnerSpec& spec, const Dataset& train,
                                   std::span<const double> x, const GridRequest& request,
                                   double alpha, const ConformalConfig& config,
                                   std::uint64_t seed, const Burden& burden) {
  return SplitConformal::fit(spec, train, seed, config, burden).interval(x, request, alpha);
}

ConformalResult cross_conformal_pi(const LearnerSpec& spec, const Dataset& train,
                                   std::span<const double> x, const GridRequest& request,
                                   double alpha, int folds, const ConformalConfig& config,
                                   std::uint64_t seed, const Burden& burden) {
  return CrossConformal::fit(spec, train, folds, seed, config, burden)
      .interval(x, request, alpha);
}

ConformalResult bootstrap_conformal_pi(const LearnerSpec& spec, const Dataset& train,
                                       std::span<const double> x, const GridRequest& request,
                                       double alpha, int resamples, const ConformalConfig& config,
                                       std::uint64_t seed, const Burden& burden) {
  return BootstrapConformal::fit(spec, train, resamples, seed, config, burden)
      .interval(x, request, alpha);
}

// ---------------------------------------------------------------------------
// Audit export

void write_pvalue_csv(std::ostream& out, const CandidateGrid& grid, const PValueTable& table) {
  out << "candidate,source,p_value\n";
  for (std::size_t j = 0; j < grid.values.size(); ++j) {
    for (std::size_t s = 0; s < table.per_source.size(); ++s)
      out << grid.values[j] << ',' << s << ',' << table.per_source[s][j] << '\n';
    out << grid.values[j] << ",agg," << table.aggregated[j] << '\n';
  }
}

}  // namespace pif
