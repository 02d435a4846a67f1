#include "pif/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "json_io.hpp"
#include "pif/bootstrap_pi.hpp"
#include "pif/errors.hpp"
#include "pif/normal.hpp"
#include "pif/rng.hpp"

namespace fs = std::filesystem;

namespace pif {

// ---------------------------------------------------------------------------
// MethodSpec

std::string MethodSpec::label() const {
  std::string base;
  switch (kind) {
    case MethodKind::pivot_bootstrap: base = "pivot_bootstrap_b" + std::to_string(resamples); break;
    case MethodKind::percentile_bootstrap:
      base = "percentile_bootstrap_b" + std::to_string(resamples);
      break;
    case MethodKind::split_conformal: base = "split_conformal"; break;
    case MethodKind::full_conformal: base = "full_conformal"; break;
    case MethodKind::cross_conformal: base = "cross_conformal_k" + std::to_string(folds); break;
    case MethodKind::bootstrap_conformal:
      base = "bootstrap_conformal_b" + std::to_string(resamples);
      break;
  }
  if (is_conformal() && conformity == ConformityKind::kde_neg_log_density) base += "_kde";
  return base;
}

bool MethodSpec::is_conformal() const {
  return kind == MethodKind::split_conformal || kind == MethodKind::full_conformal ||
         kind == MethodKind::cross_conformal || kind == MethodKind::bootstrap_conformal;
}

int MethodSpec::default_grid_size() const {
  return kind == MethodKind::full_conformal ? 100 : 1000;
}

void MethodSpec::validate() const {
  switch (kind) {
    case MethodKind::pivot_bootstrap:
      if (resamples < 2) throw ConfigError("pivot_bootstrap: resamples must be >= 2");
      break;
    case MethodKind::percentile_bootstrap:
      if (resamples < 20) throw ConfigError("percentile_bootstrap: resamples must be >= 20");
      break;
    case MethodKind::bootstrap_conformal:
      if (resamples < 2) throw ConfigError("bootstrap_conformal: resamples must be >= 2");
      break;
    case MethodKind::cross_conformal:
      if (folds < 2) throw ConfigError("cross_conformal: folds must be >= 2");
      break;
    case MethodKind::split_conformal:
    case MethodKind::full_conformal:
      break;
  }
  if (kde_bandwidth.has_value() && !(*kde_bandwidth > 0.0))
    throw ConfigError("method: kde_bandwidth must be > 0");
  for (double h : kde_bandwidths)
    if (!(h > 0.0)) throw ConfigError("method: kde_bandwidths entries must be > 0");
}

// ---------------------------------------------------------------------------
// DataSource

std::string DataSource::label() const {
  if (std::holds_alternative<CsvSource>(source)) {
    const auto& csv = std::get<CsvSource>(source);
    return fs::path(csv.path).stem().string();
  }
  const auto& gen = std::get<GeneratorSpec>(source);
  switch (gen.kind) {
    case TrendKind::linear: return "synthetic_linear";
    case TrendKind::sinusoid: return "synthetic_sinusoid";
    case TrendKind::friedman: return "synthetic_friedman";
  }
  return "synthetic";
}

Dataset DataSource::load() const {
  if (std::holds_alternative<CsvSource>(source)) {
    const auto& csv = std::get<CsvSource>(source);
    return load_csv(csv.path, csv.target_column, csv.header);
  }
  return generate(std::get<GeneratorSpec>(source)).data;
}

// ---------------------------------------------------------------------------
// Config validation

void ExperimentConfig::validate() const {
  learner.validate();
  if (methods.empty()) throw ConfigError("config: methods list is empty");
  std::vector<std::string> labels;
  for (const auto& m : methods) {
    m.validate();
    labels.push_back(m.label());
  }
  std::sort(labels.begin(), labels.end());
  if (std::adjacent_find(labels.begin(), labels.end()) != labels.end())
    throw ConfigError("config: duplicate method descriptor '" +
                      *std::adjacent_find(labels.begin(), labels.end()) + "'");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("config: alpha must lie in (0, 1)");
  if (test_count < 1) throw ConfigError("config: test_count must be >= 1");
  if (replicates < 1) throw ConfigError("config: replicates must be >= 1");
  if (grid.half_width.has_value() && !(*grid.half_width > 0.0))
    throw ConfigError("config: grid.half_width must be > 0");
  if (grid.size.has_value() && *grid.size < 2)
    throw ConfigError("config: grid.M must be >= 2");
}

std::vector<std::string> ExperimentConfig::warnings() const {
  std::vector<std::string> out;
  for (const auto& m : methods) {
    if (m.kind == MethodKind::percentile_bootstrap && m.resamples < 1000)
      out.push_back(m.label() + ": tail quantiles are unstable below 1000 resamples");
    if (m.kind == MethodKind::full_conformal) {
      const long grid_size = grid.size.value_or(m.default_grid_size());
      const long fits = grid_size * static_cast<long>(test_count) * replicates;
      if (fits > 200000)
        out.push_back(m.label() + ": about " + std::to_string(fits) +
                      " trainings will be required");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON parsing

namespace {

using nlohmann::json;

[[noreturn]] void config_fail(const std::string& message) { throw ConfigError("config: " + message); }

MethodSpec method_from_json(const json& j) {
  if (!j.is_object() || !j.contains("name")) config_fail("each method needs a 'name'");
  const std::string name = j.at("name").get<std::string>();
  MethodSpec m;
  if (name == "pivot_bootstrap") m.kind = MethodKind::pivot_bootstrap;
  else if (name == "percentile_bootstrap") m.kind = MethodKind::percentile_bootstrap;
  else if (name == "split_conformal") m.kind = MethodKind::split_conformal;
  else if (name == "full_conformal") m.kind = MethodKind::full_conformal;
  else if (name == "cross_conformal") m.kind = MethodKind::cross_conformal;
  else if (name == "bootstrap_conformal") m.kind = MethodKind::bootstrap_conformal;
  else config_fail("unknown method '" + name + "'");

  m.resamples = j.value("resamples", 0);
  m.folds = j.value("folds", 0);
  if (j.contains("conformity")) {
    const std::string c = j.at("conformity").get<std::string>();
    if (c == "absolute_residual") m.conformity = ConformityKind::absolute_residual;
    else if (c == "kde") m.conformity = ConformityKind::kde_neg_log_density;
    else config_fail("unknown conformity '" + c + "' (expected absolute_residual or kde)");
  }
  if (j.contains("kde_bandwidth")) {
    const auto& bw = j.at("kde_bandwidth");
    if (bw.is_string()) {
      if (bw.get<std::string>() != "auto")
        config_fail("kde_bandwidth must be a number or \"auto\"");
    } else {
      m.kde_bandwidth = bw.get<double>();
    }
  }
  if (j.contains("kde_bandwidths"))
    m.kde_bandwidths = j.at("kde_bandwidths").get<std::vector<double>>();
  m.validate();
  return m;
}

NoiseSpec noise_from_json(const json& j) {
  NoiseSpec noise;
  const std::string kind = j.value("kind", "gaussian");
  if (kind == "gaussian") {
    noise.kind = NoiseKind::gaussian;
    noise.param = j.value("sigma", 1.0);
  } else if (kind == "skewed") {
    noise.kind = NoiseKind::skewed;
    noise.param = j.value("shape", 1.0);
  } else if (kind == "bimodal") {
    noise.kind = NoiseKind::bimodal;
    noise.param = j.value("gap", 2.0);
  } else {
    config_fail("unknown noise kind '" + kind + "'");
  }
  return noise;
}

GeneratorSpec generator_from_json(const json& j) {
  GeneratorSpec gen;
  const std::string kind = j.value("kind", "linear");
  if (kind == "linear") gen.kind = TrendKind::linear;
  else if (kind == "sinusoid") gen.kind = TrendKind::sinusoid;
  else if (kind == "friedman") gen.kind = TrendKind::friedman;
  else config_fail("unknown generator kind '" + kind + "'");
  gen.n = j.value("n", gen.n);
  gen.d = j.value("d", gen.d);
  if (j.contains("noise")) gen.noise = noise_from_json(j.at("noise"));
  gen.seed = j.value("seed", gen.seed);
  return gen;
}

DataSource data_source_from_json(const json& j) {
  DataSource ds;
  if (j.contains("csv")) {
    CsvSource csv;
    csv.path = j.at("csv").get<std::string>();
    if (j.contains("target_column")) {
      const auto& t = j.at("target_column");
      csv.target_column = t.is_string() ? t.get<std::string>()
                                        : std::to_string(t.get<long>());
    } else {
      config_fail("csv dataset needs a target_column");
    }
    csv.header = j.value("header", true);
    ds.source = csv;
  } else if (j.contains("generator")) {
    ds.source = generator_from_json(j.at("generator"));
  } else {
    config_fail("dataset needs either 'csv' or 'generator'");
  }
  return ds;
}

ExperimentConfig config_from_json_value(const json& j) {
  if (!j.is_object()) config_fail("expected a JSON object");
  ExperimentConfig config;
  if (!j.contains("dataset")) config_fail("missing 'dataset'");
  config.dataset = data_source_from_json(j.at("dataset"));
  if (!j.contains("learner")) config_fail("missing 'learner'");
  config.learner = detail::learner_spec_from_json_value(j.at("learner"));
  if (!j.contains("methods") || !j.at("methods").is_array())
    config_fail("missing 'methods' array");
  for (const auto& mj : j.at("methods")) config.methods.push_back(method_from_json(mj));
  config.alpha = j.value("alpha", config.alpha);
  config.test_count = j.value("test_count", config.test_count);
  config.replicates = j.value("replicates", config.replicates);
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    if (g.contains("half_width")) {
      const auto& hw = g.at("half_width");
      if (hw.is_string()) {
        if (hw.get<std::string>() != "auto")
          config_fail("grid.half_width must be a number or \"auto\"");
      } else {
        config.grid.half_width = hw.get<double>();
      }
    }
    if (g.contains("M")) config.grid.size = g.at("M").get<int>();
  }
  config.seed = j.value("seed", config.seed);
  config.output_dir = j.value("output_dir", config.output_dir);
  if (j.contains("conditional_bins"))
    config.conditional_bins = j.at("conditional_bins").get<std::vector<double>>();
  config.validate();
  return config;
}

json parse_json_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

ExperimentConfig experiment_config_from_json(const std::string& text) {
  return config_from_json_value(parse_json_text(text));
}

ExperimentConfig experiment_config_from_file(const std::string& path) {
  return experiment_config_from_json(read_file(path));
}

// ---------------------------------------------------------------------------
// Worker pool

namespace {

int worker_count() {
  if (const char* env = std::getenv("PIF_WORKERS")) {
    int value = 0;
    const auto* end = env + std::char_traits<char>::length(env);
    if (std::from_chars(env, end, value).ec == std::errc() && value >= 1)
      return std::min(value, 256);
  }
  return 1;
}

void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& body) {
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto run = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int thread_count = static_cast<int>(std::min<std::size_t>(count, workers));
  pool.reserve(static_cast<std::size_t>(thread_count));
  for (int t = 0; t < thread_count; ++t) pool.emplace_back(run);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------------------
// Deterministic formatting

std::string format_double(double v) {
  char buffer[64];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, v);
  return std::string(buffer, ptr);
}

struct PointRow {
  std::size_t index = 0;
  double true_target = 0.0;
  double prediction = 0.0;
  PiOutcome outcome;
};

std::string points_csv(const std::vector<PointRow>& rows) {
  std::string out = "index,y_true,prediction,lower,upper,width,hit,empty\n";
  for (const auto& r : rows) {
    out += std::to_string(r.index);
    out += ',';
    out += format_double(r.true_target);
    out += ',';
    out += format_double(r.prediction);
    out += ',';
    out += format_double(r.outcome.interval.lower);
    out += ',';
    out += format_double(r.outcome.interval.upper);
    out += ',';
    out += format_double(r.outcome.width);
    out += ',';
    out += r.outcome.hit ? '1' : '0';
    out += ',';
    out += r.outcome.interval.empty_set ? '1' : '0';
    out += '\n';
  }
  return out;
}

// Substream layout for the experiment tree.
constexpr std::uint64_t kStreamReplicateSplit = 1;
constexpr std::uint64_t kStreamMethod = 2;
constexpr std::uint64_t kStreamAutoWidthSplit = 3;
constexpr std::uint64_t kStreamAutoWidthFit = 4;
constexpr std::uint64_t kStreamPoint = 5;

std::uint64_t method_seed(const ExperimentConfig& config, int replicate, std::size_t method_index) {
  const std::uint64_t r = fork_seed(config.seed, fork_seed(kStreamMethod, replicate));
  return fork_seed(r, method_index);
}

double resolve_half_width(const ExperimentConfig& config, const Dataset& data,
                          BurdenLedger& ledger) {
  if (config.grid.half_width.has_value()) return *config.grid.half_width;

  // Probe: one split-conformal fit with absolute-residual conformity; its mean
  // interval width (2 * the calibration score threshold) becomes the grid
  // half-width, so grids span twice the width of a typical interval.
  const std::uint64_t split_seed = fork_seed(config.seed, kStreamAutoWidthSplit);
  Dataset probe_train = data;
  if (config.test_count < data.rows())
    probe_train = train_test_split(data, config.test_count, split_seed).first;
  const SplitConformal probe =
      SplitConformal::fit(config.learner, probe_train, fork_seed(config.seed, kStreamAutoWidthFit),
                          ConformalConfig{}, Burden{&ledger, "auto_width_probe"});
  const auto threshold = split_score_threshold(probe.source().calibration_scores, config.alpha);

  double width = 0.0;
  if (threshold.has_value() && std::isfinite(*threshold)) width = 2.0 * *threshold;
  if (!(width > 0.0)) {
    const auto [min_it, max_it] =
        std::minmax_element(data.targets().begin(), data.targets().end());
    width = *max_it - *min_it;
  }
  if (!(width > 0.0)) width = 1.0;
  return width;
}

std::vector<PointRow> run_method_replicate(const ExperimentConfig& config, const MethodSpec& m,
                                           const Dataset& train, const Dataset& test,
                                           double half_width, std::uint64_t seed,
                                           BurdenLedger& ledger, int workers) {
  const Burden burden{&ledger, m.label()};
  const double alpha = config.alpha;
  const int grid_size = config.grid.size.value_or(m.default_grid_size());
  const ConformalConfig conformal_config{m.conformity, m.kde_bandwidth, m.kde_bandwidths, {}};

  std::vector<PointRow> rows(test.rows());
  const auto record = [&](std::size_t i, double prediction, PredictionInterval interval) {
    rows[i].index = i;
    rows[i].true_target = test.target(i);
    rows[i].prediction = prediction;
    rows[i].outcome = evaluate_interval(std::move(interval), test.target(i));
  };

  switch (m.kind) {
    case MethodKind::pivot_bootstrap: {
      const BootstrapEnsemble ensemble =
          train_ensemble(config.learner, train, m.resamples, seed, burden);
      const double noise = irreducible_error(ensemble, train);
      const double z = normal_quantile(1.0 - alpha / 2.0);
      parallel_for(test.rows(), workers, [&](std::size_t i) {
        PivotComponents c;
        c.bagged_prediction = bagged_prediction(ensemble, test.row(i));
        c.prediction_variance = prediction_variance(ensemble, test.row(i));
        c.irreducible_error = noise;
        c.z_critical = z;
        record(i, c.bagged_prediction, pivot_interval(c, alpha));
      });
      break;
    }
    case MethodKind::percentile_bootstrap: {
      const BootstrapEnsemble ensemble =
          train_ensemble(config.learner, train, m.resamples, seed, burden);
      parallel_for(test.rows(), workers, [&](std::size_t i) {
        const std::uint64_t point_seed = fork_seed(seed, fork_seed(kStreamPoint, i));
        record(i, bagged_prediction(ensemble, test.row(i)),
               percentile_pi(ensemble, train, test.row(i), alpha, point_seed));
      });
      break;
    }
    case MethodKind::split_conformal: {
      const SplitConformal model =
          SplitConformal::fit(config.learner, train, seed, conformal_config, burden);
      parallel_for(test.rows(), workers, [&](std::size_t i) {
        auto result = model.interval(test.row(i), GridRequest{half_width, grid_size, {}}, alpha);
        record(i, result.center_prediction, std::move(result.interval));
      });
      break;
    }
    case MethodKind::cross_conformal: {
      const CrossConformal model =
          CrossConformal::fit(config.learner, train, m.folds, seed, conformal_config, burden);
      parallel_for(test.rows(), workers, [&](std::size_t i) {
        auto result = model.interval(test.row(i), GridRequest{half_width, grid_size, {}}, alpha);
        record(i, result.center_prediction, std::move(result.interval));
      });
      break;
    }
    case MethodKind::bootstrap_conformal: {
      const BootstrapConformal model = BootstrapConformal::fit(config.learner, train, m.resamples,
                                                               seed, conformal_config, burden);
      parallel_for(test.rows(), workers, [&](std::size_t i) {
        auto result = model.interval(test.row(i), GridRequest{half_width, grid_size, {}}, alpha);
        record(i, result.center_prediction, std::move(result.interval));
      });
      break;
    }
    case MethodKind::full_conformal: {
      // One centering fit on the training set provides point predictions (and
      // grid centers) for every test observation of this replicate.
      const Regressor centering = fit(config.learner, train);
      burden.add();
      parallel_for(test.rows(), workers, [&](std::size_t i) {
        const double center = centering.predict(test.row(i));
        auto result =
            full_conformal_pi(config.learner, train, test.row(i),
                              GridRequest{half_width, grid_size, center}, alpha,
                              conformal_config, burden);
        record(i, center, std::move(result.interval));
      });
      break;
    }
  }
  return rows;
}

double replicate_rmse(const std::vector<PointRow>& rows) {
  double ss = 0.0;
  for (const auto& r : rows) {
    const double e = r.prediction - r.true_target;
    ss += e * e;
  }
  return rows.empty() ? 0.0 : std::sqrt(ss / static_cast<double>(rows.size()));
}

void finalize_method_report(MethodReport& report,
                            const std::vector<PointRow>& pooled_rows,
                            const std::vector<double>& conditional_edges) {
  const auto mean_of = [](const std::vector<double>& v) {
    return v.empty() ? 0.0
                     : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  const auto se_of = [&](const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1)) /
           std::sqrt(static_cast<double>(v.size()));
  };

  std::vector<double> coverages, widths, rmses;
  for (const auto& r : report.replicates) {
    coverages.push_back(r.summary.coverage);
    widths.push_back(r.summary.mean_width);
    rmses.push_back(r.rmse);
    report.trainings_total += r.trainings;
    report.hits_total += static_cast<long>(r.summary.hits);
    report.count_total += static_cast<long>(r.summary.count);
    report.empty_total += static_cast<long>(r.summary.empty_count);
  }
  report.coverage_mean = mean_of(coverages);
  report.coverage_se = se_of(coverages);
  report.width_mean = mean_of(widths);
  report.width_se = se_of(widths);
  report.rmse_mean = mean_of(rmses);

  if (pooled_rows.empty()) return;
  std::vector<PiOutcome> outcomes;
  std::vector<double> keys;
  outcomes.reserve(pooled_rows.size());
  keys.reserve(pooled_rows.size());
  for (const auto& r : pooled_rows) {
    outcomes.push_back(r.outcome);
    keys.push_back(r.prediction);
  }
  std::vector<double> edges = conditional_edges;
  if (edges.empty()) {
    // interior quintiles of the pooled predictions
    for (double p : {0.2, 0.4, 0.6, 0.8}) edges.push_back(empirical_quantile(keys, p));
  }
  report.conditional = conditional_coverage(outcomes, keys, edges);
}

}  // namespace

// ---------------------------------------------------------------------------
// Experiment runner

bool ExperimentReport::any_method_without_results() const {
  return std::any_of(methods.begin(), methods.end(),
                     [](const MethodReport& m) { return m.replicates.empty(); });
}

const MethodReport& ExperimentReport::method(const std::string& label) const {
  for (const auto& m : methods)
    if (m.label == label) return m;
  throw Error("ExperimentReport::method: no method labelled '" + label + "'");
}

namespace {

ExperimentReport run_experiment_impl(const ExperimentConfig& config,
                                     const std::vector<std::pair<Dataset, Dataset>>& splits) {
  const int workers = worker_count();
  BurdenLedger ledger;

  ExperimentReport report;
  report.dataset_label = config.dataset.label();

  const Dataset full = config.dataset.load();
  report.grid_half_width = resolve_half_width(config, full, ledger);

  struct MethodState {
    MethodReport report;
    std::vector<PointRow> pooled_rows;
    std::vector<std::pair<int, std::string>> point_csvs;  // replicate -> body
  };
  std::vector<MethodState> states(config.methods.size());
  for (std::size_t mi = 0; mi < config.methods.size(); ++mi)
    states[mi].report.label = config.methods[mi].label();

  for (std::size_t r = 0; r < splits.size(); ++r) {
    const auto& [train, test] = splits[r];
    for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
      const MethodSpec& m = config.methods[mi];
      auto& state = states[mi];
      const long trainings_before = ledger.trainings(m.label());
      try {
        std::vector<PointRow> rows =
            run_method_replicate(config, m, train, test, report.grid_half_width,
                                 method_seed(config, static_cast<int>(r), mi), ledger, workers);
        ReplicateResult result;
        result.replicate = static_cast<int>(r);
        std::vector<PiOutcome> outcomes;
        outcomes.reserve(rows.size());
        for (const auto& row : rows) outcomes.push_back(row.outcome);
        result.summary = coverage_and_width(outcomes);
        result.trainings = ledger.trainings(m.label()) - trainings_before;
        result.rmse = replicate_rmse(rows);
        state.report.replicates.push_back(result);
        state.point_csvs.emplace_back(static_cast<int>(r), points_csv(rows));
        state.pooled_rows.insert(state.pooled_rows.end(), rows.begin(), rows.end());
      } catch (const Error& e) {
        state.report.errors.push_back("replicate " + std::to_string(r) + ": " + e.what());
      }
    }
  }

  for (auto& state : states) {
    finalize_method_report(state.report, state.pooled_rows, config.conditional_bins);
    report.methods.push_back(std::move(state.report));
  }
  report.ledger = ledger.snapshot();

  if (!config.output_dir.empty()) {
    const fs::path root(config.output_dir);
    fs::create_directories(root);
    for (std::size_t mi = 0; mi < states.size(); ++mi) {
      const fs::path method_dir = root / report.methods[mi].label;
      fs::create_directories(method_dir);
      for (const auto& [replicate, body] : states[mi].point_csvs) {
        std::ofstream out(method_dir / (std::to_string(replicate) + ".csv"), std::ios::binary);
        out << body;
      }
    }
    std::ofstream csv(root / "report.csv", std::ios::binary);
    csv << report_csv(report);
    std::ofstream agg(root / "aggregate.json", std::ios::binary);
    agg << report_json(report, config);
  }
  return report;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  const Dataset data = config.dataset.load();
  if (config.test_count >= data.rows())
    throw ConfigError("config: test_count must be smaller than the dataset (" +
                      std::to_string(data.rows()) + " rows)");

  std::vector<std::pair<Dataset, Dataset>> splits;
  splits.reserve(static_cast<std::size_t>(config.replicates));
  for (int r = 0; r < config.replicates; ++r) {
    const std::uint64_t split_seed =
        fork_seed(config.seed, fork_seed(kStreamReplicateSplit, static_cast<std::uint64_t>(r)));
    splits.push_back(train_test_split(data, config.test_count, split_seed));
  }
  return run_experiment_impl(config, splits);
}

// ---------------------------------------------------------------------------
// Report serialization

std::string report_csv(const ExperimentReport& report) {
  std::string out = "method,dataset,replicate,coverage,mean_width,se_coverage,se_width,trainings,empty_count\n";
  for (const auto& method : report.methods) {
    for (const auto& r : method.replicates) {
      out += method.label;
      out += ',';
      out += report.dataset_label;
      out += ',';
      out += std::to_string(r.replicate);
      out += ',';
      out += format_double(r.summary.coverage);
      out += ',';
      out += format_double(r.summary.mean_width);
      out += ',';
      out += format_double(r.summary.se_coverage);
      out += ',';
      out += format_double(r.summary.se_width);
      out += ',';
      out += std::to_string(r.trainings);
      out += ',';
      out += std::to_string(r.summary.empty_count);
      out += '\n';
    }
  }
  return out;
}

namespace {

json method_spec_json(const MethodSpec& m) {
  json j;
  switch (m.kind) {
    case MethodKind::pivot_bootstrap: j["name"] = "pivot_bootstrap"; break;
    case MethodKind::percentile_bootstrap: j["name"] = "percentile_bootstrap"; break;
    case MethodKind::split_conformal: j["name"] = "split_conformal"; break;
    case MethodKind::full_conformal: j["name"] = "full_conformal"; break;
    case MethodKind::cross_conformal: j["name"] = "cross_conformal"; break;
    case MethodKind::bootstrap_conformal: j["name"] = "bootstrap_conformal"; break;
  }
  if (m.resamples > 0) j["resamples"] = m.resamples;
  if (m.folds > 0) j["folds"] = m.folds;
  if (m.is_conformal())
    j["conformity"] =
        m.conformity == ConformityKind::kde_neg_log_density ? "kde" : "absolute_residual";
  if (m.kde_bandwidth.has_value()) j["kde_bandwidth"] = *m.kde_bandwidth;
  if (!m.kde_bandwidths.empty()) j["kde_bandwidths"] = m.kde_bandwidths;
  return j;
}

}  // namespace

std::string report_json(const ExperimentReport& report, const ExperimentConfig& config) {
  json j;
  j["dataset"] = report.dataset_label;
  j["alpha"] = config.alpha;
  j["seed"] = config.seed;
  j["test_count"] = config.test_count;
  j["replicates"] = config.replicates;
  j["grid_half_width"] = report.grid_half_width;
  j["learner"] = json::parse(to_json(config.learner));
  json methods_config = json::array();
  for (const auto& m : config.methods) methods_config.push_back(method_spec_json(m));
  j["methods_config"] = methods_config;

  json methods;
  for (const auto& method : report.methods) {
    json mj;
    json reps = json::array();
    for (const auto& r : method.replicates) {
      reps.push_back({{"replicate", r.replicate},
                      {"coverage", r.summary.coverage},
                      {"mean_width", r.summary.mean_width},
                      {"se_coverage", r.summary.se_coverage},
                      {"se_width", r.summary.se_width},
                      {"hits", r.summary.hits},
                      {"count", r.summary.count},
                      {"empty_count", r.summary.empty_count},
                      {"trainings", r.trainings},
                      {"rmse", r.rmse}});
    }
    mj["replicates"] = reps;
    mj["aggregate"] = {{"coverage_mean", method.coverage_mean},
                       {"coverage_se", method.coverage_se},
                       {"width_mean", method.width_mean},
                       {"width_se", method.width_se},
                       {"rmse_mean", method.rmse_mean},
                       {"trainings_total", method.trainings_total},
                       {"hits_total", method.hits_total},
                       {"count_total", method.count_total},
                       {"empty_total", method.empty_total}};
    json bins = json::array();
    for (const auto& bin : method.conditional.bins) {
      json bj;
      bj["lower"] = std::isfinite(bin.lower) ? json(bin.lower) : json();
      bj["upper"] = std::isfinite(bin.upper) ? json(bin.upper) : json();
      bj["count"] = bin.count;
      if (bin.has_coverage) {
        bj["coverage"] = bin.coverage;
        bj["mean_width"] = bin.mean_width;
      }
      bins.push_back(bj);
    }
    mj["conditional"] = {{"edges", method.conditional.edges}, {"bins", bins}};
    if (!method.errors.empty()) mj["errors"] = method.errors;
    methods[method.label] = mj;
  }
  j["methods"] = methods;

  json ledger;
  for (const auto& [key, count] : report.ledger) ledger[key] = count;
  j["ledger"] = ledger;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Sweep

namespace {

std::string design_label(const LearnerSpec& spec) {
  switch (spec.kind()) {
    case LearnerKind::ridge: {
      std::string l = "ridge_lambda" + format_double(spec.ridge_params().lambda);
      std::replace(l.begin(), l.end(), '.', 'p');
      return l;
    }
    case LearnerKind::knn: return "knn_k" + std::to_string(spec.knn_params().k);
    case LearnerKind::mlp: {
      const auto& m = spec.mlp_params();
      return "mlp_l" + std::to_string(m.layers) + "_n" + std::to_string(m.nodes_per_layer) + "_" +
             to_string(m.activation);
    }
  }
  return "learner";
}

SweepConfig sweep_from_json_value(const json& j) {
  SweepConfig sweep;
  sweep.base = config_from_json_value(j);
  sweep.cross_validation = j.value("cross_validation", false);
  sweep.cv_folds = j.value("cv_folds", 5);
  if (sweep.cv_folds < 2) config_fail("cv_folds must be >= 2");

  if (!j.contains("sweep") || !j.at("sweep").is_object() || j.at("sweep").empty())
    config_fail("sweep: missing or empty 'sweep' object");
  const json& grid = j.at("sweep");

  // Cartesian product over the listed fields of the base learner.
  std::vector<LearnerSpec> points{sweep.base.learner};
  const auto expand = [&](const std::string& field, auto apply) {
    if (!grid.contains(field)) return;
    const json& values = grid.at(field);
    if (!values.is_array() || values.empty())
      config_fail("sweep: '" + field + "' must be a non-empty array");
    std::vector<LearnerSpec> next;
    for (const auto& spec : points)
      for (const auto& value : values) {
        LearnerSpec candidate = spec;
        apply(candidate, value);
        next.push_back(candidate);
      }
    points = std::move(next);
  };

  if (sweep.base.learner.kind() == LearnerKind::mlp) {
    expand("layers", [](LearnerSpec& s, const json& v) {
      std::get<MlpSpec>(s.params).layers = v.get<int>();
    });
    expand("nodes_per_layer", [](LearnerSpec& s, const json& v) {
      std::get<MlpSpec>(s.params).nodes_per_layer = v.get<int>();
    });
    expand("activation", [](LearnerSpec& s, const json& v) {
      std::get<MlpSpec>(s.params).activation = activation_from_string(v.get<std::string>());
    });
    expand("epochs", [](LearnerSpec& s, const json& v) {
      std::get<MlpSpec>(s.params).epochs = v.get<int>();
    });
    expand("batch_size", [](LearnerSpec& s, const json& v) {
      std::get<MlpSpec>(s.params).batch_size = v.get<int>();
    });
    expand("learning_rate", [](LearnerSpec& s, const json& v) {
      std::get<MlpSpec>(s.params).learning_rate = v.get<double>();
    });
  } else if (sweep.base.learner.kind() == LearnerKind::ridge) {
    expand("lambda", [](LearnerSpec& s, const json& v) {
      std::get<RidgeSpec>(s.params).lambda = v.get<double>();
    });
  } else {
    expand("k", [](LearnerSpec& s, const json& v) {
      std::get<KnnSpec>(s.params).k = v.get<int>();
    });
  }

  if (points.size() == 1)
    config_fail("sweep: no swept fields apply to the configured learner");
  for (const auto& p : points) {
    p.validate();
    sweep.design_points.emplace_back(design_label(p), p);
  }
  return sweep;
}

}  // namespace

SweepConfig sweep_config_from_json(const std::string& text) {
  return sweep_from_json_value(parse_json_text(text));
}

SweepConfig sweep_config_from_file(const std::string& path) {
  return sweep_config_from_json(read_file(path));
}

SweepReport run_sweep(const SweepConfig& sweep) {
  if (sweep.design_points.empty()) throw ConfigError("sweep: empty design grid");

  SweepReport report;
  const fs::path root(sweep.base.output_dir);
  std::string summary =
      "design,learner,method,replicates,coverage,se_coverage,mean_width,se_width,rmse,trainings\n";

  for (std::size_t d = 0; d < sweep.design_points.size(); ++d) {
    const auto& [label, learner] = sweep.design_points[d];
    ExperimentConfig config = sweep.base;
    config.learner = learner;
    const std::string dir_name = "design_" + std::to_string(d) + "_" + label;
    config.output_dir =
        sweep.base.output_dir.empty() ? std::string() : (root / dir_name).string();

    ExperimentReport result;
    if (sweep.cross_validation) {
      const Dataset data = config.dataset.load();
      const FoldAssignment folds =
          kfold_split(data.rows(), sweep.cv_folds, fork_seed(config.seed, 7));
      std::vector<std::pair<Dataset, Dataset>> splits;
      for (int k = 0; k < sweep.cv_folds; ++k)
        splits.emplace_back(data.subset(folds.complement(k)), data.subset(folds.fold(k)));
      config.validate();
      result = run_experiment_impl(config, splits);
    } else {
      result = run_experiment(config);
    }

    for (const auto& method : result.methods) {
      summary += dir_name;
      summary += ',';
      summary += design_label(learner);
      summary += ',';
      summary += method.label;
      summary += ',';
      summary += std::to_string(method.replicates.size());
      summary += ',';
      summary += format_double(method.coverage_mean);
      summary += ',';
      summary += format_double(method.coverage_se);
      summary += ',';
      summary += format_double(method.width_mean);
      summary += ',';
      summary += format_double(method.width_se);
      summary += ',';
      summary += format_double(method.rmse_mean);
      summary += ',';
      summary += std::to_string(method.trainings_total);
      summary += '\n';
    }
    report.designs.emplace_back(dir_name, std::move(result));
  }

  if (!sweep.base.output_dir.empty()) {
    fs::create_directories(root);
    std::ofstream out(root / "sweep_summary.csv", std::ios::binary);
    out << summary;
  }
  return report;
}

}  // namespace pif
