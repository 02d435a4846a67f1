#include "pif/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "pif/errors.hpp"
#include "pif/rng.hpp"

namespace pif {

Dataset::Dataset(std::vector<double> features, std::vector<double> targets, std::size_t cols,
                 std::vector<std::string> feature_names, std::string target_name)
    : features_(std::move(features)),
      targets_(std::move(targets)),
      cols_(cols),
      feature_names_(std::move(feature_names)),
      target_name_(std::move(target_name)) {
  if (targets_.empty()) throw Error("Dataset: needs at least one row");
  if (cols_ == 0) throw Error("Dataset: needs at least one feature column");
  if (features_.size() != targets_.size() * cols_)
    throw Error("Dataset: feature matrix shape does not match target count");
  if (!feature_names_.empty() && feature_names_.size() != cols_)
    throw Error("Dataset: feature_names length does not match column count");
  for (double v : features_)
    if (!std::isfinite(v)) throw Error("Dataset: non-finite feature entry");
  for (double v : targets_)
    if (!std::isfinite(v)) throw Error("Dataset: non-finite target entry");
}

Dataset Dataset::subset(std::span<const std::size_t> row_indices) const {
  std::vector<double> features;
  std::vector<double> targets;
  features.reserve(row_indices.size() * cols_);
  targets.reserve(row_indices.size());
  for (std::size_t i : row_indices) {
    if (i >= rows()) throw Error("Dataset::subset: row index out of range");
    const auto r = row(i);
    features.insert(features.end(), r.begin(), r.end());
    targets.push_back(targets_[i]);
  }
  return Dataset(std::move(features), std::move(targets), cols_, feature_names_, target_name_);
}

Dataset Dataset::with_row(std::span<const double> x, double y) const {
  if (x.size() != cols_) throw Error("Dataset::with_row: dimension mismatch");
  std::vector<double> features = features_;
  std::vector<double> targets = targets_;
  features.insert(features.end(), x.begin(), x.end());
  targets.push_back(y);
  return Dataset(std::move(features), std::move(targets), cols_, feature_names_, target_name_);
}

std::vector<std::size_t> FoldAssignment::fold(int k) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < fold_of_row.size(); ++i)
    if (fold_of_row[i] == k) rows.push_back(i);
  return rows;
}

std::vector<std::size_t> FoldAssignment::complement(int k) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < fold_of_row.size(); ++i)
    if (fold_of_row[i] != k) rows.push_back(i);
  return rows;
}

namespace {

// Splits one CSV record; handles optional double quotes around fields and a
// trailing carriage return.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  fields.push_back(field);
  return fields;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return {};
  std::size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

bool parse_number(const std::string& text, double& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const char* begin = t.data();
  const char* end = begin + t.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

Dataset load_csv_impl(const std::string& path, std::size_t target_index,
                      const std::string* target_name, bool header) {
  std::ifstream in(path);
  if (!in) throw Error("load_csv: cannot open '" + path + "'");

  std::vector<std::string> names;
  std::string line;
  std::size_t column_count = 0;
  bool first_line = true;
  const auto strip_bom = [&](std::string& text) {
    if (first_line && text.rfind("\xEF\xBB\xBF", 0) == 0) text.erase(0, 3);
    first_line = false;
  };

  if (header) {
    if (!std::getline(in, line)) throw Error("load_csv: '" + path + "' is empty");
    strip_bom(line);
    for (const auto& f : split_csv_line(line)) names.push_back(trim(f));
    column_count = names.size();
    if (target_name != nullptr) {
      auto it = std::find(names.begin(), names.end(), *target_name);
      if (it == names.end())
        throw Error("load_csv: target column '" + *target_name + "' not found in header");
      target_index = static_cast<std::size_t>(it - names.begin());
    }
  } else if (target_name != nullptr) {
    throw Error("load_csv: a target column name requires header=true");
  }

  std::vector<double> features;
  std::vector<double> targets;
  std::size_t data_row = 0;
  while (std::getline(in, line)) {
    strip_bom(line);
    if (trim(line).empty()) continue;  // skip blank lines (commonly trailing)
    ++data_row;
    const auto fields = split_csv_line(line);
    if (column_count == 0) {
      column_count = fields.size();
      if (column_count < 2)
        throw Error("load_csv: need at least two columns (features plus target)");
      if (target_index >= column_count)
        throw Error("load_csv: target column index " + std::to_string(target_index) +
                    " out of range for " + std::to_string(column_count) + " columns");
    }
    if (fields.size() != column_count)
      throw Error("load_csv: row " + std::to_string(data_row) + " has " +
                  std::to_string(fields.size()) + " fields, expected " +
                  std::to_string(column_count));
    for (std::size_t c = 0; c < column_count; ++c) {
      double value = 0.0;
      if (!parse_number(fields[c], value))
        throw Error("load_csv: non-numeric cell at row " + std::to_string(data_row) +
                    ", column " + std::to_string(c + 1) + " ('" + trim(fields[c]) + "')");
      if (c == target_index)
        targets.push_back(value);
      else
        features.push_back(value);
    }
  }
  if (data_row == 0) throw Error("load_csv: '" + path + "' contains no data rows");
  if (column_count < 2) throw Error("load_csv: need at least two columns (features plus target)");
  if (target_index >= column_count)
    throw Error("load_csv: target column index " + std::to_string(target_index) +
                " out of range for " + std::to_string(column_count) + " columns");

  std::vector<std::string> feature_names;
  std::string resolved_target_name;
  if (!names.empty()) {
    resolved_target_name = names[target_index];
    for (std::size_t c = 0; c < names.size(); ++c)
      if (c != target_index) feature_names.push_back(names[c]);
  }
  return Dataset(std::move(features), std::move(targets), column_count - 1,
                 std::move(feature_names), std::move(resolved_target_name));
}

}  // namespace

Dataset load_csv(const std::string& path, std::size_t target_index, bool header) {
  return load_csv_impl(path, target_index, nullptr, header);
}

Dataset load_csv(const std::string& path, const std::string& target_column, bool header) {
  // A pure decimal string is treated as a column index.
  std::size_t index = 0;
  const char* begin = target_column.data();
  const char* end = begin + target_column.size();
  auto [ptr, ec] = std::from_chars(begin, end, index);
  if (ec == std::errc() && ptr == end) return load_csv_impl(path, index, nullptr, header);
  return load_csv_impl(path, 0, &target_column, header);
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& data, std::size_t test_count,
                                             std::uint64_t seed) {
  const std::size_t n = data.rows();
  if (test_count < 1 || test_count >= n)
    throw Error("train_test_split: test_count must lie in [1, n)");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<std::size_t> test_rows(order.begin(), order.begin() + test_count);
  std::vector<std::size_t> train_rows(order.begin() + test_count, order.end());
  // Keep original row order within each side so splits are easy to audit.
  std::sort(test_rows.begin(), test_rows.end());
  std::sort(train_rows.begin(), train_rows.end());
  return {data.subset(train_rows), data.subset(test_rows)};
}

namespace {

BootstrapResample draw_resample(std::size_t n, Rng& rng) {
  BootstrapResample r;
  r.in_bag.resize(n);
  std::vector<bool> seen(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = rng.uniform_index(n);
    r.in_bag[i] = j;
    seen[j] = true;
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!seen[i]) r.out_of_bag.push_back(i);
  return r;
}

}  // namespace

BootstrapResample bootstrap_resample(std::size_t n, std::uint64_t seed) {
  if (n < 2)
    throw Error("bootstrap_resample: n must be >= 2 (a non-empty out-of-bag set is required)");
  for (std::uint64_t attempt = 0; attempt < 16; ++attempt) {
    Rng rng(attempt == 0 ? seed : fork_seed(seed, 0xb00d + attempt));
    BootstrapResample r = draw_resample(n, rng);
    if (!r.out_of_bag.empty()) return r;
  }
  throw Error("bootstrap_resample: no non-empty out-of-bag set after 16 attempts");
}

FoldAssignment kfold_split(std::size_t n, int fold_count, std::uint64_t seed) {
  if (fold_count < 2 || static_cast<std::size_t>(fold_count) > n)
    throw Error("kfold_split: fold count must lie in [2, n]");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);

  FoldAssignment assignment;
  assignment.fold_count = fold_count;
  assignment.fold_of_row.assign(n, 0);
  // First n % K folds take one extra row, so sizes differ by at most 1.
  const std::size_t base = n / static_cast<std::size_t>(fold_count);
  const std::size_t extra = n % static_cast<std::size_t>(fold_count);
  std::size_t cursor = 0;
  for (int k = 0; k < fold_count; ++k) {
    const std::size_t size = base + (static_cast<std::size_t>(k) < extra ? 1 : 0);
    for (std::size_t i = 0; i < size; ++i) assignment.fold_of_row[order[cursor++]] = k;
  }
  return assignment;
}

ColumnStats fit_column_stats(const Dataset& train) {
  const std::size_t n = train.rows();
  const std::size_t d = train.cols();
  ColumnStats stats;
  stats.mean.assign(d, 0.0);
  stats.sd.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = train.row(i);
    for (std::size_t c = 0; c < d; ++c) stats.mean[c] += r[c];
  }
  for (double& m : stats.mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = train.row(i);
    for (std::size_t c = 0; c < d; ++c) {
      const double dv = r[c] - stats.mean[c];
      stats.sd[c] += dv * dv;
    }
  }
  for (double& s : stats.sd) {
    s = n > 1 ? std::sqrt(s / static_cast<double>(n - 1)) : 0.0;
    if (s <= 0.0) s = 1.0;
  }
  return stats;
}

std::vector<double> standardize_row(const ColumnStats& stats, std::span<const double> x) {
  if (x.size() != stats.mean.size()) throw Error("standardize_row: dimension mismatch");
  std::vector<double> out(x.size());
  for (std::size_t c = 0; c < x.size(); ++c) out[c] = (x[c] - stats.mean[c]) / stats.sd[c];
  return out;
}

Dataset standardize(const ColumnStats& stats, const Dataset& data) {
  if (data.cols() != stats.mean.size()) throw Error("standardize: dimension mismatch");
  std::vector<double> features;
  features.reserve(data.rows() * data.cols());
  for (std::size_t i = 0; i < data.rows(); ++i) {
    auto z = standardize_row(stats, data.row(i));
    features.insert(features.end(), z.begin(), z.end());
  }
  return Dataset(std::move(features), data.targets(), data.cols(), data.feature_names(),
                 data.target_name());
}

}  // namespace pif
