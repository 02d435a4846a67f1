#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace pif {

/// Immutable row-major feature matrix plus one continuous target per row.
/// Construction validates shape and rejects non-finite entries.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<double> features, std::vector<double> targets, std::size_t cols,
          std::vector<std::string> feature_names = {}, std::string target_name = {});

  std::size_t rows() const { return targets_.size(); }
  std::size_t cols() const { return cols_; }

  std::span<const double> row(std::size_t i) const {
    return {features_.data() + i * cols_, cols_};
  }
  double target(std::size_t i) const { return targets_[i]; }

  const std::vector<double>& features() const { return features_; }
  const std::vector<double>& targets() const { return targets_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const std::string& target_name() const { return target_name_; }

  /// New dataset from the given rows, in order (duplicates allowed).
  Dataset subset(std::span<const std::size_t> row_indices) const;
  /// Dataset with one extra row appended.
  Dataset with_row(std::span<const double> x, double y) const;

 private:
  std::vector<double> features_;  // rows * cols, row-major
  std::vector<double> targets_;
  std::size_t cols_ = 0;
  std::vector<std::string> feature_names_;
  std::string target_name_;
};

/// One bootstrap draw: n in-bag indices sampled with replacement and the
/// complementary out-of-bag indices (always non-empty, see bootstrap_resample).
struct BootstrapResample {
  std::vector<std::size_t> in_bag;
  std::vector<std::size_t> out_of_bag;
};

/// Assignment of each row to one of fold_count folds whose sizes differ by at most 1.
struct FoldAssignment {
  std::vector<int> fold_of_row;
  int fold_count = 0;

  std::vector<std::size_t> fold(int k) const;
  std::vector<std::size_t> complement(int k) const;
};

/// Load an RFC-4180-style numeric CSV ('.' decimal separator, optional single
/// header row). The target column is removed from the features; column order
/// is otherwise preserved. The string overload accepts a column name (requires
/// a header) or a decimal index.
Dataset load_csv(const std::string& path, std::size_t target_index, bool header);
Dataset load_csv(const std::string& path, const std::string& target_column, bool header);

/// Disjoint exhaustive partition with exactly test_count test rows.
std::pair<Dataset, Dataset> train_test_split(const Dataset& data, std::size_t test_count,
                                             std::uint64_t seed);

/// Seeded bootstrap resample of {0..n-1}. A draw whose out-of-bag set would be
/// empty is redrawn from a derived substream, up to 16 attempts.
BootstrapResample bootstrap_resample(std::size_t n, std::uint64_t seed);

/// Seeded K-fold assignment, 2 <= fold_count <= n.
FoldAssignment kfold_split(std::size_t n, int fold_count, std::uint64_t seed);

/// Per-column z-score transform; fit on training rows only.
struct ColumnStats {
  std::vector<double> mean;
  std::vector<double> sd;  // constant columns get sd 1 so they map to 0
};

ColumnStats fit_column_stats(const Dataset& train);
std::vector<double> standardize_row(const ColumnStats& stats, std::span<const double> x);
Dataset standardize(const ColumnStats& stats, const Dataset& data);

}  // namespace pif
