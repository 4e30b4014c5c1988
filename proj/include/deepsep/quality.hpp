#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "deepsep/features.hpp"
#include "deepsep/manifest.hpp"

namespace deepsep {

// Euclidean distance between pooled vectors of the same tap. Throws TapMismatch.
double rr_distance(const PooledVector& distorted, const PooledVector& reference);

// Ranks starting at 1; tied values share the mean of their rank range.
std::vector<double> average_ranks(std::span<const double> x);

// Spearman (Pearson on average ranks) and Pearson correlation. Both require
// equal lengths >= 3 and throw ConstantInput when either series is constant.
double srocc(std::span<const double> x, std::span<const double> y);
double plcc(std::span<const double> x, std::span<const double> y);

// Train/test partitions of reference ids. Distorted images follow their
// reference, so no content appears on both sides.
struct SplitPlan {
  int split_count = 100;
  double train_fraction = 0.8;
  std::uint64_t master_seed = 0;
};

struct Split {
  std::vector<std::string> train;  // sorted
  std::vector<std::string> test;   // sorted
};

// n_train = round(train_fraction * R) over the sorted id set, shuffled per
// split from a stream derived from master_seed and the split index. Throws
// DegenerateSplit when the test side has fewer than `min_test` references.
std::vector<Split> make_splits(const SplitPlan& plan, std::vector<std::string> reference_ids,
                               std::size_t min_test = 1);

struct CorrelationEntry {
  std::string database;
  std::string network;
  std::string layer;
  std::string dist_kind;  // "all" when unfiltered
  std::vector<double> srocc_per_split;
  std::vector<double> plcc_per_split;
  double srocc_median = 0.0;
  double srocc_mean = 0.0;
  double plcc_median = 0.0;
  double plcc_mean = 0.0;
};

struct CorrelationReport {
  std::vector<CorrelationEntry> entries;
};

// Training-free reduced-reference quality: the predicted quality of a
// distorted image is minus its feature distance to the reference. Ground
// truth is oriented so that larger means better before correlating, so a
// working predictor yields positive SROCC/PLCC under both MOS and DMOS.
// Correlations are taken on the test side of each split. Throws MissingVector,
// DegenerateSplit (fewer than 3 test references or test images).
CorrelationEntry evaluate_rriqa(const FeatureDump& dump, const Manifest& manifest,
                                const SplitPlan& plan,
                                const std::optional<std::string>& kind_filter = std::nullopt,
                                unsigned threads = 1);

double median(std::vector<double> values);
double mean(std::span<const double> values);

std::string correlation_report_to_csv(const CorrelationReport& report);
std::string correlation_report_to_json(const CorrelationReport& report);

}  // namespace deepsep
