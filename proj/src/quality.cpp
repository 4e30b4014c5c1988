#include "deepsep/quality.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "deepsep/error.hpp"
#include "deepsep/simd.hpp"
#include "deepsep/util.hpp"
#include "json.hpp"

namespace deepsep {

namespace {

void CheckSeries(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::InvalidArgument, "series lengths differ");
  if (x.size() < 3) throw Error(ErrorCode::InvalidArgument, "correlation needs at least 3 points");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw Error(ErrorCode::InvalidArgument, "non-finite value in correlation input");
    }
  }
}

double Pearson(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorCode::ConstantInput, "constant correlation input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// Index in [0, bound) taken directly from the engine output, so the shuffle
// is identical on every standard library.
std::uint64_t Draw(std::mt19937_64& rng, std::uint64_t bound) { return rng() % bound; }

}  // namespace

double rr_distance(const PooledVector& distorted, const PooledVector& reference) {
  if (!(distorted.tap == reference.tap) || distorted.values.size() != reference.values.size()) {
    throw Error(ErrorCode::TapMismatch, "'" + distorted.image_id + "' and '" + reference.image_id +
                                            "' come from different taps");
  }
  return std::sqrt(simd::squared_distance(std::span<const float>(distorted.values),
                                          std::span<const float>(reference.values)));
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double srocc(std::span<const double> x, std::span<const double> y) {
  CheckSeries(x, y);
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return Pearson(rx, ry);
}

double plcc(std::span<const double> x, std::span<const double> y) {
  CheckSeries(x, y);
  return Pearson(x, y);
}

std::vector<Split> make_splits(const SplitPlan& plan, std::vector<std::string> ids,
                               std::size_t min_test) {
  if (plan.split_count < 1) throw Error(ErrorCode::InvalidArgument, "split_count must be >= 1");
  if (!(plan.train_fraction >= 0.0 && plan.train_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "train_fraction must be in [0, 1]");
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  const auto n_train =
      static_cast<std::size_t>(std::llround(plan.train_fraction * static_cast<double>(ids.size())));
  const std::size_t n_test = ids.size() - n_train;
  if (n_test < min_test) {
    throw Error(ErrorCode::DegenerateSplit,
                std::to_string(ids.size()) + " references with train_fraction " +
                    format_double(plan.train_fraction) + " leave " + std::to_string(n_test) +
                    " test references (need " + std::to_string(min_test) + ")");
  }
  std::vector<Split> splits;
  splits.reserve(static_cast<std::size_t>(plan.split_count));
  for (int s = 0; s < plan.split_count; ++s) {
    std::mt19937_64 rng(mix64(plan.master_seed ^ mix64(static_cast<std::uint64_t>(s) + 1)));
    std::vector<std::string> shuffled = ids;
    for (std::size_t i = shuffled.size(); i > 1; --i) {
      std::swap(shuffled[i - 1], shuffled[Draw(rng, i)]);
    }
    Split split;
    split.train.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.test.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_train), shuffled.end());
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    splits.push_back(std::move(split));
  }
  return splits;
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

double mean(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "mean of an empty set");
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc / static_cast<double>(values.size());
}

CorrelationEntry evaluate_rriqa(const FeatureDump& dump, const Manifest& manifest,
                                const SplitPlan& plan, const std::optional<std::string>& kind_filter,
                                unsigned threads) {
  const DumpVectorSource source(dump);

  struct Item {
    std::string reference_id;
    double quality;  // minus feature distance
    double truth;    // oriented so larger is better
  };
  std::vector<Item> items;
  std::string database;
  for (const auto* row : manifest.distorted()) {
    if (kind_filter && row->kind_label() != *kind_filter) continue;
    if (!row->score) {
      throw Error(ErrorCode::InvalidArgument, "image '" + row->image_id + "' has no ground-truth score");
    }
    const double d = rr_distance(source.get(row->image_id), source.get(row->reference_id));
    const double truth = row->polarity == Polarity::HigherIsWorse ? -*row->score : *row->score;
    items.push_back({row->reference_id, -d, truth});
    if (database.empty()) database = row->database;
  }
  if (items.empty()) {
    throw Error(ErrorCode::DegenerateSplit, "no distorted images" +
                                                (kind_filter ? " of kind " + *kind_filter : std::string()));
  }
  std::set<std::string> ref_set;
  for (const auto& it : items) ref_set.insert(it.reference_id);
  const auto splits = make_splits(plan, {ref_set.begin(), ref_set.end()}, 3);

  CorrelationEntry entry;
  entry.database = database;
  entry.network = std::string(to_string(dump.tap.network));
  entry.layer = dump.tap.layer;
  entry.dist_kind = kind_filter.value_or("all");
  entry.srocc_per_split.resize(splits.size());
  entry.plcc_per_split.resize(splits.size());
  parallel_for(splits.size(), threads, [&](std::size_t s) {
    const std::set<std::string> test(splits[s].test.begin(), splits[s].test.end());
    std::vector<double> q, g;
    for (const auto& it : items) {
      if (test.count(it.reference_id) == 0) continue;
      q.push_back(it.quality);
      g.push_back(it.truth);
    }
    if (q.size() < 3) throw Error(ErrorCode::DegenerateSplit, "fewer than 3 test images in a split");
    entry.srocc_per_split[s] = srocc(q, g);
    entry.plcc_per_split[s] = plcc(q, g);
  });
  entry.srocc_median = median(entry.srocc_per_split);
  entry.srocc_mean = mean(entry.srocc_per_split);
  entry.plcc_median = median(entry.plcc_per_split);
  entry.plcc_mean = mean(entry.plcc_per_split);
  return entry;
}

std::string correlation_report_to_csv(const CorrelationReport& report) {
  std::string out = "database,network,layer,dist_kind,stat,srocc,plcc\n";
  for (const auto& e : report.entries) {
    out += csv_row({e.database, e.network, e.layer, e.dist_kind, "median",
                    format_double(e.srocc_median), format_double(e.plcc_median)});
    out += csv_row({e.database, e.network, e.layer, e.dist_kind, "mean",
                    format_double(e.srocc_mean), format_double(e.plcc_mean)});
  }
  return out;
}

std::string correlation_report_to_json(const CorrelationReport& report) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& e : report.entries) {
    j.push_back({{"database", e.database},
                 {"network", e.network},
                 {"layer", e.layer},
                 {"dist_kind", e.dist_kind},
                 {"srocc_median", e.srocc_median},
                 {"srocc_mean", e.srocc_mean},
                 {"plcc_median", e.plcc_median},
                 {"plcc_mean", e.plcc_mean},
                 {"splits", e.srocc_per_split.size()},
                 {"srocc_per_split", e.srocc_per_split},
                 {"plcc_per_split", e.plcc_per_split}});
  }
  return j.dump(2) + "\n";
}

}  // namespace deepsep
