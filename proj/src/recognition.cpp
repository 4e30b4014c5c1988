#include "deepsep/recognition.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "deepsep/error.hpp"
#include "deepsep/simd.hpp"
#include "deepsep/util.hpp"

namespace deepsep {

int knn_predict(std::span<const LabeledVector> train, std::span<const float> query, int k) {
  if (train.empty()) throw Error(ErrorCode::EmptyTrainSet, "k-NN with an empty training set");
  if (k < 1 || static_cast<std::size_t>(k) > train.size()) {
    throw Error(ErrorCode::InvalidArgument, "k = " + std::to_string(k) + " with " +
                                                std::to_string(train.size()) + " training vectors");
  }
  const auto& kern = simd::kernels();
  std::vector<std::pair<double, std::size_t>> dist(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (train[i].values.size() != query.size()) {
      throw Error(ErrorCode::InvalidArgument, "k-NN dimension mismatch");
    }
    dist[i] = {kern.squared_distance_f32(train[i].values.data(), query.data(), query.size()), i};
  }
  const auto kk = static_cast<std::size_t>(k);
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk), dist.end());

  // Votes in neighbor order; the first class to reach the top count among
  // tied classes is the one whose nearest member ranks first.
  std::map<int, int> votes;
  std::map<int, std::size_t> first_seen;
  for (std::size_t r = 0; r < kk; ++r) {
    const int label = train[dist[r].second].label;
    ++votes[label];
    first_seen.emplace(label, r);
  }
  int best = train[dist[0].second].label;
  for (const auto& [label, count] : votes) {
    const int top = votes[best];
    if (count > top || (count == top && first_seen[label] < first_seen[best])) best = label;
  }
  return best;
}

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> classes)
    : classes_(std::move(classes)), counts_(classes_.size() * classes_.size(), 0.0) {}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted, double weight) {
  if (truth >= size() || predicted >= size()) {
    throw Error(ErrorCode::InvalidArgument, "confusion matrix index out of range");
  }
  counts_[truth * size() + predicted] += weight;
}

double ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), 0.0);
}

double ConfusionMatrix::trace() const {
  double t = 0.0;
  for (std::size_t i = 0; i < size(); ++i) t += at(i, i);
  return t;
}

double ConfusionMatrix::accuracy() const {
  const double n = total();
  return n > 0.0 ? trace() / n : 0.0;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.classes_ != classes_) {
    throw Error(ErrorCode::KeyMismatch, "confusion matrices over different classes");
  }
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

ConfusionMatrix ConfusionMatrix::scaled(double factor) const {
  ConfusionMatrix out = *this;
  for (double& v : out.counts_) v *= factor;
  return out;
}

ConfusionMatrix ConfusionMatrix::row_normalized() const {
  ConfusionMatrix out = *this;
  const std::size_t n = size();
  for (std::size_t r = 0; r < n; ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < n; ++c) sum += at(r, c);
    if (sum <= 0.0) continue;
    for (std::size_t c = 0; c < n; ++c) out.counts_[r * n + c] /= sum;
  }
  return out;
}

std::string_view to_string(RecognitionTask task) {
  return task == RecognitionTask::Type ? "type" : "type-severity";
}

RecognitionTask parse_task(std::string_view text) {
  const std::string t = to_lower(text);
  if (t == "type") return RecognitionTask::Type;
  if (t == "type-severity" || t == "type_severity" || t == "joint") return RecognitionTask::TypeSeverity;
  throw Error(ErrorCode::InvalidArgument, "unknown recognition task '" + std::string(text) + "'");
}

std::string class_label(const ManifestRow& row, RecognitionTask task) {
  if (task == RecognitionTask::Type) return row.kind_label();
  return row.kind_label() + "@" + row.level_label();
}

RecognitionResult evaluate_recognition(const FeatureDump& dump, const Manifest& manifest,
                                       RecognitionTask task, int k, const SplitPlan& plan,
                                       unsigned threads) {
  const DumpVectorSource source(dump);

  // Class set in (kinds, levels) order so severities sort numerically.
  std::map<std::pair<std::string, std::vector<int>>, std::string> ordered;
  for (const auto* row : manifest.distorted()) {
    std::vector<int> levels = task == RecognitionTask::TypeSeverity ? row->levels : std::vector<int>{};
    ordered.emplace(std::pair{row->kind_label(), std::move(levels)}, class_label(*row, task));
  }
  std::vector<std::string> classes;
  for (const auto& [key, label] : ordered) classes.push_back(label);
  std::map<std::string, int> class_id;
  for (std::size_t i = 0; i < classes.size(); ++i) class_id[classes[i]] = static_cast<int>(i);

  struct Item {
    std::string reference_id;
    LabeledVector vector;
  };
  std::vector<Item> items;
  std::string database;
  for (const auto* row : manifest.distorted()) {
    const auto& pooled = source.get(row->image_id);
    items.push_back({row->reference_id, {pooled.values, class_id.at(class_label(*row, task))}});
    if (database.empty()) database = row->database;
  }
  if (items.empty()) throw Error(ErrorCode::DegenerateSplit, "manifest has no distorted images");

  const auto splits = make_splits(plan, manifest.reference_ids(), 1);
  std::vector<ConfusionMatrix> per_split(splits.size(), ConfusionMatrix(classes));
  std::vector<double> accuracy(splits.size(), 0.0);
  parallel_for(splits.size(), threads, [&](std::size_t s) {
    const std::set<std::string> test(splits[s].test.begin(), splits[s].test.end());
    std::vector<LabeledVector> train;
    std::vector<const Item*> queries;
    for (const auto& it : items) {
      if (test.count(it.reference_id)) {
        queries.push_back(&it);
      } else {
        train.push_back(it.vector);
      }
    }
    if (queries.empty()) throw Error(ErrorCode::DegenerateSplit, "split has no test images");
    ConfusionMatrix& cm = per_split[s];
    for (const Item* q : queries) {
      const int predicted = knn_predict(train, q->vector.values, k);
      cm.add(static_cast<std::size_t>(q->vector.label), static_cast<std::size_t>(predicted));
    }
    accuracy[s] = cm.accuracy();
  });

  RecognitionResult result;
  result.database = database;
  result.network = std::string(to_string(dump.tap.network));
  result.layer = dump.tap.layer;
  result.task = task;
  result.k = k;
  result.accuracy_per_split = accuracy;
  result.mean_accuracy = mean(accuracy);
  ConfusionMatrix sum(classes);
  for (const auto& cm : per_split) sum += cm;
  result.mean_confusion = sum.scaled(1.0 / static_cast<double>(per_split.size()));
  return result;
}

std::string recognition_results_to_csv(std::span<const RecognitionResult> results) {
  std::string out = "database,network,layer,task,k,accuracy_mean,accuracy_median,splits\n";
  for (const auto& r : results) {
    out += csv_row({r.database, r.network, r.layer, std::string(to_string(r.task)),
                    std::to_string(r.k), format_double(r.mean_accuracy),
                    format_double(median(r.accuracy_per_split)),
                    std::to_string(r.accuracy_per_split.size())});
  }
  return out;
}

std::string confusion_to_csv(const ConfusionMatrix& matrix) {
  std::vector<std::string> header = {"truth\\predicted"};
  header.insert(header.end(), matrix.classes().begin(), matrix.classes().end());
  std::string out = csv_row(header);
  for (std::size_t r = 0; r < matrix.size(); ++r) {
    std::vector<std::string> row = {matrix.classes()[r]};
    for (std::size_t c = 0; c < matrix.size(); ++c) row.push_back(format_double(matrix.at(r, c)));
    out += csv_row(row);
  }
  return out;
}

}  // namespace deepsep
