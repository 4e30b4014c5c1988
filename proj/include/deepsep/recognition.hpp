#pragma once

#include <span>
#include <string>
#include <vector>

#include "deepsep/features.hpp"
#include "deepsep/manifest.hpp"
#include "deepsep/quality.hpp"

namespace deepsep {

struct LabeledVector {
  std::vector<float> values;
  int label = 0;
};

// Majority vote among the k nearest training vectors (Euclidean). Equal
// distances keep training order; a tied vote goes to the tied class whose
// nearest member ranks first. Throws EmptyTrainSet, InvalidArgument (k < 1 or
// k > |train|).
int knn_predict(std::span<const LabeledVector> train, std::span<const float> query, int k);

class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::vector<std::string> classes);

  const std::vector<std::string>& classes() const { return classes_; }
  std::size_t size() const { return classes_.size(); }

  double at(std::size_t truth, std::size_t predicted) const { return counts_[truth * size() + predicted]; }
  void add(std::size_t truth, std::size_t predicted, double weight = 1.0);

  double total() const;
  double trace() const;
  double accuracy() const;  // trace / total

  // Element-wise sum with a matrix over the same classes.
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  ConfusionMatrix scaled(double factor) const;
  // Rows divided by their sums; empty rows stay zero.
  ConfusionMatrix row_normalized() const;

 private:
  std::vector<std::string> classes_;
  std::vector<double> counts_;
};

enum class RecognitionTask { Type, TypeSeverity };

std::string_view to_string(RecognitionTask task);
RecognitionTask parse_task(std::string_view text);

// Class label of a distorted manifest row under a task: "gblur" for Type,
// "gblur@3" for TypeSeverity (multi-distortion rows use the '+'-joined forms).
std::string class_label(const ManifestRow& row, RecognitionTask task);

struct RecognitionResult {
  std::string database;
  std::string network;
  std::string layer;
  RecognitionTask task = RecognitionTask::Type;
  int k = 3;
  std::vector<double> accuracy_per_split;
  double mean_accuracy = 0.0;
  // Raw counts averaged over splits (before any row normalization).
  ConfusionMatrix mean_confusion;
};

// Per split: memorize train-side distorted vectors, classify every test-side
// distorted vector, then average accuracy and confusion counts over splits.
// Throws MissingVector, DegenerateSplit (empty test side), EmptyTrainSet.
RecognitionResult evaluate_recognition(const FeatureDump& dump, const Manifest& manifest,
                                       RecognitionTask task, int k, const SplitPlan& plan,
                                       unsigned threads = 1);

std::string recognition_results_to_csv(std::span<const RecognitionResult> results);
std::string confusion_to_csv(const ConfusionMatrix& matrix);

}  // namespace deepsep
