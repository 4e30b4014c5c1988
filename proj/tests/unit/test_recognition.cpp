#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "deepsep/error.hpp"
#include "deepsep/recognition.hpp"

using namespace deepsep;

namespace {

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvalidArgument;
}

struct Corpus {
  Manifest manifest;
  FeatureDump dump;
};

// Distorted vectors depend on (kind, level) plus a per-reference offset of
// size `spread`; with spread 0 every reference produces identical vectors.
Corpus MakeCorpus(int refs, double spread) {
  const LayerTap tap = find_tap(Network::SqueezeNet11, "conv1");
  std::vector<ManifestRow> rows;
  FeatureDump dump{tap, {}, {}};
  const char* kinds[] = {"awgn", "gblur", "jpeg"};
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  for (int r = 0; r < refs; ++r) {
    const std::string ref = "r" + std::to_string(r);
    rows.push_back({ref + ".png", ref, ref, {}, {}, std::nullopt, Polarity::HigherIsWorse, "SYN"});
    dump.records.push_back({tap, ref, std::nullopt, std::nullopt, std::vector<float>(64, 0.0f)});
    for (int k = 0; k < 3; ++k)
      for (int l = 1; l <= 9; ++l) {
        const std::string id = ref + "_" + kinds[k] + "_" + std::to_string(l);
        rows.push_back({id + ".png", id, ref, {kinds[k]}, {l}, double(l), Polarity::HigherIsWorse, "SYN"});
        std::vector<float> v(64, 0.0f);
        v[k] = static_cast<float>(10.0 * l);
        v[3 + l] = 5.0f;
        for (int j = 20; j < 24; ++j) v[j] = static_cast<float>(spread * nd(rng));
        dump.records.push_back({tap, id, std::string(kinds[k]), l, v});
      }
  }
  return {Manifest(std::move(rows)), std::move(dump)};
}

}  // namespace

TEST_CASE("knn majority and tie rules") {
  std::vector<LabeledVector> same = {{{0, 0}, 4}, {{5, 5}, 4}, {{9, 1}, 4}};
  CHECK(knn_predict(same, std::vector<float>{100, -3}, 3) == 4);

  std::vector<LabeledVector> train = {{{0.0f}, 0}, {{1.0f}, 0}, {{1.5f}, 1}, {{10.0f}, 1}};
  CHECK(knn_predict(train, std::vector<float>{0.2f}, 3) == 0);

  // k = 2 vote tie; the nearest neighbor carries label 1.
  std::vector<LabeledVector> tie = {{{0.0f}, 0}, {{2.0f}, 1}};
  CHECK(knn_predict(tie, std::vector<float>{1.2f}, 2) == 1);
  CHECK(knn_predict(tie, std::vector<float>{0.8f}, 2) == 0);

  // Equal distances keep insertion order.
  std::vector<LabeledVector> equal = {{{-1.0f}, 7}, {{1.0f}, 3}};
  CHECK(knn_predict(equal, std::vector<float>{0.0f}, 1) == 7);
  std::vector<LabeledVector> swapped = {{{1.0f}, 3}, {{-1.0f}, 7}};
  CHECK(knn_predict(swapped, std::vector<float>{0.0f}, 1) == 3);
  CHECK(knn_predict(swapped, std::vector<float>{0.0f}, 2) == 3);
}

TEST_CASE("knn argument checks") {
  std::vector<LabeledVector> train = {{{0.0f}, 0}};
  CHECK(CodeOf([&] { knn_predict({}, std::vector<float>{0.0f}, 1); }) == ErrorCode::EmptyTrainSet);
  CHECK(CodeOf([&] { knn_predict(train, std::vector<float>{0.0f}, 2); }) == ErrorCode::InvalidArgument);
  CHECK(CodeOf([&] { knn_predict(train, std::vector<float>{0.0f}, 0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("knn is invariant under similarity transforms") {
  std::mt19937_64 rng(2);
  std::normal_distribution<float> nd;
  std::uniform_int_distribution<int> lab(0, 2);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<LabeledVector> train(30);
    for (auto& t : train) {
      t.values = {nd(rng), nd(rng)};
      t.label = lab(rng);
    }
    const std::vector<float> q = {nd(rng), nd(rng)};
    const int before = knn_predict(train, q, 3);
    const float c = std::cos(0.7f), s = std::sin(0.7f);
    auto tf = [&](const std::vector<float>& v) {
      return std::vector<float>{2.0f * (c * v[0] - s * v[1]) + 3.0f, 2.0f * (s * v[0] + c * v[1]) - 1.0f};
    };
    for (auto& t : train) t.values = tf(t.values);
    CHECK(knn_predict(train, tf(q), 3) == before);
  }
}

TEST_CASE("confusion matrix arithmetic") {
  ConfusionMatrix cm({"a", "b", "c"});
  cm.add(0, 0);
  cm.add(0, 1);
  cm.add(1, 1, 2.0);
  cm.add(2, 0);
  CHECK(cm.total() == 5);
  CHECK(cm.trace() == 3);
  CHECK(cm.accuracy() == doctest::Approx(0.6));
  const auto rn = cm.row_normalized();
  CHECK(rn.at(0, 0) == 0.5);
  CHECK(rn.at(1, 1) == 1.0);
  ConfusionMatrix other({"a", "b", "c"});
  other.add(1, 2);
  cm += other;
  CHECK(cm.at(1, 2) == 1.0);
  CHECK(cm.scaled(0.5).total() == doctest::Approx(3.0));
  ConfusionMatrix wrong({"x"});
  CHECK_THROWS_AS(cm += wrong, Error);
  CHECK(confusion_to_csv(cm).rfind("truth\\predicted,a,b,c\n", 0) == 0);
}

TEST_CASE("task names and class labels") {
  CHECK(to_string(RecognitionTask::Type) == "type");
  CHECK(parse_task("type-severity") == RecognitionTask::TypeSeverity);
  CHECK_THROWS_AS(parse_task("severity"), Error);
  const ManifestRow row{"x.png", "x", "r", {"gblur", "jpeg"}, {2, 3}, 1.0, Polarity::HigherIsWorse, "LIVEMD"};
  CHECK(class_label(row, RecognitionTask::Type) == "gblur+jpeg");
  CHECK(class_label(row, RecognitionTask::TypeSeverity) == "gblur+jpeg@2+3");
}

TEST_CASE("memorization yields perfect accuracy") {
  const auto c = MakeCorpus(5, 0.0);
  const SplitPlan plan{10, 0.6, 3};
  const auto type = evaluate_recognition(c.dump, c.manifest, RecognitionTask::Type, 3, plan);
  CHECK(type.mean_accuracy == 1.0);
  CHECK(type.mean_confusion.classes() == std::vector<std::string>{"awgn", "gblur", "jpeg"});
  const auto joint = evaluate_recognition(c.dump, c.manifest, RecognitionTask::TypeSeverity, 1, plan);
  CHECK(joint.mean_accuracy == 1.0);
  REQUIRE(joint.mean_confusion.size() == 27);
  CHECK(joint.mean_confusion.classes()[0] == "awgn@1");
  CHECK(joint.mean_confusion.classes()[8] == "awgn@9");
  // 2 test references x 27 images per split.
  CHECK(joint.mean_confusion.total() == doctest::Approx(54.0));
}

TEST_CASE("accuracy equals confusion trace ratio and ignores thread count") {
  const auto c = MakeCorpus(6, 40.0);
  const SplitPlan plan{25, 0.5, 11};
  const auto a = evaluate_recognition(c.dump, c.manifest, RecognitionTask::TypeSeverity, 3, plan, 1);
  const auto b = evaluate_recognition(c.dump, c.manifest, RecognitionTask::TypeSeverity, 3, plan, 3);
  CHECK(a.accuracy_per_split == b.accuracy_per_split);
  CHECK(a.mean_accuracy < 1.0);
  CHECK(a.mean_confusion.accuracy() == doctest::Approx(a.mean_accuracy).epsilon(1e-12));
  CHECK(a.accuracy_per_split.size() == 25);
  CHECK(a.database == "SYN");

  const RecognitionResult results[] = {a};
  const std::string csv = recognition_results_to_csv(results);
  CHECK(csv.rfind("database,network,layer,task,k,accuracy_mean,accuracy_median,splits\n", 0) == 0);
  CHECK(csv.find("SYN,squeezenet11,conv1,type-severity,3,") != std::string::npos);

  FeatureDump partial = c.dump;
  partial.records.pop_back();
  CHECK(CodeOf([&] { evaluate_recognition(partial, c.manifest, RecognitionTask::Type, 3, plan); }) ==
        ErrorCode::MissingVector);
  CHECK(CodeOf([&] { evaluate_recognition(c.dump, c.manifest, RecognitionTask::Type, 3, {5, 1.0, 0}); }) ==
        ErrorCode::DegenerateSplit);
}
