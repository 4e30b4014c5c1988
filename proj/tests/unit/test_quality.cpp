#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <set>

#include "deepsep/error.hpp"
#include "deepsep/quality.hpp"
#include "oracles.hpp"

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

std::vector<std::string> Ids(int n) {
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) ids.push_back("ref" + std::to_string(i));
  return ids;
}

// Six references, three kinds, four levels. The feature vector of a distorted
// image sits at distance level * (1 + kind) from its reference, with an
// optional jitter that scrambles ordering.
struct Synthetic {
  Manifest manifest;
  FeatureDump dump;
};

Synthetic MakeSynthetic(Polarity polarity, double jitter) {
  const LayerTap tap = find_tap(Network::SqueezeNet11, "conv1");
  std::vector<ManifestRow> rows;
  FeatureDump dump{tap, {}, {}};
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-jitter, jitter);
  const char* kinds[] = {"awgn", "gblur", "jpeg"};
  for (int r = 0; r < 6; ++r) {
    const std::string ref = "ref" + std::to_string(r);
    rows.push_back({ref + ".png", ref, ref, {}, {}, std::nullopt, polarity, "SYN"});
    std::vector<float> base(64, 0.0f);
    base[0] = static_cast<float>(r * 100);
    dump.records.push_back({tap, ref, std::nullopt, std::nullopt, base});
    for (int k = 0; k < 3; ++k) {
      for (int level = 1; level <= 4; ++level) {
        const std::string id = ref + "_" + kinds[k] + "_" + std::to_string(level);
        const double score = polarity == Polarity::HigherIsWorse ? level : 10.0 - level;
        rows.push_back({id + ".png", id, ref, {kinds[k]}, {level}, score, polarity, "SYN"});
        auto v = base;
        v[1 + k] = static_cast<float>(level * (1 + k) + u(rng));
        dump.records.push_back({tap, id, std::string(kinds[k]), level, v});
      }
    }
  }
  return {Manifest(std::move(rows)), std::move(dump)};
}

}  // namespace

TEST_CASE("rr distance") {
  const LayerTap tap = find_tap(Network::SqueezeNet11, "conv1");
  PooledVector a{tap, "a", {}, {}, std::vector<float>(64, 0.0f)}, b = a;
  b.values[0] = 3;
  b.values[5] = 4;
  CHECK(rr_distance(a, a) == 0.0);
  CHECK(rr_distance(a, b) == doctest::Approx(5.0));
  CHECK(rr_distance(b, a) == rr_distance(a, b));
  PooledVector c = a;
  c.tap = find_tap(Network::SqueezeNet11, "fire1");
  CHECK(CodeOf([&] { rr_distance(a, c); }) == ErrorCode::TapMismatch);
}

TEST_CASE("correlation fixtures") {
  const std::vector<double> x = {1, 2, 3};
  CHECK(srocc(x, std::vector<double>{10, 20, 30}) == doctest::Approx(1.0));
  CHECK(srocc(x, std::vector<double>{3, 2, 1}) == doctest::Approx(-1.0));
  const double tie = srocc(std::vector<double>{1, 2, 2, 3}, std::vector<double>{1, 2, 3, 4});
  CHECK(tie == doctest::Approx(4.5 / std::sqrt(22.5)).epsilon(1e-12));
  CHECK(std::fabs(tie - 0.94868) < 1e-5);
  CHECK(average_ranks(std::vector<double>{5, 1, 5, 3}) == std::vector<double>{3.5, 1, 3.5, 2});

  const std::vector<double> px = {1, 2, 3, 4}, py = {1, 2, 3, 100};
  CHECK(std::fabs(plcc(px, py) - oracle::Pearson(px, py)) < 1e-12);
  std::vector<double> aff;
  for (double v : px) aff.push_back(2 * v + 1);
  CHECK(plcc(px, aff) == doctest::Approx(1.0));
  CHECK(plcc(px, std::vector<double>{-1, -2, -3, -4}) == doctest::Approx(-1.0));
}

TEST_CASE("correlation preconditions") {
  const std::vector<double> two = {1, 2};
  CHECK(CodeOf([&] { srocc(two, two); }) == ErrorCode::InvalidArgument);
  CHECK(CodeOf([&] { plcc(std::vector<double>{1, 2, 3}, two); }) == ErrorCode::InvalidArgument);
  CHECK(CodeOf([] { plcc(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}); }) ==
        ErrorCode::ConstantInput);
  CHECK(CodeOf([] { srocc(std::vector<double>{1, 2, 3}, std::vector<double>{4, 4, 4}); }) ==
        ErrorCode::ConstantInput);
}

TEST_CASE("random series against the direct formula") {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> nd;
  std::uniform_int_distribution<int> len(3, 60), coin(0, 3);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = len(rng);
    std::vector<double> x(n), y(n);
    for (int i = 0; i < n; ++i) {
      x[i] = coin(rng) == 0 ? std::round(nd(rng)) : nd(rng);  // some ties
      y[i] = 0.5 * x[i] + nd(rng);
    }
    if (*std::min_element(x.begin(), x.end()) == *std::max_element(x.begin(), x.end())) continue;
    CHECK(std::fabs(plcc(x, y) - oracle::Pearson(x, y)) < 1e-12);
    CHECK(std::fabs(srocc(x, y) - oracle::Spearman(x, y)) < 1e-12);
    std::vector<double> ex(n), cube(n), ax(n);
    for (int i = 0; i < n; ++i) {
      ex[i] = std::exp(x[i]);
      cube[i] = y[i] * y[i] * y[i];
      ax[i] = 3.5 * x[i] - 7.0;
    }
    CHECK(std::fabs(srocc(ex, cube) - srocc(x, y)) < 1e-12);
    CHECK(std::fabs(plcc(ax, y) - plcc(x, y)) < 1e-12);
  }
}

TEST_CASE("median and mean") {
  CHECK(median({3, 1, 2}) == 2);
  CHECK(median({4, 1, 2, 3}) == 2.5);
  CHECK(mean(std::vector<double>{1, 2, 6}) == 3);
  CHECK_THROWS_AS(median({}), Error);
}

TEST_CASE("splits are disjoint, sized and deterministic") {
  SplitPlan plan{50, 0.8, 17};
  auto ids = Ids(29);
  const auto a = make_splits(plan, ids);
  std::reverse(ids.begin(), ids.end());
  ids.push_back("ref3");  // duplicates collapse
  const auto b = make_splits(plan, ids);
  REQUIRE(a.size() == 50);
  std::set<std::vector<std::string>> distinct;
  for (std::size_t s = 0; s < a.size(); ++s) {
    CHECK(a[s].train == b[s].train);
    CHECK(a[s].test == b[s].test);
    CHECK(a[s].train.size() == 23);
    CHECK(a[s].test.size() == 6);
    std::set<std::string> all(a[s].train.begin(), a[s].train.end());
    for (const auto& t : a[s].test) CHECK(all.insert(t).second);
    CHECK(all.size() == 29);
    CHECK(std::is_sorted(a[s].test.begin(), a[s].test.end()));
    distinct.insert(a[s].test);
  }
  CHECK(distinct.size() > 40);
  CHECK(make_splits({50, 0.8, 18}, Ids(29))[0].test != a[0].test);
}

TEST_CASE("degenerate split plans") {
  CHECK(CodeOf([] { make_splits({10, 1.0, 0}, Ids(5)); }) == ErrorCode::DegenerateSplit);
  CHECK(CodeOf([] { make_splits({10, 0.5, 0}, Ids(4), 3); }) == ErrorCode::DegenerateSplit);
  CHECK(CodeOf([] { make_splits({0, 0.5, 0}, Ids(4)); }) == ErrorCode::InvalidArgument);
  CHECK(CodeOf([] { make_splits({1, 1.5, 0}, Ids(4)); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("rriqa rewards distance tracking severity under both polarities") {
  for (Polarity pol : {Polarity::HigherIsWorse, Polarity::HigherIsBetter}) {
    const auto syn = MakeSynthetic(pol, 0.0);
    const SplitPlan plan{20, 0.5, 1};
    for (const char* kind : {"awgn", "gblur", "jpeg"}) {
      const auto e = evaluate_rriqa(syn.dump, syn.manifest, plan, std::string(kind));
      CHECK(e.dist_kind == kind);
      CHECK(e.srocc_mean == doctest::Approx(1.0));
      CHECK(e.srocc_median == doctest::Approx(1.0));
      CHECK(e.plcc_mean > 0.99);
      CHECK(e.srocc_per_split.size() == 20);
    }
    const auto all = evaluate_rriqa(syn.dump, syn.manifest, plan);
    CHECK(all.dist_kind == "all");
    CHECK(all.database == "SYN");
    CHECK(all.layer == "conv1");
    CHECK(all.srocc_mean > 0.0);
    CHECK(all.srocc_mean < 1.0);
  }
}

TEST_CASE("rriqa is thread-count independent and reports missing data") {
  const auto syn = MakeSynthetic(Polarity::HigherIsWorse, 2.0);
  const SplitPlan plan{30, 0.5, 4};
  const auto one = evaluate_rriqa(syn.dump, syn.manifest, plan, std::nullopt, 1);
  const auto four = evaluate_rriqa(syn.dump, syn.manifest, plan, std::nullopt, 4);
  CHECK(one.srocc_per_split == four.srocc_per_split);
  CHECK(one.plcc_per_split == four.plcc_per_split);

  FeatureDump partial = syn.dump;
  partial.records.pop_back();
  CHECK(CodeOf([&] { evaluate_rriqa(partial, syn.manifest, plan); }) == ErrorCode::MissingVector);
  CHECK(CodeOf([&] { evaluate_rriqa(syn.dump, syn.manifest, {10, 1.0, 0}); }) == ErrorCode::DegenerateSplit);
  CHECK(CodeOf([&] { evaluate_rriqa(syn.dump, syn.manifest, plan, std::string("ff")); }) ==
        ErrorCode::DegenerateSplit);

  CorrelationReport report{{one}};
  const std::string csv = correlation_report_to_csv(report);
  CHECK(csv.rfind("database,network,layer,dist_kind,stat,srocc,plcc\n", 0) == 0);
  CHECK(csv.find("SYN,squeezenet11,conv1,all,median,") != std::string::npos);
  CHECK(csv.find("SYN,squeezenet11,conv1,all,mean,") != std::string::npos);
  CHECK(correlation_report_to_json(report).find("\"dist_kind\"") != std::string::npos);
}
