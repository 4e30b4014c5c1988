#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "deepsep/error.hpp"
#include "deepsep/separability.hpp"
#include "oracles.hpp"

using namespace deepsep;

namespace {

ClusteredSet TwoClusters(double gap = 10.0) {
  return {{{0.0}, {2.0}, {gap}, {gap + 2.0}}, {0, 0, 1, 1}};
}

ClusteredSet FromRandom(const oracle::RandomSet& r) { return {r.x, r.labels}; }

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("two-cluster fixture") {
  const auto set = TwoClusters();
  CHECK(calinski_harabasz(set) == doctest::Approx(50.0).epsilon(1e-12));
  CHECK(davies_bouldin(set) == doctest::Approx(0.2).epsilon(1e-12));
  // Per point: a = 2 everywhere; b = 11, 9, 9, 11 for x = 0, 2, 10, 12.
  const double s = (9.0 / 11 + 7.0 / 9 + 7.0 / 9 + 9.0 / 11) / 4.0;
  CHECK(silhouette(set) == doctest::Approx(s).epsilon(1e-12));
  CHECK(std::fabs(silhouette(set) - oracle::Silhouette(set.vectors, set.labels)) < 1e-12);
  CHECK(compute_indices(set) == IndexTriple{calinski_harabasz(set), davies_bouldin(set), silhouette(set)});
}

TEST_CASE("degenerate fixtures") {
  const ClusteredSet tight = {{{0, 0}, {0, 0}, {10, 10}, {10, 10}}, {0, 0, 1, 1}};
  CHECK(davies_bouldin(tight) == 0.0);
  CHECK(silhouette(tight) == 1.0);
  CHECK(CodeOf([&] { calinski_harabasz(tight); }) == ErrorCode::DegenerateWithin);
  const ClusteredSet same_center = {{{-1}, {1}, {-2}, {2}}, {0, 0, 1, 1}};
  CHECK(CodeOf([&] { davies_bouldin(same_center); }) == ErrorCode::CoincidentCentroids);
}

TEST_CASE("singleton clusters score zero silhouette") {
  const ClusteredSet set = {{{0}, {1}, {10}}, {0, 0, 1}};
  // cluster 0: a = 1, b = 10 and 9; cluster 1 is a singleton.
  const double want = ((9.0 / 10 + 8.0 / 9) / 2 + 0.0) / 2;
  CHECK(silhouette(set) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("validation of clustered sets") {
  CHECK(CodeOf([] { ClusteredSet{{{0}, {1}}, {0, 1}}.validate(); }) == ErrorCode::InvalidArgument);
  CHECK(CodeOf([] { ClusteredSet{{{0}, {1}, {2}}, {0, 0, 0}}.validate(); }) == ErrorCode::InvalidArgument);
  CHECK(CodeOf([] { ClusteredSet{{{0}, {1, 2}, {3}}, {0, 1, 1}}.validate(); }) == ErrorCode::InvalidArgument);
  CHECK(CodeOf([] { ClusteredSet{{{0}, {NAN}, {3}}, {0, 1, 1}}.validate(); }) == ErrorCode::InvalidArgument);
  CHECK(CodeOf([] { ClusteredSet{{{0}, {1}, {3}}, {0, 1}}.validate(); }) == ErrorCode::InvalidArgument);
  CHECK(ClusteredSet{{{0}, {1}, {3}}, {5, -1, 5}}.clusters() == std::vector<int>{-1, 5});
}

TEST_CASE("indices agree with brute force on random sets") {
  std::mt19937_64 rng(20240601);
  for (int trial = 0; trial < 200; ++trial) {
    const auto r = oracle::MakeRandomSet(rng);
    const auto set = FromRandom(r);
    CHECK(oracle::Near(calinski_harabasz(set), oracle::CalinskiHarabasz(r.x, r.labels), 1e-9, 1e-9));
    CHECK(oracle::Near(davies_bouldin(set), oracle::DaviesBouldin(r.x, r.labels), 1e-9));
    CHECK(oracle::Near(silhouette(set), oracle::Silhouette(r.x, r.labels), 1e-9));
  }
}

TEST_CASE("moving clusters apart improves every index") {
  IndexTriple prev = compute_indices(TwoClusters(5.0));
  for (double gap : {6.0, 8.0, 20.0, 100.0}) {
    const IndexTriple cur = compute_indices(TwoClusters(gap));
    CHECK(cur.ch > prev.ch);
    CHECK(cur.db < prev.db);
    CHECK(cur.s > prev.s);
    prev = cur;
  }
}

TEST_CASE("translation, scaling, mirroring and label renaming") {
  auto set = TwoClusters();
  const IndexTriple base = compute_indices(set);
  for (auto& v : set.vectors) v[0] = -3.0 * v[0] + 5.0;
  const IndexTriple moved = compute_indices(set);
  CHECK(moved.ch == doctest::Approx(base.ch).epsilon(1e-12));
  CHECK(moved.db == doctest::Approx(base.db).epsilon(1e-12));
  CHECK(moved.s == doctest::Approx(base.s).epsilon(1e-12));
  set.labels = {9, 9, -4, -4};
  CHECK(compute_indices(set).s == doctest::Approx(base.s).epsilon(1e-12));

  const ClusteredSet two_d = {{{0, 0}, {2, 0}, {10, 0}, {12, 0}}, {0, 0, 1, 1}};
  ClusteredSet shifted = two_d;
  for (auto& v : shifted.vectors) {
    v[0] += 5;
    v[1] -= 3;
  }
  CHECK(calinski_harabasz(shifted) == doctest::Approx(50.0).epsilon(1e-12));
}

TEST_CASE("cluster_by_kind groups distorted records") {
  const LayerTap tap = find_tap(Network::SqueezeNet11, "conv1");
  std::vector<PooledVector> recs;
  auto add = [&](const char* id, std::optional<std::string> kind, float v) {
    recs.push_back({tap, id, kind, kind ? std::optional<int>(1) : std::nullopt, {v, -v}});
  };
  add("ref", std::nullopt, 0);
  add("j1", "jpeg", 1);
  add("a1", "awgn", 2);
  add("j2", "jpeg", 3);
  add("a2", "awgn", 4);
  const auto set = cluster_by_kind(recs);
  REQUIRE(set.size() == 4);
  CHECK(set.labels == std::vector<int>{1, 0, 1, 0});
  CHECK(set.vectors[1] == std::vector<double>{2.0, -2.0});
}

TEST_CASE("min-max normalization and fusion") {
  const std::vector<IndexTriple> raw = {{1, 5, 0.1}, {3, 4, 0.3}, {5, 3, 0.2}};
  const auto n = normalize_indices(raw);
  CHECK(n[0].ch == 0.0);
  CHECK(n[1].ch == doctest::Approx(0.5));
  CHECK(n[2].ch == 1.0);
  CHECK(n[0].db == 1.0);
  CHECK(n[1].s == 1.0);
  CHECK(dsi({1, 0, 1}) == 1.0);
  CHECK(dsi({0.5, 0.5, 0.5}) == doctest::Approx(0.5));
  const std::vector<IndexTriple> flat = {{1, 2, 0.1}, {1, 3, 0.2}};
  CHECK(CodeOf([&] { normalize_indices(flat); }) == ErrorCode::ConstantIndex);
}

TEST_CASE("dsi table invariants and best layers") {
  std::vector<RawIndexEntry> entries = {
      {{"alexnet", "conv1"}, {10, 1.2, 0.1}}, {{"alexnet", "conv2"}, {30, 0.8, 0.3}},
      {{"squeezenet11", "conv1"}, {5, 1.5, 0.05}}, {{"squeezenet11", "fire4"}, {40, 0.7, 0.35}},
      {{"squeezenet11", "fire8"}, {20, 1.0, 0.2}}};
  const DsiTable t = build_dsi_table(entries);
  REQUIRE(t.rows.size() == 5);
  CHECK(t.normalization_set.size() == 5);
  double lo[3] = {1, 1, 1}, hi[3] = {0, 0, 0};
  for (const auto& r : t.rows) {
    const double v[3] = {r.normalized.ch, r.normalized.db, r.normalized.s};
    for (int i = 0; i < 3; ++i) {
      lo[i] = std::min(lo[i], v[i]);
      hi[i] = std::max(hi[i], v[i]);
    }
    CHECK(r.dsi == doctest::Approx((r.normalized.ch + 1 - r.normalized.db + r.normalized.s) / 3));
    CHECK(r.dsi >= 0.0);
    CHECK(r.dsi <= 1.0);
  }
  for (int i = 0; i < 3; ++i) {
    CHECK(lo[i] == 0.0);
    CHECK(hi[i] == 1.0);
  }
  const auto best = best_layer_per_network(t);
  REQUIRE(best.size() == 2);
  CHECK(best[0].key.layer == "conv2");
  CHECK(best[1].key.layer == "fire4");

  // Restricting the normalization set keeps the within-network argmax.
  std::vector<RawIndexEntry> squeeze(entries.begin() + 2, entries.end());
  CHECK(best_layer_per_network(build_dsi_table(squeeze))[0].key.layer == "fire4");
  CHECK(t.find({"squeezenet11", "fire8"}) != nullptr);
  CHECK(t.find({"vgg16", "conv31"}) == nullptr);
}

TEST_CASE("dsi table serialization round trips") {
  std::vector<RawIndexEntry> entries = {{{"alexnet", "conv1"}, {10, 1.2, 0.1}},
                                        {{"alexnet", "conv2"}, {30, 0.8, 0.3}},
                                        {{"vgg16", "conv31"}, {12.5, 0.9, 0.25}}};
  const DsiTable t = build_dsi_table(entries);
  const std::string csv = dsi_table_to_csv(t);
  CHECK(csv.find("network,layer,ch,db,s,ch_norm,db_norm,s_norm,dsi\n") != std::string::npos);
  CHECK(csv.find("dsi_std") == std::string::npos);
  for (const DsiTable& back : {dsi_table_from_csv(csv), dsi_table_from_json(dsi_table_to_json(t))}) {
    REQUIRE(back.rows.size() == 3);
    CHECK(back.normalization_set == t.normalization_set);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(back.rows[i].key == t.rows[i].key);
      CHECK(back.rows[i].raw == t.rows[i].raw);
      CHECK(back.rows[i].dsi == t.rows[i].dsi);
    }
  }
}

TEST_CASE("repetition means") {
  std::vector<RawIndexEntry> e1 = {{{"n", "a"}, {1, 1, 0.1}}, {{"n", "b"}, {2, 2, 0.2}}};
  DsiTable a = build_dsi_table(e1), b = a;
  a.rows[0].dsi = 0.4;
  b.rows[0].dsi = 0.6;
  const DsiTable tables[] = {a, b};
  const DsiTable m = dsi_repeat_mean(tables);
  CHECK(m.repetitions == 2);
  CHECK(m.rows[0].dsi == doctest::Approx(0.5));
  CHECK(m.rows[0].dsi_std == doctest::Approx(0.1));
  CHECK(m.rows[1].dsi_std == 0.0);
  const DsiTable back = dsi_table_from_csv(dsi_table_to_csv(m));
  CHECK(back.repetitions == 2);
  CHECK(back.rows[0].dsi_std == doctest::Approx(0.1));

  const DsiTable single[] = {a};
  const DsiTable one = dsi_repeat_mean(single);
  CHECK(one.rows[0].dsi == a.rows[0].dsi);
  CHECK(one.rows[0].dsi_std == 0.0);

  DsiTable c = a;
  c.rows[1].key.layer = "zzz";
  const DsiTable mismatched[] = {a, c};
  CHECK(CodeOf([&] { dsi_repeat_mean(mismatched); }) == ErrorCode::KeyMismatch);
}
