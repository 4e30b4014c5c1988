#pragma once

#include <span>
#include <string>
#include <vector>

#include "deepsep/features.hpp"

namespace deepsep {

// Labeled point cloud. Labels are arbitrary integers; each distinct value is
// one cluster. Requires N > K >= 2, a common finite dimension d >= 1.
struct ClusteredSet {
  std::vector<std::vector<double>> vectors;
  std::vector<int> labels;

  std::size_t size() const { return vectors.size(); }
  std::size_t dim() const { return vectors.empty() ? 0 : vectors.front().size(); }

  // Throws InvalidArgument when the invariants above do not hold.
  void validate() const;
  // Distinct labels in ascending order.
  std::vector<int> clusters() const;
};

// Distorted records grouped by distortion kind label (references, which carry
// no kind, are skipped). Cluster ids follow the sorted kind labels.
ClusteredSet cluster_by_kind(std::span<const PooledVector> records);

struct IndexTriple {
  double ch = 0.0;
  double db = 0.0;
  double s = 0.0;

  friend bool operator==(const IndexTriple&, const IndexTriple&) = default;
};

// Throws DegenerateWithin when every cluster has zero spread.
double calinski_harabasz(const ClusteredSet& set);
// Throws CoincidentCentroids when two cluster centroids coincide.
double davies_bouldin(const ClusteredSet& set);
// Mean over clusters of the per-cluster mean silhouette width. Points in a
// singleton cluster score 0.
double silhouette(const ClusteredSet& set);

IndexTriple compute_indices(const ClusteredSet& set);

// Min-max scaling of each index over the whole table. Throws ConstantIndex.
std::vector<IndexTriple> normalize_indices(std::span<const IndexTriple> raw);

// (CH' + (1 - DB') + S') / 3 on normalized components.
double dsi(const IndexTriple& normalized);

// ---- DSI tables -------------------------------------------------------------

struct DsiKey {
  std::string network;
  std::string layer;

  friend bool operator==(const DsiKey&, const DsiKey&) = default;
  friend auto operator<=>(const DsiKey&, const DsiKey&) = default;
};

struct DsiRow {
  DsiKey key;
  IndexTriple raw;
  IndexTriple normalized;
  double dsi = 0.0;
  double dsi_std = 0.0;  // only meaningful for repetition means
};

struct DsiTable {
  std::vector<DsiRow> rows;
  std::vector<DsiKey> normalization_set;
  int repetitions = 1;

  const DsiRow* find(const DsiKey& key) const;
};

struct RawIndexEntry {
  DsiKey key;
  IndexTriple raw;
};

// Normalizes over every entry; the normalization set is exactly the entries.
DsiTable build_dsi_table(std::span<const RawIndexEntry> entries);

// Cell-wise mean over repetitions with population standard deviation of dsi.
// Throws KeyMismatch when the tables do not share one key set.
DsiTable dsi_repeat_mean(std::span<const DsiTable> tables);

std::string dsi_table_to_csv(const DsiTable& table);
std::string dsi_table_to_json(const DsiTable& table);
DsiTable dsi_table_from_csv(std::string_view text);
DsiTable dsi_table_from_json(std::string_view text);

// Highest-dsi row per network, in first-appearance order of the networks.
std::vector<DsiRow> best_layer_per_network(const DsiTable& table);

}  // namespace deepsep
