#pragma once

#include <span>
#include <string>
#include <vector>

#include "deepsep/separability.hpp"

namespace deepsep {

struct PcaModel {
  std::vector<double> mean;                     // length d
  std::vector<std::vector<double>> components;  // m rows of length d, orthonormal
  std::vector<double> explained_variance;       // m values, non-increasing, N - 1 denominator

  std::size_t dim() const { return mean.size(); }
  std::size_t rank() const { return components.size(); }
};

// Centered SVD keeping the top m right singular directions. Each component is
// signed so that its largest-magnitude loading is positive. Requires
// 1 <= m <= min(N, d) and N >= 2. Directions beyond the numerical rank get
// variance 0, or RankDeficient when `strict` is set.
PcaModel pca_fit(std::span<const std::vector<double>> vectors, std::size_t m, bool strict = false);

std::vector<std::vector<double>> pca_transform(const PcaModel& model,
                                               std::span<const std::vector<double>> vectors);

inline constexpr int kFullDim = -1;

struct PcaSweepRow {
  int dim = 0;  // resolved dimension
  IndexTriple raw;
  IndexTriple normalized;
  double dsi = 0.0;
};

// Projects the set to each requested dimension, recomputes the indices and
// normalizes within the sweep. `dims` must contain 2 and kFullDim; the full
// dimension resolves to min(N, d).
std::vector<PcaSweepRow> pca_sweep(const ClusteredSet& set, std::span<const int> dims);

// "2,4,8,full" -> {2, 4, 8, kFullDim}. Throws InvalidArgument.
std::vector<int> parse_dims(std::string_view text);

std::string pca_sweep_to_csv(const std::vector<PcaSweepRow>& rows);

}  // namespace deepsep
