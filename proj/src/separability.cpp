#include "deepsep/separability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "deepsep/error.hpp"
#include "deepsep/simd.hpp"

namespace deepsep {

namespace {

struct Grouped {
  std::vector<std::vector<std::size_t>> members;  // per cluster, in sample order
  std::vector<std::vector<double>> centroids;
  std::vector<double> grand;
};

Grouped Group(const ClusteredSet& set) {
  set.validate();
  const auto ids = set.clusters();
  std::map<int, std::size_t> slot;
  for (std::size_t k = 0; k < ids.size(); ++k) slot[ids[k]] = k;
  const std::size_t d = set.dim();
  Grouped g;
  g.members.resize(ids.size());
  for (std::size_t i = 0; i < set.size(); ++i) g.members[slot[set.labels[i]]].push_back(i);
  g.centroids.assign(ids.size(), std::vector<double>(d, 0.0));
  g.grand.assign(d, 0.0);
  for (std::size_t k = 0; k < ids.size(); ++k) {
    auto& c = g.centroids[k];
    for (std::size_t i : g.members[k]) {
      for (std::size_t j = 0; j < d; ++j) c[j] += set.vectors[i][j];
    }
    for (double& v : c) v /= static_cast<double>(g.members[k].size());
  }
  for (const auto& x : set.vectors) {
    for (std::size_t j = 0; j < d; ++j) g.grand[j] += x[j];
  }
  for (double& v : g.grand) v /= static_cast<double>(set.size());
  return g;
}

double Dist2(const std::vector<double>& a, const std::vector<double>& b) {
  return simd::squared_distance(std::span<const double>(a), std::span<const double>(b));
}

}  // namespace

void ClusteredSet::validate() const {
  if (vectors.size() != labels.size()) {
    throw Error(ErrorCode::InvalidArgument, "vector and label counts differ");
  }
  const std::size_t d = dim();
  if (d == 0) throw Error(ErrorCode::InvalidArgument, "clustered set has no dimensions");
  for (const auto& x : vectors) {
    if (x.size() != d) throw Error(ErrorCode::InvalidArgument, "vectors have unequal dimension");
    for (double v : x) {
      if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite coordinate");
    }
  }
  const std::size_t k = clusters().size();
  if (k < 2) throw Error(ErrorCode::InvalidArgument, "at least two clusters are required");
  if (vectors.size() <= k) {
    throw Error(ErrorCode::InvalidArgument, "need more samples than clusters");
  }
}

std::vector<int> ClusteredSet::clusters() const {
  std::vector<int> ids(labels);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

ClusteredSet cluster_by_kind(std::span<const PooledVector> records) {
  std::map<std::string, int> ids;
  for (const auto& r : records) {
    if (r.distortion_kind && !r.distortion_kind->empty()) ids.emplace(*r.distortion_kind, 0);
  }
  int next = 0;
  for (auto& [kind, id] : ids) id = next++;
  ClusteredSet set;
  for (const auto& r : records) {
    if (!r.distortion_kind || r.distortion_kind->empty()) continue;
    set.vectors.emplace_back(r.values.begin(), r.values.end());
    set.labels.push_back(ids.at(*r.distortion_kind));
  }
  return set;
}

double calinski_harabasz(const ClusteredSet& set) {
  const Grouped g = Group(set);
  const std::size_t n = set.size(), k = g.members.size();
  double ssw = 0.0, ssb = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i : g.members[c]) ssw += Dist2(set.vectors[i], g.centroids[c]);
    ssb += static_cast<double>(g.members[c].size()) * Dist2(g.centroids[c], g.grand);
  }
  if (ssw == 0.0) throw Error(ErrorCode::DegenerateWithin, "within-cluster dispersion is zero");
  return (ssb / ssw) * (static_cast<double>(n - k) / static_cast<double>(k - 1));
}

double davies_bouldin(const ClusteredSet& set) {
  const Grouped g = Group(set);
  const std::size_t k = g.members.size();
  std::vector<double> spread(k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i : g.members[c]) spread[c] += std::sqrt(Dist2(set.vectors[i], g.centroids[c]));
    spread[c] /= static_cast<double>(g.members[c].size());
  }
  double total = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    double worst = 0.0;
    for (std::size_t b = 0; b < k; ++b) {
      if (a == b) continue;
      const double sep = std::sqrt(Dist2(g.centroids[a], g.centroids[b]));
      if (sep == 0.0) throw Error(ErrorCode::CoincidentCentroids, "two cluster centroids coincide");
      worst = std::max(worst, (spread[a] + spread[b]) / sep);
    }
    total += worst;
  }
  return total / static_cast<double>(k);
}

double silhouette(const ClusteredSet& set) {
  const Grouped g = Group(set);
  const std::size_t n = set.size(), k = g.members.size();
  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      dist[i * n + j] = dist[j * n + i] = std::sqrt(Dist2(set.vectors[i], set.vectors[j]));
    }
  }
  double total = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    const auto& own = g.members[c];
    double cluster_sum = 0.0;
    if (own.size() > 1) {
      for (std::size_t i : own) {
        double a = 0.0;
        for (std::size_t j : own) a += dist[i * n + j];
        a /= static_cast<double>(own.size() - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t o = 0; o < k; ++o) {
          if (o == c) continue;
          double m = 0.0;
          for (std::size_t j : g.members[o]) m += dist[i * n + j];
          b = std::min(b, m / static_cast<double>(g.members[o].size()));
        }
        const double denom = std::max(a, b);
        cluster_sum += denom > 0.0 ? (b - a) / denom : 0.0;
      }
    }
    total += cluster_sum / static_cast<double>(own.size());
  }
  return total / static_cast<double>(k);
}

IndexTriple compute_indices(const ClusteredSet& set) {
  return {calinski_harabasz(set), davies_bouldin(set), silhouette(set)};
}

std::vector<IndexTriple> normalize_indices(std::span<const IndexTriple> raw) {
  if (raw.empty()) return {};
  auto scale = [&](double IndexTriple::*field, const char* name) {
    double lo = raw.front().*field, hi = lo;
    for (const auto& t : raw) {
      lo = std::min(lo, t.*field);
      hi = std::max(hi, t.*field);
    }
    if (hi == lo) {
      throw Error(ErrorCode::ConstantIndex, std::string(name) + " is constant across the table");
    }
    return std::pair{lo, hi - lo};
  };
  const auto [ch_lo, ch_span] = scale(&IndexTriple::ch, "CH");
  const auto [db_lo, db_span] = scale(&IndexTriple::db, "DB");
  const auto [s_lo, s_span] = scale(&IndexTriple::s, "S");
  std::vector<IndexTriple> out;
  out.reserve(raw.size());
  for (const auto& t : raw) {
    out.push_back({(t.ch - ch_lo) / ch_span, (t.db - db_lo) / db_span, (t.s - s_lo) / s_span});
  }
  return out;
}

double dsi(const IndexTriple& n) { return (n.ch + (1.0 - n.db) + n.s) / 3.0; }

}  // namespace deepsep
