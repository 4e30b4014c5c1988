#pragma once

// Independent reference formulations shared by the unit tests and the
// acceptance binary. Deliberately naive: pairwise sums in long double, no
// reuse of library helpers.

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <vector>

namespace oracle {

using Points = std::vector<std::vector<double>>;

inline long double Dist2(const std::vector<double>& a, const std::vector<double>& b) {
  long double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const long double d = static_cast<long double>(a[i]) - b[i];
    s += d * d;
  }
  return s;
}

inline long double Dist(const std::vector<double>& a, const std::vector<double>& b) {
  return std::sqrt(Dist2(a, b));
}

inline std::map<int, std::vector<std::size_t>> Groups(const std::vector<int>& labels) {
  std::map<int, std::vector<std::size_t>> g;
  for (std::size_t i = 0; i < labels.size(); ++i) g[labels[i]].push_back(i);
  return g;
}

inline std::vector<long double> Centroid(const Points& x, const std::vector<std::size_t>& idx) {
  std::vector<long double> c(x[idx[0]].size(), 0.0L);
  for (auto i : idx)
    for (std::size_t j = 0; j < c.size(); ++j) c[j] += x[i][j];
  for (auto& v : c) v /= static_cast<long double>(idx.size());
  return c;
}

// Scatter from pairwise distances: sum_{i<j} d^2 / n equals the sum of
// squared deviations from the mean.
inline double CalinskiHarabasz(const Points& x, const std::vector<int>& labels) {
  const auto g = Groups(labels);
  const long double n = static_cast<long double>(x.size());
  const long double k = static_cast<long double>(g.size());
  long double total = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) total += Dist2(x[i], x[j]);
  total /= n;
  long double within = 0;
  for (const auto& [label, idx] : g) {
    long double s = 0;
    for (std::size_t a = 0; a < idx.size(); ++a)
      for (std::size_t b = a + 1; b < idx.size(); ++b) s += Dist2(x[idx[a]], x[idx[b]]);
    within += s / static_cast<long double>(idx.size());
  }
  const long double between = total - within;
  return static_cast<double>((between / within) * ((n - k) / (k - 1)));
}

inline double DaviesBouldin(const Points& x, const std::vector<int>& labels) {
  const auto g = Groups(labels);
  std::vector<std::vector<double>> cent;
  std::vector<long double> spread;
  for (const auto& [label, idx] : g) {
    const auto c = Centroid(x, idx);
    std::vector<double> cd(c.begin(), c.end());
    long double s = 0;
    for (auto i : idx) s += Dist(x[i], cd);
    cent.push_back(cd);
    spread.push_back(s / static_cast<long double>(idx.size()));
  }
  long double acc = 0;
  for (std::size_t a = 0; a < cent.size(); ++a) {
    long double worst = 0;
    for (std::size_t b = 0; b < cent.size(); ++b) {
      if (a == b) continue;
      worst = std::max(worst, (spread[a] + spread[b]) / Dist(cent[a], cent[b]));
    }
    acc += worst;
  }
  return static_cast<double>(acc / static_cast<long double>(cent.size()));
}

inline double Silhouette(const Points& x, const std::vector<int>& labels) {
  const auto g = Groups(labels);
  long double acc = 0;
  for (const auto& [label, idx] : g) {
    long double cluster_sum = 0;
    if (idx.size() > 1) {
      for (auto i : idx) {
        long double a = 0;
        for (auto j : idx)
          if (j != i) a += Dist(x[i], x[j]);
        a /= static_cast<long double>(idx.size() - 1);
        long double b = INFINITY;
        for (const auto& [other, jdx] : g) {
          if (other == label) continue;
          long double m = 0;
          for (auto j : jdx) m += Dist(x[i], x[j]);
          b = std::min(b, m / static_cast<long double>(jdx.size()));
        }
        const long double den = std::max(a, b);
        cluster_sum += den > 0 ? (b - a) / den : 0.0L;
      }
    }
    acc += cluster_sum / static_cast<long double>(idx.size());
  }
  return static_cast<double>(acc / static_cast<long double>(g.size()));
}

// Rank by counting: strictly smaller values plus the midpoint of the tie run.
inline std::vector<long double> Ranks(const std::vector<double>& v) {
  std::vector<long double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::size_t less = 0, equal = 0;
    for (double w : v) {
      less += w < v[i];
      equal += w == v[i];
    }
    r[i] = static_cast<long double>(less) + (static_cast<long double>(equal) + 1.0L) / 2.0L;
  }
  return r;
}

template <typename T>
double Pearson(const std::vector<T>& x, const std::vector<T>& y) {
  const long double n = static_cast<long double>(x.size());
  long double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += static_cast<long double>(x[i]) * x[i];
    syy += static_cast<long double>(y[i]) * y[i];
    sxy += static_cast<long double>(x[i]) * y[i];
  }
  const long double cov = n * sxy - sx * sy;
  return static_cast<double>(cov / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy)));
}

inline double Spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return Pearson(Ranks(x), Ranks(y));
}

// Random labeled cloud with every cluster non-empty and N > K.
struct RandomSet {
  Points x;
  std::vector<int> labels;
};

inline RandomSet MakeRandomSet(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> kdist(2, 5), ddist(1, 6), extra(1, 12);
  std::normal_distribution<double> nd(0.0, 1.0);
  const int k = kdist(rng), d = ddist(rng);
  RandomSet s;
  std::vector<std::vector<double>> centers(k, std::vector<double>(d));
  for (auto& c : centers)
    for (auto& v : c) v = 3.0 * nd(rng);
  std::vector<int> per(k);
  for (auto& n : per) n = extra(rng);
  per[0] += 1;
  for (int c = 0; c < k; ++c) {
    for (int i = 0; i < per[c]; ++i) {
      std::vector<double> p(d);
      for (int j = 0; j < d; ++j) p[j] = centers[c][j] + nd(rng);
      s.x.push_back(p);
      s.labels.push_back(c * 7 - 3);
    }
  }
  std::vector<std::size_t> order(s.x.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  RandomSet shuffled;
  for (auto i : order) {
    shuffled.x.push_back(s.x[i]);
    shuffled.labels.push_back(s.labels[i]);
  }
  return shuffled;
}

inline bool Near(double got, double want, double abs_tol, double rel_tol = 0.0) {
  return std::fabs(got - want) <= std::max(abs_tol, rel_tol * std::fabs(want));
}

}  // namespace oracle
