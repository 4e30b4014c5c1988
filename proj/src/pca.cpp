#include "deepsep/pca.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

#include "deepsep/error.hpp"
#include "deepsep/util.hpp"

namespace deepsep {

PcaModel pca_fit(std::span<const std::vector<double>> vectors, std::size_t m, bool strict) {
  const std::size_t n = vectors.size();
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "PCA needs at least two samples");
  const std::size_t d = vectors.front().size();
  if (d == 0) throw Error(ErrorCode::InvalidArgument, "PCA on zero-dimensional data");
  if (m < 1 || m > std::min(n, d)) {
    throw Error(ErrorCode::InvalidArgument, "PCA target dimension " + std::to_string(m) +
                                                " outside [1, " + std::to_string(std::min(n, d)) + "]");
  }
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    if (vectors[i].size() != d) throw Error(ErrorCode::InvalidArgument, "PCA vectors differ in length");
    for (std::size_t j = 0; j < d; ++j) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = vectors[i][j];
    }
  }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;

  Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const Eigen::MatrixXd& v = svd.matrixV();
  const double tol = (sv.size() > 0 ? sv(0) : 0.0) * static_cast<double>(std::max(n, d)) *
                     std::numeric_limits<double>::epsilon();

  PcaModel model;
  model.mean.assign(mean.data(), mean.data() + d);
  for (std::size_t k = 0; k < m; ++k) {
    const auto col = static_cast<Eigen::Index>(k);
    const double s = sv(col);
    if (s <= tol) {
      if (strict) {
        throw Error(ErrorCode::RankDeficient, "requested " + std::to_string(m) +
                                                  " components but numerical rank is " +
                                                  std::to_string(k));
      }
      model.explained_variance.push_back(0.0);
    } else {
      model.explained_variance.push_back(s * s / static_cast<double>(n - 1));
    }
    std::vector<double> row(v.col(col).data(), v.col(col).data() + d);
    std::size_t arg = 0;
    for (std::size_t j = 1; j < d; ++j) {
      if (std::abs(row[j]) > std::abs(row[arg])) arg = j;
    }
    if (row[arg] < 0.0) {
      for (double& r : row) r = -r;
    }
    model.components.push_back(std::move(row));
  }
  return model;
}

std::vector<std::vector<double>> pca_transform(const PcaModel& model,
                                               std::span<const std::vector<double>> vectors) {
  const std::size_t d = model.dim();
  std::vector<std::vector<double>> out;
  out.reserve(vectors.size());
  std::vector<double> centered(d);
  for (const auto& x : vectors) {
    if (x.size() != d) throw Error(ErrorCode::InvalidArgument, "PCA transform dimension mismatch");
    for (std::size_t j = 0; j < d; ++j) centered[j] = x[j] - model.mean[j];
    std::vector<double> y(model.rank(), 0.0);
    for (std::size_t k = 0; k < model.rank(); ++k) {
      const auto& c = model.components[k];
      double acc = 0.0;
      for (std::size_t j = 0; j < d; ++j) acc += c[j] * centered[j];
      y[k] = acc;
    }
    out.push_back(std::move(y));
  }
  return out;
}

std::vector<PcaSweepRow> pca_sweep(const ClusteredSet& set, std::span<const int> dims) {
  set.validate();
  const std::size_t full = std::min(set.size(), set.dim());
  if (std::find(dims.begin(), dims.end(), 2) == dims.end() ||
      std::find(dims.begin(), dims.end(), kFullDim) == dims.end()) {
    throw Error(ErrorCode::InvalidArgument, "PCA sweep dims must include 2 and full");
  }
  std::vector<std::size_t> resolved;
  for (int dim : dims) {
    if (dim == kFullDim) {
      resolved.push_back(full);
    } else if (dim < 1 || static_cast<std::size_t>(dim) > full) {
      throw Error(ErrorCode::InvalidArgument, "PCA sweep dim " + std::to_string(dim) +
                                                  " outside [1, " + std::to_string(full) + "]");
    } else {
      resolved.push_back(static_cast<std::size_t>(dim));
    }
  }
  // Components are nested, so one fit at the largest dimension serves every
  // prefix.
  const PcaModel model = pca_fit(set.vectors, *std::max_element(resolved.begin(), resolved.end()));
  const auto projected = pca_transform(model, set.vectors);

  std::vector<PcaSweepRow> rows;
  std::vector<IndexTriple> raw;
  for (std::size_t m : resolved) {
    ClusteredSet reduced;
    reduced.labels = set.labels;
    for (const auto& y : projected) reduced.vectors.emplace_back(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(m));
    PcaSweepRow row;
    row.dim = static_cast<int>(m);
    row.raw = compute_indices(reduced);
    raw.push_back(row.raw);
    rows.push_back(row);
  }
  const auto norm = normalize_indices(raw);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].normalized = norm[i];
    rows[i].dsi = dsi(norm[i]);
  }
  return rows;
}

std::vector<int> parse_dims(std::string_view text) {
  std::vector<int> dims;
  for (const auto& part : split(text, ',')) {
    const std::string t = to_lower(trim(part));
    if (t.empty()) continue;
    if (t == "full") {
      dims.push_back(kFullDim);
      continue;
    }
    try {
      std::size_t used = 0;
      const int v = std::stoi(t, &used);
      if (used != t.size() || v < 1) throw std::invalid_argument(t);
      dims.push_back(v);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "bad PCA dimension '" + t + "'");
    }
  }
  if (dims.empty()) throw Error(ErrorCode::InvalidArgument, "empty PCA dimension list");
  return dims;
}

std::string pca_sweep_to_csv(const std::vector<PcaSweepRow>& rows) {
  std::string out = "dim,ch,db,s,ch_norm,db_norm,s_norm,dsi\n";
  for (const auto& r : rows) {
    out += csv_row({std::to_string(r.dim), format_double(r.raw.ch), format_double(r.raw.db),
                    format_double(r.raw.s), format_double(r.normalized.ch),
                    format_double(r.normalized.db), format_double(r.normalized.s),
                    format_double(r.dsi)});
  }
  return out;
}

}  // namespace deepsep
