#include "deepsep/features.hpp"

#include <cmath>
#include <mutex>

#include "deepsep/error.hpp"
#include "deepsep/simd.hpp"
#include "deepsep/util.hpp"

namespace deepsep {

FeatureMap::FeatureMap(int height, int width, int channels)
    : height_(height), width_(width), channels_(channels) {
  if (height < 1 || width < 1 || channels < 1) {
    throw Error(ErrorCode::InvalidArgument, "feature map dimensions must be positive");
  }
  values_.assign(static_cast<std::size_t>(height) * width * channels, 0.0f);
}

FeatureMap::FeatureMap(int height, int width, int channels, std::vector<float> chw_values)
    : height_(height), width_(width), channels_(channels), values_(std::move(chw_values)) {
  if (height < 1 || width < 1 || channels < 1) {
    throw Error(ErrorCode::InvalidArgument, "feature map dimensions must be positive");
  }
  if (values_.size() != static_cast<std::size_t>(height) * width * channels) {
    throw Error(ErrorCode::InvalidArgument, "feature map value count mismatch");
  }
}

std::span<const float> FeatureMap::plane(int c) const {
  const std::size_t n = static_cast<std::size_t>(height_) * width_;
  return std::span<const float>(values_).subspan(static_cast<std::size_t>(c) * n, n);
}

bool FeatureMap::all_finite() const {
  for (float v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::vector<float> pool_spatial(const FeatureMap& map) {
  if (map.height() < 1 || map.width() < 1) {
    throw Error(ErrorCode::InvalidArgument, "cannot pool an empty feature map");
  }
  const auto& k = simd::kernels();
  const double count = static_cast<double>(map.height()) * map.width();
  std::vector<float> out(static_cast<std::size_t>(map.channels()));
  for (int c = 0; c < map.channels(); ++c) {
    const auto plane = map.plane(c);
    out[static_cast<std::size_t>(c)] = static_cast<float>(k.sum_f32(plane.data(), plane.size()) / count);
  }
  return out;
}

PooledVector subtract_reference(const PooledVector& distorted, const PooledVector& reference) {
  if (!(distorted.tap == reference.tap) || distorted.values.size() != reference.values.size()) {
    throw Error(ErrorCode::TapMismatch, "'" + distorted.image_id + "' and '" + reference.image_id +
                                            "' come from different taps");
  }
  PooledVector out = distorted;
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] -= reference.values[i];
  return out;
}

FeatureMap FeatureBackend::extract(const ImageBuffer& img, const LayerTap& tap) const {
  const LayerTap taps[1] = {tap};
  auto maps = extract_many(img, taps);
  return std::move(maps.front());
}

std::vector<std::vector<PooledVector>> extract_pooled(const FeatureBackend& backend,
                                                      const Manifest& manifest,
                                                      std::span<const LayerTap> taps,
                                                      unsigned threads) {
  for (const auto& t : taps) {
    if (t.network != backend.network()) {
      throw Error(ErrorCode::TapMismatch, "tap " + t.layer + " does not belong to backend network " +
                                              std::string(to_string(backend.network())));
    }
  }
  const auto& rows = manifest.rows();
  std::vector<std::vector<PooledVector>> out(taps.size(), std::vector<PooledVector>(rows.size()));
  parallel_for(rows.size(), threads, [&](std::size_t i) {
    const ManifestRow& row = rows[i];
    const ImageBuffer img = read_image(manifest.resolve_path(row));
    auto maps = backend.extract_many(img, taps);
    for (std::size_t t = 0; t < taps.size(); ++t) {
      if (!maps[t].all_finite()) {
        throw Error(ErrorCode::BackendFailure, "non-finite activations for " + row.image_id);
      }
      PooledVector pv;
      pv.tap = taps[t];
      pv.image_id = row.image_id;
      if (!row.kinds.empty()) pv.distortion_kind = row.kind_label();
      if (row.levels.size() == 1) pv.level_index = row.levels.front();
      pv.values = pool_spatial(maps[t]);
      out[t][i] = std::move(pv);
    }
  });
  return out;
}

const PooledVector* FeatureDump::find(std::string_view image_id) const {
  for (const auto& r : records) {
    if (r.image_id == image_id) return &r;
  }
  return nullptr;
}

DumpVectorSource::DumpVectorSource(FeatureDump dump) : dump_(std::move(dump)) {
  for (std::size_t i = 0; i < dump_.records.size(); ++i) {
    if (!index_.emplace(dump_.records[i].image_id, i).second) {
      throw Error(ErrorCode::DuplicateId, "dump has duplicate record '" + dump_.records[i].image_id + "'");
    }
  }
}

const PooledVector& DumpVectorSource::get(std::string_view image_id) const {
  const auto it = index_.find(std::string(image_id));
  if (it == index_.end()) {
    throw Error(ErrorCode::MissingVector, "no pooled vector for '" + std::string(image_id) + "' at " +
                                              std::string(to_string(dump_.tap.network)) + "/" +
                                              dump_.tap.layer);
  }
  return dump_.records[it->second];
}

}  // namespace deepsep
