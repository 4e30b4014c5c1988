#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "deepsep/image.hpp"
#include "deepsep/manifest.hpp"
#include "deepsep/registry.hpp"

namespace deepsep {

// Activation block of one image at one tap, stored channel-major.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(int height, int width, int channels);
  FeatureMap(int height, int width, int channels, std::vector<float> chw_values);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }

  float at(int h, int w, int c) const { return values_[Index(h, w, c)]; }
  float& at(int h, int w, int c) { return values_[Index(h, w, c)]; }

  // Contiguous plane of channel c (height x width).
  std::span<const float> plane(int c) const;
  std::span<const float> values() const { return values_; }

  bool all_finite() const;

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

 private:
  std::size_t Index(int h, int w, int c) const {
    return (static_cast<std::size_t>(c) * height_ + h) * width_ + w;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<float> values_;
};

// Per-channel spatial mean, accumulated in double.
std::vector<float> pool_spatial(const FeatureMap& map);

struct PooledVector {
  LayerTap tap;
  std::string image_id;
  std::optional<std::string> distortion_kind;
  std::optional<int> level_index;
  std::vector<float> values;

  friend bool operator==(const PooledVector&, const PooledVector&) = default;
};

// distorted - reference, labels copied from distorted. Throws TapMismatch.
PooledVector subtract_reference(const PooledVector& distorted, const PooledVector& reference);

// RGB -> [0, 1] -> (x - mean) / std per channel.
struct Preprocessing {
  std::array<float, 3> mean{0.485f, 0.456f, 0.406f};
  std::array<float, 3> std{0.229f, 0.224f, 0.225f};

  friend bool operator==(const Preprocessing&, const Preprocessing&) = default;
};

class FeatureBackend {
 public:
  virtual ~FeatureBackend() = default;

  virtual std::string name() const = 0;
  virtual Network network() const = 0;
  virtual Preprocessing preprocessing() const { return {}; }

  // One forward pass serving every requested tap, results in request order.
  // Must be safe to call concurrently from several threads.
  virtual std::vector<FeatureMap> extract_many(const ImageBuffer& img,
                                               std::span<const LayerTap> taps) const = 0;

  FeatureMap extract(const ImageBuffer& img, const LayerTap& tap) const;
};

// Pooled vectors for every manifest image at each requested tap. Result is
// indexed [tap][row] in manifest order; labels come from the manifest.
std::vector<std::vector<PooledVector>> extract_pooled(const FeatureBackend& backend,
                                                      const Manifest& manifest,
                                                      std::span<const LayerTap> taps,
                                                      unsigned threads = 1);

// ---- FeatureDump container -------------------------------------------------

struct FeatureDump {
  LayerTap tap;
  Preprocessing preprocessing;
  std::vector<PooledVector> records;

  const PooledVector* find(std::string_view image_id) const;
};

inline constexpr std::uint16_t kDumpVersion = 1;

std::string serialize_dump(const FeatureDump& dump);
FeatureDump parse_dump(std::string_view bytes);

void write_dump(const FeatureDump& dump, const std::filesystem::path& path);
FeatureDump read_dump(const std::filesystem::path& path);

// Dump-reader backend: pooled vectors precomputed elsewhere, looked up by id.
class DumpVectorSource {
 public:
  explicit DumpVectorSource(FeatureDump dump);

  const LayerTap& tap() const { return dump_.tap; }
  const FeatureDump& dump() const { return dump_; }
  // Throws MissingVector.
  const PooledVector& get(std::string_view image_id) const;

 private:
  FeatureDump dump_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace deepsep
