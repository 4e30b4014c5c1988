#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "deepsep/image.hpp"
#include "deepsep/manifest.hpp"

namespace deepsep {

enum class DistortionKind { Awgn, Gblur, Jpeg };

inline constexpr std::array<DistortionKind, 3> kAllDistortionKinds = {
    DistortionKind::Awgn, DistortionKind::Gblur, DistortionKind::Jpeg};

std::string_view to_string(DistortionKind kind);
std::optional<DistortionKind> parse_distortion_kind(std::string_view name);

inline constexpr int kLevelCount = 9;

// Nine severity levels per distortion; index 0 is the mildest (level 1).
struct DistortionLadder {
  std::array<double, kLevelCount> awgn_sigmas;
  std::array<double, kLevelCount> gblur_sigmas;
  std::array<int, kLevelCount> jpeg_qualities;

  static DistortionLadder defaults();
  // Reads {"awgn": [...], "gblur": [...], "jpeg": [...]}; unspecified
  // families keep their defaults.
  static DistortionLadder from_json(std::string_view text);
  std::string to_json() const;

  // Throws InvalidArgument unless sigmas are positive and strictly
  // increasing and qualities are in [1, 100] and strictly decreasing.
  void validate() const;

  double param(DistortionKind kind, int level_index) const;
};

struct DistortionSpec {
  DistortionKind kind;
  int level_index;  // 1..9
  double param;

  static DistortionSpec from_ladder(const DistortionLadder& ladder, DistortionKind kind,
                                    int level_index);
};

// Adds independent N(0, sigma_n^2) noise to every sample in the [0, 1]
// domain, clips, and requantizes with round(x * 255).
ImageBuffer apply_awgn(const ImageBuffer& img, double sigma_n, std::uint64_t seed);

// Separable sampled-Gaussian blur, radius floor(4 sigma + 0.5), mirror
// boundary (d c b a | a b c d), computed in [0, 1] doubles.
ImageBuffer apply_gblur(const ImageBuffer& img, double sigma_g);

// The normalized 1-D kernel apply_gblur uses, length 2r + 1.
std::vector<double> gaussian_kernel(double sigma_g);

// Encodes and decodes; see encode_jpeg for the codec settings.
ImageBuffer apply_jpeg(const ImageBuffer& img, int quality);

ImageBuffer apply_distortion(const ImageBuffer& img, const DistortionSpec& spec,
                             std::uint64_t seed);

// RNG stream for one corpus image: seed ^ hash(ref_id, kind, level).
std::uint64_t image_seed(std::uint64_t seed, std::string_view ref_id, DistortionKind kind,
                         int level_index);

struct ReferenceImage {
  std::string id;
  ImageBuffer image;
};

// Loads every PNG/JPEG in `dir` as a reference; ids are file stems and
// results are sorted by id.
std::vector<ReferenceImage> load_references(const std::filesystem::path& dir);

// Writes <id>.png for each reference plus 27 distorted files per reference
// (<id>_<kind>_<level>.png, JPEG as the encoded .jpg stream) into out_dir and
// returns the manifest (also saved as out_dir/manifest.csv).
Manifest generate_corpus(const std::vector<ReferenceImage>& references,
                         const DistortionLadder& ladder, std::uint64_t seed,
                         const std::filesystem::path& out_dir, unsigned threads = 1);

}  // namespace deepsep
