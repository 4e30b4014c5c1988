#include "deepsep/distort.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <json.hpp>

#include "deepsep/error.hpp"
#include "deepsep/util.hpp"

namespace deepsep {

std::string_view to_string(DistortionKind kind) {
  switch (kind) {
    case DistortionKind::Awgn: return "awgn";
    case DistortionKind::Gblur: return "gblur";
    case DistortionKind::Jpeg: return "jpeg";
  }
  return "?";
}

std::optional<DistortionKind> parse_distortion_kind(std::string_view name) {
  const std::string n = to_lower(name);
  if (n == "awgn") return DistortionKind::Awgn;
  if (n == "gblur") return DistortionKind::Gblur;
  if (n == "jpeg") return DistortionKind::Jpeg;
  return std::nullopt;
}

DistortionLadder DistortionLadder::defaults() {
  return DistortionLadder{
      {0.03, 0.06, 0.09, 0.13, 0.18, 0.24, 0.31, 0.50, 1.89},
      {0.62, 0.82, 0.95, 1.13, 1.42, 1.65, 2.17, 3.54, 13.00},
      {80, 60, 45, 30, 20, 15, 10, 5, 2},
  };
}

DistortionLadder DistortionLadder::from_json(std::string_view text) {
  DistortionLadder ladder = defaults();
  try {
    const auto doc = nlohmann::json::parse(text);
    auto read = [&](const char* key, auto& target) {
      if (!doc.contains(key)) return;
      const auto& arr = doc.at(key);
      if (!arr.is_array() || arr.size() != kLevelCount) {
        throw Error(ErrorCode::InvalidArgument,
                    std::string("ladder '") + key + "' must list exactly 9 values");
      }
      for (int i = 0; i < kLevelCount; ++i) {
        arr.at(i).get_to(target[static_cast<std::size_t>(i)]);
      }
    };
    read("awgn", ladder.awgn_sigmas);
    read("gblur", ladder.gblur_sigmas);
    read("jpeg", ladder.jpeg_qualities);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("ladder JSON: ") + e.what());
  }
  ladder.validate();
  return ladder;
}

std::string DistortionLadder::to_json() const {
  return nlohmann::json{{"awgn", awgn_sigmas}, {"gblur", gblur_sigmas}, {"jpeg", jpeg_qualities}}
      .dump();
}

void DistortionLadder::validate() const {
  for (int i = 0; i < kLevelCount; ++i) {
    const auto u = static_cast<std::size_t>(i);
    if (!(awgn_sigmas[u] > 0.0) || !(gblur_sigmas[u] > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "ladder sigmas must be positive");
    }
    if (jpeg_qualities[u] < 1 || jpeg_qualities[u] > 100) {
      throw Error(ErrorCode::InvalidArgument, "ladder JPEG qualities must be in [1, 100]");
    }
    if (i > 0) {
      if (!(awgn_sigmas[u] > awgn_sigmas[u - 1]) || !(gblur_sigmas[u] > gblur_sigmas[u - 1])) {
        throw Error(ErrorCode::InvalidArgument, "ladder sigmas must be strictly increasing");
      }
      if (!(jpeg_qualities[u] < jpeg_qualities[u - 1])) {
        throw Error(ErrorCode::InvalidArgument, "ladder qualities must be strictly decreasing");
      }
    }
  }
}

double DistortionLadder::param(DistortionKind kind, int level_index) const {
  if (level_index < 1 || level_index > kLevelCount) {
    throw Error(ErrorCode::InvalidArgument, "level index must be in 1..9");
  }
  const auto i = static_cast<std::size_t>(level_index - 1);
  switch (kind) {
    case DistortionKind::Awgn: return awgn_sigmas[i];
    case DistortionKind::Gblur: return gblur_sigmas[i];
    case DistortionKind::Jpeg: return jpeg_qualities[i];
  }
  return 0.0;
}

DistortionSpec DistortionSpec::from_ladder(const DistortionLadder& ladder, DistortionKind kind,
                                           int level_index) {
  return DistortionSpec{kind, level_index, ladder.param(kind, level_index)};
}

namespace {

inline std::uint8_t Quantize(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(x * 255.0));
}

// scipy.ndimage "reflect": the edge sample is repeated.
inline int Mirror(int i, int n) {
  const int period = 2 * n;
  int m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - m - 1;
}

}  // namespace

ImageBuffer apply_awgn(const ImageBuffer& img, double sigma_n, std::uint64_t seed) {
  if (!(sigma_n >= 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma_n must be >= 0");
  if (sigma_n == 0.0) return img;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma_n);
  ImageBuffer out = img;
  for (auto& v : out.data()) v = Quantize(v / 255.0 + noise(rng));
  return out;
}

std::vector<double> gaussian_kernel(double sigma_g) {
  if (!(sigma_g > 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma_g must be > 0");
  const int radius = static_cast<int>(std::floor(4.0 * sigma_g + 0.5));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int x = -radius; x <= radius; ++x) {
    const double w = std::exp(-0.5 * (x * x) / (sigma_g * sigma_g));
    k[static_cast<std::size_t>(x + radius)] = w;
    sum += w;
  }
  for (auto& w : k) w /= sum;
  return k;
}

ImageBuffer apply_gblur(const ImageBuffer& img, double sigma_g) {
  const std::vector<double> kernel = gaussian_kernel(sigma_g);
  const int radius = static_cast<int>(kernel.size() / 2);
  const int w = img.width();
  const int h = img.height();
  ImageBuffer out(w, h);
  std::vector<double> plane(static_cast<std::size_t>(w) * h);
  std::vector<double> tmp(plane.size());
  for (int c = 0; c < ImageBuffer::kChannels; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) plane[static_cast<std::size_t>(y) * w + x] = img.at(x, y, c) / 255.0;
    }
    for (int y = 0; y < h; ++y) {
      const double* row = plane.data() + static_cast<std::size_t>(y) * w;
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int t = -radius; t <= radius; ++t) {
          acc += kernel[static_cast<std::size_t>(t + radius)] * row[Mirror(x + t, w)];
        }
        tmp[static_cast<std::size_t>(y) * w + x] = acc;
      }
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int t = -radius; t <= radius; ++t) {
          acc += kernel[static_cast<std::size_t>(t + radius)] *
                 tmp[static_cast<std::size_t>(Mirror(y + t, h)) * w + x];
        }
        out.at(x, y, c) = Quantize(acc);
      }
    }
  }
  return out;
}

ImageBuffer apply_jpeg(const ImageBuffer& img, int quality) {
  const auto bytes = encode_jpeg(img, quality);
  return decode_jpeg(bytes);
}

ImageBuffer apply_distortion(const ImageBuffer& img, const DistortionSpec& spec,
                             std::uint64_t seed) {
  switch (spec.kind) {
    case DistortionKind::Awgn: return apply_awgn(img, spec.param, seed);
    case DistortionKind::Gblur: return apply_gblur(img, spec.param);
    case DistortionKind::Jpeg: return apply_jpeg(img, static_cast<int>(std::lround(spec.param)));
  }
  return img;
}

std::uint64_t image_seed(std::uint64_t seed, std::string_view ref_id, DistortionKind kind,
                         int level_index) {
  std::string key(ref_id);
  key += '\0';
  key += to_string(kind);
  key += '\0';
  key += std::to_string(level_index);
  return seed ^ fnv1a64(key);
}

std::vector<ReferenceImage> load_references(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::IoError, "reference directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = to_lower(entry.path().extension().string());
    if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<ReferenceImage> refs;
  std::set<std::string> seen;
  for (const auto& f : files) {
    std::string id = f.stem().string();
    if (!seen.insert(id).second) throw Error(ErrorCode::DuplicateId, "duplicate reference id " + id);
    refs.push_back({std::move(id), read_image(f)});
  }
  return refs;
}

Manifest generate_corpus(const std::vector<ReferenceImage>& references,
                         const DistortionLadder& ladder, std::uint64_t seed,
                         const std::filesystem::path& out_dir, unsigned threads) {
  if (references.empty()) throw Error(ErrorCode::InvalidArgument, "no reference images");
  ladder.validate();
  std::set<std::string> ids;
  for (const auto& r : references) {
    if (r.id.empty()) throw Error(ErrorCode::InvalidArgument, "empty reference id");
    if (!ids.insert(r.id).second) throw Error(ErrorCode::DuplicateId, "duplicate reference id " + r.id);
  }
  std::filesystem::create_directories(out_dir);

  struct Job {
    std::size_t ref;
    DistortionKind kind;
    int level;
  };
  std::vector<Job> jobs;
  std::vector<ManifestRow> rows;
  for (std::size_t r = 0; r < references.size(); ++r) {
    const std::string& id = references[r].id;
    rows.push_back({id + ".png", id, id, {}, {}, std::nullopt, Polarity::HigherIsWorse, "synthetic"});
    for (DistortionKind kind : kAllDistortionKinds) {
      for (int level = 1; level <= kLevelCount; ++level) {
        jobs.push_back({r, kind, level});
        const std::string stem = id + "_" + std::string(to_string(kind)) + "_" + std::to_string(level);
        const std::string file = stem + (kind == DistortionKind::Jpeg ? ".jpg" : ".png");
        rows.push_back({file, stem, id, {std::string(to_string(kind))}, {level},
                        static_cast<double>(level), Polarity::HigherIsWorse, "synthetic"});
      }
    }
  }

  parallel_for(references.size(), threads, [&](std::size_t r) {
    write_png(references[r].image, out_dir / (references[r].id + ".png"));
  });
  parallel_for(jobs.size(), threads, [&](std::size_t j) {
    const Job& job = jobs[j];
    const ReferenceImage& ref = references[job.ref];
    const DistortionSpec spec = DistortionSpec::from_ladder(ladder, job.kind, job.level);
    const std::string stem =
        ref.id + "_" + std::string(to_string(job.kind)) + "_" + std::to_string(job.level);
    if (job.kind == DistortionKind::Jpeg) {
      const auto bytes = encode_jpeg(ref.image, static_cast<int>(spec.param));
      write_file_atomic(out_dir / (stem + ".jpg"),
                        std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    } else {
      const auto out =
          apply_distortion(ref.image, spec, image_seed(seed, ref.id, job.kind, job.level));
      write_png(out, out_dir / (stem + ".png"));
    }
  });

  Manifest manifest(std::move(rows), out_dir);
  save_manifest(manifest, out_dir / "manifest.csv");
  return manifest;
}

}  // namespace deepsep
