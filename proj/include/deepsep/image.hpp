#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace deepsep {

// 8-bit interleaved RGB raster, row-major.
class ImageBuffer {
 public:
  static constexpr int kChannels = 3;

  ImageBuffer() = default;
  ImageBuffer(int width, int height, std::uint8_t fill = 0);
  ImageBuffer(int width, int height, std::vector<std::uint8_t> data);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return data_.empty(); }
  std::size_t sample_count() const { return data_.size(); }

  std::uint8_t at(int x, int y, int c) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * kChannels + c];
  }
  std::uint8_t& at(int x, int y, int c) {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * kChannels + c];
  }

  std::span<const std::uint8_t> data() const { return data_; }
  std::span<std::uint8_t> data() { return data_; }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

// Peak signal-to-noise ratio in dB over all samples (8-bit peak). Returns
// +inf for identical images.
double psnr(const ImageBuffer& a, const ImageBuffer& b);

// Lossless PNG I/O (8-bit RGB; gray and alpha inputs are converted).
ImageBuffer read_png(const std::filesystem::path& path);
void write_png(const ImageBuffer& img, const std::filesystem::path& path);

// Baseline JPEG with IJG quality scaling and 4:2:0 chroma subsampling.
std::vector<std::uint8_t> encode_jpeg(const ImageBuffer& img, int quality);
ImageBuffer decode_jpeg(std::span<const std::uint8_t> bytes);

// Dispatches on file signature (PNG or JPEG).
ImageBuffer read_image(const std::filesystem::path& path);

}  // namespace deepsep
