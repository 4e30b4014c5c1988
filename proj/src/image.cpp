#include "deepsep/image.hpp"

#include <cmath>
#include <limits>

#include "deepsep/error.hpp"

namespace deepsep {

ImageBuffer::ImageBuffer(int width, int height, std::uint8_t fill) : width_(width), height_(height) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::InvalidArgument, "image dimensions must be positive");
  }
  data_.assign(static_cast<std::size_t>(width) * height * kChannels, fill);
}

ImageBuffer::ImageBuffer(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::InvalidArgument, "image dimensions must be positive");
  }
  if (data_.size() != static_cast<std::size_t>(width) * height * kChannels) {
    throw Error(ErrorCode::InvalidArgument, "sample count does not match width x height x 3");
  }
}

double psnr(const ImageBuffer& a, const ImageBuffer& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw Error(ErrorCode::InvalidArgument, "psnr: image sizes differ");
  }
  const auto da = a.data();
  const auto db = b.data();
  double sse = 0.0;
  for (std::size_t i = 0; i < da.size(); ++i) {
    const double d = static_cast<double>(da[i]) - db[i];
    sse += d * d;
  }
  if (sse == 0.0) return std::numeric_limits<double>::infinity();
  const double mse = sse / static_cast<double>(da.size());
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

}  // namespace deepsep
