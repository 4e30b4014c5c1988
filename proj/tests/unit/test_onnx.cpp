#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <random>

#include "deepsep/error.hpp"
#include "deepsep/onnx_backend.hpp"
#include "deepsep/util.hpp"
#include "onnx/tensor_ops.hpp"

using namespace deepsep;
using onnx_rt::Tensor;
namespace fs = std::filesystem;

namespace {

const fs::path kData = DEEPSEP_TEST_DATA;
const fs::path kModel = kData / "squeezenet11_random0.onnx";

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvalidArgument;
}

Tensor Random(std::vector<std::int64_t> shape, std::mt19937& rng) {
  Tensor t = Tensor::zeros(std::move(shape));
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  for (auto& v : t.f) v = u(rng);
  return t;
}

// Direct 7-loop convolution.
Tensor NaiveConv(const Tensor& x, const Tensor& w, const Tensor* b, int stride, int pad, int dil, int group) {
  const auto N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const auto M = w.dim(0), KC = w.dim(1), KH = w.dim(2), KW = w.dim(3);
  const auto OH = (H + 2 * pad - dil * (KH - 1) - 1) / stride + 1;
  const auto OW = (W + 2 * pad - dil * (KW - 1) - 1) / stride + 1;
  Tensor y = Tensor::zeros({N, M, OH, OW});
  const auto mpg = M / group;
  for (std::int64_t n = 0; n < N; ++n)
    for (std::int64_t m = 0; m < M; ++m)
      for (std::int64_t oh = 0; oh < OH; ++oh)
        for (std::int64_t ow = 0; ow < OW; ++ow) {
          double acc = b ? b->f[m] : 0.0;
          const auto g = m / mpg;
          for (std::int64_t kc = 0; kc < KC; ++kc)
            for (std::int64_t kh = 0; kh < KH; ++kh)
              for (std::int64_t kw = 0; kw < KW; ++kw) {
                const auto ih = oh * stride - pad + kh * dil, iw = ow * stride - pad + kw * dil;
                if (ih < 0 || iw < 0 || ih >= H || iw >= W) continue;
                const auto c = g * KC + kc;
                acc += double(x.f[((n * C + c) * H + ih) * W + iw]) * w.f[((m * KC + kc) * KH + kh) * KW + kw];
              }
          y.f[((n * M + m) * OH + oh) * OW + ow] = static_cast<float>(acc);
        }
  return y;
}

ImageBuffer Pattern(int w, int h) {
  ImageBuffer img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = static_cast<std::uint8_t>((x * 7 + y * 13 + c * 50) % 256);
  return img;
}

}  // namespace

TEST_CASE("conv2d matches a direct convolution") {
  std::mt19937 rng(1);
  struct Case { int c, m, k, stride, pad, dil, group, h, w; bool bias; };
  for (const Case& cs : {Case{3, 8, 3, 2, 0, 1, 1, 17, 19, true}, Case{16, 16, 1, 1, 0, 1, 1, 9, 7, true},
                         Case{6, 4, 3, 1, 1, 2, 2, 11, 12, false}, Case{4, 4, 3, 1, 1, 1, 4, 6, 6, true},
                         Case{5, 7, 5, 3, 2, 1, 1, 23, 14, true}}) {
    const Tensor x = Random({1, cs.c, cs.h, cs.w}, rng);
    const Tensor w = Random({cs.m, cs.c / cs.group, cs.k, cs.k}, rng);
    const Tensor b = Random({cs.m}, rng);
    const Tensor got = onnx_rt::conv2d(x, w, cs.bias ? &b : nullptr, {cs.stride, cs.stride},
                                       {cs.pad, cs.pad, cs.pad, cs.pad}, {cs.dil, cs.dil}, cs.group);
    const Tensor want = NaiveConv(x, w, cs.bias ? &b : nullptr, cs.stride, cs.pad, cs.dil, cs.group);
    REQUIRE(got.shape == want.shape);
    for (std::size_t i = 0; i < got.f.size(); ++i) CHECK(got.f[i] == doctest::Approx(want.f[i]).epsilon(1e-4));
  }
}

TEST_CASE("max pool ceil mode drops windows starting in padding") {
  Tensor x = Tensor::zeros({1, 1, 5, 5});
  for (int i = 0; i < 25; ++i) x.f[i] = static_cast<float>(i);
  // 5 -> ceil((5 - 3) / 2) + 1 = 2 with ceil, same as floor here.
  CHECK(onnx_rt::max_pool2d(x, {3, 3}, {2, 2}, {0, 0, 0, 0}, true).shape == std::vector<std::int64_t>{1, 1, 2, 2});
  Tensor y = Tensor::zeros({1, 1, 6, 6});
  for (int i = 0; i < 36; ++i) y.f[i] = static_cast<float>(i);
  const Tensor floor_out = onnx_rt::max_pool2d(y, {3, 3}, {2, 2}, {0, 0, 0, 0}, false);
  const Tensor ceil_out = onnx_rt::max_pool2d(y, {3, 3}, {2, 2}, {0, 0, 0, 0}, true);
  CHECK(floor_out.shape == std::vector<std::int64_t>{1, 1, 2, 2});
  CHECK(ceil_out.shape == std::vector<std::int64_t>{1, 1, 3, 3});
  CHECK(ceil_out.f.back() == 35.0f);
  CHECK(ceil_out.f[2] == 17.0f);
  // 3 wide with padding 1: ceil gives 3 windows, but the third would start
  // inside the right padding and is dropped.
  Tensor z = Tensor::zeros({1, 1, 3, 3});
  CHECK(onnx_rt::max_pool2d(z, {2, 2}, {2, 2}, {1, 1, 1, 1}, true).shape == std::vector<std::int64_t>{1, 1, 2, 2});
  // A window that starts inside the input but overhangs it still counts.
  Tensor tiny = Tensor::zeros({1, 1, 2, 2});
  tiny.f = {1, 9, 3, 4};
  const Tensor one = onnx_rt::max_pool2d(tiny, {3, 3}, {2, 2}, {0, 0, 0, 0}, true);
  CHECK(one.shape == std::vector<std::int64_t>{1, 1, 1, 1});
  CHECK(one.f[0] == 9.0f);
  CHECK_THROWS_AS(onnx_rt::max_pool2d(tiny, {3, 3}, {2, 2}, {0, 0, 0, 0}, false), Error);
  Tensor z4 = Tensor::zeros({1, 1, 4, 4});
  CHECK(onnx_rt::max_pool2d(z4, {2, 2}, {2, 2}, {1, 1, 1, 1}, true).shape == std::vector<std::int64_t>{1, 1, 3, 3});
}

TEST_CASE("average pool padding modes") {
  Tensor x = Tensor::zeros({1, 1, 2, 2});
  x.f = {4, 4, 4, 4};
  const Tensor incl = onnx_rt::avg_pool2d(x, {2, 2}, {1, 1}, {1, 1, 1, 1}, false, true);
  const Tensor excl = onnx_rt::avg_pool2d(x, {2, 2}, {1, 1}, {1, 1, 1, 1}, false, false);
  CHECK(incl.f[0] == doctest::Approx(1.0f));
  CHECK(excl.f[0] == doctest::Approx(4.0f));
}

TEST_CASE("unsupported operators are reported") {
  CHECK(onnx_rt::op_supported("Conv"));
  CHECK(!onnx_rt::op_supported("LSTM"));
  onnx_rt::Node node;
  node.op_type = "LSTM";
  CHECK(CodeOf([&] { onnx_rt::run_op(node, {}); }) == ErrorCode::BackendFailure);
}

TEST_CASE("backend exposes every SqueezeNet tap") {
  const OnnxBackend be(kModel, Network::SqueezeNet11);
  std::vector<std::string> want;
  for (const auto& t : taps_for(Network::SqueezeNet11)) want.push_back(t.layer);
  CHECK(be.exposed_layers() == want);
  CHECK(be.name().find("squeezenet11_random0.onnx") != std::string::npos);
  CHECK(be.network() == Network::SqueezeNet11);
}

TEST_CASE("backend matches committed parity dumps") {
  const OnnxBackend be(kModel, Network::SqueezeNet11);
  const auto taps = taps_for(Network::SqueezeNet11);
  double worst = 0.0;
  std::size_t compared = 0;
  std::vector<FeatureDump> dumps;
  for (const auto& t : taps) dumps.push_back(read_dump(kData / "parity" / ("squeezenet11_random0_" + t.layer + ".dfeat")));
  for (const auto& rec : dumps.front().records) {
    const auto img = read_image(kData / "refs" / (rec.image_id + ".png"));
    const auto maps = be.extract_many(img, taps);
    for (std::size_t t = 0; t < taps.size(); ++t) {
      const auto got = pool_spatial(maps[t]);
      const auto& want = dumps[t].find(rec.image_id)->values;
      REQUIRE(got.size() == want.size());
      float scale = 0.0f;
      for (float v : want) scale = std::max(scale, std::fabs(v));
      for (std::size_t c = 0; c < got.size(); ++c) {
        const double denom = std::max<double>(std::fabs(want[c]), 1e-3 * scale);
        worst = std::max(worst, std::fabs(double(got[c]) - want[c]) / denom);
        ++compared;
      }
    }
  }
  MESSAGE("max relative difference " << worst << " over " << compared << " values");
  CHECK(compared == 5 * (64 + 128 + 128 + 256 + 256 + 384 + 384 + 512 + 512));
  CHECK(worst <= 1e-4);
}

TEST_CASE("backend is deterministic and order preserving") {
  const OnnxBackend be(kModel, Network::SqueezeNet11);
  const auto img = Pattern(96, 80);
  const std::vector<LayerTap> two = {find_tap(Network::SqueezeNet11, "fire4"),
                                     find_tap(Network::SqueezeNet11, "conv1")};
  const auto a = be.extract_many(img, two);
  const auto b = be.extract_many(img, two);
  CHECK(a == b);
  CHECK(a[0].channels() == 256);
  CHECK(a[1].channels() == 64);
  CHECK(be.extract(img, two[1]) == a[1]);
}

TEST_CASE("backend error paths") {
  const OnnxBackend be(kModel, Network::SqueezeNet11);
  for (const auto& tap : taps_for(Network::SqueezeNet11)) {
    CAPTURE(tap.layer);
    CHECK_NOTHROW(be.extract(Pattern(tap.min_input, tap.min_input), tap));
    if (tap.min_input > 1) {
      CHECK(CodeOf([&] { be.extract(Pattern(tap.min_input - 1, tap.min_input - 1), tap); }) ==
            ErrorCode::ImageTooSmall);
    }
  }
  const auto fire8 = find_tap(Network::SqueezeNet11, "fire8");
  LayerTap bogus = fire8;
  bogus.layer = "fire9";
  CHECK(CodeOf([&] { be.extract(Pattern(64, 64), bogus); }) == ErrorCode::UnknownLayer);
  CHECK(CodeOf([&] { be.extract(Pattern(64, 64), find_tap(Network::AlexNet, "conv1")); }) ==
        ErrorCode::TapMismatch);
  CHECK(CodeOf([] { OnnxBackend(kData / "nope.onnx", Network::SqueezeNet11); }) == ErrorCode::IoError);
  const fs::path junk = fs::temp_directory_path() / "deepsep_junk.onnx";
  write_file_atomic(junk, "definitely not protobuf \xff\xff\xff");
  CHECK(CodeOf([&] { OnnxBackend(junk, Network::SqueezeNet11); }) == ErrorCode::BackendFailure);
  fs::remove(junk);
}
