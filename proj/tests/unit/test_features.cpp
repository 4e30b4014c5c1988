#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>

#include "deepsep/error.hpp"
#include "deepsep/features.hpp"
#include "deepsep/util.hpp"
#include "json.hpp"

using namespace deepsep;

namespace {

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvalidArgument;
}

FeatureDump SmallDump() {
  const LayerTap tap = find_tap(Network::SqueezeNet11, "conv1");
  FeatureDump d{tap, {}, {}};
  for (int i = 0; i < 3; ++i) {
    PooledVector pv{tap, "img" + std::to_string(i), std::nullopt, std::nullopt,
                    std::vector<float>(64)};
    for (int c = 0; c < 64; ++c) pv.values[c] = 0.25f * c - i;
    if (i > 0) {
      pv.distortion_kind = i == 1 ? "awgn" : "gblur+jpeg";
      pv.level_index = i;
    }
    d.records.push_back(pv);
  }
  return d;
}

// Deterministic stand-in: channel c at (h, w) = mean of the image's red
// samples + c + h - w.
class FakeBackend : public FeatureBackend {
 public:
  std::string name() const override { return "fake"; }
  Network network() const override { return Network::SqueezeNet11; }
  std::vector<FeatureMap> extract_many(const ImageBuffer& img,
                                       std::span<const LayerTap> taps) const override {
    double red = 0.0;
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x) red += img.at(x, y, 0);
    red /= img.width() * img.height();
    std::vector<FeatureMap> out;
    for (const auto& t : taps) {
      FeatureMap m(2, 3, t.channels);
      for (int c = 0; c < t.channels; ++c)
        for (int h = 0; h < 2; ++h)
          for (int w = 0; w < 3; ++w) m.at(h, w, c) = static_cast<float>(red + c + h - w);
      out.push_back(std::move(m));
    }
    return out;
  }
};

}  // namespace

TEST_CASE("registry holds 46 taps in depth order") {
  CHECK(tap_registry().size() == 46);
  CHECK(taps_for(Network::AlexNet).size() == 5);
  CHECK(taps_for(Network::InceptionV3).size() == 14);
  CHECK(taps_for(Network::ResNet50).size() == 5);
  CHECK(taps_for(Network::SqueezeNet11).size() == 9);
  CHECK(taps_for(Network::Vgg16).size() == 13);
  CHECK(taps_for(Network::SqueezeNet11).front().layer == "conv1");
  CHECK(find_tap("squeezenet11", "fire4").channels == 256);
  CHECK(find_tap(Network::Vgg16, "conv31").channels == 256);
  CHECK(CodeOf([] { find_tap(Network::AlexNet, "fire4"); }) == ErrorCode::UnknownLayer);
  CHECK(parse_network("resnet50") == Network::ResNet50);
  CHECK(!parse_network("lenet").has_value());
}

TEST_CASE("shared layers.json matches the compiled registry") {
  const std::string on_disk = read_file(std::filesystem::path(DEEPSEP_SOURCE_DIR) / "share" / "layers.json");
  CHECK(nlohmann::json::parse(on_disk) == nlohmann::json::parse(registry_to_json()));
}

TEST_CASE("spatial pooling averages each channel") {
  FeatureMap m(2, 2, 2, {1, 2, 3, 4, -1, -1, -1, 5});
  CHECK(pool_spatial(m) == std::vector<float>{2.5f, 0.5f});
  CHECK(m.at(1, 1, 1) == 5.0f);
  CHECK(m.all_finite());
  CHECK_THROWS_AS(pool_spatial(FeatureMap()), Error);
}

TEST_CASE("reference subtraction keeps labels and checks taps") {
  const auto d = SmallDump();
  const auto diff = subtract_reference(d.records[1], d.records[0]);
  CHECK(diff.distortion_kind == "awgn");
  CHECK(diff.values[10] == doctest::Approx(-1.0f));
  auto other = d.records[0];
  other.tap = find_tap(Network::SqueezeNet11, "fire1");
  other.values.resize(128);
  CHECK(CodeOf([&] { subtract_reference(d.records[1], other); }) == ErrorCode::TapMismatch);
}

TEST_CASE("dump round trip") {
  const auto d = SmallDump();
  const auto bytes = serialize_dump(d);
  const auto back = parse_dump(bytes);
  CHECK(back.tap == d.tap);
  CHECK(back.records == d.records);
  CHECK(back.preprocessing == d.preprocessing);
  CHECK(back.find("img2")->distortion_kind == "gblur+jpeg");

  FeatureDump empty{d.tap, {}, {}};
  CHECK(parse_dump(serialize_dump(empty)).records.empty());

  const auto path = std::filesystem::temp_directory_path() / "deepsep_dump_test.dfeat";
  write_dump(d, path);
  CHECK(read_dump(path).records == d.records);
  std::filesystem::remove(path);
}

TEST_CASE("dump corruption is detected") {
  const std::string bytes = serialize_dump(SmallDump());
  std::string bad = bytes;
  bad[0] = 'X';
  CHECK(CodeOf([&] { parse_dump(bad); }) == ErrorCode::BadMagic);
  bad = bytes;
  bad[6] = 9;
  CHECK(CodeOf([&] { parse_dump(bad); }) == ErrorCode::VersionMismatch);
  CHECK(CodeOf([&] { parse_dump(bytes.substr(0, bytes.size() - 4)); }) == ErrorCode::CorruptIndex);
  CHECK(CodeOf([&] { parse_dump(bytes.substr(0, 40)); }) == ErrorCode::CorruptIndex);
  CHECK(CodeOf([&] { parse_dump(bytes.substr(0, 9)); }) == ErrorCode::CorruptIndex);
}

TEST_CASE("dump vector source lookups") {
  DumpVectorSource src(SmallDump());
  CHECK(src.get("img1").level_index == 1);
  CHECK(CodeOf([&] { src.get("zzz"); }) == ErrorCode::MissingVector);
}

TEST_CASE("committed parity dumps load") {
  const std::filesystem::path dir = std::filesystem::path(DEEPSEP_TEST_DATA) / "parity";
  int count = 0;
  for (const auto& t : taps_for(Network::SqueezeNet11)) {
    const auto d = read_dump(dir / ("squeezenet11_random0_" + t.layer + ".dfeat"));
    CHECK(d.tap == t);
    CHECK(d.records.size() == 5);
    ++count;
  }
  CHECK(count == 9);
}

TEST_CASE("extract_pooled labels rows from the manifest") {
  const auto dir = std::filesystem::temp_directory_path() / "deepsep_extract_test";
  std::filesystem::create_directories(dir);
  write_png(ImageBuffer(8, 8, 10), dir / "a.png");
  write_png(ImageBuffer(8, 8, 30), dir / "a_x.png");
  const Manifest m({{"a.png", "a", "a", {}, {}, std::nullopt, Polarity::HigherIsWorse, "t"},
                    {"a_x.png", "a_x", "a", {"awgn"}, {4}, 4.0, Polarity::HigherIsWorse, "t"}},
                   dir);
  FakeBackend fake;
  const std::vector<LayerTap> taps = {find_tap(Network::SqueezeNet11, "conv1"),
                                      find_tap(Network::SqueezeNet11, "fire2")};
  const auto out = extract_pooled(fake, m, taps, 2);
  REQUIRE(out.size() == 2);
  REQUIRE(out[1].size() == 2);
  CHECK(out[1][1].values.size() == 128);
  CHECK(out[1][1].distortion_kind == "awgn");
  CHECK(out[1][1].level_index == 4);
  CHECK(!out[0][0].distortion_kind.has_value());
  // mean over h - w for 2x3 is 0.5 - 1 = -0.5
  CHECK(out[0][1].values[3] == doctest::Approx(30.0 + 3 - 0.5));

  const std::vector<LayerTap> wrong = {find_tap(Network::AlexNet, "conv1")};
  CHECK(CodeOf([&] { extract_pooled(fake, m, wrong); }) == ErrorCode::TapMismatch);
  std::filesystem::remove_all(dir);
}
