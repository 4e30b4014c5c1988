#include <bit>
#include <cmath>
#include <cstring>

#include <json.hpp>

#include "deepsep/error.hpp"
#include "deepsep/features.hpp"
#include "deepsep/util.hpp"

namespace deepsep {

namespace {

constexpr char kMagic[6] = {'D', 'F', 'E', 'A', 'T', '\0'};
constexpr std::size_t kPrefixSize = 6 + 2 + 4;

template <typename T>
void PutLe(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out += static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff);
  }
}

template <typename T>
T GetLe(const char* p) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  }
  return static_cast<T>(v);
}

}  // namespace

std::string serialize_dump(const FeatureDump& dump) {
  const auto channels = static_cast<std::size_t>(dump.tap.channels);
  nlohmann::ordered_json header;
  header["network"] = to_string(dump.tap.network);
  header["layer"] = dump.tap.layer;
  header["channels"] = dump.tap.channels;
  header["preprocessing"] = {{"scale", "unit"},
                             {"mean", dump.preprocessing.mean},
                             {"std", dump.preprocessing.std}};
  auto records = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < dump.records.size(); ++i) {
    const PooledVector& r = dump.records[i];
    if (r.values.size() != channels) {
      throw Error(ErrorCode::InvalidArgument,
                  "record '" + r.image_id + "' length differs from dump channel count");
    }
    nlohmann::ordered_json rec;
    rec["image_id"] = r.image_id;
    rec["distortion_kind"] = r.distortion_kind ? nlohmann::ordered_json(*r.distortion_kind) : nullptr;
    rec["level_index"] = r.level_index ? nlohmann::ordered_json(*r.level_index) : nullptr;
    rec["offset"] = i * channels;
    records.push_back(std::move(rec));
  }
  header["records"] = std::move(records);
  const std::string blob = header.dump();

  std::string out(kMagic, sizeof(kMagic));
  PutLe<std::uint16_t>(out, kDumpVersion);
  PutLe<std::uint32_t>(out, static_cast<std::uint32_t>(blob.size()));
  out += blob;
  out.reserve(out.size() + dump.records.size() * channels * 4);
  for (const auto& r : dump.records) {
    for (float v : r.values) PutLe<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

FeatureDump parse_dump(std::string_view bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorCode::BadMagic, "not a DFEAT feature dump");
  }
  if (bytes.size() < kPrefixSize) throw Error(ErrorCode::CorruptIndex, "truncated dump prefix");
  const auto version = GetLe<std::uint16_t>(bytes.data() + 6);
  if (version != kDumpVersion) {
    throw Error(ErrorCode::VersionMismatch, "dump version " + std::to_string(version) +
                                                ", expected " + std::to_string(kDumpVersion));
  }
  const auto header_len = GetLe<std::uint32_t>(bytes.data() + 8);
  if (bytes.size() - kPrefixSize < header_len) {
    throw Error(ErrorCode::CorruptIndex, "header extends past end of file");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(kPrefixSize, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptIndex, std::string("unreadable dump header: ") + e.what());
  }

  FeatureDump dump;
  try {
    const std::string network = header.at("network").get<std::string>();
    const auto net = parse_network(network);
    if (!net) throw Error(ErrorCode::UnknownLayer, "dump network '" + network + "' is not registered");
    dump.tap.network = *net;
    dump.tap.layer = header.at("layer").get<std::string>();
    dump.tap.channels = header.at("channels").get<int>();
    for (const auto& t : tap_registry()) {
      if (t.network == dump.tap.network && t.layer == dump.tap.layer) dump.tap.min_input = t.min_input;
    }
    if (header.contains("preprocessing")) {
      const auto& pre = header.at("preprocessing");
      if (pre.contains("mean")) dump.preprocessing.mean = pre.at("mean").get<std::array<float, 3>>();
      if (pre.contains("std")) dump.preprocessing.std = pre.at("std").get<std::array<float, 3>>();
    }
    if (dump.tap.channels < 1) throw Error(ErrorCode::CorruptIndex, "channel count must be positive");
    const auto channels = static_cast<std::size_t>(dump.tap.channels);

    const std::string_view payload = bytes.substr(kPrefixSize + header_len);
    const auto& recs = header.at("records");
    if (payload.size() != recs.size() * channels * 4) {
      throw Error(ErrorCode::CorruptIndex,
                  "payload holds " + std::to_string(payload.size()) + " bytes, index implies " +
                      std::to_string(recs.size() * channels * 4));
    }
    std::size_t next_min = 0;
    dump.records.reserve(recs.size());
    for (const auto& rec : recs) {
      const auto offset = rec.at("offset").get<std::size_t>();
      if (offset < next_min || offset + channels > recs.size() * channels) {
        throw Error(ErrorCode::CorruptIndex, "record offsets overlap or exceed the payload");
      }
      next_min = offset + channels;
      PooledVector pv;
      pv.tap = dump.tap;
      pv.image_id = rec.at("image_id").get<std::string>();
      if (rec.contains("distortion_kind") && !rec.at("distortion_kind").is_null()) {
        pv.distortion_kind = rec.at("distortion_kind").get<std::string>();
      }
      if (rec.contains("level_index") && !rec.at("level_index").is_null()) {
        pv.level_index = rec.at("level_index").get<int>();
      }
      pv.values.resize(channels);
      const char* src = payload.data() + offset * 4;
      for (std::size_t c = 0; c < channels; ++c) {
        pv.values[c] = std::bit_cast<float>(GetLe<std::uint32_t>(src + 4 * c));
        if (!std::isfinite(pv.values[c])) {
          throw Error(ErrorCode::CorruptIndex, "non-finite value in record '" + pv.image_id + "'");
        }
      }
      dump.records.push_back(std::move(pv));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptIndex, std::string("malformed dump header: ") + e.what());
  }
  return dump;
}

void write_dump(const FeatureDump& dump, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_dump(dump));
}

FeatureDump read_dump(const std::filesystem::path& path) { return parse_dump(read_file(path)); }

}  // namespace deepsep
