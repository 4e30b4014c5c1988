#include "deepsep/manifest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>

#include <json.hpp>

#include "deepsep/error.hpp"
#include "deepsep/util.hpp"

namespace deepsep {

using nlohmann::json;

std::string_view to_string(Polarity polarity) {
  return polarity == Polarity::HigherIsBetter ? "mos" : "dmos";
}

Polarity parse_polarity(std::string_view text) {
  const std::string t = to_lower(trim(text));
  if (t == "mos" || t == "higher_is_better") return Polarity::HigherIsBetter;
  if (t == "dmos" || t == "higher_is_worse") return Polarity::HigherIsWorse;
  throw Error(ErrorCode::ParseError, "unknown polarity '" + std::string(text) + "'");
}

std::string ManifestRow::kind_label() const { return join(kinds, "+"); }

std::string ManifestRow::level_label() const {
  std::vector<std::string> parts;
  for (int l : levels) parts.push_back(std::to_string(l));
  return join(parts, "+");
}

Manifest::Manifest(std::vector<ManifestRow> rows, std::filesystem::path base_dir)
    : rows_(std::move(rows)), base_dir_(std::move(base_dir)) {
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const ManifestRow& row = rows_[i];
    if (row.image_id.empty()) throw Error(ErrorCode::SchemaViolation, "row with empty image_id");
    if (!index_.emplace(row.image_id, i).second) {
      throw Error(ErrorCode::DuplicateId, "duplicate image_id '" + row.image_id + "'");
    }
    if (!row.levels.empty() && row.levels.size() != row.kinds.size()) {
      throw Error(ErrorCode::SchemaViolation,
                  "kinds/levels length mismatch for '" + row.image_id + "'");
    }
    if (row.is_reference() && !row.kinds.empty()) {
      throw Error(ErrorCode::SchemaViolation,
                  "reference row '" + row.image_id + "' carries distortion kinds");
    }
    if (row.score && !std::isfinite(*row.score)) {
      throw Error(ErrorCode::SchemaViolation, "non-finite score for '" + row.image_id + "'");
    }
  }
  for (const ManifestRow& row : rows_) {
    if (row.is_reference()) continue;
    const ManifestRow* ref = find(row.reference_id);
    if (ref == nullptr || !ref->is_reference()) {
      throw Error(ErrorCode::DanglingReference,
                  "'" + row.image_id + "' references unknown '" + row.reference_id + "'");
    }
  }
}

const ManifestRow* Manifest::find(std::string_view image_id) const {
  const auto it = index_.find(std::string(image_id));
  return it == index_.end() ? nullptr : &rows_[it->second];
}

std::filesystem::path Manifest::resolve_path(const ManifestRow& row) const {
  const std::filesystem::path p(row.image_path);
  if (p.is_absolute() || base_dir_.empty()) return p;
  return base_dir_ / p;
}

std::vector<const ManifestRow*> Manifest::references() const {
  std::vector<const ManifestRow*> out;
  for (const auto& r : rows_) {
    if (r.is_reference()) out.push_back(&r);
  }
  return out;
}

std::vector<const ManifestRow*> Manifest::distorted() const {
  std::vector<const ManifestRow*> out;
  for (const auto& r : rows_) {
    if (!r.is_reference()) out.push_back(&r);
  }
  return out;
}

std::vector<std::string> Manifest::reference_ids() const {
  std::vector<std::string> out;
  for (const auto& r : rows_) {
    if (r.is_reference()) out.push_back(r.image_id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

int ParseInt(std::string_view text, std::string_view what) {
  int value = 0;
  const std::string t = trim(text);
  const auto res = std::from_chars(t.data(), t.data() + t.size(), value);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw Error(ErrorCode::ParseError, "bad integer for " + std::string(what) + ": '" + t + "'");
  }
  return value;
}

double ParseDouble(std::string_view text, std::string_view what) {
  const std::string t = trim(text);
  double value = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), value);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw Error(ErrorCode::ParseError, "bad number for " + std::string(what) + ": '" + t + "'");
  }
  return value;
}

std::vector<std::string> SplitList(std::string_view text) {
  if (trim(text).empty()) return {};
  std::vector<std::string> out;
  for (auto& part : split(text, '+')) out.push_back(trim(part));
  return out;
}

}  // namespace

Manifest parse_manifest_csv(std::string_view text, std::filesystem::path base_dir) {
  const auto table = parse_csv(text);
  if (table.empty()) throw Error(ErrorCode::ParseError, "manifest CSV has no header");
  const std::string header = join(table.front(), ",");
  if (header != kManifestCsvHeader) {
    throw Error(ErrorCode::SchemaViolation, "unrecognized manifest header '" + header + "'");
  }
  std::vector<ManifestRow> rows;
  for (std::size_t i = 1; i < table.size(); ++i) {
    const auto& f = table[i];
    if (f.size() != 8) {
      throw Error(ErrorCode::ParseError,
                  "manifest line " + std::to_string(i + 1) + ": expected 8 fields");
    }
    ManifestRow row;
    row.image_path = f[0];
    row.image_id = f[1];
    row.reference_id = f[2];
    for (auto& k : SplitList(f[3])) row.kinds.push_back(to_lower(k));
    for (auto& l : SplitList(f[4])) row.levels.push_back(ParseInt(l, "levels"));
    if (!trim(f[5]).empty()) row.score = ParseDouble(f[5], "score");
    row.polarity = parse_polarity(f[6]);
    row.database = f[7];
    rows.push_back(std::move(row));
  }
  return Manifest(std::move(rows), std::move(base_dir));
}

Manifest parse_manifest_json(std::string_view text, std::filesystem::path base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("manifest JSON: ") + e.what());
  }
  try {
    if (doc.value("schema_version", 0) != 1) {
      throw Error(ErrorCode::SchemaViolation, "manifest schema_version must be 1");
    }
    std::vector<ManifestRow> rows;
    for (const auto& r : doc.at("rows")) {
      ManifestRow row;
      row.image_path = r.at("image_path").get<std::string>();
      row.image_id = r.at("image_id").get<std::string>();
      row.reference_id = r.at("reference_id").get<std::string>();
      for (const auto& k : r.value("kinds", json::array())) {
        row.kinds.push_back(to_lower(k.get<std::string>()));
      }
      for (const auto& l : r.value("levels", json::array())) row.levels.push_back(l.get<int>());
      if (r.contains("score") && !r.at("score").is_null()) row.score = r.at("score").get<double>();
      row.polarity = parse_polarity(r.at("polarity").get<std::string>());
      row.database = r.value("database", "");
      rows.push_back(std::move(row));
    }
    return Manifest(std::move(rows), std::move(base_dir));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, std::string("manifest JSON: ") + e.what());
  }
}

std::string manifest_to_csv(const Manifest& manifest) {
  std::string out(kManifestCsvHeader);
  out += '\n';
  for (const auto& r : manifest.rows()) {
    out += csv_row({r.image_path, r.image_id, r.reference_id, r.kind_label(), r.level_label(),
                    r.score ? format_double(*r.score) : "", std::string(to_string(r.polarity)),
                    r.database});
  }
  return out;
}

std::string manifest_to_json(const Manifest& manifest) {
  json rows = json::array();
  for (const auto& r : manifest.rows()) {
    rows.push_back({{"image_path", r.image_path},
                    {"image_id", r.image_id},
                    {"reference_id", r.reference_id},
                    {"kinds", r.kinds},
                    {"levels", r.levels},
                    {"score", r.score ? json(*r.score) : json(nullptr)},
                    {"polarity", to_string(r.polarity)},
                    {"database", r.database}});
  }
  return json{{"schema_version", 1}, {"rows", rows}}.dump(2) + "\n";
}

Manifest load_manifest(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  const auto base = path.parent_path();
  if (to_lower(path.extension().string()) == ".json") return parse_manifest_json(text, base);
  return parse_manifest_csv(text, base);
}

void save_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  if (to_lower(path.extension().string()) == ".json") {
    write_file_atomic(path, manifest_to_json(manifest));
  } else {
    write_file_atomic(path, manifest_to_csv(manifest));
  }
}

const std::vector<DatasetDescriptor>& dataset_registry() {
  static const std::vector<DatasetDescriptor> registry = {
      {"CSIQ", 30, 886, 6, LevelRange{4, 5}},
      {"LIVE", 29, 779, 5, LevelRange{7, 8}},
      {"TID2008", 25, 1700, 17, LevelRange{4, 4}},
      {"TID2013", 25, 3000, 24, LevelRange{5, 5}},
      {"LIVEMD", 15, 450, std::nullopt, std::nullopt},
      {"SYNTHETIC", 29, 783, 3, LevelRange{9, 9}},
  };
  return registry;
}

const DatasetDescriptor& find_dataset(std::string_view name) {
  const std::string want = to_lower(name);
  for (const auto& d : dataset_registry()) {
    if (to_lower(d.name) == want) return d;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown dataset '" + std::string(name) + "'");
}

ValidationReport validate_against(const Manifest& manifest, const DatasetDescriptor& descriptor,
                                  bool allow_subset) {
  ValidationReport report;
  auto check = [&](std::string_view what, std::size_t actual, int expected) {
    const auto want = static_cast<std::size_t>(expected);
    if (actual == want) return;
    if (allow_subset && actual < want) return;
    if (actual == 0) {
      report.warnings.push_back(std::string(what) + ": missing (expected " +
                                std::to_string(expected) + ")");
    } else {
      report.warnings.push_back(std::string(what) + ": count mismatch, found " +
                                std::to_string(actual) + ", expected " + std::to_string(expected));
    }
  };
  check("reference images", manifest.references().size(), descriptor.reference_count);
  check("distorted images", manifest.distorted().size(), descriptor.distorted_count);

  std::map<std::string, std::set<std::string>> levels_by_kind;
  for (const ManifestRow* row : manifest.distorted()) {
    auto& levels = levels_by_kind[row->kind_label()];
    if (!row->levels.empty()) levels.insert(row->level_label());
  }
  if (descriptor.distortion_type_count) {
    check("distortion types", levels_by_kind.size(), *descriptor.distortion_type_count);
  }
  if (descriptor.levels_per_type) {
    for (const auto& [kind, levels] : levels_by_kind) {
      if (levels.empty()) continue;
      const int n = static_cast<int>(levels.size());
      if (n > descriptor.levels_per_type->max ||
          (!allow_subset && n < descriptor.levels_per_type->min)) {
        report.warnings.push_back("distortion levels for '" + kind + "': found " +
                                  std::to_string(n) + ", expected " +
                                  std::to_string(descriptor.levels_per_type->min) + "-" +
                                  std::to_string(descriptor.levels_per_type->max));
      }
    }
  }
  return report;
}

}  // namespace deepsep
