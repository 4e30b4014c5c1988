#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace deepsep {

enum class Polarity {
  HigherIsBetter,  // MOS
  HigherIsWorse,   // DMOS
};

std::string_view to_string(Polarity polarity);
Polarity parse_polarity(std::string_view text);

struct ManifestRow {
  std::string image_path;
  std::string image_id;
  std::string reference_id;  // equals image_id for reference rows
  std::vector<std::string> kinds;  // ordered; multi-distortion rows carry several
  std::vector<int> levels;         // same length as kinds, or empty when unknown
  std::optional<double> score;
  Polarity polarity = Polarity::HigherIsWorse;
  std::string database;

  bool is_reference() const { return image_id == reference_id; }
  // '+'-joined kinds, e.g. "gblur+jpeg"; empty for references.
  std::string kind_label() const;
  std::string level_label() const;

  friend bool operator==(const ManifestRow&, const ManifestRow&) = default;
};

// Validated, immutable record set. Image paths are resolved relative to
// base_dir when not absolute.
class Manifest {
 public:
  Manifest() = default;
  // Throws DuplicateId / DanglingReference / SchemaViolation.
  explicit Manifest(std::vector<ManifestRow> rows, std::filesystem::path base_dir = {});

  const std::vector<ManifestRow>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }
  const std::filesystem::path& base_dir() const { return base_dir_; }

  const ManifestRow* find(std::string_view image_id) const;
  std::filesystem::path resolve_path(const ManifestRow& row) const;

  std::vector<const ManifestRow*> references() const;
  std::vector<const ManifestRow*> distorted() const;
  std::vector<std::string> reference_ids() const;

  friend bool operator==(const Manifest& a, const Manifest& b) { return a.rows_ == b.rows_; }

 private:
  std::vector<ManifestRow> rows_;
  std::filesystem::path base_dir_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline constexpr std::string_view kManifestCsvHeader =
    "image_path,image_id,reference_id,kinds,levels,score,polarity,database";

// CSV or JSON chosen by extension (.json => JSON).
Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

Manifest parse_manifest_csv(std::string_view text, std::filesystem::path base_dir = {});
Manifest parse_manifest_json(std::string_view text, std::filesystem::path base_dir = {});
std::string manifest_to_csv(const Manifest& manifest);
std::string manifest_to_json(const Manifest& manifest);

struct LevelRange {
  int min;
  int max;
};

struct DatasetDescriptor {
  std::string name;
  int reference_count;
  int distorted_count;
  std::optional<int> distortion_type_count;  // unset for combined subsets
  std::optional<LevelRange> levels_per_type;
};

const std::vector<DatasetDescriptor>& dataset_registry();
const DatasetDescriptor& find_dataset(std::string_view name);

struct ValidationReport {
  std::vector<std::string> warnings;
  bool clean() const { return warnings.empty(); }
};

// Count comparison only, never fatal. With allow_subset, smaller counts are
// accepted and only excess is reported.
ValidationReport validate_against(const Manifest& manifest, const DatasetDescriptor& descriptor,
                                  bool allow_subset = false);

}  // namespace deepsep
