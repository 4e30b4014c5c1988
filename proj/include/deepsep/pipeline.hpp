#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "deepsep/quality.hpp"
#include "deepsep/recognition.hpp"
#include "deepsep/registry.hpp"
#include "deepsep/separability.hpp"

namespace deepsep {

namespace fs = std::filesystem;

// ---- configuration ------------------------------------------------------------

struct TaskToggles {
  bool distort = false;
  bool extract = false;
  bool dsi = false;
  bool pca_sweep = false;
  bool rriqa = false;
  bool recognize = false;

  bool any() const { return distort || extract || dsi || pca_sweep || rriqa || recognize; }
};

struct RunConfig {
  fs::path refs_dir;       // distort input
  fs::path manifest;       // used when distort is off
  fs::path dumps_dir;      // precomputed dumps, used when extract is off
  fs::path ladder;         // optional JSON ladder
  fs::path output_dir;
  std::map<Network, fs::path> models;
  std::map<Network, std::vector<std::string>> layers;  // empty list = every registry tap
  std::uint64_t seed = 0;
  unsigned threads = 1;
  SplitPlan split;
  TaskToggles tasks;
  bool subtract_reference = false;  // semantics-removal variant for dsi
  std::vector<int> pca_dims = {1, 2, 4, 8, 16, 32, 64, -1};
  std::vector<std::string> pca_layers;  // "network/layer"; empty = best DSI layer per network
  std::vector<int> knn_k = {3, 9};
  std::vector<RecognitionTask> recognition_tasks = {RecognitionTask::Type,
                                                    RecognitionTask::TypeSeverity};
  bool rriqa_per_kind = true;

  // FNV-1a of the canonical JSON form, hex.
  std::string hash() const;
  std::string to_json() const;
  // Checks task selection, path existence and layer names. Throws ConfigError.
  void validate() const;
};

// JSON, or the TOML subset described in the README (tables, key = value,
// strings, numbers, booleans, flat arrays). Relative paths are resolved
// against the file's directory. Throws ConfigError.
RunConfig load_config(const fs::path& path);
RunConfig parse_config_json(std::string_view text, const fs::path& base_dir = {});
RunConfig parse_config_toml(std::string_view text, const fs::path& base_dir = {});

// ---- provenance -------------------------------------------------------------------

struct Provenance {
  std::string tool_version;
  std::uint64_t seed = 0;
  std::string config_hash;

  std::vector<std::string> lines() const;
};

Provenance make_provenance(std::uint64_t seed, std::string config_hash);

// Writers that prepend the provenance block in a syntax the format tolerates
// ('#' lines for CSV, a "provenance" member for JSON, an HTML comment for
// Markdown) and replace the target atomically.
void write_csv_report(const fs::path& path, std::string_view csv, const Provenance& p);
void write_json_report(const fs::path& path, std::string_view json, const Provenance& p);
void write_markdown_report(const fs::path& path, std::string_view markdown, const Provenance& p);

// ---- stages -----------------------------------------------------------------------

enum class Stage { Config, Distort, Extract, Dsi, PcaSweep, Rriqa, Recognize, Report };

std::string_view to_string(Stage stage);
int exit_code(Stage stage);

// A failure attributed to one pipeline stage.
class StageError : public std::runtime_error {
 public:
  StageError(Stage stage, const std::string& what)
      : std::runtime_error(std::string(to_string(stage)) + " stage failed: " + what), stage_(stage) {}
  Stage stage() const { return stage_; }
  int exit_code() const { return deepsep::exit_code(stage_); }

 private:
  Stage stage_;
};

// Dump file name for a tap: "<network>_<layer>.dfeat".
std::string dump_file_name(const LayerTap& tap);

// Every *.dfeat in a directory, sorted by file name.
std::vector<FeatureDump> load_dumps(const fs::path& dir);

// Distorted-only dump whose vectors are distorted minus reference.
FeatureDump subtract_reference_dump(const FeatureDump& dump, const Manifest& manifest);

// One raw index row per dump, labels from distortion kinds.
std::vector<RawIndexEntry> raw_indices_for_dumps(const std::vector<FeatureDump>& dumps);

struct PipelineResult {
  std::vector<fs::path> outputs;  // files written, in write order
};

// distort -> extract -> dsi (+ pca sweep) -> rriqa -> recognize -> report,
// as toggled. Throws StageError.
PipelineResult cmd_pipeline(const RunConfig& config);

// Markdown summary of every DSI, RR-IQA and recognition result found under
// `inputs` (files or directories). Throws MissingInput when none is found.
std::string render_report(const std::vector<fs::path>& inputs);
void cmd_report(const std::vector<fs::path>& inputs, const fs::path& out, const Provenance& p);

}  // namespace deepsep
