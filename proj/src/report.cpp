#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "deepsep/error.hpp"
#include "deepsep/pipeline.hpp"
#include "deepsep/util.hpp"
#include "json.hpp"

namespace deepsep {

namespace {

enum class Kind { None, DsiCsv, DsiJson, RriqaCsv, RecognitionCsv };

std::string FirstDataLine(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (!t.empty() && t.front() != '#') return t;
  }
  return {};
}

Kind Classify(const fs::path& path, const std::string& text) {
  const std::string ext = to_lower(path.extension().string());
  if (ext == ".csv") {
    const std::string head = FirstDataLine(text);
    if (head.starts_with("network,layer,ch,db,s,")) return Kind::DsiCsv;
    if (head.starts_with("database,network,layer,dist_kind,stat,")) return Kind::RriqaCsv;
    if (head.starts_with("database,network,layer,task,k,")) return Kind::RecognitionCsv;
  } else if (ext == ".json") {
    try {
      const auto j = nlohmann::json::parse(text);
      if (j.is_object() && j.contains("normalization_set") && j.contains("rows")) return Kind::DsiJson;
    } catch (const nlohmann::json::exception&) {
    }
  }
  return Kind::None;
}

std::string Fixed(double v, int digits = 4) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

std::string NormKey(const DsiTable& t) {
  std::vector<std::string> keys;
  for (const auto& k : t.normalization_set) keys.push_back(k.network + "/" + k.layer);
  std::sort(keys.begin(), keys.end());
  return join(keys, ";");
}

}  // namespace

std::string render_report(const std::vector<fs::path>& inputs) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      for (const auto& e : fs::recursive_directory_iterator(in)) {
        if (e.is_regular_file()) files.push_back(e.path());
      }
    } else if (fs::is_regular_file(in)) {
      files.push_back(in);
    }
  }
  std::sort(files.begin(), files.end());

  std::vector<std::pair<fs::path, DsiTable>> tables;
  std::vector<std::pair<fs::path, std::vector<std::vector<std::string>>>> rriqa, recog;
  std::set<fs::path> seen_dsi_stems;
  for (const auto& f : files) {
    const std::string text = read_file(f);
    switch (Classify(f, text)) {
      case Kind::DsiCsv:
        tables.emplace_back(f, dsi_table_from_csv(text));
        seen_dsi_stems.insert(f.parent_path() / f.stem());
        break;
      case Kind::DsiJson:
        // A JSON twin of a CSV table already read carries the same content.
        if (seen_dsi_stems.count(f.parent_path() / f.stem()) == 0) {
          nlohmann::json j = nlohmann::json::parse(text);
          j.erase("provenance");
          tables.emplace_back(f, dsi_table_from_json(j.dump()));
        }
        break;
      case Kind::RriqaCsv:
        rriqa.emplace_back(f, parse_csv(text));
        break;
      case Kind::RecognitionCsv:
        recog.emplace_back(f, parse_csv(text));
        break;
      case Kind::None:
        break;
    }
  }
  if (tables.empty() && rriqa.empty() && recog.empty()) {
    throw Error(ErrorCode::MissingInput, "no DSI, RR-IQA or recognition results found");
  }

  std::ostringstream md;
  md << "# Distortion separability summary\n";

  if (!tables.empty()) {
    md << "\n## Best layer per network\n";
    std::set<std::string> norm_sets;
    for (const auto& [path, table] : tables) norm_sets.insert(NormKey(table));
    if (norm_sets.size() > 1) {
      md << "\n> **Warning:** the DSI tables below were normalized over different "
            "(network, layer) sets, so their values are not comparable across tables.\n";
    }
    for (const auto& [path, table] : tables) {
      md << "\n### " << path.filename().string() << "\n\n";
      md << "Normalization set: " << table.normalization_set.size() << " layers";
      if (table.repetitions > 1) md << ", mean of " << table.repetitions << " repetitions";
      md << ".\n\n";
      md << "| network | best layer | DSI | CH | DB | S |\n|---|---|---|---|---|---|\n";
      for (const auto& r : best_layer_per_network(table)) {
        md << "| " << r.key.network << " | " << r.key.layer << " | " << Fixed(r.dsi);
        if (table.repetitions > 1) md << " ± " << Fixed(r.dsi_std);
        md << " | " << Fixed(r.raw.ch, 2) << " | " << Fixed(r.raw.db) << " | " << Fixed(r.raw.s) << " |\n";
      }
    }
  }

  if (!rriqa.empty()) {
    md << "\n## Reduced-reference quality (test-side correlation)\n\n";
    md << "| database | network | layer | distortion | median SROCC | mean SROCC | median PLCC | mean PLCC |\n";
    md << "|---|---|---|---|---|---|---|---|\n";
    for (const auto& [path, rows] : rriqa) {
      std::map<std::vector<std::string>, std::map<std::string, std::pair<std::string, std::string>>> grouped;
      std::vector<std::vector<std::string>> order;
      for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (r.size() < 7) continue;
        const std::vector<std::string> key(r.begin(), r.begin() + 4);
        if (!grouped.count(key)) order.push_back(key);
        grouped[key][r[4]] = {r[5], r[6]};
      }
      for (const auto& key : order) {
        auto& stats = grouped[key];
        md << "| " << key[0] << " | " << key[1] << " | " << key[2] << " | " << key[3] << " | "
           << Fixed(std::stod(stats["median"].first)) << " | " << Fixed(std::stod(stats["mean"].first)) << " | "
           << Fixed(std::stod(stats["median"].second)) << " | " << Fixed(std::stod(stats["mean"].second))
           << " |\n";
      }
    }
  }

  if (!recog.empty()) {
    md << "\n## Distortion recognition (k-NN)\n\n";
    md << "| database | network | layer | task | k | mean accuracy | splits |\n|---|---|---|---|---|---|---|\n";
    for (const auto& [path, rows] : recog) {
      for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (r.size() < 8) continue;
        md << "| " << r[0] << " | " << r[1] << " | " << r[2] << " | " << r[3] << " | " << r[4] << " | "
           << Fixed(100.0 * std::stod(r[5]), 1) << "% | " << r[7] << " |\n";
      }
    }
  }
  return md.str();
}

void cmd_report(const std::vector<fs::path>& inputs, const fs::path& out, const Provenance& p) {
  write_markdown_report(out, render_report(inputs), p);
}

}  // namespace deepsep
