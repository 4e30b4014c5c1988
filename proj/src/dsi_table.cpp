#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "deepsep/error.hpp"
#include "deepsep/separability.hpp"
#include "deepsep/util.hpp"
#include "json.hpp"

namespace deepsep {

namespace {

constexpr std::string_view kNormPrefix = "# normalization_set=";
constexpr std::string_view kRepsPrefix = "# repetitions=";

double ParseNumber(const std::string& field) {
  try {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used != field.size()) throw std::invalid_argument(field);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::ParseError, "not a number: '" + field + "'");
  }
}

std::string KeyText(const DsiKey& k) { return k.network + "/" + k.layer; }

DsiKey ParseKey(std::string_view text) {
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) {
    throw Error(ErrorCode::ParseError, "normalization key without '/': " + std::string(text));
  }
  return {std::string(text.substr(0, slash)), std::string(text.substr(slash + 1))};
}

}  // namespace

const DsiRow* DsiTable::find(const DsiKey& key) const {
  for (const auto& r : rows) {
    if (r.key == key) return &r;
  }
  return nullptr;
}

DsiTable build_dsi_table(std::span<const RawIndexEntry> entries) {
  std::set<DsiKey> seen;
  std::vector<IndexTriple> raw;
  for (const auto& e : entries) {
    if (!seen.insert(e.key).second) {
      throw Error(ErrorCode::DuplicateId, "duplicate DSI key " + KeyText(e.key));
    }
    raw.push_back(e.raw);
  }
  const auto norm = normalize_indices(raw);
  DsiTable table;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    table.rows.push_back({entries[i].key, entries[i].raw, norm[i], dsi(norm[i]), 0.0});
    table.normalization_set.push_back(entries[i].key);
  }
  return table;
}

DsiTable dsi_repeat_mean(std::span<const DsiTable> tables) {
  if (tables.empty()) throw Error(ErrorCode::InvalidArgument, "no tables to average");
  const DsiTable& first = tables.front();
  std::set<DsiKey> keys;
  for (const auto& r : first.rows) keys.insert(r.key);
  for (const auto& t : tables) {
    std::set<DsiKey> other;
    for (const auto& r : t.rows) other.insert(r.key);
    if (other != keys || t.rows.size() != first.rows.size()) {
      throw Error(ErrorCode::KeyMismatch, "repetition tables cover different (network, layer) sets");
    }
  }
  const double reps = static_cast<double>(tables.size());
  DsiTable out;
  out.normalization_set = first.normalization_set;
  out.repetitions = static_cast<int>(tables.size());
  for (const auto& proto : first.rows) {
    DsiRow row;
    row.key = proto.key;
    std::vector<double> values;
    for (const auto& t : tables) {
      const DsiRow* r = t.find(proto.key);
      row.raw.ch += r->raw.ch;
      row.raw.db += r->raw.db;
      row.raw.s += r->raw.s;
      row.normalized.ch += r->normalized.ch;
      row.normalized.db += r->normalized.db;
      row.normalized.s += r->normalized.s;
      values.push_back(r->dsi);
    }
    for (double* v : {&row.raw.ch, &row.raw.db, &row.raw.s, &row.normalized.ch, &row.normalized.db,
                      &row.normalized.s}) {
      *v /= reps;
    }
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= reps;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    row.dsi = mean;
    row.dsi_std = std::sqrt(var / reps);
    out.rows.push_back(row);
  }
  return out;
}

std::string dsi_table_to_csv(const DsiTable& table) {
  std::vector<std::string> keys;
  for (const auto& k : table.normalization_set) keys.push_back(KeyText(k));
  std::string out;
  out += std::string(kNormPrefix) + join(keys, ";") + "\n";
  const bool with_std = table.repetitions > 1;
  if (with_std) out += std::string(kRepsPrefix) + std::to_string(table.repetitions) + "\n";
  out += "network,layer,ch,db,s,ch_norm,db_norm,s_norm,dsi";
  out += with_std ? ",dsi_std\n" : "\n";
  for (const auto& r : table.rows) {
    std::vector<std::string> f = {r.key.network,           r.key.layer,
                                  format_double(r.raw.ch), format_double(r.raw.db),
                                  format_double(r.raw.s),  format_double(r.normalized.ch),
                                  format_double(r.normalized.db), format_double(r.normalized.s),
                                  format_double(r.dsi)};
    if (with_std) f.push_back(format_double(r.dsi_std));
    out += csv_row(f);
  }
  return out;
}

DsiTable dsi_table_from_csv(std::string_view text) {
  DsiTable table;
  bool have_norm = false;
  for (const auto& raw_line : split(text, '\n')) {
    const std::string line = trim(raw_line);
    if (line.starts_with(kNormPrefix)) {
      have_norm = true;
      for (const auto& k : split(line.substr(kNormPrefix.size()), ';')) {
        if (!k.empty()) table.normalization_set.push_back(ParseKey(k));
      }
    } else if (line.starts_with(kRepsPrefix)) {
      table.repetitions = static_cast<int>(ParseNumber(line.substr(kRepsPrefix.size())));
    }
  }
  const auto rows = parse_csv(text);
  if (rows.empty()) throw Error(ErrorCode::ParseError, "DSI table has no header");
  const auto& header = rows.front();
  const std::vector<std::string> expected = {"network", "layer",   "ch",     "db", "s",
                                             "ch_norm", "db_norm", "s_norm", "dsi"};
  if (header.size() < expected.size() ||
      !std::equal(expected.begin(), expected.end(), header.begin())) {
    throw Error(ErrorCode::SchemaViolation, "unexpected DSI table header");
  }
  const bool with_std = header.size() > expected.size() && header[expected.size()] == "dsi_std";
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i];
    if (f.size() != header.size()) throw Error(ErrorCode::ParseError, "ragged DSI table row");
    DsiRow r;
    r.key = {f[0], f[1]};
    r.raw = {ParseNumber(f[2]), ParseNumber(f[3]), ParseNumber(f[4])};
    r.normalized = {ParseNumber(f[5]), ParseNumber(f[6]), ParseNumber(f[7])};
    r.dsi = ParseNumber(f[8]);
    if (with_std) r.dsi_std = ParseNumber(f[9]);
    table.rows.push_back(r);
  }
  if (!have_norm) {
    for (const auto& r : table.rows) table.normalization_set.push_back(r.key);
  }
  return table;
}

std::string dsi_table_to_json(const DsiTable& table) {
  nlohmann::ordered_json j;
  j["repetitions"] = table.repetitions;
  j["normalization_set"] = nlohmann::ordered_json::array();
  for (const auto& k : table.normalization_set) {
    j["normalization_set"].push_back({{"network", k.network}, {"layer", k.layer}});
  }
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : table.rows) {
    j["rows"].push_back({{"network", r.key.network},
                         {"layer", r.key.layer},
                         {"ch", r.raw.ch},
                         {"db", r.raw.db},
                         {"s", r.raw.s},
                         {"ch_norm", r.normalized.ch},
                         {"db_norm", r.normalized.db},
                         {"s_norm", r.normalized.s},
                         {"dsi", r.dsi},
                         {"dsi_std", r.dsi_std}});
  }
  return j.dump(2) + "\n";
}

DsiTable dsi_table_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    DsiTable table;
    table.repetitions = j.value("repetitions", 1);
    for (const auto& k : j.at("normalization_set")) {
      table.normalization_set.push_back({k.at("network"), k.at("layer")});
    }
    for (const auto& r : j.at("rows")) {
      DsiRow row;
      row.key = {r.at("network"), r.at("layer")};
      row.raw = {r.at("ch"), r.at("db"), r.at("s")};
      row.normalized = {r.at("ch_norm"), r.at("db_norm"), r.at("s_norm")};
      row.dsi = r.at("dsi");
      row.dsi_std = r.value("dsi_std", 0.0);
      table.rows.push_back(row);
    }
    return table;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("DSI table JSON: ") + e.what());
  }
}

std::vector<DsiRow> best_layer_per_network(const DsiTable& table) {
  std::vector<DsiRow> best;
  std::map<std::string, std::size_t> slot;
  for (const auto& r : table.rows) {
    const auto it = slot.find(r.key.network);
    if (it == slot.end()) {
      slot[r.key.network] = best.size();
      best.push_back(r);
    } else if (r.dsi > best[it->second].dsi) {
      best[it->second] = r;
    }
  }
  return best;
}

}  // namespace deepsep
