#include <algorithm>
#include <cstdio>
#include <set>

#include "deepsep/error.hpp"
#include "deepsep/pca.hpp"
#include "deepsep/pipeline.hpp"
#include "deepsep/util.hpp"
#include "json.hpp"

namespace deepsep {

namespace {

using nlohmann::json;

[[noreturn]] void Bad(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

// ---- TOML subset ------------------------------------------------------------------

class TomlReader {
 public:
  explicit TomlReader(std::string_view text) : text_(text) {}

  json Parse() {
    json root = json::object();
    json* table = &root;
    while (SkipBlankAndComments(), pos_ < text_.size()) {
      if (Peek() == '[') {
        ++pos_;
        if (Peek() == '[') Fail("arrays of tables are not supported");
        const std::string name = ReadUntil(']');
        ++pos_;
        ExpectLineEnd();
        table = &root;
        for (const auto& part : split(trim(name), '.')) {
          const std::string key = Unquote(trim(part));
          if (key.empty()) Fail("empty table name");
          json& next = (*table)[key];
          if (next.is_null()) next = json::object();
          if (!next.is_object()) Fail("table '" + key + "' redefines a value");
          table = &next;
        }
        continue;
      }
      const std::string key = Unquote(trim(ReadUntil('=')));
      if (key.empty()) Fail("missing key");
      ++pos_;
      SkipSpaces();
      json value = ReadValue();
      ExpectLineEnd();
      if (table->contains(key)) Fail("duplicate key '" + key + "'");
      (*table)[key] = std::move(value);
    }
    return root;
  }

 private:
  [[noreturn]] void Fail(const std::string& what) const {
    std::size_t line = 1;
    for (std::size_t i = 0; i < pos_ && i < text_.size(); ++i) line += text_[i] == '\n';
    Bad("TOML line " + std::to_string(line) + ": " + what);
  }

  char Peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void SkipSpaces() {
    while (Peek() == ' ' || Peek() == '\t') ++pos_;
  }

  void SkipBlankAndComments() {
    while (pos_ < text_.size()) {
      const char c = Peek();
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        ++pos_;
      } else if (c == '#') {
        while (pos_ < text_.size() && Peek() != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  void ExpectLineEnd() {
    SkipSpaces();
    if (Peek() == '#') {
      while (pos_ < text_.size() && Peek() != '\n') ++pos_;
    }
    if (Peek() == '\r') ++pos_;
    if (pos_ < text_.size() && Peek() != '\n') Fail("unexpected trailing characters");
  }

  std::string ReadUntil(char stop) {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != stop && text_[pos_] != '\n') ++pos_;
    if (Peek() != stop) Fail(std::string("expected '") + stop + "'");
    return std::string(text_.substr(start, pos_ - start));
  }

  static std::string Unquote(const std::string& key) {
    if (key.size() >= 2 && (key.front() == '"' || key.front() == '\'') && key.back() == key.front()) {
      return key.substr(1, key.size() - 2);
    }
    return key;
  }

  json ReadValue() {
    const char c = Peek();
    if (c == '"') return ReadBasicString();
    if (c == '\'') {
      ++pos_;
      const std::string s = ReadUntil('\'');
      ++pos_;
      return s;
    }
    if (c == '[') return ReadArray();
    if (text_.substr(pos_).starts_with("true")) {
      pos_ += 4;
      return true;
    }
    if (text_.substr(pos_).starts_with("false")) {
      pos_ += 5;
      return false;
    }
    return ReadNumber();
  }

  json ReadBasicString() {
    ++pos_;
    std::string out;
    while (true) {
      if (pos_ >= text_.size() || Peek() == '\n') Fail("unterminated string");
      const char c = text_[pos_++];
      if (c == '"') break;
      if (c != '\\') {
        out += c;
        continue;
      }
      const char e = text_[pos_++];
      switch (e) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case '\\': out += '\\'; break;
        case '"': out += '"'; break;
        default: Fail(std::string("unsupported escape \\") + e);
      }
    }
    return out;
  }

  json ReadArray() {
    ++pos_;
    json arr = json::array();
    while (true) {
      SkipBlankAndComments();
      if (Peek() == ']') {
        ++pos_;
        return arr;
      }
      arr.push_back(ReadValue());
      SkipBlankAndComments();
      if (Peek() == ',') {
        ++pos_;
      } else if (Peek() != ']') {
        Fail("expected ',' or ']' in array");
      }
    }
  }

  json ReadNumber() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::string_view("+-0123456789._eE").find(Peek()) != std::string_view::npos) {
      ++pos_;
    }
    std::string token(text_.substr(start, pos_ - start));
    std::erase(token, '_');
    if (token.empty()) Fail("expected a value");
    try {
      std::size_t used = 0;
      if (token.find_first_of(".eE") == std::string::npos) {
        const long long v = std::stoll(token, &used);
        if (used == token.size()) return v;
      } else {
        const double v = std::stod(token, &used);
        if (used == token.size()) return v;
      }
    } catch (const std::exception&) {
    }
    Fail("bad number '" + token + "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

// ---- JSON -> RunConfig --------------------------------------------------------

fs::path Resolve(const json& value, const fs::path& base) {
  if (!value.is_string()) Bad("paths must be strings");
  fs::path p = value.get<std::string>();
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return (base / p).lexically_normal();
}

Network NetworkKey(const std::string& key) {
  const auto net = parse_network(key);
  if (!net) Bad("unknown network '" + key + "'");
  return *net;
}

template <typename T>
T Get(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    Bad(std::string("wrong type for '") + key + "'");
  }
}

RunConfig FromJson(const json& j, const fs::path& base) {
  if (!j.is_object()) Bad("configuration must be an object");
  static const std::set<std::string> known = {"seed",  "threads", "paths", "models",  "layers",
                                              "splits", "tasks",  "dsi",   "pca",     "recognition",
                                              "rriqa"};
  for (const auto& [key, value] : j.items()) {
    if (known.count(key) == 0) Bad("unknown configuration key '" + key + "'");
  }
  RunConfig c;
  c.seed = Get<std::uint64_t>(j, "seed", 0);
  c.threads = Get<unsigned>(j, "threads", 1);
  c.split.master_seed = c.seed;

  if (j.contains("paths")) {
    const json& p = j.at("paths");
    if (p.contains("refs")) c.refs_dir = Resolve(p.at("refs"), base);
    if (p.contains("manifest")) c.manifest = Resolve(p.at("manifest"), base);
    if (p.contains("dumps")) c.dumps_dir = Resolve(p.at("dumps"), base);
    if (p.contains("ladder")) c.ladder = Resolve(p.at("ladder"), base);
    if (p.contains("output")) c.output_dir = Resolve(p.at("output"), base);
  }
  if (j.contains("models")) {
    for (const auto& [net, path] : j.at("models").items()) c.models[NetworkKey(net)] = Resolve(path, base);
  }
  if (j.contains("layers")) {
    for (const auto& [net, list] : j.at("layers").items()) {
      auto& layers = c.layers[NetworkKey(net)];
      if (list.is_string() && list.get<std::string>() == "all") continue;
      if (!list.is_array()) Bad("layers." + net + " must be \"all\" or a list");
      for (const auto& l : list) layers.push_back(l.get<std::string>());
    }
  }
  if (j.contains("splits")) {
    const json& s = j.at("splits");
    c.split.split_count = Get<int>(s, "count", c.split.split_count);
    c.split.train_fraction = Get<double>(s, "train_fraction", c.split.train_fraction);
  }
  if (j.contains("tasks")) {
    const json& t = j.at("tasks");
    c.tasks.distort = Get<bool>(t, "distort", false);
    c.tasks.extract = Get<bool>(t, "extract", false);
    c.tasks.dsi = Get<bool>(t, "dsi", false);
    c.tasks.pca_sweep = Get<bool>(t, "pca_sweep", false);
    c.tasks.rriqa = Get<bool>(t, "rriqa", false);
    c.tasks.recognize = Get<bool>(t, "recognize", false);
  }
  if (j.contains("dsi")) c.subtract_reference = Get<bool>(j.at("dsi"), "subtract_reference", false);
  if (j.contains("pca")) {
    const json& p = j.at("pca");
    if (p.contains("dims")) {
      const json& dims = p.at("dims");
      try {
        if (dims.is_string()) {
          c.pca_dims = parse_dims(dims.get<std::string>());
        } else {
          std::vector<std::string> parts;
          for (const auto& d : dims) parts.push_back(d.is_string() ? d.get<std::string>() : d.dump());
          c.pca_dims = parse_dims(join(parts, ","));
        }
      } catch (const Error& e) {
        Bad(e.what());
      }
    }
    if (p.contains("layers")) c.pca_layers = p.at("layers").get<std::vector<std::string>>();
  }
  if (j.contains("recognition")) {
    const json& r = j.at("recognition");
    if (r.contains("k")) c.knn_k = r.at("k").get<std::vector<int>>();
    if (r.contains("tasks")) {
      c.recognition_tasks.clear();
      for (const auto& t : r.at("tasks")) {
        try {
          c.recognition_tasks.push_back(parse_task(t.get<std::string>()));
        } catch (const Error& e) {
          Bad(e.what());
        }
      }
    }
  }
  if (j.contains("rriqa")) c.rriqa_per_kind = Get<bool>(j.at("rriqa"), "per_kind", true);
  return c;
}

}  // namespace

std::string RunConfig::to_json() const {
  json j;
  j["seed"] = seed;
  j["threads"] = threads;
  j["paths"] = {{"refs", refs_dir.generic_string()},
                {"manifest", manifest.generic_string()},
                {"dumps", dumps_dir.generic_string()},
                {"ladder", ladder.generic_string()},
                {"output", output_dir.generic_string()}};
  j["models"] = json::object();
  for (const auto& [net, path] : models) j["models"][std::string(to_string(net))] = path.generic_string();
  j["layers"] = json::object();
  for (const auto& [net, list] : layers) {
    j["layers"][std::string(to_string(net))] = list.empty() ? json("all") : json(list);
  }
  j["splits"] = {{"count", split.split_count}, {"train_fraction", split.train_fraction}};
  j["tasks"] = {{"distort", tasks.distort}, {"extract", tasks.extract},     {"dsi", tasks.dsi},
                {"pca_sweep", tasks.pca_sweep}, {"rriqa", tasks.rriqa}, {"recognize", tasks.recognize}};
  j["dsi"] = {{"subtract_reference", subtract_reference}};
  std::vector<std::string> dims;
  for (int d : pca_dims) dims.push_back(d == kFullDim ? "full" : std::to_string(d));
  j["pca"] = {{"dims", join(dims, ",")}, {"layers", pca_layers}};
  std::vector<std::string> task_names;
  for (auto t : recognition_tasks) task_names.emplace_back(to_string(t));
  j["recognition"] = {{"k", knn_k}, {"tasks", task_names}};
  j["rriqa"] = {{"per_kind", rriqa_per_kind}};
  return j.dump(2) + "\n";
}

std::string RunConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(to_json())));
  return buf;
}

void RunConfig::validate() const {
  if (!tasks.any()) Bad("no tasks selected");
  if (output_dir.empty()) Bad("paths.output is required");
  auto must_exist = [](const fs::path& p, const std::string& what) {
    if (p.empty()) Bad(what + " is required");
    if (!fs::exists(p)) Bad(what + " does not exist: " + p.string());
  };
  const bool analysis = tasks.dsi || tasks.pca_sweep || tasks.rriqa || tasks.recognize;
  const bool needs_manifest = tasks.extract || tasks.rriqa || tasks.recognize || subtract_reference;
  if (tasks.distort) {
    must_exist(refs_dir, "paths.refs");
    if (!ladder.empty()) must_exist(ladder, "paths.ladder");
  } else if (needs_manifest) {
    must_exist(manifest, "paths.manifest");
  }
  if (tasks.extract) {
    if (models.empty()) Bad("extract needs at least one entry under models");
    for (const auto& [net, path] : models) must_exist(path, "models." + std::string(to_string(net)));
  } else if (analysis) {
    must_exist(dumps_dir, "paths.dumps");
  }
  for (const auto& [net, list] : layers) {
    for (const auto& l : list) {
      try {
        find_tap(net, l);
      } catch (const Error& e) {
        Bad(e.what());
      }
    }
  }
  for (const auto& key : pca_layers) {
    const auto parts = deepsep::split(key, '/');
    if (parts.size() != 2) Bad("pca.layers entries must look like network/layer: " + key);
    try {
      find_tap(parts[0], parts[1]);
    } catch (const Error& e) {
      Bad(e.what());
    }
  }
  if (tasks.pca_sweep) {
    if (std::find(pca_dims.begin(), pca_dims.end(), 2) == pca_dims.end() ||
        std::find(pca_dims.begin(), pca_dims.end(), kFullDim) == pca_dims.end()) {
      Bad("pca.dims must include 2 and full");
    }
  }
  if (tasks.recognize) {
    if (knn_k.empty() || recognition_tasks.empty()) Bad("recognition needs k values and tasks");
    for (int k : knn_k) {
      if (k < 1) Bad("recognition k must be positive");
    }
  }
  if (split.split_count < 1) Bad("splits.count must be positive");
  if (!(split.train_fraction >= 0.0 && split.train_fraction <= 1.0)) {
    Bad("splits.train_fraction must be in [0, 1]");
  }
}

RunConfig parse_config_json(std::string_view text, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    Bad(std::string("JSON: ") + e.what());
  }
  return FromJson(j, base_dir);
}

RunConfig parse_config_toml(std::string_view text, const fs::path& base_dir) {
  return FromJson(TomlReader(text).Parse(), base_dir);
}

RunConfig load_config(const fs::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    Bad(e.what());
  }
  const fs::path base = path.parent_path();
  const std::string ext = to_lower(path.extension().string());
  if (ext == ".toml") return parse_config_toml(text, base);
  if (ext == ".json") return parse_config_json(text, base);
  const std::string head = trim(text);
  return head.starts_with("{") ? parse_config_json(text, base) : parse_config_toml(text, base);
}

}  // namespace deepsep
