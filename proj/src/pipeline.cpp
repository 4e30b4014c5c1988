#include "deepsep/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <set>

#include "deepsep/distort.hpp"
#include "deepsep/error.hpp"
#include "deepsep/onnx_backend.hpp"
#include "deepsep/pca.hpp"
#include "deepsep/util.hpp"
#include "json.hpp"

namespace deepsep {

namespace {

std::string Hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

template <typename Fn>
auto RunStage(Stage stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

std::string KeyOf(const LayerTap& tap) { return std::string(to_string(tap.network)) + "/" + tap.layer; }

std::string CacheKey(const fs::path& model, const Manifest& manifest, const LayerTap& tap,
                     const Preprocessing& pre) {
  std::uint64_t h = fnv1a64(read_file(model));
  h = fnv1a64(manifest_to_csv(manifest), h);
  for (const auto& row : manifest.rows()) h = fnv1a64(read_file(manifest.resolve_path(row)), h);
  std::string meta = KeyOf(tap);
  for (int c = 0; c < 3; ++c) {
    meta += "|" + format_double(pre.mean[static_cast<std::size_t>(c)]) + "," +
            format_double(pre.std[static_cast<std::size_t>(c)]);
  }
  h = fnv1a64(meta, h);
  return Hex(h);
}

std::vector<LayerTap> SelectedTaps(const RunConfig& config, Network net) {
  const auto it = config.layers.find(net);
  if (it == config.layers.end() || it->second.empty()) return taps_for(net);
  std::vector<LayerTap> taps;
  for (const auto& layer : it->second) taps.push_back(find_tap(net, layer));
  return taps;
}

}  // namespace

// ---- provenance -------------------------------------------------------------------

std::vector<std::string> Provenance::lines() const {
  return {"deepsep " + tool_version, "seed " + std::to_string(seed), "config_hash " + config_hash};
}

Provenance make_provenance(std::uint64_t seed, std::string config_hash) {
  return {DEEPSEP_VERSION, seed, std::move(config_hash)};
}

void write_csv_report(const fs::path& path, std::string_view csv, const Provenance& p) {
  std::string out;
  for (const auto& line : p.lines()) out += "# " + line + "\n";
  out += csv;
  write_file_atomic(path, out);
}

void write_json_report(const fs::path& path, std::string_view json, const Provenance& p) {
  auto body = nlohmann::ordered_json::parse(json);
  nlohmann::ordered_json prov = {
      {"tool_version", p.tool_version}, {"seed", p.seed}, {"config_hash", p.config_hash}};
  nlohmann::ordered_json out;
  if (body.is_object()) {
    out["provenance"] = prov;
    for (auto& [k, v] : body.items()) out[k] = v;
  } else {
    out = {{"provenance", prov}, {"data", body}};
  }
  write_file_atomic(path, out.dump(2) + "\n");
}

void write_markdown_report(const fs::path& path, std::string_view markdown, const Provenance& p) {
  std::string out = "<!--\n";
  for (const auto& line : p.lines()) out += line + "\n";
  out += "-->\n";
  out += markdown;
  write_file_atomic(path, out);
}

// ---- stages -----------------------------------------------------------------------

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::Config: return "config";
    case Stage::Distort: return "distort";
    case Stage::Extract: return "extract";
    case Stage::Dsi: return "dsi";
    case Stage::PcaSweep: return "pca-sweep";
    case Stage::Rriqa: return "rriqa";
    case Stage::Recognize: return "recognize";
    case Stage::Report: return "report";
  }
  return "unknown";
}

int exit_code(Stage stage) { return 2 + static_cast<int>(stage); }

std::string dump_file_name(const LayerTap& tap) {
  return std::string(to_string(tap.network)) + "_" + tap.layer + ".dfeat";
}

std::vector<FeatureDump> load_dumps(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::MissingInput, "not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".dfeat") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorCode::MissingInput, "no .dfeat files in " + dir.string());
  std::vector<FeatureDump> dumps;
  for (const auto& f : files) dumps.push_back(read_dump(f));
  return dumps;
}

FeatureDump subtract_reference_dump(const FeatureDump& dump, const Manifest& manifest) {
  const DumpVectorSource source(dump);
  FeatureDump out;
  out.tap = dump.tap;
  out.preprocessing = dump.preprocessing;
  for (const auto& rec : dump.records) {
    const ManifestRow* row = manifest.find(rec.image_id);
    if (row == nullptr) {
      throw Error(ErrorCode::MissingVector, "dump record '" + rec.image_id + "' is not in the manifest");
    }
    if (row->is_reference()) continue;
    out.records.push_back(subtract_reference(rec, source.get(row->reference_id)));
  }
  return out;
}

std::vector<RawIndexEntry> raw_indices_for_dumps(const std::vector<FeatureDump>& dumps) {
  std::vector<RawIndexEntry> entries;
  for (const auto& d : dumps) {
    const ClusteredSet set = cluster_by_kind(d.records);
    entries.push_back({{std::string(to_string(d.tap.network)), d.tap.layer}, compute_indices(set)});
  }
  return entries;
}

PipelineResult cmd_pipeline(const RunConfig& config) {
  RunStage(Stage::Config, [&] { config.validate(); });
  const Provenance prov = make_provenance(config.seed, config.hash());
  const fs::path out = config.output_dir;
  PipelineResult result;
  auto note = [&](const fs::path& p) { result.outputs.push_back(p); };

  RunStage(Stage::Config, [&] {
    fs::create_directories(out);
    write_file_atomic(out / "config.json", config.to_json());
  });

  // distort
  Manifest manifest;
  bool have_manifest = false;
  if (config.tasks.distort) {
    manifest = RunStage(Stage::Distort, [&] {
      DistortionLadder ladder = config.ladder.empty() ? DistortionLadder::defaults()
                                                      : DistortionLadder::from_json(read_file(config.ladder));
      ladder.validate();
      const auto refs = load_references(config.refs_dir);
      if (refs.empty()) throw Error(ErrorCode::MissingInput, "no reference images in " + config.refs_dir.string());
      const fs::path corpus = out / "corpus";
      Manifest m = generate_corpus(refs, ladder, config.seed, corpus, config.threads);
      write_csv_report(corpus / "manifest.csv", manifest_to_csv(m), prov);
      note(corpus / "manifest.csv");
      return Manifest(m.rows(), corpus);
    });
    have_manifest = true;
  } else if (!config.manifest.empty()) {
    manifest = RunStage(Stage::Config, [&] { return load_manifest(config.manifest); });
    have_manifest = true;
  }

  // extract
  std::vector<FeatureDump> dumps;
  if (config.tasks.extract) {
    dumps = RunStage(Stage::Extract, [&] {
      std::vector<FeatureDump> made;
      const fs::path dump_dir = out / "dumps";
      fs::create_directories(dump_dir);
      const char* cache_env = std::getenv("DEEPSEP_CACHE_DIR");
      const fs::path cache = cache_env && *cache_env ? fs::path(cache_env) : fs::path();
      for (const auto& [net, model] : config.models) {
        const auto taps = SelectedTaps(config, net);
        const OnnxBackend backend(model, net);
        std::vector<std::string> keys;
        bool all_cached = !cache.empty();
        if (!cache.empty()) {
          for (const auto& t : taps) {
            keys.push_back(CacheKey(model, manifest, t, backend.preprocessing()));
            all_cached = all_cached && fs::exists(cache / (keys.back() + ".dfeat"));
          }
        }
        std::vector<FeatureDump> net_dumps;
        if (all_cached) {
          for (const auto& k : keys) net_dumps.push_back(read_dump(cache / (k + ".dfeat")));
        } else {
          const auto pooled = extract_pooled(backend, manifest, taps, config.threads);
          for (std::size_t t = 0; t < taps.size(); ++t) {
            net_dumps.push_back({taps[t], backend.preprocessing(), pooled[t]});
          }
          if (!cache.empty()) {
            fs::create_directories(cache);
            for (std::size_t t = 0; t < taps.size(); ++t) write_dump(net_dumps[t], cache / (keys[t] + ".dfeat"));
          }
        }
        for (auto& d : net_dumps) {
          const fs::path p = dump_dir / dump_file_name(d.tap);
          write_dump(d, p);
          note(p);
          made.push_back(std::move(d));
        }
      }
      return made;
    });
  } else if (config.tasks.dsi || config.tasks.pca_sweep || config.tasks.rriqa || config.tasks.recognize) {
    dumps = RunStage(Stage::Extract, [&] { return load_dumps(config.dumps_dir); });
  }

  // dsi
  DsiTable table;
  bool have_table = false;
  if (config.tasks.dsi) {
    table = RunStage(Stage::Dsi, [&] {
      std::vector<FeatureDump> used;
      for (const auto& d : dumps) {
        used.push_back(config.subtract_reference ? subtract_reference_dump(d, manifest) : d);
      }
      const auto entries = raw_indices_for_dumps(used);
      DsiTable t = build_dsi_table(entries);
      write_csv_report(out / "dsi_table.csv", dsi_table_to_csv(t), prov);
      write_json_report(out / "dsi_table.json", dsi_table_to_json(t), prov);
      note(out / "dsi_table.csv");
      note(out / "dsi_table.json");
      return t;
    });
    have_table = true;
  }

  // pca sweep
  if (config.tasks.pca_sweep) {
    RunStage(Stage::PcaSweep, [&] {
      std::vector<std::string> targets = config.pca_layers;
      if (targets.empty()) {
        if (!have_table) {
          throw Error(ErrorCode::ConfigError, "pca.layers is empty and no DSI table was computed");
        }
        for (const auto& r : best_layer_per_network(table)) targets.push_back(r.key.network + "/" + r.key.layer);
      }
      for (const auto& target : targets) {
        const FeatureDump* dump = nullptr;
        for (const auto& d : dumps) {
          if (KeyOf(d.tap) == target) dump = &d;
        }
        if (dump == nullptr) throw Error(ErrorCode::MissingInput, "no dump for " + target);
        const FeatureDump src = config.subtract_reference ? subtract_reference_dump(*dump, manifest) : *dump;
        const ClusteredSet set = cluster_by_kind(src.records);
        const int full = static_cast<int>(std::min(set.size(), set.dim()));
        std::vector<int> dims;
        for (int d : config.pca_dims) {
          if (d == kFullDim || d <= full) dims.push_back(d);
        }
        const auto rows = pca_sweep(set, dims);
        const fs::path p = out / ("pca_" + std::string(to_string(dump->tap.network)) + "_" + dump->tap.layer + ".csv");
        write_csv_report(p, pca_sweep_to_csv(rows), prov);
        note(p);
      }
    });
  }

  // rriqa
  if (config.tasks.rriqa) {
    RunStage(Stage::Rriqa, [&] {
      if (!have_manifest) throw Error(ErrorCode::MissingInput, "RR-IQA needs a manifest");
      std::set<std::string> kinds;
      for (const auto* row : manifest.distorted()) kinds.insert(row->kind_label());
      CorrelationReport report;
      for (const auto& d : dumps) {
        report.entries.push_back(evaluate_rriqa(d, manifest, config.split, std::nullopt, config.threads));
        if (config.rriqa_per_kind) {
          for (const auto& k : kinds) {
            report.entries.push_back(evaluate_rriqa(d, manifest, config.split, k, config.threads));
          }
        }
      }
      write_csv_report(out / "rriqa.csv", correlation_report_to_csv(report), prov);
      write_json_report(out / "rriqa.json", correlation_report_to_json(report), prov);
      note(out / "rriqa.csv");
      note(out / "rriqa.json");
    });
  }

  // recognize
  if (config.tasks.recognize) {
    RunStage(Stage::Recognize, [&] {
      if (!have_manifest) throw Error(ErrorCode::MissingInput, "recognition needs a manifest");
      std::vector<RecognitionResult> results;
      const fs::path cm_dir = out / "confusion";
      fs::create_directories(cm_dir);
      for (const auto& d : dumps) {
        for (auto task : config.recognition_tasks) {
          for (int k : config.knn_k) {
            RecognitionResult r = evaluate_recognition(d, manifest, task, k, config.split, config.threads);
            const fs::path p = cm_dir / (r.network + "_" + r.layer + "_" + std::string(to_string(task)) +
                                         "_k" + std::to_string(k) + ".csv");
            write_csv_report(p, confusion_to_csv(r.mean_confusion.row_normalized()), prov);
            note(p);
            results.push_back(std::move(r));
          }
        }
      }
      write_csv_report(out / "recognition.csv", recognition_results_to_csv(results), prov);
      note(out / "recognition.csv");
    });
  }

  if (!(config.tasks.dsi || config.tasks.rriqa || config.tasks.recognize)) return result;
  RunStage(Stage::Report, [&] {
    const fs::path p = out / "report.md";
    write_markdown_report(p, render_report({out}), prov);
    note(p);
  });
  return result;
}

}  // namespace deepsep
