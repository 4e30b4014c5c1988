// deepsep command-line front end.

#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "deepsep/distort.hpp"
#include "deepsep/error.hpp"
#include "deepsep/onnx_backend.hpp"
#include "deepsep/pca.hpp"
#include "deepsep/pipeline.hpp"
#include "deepsep/util.hpp"

namespace fs = std::filesystem;
using namespace deepsep;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string config;
};

std::vector<int> ParseIntList(const std::string& text) {
  std::vector<int> out;
  for (const auto& part : split(text, ',')) {
    const std::string t = trim(part);
    if (t.empty()) continue;
    try {
      out.push_back(std::stoi(t));
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "not an integer: '" + t + "'");
    }
  }
  return out;
}

Provenance FlagProvenance(const Globals& g, int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(join(args, "\x1f"))));
  return make_provenance(g.seed, buf);
}

int Fail(Stage stage, const std::exception& e) {
  std::cerr << "deepsep " << to_string(stage) << ": " << e.what() << "\n";
  return exit_code(stage);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distortion separability analysis of deep features"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(DEEPSEP_VERSION));
  Globals g;
  app.add_option("--seed", g.seed, "Master seed")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)")->capture_default_str();
  app.add_option("--config", g.config, "Run configuration (TOML or JSON)");
  app.fallthrough();

  // distort
  auto* distort = app.add_subcommand("distort", "Generate the 27-image distortion ladder per reference");
  fs::path refs_dir, distort_out, ladder_path;
  distort->add_option("--refs", refs_dir, "Directory of reference PNG/JPEG images")->required();
  distort->add_option("--out", distort_out, "Output directory")->required();
  distort->add_option("--ladder", ladder_path, "JSON ladder override");

  // extract
  auto* extract = app.add_subcommand("extract", "Pool deep features for every manifest image");
  std::string backend_name = "onnx", network_id, layer_spec;
  fs::path model_path, extract_manifest, extract_out;
  extract->add_option("--backend", backend_name, "Feature backend")->check(CLI::IsMember({"onnx"}));
  extract->add_option("--model", model_path, "ONNX graph with named tap outputs")->required();
  extract->add_option("--network", network_id, "Network id (alexnet, inceptionv3, resnet50, squeezenet11, vgg16)")
      ->required();
  extract->add_option("--layer", layer_spec, "Tap name, comma list, or 'all'")->required();
  extract->add_option("--manifest", extract_manifest, "Manifest CSV/JSON")->required();
  extract->add_option("--out", extract_out, "Dump file (single layer) or directory")->required();

  // dsi
  auto* dsi_cmd = app.add_subcommand("dsi", "Separability indices and DSI per dump");
  std::vector<fs::path> dsi_dirs;
  fs::path dsi_out, dsi_json, dsi_manifest;
  bool dsi_subtract = false;
  dsi_cmd->add_option("--dumps", dsi_dirs, "Dump directory; repeat for averaged repetitions")->required();
  dsi_cmd->add_option("--out", dsi_out, "Output CSV")->required();
  dsi_cmd->add_option("--json", dsi_json, "Also write the JSON form");
  dsi_cmd->add_flag("--subtract-reference", dsi_subtract, "Use distorted minus reference vectors");
  dsi_cmd->add_option("--manifest", dsi_manifest, "Manifest (needed with --subtract-reference)");

  // pca-sweep
  auto* pca_cmd = app.add_subcommand("pca-sweep", "DSI of one dump at several PCA dimensions");
  fs::path pca_dump, pca_out, pca_manifest;
  std::string pca_dims = "1,2,4,8,16,32,64,full";
  bool pca_subtract = false;
  pca_cmd->add_option("--dump", pca_dump, "Feature dump")->required();
  pca_cmd->add_option("--dims", pca_dims, "Comma list; must include 2 and full")->capture_default_str();
  pca_cmd->add_option("--out", pca_out, "Output CSV")->required();
  pca_cmd->add_flag("--subtract-reference", pca_subtract, "Use distorted minus reference vectors");
  pca_cmd->add_option("--manifest", pca_manifest, "Manifest (needed with --subtract-reference)");

  // rriqa
  auto* rriqa_cmd = app.add_subcommand("rriqa", "Reduced-reference quality correlation over splits");
  fs::path rr_dump, rr_manifest, rr_out, rr_json;
  int rr_splits = 100;
  double rr_fraction = 0.8;
  std::string rr_kind;
  rriqa_cmd->add_option("--dump", rr_dump, "Feature dump")->required();
  rriqa_cmd->add_option("--manifest", rr_manifest, "Manifest with scores")->required();
  rriqa_cmd->add_option("--splits", rr_splits, "Number of random splits")->capture_default_str();
  rriqa_cmd->add_option("--train-fraction", rr_fraction, "Share of references on the train side")
      ->capture_default_str();
  rriqa_cmd->add_option("--kind", rr_kind, "Restrict to one distortion kind");
  rriqa_cmd->add_option("--out", rr_out, "Output CSV (stdout when omitted)");
  rriqa_cmd->add_option("--json", rr_json, "Also write the JSON form");

  // recognize
  auto* rec_cmd = app.add_subcommand("recognize", "k-NN distortion recognition over splits");
  fs::path rec_dump, rec_manifest, rec_out, rec_confusion;
  std::string rec_task = "type", rec_k = "3,9";
  int rec_splits = 100;
  double rec_fraction = 0.8;
  rec_cmd->add_option("--dump", rec_dump, "Feature dump")->required();
  rec_cmd->add_option("--manifest", rec_manifest, "Manifest")->required();
  rec_cmd->add_option("--task", rec_task, "type or type-severity")->capture_default_str();
  rec_cmd->add_option("--k", rec_k, "Comma list of k values")->capture_default_str();
  rec_cmd->add_option("--splits", rec_splits, "Number of random splits")->capture_default_str();
  rec_cmd->add_option("--train-fraction", rec_fraction, "Share of references on the train side")
      ->capture_default_str();
  rec_cmd->add_option("--out", rec_out, "Accuracy CSV (stdout when omitted)");
  rec_cmd->add_option("--confusion-dir", rec_confusion, "Directory for mean confusion matrices");

  // pipeline
  auto* pipe_cmd = app.add_subcommand("pipeline", "Run the configured stages end to end");

  // report
  auto* report_cmd = app.add_subcommand("report", "Markdown summary of result files");
  std::vector<fs::path> report_in;
  fs::path report_out;
  report_cmd->add_option("--in", report_in, "Result files or directories")->required();
  report_cmd->add_option("--out", report_out, "Markdown file")->required();

  CLI11_PARSE(app, argc, argv);
  const Provenance prov = FlagProvenance(g, argc, argv);

  if (distort->parsed()) {
    try {
      DistortionLadder ladder =
          ladder_path.empty() ? DistortionLadder::defaults() : DistortionLadder::from_json(read_file(ladder_path));
      ladder.validate();
      const auto refs = load_references(refs_dir);
      if (refs.empty()) throw Error(ErrorCode::MissingInput, "no reference images in " + refs_dir.string());
      const Manifest m = generate_corpus(refs, ladder, g.seed, distort_out, g.threads);
      std::cout << "wrote " << m.size() << " manifest rows to " << (distort_out / "manifest.csv").string() << "\n";
      return 0;
    } catch (const std::exception& e) {
      return Fail(Stage::Distort, e);
    }
  }

  if (extract->parsed()) {
    try {
      const auto net = parse_network(network_id);
      if (!net) throw Error(ErrorCode::InvalidArgument, "unknown network '" + network_id + "'");
      std::vector<LayerTap> taps;
      if (to_lower(layer_spec) == "all") {
        taps = taps_for(*net);
      } else {
        for (const auto& l : split(layer_spec, ',')) taps.push_back(find_tap(*net, trim(l)));
      }
      const Manifest manifest = load_manifest(extract_manifest);
      const OnnxBackend backend(model_path, *net);
      const auto pooled = extract_pooled(backend, manifest, taps, g.threads);
      const bool single_file = taps.size() == 1 && extract_out.extension() == ".dfeat";
      if (!single_file) fs::create_directories(extract_out);
      for (std::size_t t = 0; t < taps.size(); ++t) {
        const FeatureDump dump{taps[t], backend.preprocessing(), pooled[t]};
        const fs::path p = single_file ? extract_out : extract_out / dump_file_name(taps[t]);
        write_dump(dump, p);
        std::cout << "wrote " << p.string() << "\n";
      }
      return 0;
    } catch (const std::exception& e) {
      return Fail(Stage::Extract, e);
    }
  }

  if (dsi_cmd->parsed()) {
    try {
      std::optional<Manifest> manifest;
      if (dsi_subtract) {
        if (dsi_manifest.empty()) throw Error(ErrorCode::InvalidArgument, "--subtract-reference needs --manifest");
        manifest = load_manifest(dsi_manifest);
      }
      std::vector<DsiTable> tables;
      for (const auto& dir : dsi_dirs) {
        auto dumps = load_dumps(dir);
        if (manifest) {
          for (auto& d : dumps) d = subtract_reference_dump(d, *manifest);
        }
        tables.push_back(build_dsi_table(raw_indices_for_dumps(dumps)));
      }
      const DsiTable table = tables.size() == 1 ? tables.front() : dsi_repeat_mean(tables);
      write_csv_report(dsi_out, dsi_table_to_csv(table), prov);
      if (!dsi_json.empty()) write_json_report(dsi_json, dsi_table_to_json(table), prov);
      return 0;
    } catch (const std::exception& e) {
      return Fail(Stage::Dsi, e);
    }
  }

  if (pca_cmd->parsed()) {
    try {
      FeatureDump dump = read_dump(pca_dump);
      if (pca_subtract) {
        if (pca_manifest.empty()) throw Error(ErrorCode::InvalidArgument, "--subtract-reference needs --manifest");
        dump = subtract_reference_dump(dump, load_manifest(pca_manifest));
      }
      const auto rows = pca_sweep(cluster_by_kind(dump.records), parse_dims(pca_dims));
      write_csv_report(pca_out, pca_sweep_to_csv(rows), prov);
      return 0;
    } catch (const std::exception& e) {
      return Fail(Stage::PcaSweep, e);
    }
  }

  if (rriqa_cmd->parsed()) {
    try {
      const FeatureDump dump = read_dump(rr_dump);
      const Manifest manifest = load_manifest(rr_manifest);
      const SplitPlan plan{rr_splits, rr_fraction, g.seed};
      CorrelationReport report;
      report.entries.push_back(evaluate_rriqa(
          dump, manifest, plan, rr_kind.empty() ? std::nullopt : std::optional<std::string>(rr_kind), g.threads));
      const std::string csv = correlation_report_to_csv(report);
      if (rr_out.empty()) {
        std::cout << csv;
      } else {
        write_csv_report(rr_out, csv, prov);
      }
      if (!rr_json.empty()) write_json_report(rr_json, correlation_report_to_json(report), prov);
      return 0;
    } catch (const std::exception& e) {
      return Fail(Stage::Rriqa, e);
    }
  }

  if (rec_cmd->parsed()) {
    try {
      const FeatureDump dump = read_dump(rec_dump);
      const Manifest manifest = load_manifest(rec_manifest);
      const SplitPlan plan{rec_splits, rec_fraction, g.seed};
      const RecognitionTask task = parse_task(rec_task);
      std::vector<RecognitionResult> results;
      for (int k : ParseIntList(rec_k)) {
        results.push_back(evaluate_recognition(dump, manifest, task, k, plan, g.threads));
        if (!rec_confusion.empty()) {
          fs::create_directories(rec_confusion);
          const auto& r = results.back();
          write_csv_report(rec_confusion / (r.network + "_" + r.layer + "_" + std::string(to_string(task)) + "_k" +
                                            std::to_string(k) + ".csv"),
                           confusion_to_csv(r.mean_confusion.row_normalized()), prov);
        }
      }
      const std::string csv = recognition_results_to_csv(results);
      if (rec_out.empty()) {
        std::cout << csv;
      } else {
        write_csv_report(rec_out, csv, prov);
      }
      return 0;
    } catch (const std::exception& e) {
      return Fail(Stage::Recognize, e);
    }
  }

  if (pipe_cmd->parsed()) {
    RunConfig config;
    try {
      if (g.config.empty()) throw Error(ErrorCode::ConfigError, "pipeline needs --config");
      config = load_config(g.config);
      if (app.count("--seed")) {
        config.seed = g.seed;
        config.split.master_seed = g.seed;
      }
      if (app.count("--threads")) config.threads = g.threads;
    } catch (const std::exception& e) {
      return Fail(Stage::Config, e);
    }
    try {
      const auto result = cmd_pipeline(config);
      for (const auto& p : result.outputs) std::cout << "wrote " << p.string() << "\n";
      return 0;
    } catch (const StageError& e) {
      std::cerr << "deepsep pipeline: " << e.what() << "\n";
      return e.exit_code();
    } catch (const std::exception& e) {
      return Fail(Stage::Config, e);
    }
  }

  if (report_cmd->parsed()) {
    try {
      cmd_report(report_in, report_out, prov);
      return 0;
    } catch (const std::exception& e) {
      return Fail(Stage::Report, e);
    }
  }
  return 1;
}
