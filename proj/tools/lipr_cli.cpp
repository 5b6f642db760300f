// lipr command-line harness: synthetic data generation, vocabulary training,
// detection, and evaluation.
#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "lipr/lipr.hpp"

namespace fs = std::filesystem;
using namespace lipr;

namespace {

struct SynthArgs {
  std::string scene = "figure8";
  std::string out_dir;
  int scans = 200;
  int laps = 2;
  std::uint64_t seed = 1;
  int width = 1024;
  int height = 128;
  double vfov = 45.0;
};

int run_synth(const SynthArgs& args) {
  SceneSpec scene;
  std::vector<TrajectorySample> traj;
  if (args.scene == "figure8") {
    scene = make_figure_eight_scene(args.seed);
    traj = sample_trajectory(figure_eight_path(), args.scans, args.laps, 1.0, args.seed);
  } else if (args.scene == "corridor") {
    scene = make_corridor_scene(args.seed);
    traj = corridor_out_and_back(30.0, args.scans, 1.0, args.seed);
  } else if (args.scene == "room") {
    scene = make_room_scene(args.seed);
    PathSampler path;
    path.waypoints = {{-1.0, -1.0}, {1.0, -1.0}, {1.0, 1.0}, {-1.0, 1.0}, {-1.0, -1.0}};
    path.z = 1.2;
    traj = sample_trajectory(path, args.scans, args.laps, 0.25, args.seed);
  } else {
    std::cerr << "unknown scene '" << args.scene << "' (figure8|corridor|room)\n";
    return 1;
  }

  fs::create_directories(args.out_dir);
  SequenceManifest manifest;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    Scan scan = synth_scene(scene, traj[i].pose, args.width, args.height, args.vfov);
    scan.id = static_cast<int>(i);
    scan.timestamp = traj[i].timestamp;
    char name[32];
    std::snprintf(name, sizeof(name), "%05zu.bin", i);
    write_scan_flat_binary(scan, (fs::path(args.out_dir) / name).string());
    manifest.entries.push_back({name, traj[i].timestamp, traj[i].pose});
  }
  const std::string mpath = (fs::path(args.out_dir) / "manifest.csv").string();
  write_manifest(manifest, mpath);

  // matching detector config for convenience
  std::ofstream cfg((fs::path(args.out_dir) / "synth.cfg").string());
  cfg << "width = " << args.width << "\nheight = " << args.height
      << "\nvfov_deg = " << args.vfov << "\n";

  std::cout << "wrote " << traj.size() << " scans + manifest to " << args.out_dir << "\n";
  return 0;
}

struct TrainArgs {
  std::string corpus_dir;
  std::string out_path;
  std::string config_path;
  int k = 10;
  int L = 6;
  std::uint64_t seed = 777;
};

int run_train_vocab(const TrainArgs& args) {
  Config cfg;
  if (!args.config_path.empty()) cfg = load_config(args.config_path);
  const BriefPattern pattern = BriefPattern::generate(cfg.brief_seed);

  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(args.corpus_dir)) {
    if (!entry.is_regular_file()) continue;
    if (entry.path().filename() == "manifest.csv") continue;
    const std::string ext = entry.path().extension().string();
    if (ext == ".bin" || ext == ".csv" || ext == ".pcd") files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    std::cerr << "no scan files (.bin/.csv/.pcd) in " << args.corpus_dir << "\n";
    return 1;
  }

  ExtractParams ep;
  ep.n_bow = cfg.n_bow;
  ep.fast_threshold = cfg.fast_threshold;
  ep.pyramid_levels = cfg.pyramid_levels;
  ep.pyramid_ratio = cfg.pyramid_ratio;

  std::vector<std::vector<Descriptor256>> docs;
  std::size_t total = 0;
  for (const std::string& file : files) {
    const Scan scan = load_scan(file, format_from_extension(file));
    if (scan.empty()) continue;
    const IntensityImage img = project(scan, cfg.width, cfg.height, cfg.vfov_deg);
    const FeatureSet fset = extract(img, pattern, ep);
    std::vector<Descriptor256> doc;
    doc.reserve(fset.size());
    for (const Feature& f : fset.features) doc.push_back(f.descriptor);
    total += doc.size();
    docs.push_back(std::move(doc));
  }
  std::cout << "training on " << total << " descriptors from " << docs.size() << " scans\n";

  const Vocabulary voc = train_vocabulary(docs, static_cast<std::uint32_t>(args.k),
                                          static_cast<std::uint32_t>(args.L), args.seed,
                                          pattern.seed);
  save_vocabulary(voc, args.out_path);
  std::cout << "vocabulary: " << voc.num_words << " words (k=" << args.k << ", L=" << args.L
            << ") -> " << args.out_path << "\n";
  return 0;
}

struct DetectArgs {
  std::string manifest_path;
  std::string config_path;
  std::string out_path;
  std::string records_path;
  std::string vocab_path;
  int rows = 0;  // 0 = native height
  bool omit_timings = false;
};

int run_detect(const DetectArgs& args) {
  Config cfg;
  if (!args.config_path.empty()) cfg = load_config(args.config_path);
  if (!args.vocab_path.empty()) cfg.vocab_path = args.vocab_path;
  if (cfg.vocab_path.empty()) {
    std::cerr << "detect needs a vocabulary (config vocab_path or --vocab)\n";
    return 1;
  }
  const Vocabulary voc = load_vocabulary(cfg.vocab_path);
  if (voc.pattern_seed != cfg.brief_seed) {
    std::cerr << "vocabulary BRIEF seed " << voc.pattern_seed
              << " does not match config brief_seed " << cfg.brief_seed << "\n";
    return 1;
  }

  const SequenceManifest manifest = load_manifest(args.manifest_path);
  PlaceRecognizer rec(cfg, voc, args.rows);

  std::vector<Detection> detections;
  std::vector<RocRecord> records;
  double time_sum = 0.0;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    if (i > 0 && manifest.entries[i].timestamp <= manifest.entries[i - 1].timestamp) {
      std::cerr << args.manifest_path << ": timestamps not strictly increasing at row " << i + 1
                << "\n";
      return 1;
    }
    const std::string path = resolve_scan_path(manifest, manifest.entries[i]);
    Scan scan = load_scan(path, format_from_extension(path));
    scan.id = static_cast<int>(i);
    scan.timestamp = manifest.entries[i].timestamp;
    if (auto det = rec.process_scan(scan)) detections.push_back(*det);
    const ScanRecord& r = rec.last_record();
    records.push_back({r.scan_id, r.candidate_id, r.inliers,
                       r.candidate_id >= 0 ? r.bow_score : -1.0});
    time_sum += r.timings.total_ms();
  }

  std::ofstream out(args.out_path);
  if (!out) {
    std::cerr << "cannot write " << args.out_path << "\n";
    return 1;
  }
  out << detections_to_csv(detections, !args.omit_timings);
  if (!args.records_path.empty()) {
    std::ofstream rout(args.records_path);
    rout << records_to_csv(records);
  }
  std::cout << detections.size() << " detections over " << manifest.entries.size()
            << " scans, mean "
            << (manifest.entries.empty() ? 0.0 : time_sum / manifest.entries.size())
            << " ms/query -> " << args.out_path << "\n";
  return 0;
}

std::map<int, Eigen::Vector3d> manifest_positions(const SequenceManifest& m) {
  std::map<int, Eigen::Vector3d> positions;
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    if (!m.entries[i].pose)
      throw std::runtime_error("manifest row " + std::to_string(i + 1) +
                               " lacks a ground-truth pose");
    positions[static_cast<int>(i)] = m.entries[i].pose->t;
  }
  return positions;
}

std::vector<TrajectoryPoint> manifest_trajectory(const SequenceManifest& m) {
  std::vector<TrajectoryPoint> traj;
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    if (!m.entries[i].pose)
      throw std::runtime_error("manifest row " + std::to_string(i + 1) +
                               " lacks a ground-truth pose");
    traj.push_back({static_cast<int>(i), m.entries[i].timestamp, m.entries[i].pose->t});
  }
  return traj;
}

struct EvalArgs {
  std::string det_path;
  std::string manifest_path;
  double gt_radius = 2.0;
  double min_gap = 30.0;
};

int run_eval(const EvalArgs& args) {
  std::ifstream din(args.det_path);
  if (!din) {
    std::cerr << "cannot open " << args.det_path << "\n";
    return 1;
  }
  const std::vector<Detection> detections = parse_detections_csv(din, args.det_path);
  const SequenceManifest manifest = load_manifest(args.manifest_path);
  const auto positions = manifest_positions(manifest);
  const auto traj = manifest_trajectory(manifest);

  EvalReport rep = classify(detections, positions, args.gt_radius);
  double time_sum = 0.0;
  for (const Detection& d : detections) time_sum += d.timings.total_ms();
  rep.mean_time_ms = detections.empty() ? 0.0 : time_sum / detections.size();

  const GroundTruth gt = ground_truth(traj, args.gt_radius, args.min_gap);
  std::cout << "ground truth: " << gt.pairs.size() << " loop pairs ("
            << gt.positive_queries.size() << " positive queries, radius " << args.gt_radius
            << " m, gap > " << args.min_gap << " s)\n";
  std::cout << format_report("ours", rep);
  if (rep.mean_time_ms > 0.0)
    std::cout << "(time column is the mean over detection rows that carry timings)\n";
  return 0;
}

struct RocArgs {
  std::string records_path;
  std::string manifest_path;
  std::string out_path;
  double gt_radius = 2.0;
  double min_gap = 30.0;
  bool sweep_bow = false;
};

int run_roc(const RocArgs& args) {
  std::ifstream rin(args.records_path);
  if (!rin) {
    std::cerr << "cannot open " << args.records_path << "\n";
    return 1;
  }
  const std::vector<RocRecord> records = parse_records_csv(rin, args.records_path);
  const SequenceManifest manifest = load_manifest(args.manifest_path);
  const GroundTruth gt = ground_truth(manifest_trajectory(manifest), args.gt_radius,
                                      args.min_gap);
  const std::vector<double> sweep =
      args.sweep_bow ? bow_roc_sweep(records) : default_roc_sweep(records);
  const RocCurve curve = roc(records, gt, sweep, args.sweep_bow);
  if (!args.out_path.empty()) {
    std::ofstream out(args.out_path);
    out << roc_to_csv(curve);
  }
  std::cout << "queries: " << curve.positives << " positive, " << curve.negatives
            << " negative (sweep: " << (args.sweep_bow ? "bow score" : "inlier count") << ")\n";
  if (curve.auc)
    std::cout << "AUC: " << *curve.auc << "\n";
  else
    std::cout << "AUC: undefined (no positive or no negative queries)\n";
  return 0;
}

struct ResolutionArgs {
  std::string manifest_path;
  std::string config_path;
  std::string vocab_path;
  std::string out_path;
  std::vector<int> rows = {128, 64, 32, 16};
  double gt_radius = 2.0;
};

int run_resolution(const ResolutionArgs& args) {
  Config cfg;
  if (!args.config_path.empty()) cfg = load_config(args.config_path);
  if (!args.vocab_path.empty()) cfg.vocab_path = args.vocab_path;
  if (cfg.vocab_path.empty()) {
    std::cerr << "resolution needs a vocabulary (config vocab_path or --vocab)\n";
    return 1;
  }
  const Vocabulary voc = load_vocabulary(cfg.vocab_path);

  const SequenceManifest manifest = load_manifest(args.manifest_path);
  const auto positions = manifest_positions(manifest);
  auto sequence = load_sequence(manifest);
  std::vector<Scan> scans;
  scans.reserve(sequence.size());
  for (auto& [scan, pose] : sequence) scans.push_back(std::move(scan));

  const auto table = resolution_study(scans, positions, voc, cfg, args.rows, args.gt_radius);
  std::string csv = "rows,detected,tp,fp,mean_time_ms,mean_features\n";
  for (const ResolutionRow& row : table) {
    std::cout << format_report(std::to_string(row.rows) + " rows", row.report);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%d,%d,%d,%d,%.3f,%.1f\n", row.rows, row.report.detected,
                  row.report.true_positives, row.report.false_positives, row.mean_time_ms,
                  row.mean_features);
    csv += buf;
  }
  if (!args.out_path.empty()) {
    std::ofstream out(args.out_path);
    out << csv;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lidar intensity-image place recognition"};
  app.require_subcommand(1);

  SynthArgs synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic scan sequence");
  synth_cmd->add_option("--scene", synth.scene, "figure8|corridor|room");
  synth_cmd->add_option("--scans", synth.scans, "number of scans");
  synth_cmd->add_option("--laps", synth.laps, "trajectory laps");
  synth_cmd->add_option("--seed", synth.seed, "scene/trajectory seed");
  synth_cmd->add_option("--width", synth.width, "azimuth bins");
  synth_cmd->add_option("--height", synth.height, "elevation bins");
  synth_cmd->add_option("--vfov", synth.vfov, "vertical FOV, degrees");
  synth_cmd->add_option("--out-dir", synth.out_dir, "output directory")->required();

  TrainArgs train;
  CLI::App* train_cmd = app.add_subcommand("train-vocab", "train a vocabulary from scans");
  train_cmd->add_option("--corpus", train.corpus_dir, "directory of scan files")->required();
  train_cmd->add_option("--k", train.k, "branching factor");
  train_cmd->add_option("--L", train.L, "tree depth");
  train_cmd->add_option("--seed", train.seed, "clustering seed");
  train_cmd->add_option("--config", train.config_path, "detector config (projection/extraction)");
  train_cmd->add_option("--out", train.out_path, "output vocabulary file")->required();

  DetectArgs detect;
  CLI::App* detect_cmd = app.add_subcommand("detect", "run the detector over a sequence");
  detect_cmd->add_option("--manifest", detect.manifest_path, "sequence manifest")->required();
  detect_cmd->add_option("--config", detect.config_path, "detector config");
  detect_cmd->add_option("--vocab", detect.vocab_path, "vocabulary file (overrides config)");
  detect_cmd->add_option("--rows", detect.rows, "row-downsample images to this height");
  detect_cmd->add_option("--records", detect.records_path, "per-query records CSV");
  detect_cmd->add_flag("--omit-timings", detect.omit_timings,
                       "write the deterministic columns only");
  detect_cmd->add_option("--out", detect.out_path, "detections CSV")->required();

  EvalArgs eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "classify detections against ground truth");
  eval_cmd->add_option("--det", eval.det_path, "detections CSV")->required();
  eval_cmd->add_option("--manifest", eval.manifest_path, "manifest with poses")->required();
  eval_cmd->add_option("--gt-radius", eval.gt_radius, "true-positive radius, meters");
  eval_cmd->add_option("--min-gap", eval.min_gap, "minimum loop time gap, seconds");

  RocArgs roc_args;
  CLI::App* roc_cmd = app.add_subcommand("roc", "ROC/AUC from per-query records");
  roc_cmd->add_option("--records", roc_args.records_path, "records CSV from detect")->required();
  roc_cmd->add_option("--manifest", roc_args.manifest_path, "manifest with poses")->required();
  roc_cmd->add_option("--gt-radius", roc_args.gt_radius, "true-positive radius, meters");
  roc_cmd->add_option("--min-gap", roc_args.min_gap, "minimum loop time gap, seconds");
  roc_cmd->add_flag("--sweep-bow", roc_args.sweep_bow, "sweep the retrieval score instead");
  roc_cmd->add_option("--out", roc_args.out_path, "ROC points CSV (threshold,fpr,tpr)");

  ResolutionArgs res;
  CLI::App* res_cmd = app.add_subcommand("resolution", "row-downsampling study");
  res_cmd->add_option("--manifest", res.manifest_path, "sequence manifest with poses")
      ->required();
  res_cmd->add_option("--config", res.config_path, "detector config");
  res_cmd->add_option("--vocab", res.vocab_path, "vocabulary file (overrides config)");
  res_cmd->add_option("--rows", res.rows, "row counts to test")->delimiter(',');
  res_cmd->add_option("--gt-radius", res.gt_radius, "true-positive radius, meters");
  res_cmd->add_option("--out", res.out_path, "study table CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    app.exit(e);
    return 2;
  }

  try {
    if (synth_cmd->parsed()) return run_synth(synth);
    if (train_cmd->parsed()) return run_train_vocab(train);
    if (detect_cmd->parsed()) return run_detect(detect);
    if (eval_cmd->parsed()) return run_eval(eval);
    if (roc_cmd->parsed()) return run_roc(roc_args);
    if (res_cmd->parsed()) return run_resolution(res);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
