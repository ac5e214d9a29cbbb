// posetrack: command-line front end for the pose tracking toolkit.
//
// Subcommands: synth, train, track, eval, attn-export. Every run echoes its
// effective configuration into the output directory so artifacts are
// self-describing. Exit codes: 0 success, 2 usage, 3 data error, 4 numeric.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ptk/dataio.hpp"
#include "ptk/metrics.hpp"
#include "ptk/toks.hpp"
#include "ptk/tracker.hpp"
#include "ptk/training.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace ptk;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct CliError : std::runtime_error {
  int code;
  CliError(int code, const std::string& what) : std::runtime_error(what), code(code) {}
};

void write_effective_config(const fs::path& out_dir, const std::string& subcommand,
                            const ordered_json& cfg) {
  fs::create_directories(out_dir);
  ordered_json doc;
  doc["tool"] = "posetrack";
  doc["subcommand"] = subcommand;
  doc["config"] = cfg;
  std::ofstream out(out_dir / "effective_config.json");
  out << doc.dump(1) << "\n";
}

SequenceFile load_or_die(const std::string& path) {
  try {
    return load_sequence(path);
  } catch (const std::exception& e) {
    throw CliError(kExitData, e.what());
  }
}

// --- synth -----------------------------------------------------------------

int run_synth(const SynthConfig& cfg, const std::string& out_dir_s) {
  try {
    cfg.validate();
  } catch (const std::exception& e) {
    throw CliError(kExitUsage, e.what());
  }
  const fs::path out_dir(out_dir_s);
  auto result = generate_synthetic(cfg);
  fs::create_directories(out_dir);
  save_sequence(result.ground_truth, (out_dir / (cfg.video_id + "_gt.json")).string());
  save_sequence(result.detected, (out_dir / (cfg.video_id + "_detected.json")).string());
  write_effective_config(out_dir, "synth",
                         {{"num_persons", cfg.num_persons},
                          {"num_frames", cfg.num_frames},
                          {"frame_width", cfg.frame_width},
                          {"frame_height", cfg.frame_height},
                          {"uniform_motion", cfg.uniform_motion},
                          {"speed_min", cfg.speed_min},
                          {"speed_max", cfg.speed_max},
                          {"swing_scale", cfg.swing_scale},
                          {"jitter_sigma", cfg.jitter_sigma},
                          {"keypoint_dropout_p", cfg.keypoint_dropout_p},
                          {"missed_pose_p", cfg.missed_pose_p},
                          {"duplicate_pose_p", cfg.duplicate_pose_p},
                          {"occlusion_count", cfg.occlusion_count},
                          {"occlusion_len", cfg.occlusion_len},
                          {"seed", cfg.seed},
                          {"video_id", cfg.video_id}});
  std::printf("synth: wrote %s_gt.json and %s_detected.json to %s\n", cfg.video_id.c_str(),
              cfg.video_id.c_str(), out_dir.string().c_str());
  return 0;
}

// --- train -----------------------------------------------------------------

int run_train(const std::vector<std::string>& gt_paths, const MatcherConfig& mc,
              const TrainConfig& tc, double negatives_per_positive, int max_pairs,
              int augment_copies, bool relative_tokens, std::uint64_t seed,
              const std::string& out_dir_s) {
  try {
    mc.validate();
    tc.validate();
  } catch (const std::exception& e) {
    throw CliError(kExitUsage, e.what());
  }
  std::vector<SequenceFile> sequences;
  for (const auto& p : gt_paths) sequences.push_back(load_or_die(p));

  auto dataset = mine_pairs(sequences, mc.max_segment, TokenGrid{}, negatives_per_positive, seed,
                            relative_tokens);
  if (max_pairs > 0) dataset = subsample_pairs(dataset, max_pairs, seed + 1);
  if (augment_copies > 0)
    dataset = augment_translation(dataset, augment_copies, TokenGrid{}, seed + 2);
  if (dataset.samples.empty()) throw CliError(kExitData, "train: no usable pose pairs mined");

  const fs::path out_dir(out_dir_s);
  fs::create_directories(out_dir);
  ModelParams params = init_params(mc, seed);
  TrainResult result;
  try {
    result = train(params, mc, tc, dataset);
  } catch (const std::exception& e) {
    throw CliError(kExitNumeric, e.what());
  }
  const double loss = result.log.empty() ? 0.0 : result.log.back().mean_loss;
  if (!std::isfinite(loss)) throw CliError(kExitNumeric, "train: non-finite final loss");

  save_checkpoint(params, mc, (out_dir / "model.ckpt").string());
  write_metrics_csv(result, (out_dir / "train_metrics.csv").string());
  write_effective_config(out_dir, "train",
                         {{"num_layers", mc.num_layers},
                          {"hidden", mc.hidden},
                          {"intermediate", mc.intermediate},
                          {"heads", mc.heads},
                          {"dropout_p", mc.dropout_p},
                          {"max_segment", mc.max_segment},
                          {"use_position", mc.use_position},
                          {"use_type", mc.use_type},
                          {"use_segment", mc.use_segment},
                          {"batch_size", tc.batch_size},
                          {"peak_lr", tc.peak_lr},
                          {"warmup_fraction", tc.warmup_fraction},
                          {"epochs", tc.epochs},
                          {"negatives_per_positive", negatives_per_positive},
                          {"max_pairs", max_pairs},
                          {"augment_copies", augment_copies},
                          {"relative_tokens", relative_tokens},
                          {"seed", seed},
                          {"inputs", gt_paths}});
  std::printf("train: %zu pairs, final loss %.4f, train accuracy %.3f, checkpoint %s\n",
              dataset.samples.size(), loss,
              result.log.empty() ? 0.0 : result.log.back().match_accuracy,
              (out_dir / "model.ckpt").string().c_str());
  return 0;
}

// --- track -----------------------------------------------------------------

int run_track(const std::string& detected_path, const std::string& checkpoint,
              const TrackerConfig& tcfg, bool with_toks, const std::string& oracle_gt,
              double oracle_sigma, std::uint64_t seed, const std::string& out_dir_s) {
  try {
    tcfg.validate();
  } catch (const std::exception& e) {
    throw CliError(kExitUsage, e.what());
  }
  if (!fs::exists(checkpoint))
    throw CliError(kExitData, "track: checkpoint not found: " + checkpoint);
  auto detected = load_or_die(detected_path);
  auto [params, mc] = load_checkpoint(checkpoint);

  std::optional<SequenceFile> gt;
  std::optional<OracleJitterEstimator> estimator;
  ToksConfig toks;
  if (with_toks) {
    if (oracle_gt.empty())
      throw CliError(kExitUsage, "track: --toks requires --oracle-gt (only oracle estimation is built in)");
    gt = load_or_die(oracle_gt);
    estimator.emplace(*gt, oracle_sigma, 0.0, seed);
  }

  const fs::path out_dir(out_dir_s);
  fs::create_directories(out_dir);
  TrackResult result;
  try {
    result = track_video(detected, params, mc, tcfg, estimator ? &*estimator : nullptr,
                         with_toks ? &toks : nullptr);
  } catch (const std::exception& e) {
    throw CliError(kExitNumeric, e.what());
  }
  save_sequence(result.tracked, (out_dir / "tracked.json").string());
  write_assignment_log_csv(result.log, (out_dir / "assignments.csv").string());
  write_effective_config(out_dir, "track",
                         {{"detected", detected_path},
                          {"checkpoint", checkpoint},
                          {"delta", tcfg.delta},
                          {"n_nearest", tcfg.n_nearest},
                          {"min_match_score", tcfg.min_match_score},
                          {"hungarian", tcfg.assignment == TrackerConfig::Assignment::kHungarian},
                          {"relative_tokens", tcfg.relative_tokens},
                          {"toks", with_toks},
                          {"oracle_gt", oracle_gt},
                          {"oracle_sigma", oracle_sigma},
                          {"seed", seed}});
  std::printf("track: %zu frames -> %s\n", result.tracked.frames.size(),
              (out_dir / "tracked.json").string().c_str());
  return 0;
}

// --- eval ------------------------------------------------------------------

int run_eval(const std::string& tracked_path, const std::string& gt_path, double conf_threshold,
             const std::string& out_dir_s) {
  auto tracked = load_or_die(tracked_path);
  auto gt = load_or_die(gt_path);
  EvalConfig cfg;
  cfg.conf_threshold = conf_threshold;

  MotaReport mota;
  ApReport ap;
  std::vector<SweepRow> sweep;
  try {
    mota = evaluate_mota(tracked.frames, gt.frames, cfg);
    ap = evaluate_ap(tracked.frames, gt.frames, cfg);
    sweep = sweep_confidence_threshold(tracked.frames, gt.frames,
                                       {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}, cfg);
  } catch (const std::exception& e) {
    throw CliError(kExitData, e.what());
  }

  const fs::path out_dir(out_dir_s);
  fs::create_directories(out_dir);
  write_mota_report_csv(mota, ap, (out_dir / "report.csv").string());
  write_sweep_csv(sweep, (out_dir / "sweep.csv").string());
  write_effective_config(out_dir, "eval",
                         {{"tracked", tracked_path},
                          {"ground_truth", gt_path},
                          {"conf_threshold", conf_threshold}});
  std::fputs(format_report(mota, ap).c_str(), stdout);
  return 0;
}

// --- attn-export -----------------------------------------------------------

void write_pgm(const fs::path& path, const AttentionMaps& maps, int layer, int head) {
  // cells scaled against the map's own maximum so structure stays visible
  double peak = 0.0;
  for (int q = 0; q < kPairTokens; ++q)
    for (int k = 0; k < kPairTokens; ++k) peak = std::max(peak, maps.at(layer, head, q, k));
  std::ofstream out(path, std::ios::binary);
  out << "P2\n" << kPairTokens << " " << kPairTokens << "\n255\n";
  for (int q = 0; q < kPairTokens; ++q) {
    for (int k = 0; k < kPairTokens; ++k) {
      const int v = peak <= 0.0
                        ? 0
                        : static_cast<int>(std::lround(255.0 * maps.at(layer, head, q, k) / peak));
      out << v << (k + 1 < kPairTokens ? " " : "\n");
    }
  }
}

int run_attn_export(const std::string& checkpoint, const std::string& seq_path, int frame,
                    int pose_a, int prev_frame, int pose_b, const std::string& out_dir_s) {
  if (!fs::exists(checkpoint))
    throw CliError(kExitData, "attn-export: checkpoint not found: " + checkpoint);
  auto seq = load_or_die(seq_path);
  auto [params, mc] = load_checkpoint(checkpoint);

  auto pose_at = [&](int f, int p) -> const Pose& {
    if (f < 0 || f >= static_cast<int>(seq.frames.size()))
      throw CliError(kExitUsage, "attn-export: frame " + std::to_string(f) + " out of range");
    const auto& poses = seq.frames[f].poses;
    if (p < 0 || p >= static_cast<int>(poses.size()))
      throw CliError(kExitUsage, "attn-export: pose " + std::to_string(p) + " out of range in frame " +
                                     std::to_string(f));
    return poses[p];
  };
  const int gap = frame - prev_frame;
  if (gap < 1 || gap > mc.max_segment)
    throw CliError(kExitUsage, "attn-export: frame gap " + std::to_string(gap) +
                                   " outside [1, " + std::to_string(mc.max_segment) + "]");

  const auto& fa = seq.frames[frame];
  TokenizedPair pair = tokenize_pair(pose_at(frame, pose_a), pose_at(prev_frame, pose_b), gap,
                                     mc.max_segment, fa.width, fa.height, TokenGrid{});

  nn::Tape tape(false);
  ForwardOptions opts;
  opts.want_attention = true;
  auto fr = matcher_forward(tape, params, mc, {pair}, opts);
  const auto& maps = fr.attention[0];

  const fs::path out_dir(out_dir_s);
  fs::create_directories(out_dir);
  for (int l = 0; l < maps.layers; ++l)
    for (int h = 0; h < maps.heads; ++h) {
      const std::string stem = "attn_l" + std::to_string(l) + "_h" + std::to_string(h);
      std::ofstream csv(out_dir / (stem + ".csv"));
      csv.precision(17);
      for (int q = 0; q < kPairTokens; ++q) {
        for (int k = 0; k < kPairTokens; ++k)
          csv << maps.at(l, h, q, k) << (k + 1 < kPairTokens ? "," : "\n");
      }
      write_pgm(out_dir / (stem + ".pgm"), maps, l, h);
    }
  write_effective_config(out_dir, "attn-export",
                         {{"checkpoint", checkpoint},
                          {"sequence", seq_path},
                          {"frame", frame},
                          {"pose", pose_a},
                          {"prev_frame", prev_frame},
                          {"prev_pose", pose_b}});
  std::printf("attn-export: wrote %d x %d maps to %s\n", maps.layers, maps.heads,
              out_dir.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pose tracking toolkit"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "base seed threaded through every stochastic component");

  // synth
  SynthConfig scfg;
  std::string synth_out = "out_synth";
  auto* synth = app.add_subcommand("synth", "generate a synthetic GT + detected sequence pair");
  synth->add_option("--persons", scfg.num_persons);
  synth->add_option("--frames", scfg.num_frames);
  synth->add_option("--width", scfg.frame_width);
  synth->add_option("--height", scfg.frame_height);
  synth->add_flag("--uniform-motion", scfg.uniform_motion);
  synth->add_option("--speed-min", scfg.speed_min);
  synth->add_option("--speed-max", scfg.speed_max);
  synth->add_option("--swing-scale", scfg.swing_scale);
  synth->add_option("--jitter-sigma", scfg.jitter_sigma);
  synth->add_option("--keypoint-dropout", scfg.keypoint_dropout_p);
  synth->add_option("--missed-pose", scfg.missed_pose_p);
  synth->add_option("--duplicate-pose", scfg.duplicate_pose_p);
  synth->add_option("--occlusions", scfg.occlusion_count);
  synth->add_option("--occlusion-len", scfg.occlusion_len);
  synth->add_option("--video-id", scfg.video_id);
  synth->add_option("-o,--out", synth_out, "output directory");

  // train
  MatcherConfig mc;
  TrainConfig tc;
  std::vector<std::string> gt_paths;
  std::string train_out = "out_train";
  double npp = 3.0;
  int max_pairs = 0;
  int augment_copies = 0;
  bool relative_tokens = false;
  auto* train_cmd = app.add_subcommand("train", "train the pair matcher on GT sequences");
  train_cmd->add_option("inputs", gt_paths, "ground-truth sequence JSON files")->required();
  train_cmd->add_option("--layers", mc.num_layers);
  train_cmd->add_option("--hidden", mc.hidden);
  train_cmd->add_option("--intermediate", mc.intermediate);
  train_cmd->add_option("--heads", mc.heads);
  train_cmd->add_option("--dropout", mc.dropout_p);
  train_cmd->add_option("--delta", mc.max_segment);
  train_cmd->add_flag("!--no-position", mc.use_position);
  train_cmd->add_flag("!--no-type", mc.use_type);
  train_cmd->add_flag("!--no-segment", mc.use_segment);
  train_cmd->add_option("--batch-size", tc.batch_size);
  train_cmd->add_option("--peak-lr", tc.peak_lr);
  train_cmd->add_option("--warmup", tc.warmup_fraction);
  train_cmd->add_option("--epochs", tc.epochs);
  train_cmd->add_option("--negatives-per-positive", npp, "-1 keeps every negative");
  train_cmd->add_option("--max-pairs", max_pairs, "subsample cap, 0 = unlimited");
  train_cmd->add_option("--augment-copies", augment_copies,
                        "extra grid-translated views of each mined pair");
  train_cmd->add_flag("--relative-tokens", relative_tokens);
  train_cmd->add_option("-o,--out", train_out, "output directory");

  // track
  TrackerConfig tcfg;
  std::string detected_path, checkpoint, track_out = "out_track", oracle_gt;
  bool with_toks = false;
  double oracle_sigma = 1.0;
  auto* track_cmd = app.add_subcommand("track", "assign track ids to a detected sequence");
  track_cmd->add_option("detected", detected_path, "detected sequence JSON")->required();
  track_cmd->add_option("checkpoint", checkpoint, "matcher checkpoint")->required();
  track_cmd->add_option("--delta", tcfg.delta);
  track_cmd->add_option("--n-nearest", tcfg.n_nearest);
  track_cmd->add_option("--min-match-score", tcfg.min_match_score);
  bool use_hungarian = false;
  track_cmd->add_flag("--hungarian", use_hungarian, "optimal assignment instead of greedy");
  track_cmd->add_flag("--relative-tokens", tcfg.relative_tokens);
  track_cmd->add_flag("--toks", with_toks, "refine detections before association");
  track_cmd->add_option("--oracle-gt", oracle_gt, "GT sequence backing the oracle estimator");
  track_cmd->add_option("--oracle-sigma", oracle_sigma);
  track_cmd->add_option("-o,--out", track_out, "output directory");

  // eval
  std::string tracked_path, gt_path, eval_out = "out_eval";
  double conf_threshold = 0.0;
  auto* eval_cmd = app.add_subcommand("eval", "MOTA/AP report against ground truth");
  eval_cmd->add_option("tracked", tracked_path, "tracked sequence JSON")->required();
  eval_cmd->add_option("gt", gt_path, "ground-truth sequence JSON")->required();
  eval_cmd->add_option("--conf-threshold", conf_threshold);
  eval_cmd->add_option("-o,--out", eval_out, "output directory");

  // attn-export
  std::string attn_ckpt, attn_seq, attn_out = "out_attn";
  int attn_frame = 1, attn_pose = 0, attn_prev_frame = 0, attn_prev_pose = 0;
  auto* attn_cmd = app.add_subcommand("attn-export", "dump attention maps for one pose pair");
  attn_cmd->add_option("checkpoint", attn_ckpt)->required();
  attn_cmd->add_option("sequence", attn_seq)->required();
  attn_cmd->add_option("--frame", attn_frame, "current frame index");
  attn_cmd->add_option("--pose", attn_pose, "pose index in current frame");
  attn_cmd->add_option("--prev-frame", attn_prev_frame, "earlier frame index");
  attn_cmd->add_option("--prev-pose", attn_prev_pose, "pose index in earlier frame");
  attn_cmd->add_option("-o,--out", attn_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitUsage;
  }

  scfg.seed = seed;
  tc.seed = seed;
  if (use_hungarian) tcfg.assignment = TrackerConfig::Assignment::kHungarian;

  try {
    if (*synth) return run_synth(scfg, synth_out);
    if (*train_cmd)
      return run_train(gt_paths, mc, tc, npp, max_pairs, augment_copies, relative_tokens, seed,
                       train_out);
    if (*track_cmd)
      return run_track(detected_path, checkpoint, tcfg, with_toks, oracle_gt, oracle_sigma, seed,
                       track_out);
    if (*eval_cmd) return run_eval(tracked_path, gt_path, conf_threshold, eval_out);
    if (*attn_cmd)
      return run_attn_export(attn_ckpt, attn_seq, attn_frame, attn_pose, attn_prev_frame,
                             attn_prev_pose, attn_out);
  } catch (const CliError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
  return kExitUsage;
}
