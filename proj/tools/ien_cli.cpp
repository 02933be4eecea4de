// SPDX-License-Identifier: Apache-2.0
//
// Command-line surface: synthetic data generation, training, streaming
// evaluation with mAP/mcAP reports and probability timelines, the
// four-variant ablation runner, and the forward-throughput benchmark.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "ien/bench.hpp"
#include "ien/datagen.hpp"
#include "ien/metrics.hpp"
#include "ien/network.hpp"
#include "ien/run_config.hpp"

namespace fs = std::filesystem;
using namespace ien;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void ensure_out_dir(const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + out_dir + "'");
}

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

// Flags that were actually passed override values loaded from --config.
struct ConfigBinding {
  CLI::App* cmd = nullptr;
  std::string config_path;

  RunConfig resolve(const RunConfig& from_flags) const {
    if (config_path.empty()) return from_flags;
    RunConfig rc = read_run_config(config_path);
    auto passed = [&](const char* name) {
      const CLI::Option* opt = cmd->get_option_no_throw(name);
      return opt != nullptr && opt->count() > 0;
    };
    if (passed("--window")) rc.model.T_plus_1 = from_flags.model.T_plus_1;
    if (passed("--dv")) rc.model.d_v = from_flags.model.d_v;
    if (passed("--de")) rc.model.d_e = from_flags.model.d_e;
    if (passed("--dh")) rc.model.d_h = from_flags.model.d_h;
    if (passed("--k")) rc.model.K = from_flags.model.K;
    if (passed("--variant")) rc.model.cell_variant = from_flags.model.cell_variant;
    if (passed("--merge")) rc.model.merge_mode = from_flags.model.merge_mode;
    if (passed("--epochs")) rc.train.epochs = from_flags.train.epochs;
    if (passed("--batch")) rc.train.batch_size = from_flags.train.batch_size;
    if (passed("--lr")) rc.train.lr = from_flags.train.lr;
    if (passed("--beta1")) rc.train.beta1 = from_flags.train.beta1;
    if (passed("--beta2")) rc.train.beta2 = from_flags.train.beta2;
    if (passed("--eps")) rc.train.eps = from_flags.train.eps;
    if (passed("--seed")) rc.seed = from_flags.seed;
    if (passed("--data")) rc.train_path = from_flags.train_path;
    if (passed("--eval-data")) rc.eval_path = from_flags.eval_path;
    if (passed("--out-dir")) rc.out_dir = from_flags.out_dir;
    rc.train.seed = rc.seed;
    return rc;
  }
};

// Standard model/training flags shared by train, eval, and ablate.
void add_model_flags(CLI::App* cmd, RunConfig& rc) {
  cmd->add_option("--window", rc.model.T_plus_1, "Window length in chunks");
  cmd->add_option("--dv", rc.model.d_v, "Raw feature width");
  cmd->add_option("--de", rc.model.d_e, "Embedding width");
  cmd->add_option("--dh", rc.model.d_h, "Hidden width");
  cmd->add_option("--k", rc.model.K, "Action classes (background excluded)");
  cmd->add_option_function<std::string>(
         "--variant",
         [&rc](const std::string& s) { rc.model.cell_variant = cell_variant_from_string(s); },
         "Cell variant: ieu|lstm_plain|lstm_bundle|lstm_sophisticated")
      ->default_str("ieu");
  cmd->add_option_function<std::string>(
         "--merge",
         [&rc](const std::string& s) { rc.model.merge_mode = merge_mode_from_string(s); },
         "Gate input merge: concat|addition")
      ->default_str("concat");
}

void add_train_flags(CLI::App* cmd, RunConfig& rc) {
  cmd->add_option("--epochs", rc.train.epochs, "Training epochs");
  cmd->add_option("--batch", rc.train.batch_size, "Mini-batch size");
  cmd->add_option("--lr", rc.train.lr, "Adam learning rate");
  cmd->add_option("--beta1", rc.train.beta1, "Adam beta1");
  cmd->add_option("--beta2", rc.train.beta2, "Adam beta2");
  cmd->add_option("--eps", rc.train.eps, "Adam epsilon");
}

// The model adopts d_v and K from the data file; explicitly configured
// values must agree with it.
void reconcile_with_data(RunConfig& rc, const LabeledStream& stream, bool dv_set,
                         bool k_set) {
  if (dv_set && rc.model.d_v != stream.d_v()) {
    throw ConfigError("configured d_v=" + std::to_string(rc.model.d_v) +
                      " but the data file carries d_v=" +
                      std::to_string(stream.d_v()));
  }
  if (k_set && rc.model.K != stream.K) {
    throw ConfigError("configured k=" + std::to_string(rc.model.K) +
                      " but the data file carries K=" + std::to_string(stream.K));
  }
  rc.model.d_v = stream.d_v();
  rc.model.K = stream.K;
}

// Final-chunk probabilities for every full window of a stream.
EvalSet eval_full_windows(const IenModel& model, const LabeledStream& stream) {
  EvalSet eval;
  for (const LabeledSegment& seg : segment_windows(stream, model.config.T_plus_1)) {
    eval.probs.push_back(predict_current(model, seg.feats));
    eval.labels.push_back(seg.labels.back());
  }
  return eval;
}

void add_ap_block(Report& report, const std::string& prefix, const ApResult& r) {
  report.add(prefix + ".mean", r.mean);
  for (const auto& [cls, value] : r.per_class) {
    report.add(prefix + ".class_" + std::to_string(cls), value);
  }
  std::string skipped;
  for (int cls : r.skipped_classes) {
    if (!skipped.empty()) skipped += ",";
    skipped += std::to_string(cls);
  }
  report.add(prefix + ".skipped_classes", skipped.empty() ? "none" : skipped);
}

// ---------------------------------------------------------------------------

struct GenDataArgs {
  StreamSpec spec;
  std::size_t window = 8;
  std::size_t test_len = 0;  // 0: quarter of --len, at least one window
  std::string out_dir = ".";
  std::string config_path;
  CLI::App* cmd = nullptr;
};

int run_gen_data(GenDataArgs& args) {
  if (!args.config_path.empty()) {
    // The run config supplies the shared fields; explicit flags win.
    const RunConfig rc = read_run_config(args.config_path);
    if (args.cmd->count("--window") == 0) args.window = rc.model.T_plus_1;
    if (args.cmd->count("--k") == 0) args.spec.K = rc.model.K;
    if (args.cmd->count("--dv") == 0) args.spec.d_v = rc.model.d_v;
    if (args.cmd->count("--seed") == 0) args.spec.seed = rc.seed;
    if (args.cmd->count("--out-dir") == 0) args.out_dir = rc.out_dir;
  }
  if (args.test_len != 0 && args.test_len < args.window) {
    throw UsageError("--test-len must cover at least one window");
  }
  args.spec.validate(args.window);

  StreamSpec test_spec = args.spec;
  test_spec.stream_len =
      args.test_len != 0 ? args.test_len
                         : std::max(args.window, args.spec.stream_len / 4);

  ensure_out_dir(args.out_dir);
  const LabeledStream train_stream = generate_stream(args.spec);
  const LabeledStream test_stream =
      generate_stream_with_episodes(test_spec, args.spec.seed + 1);

  const std::string train_path = join(args.out_dir, "train.ienf");
  const std::string test_path = join(args.out_dir, "test.ienf");
  write_features(train_path, train_stream);
  write_features(test_path, test_stream);

  std::printf("seed = %llu\n", static_cast<unsigned long long>(args.spec.seed));
  std::printf("mode = %s\n", to_string(args.spec.evidence_mode));
  std::printf("train_chunks = %zu\n", train_stream.size());
  std::printf("test_chunks = %zu\n", test_stream.size());
  std::printf("train_path = %s\n", train_path.c_str());
  std::printf("test_path = %s\n", test_path.c_str());
  return 0;
}

struct TrainArgs {
  RunConfig rc;
  ConfigBinding binding;
};

int run_train(TrainArgs& args) {
  const RunConfig flags = args.rc;
  RunConfig rc = args.binding.resolve(flags);
  if (rc.train_path.empty()) throw UsageError("train: --data is required");

  const auto start = Clock::now();
  const LabeledStream stream = read_features(rc.train_path);
  reconcile_with_data(rc, stream, args.binding.cmd->count("--dv") > 0,
                      args.binding.cmd->count("--k") > 0);
  rc.model.validate();

  IenModel model = init_model(rc.model, rc.seed);
  const std::vector<LabeledSegment> data =
      segment_windows(stream, rc.model.T_plus_1);
  rc.train.seed = rc.seed;
  const std::vector<double> losses = train(model, data, rc.train);

  ensure_out_dir(rc.out_dir);
  const std::string model_path = join(rc.out_dir, "model.ienm");
  save_model(model_path, model);

  const std::string loss_path = join(rc.out_dir, "loss.csv");
  {
    std::ofstream out(loss_path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + loss_path + "' for writing");
    out << "epoch,mean_loss\n";
    for (std::size_t e = 0; e < losses.size(); ++e) {
      out << e << "," << format_double(losses[e]) << "\n";
    }
  }

  std::printf("segments = %zu\n", data.size());
  std::printf("epochs = %zu\n", rc.train.epochs);
  if (!losses.empty()) {
    std::printf("first_epoch_loss = %s\n", format_double(losses.front()).c_str());
    std::printf("final_epoch_loss = %s\n", format_double(losses.back()).c_str());
  }
  std::printf("model_path = %s\n", model_path.c_str());
  std::printf("loss_path = %s\n", loss_path.c_str());
  std::printf("wall_ms = %.1f\n", ms_since(start));
  return 0;
}

struct EvalArgs {
  std::string model_path;
  std::string data_path;
  std::string out_dir = ".";
};

int run_eval(const EvalArgs& args) {
  const auto start = Clock::now();
  const IenModel model = load_model(args.model_path);
  const LabeledStream stream = read_features(args.data_path);
  if (stream.d_v() != model.config.d_v) {
    throw ConfigError("checkpoint expects d_v=" + std::to_string(model.config.d_v) +
                      " but the data file carries d_v=" +
                      std::to_string(stream.d_v()));
  }
  if (stream.K != model.config.K) {
    throw ConfigError("checkpoint expects K=" + std::to_string(model.config.K) +
                      " but the data file carries K=" + std::to_string(stream.K));
  }

  ensure_out_dir(args.out_dir);
  const std::string timeline_path = join(args.out_dir, "timeline.csv");
  EvalSet eval;
  {
    std::ofstream out(timeline_path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + timeline_path + "' for writing");
    out << "chunk_index,label";
    for (std::size_t k = 0; k <= model.config.K; ++k) out << ",p_" << k;
    out << "\n";
    StreamSession session(model);
    for (std::size_t t = 0; t < stream.size(); ++t) {
      const Vec probs = session.push(stream.feats[t]);
      out << t << "," << stream.labels[t];
      for (double p : probs) out << "," << format_double(p);
      out << "\n";
      eval.probs.push_back(probs);
      eval.labels.push_back(stream.labels[t]);
    }
  }

  const ApResult ap = mean_average_precision(eval);
  const ApResult cap = mean_calibrated_ap(eval);

  Report report;
  report.add("command", "eval");
  report.add("model_path", args.model_path);
  report.add("data_path", args.data_path);
  report.add("cell_variant", to_string(model.config.cell_variant));
  report.add("chunks", stream.size());
  report.add("map", ap.mean);
  report.add("mcap", cap.mean);
  add_ap_block(report, "ap", ap);
  add_ap_block(report, "cap", cap);
  report.add("timeline_path", timeline_path);
  const std::string report_path = join(args.out_dir, "report.txt");
  report.add("wall_ms", ms_since(start));
  report.write(report_path);

  std::fputs(report.to_text().c_str(), stdout);
  std::printf("report_path = %s\n", report_path.c_str());
  return 0;
}

struct AblateArgs {
  RunConfig rc;
  ConfigBinding binding;
  std::size_t seeds = 10;
};

int run_ablate(AblateArgs& args) {
  RunConfig rc = args.binding.resolve(args.rc);
  if (rc.train_path.empty() || rc.eval_path.empty()) {
    throw UsageError("ablate: --data and --eval-data are required");
  }

  const LabeledStream train_stream = read_features(rc.train_path);
  const LabeledStream eval_stream = read_features(rc.eval_path);
  reconcile_with_data(rc, train_stream, args.binding.cmd->count("--dv") > 0,
                      args.binding.cmd->count("--k") > 0);
  if (eval_stream.d_v() != rc.model.d_v || eval_stream.K != rc.model.K) {
    throw ConfigError("train and eval feature files disagree on d_v or K");
  }

  const std::vector<LabeledSegment> train_windows =
      segment_windows(train_stream, rc.model.T_plus_1);

  const CellVariant variants[] = {
      CellVariant::LstmPlain, CellVariant::LstmBundle,
      CellVariant::LstmSophisticated, CellVariant::Ieu};

  Report report;
  report.add("command", "ablate");
  report.add("seeds", args.seeds);
  report.add("epochs", rc.train.epochs);
  report.add("train_chunks", train_stream.size());
  report.add("eval_chunks", eval_stream.size());

  std::printf("%-20s", "seed");
  for (CellVariant v : variants) std::printf("%20s", to_string(v));
  std::printf("\n");

  std::map<CellVariant, double> mean_map;
  for (std::size_t i = 0; i < args.seeds; ++i) {
    const std::uint64_t seed = rc.seed + i;
    std::printf("%-20llu", static_cast<unsigned long long>(seed));
    for (CellVariant v : variants) {
      IenConfig config = rc.model;
      config.cell_variant = v;
      IenModel model = init_model(config, seed);
      TrainOptions opts = rc.train;
      opts.seed = seed;
      train(model, train_windows, opts);
      const double map_value =
          mean_average_precision(eval_full_windows(model, eval_stream)).mean;
      mean_map[v] += map_value;
      report.add(std::string("map.") + to_string(v) + ".seed_" +
                     std::to_string(seed),
                 map_value);
      std::printf("%20.4f", map_value);
      std::fflush(stdout);
    }
    std::printf("\n");
  }

  std::printf("%-20s", "mean");
  for (CellVariant v : variants) {
    mean_map[v] /= static_cast<double>(args.seeds);
    report.add(std::string("map.") + to_string(v) + ".mean", mean_map[v]);
    std::printf("%20.4f", mean_map[v]);
  }
  std::printf("\n");

  ensure_out_dir(rc.out_dir);
  const std::string report_path = join(rc.out_dir, "ablation.txt");
  report.write(report_path);
  std::printf("report_path = %s\n", report_path.c_str());
  return 0;
}

struct BenchArgs {
  BenchConfig config;
  std::string precision = "f64";
  std::string out_dir;
};

int run_bench(BenchArgs& args) {
  if (args.precision == "f32") {
    args.config.use_f32 = true;
  } else if (args.precision != "f64") {
    throw UsageError("--precision must be f64 or f32");
  }
  const BenchResult result = run_forward_bench(args.config);

  Report report;
  report.add("command", "bench");
  report.add("unit", "chunks_per_sec (recurrent-core forward only)");
  report.add("precision", args.precision);
  report.add("d_e", args.config.d_e);
  report.add("d_h", args.config.d_h);
  report.add("window", args.config.window);
  report.add("measured_seconds_per_cell", args.config.seconds);
  report.add("lstm_plain.chunks_per_sec", result.lstm_plain.chunks_per_sec);
  report.add("ieu.chunks_per_sec", result.ieu.chunks_per_sec);
  char delta[64];
  std::snprintf(delta, sizeof(delta), "%+.2f%%", 100.0 * result.rel_delta);
  report.add("ieu_vs_lstm_delta", delta);
  // Published measurement for the same trade-off, for qualitative
  // comparison only; hardware differs.
  report.add("reference_delta", "-12.57%");

  std::fputs(report.to_text().c_str(), stdout);
  if (!args.out_dir.empty()) {
    ensure_out_dir(args.out_dir);
    const std::string report_path = join(args.out_dir, "bench.txt");
    report.write(report_path);
    std::printf("report_path = %s\n", report_path.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Information elevation network (IEN) for online action detection"};
  app.require_subcommand(1);

  GenDataArgs gen;
  std::string gen_mode = "persistent";
  CLI::App* gen_cmd =
      app.add_subcommand("gen-data", "Generate synthetic IENF feature files");
  gen_cmd->add_option("--config", gen.config_path, "Run configuration file");
  gen_cmd->add_option("--mode", gen_mode, "persistent|early_only");
  gen_cmd->add_option("--k", gen.spec.K, "Action classes");
  gen_cmd->add_option("--dv", gen.spec.d_v, "Feature width");
  gen_cmd->add_option("--len", gen.spec.stream_len, "Training stream length")
      ->required();
  gen_cmd->add_option("--test-len", gen.test_len, "Test stream length");
  gen_cmd->add_option("--seed", gen.spec.seed, "Generation seed");
  gen_cmd->add_option("--background-rate", gen.spec.background_rate,
                      "Fraction of background episodes");
  gen_cmd->add_option("--noise-sigma", gen.spec.noise_sigma, "Feature noise");
  gen_cmd->add_option("--episode-min", gen.spec.episode_len_min,
                      "Minimum episode length");
  gen_cmd->add_option("--episode-max", gen.spec.episode_len_max,
                      "Maximum episode length");
  gen_cmd->add_option("--window", gen.window,
                      "Window length the streams must accommodate");
  gen_cmd->add_option("--out-dir", gen.out_dir, "Output directory");
  gen.cmd = gen_cmd;

  TrainArgs train_args;
  CLI::App* train_cmd =
      app.add_subcommand("train", "Train a model on an IENF feature file");
  train_cmd->add_option("--config", train_args.binding.config_path,
                        "Run configuration file");
  train_cmd->add_option("--data", train_args.rc.train_path, "Training IENF file");
  train_cmd->add_option("--seed", train_args.rc.seed, "Init/shuffle seed");
  train_cmd->add_option("--out-dir", train_args.rc.out_dir, "Output directory");
  add_model_flags(train_cmd, train_args.rc);
  add_train_flags(train_cmd, train_args.rc);
  train_args.binding.cmd = train_cmd;

  EvalArgs eval_args;
  CLI::App* eval_cmd = app.add_subcommand(
      "eval", "Stream an IENF file through a checkpoint and report metrics");
  eval_cmd->add_option("--model", eval_args.model_path, "IENM checkpoint")
      ->required();
  eval_cmd->add_option("--data", eval_args.data_path, "Evaluation IENF file")
      ->required();
  eval_cmd->add_option("--out-dir", eval_args.out_dir, "Output directory");

  AblateArgs ablate_args;
  CLI::App* ablate_cmd = app.add_subcommand(
      "ablate", "Train and compare all four cell variants over several seeds");
  ablate_cmd->add_option("--config", ablate_args.binding.config_path,
                         "Run configuration file");
  ablate_cmd->add_option("--data", ablate_args.rc.train_path, "Training IENF file");
  ablate_cmd->add_option("--eval-data", ablate_args.rc.eval_path,
                         "Evaluation IENF file");
  ablate_cmd->add_option("--seeds", ablate_args.seeds, "Number of seeds");
  ablate_cmd->add_option("--seed", ablate_args.rc.seed, "Base seed");
  ablate_cmd->add_option("--out-dir", ablate_args.rc.out_dir, "Output directory");
  add_model_flags(ablate_cmd, ablate_args.rc);
  add_train_flags(ablate_cmd, ablate_args.rc);
  ablate_args.binding.cmd = ablate_cmd;

  BenchArgs bench_args;
  CLI::App* bench_cmd = app.add_subcommand(
      "bench", "Measure forward-only throughput of lstm_plain vs ieu");
  bench_cmd->add_option("--de", bench_args.config.d_e, "Embedding width");
  bench_cmd->add_option("--dh", bench_args.config.d_h, "Hidden width");
  bench_cmd->add_option("--window", bench_args.config.window, "Steps per segment");
  bench_cmd->add_option("--seconds", bench_args.config.seconds,
                        "Measured duration per cell");
  bench_cmd->add_option("--warmup", bench_args.config.warmup_seconds,
                        "Warmup duration per cell");
  bench_cmd->add_option("--precision", bench_args.precision, "f64|f32");
  bench_cmd->add_option("--seed", bench_args.config.seed, "Weight/input seed");
  bench_cmd->add_option("--out-dir", bench_args.out_dir,
                        "Optional report directory");

  try {
    app.parse(argc, argv);
    if (gen_cmd->parsed()) {
      gen.spec.evidence_mode = evidence_mode_from_string(gen_mode);
      return run_gen_data(gen);
    }
    if (train_cmd->parsed()) return run_train(train_args);
    if (eval_cmd->parsed()) return run_eval(eval_args);
    if (ablate_cmd->parsed()) return run_ablate(ablate_args);
    if (bench_cmd->parsed()) return run_bench(bench_args);
    return 1;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    std::cerr << "error usage_error: " << e.what() << "\n";
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "error usage_error: " << e.what() << "\n";
    return 2;
  } catch (const ShapeError& e) {
    std::cerr << "error shape_error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "error numeric_error: " << e.what() << "\n";
    return 4;
  } catch (const FormatError& e) {
    std::cerr << "error format_error: " << e.what() << "\n";
    return 5;
  } catch (const ConfigError& e) {
    std::cerr << "error config_error: " << e.what() << "\n";
    return 6;
  } catch (const IoError& e) {
    std::cerr << "error io_error: " << e.what() << "\n";
    return 7;
  } catch (const std::exception& e) {
    std::cerr << "error internal_error: " << e.what() << "\n";
    return 1;
  }
}
