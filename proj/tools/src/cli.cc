/*
 * Copyright 2026 The OCAE Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "ocae_cli/cli.h"

#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <charconv>
#include <csignal>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <ostream>
#include <thread>
#include <unordered_map>

#include "CLI11.hpp"
#include "json.hpp"
#include "json_config.h"
#include "ocae/error.h"
#include "ocae/model_store.h"
#include "ocae/pipeline.h"
#include "ocae/service.h"
#include "ocae/simgen.h"
#include "ocae/tuner.h"

namespace ocae::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

inline constexpr std::size_t kRecommendedRows = 2000;

int ExitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kIo:
    case ErrorKind::kCorrupt:
      return kExitIo;
    case ErrorKind::kDivergence:
      return kExitDivergence;
    case ErrorKind::kInvalidArgument:
    case ErrorKind::kInsufficientData:
    case ErrorKind::kSchema:
    case ErrorKind::kConflict:
      return kExitData;
  }
  return kExitData;
}

// Routes spdlog output to the invocation's error stream.
class ScopedLogger {
 public:
  explicit ScopedLogger(std::ostream& err) : previous_(spdlog::default_logger()) {
    auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err, true);
    auto logger = std::make_shared<spdlog::logger>("ocae", sink);
    logger->set_pattern("[%Y-%m-%d %H:%M:%S.%e] [%l] %v");
    spdlog::set_default_logger(logger);
  }
  ~ScopedLogger() { spdlog::set_default_logger(previous_); }

 private:
  std::shared_ptr<spdlog::logger> previous_;
};

struct MagnitudeRange {
  double lo = 0.02;
  double hi = 0.03;
};

// Accepts "0.025" or "lo..hi".
MagnitudeRange ParseMagnitude(const std::string& text) {
  auto parse = [&](std::string_view s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !(v > 0.0) ||
        !(v < 1.0)) {
      throw Error(ErrorKind::kInvalidArgument,
                  "--magnitude expects a fraction or lo..hi, got '" + text +
                      "'");
    }
    return v;
  };
  const auto dots = text.find("..");
  if (dots == std::string::npos) {
    const double v = parse(text);
    return {v, v};
  }
  MagnitudeRange range{parse(std::string_view(text).substr(0, dots)),
                       parse(std::string_view(text).substr(dots + 2))};
  if (range.lo > range.hi) {
    throw Error(ErrorKind::kInvalidArgument,
                "--magnitude lower bound exceeds upper bound");
  }
  return range;
}

std::ofstream OpenOutput(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  return out;
}

std::vector<SensorFrame> LoadCleanFrames(const fs::path& path,
                                         std::ostream& err,
                                         CleanReport* report = nullptr) {
  const ParseResult parsed = ReadCsvFile(path);
  CleanResult cleaned = Clean(parsed.rows);
  if (!parsed.rejects.empty()) {
    err << "note: " << parsed.rejects.size()
        << " malformed line(s) skipped in " << path.string() << "\n";
  }
  if (report != nullptr) *report = cleaned.report;
  return std::move(cleaned.frames);
}

void PrintBundleFiles(std::ostream& out, const BundleFiles& files) {
  out << "bundle: " << files.dir.string() << "\n"
      << "  " << kModelFileName << "  " << files.model_bytes << " bytes\n"
      << "  " << kScalerFileName << "  " << files.scaler_bytes << " bytes\n"
      << "  " << kThresholdFileName << "  " << files.threshold_bytes
      << " bytes\n"
      << "model_id: " << files.model_id << "\n";
}

void PrintMetricsTable(std::ostream& out, const Metrics& m) {
  out << std::left << std::setw(12) << "metric" << "value\n"
      << std::setw(12) << "tp" << m.tp << "\n"
      << std::setw(12) << "fp" << m.fp << "\n"
      << std::setw(12) << "tn" << m.tn << "\n"
      << std::setw(12) << "fn" << m.fn << "\n"
      << std::fixed << std::setprecision(4) << std::setw(12) << "precision"
      << m.precision << "\n"
      << std::setw(12) << "recall" << m.recall << "\n"
      << std::setw(12) << "f1" << m.f1 << "\n"
      << std::defaultfloat << std::right;
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
  fs::path out;
  std::size_t rows = 2000;
  double rate_hz = 1.0;
  std::uint64_t seed = 42;
  fs::path generator_config;
  std::uint64_t first_seq = 0;
  double anomaly_rate = 0.0;
  std::string magnitude = "0.02..0.03";
  double corruption_rate = 0.0;
  fs::path labels_out;
  bool protect_labels = false;
  bool rate_given = false;
};

int CmdGenerate(const GenerateArgs& a, std::ostream& out, std::ostream&) {
  if (a.rows == 0) {
    throw Error(ErrorKind::kInvalidArgument, "--rows must be >= 1");
  }
  if (!(a.anomaly_rate >= 0.0 && a.anomaly_rate < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "--anomaly-rate must be in [0, 1)");
  }
  if (!(a.corruption_rate >= 0.0 && a.corruption_rate < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument,
                "--corruption-rate must be in [0, 1)");
  }
  GeneratorConfig config = a.generator_config.empty()
                               ? DefaultGeneratorConfig()
                               : GeneratorConfig::Load(a.generator_config);
  config.seed = a.seed;
  if (a.rate_given) config.rate_hz = a.rate_hz;
  config.Validate();

  LabeledStream stream;
  stream.frames = Generate(config, a.rows, a.first_seq);
  stream.labels.assign(stream.frames.size(), false);
  if (a.anomaly_rate > 0.0) {
    const MagnitudeRange m = ParseMagnitude(a.magnitude);
    stream = InjectAnomalies(std::move(stream.frames),
                             InjectionConfig{a.anomaly_rate, m.lo, m.hi,
                                             a.seed + 1});
  }
  const std::vector<RawRow> rows = InjectCorruption(
      stream.frames, CorruptionConfig{a.corruption_rate, a.seed + 2},
      a.protect_labels ? &stream.labels : nullptr);

  {
    std::ofstream csv = OpenOutput(a.out);
    WriteRowsCsv(csv, rows);
    if (!csv) throw Error(ErrorKind::kIo, "cannot write " + a.out.string());
  }
  if (!a.labels_out.empty()) {
    std::ofstream labels = OpenOutput(a.labels_out);
    WriteLabelsCsv(labels, stream.frames, stream.labels);
    if (!labels) {
      throw Error(ErrorKind::kIo, "cannot write " + a.labels_out.string());
    }
  }
  std::size_t anomalies = 0;
  for (bool l : stream.labels) anomalies += l ? 1 : 0;
  const std::size_t corrupted = static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [](const RawRow& r) {
        return ClassifyRow(r, nullptr) != RowStatus::kOk;
      }));
  out << "wrote " << rows.size() << " rows to " << a.out.string() << " ("
      << anomalies << " anomalous, " << corrupted << " corrupted)\n";
  if (!a.labels_out.empty()) {
    out << "labels: " << a.labels_out.string() << "\n";
  }
  return kExitOk;
}

// ------------------------------------------------------------ train / tune

struct TrainArgs {
  fs::path data;
  fs::path model_dir;
  int hidden_dim = 64;
  int batch_size = 16;
  double learning_rate = 7e-4;
  int epochs = 10;
  int patience = 5;
  double val_fraction = 0.10;
  std::uint64_t seed = 42;
  bool tune = false;
  int trials = 10;
  int threads = 0;
};

PipelineOptions ToPipelineOptions(const TrainArgs& a) {
  PipelineOptions options;
  options.tune = a.tune;
  options.params = HyperParams{a.hidden_dim, a.batch_size, a.learning_rate,
                               a.epochs};
  options.trials = a.trials;
  options.seed = a.seed;
  options.patience = a.patience;
  options.val_fraction = a.val_fraction;
  options.threads = a.threads;
  return options;
}

void PrintTrials(std::ostream& out, const TuneResult& tune) {
  out << "trial  hidden  batch  lr          epochs  val_loss\n";
  for (const TrialResult& t : tune.trials) {
    out << std::setw(5) << t.trial << "  " << std::setw(6)
        << t.params.hidden_dim << "  " << std::setw(5) << t.params.batch_size
        << "  " << std::left << std::setw(10) << std::setprecision(4)
        << t.params.learning_rate << std::right << "  " << std::setw(6)
        << t.params.epochs << "  ";
    if (t.diverged) {
      out << "diverged";
    } else {
      out << std::setprecision(6) << t.val_loss;
    }
    out << (t.trial == tune.best_trial ? "  *" : "") << "\n";
  }
  out << std::setprecision(6);
}

int CmdTrain(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  CleanReport report;
  const auto frames = LoadCleanFrames(a.data, err, &report);
  out << "rows: " << report.rows_in << " read, " << report.rows_out
      << " clean (" << report.rows_dropped_sentinel << " sentinel, "
      << report.rows_dropped_nonnumeric << " non-numeric dropped)\n";
  if (frames.size() < kRecommendedRows) {
    err << "warning: " << frames.size() << " clean rows; at least "
        << kRecommendedRows
        << " (about 30 minutes at 1 Hz) are recommended, shorter windows "
           "tend to over-flag\n";
  }
  const PipelineResult result =
      RunTrainingPipeline(frames, ToPipelineOptions(a), a.model_dir);
  if (result.tune) PrintTrials(out, *result.tune);
  const HyperParams& p = result.params;
  out << "params: hidden_dim=" << p.hidden_dim << " batch_size="
      << p.batch_size << " learning_rate=" << p.learning_rate
      << " epochs=" << p.epochs << "\n";
  const TrainResult& train = *result.train;
  const EpochLoss& last = train.history.back();
  out << "epochs run: " << train.history.size()
      << (train.stopped_early ? " (early stop)" : "") << "\n"
      << "final train_loss: " << last.train_loss
      << "  val_loss: " << last.val_loss << "\n"
      << "best epoch: " << train.best_epoch
      << "  val_loss: " << train.best_val_loss << "\n"
      << "threshold: " << result.threshold.value << " (mean "
      << result.threshold.mean << " + 2 * std " << result.threshold.std
      << ", n=" << result.threshold.n << ")\n";
  PrintBundleFiles(out, result.files);
  return kExitOk;
}

struct TuneArgs {
  fs::path data;
  int trials = 10;
  std::uint64_t seed = 42;
  int patience = 5;
  double val_fraction = 0.10;
  int threads = 0;
  fs::path report;
};

int CmdTune(const TuneArgs& a, std::ostream& out, std::ostream& err) {
  const auto frames = LoadCleanFrames(a.data, err);
  if (frames.size() < kMinTrainingRows) {
    throw Error(ErrorKind::kInsufficientData,
                "insufficient data: " + std::to_string(frames.size()) +
                    " clean rows");
  }
  const ChannelScaler scaler = ChannelScaler::Fit(frames);
  const auto scaled = TransformAll(scaler, frames);
  TuneOptions options;
  options.n_trials = a.trials;
  options.seed = a.seed;
  options.patience = a.patience;
  options.val_fraction = a.val_fraction;
  options.threads = a.threads;
  const TuneResult result = Tune(scaled, options);
  PrintTrials(out, result);
  out << "best: trial " << result.best_trial << " hidden_dim="
      << result.best.hidden_dim << " batch_size=" << result.best.batch_size
      << " learning_rate=" << result.best.learning_rate
      << " epochs=" << result.best.epochs << "\n";
  if (!a.report.empty()) {
    WriteFileAtomically(a.report, TuneReportJson(result) + "\n");
    out << "report: " << a.report.string() << "\n";
  }
  return kExitOk;
}

// -------------------------------------------------------------------- eval

struct EvalArgs {
  fs::path model_dir;
  fs::path data;
  fs::path labels;
  fs::path json_out;
};

Metrics EvaluateBundle(const DetectorBundle& bundle, const fs::path& data,
                       const fs::path& labels_path, std::ostream& err) {
  const auto labels = ReadLabelsCsv(labels_path);
  if (labels.empty()) {
    throw Error(ErrorKind::kInvalidArgument,
                "labels file " + labels_path.string() + " is empty");
  }
  std::unordered_map<std::uint64_t, bool> by_seq;
  for (const LabelRecord& r : labels) {
    if (!by_seq.emplace(r.seq, r.label).second) {
      throw Error(ErrorKind::kInvalidArgument,
                  "duplicate seq " + std::to_string(r.seq) + " in labels");
    }
  }
  const auto frames = LoadCleanFrames(data, err);
  std::vector<bool> truth;
  std::vector<bool> predicted;
  truth.reserve(frames.size());
  predicted.reserve(frames.size());
  for (const SensorFrame& frame : frames) {
    const auto it = by_seq.find(frame.seq);
    if (it == by_seq.end()) {
      throw Error(ErrorKind::kInvalidArgument,
                  "label/stream mismatch: no label for seq " +
                      std::to_string(frame.seq));
    }
    truth.push_back(it->second);
    predicted.push_back(
        Classify(Score(bundle.model, bundle.scaler, frame), bundle.threshold)
            .is_anomaly);
  }
  if (truth.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "no clean rows to evaluate");
  }
  return Evaluate(truth, predicted);
}

int CmdEval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  const DetectorBundle bundle = LoadBundle(a.model_dir);
  const Metrics metrics = EvaluateBundle(bundle, a.data, a.labels, err);
  out << metrics.ToJson() << "\n";
  PrintMetricsTable(out, metrics);
  if (!a.json_out.empty()) WriteFileAtomically(a.json_out, metrics.ToJson() + "\n");
  return kExitOk;
}

// ------------------------------------------------------------------ export

struct ExportArgs {
  fs::path model_dir;
  fs::path out;
};

int CmdExport(const ExportArgs& a, std::ostream& out, std::ostream&) {
  const DetectorBundle bundle = LoadBundle(a.model_dir);
  const BundleFiles files =
      SaveBundle(a.out, bundle.model, bundle.scaler, bundle.threshold.value);
  out << "hidden_dim: " << bundle.model.hidden_dim()
      << "  parameters: " << bundle.model.parameter_count() << "\n";
  PrintBundleFiles(out, files);
  return kExitOk;
}

// ----------------------------------------------------------------- monitor

struct MonitorArgs {
  fs::path model_dir;
  fs::path csv;
  double interval = kDefaultIntervalSeconds;
  int alarm_n = kDefaultAlarmN;
  std::string bind = "127.0.0.1:8080";
  fs::path static_dir;
  fs::path retrain_dir;
  std::uint64_t from_row = 0;
  std::uint64_t max_cycles = 0;
  int retrain_threads = 0;
  bool no_http = false;
};

std::pair<std::string, int> ParseBind(const std::string& bind) {
  const auto colon = bind.rfind(':');
  int port = -1;
  if (colon != std::string::npos && colon > 0) {
    const std::string_view digits = std::string_view(bind).substr(colon + 1);
    const auto [ptr, ec] =
        std::from_chars(digits.data(), digits.data() + digits.size(), port);
    if (ec != std::errc() || ptr != digits.data() + digits.size()) port = -1;
  }
  if (port < 0 || port > 65535) {
    throw Error(ErrorKind::kInvalidArgument,
                "--bind expects HOST:PORT, got '" + bind + "'");
  }
  return {bind.substr(0, colon), port};
}

// Blocks SIGINT/SIGTERM for the process and turns delivery into a stop
// request. The previous mask is restored on destruction.
class SignalStopper {
 public:
  explicit SignalStopper(MonitorService& service) {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, &previous_);
    thread_ = std::jthread([&service, set](std::stop_token stop) {
      const timespec slice{0, 200'000'000};
      while (!stop.stop_requested()) {
        const int sig = sigtimedwait(&set, nullptr, &slice);
        if (sig == SIGINT || sig == SIGTERM) {
          spdlog::info("received signal {}, shutting down", sig);
          service.RequestStop();
          return;
        }
      }
    });
  }
  ~SignalStopper() {
    thread_.request_stop();
    thread_.join();
    pthread_sigmask(SIG_SETMASK, &previous_, nullptr);
  }

 private:
  sigset_t previous_{};
  std::jthread thread_;
};

int CmdMonitor(const MonitorArgs& a, std::ostream& out, std::ostream&) {
  ServiceConfig config;
  config.model_dir = a.model_dir;
  config.csv_path = a.csv;
  config.interval_s = a.interval;
  config.alarm_n = a.alarm_n;
  std::tie(config.host, config.port) = ParseBind(a.bind);
  config.static_dir = a.static_dir;
  config.retrain_root = a.retrain_dir;
  config.start_row = a.from_row;
  config.max_cycles = a.max_cycles;
  config.retrain_threads = a.retrain_threads;

  MonitorService service(config);
  SignalStopper stopper(service);
  if (!a.no_http) service.StartServer();
  service.Run();
  service.StopServer();
  service.WaitForRetrain();
  out << service.Snapshot().ToJson() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- pipeline

struct PipelineArgs {
  fs::path out_dir;
  std::size_t rows = 2000;
  std::size_t test_rows = 2000;
  int trials = 10;
  bool no_tune = false;
  std::uint64_t seed = 42;
  double anomaly_rate = 0.05;
  std::string magnitude = "0.02..0.03";
  int threads = 0;
};

int CmdPipeline(const PipelineArgs& a, std::ostream& out, std::ostream& err) {
  const fs::path train_csv = a.out_dir / "train.csv";
  const fs::path test_csv = a.out_dir / "test.csv";
  const fs::path labels_csv = a.out_dir / "test_labels.csv";
  const fs::path bundle_dir = a.out_dir / "bundle";
  const fs::path export_dir = a.out_dir / "export";

  GenerateArgs gen;
  gen.out = train_csv;
  gen.rows = a.rows;
  gen.seed = a.seed;
  out << "[generate] ";
  if (int rc = CmdGenerate(gen, out, err); rc != kExitOk) return rc;

  GenerateArgs test;
  test.out = test_csv;
  test.rows = a.test_rows;
  test.seed = a.seed + 1000;
  test.first_seq = a.rows;
  test.anomaly_rate = a.anomaly_rate;
  test.magnitude = a.magnitude;
  test.labels_out = labels_csv;
  out << "[generate] ";
  if (int rc = CmdGenerate(test, out, err); rc != kExitOk) return rc;

  TrainArgs train;
  train.data = train_csv;
  train.model_dir = bundle_dir;
  train.tune = !a.no_tune;
  train.trials = a.trials;
  train.seed = a.seed;
  train.threads = a.threads;
  out << "[train]\n";
  if (int rc = CmdTrain(train, out, err); rc != kExitOk) return rc;

  out << "[export]\n";
  if (int rc = CmdExport(ExportArgs{bundle_dir, export_dir}, out, err);
      rc != kExitOk) {
    return rc;
  }
  out << "[eval]\n";
  return CmdEval(EvalArgs{export_dir, test_csv, labels_csv, {}}, out, err);
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  ScopedLogger logger(err);
  CLI::App app{"Attention one-class autoencoder for liquid sensor streams",
               "ocae"};
  app.require_subcommand(1);
  app.fallthrough();
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "",
                 "JSON file supplying any flag (nested by subcommand); "
                 "command-line flags override it");
  app.get_formatter()->column_width(34);

  std::function<int()> action;

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Write a synthetic sensor CSV");
  generate->add_option("--out", gen.out, "Output CSV path")->required();
  generate->add_option("--rows", gen.rows, "Number of rows (>= 1)")
      ->capture_default_str();
  auto* rate_opt =
      generate->add_option("--rate-hz", gen.rate_hz, "Sample rate, 0.5..1 Hz")
          ->capture_default_str();
  generate->add_option("--seed", gen.seed, "RNG seed")->capture_default_str();
  generate->add_option("--generator-config", gen.generator_config,
                       "Generator JSON (built-in defaults when omitted)");
  generate->add_option("--first-seq", gen.first_seq, "seq of the first row")
      ->capture_default_str();
  generate->add_option("--anomaly-rate", gen.anomaly_rate,
                       "Fraction of rows to perturb, [0, 1)")
      ->capture_default_str();
  generate->add_option("--magnitude", gen.magnitude,
                       "Perturbation fraction or range lo..hi")
      ->capture_default_str();
  generate->add_option("--corruption-rate", gen.corruption_rate,
                       "Fraction of rows given a sentinel cell, [0, 1)")
      ->capture_default_str();
  generate->add_option("--labels-out", gen.labels_out,
                       "Write seq,label ground truth here");
  generate->add_flag("--protect-labels", gen.protect_labels,
                     "Never corrupt an anomalous row");
  generate->callback([&] {
    gen.rate_given = rate_opt->count() > 0;
    action = [&] { return CmdGenerate(gen, out, err); };
  });

  TrainArgs tr;
  auto add_train_common = [](CLI::App* sub, TrainArgs& t) {
    sub->add_option("--data", t.data, "Training CSV")->required();
    sub->add_option("--patience", t.patience, "Early-stopping patience (epochs)")
        ->capture_default_str();
    sub->add_option("--val-fraction", t.val_fraction,
                    "Validation split fraction")
        ->capture_default_str();
    sub->add_option("--seed", t.seed, "RNG seed")->capture_default_str();
    sub->add_option("--trials", t.trials, "Random-search trials")
        ->capture_default_str();
    sub->add_option("--threads", t.threads, "Tuner threads (0 = hardware)")
        ->capture_default_str();
  };
  auto* train = app.add_subcommand("train", "Train a detector bundle from a CSV");
  add_train_common(train, tr);
  train->add_option("--model-dir", tr.model_dir, "Bundle output directory")
      ->required();
  train->add_option("--hidden-dim", tr.hidden_dim, "Hidden width (even)")
      ->capture_default_str();
  train->add_option("--batch-size", tr.batch_size, "Mini-batch size")
      ->capture_default_str();
  train->add_option("--lr", tr.learning_rate, "Adam learning rate")
      ->capture_default_str();
  train->add_option("--epochs", tr.epochs, "Maximum epochs")
      ->capture_default_str();
  train->add_flag("--tune", tr.tune,
                  "Random-search hyperparameters first (ignores the four "
                  "above)");
  train->callback([&] { action = [&] { return CmdTrain(tr, out, err); }; });

  TuneArgs tu;
  auto* tune = app.add_subcommand("tune", "Random-search hyperparameters");
  tune->add_option("--data", tu.data, "Training CSV")->required();
  tune->add_option("--trials", tu.trials, "Number of trials")
      ->capture_default_str();
  tune->add_option("--seed", tu.seed, "RNG seed")->capture_default_str();
  tune->add_option("--patience", tu.patience, "Early-stopping patience")
      ->capture_default_str();
  tune->add_option("--val-fraction", tu.val_fraction,
                   "Validation split fraction")
      ->capture_default_str();
  tune->add_option("--threads", tu.threads, "Worker threads (0 = hardware)")
      ->capture_default_str();
  tune->add_option("--report", tu.report, "Write the trial report JSON here");
  tune->callback([&] { action = [&] { return CmdTune(tu, out, err); }; });

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Score a labelled CSV with a bundle");
  eval->add_option("--model-dir", ev.model_dir, "Bundle directory")->required();
  eval->add_option("--data", ev.data, "Sensor CSV")->required();
  eval->add_option("--labels", ev.labels, "seq,label CSV")->required();
  eval->add_option("--json-out", ev.json_out, "Also write metrics JSON here");
  eval->callback([&] { action = [&] { return CmdEval(ev, out, err); }; });

  ExportArgs ex;
  auto* exp = app.add_subcommand("export", "Re-save a bundle and report sizes");
  exp->add_option("--model-dir", ex.model_dir, "Source bundle")->required();
  exp->add_option("--out", ex.out, "Destination directory")->required();
  exp->callback([&] { action = [&] { return CmdExport(ex, out, err); }; });

  MonitorArgs mo;
  auto* monitor = app.add_subcommand("monitor", "Run the streaming monitor");
  monitor->add_option("--model-dir", mo.model_dir, "Bundle directory")
      ->required();
  monitor->add_option("--csv", mo.csv, "Sensor CSV to follow")->required();
  monitor->add_option("--interval", mo.interval, "Polling period, seconds")
      ->capture_default_str();
  monitor->add_option("--alarm-n", mo.alarm_n,
                      "Consecutive anomalous readings per alarm")
      ->capture_default_str();
  monitor->add_option("--bind", mo.bind, "HOST:PORT for REST and /stream")
      ->capture_default_str();
  monitor->add_option("--static-dir", mo.static_dir,
                      "Serve this directory at /");
  monitor->add_option("--retrain-dir", mo.retrain_dir,
                      "Parent of retrained bundles (default <model-dir>-retrain)");
  monitor->add_option("--from-row", mo.from_row,
                      "Treat this many data rows as already consumed")
      ->capture_default_str();
  monitor->add_option("--max-cycles", mo.max_cycles,
                      "Stop after this many polls (0 = run until signalled)")
      ->capture_default_str();
  monitor->add_option("--retrain-threads", mo.retrain_threads,
                      "Tuner threads for retrain jobs (0 = hardware)")
      ->capture_default_str();
  monitor->add_flag("--no-http", mo.no_http, "Do not start the HTTP server");
  monitor->callback([&] { action = [&] { return CmdMonitor(mo, out, err); }; });

  PipelineArgs pi;
  auto* pipeline = app.add_subcommand(
      "pipeline", "generate -> tune -> train -> export -> eval in one go");
  pipeline->add_option("--out-dir", pi.out_dir, "Working directory")
      ->required();
  pipeline->add_option("--rows", pi.rows, "Training rows")
      ->capture_default_str();
  pipeline->add_option("--test-rows", pi.test_rows, "Evaluation rows")
      ->capture_default_str();
  pipeline->add_option("--trials", pi.trials, "Random-search trials")
      ->capture_default_str();
  pipeline->add_flag("--no-tune", pi.no_tune,
                     "Train with fixed defaults instead of tuning");
  pipeline->add_option("--seed", pi.seed, "RNG seed")->capture_default_str();
  pipeline->add_option("--anomaly-rate", pi.anomaly_rate,
                       "Injected anomaly fraction in the test set")
      ->capture_default_str();
  pipeline->add_option("--magnitude", pi.magnitude,
                       "Perturbation fraction or range lo..hi")
      ->capture_default_str();
  pipeline->add_option("--threads", pi.threads, "Tuner threads")
      ->capture_default_str();
  pipeline->callback([&] { action = [&] { return CmdPipeline(pi, out, err); }; });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitData;
  }

  try {
    return action();
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return ExitCodeFor(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace ocae::cli
