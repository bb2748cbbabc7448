#include "app.hpp"

#include <algorithm>
#include <iostream>
#include <memory>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"
#include "manifest.hpp"

namespace trackcull::app {

namespace {

void configure_logging(const std::string& level) {
  static const bool installed = [] {
    auto logger = std::make_shared<spdlog::logger>("trackcull", std::make_shared<spdlog::sinks::stderr_sink_mt>());
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    return true;
  }();
  (void)installed;
  spdlog::set_level(spdlog::level::from_str(level));
}

void add_mlp_flags(CLI::App& cmd, MlpHyperparams& hp) {
  cmd.add_option("--hidden", hp.hidden_layers, "Hidden layer widths, comma separated")
      ->delimiter(',')
      ->capture_default_str();
  cmd.add_option("--batch-size", hp.batch_size, "Mini-batch size")->capture_default_str()->check(CLI::PositiveNumber);
  cmd.add_option("--lr", hp.initial_lr, "Initial Adam learning rate")->capture_default_str();
  cmd.add_option("--beta1", hp.adam_beta1, "Adam beta1")->capture_default_str();
  cmd.add_option("--beta2", hp.adam_beta2, "Adam beta2")->capture_default_str();
  cmd.add_option("--adam-eps", hp.adam_eps, "Adam epsilon")->capture_default_str();
  cmd.add_option("--max-epochs", hp.max_epochs, "Upper bound on training epochs")->capture_default_str();
  cmd.add_option("--lr-patience", hp.lr_patience, "Epochs without improvement before the rate drops")
      ->capture_default_str();
  cmd.add_option("--lr-factor", hp.lr_factor, "Learning rate multiplier on plateau")->capture_default_str();
  cmd.add_option("--min-lr", hp.min_lr, "Training stops once the rate falls below this")->capture_default_str();
}

const std::vector<std::string> kStrategies{"closest", "random", "least-likely"};
const std::vector<std::string> kModes{"training", "evaluation"};
const std::vector<std::string> kLogLevels{"trace", "debug", "info", "warn", "error", "critical", "off"};

int replay(const std::string& manifest_path, std::ostream& out, std::ostream& err) {
  const Manifest manifest = read_manifest(manifest_path);
  if (manifest.argv.empty() || manifest.command == "replay" ||
      std::find(manifest.argv.begin(), manifest.argv.end(), "replay") != manifest.argv.end()) {
    throw UsageError("manifest " + manifest_path + " does not record a replayable command");
  }
  spdlog::info("replaying {}", manifest.command);
  return run(manifest.argv, out, err);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  GlobalOptions global;
  global.argv = args;

  CLI::App app{"Track-candidate classification and reconstruction benchmark toolkit", "trackcull"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(kVersion));
  app.add_option("--threads", global.threads, "Worker threads, 0 = all cores (timing runs use one)")
      ->capture_default_str();
  app.add_option("--log-level", global.log_level, "Log verbosity on stderr")
      ->capture_default_str()
      ->check(CLI::IsMember(kLogLevels));
  app.add_option("--output-dir", global.output_dir, "Directory prefixed to relative output paths");

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Generate synthetic labeled events (JSONL)");
  simulate->add_option("--events", sim.sim.n_events, "Number of events")->required()->check(CLI::NonNegativeNumber);
  simulate->add_option("--seed", sim.sim.seed, "Generator seed")->capture_default_str();
  simulate->add_option("--noise-mean", sim.sim.noise_mean, "Poisson mean of noise clusters per super-layer")
      ->capture_default_str();
  simulate->add_option("--tracks-per-event", sim.sim.tracks_per_event, "Truth tracks per event")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  simulate->add_option("--p-min", sim.sim.p_min, "Minimum momentum, GeV")->capture_default_str();
  simulate->add_option("--p-max", sim.sim.p_max, "Maximum momentum, GeV")->capture_default_str();
  simulate->add_option("--curvature-scale", sim.sim.curvature_scale, "Curvature scale, wires*GeV")
      ->capture_default_str();
  simulate->add_option("--wire-sigma", sim.sim.wire_noise_sigma, "Gaussian wire resolution")->capture_default_str();
  simulate->add_option("-o,--output", sim.output, "Output event file")->required();

  ExtractOptions ext;
  auto* extract = app.add_subcommand("extract", "Build a labeled dataset CSV from events");
  extract->add_option("--events", ext.events, "Input event file")->required()->check(CLI::ExistingFile);
  extract->add_option("--strategy", ext.strategy, "Negative sample strategy")
      ->capture_default_str()
      ->check(CLI::IsMember(kStrategies));
  extract->add_option("--mode", ext.mode, "training: one negative per track; evaluation: all candidates")
      ->capture_default_str()
      ->check(CLI::IsMember(kModes));
  extract->add_option("--seed", ext.seed, "Seed for the random strategy")->capture_default_str();
  extract->add_option("-o,--output", ext.output, "Output dataset CSV")->required();

  TrainOptions tr;
  auto* train = app.add_subcommand("train", "Train a classifier on a dataset CSV");
  train->add_option("--data", tr.data, "Training dataset CSV")->required()->check(CLI::ExistingFile);
  train->add_option("--model", tr.model, "Model kind")->capture_default_str()->check(CLI::IsMember({"mlp", "ert"}));
  train->add_option("--seed", tr.seed, "Training seed")->capture_default_str();
  train->add_option("-o,--output", tr.output, "Output model JSON")->required();
  add_mlp_flags(*train, tr.mlp);
  train->add_option("--estimators", tr.ert.n_estimators, "ERT: number of trees")->capture_default_str();
  train->add_option("--features-per-split", tr.ert.features_per_split, "ERT: candidate features per node")
      ->capture_default_str();
  train->add_option("--min-samples-split", tr.ert.min_samples_split, "ERT: smallest node that may split")
      ->capture_default_str();
  train->add_option_function<std::size_t>(
      "--max-depth", [&tr](const std::size_t& depth) { tr.max_depth = depth; }, "ERT: depth limit (default none)");

  EvaluateOptions ev;
  auto* evaluate = app.add_subcommand("evaluate", "Score an evaluation dataset and report A1/Ac/Ah/Af");
  evaluate->add_option("--model", ev.model, "Model JSON")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--data", ev.data, "Evaluation dataset CSV")->required()->check(CLI::ExistingFile);
  evaluate->add_option("-o,--output", ev.output, "Report JSON")->required();
  evaluate->add_option("--threshold", ev.threshold, "Decision threshold on p_valid")->capture_default_str();
  evaluate->add_option("--latency-reps", ev.latency_repetitions, "Timed passes for the latency measurement")
      ->capture_default_str();
  evaluate->add_option("--latency-rows", ev.latency_rows, "Rows per latency pass, 0 disables")
      ->capture_default_str();
  evaluate->add_option("--train-manifest", ev.train_manifest, "Manifest of the training run, for Time to Train")
      ->check(CLI::ExistingFile);

  BenchmarkOptions bm;
  auto* benchmark = app.add_subcommand("benchmark", "Compare conventional and AI-assisted reconstruction");
  benchmark->add_option("--events", bm.events, "Input event file")->required()->check(CLI::ExistingFile);
  benchmark->add_option("--model", bm.model, "Model JSON")->required()->check(CLI::ExistingFile);
  benchmark->add_option("-o,--json", bm.json_output, "Efficiency report JSON")->required();
  benchmark->add_option("--csv", bm.csv_output, "Per-bin efficiency ratio CSV");
  benchmark->add_option("--threshold", bm.threshold, "Decision threshold on p_valid")->capture_default_str();
  benchmark->add_flag("--no-fallback", bm.no_fallback, "Do not fit the best candidate when none pass");
  benchmark->add_option("--bins", bm.bins, "Momentum bins")->capture_default_str()->check(CLI::PositiveNumber);
  benchmark->add_option("--p-min", bm.p_min, "Lowest bin edge, GeV")->capture_default_str();
  benchmark->add_option("--p-max", bm.p_max, "Highest bin edge, GeV")->capture_default_str();
  benchmark->add_option("--wire-sigma", bm.wire_sigma, "Wire resolution; chi2 cut = 3*sigma^2")
      ->capture_default_str();
  benchmark->add_option_function<double>(
      "--chi2-cut", [&bm](const double& cut) { bm.chi2_cut = cut; }, "Explicit chi2 cut");
  benchmark->add_option("--curvature-scale", bm.curvature_scale, "Momentum = scale / |curvature|")
      ->capture_default_str();
  benchmark->add_option("--kalman-passes", bm.kalman_passes, "Refinement passes per fit")->capture_default_str();
  benchmark->add_option("--propagation-steps", bm.propagation_steps, "Sub-steps between super-layers")
      ->capture_default_str();
  benchmark->add_option("--repeats", bm.repeats, "Timed repetitions; the median is reported")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  StudyOptions st;
  auto* study = app.add_subcommand("study", "Train one MLP per negative strategy and cross-evaluate");
  study->add_option("--events", st.events, "Labeled event file")->required()->check(CLI::ExistingFile);
  study->add_option("--out-dir", st.out_dir, "Directory for models, confusion matrices and study.json")
      ->required();
  study->add_option("--test-fraction", st.test_fraction, "Fraction of events held out")->capture_default_str();
  study->add_option("--threshold", st.threshold, "Decision threshold on p_valid")->capture_default_str();
  study->add_option("--seed", st.seed, "Split and training seed")->capture_default_str();
  add_mlp_flags(*study, st.mlp);

  std::string manifest_path;
  auto* replay_cmd = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  replay_cmd->add_option("manifest", manifest_path, "Manifest JSON")->required()->check(CLI::ExistingFile);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    configure_logging(global.log_level);
    if (simulate->parsed()) cmd_simulate(global, sim, out);
    if (extract->parsed()) cmd_extract(global, ext, out);
    if (train->parsed()) {
      tr.ert.max_depth = tr.max_depth;
      cmd_train(global, tr, out);
    }
    if (evaluate->parsed()) cmd_evaluate(global, ev, out);
    if (benchmark->parsed()) cmd_benchmark(global, bm, out);
    if (study->parsed()) cmd_study(global, st, out);
    if (replay_cmd->parsed()) return replay(manifest_path, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInternal;
  }
  return kOk;
}

}  // namespace trackcull::app
