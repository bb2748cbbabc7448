#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include <trackcull/parallel.hpp>

#include "manifest.hpp"

namespace trackcull::app {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(Clock::now() - start_).count(); }

 private:
  using Clock = std::chrono::steady_clock;
  Clock::time_point start_ = Clock::now();
};

fs::path resolve_output(const GlobalOptions& global, const std::string& output) {
  fs::path path(output);
  if (!global.output_dir.empty() && path.is_relative()) path = fs::path(global.output_dir) / path;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  return path;
}

template <typename Fn>
void validate_flags(Fn&& fn) {
  try {
    fn();
  } catch (const ValidationError& e) {
    throw UsageError(e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

Manifest start_manifest(const GlobalOptions& global, std::string command) {
  Manifest manifest;
  manifest.command = std::move(command);
  manifest.argv = global.argv;
  return manifest;
}

json mlp_config(const MlpHyperparams& hp) {
  return {{"hidden_layers", hp.hidden_layers}, {"batch_size", hp.batch_size}, {"initial_lr", hp.initial_lr},
          {"adam_beta1", hp.adam_beta1},       {"adam_beta2", hp.adam_beta2}, {"adam_eps", hp.adam_eps},
          {"max_epochs", hp.max_epochs},       {"lr_patience", hp.lr_patience}, {"lr_factor", hp.lr_factor},
          {"min_lr", hp.min_lr},               {"seed", hp.seed}};
}

json ert_config(const ErtHyperparams& hp) {
  return {{"n_estimators", hp.n_estimators},
          {"criterion", "entropy"},
          {"features_per_split", hp.features_per_split},
          {"min_samples_split", hp.min_samples_split},
          {"max_depth", hp.max_depth ? json(*hp.max_depth) : json(nullptr)},
          {"seed", hp.seed}};
}

json confusion_json(const ConfusionMatrix& m) {
  return {{"tn", m[0][0]}, {"fp", m[0][1]}, {"fn", m[1][0]}, {"tp", m[1][1]}};
}

std::string confusion_csv(const ConfusionMatrix& m) {
  return "actual,predicted_invalid,predicted_valid\ninvalid," + std::to_string(m[0][0]) + "," +
         std::to_string(m[0][1]) + "\nvalid," + std::to_string(m[1][0]) + "," + std::to_string(m[1][1]) + "\n";
}

std::optional<double> training_accuracy_of(const Classifier& model) {
  if (const auto* mlp = dynamic_cast<const MlpModel*>(&model)) return mlp->training_info().training_accuracy;
  if (const auto* ert = dynamic_cast<const ErtModel*>(&model)) return ert->training_info().training_accuracy;
  return std::nullopt;
}

MlpModel train_mlp_logged(const Dataset& data, const MlpHyperparams& hp, const std::string& tag) {
  return mlp_train(data, hp, [&tag](const EpochStats& s) {
    spdlog::debug("{}epoch {} loss {:.6f} lr {:.2e}", tag, s.epoch, s.loss, s.lr);
  });
}

}  // namespace

void cmd_simulate(const GlobalOptions& global, const SimulateOptions& options, std::ostream& out) {
  validate_flags([&] { options.sim.validate(); });
  const fs::path output = resolve_output(global, options.output);
  const auto& c = options.sim;

  Stopwatch clock;
  const SampleSetSummary summary = generate_sample_set(c, output, global.threads);
  const double seconds = clock.seconds();

  Manifest manifest = start_manifest(global, "simulate");
  manifest.config = {{"events", c.n_events},          {"seed", c.seed},
                     {"noise_mean", c.noise_mean},    {"tracks_per_event", c.tracks_per_event},
                     {"p_min", c.p_min},              {"p_max", c.p_max},
                     {"curvature_scale", c.curvature_scale}, {"wire_noise_sigma", c.wire_noise_sigma}};
  manifest.outputs = {output.string()};
  manifest.timing = {{"wall_seconds", seconds}, {"threads", global.threads}};
  write_manifest(manifest, manifest_path_for(output));

  json doc = {{"events", summary.events}, {"mean_candidates", summary.mean_candidates}, {"output", output.string()}};
  out << doc.dump() << "\n";
  spdlog::info("wrote {} events to {} in {:.2f} s", summary.events, output.string(), seconds);
}

void cmd_extract(const GlobalOptions& global, const ExtractOptions& options, std::ostream& out) {
  const auto strategy = parse_strategy(options.strategy);
  const auto mode = parse_mode(options.mode);
  if (!strategy) throw UsageError("unknown strategy " + options.strategy);
  if (!mode) throw UsageError("unknown mode " + options.mode);
  const fs::path output = resolve_output(global, options.output);

  Stopwatch clock;
  const auto events = read_events(options.events);
  const ExtractionResult result = extract_dataset(events, *strategy, *mode, options.seed, global.threads);
  write_dataset(result.dataset, output);
  const double seconds = clock.seconds();

  const ExtractionReport& r = result.report;
  json doc = {{"strategy", to_string(*strategy)},
              {"mode", to_string(*mode)},
              {"samples", r.samples},
              {"rows", r.rows},
              {"valid_rows", r.valid_rows},
              {"invalid_rows", r.invalid_rows},
              {"skipped",
               {{"no_truth", r.skipped_no_truth},
                {"incomplete", r.skipped_incomplete},
                {"no_negative", r.skipped_no_negative},
                {"multi_track", r.skipped_multi_track}}}};

  Manifest manifest = start_manifest(global, "extract");
  manifest.config = {{"strategy", to_string(*strategy)}, {"mode", to_string(*mode)}, {"seed", options.seed}};
  manifest.inputs = {options.events};
  manifest.outputs = {output.string()};
  manifest.timing = {{"wall_seconds", seconds}, {"threads", global.threads}};
  write_manifest(manifest, manifest_path_for(output));

  out << doc.dump() << "\n";
  spdlog::info("{} rows ({} valid, {} invalid) from {} samples, {} events skipped", r.rows, r.valid_rows,
               r.invalid_rows, r.samples, r.skipped());
}

void cmd_train(const GlobalOptions& global, const TrainOptions& options, std::ostream& out) {
  const fs::path output = resolve_output(global, options.output);
  Manifest manifest = start_manifest(global, "train");
  manifest.inputs = {options.data};
  manifest.outputs = {output.string()};

  const Dataset data = read_dataset(options.data);
  if (data.empty()) throw ValidationError(options.data + " holds no rows");
  json doc = {{"model", options.model}, {"rows", data.rows.size()}};

  double seconds = 0.0;
  if (options.model == "mlp") {
    MlpHyperparams hp = options.mlp;
    hp.seed = options.seed;
    validate_flags([&] { hp.validate(); });
    Stopwatch clock;
    const MlpModel model = train_mlp_logged(data, hp, "");
    seconds = clock.seconds();
    save_model(model, output);
    manifest.config = {{"model", "mlp"}, {"hyperparams", mlp_config(hp)}};
    doc["training_accuracy"] = model.training_info().training_accuracy;
    doc["epochs_run"] = model.training_info().epochs_run;
    doc["final_loss"] = model.training_info().final_loss;
  } else {
    ErtHyperparams hp = options.ert;
    hp.seed = options.seed;
    validate_flags([&] { hp.validate(); });
    Stopwatch clock;
    const ErtModel model = ert_train(data, hp, global.threads);
    seconds = clock.seconds();
    save_model(model, output);
    manifest.config = {{"model", "ert"}, {"hyperparams", ert_config(hp)}};
    doc["training_accuracy"] = model.training_info().training_accuracy;
    doc["total_nodes"] = model.training_info().total_nodes;
  }
  manifest.timing = {{"train_seconds", seconds}, {"threads", global.threads}};
  write_manifest(manifest, manifest_path_for(output));

  out << doc.dump() << "\n";
  spdlog::info("trained {} on {} rows in {:.2f} s", options.model, data.rows.size(), seconds);
}

void cmd_evaluate(const GlobalOptions& global, const EvaluateOptions& options, std::ostream& out) {
  if (!(options.threshold >= 0.0 && options.threshold <= 1.0)) throw UsageError("--threshold must lie in [0, 1]");
  if (options.latency_rows > 0 && options.latency_repetitions < 3) {
    throw UsageError("--latency-reps must be at least 3");
  }
  const fs::path output = resolve_output(global, options.output);

  Stopwatch clock;
  const auto model = load_model(options.model);
  const Dataset data = read_dataset(options.data);
  EvalOptions eval_options;
  eval_options.threshold = options.threshold;
  eval_options.latency_repetitions = options.latency_repetitions;
  eval_options.latency_rows = options.latency_rows;
  eval_options.threads = global.threads;
  const EvalReport report = evaluate(*model, data, eval_options);

  TableExtras extras;
  extras.training_accuracy = training_accuracy_of(*model);
  if (!options.train_manifest.empty()) {
    const Manifest train = read_manifest(options.train_manifest);
    if (train.timing.contains("train_seconds")) extras.train_seconds = train.timing["train_seconds"].get<double>();
  }
  write_text(output, report_to_json(report));
  const double seconds = clock.seconds();

  Manifest manifest = start_manifest(global, "evaluate");
  manifest.config = {{"model_kind", std::string(model->kind())},
                     {"threshold", options.threshold},
                     {"latency_repetitions", options.latency_repetitions},
                     {"latency_rows", options.latency_rows}};
  manifest.inputs = {options.model, options.data};
  manifest.outputs = {output.string()};
  manifest.timing = {{"wall_seconds", seconds}, {"threads", global.threads}};
  write_manifest(manifest, manifest_path_for(output));

  out << report_table(report, extras) << "\n" << confusion_table(report.confusion);
}

void cmd_benchmark(const GlobalOptions& global, const BenchmarkOptions& options, std::ostream& out) {
  if (!(options.threshold >= 0.0 && options.threshold <= 1.0)) throw UsageError("--threshold must lie in [0, 1]");
  std::vector<double> edges;
  validate_flags([&] { edges = uniform_bin_edges(options.p_min, options.p_max, options.bins); });
  const fs::path json_output = resolve_output(global, options.json_output);
  const fs::path csv_output = options.csv_output.empty() ? fs::path{} : resolve_output(global, options.csv_output);

  FitConfig fit = FitConfig::for_wire_sigma(options.wire_sigma, options.curvature_scale);
  if (options.chi2_cut) fit.chi2_cut = *options.chi2_cut;
  fit.kalman_passes = options.kalman_passes;
  fit.propagation_steps = options.propagation_steps;
  AiOptions ai_options;
  ai_options.threshold = options.threshold;
  ai_options.fallback = !options.no_fallback;

  const auto events = read_events(options.events);
  const auto model = load_model(options.model);
  if (global.threads > 1) spdlog::info("timing runs are single-threaded; --threads ignored");

  // Interleave the two paths so drifting machine load hits both alike.
  RecoOutput conventional;
  RecoOutput assisted;
  std::vector<double> conv_times;
  std::vector<double> ai_times;
  for (std::size_t r = 0; r < options.repeats; ++r) {
    RecoOutput c = run_conventional(events, fit, 1);
    RecoOutput a = run_ai_assisted(events, *model, ai_options, fit, 1);
    conv_times.push_back(c.wall_seconds);
    ai_times.push_back(a.wall_seconds);
    spdlog::debug("repeat {}: conventional {:.3f} s, ai {:.3f} s", r + 1, c.wall_seconds, a.wall_seconds);
    if (r == 0) {
      conventional = std::move(c);
      assisted = std::move(a);
    }
  }
  const auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  conventional.wall_seconds = median(conv_times);
  assisted.wall_seconds = median(ai_times);

  const EfficiencyReport report = compare(assisted, conventional, events, edges);
  write_text(json_output, efficiency_json(report));
  if (!csv_output.empty()) write_text(csv_output, efficiency_csv(report));

  Manifest manifest = start_manifest(global, "benchmark");
  manifest.config = {{"model_kind", std::string(model->kind())},
                     {"threshold", options.threshold},
                     {"fallback", ai_options.fallback},
                     {"bin_edges", edges},
                     {"chi2_cut", fit.chi2_cut},
                     {"curvature_scale", fit.curvature_scale},
                     {"kalman_passes", fit.kalman_passes},
                     {"propagation_steps", fit.propagation_steps},
                     {"repeats", options.repeats}};
  manifest.inputs = {options.events, options.model};
  manifest.outputs = {json_output.string()};
  if (!csv_output.empty()) manifest.outputs.push_back(csv_output.string());
  manifest.timing = {{"conventional_seconds", report.conventional_seconds},
                     {"ai_seconds", report.ai_seconds},
                     {"speedup", report.speedup},
                     {"threads", 1}};
  write_manifest(manifest, manifest_path_for(json_output));

  char line[256];
  std::snprintf(line, sizeof line, "speedup %.2fx (conventional %.3f s, AI-assisted %.3f s, threads %u)\n",
                report.speedup, report.conventional_seconds, report.ai_seconds, report.threads);
  out << line;
  std::snprintf(line, sizeof line,
                "candidates/event %.2f, fits %zu -> %zu (reduction %.2fx), efficiency %.4f -> %.4f\n",
                report.mean_candidates, report.conventional_fits, report.ai_fits, report.candidate_reduction,
                report.conventional_efficiency, report.ai_efficiency);
  out << line << efficiency_csv(report);
}

void cmd_study(const GlobalOptions& global, const StudyOptions& options, std::ostream& out) {
  if (!(options.test_fraction > 0.0 && options.test_fraction < 1.0)) {
    throw UsageError("--test-fraction must lie in (0, 1)");
  }
  MlpHyperparams hp = options.mlp;
  hp.seed = options.seed;
  validate_flags([&] { hp.validate(); });
  const fs::path dir = resolve_output(global, options.out_dir);
  fs::create_directories(dir);

  const auto events = read_events(options.events);
  const std::array<NegativeStrategy, 3> strategies{NegativeStrategy::ClosestNeighbor, NegativeStrategy::Random,
                                                   NegativeStrategy::LeastLikely};
  std::array<Dataset, 3> extracted;
  for (std::size_t s = 0; s < strategies.size(); ++s) {
    extracted[s] = extract_dataset(events, strategies[s], ExtractionMode::Training, options.seed, global.threads).dataset;
  }

  // Hold out the same events for every strategy; the test rows use closest-neighbor negatives.
  const auto [closest_train, test] = split_dataset(extracted[0], options.test_fraction, options.seed);
  std::set<EventId> test_ids;
  for (const auto& row : test.rows) test_ids.insert(row.event_id);
  std::array<Dataset, 3> train_sets;
  train_sets[0] = closest_train;
  for (std::size_t s = 1; s < strategies.size(); ++s) {
    for (const auto& row : extracted[s].rows) {
      if (!test_ids.contains(row.event_id)) train_sets[s].rows.push_back(row);
    }
  }
  spdlog::info("study: {} test samples, {} training rows per strategy", test_ids.size(), train_sets[0].rows.size());

  std::array<MlpModel, 3> models;
  std::array<double, 3> train_seconds{};
  parallel_for(strategies.size(), global.threads == 0 ? default_threads() : global.threads, [&](std::size_t s) {
    Stopwatch clock;
    models[s] = train_mlp_logged(train_sets[s], hp, std::string(to_string(strategies[s])) + ": ");
    train_seconds[s] = clock.seconds();
  });

  json doc;
  doc["test_strategy"] = to_string(NegativeStrategy::ClosestNeighbor);
  doc["test_samples"] = test_ids.size();
  doc["test_rows"] = test.rows.size();
  doc["threshold"] = options.threshold;
  json entries = json::array();
  json timing = json::object();
  std::vector<std::string> outputs;
  std::ostringstream tables;
  std::ostringstream cross;
  char line[256];
  std::snprintf(line, sizeof line, "%-14s %8s %8s %8s %8s %9s %6s %6s\n", "trained on", "A1", "Ac", "Ah", "Af",
                "accuracy", "FP", "FN");
  cross << line;
  for (std::size_t s = 0; s < strategies.size(); ++s) {
    const std::string name(to_string(strategies[s]));
    const EvalReport report = compute_metrics(test, score_rows(models[s], test, global.threads), options.threshold);

    const fs::path model_path = dir / ("mlp_" + name + ".json");
    const fs::path confusion_path = dir / ("confusion_" + name + ".csv");
    save_model(models[s], model_path);
    write_text(confusion_path, confusion_csv(report.confusion));
    outputs.push_back(model_path.string());
    outputs.push_back(confusion_path.string());

    entries.push_back({{"trained_on", name},
                       {"train_rows", train_sets[s].rows.size()},
                       {"training_accuracy", models[s].training_info().training_accuracy},
                       {"epochs_run", models[s].training_info().epochs_run},
                       {"accuracy", report.accuracy},
                       {"a1", report.a1},
                       {"ac", report.ac},
                       {"ah", report.ah},
                       {"af", report.af},
                       {"confusion", confusion_json(report.confusion)}});
    timing[name + "_train_seconds"] = train_seconds[s];

    tables << "Trained on " << name << " negatives, tested on closest-neighbor pairs\n"
           << confusion_table(report.confusion) << "\n";
    std::snprintf(line, sizeof line, "%-14s %7.2f%% %7.2f%% %7.2f%% %7.2f%% %8.2f%% %6llu %6llu\n", name.c_str(),
                  100.0 * report.a1, 100.0 * report.ac, 100.0 * report.ah, 100.0 * report.af,
                  100.0 * report.accuracy, static_cast<unsigned long long>(report.confusion[0][1]),
                  static_cast<unsigned long long>(report.confusion[1][0]));
    cross << line;
  }
  doc["models"] = std::move(entries);
  const fs::path study_path = dir / "study.json";
  write_text(study_path, doc.dump(2) + "\n");
  outputs.insert(outputs.begin(), study_path.string());

  Manifest manifest = start_manifest(global, "study");
  manifest.config = {{"test_fraction", options.test_fraction},
                     {"threshold", options.threshold},
                     {"seed", options.seed},
                     {"hyperparams", mlp_config(hp)}};
  manifest.inputs = {options.events};
  manifest.outputs = outputs;
  manifest.timing = timing;
  manifest.timing["threads"] = global.threads;
  write_manifest(manifest, manifest_path_for(study_path));

  out << tables.str() << cross.str();
}

}  // namespace trackcull::app
