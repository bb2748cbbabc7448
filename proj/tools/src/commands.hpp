#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <trackcull/trackcull.hpp>

namespace trackcull::app {

/// Flag values that parse but make no sense together. Exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GlobalOptions {
  unsigned threads = 0;  ///< 0 = available parallelism
  std::string log_level = "info";
  std::string output_dir;  ///< prefix for relative output paths
  std::vector<std::string> argv;
};

struct SimulateOptions {
  SimConfig sim;
  std::string output;
};

struct ExtractOptions {
  std::string events;
  std::string strategy = "closest";
  std::string mode = "training";
  std::uint64_t seed = 1;
  std::string output;
};

struct TrainOptions {
  std::string data;
  std::string model = "mlp";
  std::string output;
  std::uint64_t seed = 1;
  MlpHyperparams mlp;
  ErtHyperparams ert;
  std::optional<std::size_t> max_depth;
};

struct EvaluateOptions {
  std::string model;
  std::string data;
  std::string output;
  std::string train_manifest;
  double threshold = 0.5;
  std::size_t latency_repetitions = 5;
  std::size_t latency_rows = 2000;
};

struct BenchmarkOptions {
  std::string events;
  std::string model;
  std::string json_output;
  std::string csv_output;
  double threshold = 0.5;
  bool no_fallback = false;
  std::size_t bins = 10;
  double p_min = 0.5;
  double p_max = 10.0;
  double wire_sigma = 0.3;
  std::optional<double> chi2_cut;
  double curvature_scale = 8.0;
  std::size_t kalman_passes = FitConfig{}.kalman_passes;
  std::size_t propagation_steps = FitConfig{}.propagation_steps;
  std::size_t repeats = 3;
};

struct StudyOptions {
  std::string events;
  std::string out_dir;
  double test_fraction = 0.25;
  double threshold = 0.5;
  std::uint64_t seed = 1;
  MlpHyperparams mlp;
};

void cmd_simulate(const GlobalOptions& global, const SimulateOptions& options, std::ostream& out);
void cmd_extract(const GlobalOptions& global, const ExtractOptions& options, std::ostream& out);
void cmd_train(const GlobalOptions& global, const TrainOptions& options, std::ostream& out);
void cmd_evaluate(const GlobalOptions& global, const EvaluateOptions& options, std::ostream& out);
void cmd_benchmark(const GlobalOptions& global, const BenchmarkOptions& options, std::ostream& out);
void cmd_study(const GlobalOptions& global, const StudyOptions& options, std::ostream& out);

}  // namespace trackcull::app
