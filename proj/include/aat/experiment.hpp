#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "aat/metrics.hpp"
#include "aat/teacher_student.hpp"
#include "json.hpp"

namespace aat {

struct DataConfig {
  std::string dir;  // empty: <output_dir>/data
  SceneSpec scene;
  std::vector<int> minority_classes;
  int source_train = 2000;
  int target_train = 2000;
  int target_test = 500;
  DomainConfig target;
  int workers = 1;
};

struct ExperimentConfig {
  std::uint64_t seed = 7;
  std::string output_dir = "runs";
  DataConfig data;
  DetectorConfig model;
  TrainConfig train;
  int eval_every = 100;
  int checkpoint_every = 0;  // 0: final checkpoint only
  double eval_score_threshold = 0.05;

  std::vector<std::string> class_names() const;
  std::filesystem::path data_dir() const;
};

// The benchmark used throughout: circle, square, ring, diamond with a 10:1
// frequency imbalance and a mild hazy/striped target domain.
ExperimentConfig default_experiment();

// Missing keys keep their defaults; unknown keys are rejected with their path.
ExperimentConfig experiment_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& config);
void validate(const ExperimentConfig& config);

std::string hash_hex(const std::string& bytes);

// Identity of the whole run: hash of the canonical config JSON (seed included).
std::string experiment_id(const ExperimentConfig& config);
// Identity of the generated data: hash of the data section and the seed.
std::string dataset_id(const ExperimentConfig& config);
// Identity of the burn-in result, shared by every mode.
std::string burn_in_id(const ExperimentConfig& config);

// Short run name: mode plus ablation and beta suffixes.
std::string run_label(const ExperimentConfig& config);

struct Datasets {
  Split source_train;
  Split target_train;
  Split target_test;
};

Datasets generate_datasets(const ExperimentConfig& config);
void save_datasets(const Datasets& data, const std::filesystem::path& dir, const std::string& id);
// Throws ConfigError when a split is missing or was generated from a
// different data configuration.
Datasets load_datasets(const std::filesystem::path& dir, const std::string& expected_id);

struct EvalPoint {
  long iteration = 0;
  EvalReport report;
};

struct RunResult {
  std::string label;
  std::string experiment;
  TrainState state;
  std::vector<EvalPoint> curve;
  double seconds = 0;
};

struct RunHooks {
  std::function<void(const TrainState&, const LossReport&)> on_step;
  std::function<void(const EvalPoint&)> on_eval;
};

Trainer make_trainer(const ExperimentConfig& config);

EvalReport evaluate_params(const Trainer& trainer, const ParameterSet<float>& params, const Split& split,
                           const ExperimentConfig& config);

// Adapts `start` (a burned-in state) for train.adapt_steps, evaluating the
// teacher on target_test every eval_every steps and at the end.
RunResult run_adaptation(const ExperimentConfig& config, const Datasets& data, TrainState start,
                         const RunHooks& hooks = {});

// Learning-curve CSV columns: iteration,map,minority_ap,ap_<class>...
void write_eval_header(std::ostream& out, const ExperimentConfig& config);
void write_eval_row(std::ostream& out, const EvalPoint& point);

struct CurveRow {
  long iteration = 0;
  double map = 0;
  std::optional<double> minority_ap;
};

struct RunCurve {
  std::string label;
  std::string experiment;
  std::vector<CurveRow> rows;
};

RunCurve read_eval_log(const std::filesystem::path& path);

struct ReportRow {
  std::string label;
  double final_map = 0;
  std::optional<double> minority_ap;
  std::optional<double> gain;  // final_map - mt-baseline final_map
};

// Runs ordered by label, beta sweeps numerically.
std::vector<RunCurve> sort_runs(std::vector<RunCurve> runs);
std::vector<ReportRow> summarize(const std::vector<RunCurve>& runs);
void write_learning_curves(std::ostream& out, const std::vector<RunCurve>& runs);
std::string format_report(const std::vector<ReportRow>& rows);

}  // namespace aat
