#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "aat/apr.hpp"
#include "aat/attack.hpp"
#include "aat/cli.hpp"
#include "aat/errors.hpp"
#include "aat/experiment.hpp"
#include "aat/log.hpp"

namespace aat {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string data;
};

ExperimentConfig resolve_config(const CommonArgs& a) {
  ExperimentConfig cfg = a.config.empty() ? default_experiment() : load_experiment(a.config);
  if (a.seed) cfg.seed = *a.seed;
  if (!a.out.empty()) cfg.output_dir = a.out;
  if (!a.data.empty()) cfg.data.dir = a.data;
  validate(cfg);
  return cfg;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

void save_checkpoint_atomic(const Checkpoint& ckpt, const fs::path& path) {
  const fs::path tmp = path.string() + ".tmp";
  save_checkpoint(ckpt, tmp);
  fs::rename(tmp, path);
}

std::string beta_text(double beta255) {
  std::ostringstream os;
  os << beta255;
  return os.str();
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      if (used != item.size() || !(v >= 0) || !std::isfinite(v)) throw std::invalid_argument(item);
      grid.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError("--beta-grid: '" + item + "' is not a non-negative number");
    }
  }
  if (grid.empty()) throw ConfigError("--beta-grid: empty grid");
  return grid;
}

// ---------------------------------------------------------------- gen-data

int cmd_gen_data(const CommonArgs& a, std::ostream& out) {
  const ExperimentConfig cfg = resolve_config(a);
  const fs::path dir = cfg.data_dir();
  ensure_dir(dir);
  const std::string id = dataset_id(cfg);
  const Datasets data = generate_datasets(cfg);
  save_datasets(data, dir, id);
  json summary = {{"dataset", id}, {"dir", dir.string()}, {"classes", cfg.class_names()}};
  for (const Split* s : {&data.source_train, &data.target_train, &data.target_test}) {
    summary["splits"][s->name] = {{"images", s->items.size()},
                                  {"class_histogram", class_histogram(*s, cfg.data.scene.num_classes())}};
  }
  out << summary.dump(2) << '\n';
  return 0;
}

// ---------------------------------------------------------------- train

TrainState burned_in_state(const ExperimentConfig& cfg, const Trainer& trainer, const Datasets& data) {
  const fs::path dir = fs::path(cfg.output_dir) / "burn_in";
  ensure_dir(dir);
  const std::string id = burn_in_id(cfg);
  const fs::path path = dir / (id + ".ckpt");
  TrainState state = trainer.initial_state();
  if (fs::exists(path)) {
    const Checkpoint ckpt = load_checkpoint(path);
    restore(state, ckpt);
    if (state.burn_in_done != cfg.train.burn_in_steps || state.iteration != 0) {
      throw FormatError(path.string() + ": not a burn-in checkpoint for this configuration");
    }
    log::info("reusing burn-in checkpoint " + path.string());
    return state;
  }
  log::info("burn-in: " + std::to_string(cfg.train.burn_in_steps) + " steps");
  trainer.burn_in(state, data.source_train, cfg.train.burn_in_steps);
  save_checkpoint_atomic(to_checkpoint(state, json{{"burn_in", id}, {"dataset", dataset_id(cfg)}}.dump()), path);
  return state;
}

json checkpoint_metadata(const ExperimentConfig& cfg, const std::string& label) {
  return {{"experiment", experiment_id(cfg)}, {"label", label}, {"config", to_json(cfg)}};
}

json train_one(const ExperimentConfig& cfg, const std::string& label, const Datasets& data, std::ostream& out) {
  const std::string id = experiment_id(cfg);
  const fs::path run_dir = fs::path(cfg.output_dir) / label;
  ensure_dir(run_dir);
  write_json(run_dir / "config.json", {{"experiment", id}, {"label", label}, {"config", to_json(cfg)}});

  const Trainer trainer = make_trainer(cfg);
  TrainState start = burned_in_state(cfg, trainer, data);

  std::ofstream train_log = open_out(run_dir / "train_log.csv");
  write_log_header(train_log, {{"experiment", id},
                               {"label", label},
                               {"mode", to_string(cfg.train.mode)},
                               {"seed", std::to_string(cfg.seed)},
                               {"dataset", dataset_id(cfg)}});
  std::ofstream eval_log = open_out(run_dir / "eval_log.csv");
  eval_log << "# experiment=" << id << "\n# label=" << label << '\n';
  write_eval_header(eval_log, cfg);

  const bool target_columns = cfg.train.mode != TrainMode::kSourceOnly;
  RunHooks hooks;
  hooks.on_step = [&](const TrainState& s, const LossReport& r) {
    write_log_row(train_log, r, target_columns);
    if (cfg.checkpoint_every > 0 && s.iteration % cfg.checkpoint_every == 0 &&
        s.iteration != cfg.train.adapt_steps) {
      save_checkpoint_atomic(to_checkpoint(s, checkpoint_metadata(cfg, label).dump()),
                             run_dir / ("ckpt_" + std::to_string(s.iteration) + ".ckpt"));
    }
  };
  hooks.on_eval = [&](const EvalPoint& p) {
    write_eval_row(eval_log, p);
    eval_log.flush();
    log::info(label + " @" + std::to_string(p.iteration) + ": mAP " + std::to_string(100 * p.report.map));
  };
  RunResult result = run_adaptation(cfg, data, std::move(start), hooks);
  save_checkpoint_atomic(to_checkpoint(result.state, checkpoint_metadata(cfg, label).dump()), run_dir / "final.ckpt");

  const EvalReport& final_report = result.curve.back().report;
  json summary = {{"experiment", id},
                  {"label", label},
                  {"mode", to_string(cfg.train.mode)},
                  {"seed", cfg.seed},
                  {"iterations", result.state.iteration},
                  {"final", to_json(final_report, cfg.class_names())}};
  write_json(run_dir / "summary.json", summary);
  out << label << ": final target mAP " << std::fixed << std::setprecision(2) << 100 * final_report.map
      << " (" << std::setprecision(1) << result.seconds << " s) -> " << run_dir.string()
      << '\n';
  return summary;
}

struct TrainArgs {
  CommonArgs common;
  std::string mode;
  bool no_apr = false;
  bool no_rmo = false;
  std::string beta_grid;
  std::optional<int> adapt_steps;
  std::optional<int> burn_in_steps;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  ExperimentConfig cfg = resolve_config(a.common);
  if (!a.mode.empty()) {
    auto m = train_mode_from_string(a.mode);
    if (!m) throw ConfigError("--mode: unknown mode '" + a.mode + "'");
    cfg.train.mode = *m;
  }
  if (a.no_apr) cfg.train.apr = false;
  if (a.no_rmo) cfg.train.rmo = false;
  if (a.adapt_steps) cfg.train.adapt_steps = *a.adapt_steps;
  if (a.burn_in_steps) cfg.train.burn_in_steps = *a.burn_in_steps;
  validate(cfg);

  std::vector<std::pair<ExperimentConfig, std::string>> runs;
  if (a.beta_grid.empty()) {
    runs.emplace_back(cfg, run_label(cfg));
  } else {
    if (!cfg.train.apr_enabled()) throw ConfigError("--beta-grid needs mode aat with APR enabled");
    for (double b : parse_grid(a.beta_grid)) {
      ExperimentConfig c = cfg;
      c.train.beta = b / 255.0;
      validate(c);
      runs.emplace_back(c, run_label(c) + "-beta" + beta_text(b));
    }
  }

  const Datasets data = load_datasets(cfg.data_dir(), dataset_id(cfg));
  for (const auto& [c, label] : runs) train_one(c, label, data, out);
  return 0;
}

// ---------------------------------------------------------------- eval / attack-demo

struct LoadedModel {
  ExperimentConfig config;
  std::string experiment;
  TrainState state;
};

LoadedModel load_model(const std::string& path) {
  if (path.empty()) throw ConfigError("--checkpoint is required");
  const Checkpoint ckpt = load_checkpoint(path);
  json meta;
  try {
    meta = json::parse(ckpt.metadata);
  } catch (const json::exception& e) {
    throw FormatError(path + ": checkpoint metadata: " + e.what());
  }
  if (!meta.contains("config")) throw FormatError(path + ": checkpoint metadata has no 'config' entry");
  LoadedModel m;
  m.config = experiment_from_json(meta["config"]);
  m.experiment = meta.value("experiment", experiment_id(m.config));
  const Trainer trainer = make_trainer(m.config);
  m.state = trainer.initial_state();
  restore(m.state, ckpt);
  return m;
}

Split load_named_split(const ExperimentConfig& cfg, const std::string& data_override, const std::string& name) {
  const fs::path dir = data_override.empty() ? cfg.data_dir() : fs::path(data_override);
  if (!fs::exists(dir / (name + ".json"))) {
    throw ConfigError("split '" + name + "' not found in " + dir.string());
  }
  return load_split(dir, name);
}

struct EvalArgs {
  std::string checkpoint;
  std::string split = "target_test";
  std::string data;
  std::string out;
  bool student = false;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const LoadedModel m = load_model(a.checkpoint);
  const Split split = load_named_split(m.config, a.data, a.split);
  if (split.items.empty()) throw ContractError("split '" + a.split + "' has no images");
  const Trainer trainer = make_trainer(m.config);
  const EvalReport report =
      evaluate_params(trainer, a.student ? m.state.student : m.state.teacher, split, m.config);
  const auto names = m.config.class_names();
  json j = {{"experiment", m.experiment},
            {"checkpoint", a.checkpoint},
            {"split", a.split},
            {"model", a.student ? "student" : "teacher"},
            {"report", to_json(report, names)}};
  const fs::path path = a.out.empty() ? fs::path(a.checkpoint).parent_path() /
                                            ("eval_" + a.split + "_" + (a.student ? "student" : "teacher") + ".json")
                                      : fs::path(a.out);
  write_json(path, j);
  out << format_table(report, names) << "report: " << path.string() << '\n';
  return 0;
}

struct AttackArgs {
  std::string checkpoint;
  std::string split = "target_test";
  std::string data;
  std::string out;
  int count = 100;
  std::optional<double> beta;  // 1/255 units
};

int cmd_attack_demo(const AttackArgs& a, std::ostream& out) {
  const LoadedModel m = load_model(a.checkpoint);
  const Split split = load_named_split(m.config, a.data, a.split);
  const Trainer trainer = make_trainer(m.config);
  const TrainConfig& tc = m.config.train;
  const double beta = a.beta ? *a.beta / 255.0 : tc.beta;
  if (!(beta >= 0)) throw ConfigError("--beta must be non-negative");
  const int n = std::min<int>(std::max(a.count, 0), static_cast<int>(split.items.size()));
  const int classes = m.config.data.scene.num_classes();
  const auto names = m.config.class_names();
  const float fb = static_cast<float>(beta);

  std::map<std::string, long> histogram{{"-beta", 0}, {"0", 0}, {"+beta", 0}, {"other", 0}};
  std::map<std::string, std::vector<long>> by_class;
  for (Disposition d : {Disposition::kRetained, Disposition::kCorrected, Disposition::kSuppressed,
                        Disposition::kRecovered}) {
    by_class[to_string(d)] = std::vector<long>(static_cast<std::size_t>(classes), 0);
  }
  json images = json::array();
  constexpr int kChunk = 32;
  for (int start = 0; start < n; start += kChunk) {
    std::vector<const Image*> chunk;
    for (int i = start; i < std::min(n, start + kChunk); ++i) chunk.push_back(&split.items[static_cast<std::size_t>(i)].image);
    const auto vanilla_sets =
        generate_vanilla_pseudo_labels(trainer.detector(), m.state.teacher, chunk, tc.threshold, tc.nms_iou);
    std::vector<Detections> vanilla;
    for (const auto& s : vanilla_sets) vanilla.push_back(s.labels);
    const auto attacked = fgsm_attack(trainer.detector(), m.state.teacher, chunk, vanilla, beta);
    std::vector<const Image*> adv_ptrs;
    for (const auto& x : attacked) adv_ptrs.push_back(&x.image);
    const auto pass_sets =
        generate_vanilla_pseudo_labels(trainer.detector(), m.state.teacher, adv_ptrs, tc.threshold, tc.nms_iou);
    for (std::size_t k = 0; k < chunk.size(); ++k) {
      for (float v : attacked[k].step) {
        if (v == fb && fb != 0) {
          ++histogram["+beta"];
        } else if (v == -fb && fb != 0) {
          ++histogram["-beta"];
        } else if (v == 0) {
          ++histogram["0"];
        } else {
          ++histogram["other"];
        }
      }
      const Detections& pass = pass_sets[k].labels;
      const Detections final_set = generate_adversarial_pseudo_labels(vanilla[k], pass, m.state.confusion);
      json disp = json::array();
      for (const LabelDisposition& d : explain_adversarial_pseudo_labels(vanilla[k], pass, m.state.confusion)) {
        ++by_class[to_string(d.disposition)][static_cast<std::size_t>(d.label.class_id)];
        disp.push_back({{"disposition", to_string(d.disposition)},
                        {"label", to_json(d.label)},
                        {"vanilla_index", d.vanilla_index}});
      }
      images.push_back({{"image_id", split.items[static_cast<std::size_t>(start) + k].id},
                        {"vanilla", to_json(vanilla[k])},
                        {"adversarial_pass", to_json(pass)},
                        {"adversarial", to_json(final_set)},
                        {"dispositions", disp},
                        {"skipped", attacked[k].skipped}});
    }
  }
  json counts = json::object();
  for (const auto& [k, v] : by_class) {
    json per = json::object();
    for (int c = 0; c < classes; ++c) per[names[static_cast<std::size_t>(c)]] = v[static_cast<std::size_t>(c)];
    counts[k] = per;
  }
  const auto minority = minority_classes(m.state.confusion);
  json j = {{"experiment", m.experiment},
            {"checkpoint", a.checkpoint},
            {"split", a.split},
            {"beta", beta},
            {"beta_255", beta * 255.0},
            {"images", images},
            {"perturbation_histogram", histogram},
            {"dispositions_by_class", counts},
            {"minority_classes", minority}};
  const fs::path path = a.out.empty() ? fs::path(a.checkpoint).parent_path() / "attack_demo.json" : fs::path(a.out);
  write_json(path, j);
  out << "attacked " << n << " images at beta " << beta * 255.0 << "/255\n";
  out << "perturbation histogram: -beta " << histogram["-beta"] << ", 0 " << histogram["0"] << ", +beta "
      << histogram["+beta"] << ", other " << histogram["other"] << '\n';
  for (const auto& [k, v] : by_class) {
    out << std::left << std::setw(11) << k;
    for (int c = 0; c < classes; ++c) out << ' ' << names[static_cast<std::size_t>(c)] << '=' << v[static_cast<std::size_t>(c)];
    out << '\n';
  }
  out << "details: " << path.string() << '\n';
  return 0;
}

// ---------------------------------------------------------------- report

std::vector<fs::path> find_eval_logs(const std::vector<std::string>& inputs) {
  std::vector<fs::path> logs;
  for (const std::string& in : inputs) {
    const fs::path p(in);
    if (fs::is_regular_file(p)) {
      logs.push_back(p);
    } else if (fs::is_directory(p) && fs::exists(p / "eval_log.csv")) {
      logs.push_back(p / "eval_log.csv");
    } else if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& entry : fs::directory_iterator(p)) {
        if (entry.is_directory() && fs::exists(entry.path() / "eval_log.csv")) found.push_back(entry.path() / "eval_log.csv");
      }
      std::sort(found.begin(), found.end());
      logs.insert(logs.end(), found.begin(), found.end());
    } else {
      throw IoError("no such log or run directory: " + in);
    }
  }
  if (logs.empty()) throw ConfigError("report: no eval_log.csv found");
  return logs;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& out_dir, std::ostream& out) {
  std::vector<RunCurve> runs;
  for (const fs::path& p : find_eval_logs(inputs)) runs.push_back(read_eval_log(p));
  runs = sort_runs(std::move(runs));
  const auto rows = summarize(runs);
  const fs::path dir = out_dir.empty() ? fs::path(".") : fs::path(out_dir);
  ensure_dir(dir);
  {
    std::ofstream curves = open_out(dir / "learning_curves.csv");
    write_learning_curves(curves, runs);
  }
  {
    std::ofstream table = open_out(dir / "summary.csv");
    table << "run,experiment,final_map,minority_ap,gain\n" << std::setprecision(9);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      table << rows[i].label << ',' << runs[i].experiment << ',' << rows[i].final_map << ',';
      if (rows[i].minority_ap) table << *rows[i].minority_ap;
      table << ',';
      if (rows[i].gain) table << *rows[i].gain;
      table << '\n';
    }
  }
  out << format_report(rows) << "curves: " << (dir / "learning_curves.csv").string() << '\n';
  return 0;
}

// ---------------------------------------------------------------- errors

int report_error(std::ostream& err, const char* kind, const std::string& message, int code) {
  err << json{{"error", kind}, {"message", message}}.dump() << '\n';
  return code;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adversarially attacked mean-teacher detector: data, training, evaluation, diagnostics"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Log progress to stderr");

  auto add_common = [](CLI::App* cmd, CommonArgs& c) {
    cmd->add_option("--config", c.config, "Experiment config JSON");
    cmd->add_option("--seed", c.seed, "Override the experiment seed");
    cmd->add_option("--out", c.out, "Override the output directory");
    cmd->add_option("--data", c.data, "Dataset directory (default <out>/data)");
  };

  CommonArgs gen;
  CLI::App* gen_cmd = app.add_subcommand("gen-data", "Generate source/target splits");
  add_common(gen_cmd, gen);

  TrainArgs train;
  CLI::App* train_cmd = app.add_subcommand("train", "Burn in (cached) and adapt one or more runs");
  add_common(train_cmd, train.common);
  train_cmd->add_option("--mode", train.mode, "source-only | mt-baseline | aat | oracle");
  train_cmd->add_flag("--no-apr", train.no_apr, "Disable adversarial pseudo-label regularization");
  train_cmd->add_flag("--no-rmo", train.no_rmo, "Disable minority oversampling");
  train_cmd->add_option("--beta-grid", train.beta_grid, "Comma-separated attack strengths in 1/255 units");
  train_cmd->add_option("--adapt-steps", train.adapt_steps, "Override train.adapt_steps");
  train_cmd->add_option("--burn-in-steps", train.burn_in_steps, "Override train.burn_in_steps");

  EvalArgs ev;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a split");
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->required();
  eval_cmd->add_option("--split", ev.split, "Split name");
  eval_cmd->add_option("--data", ev.data, "Dataset directory (default from the checkpoint's config)");
  eval_cmd->add_option("--out", ev.out, "Report JSON path");
  eval_cmd->add_flag("--student", ev.student, "Evaluate the student instead of the teacher");

  AttackArgs atk;
  CLI::App* atk_cmd = app.add_subcommand("attack-demo", "Attack the teacher and explain adversarial pseudo-labels");
  atk_cmd->add_option("--checkpoint", atk.checkpoint, "Checkpoint file")->required();
  atk_cmd->add_option("--split", atk.split, "Split name");
  atk_cmd->add_option("--data", atk.data, "Dataset directory");
  atk_cmd->add_option("--out", atk.out, "Output JSON path");
  atk_cmd->add_option("--count", atk.count, "Number of images");
  atk_cmd->add_option("--beta", atk.beta, "Attack strength in 1/255 units (default from config)");

  std::vector<std::string> report_inputs;
  std::string report_out;
  CLI::App* rep_cmd = app.add_subcommand("report", "Learning curves and a summary table from eval logs");
  rep_cmd->add_option("logs", report_inputs, "eval_log.csv files or run directories")->required();
  rep_cmd->add_option("--out", report_out, "Output directory");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    return report_error(err, "UsageError", e.what(), 2);
  }
  if (verbose) log::set_threshold(log::Level::kInfo);

  try {
    if (*gen_cmd) return cmd_gen_data(gen, out);
    if (*train_cmd) return cmd_train(train, out);
    if (*eval_cmd) return cmd_eval(ev, out);
    if (*atk_cmd) return cmd_attack_demo(atk, out);
    if (*rep_cmd) return cmd_report(report_inputs, report_out, out);
  } catch (const ConfigError& e) {
    return report_error(err, "ConfigError", e.what(), 2);
  } catch (const IoError& e) {
    return report_error(err, "IoError", e.what(), 3);
  } catch (const fs::filesystem_error& e) {
    return report_error(err, "IoError", e.what(), 3);
  } catch (const FormatError& e) {
    return report_error(err, "FormatError", e.what(), 4);
  } catch (const ContractError& e) {
    return report_error(err, "ContractError", e.what(), 5);
  } catch (const NumericError& e) {
    return report_error(err, "NumericError", e.what(), 6);
  } catch (const std::exception& e) {
    return report_error(err, "InternalError", e.what(), 1);
  }
  return report_error(err, "UsageError", "no command given", 2);
}

}  // namespace aat
