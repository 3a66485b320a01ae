#include "aat/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "aat/errors.hpp"
#include "aat/rng.hpp"

namespace aat {

using nlohmann::json;

namespace {

// Reads one JSON object, remembering which keys were consumed so that
// leftovers can be reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  void read(const char* key, int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) fail(key, "an integer");
      out = v->get<int>();
    }
  }
  void read(const char* key, long& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) fail(key, "an integer");
      out = v->get<long>();
    }
  }
  void read(const char* key, std::uint64_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned()) fail(key, "a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }
  void read(const char* key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) fail(key, "a number");
      out = v->get<double>();
    }
  }
  void read(const char* key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) fail(key, "a boolean");
      out = v->get<bool>();
    }
  }
  void read(const char* key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) fail(key, "a string");
      out = v->get<std::string>();
    }
  }
  template <typename T>
  void read_list(const char* key, std::vector<T>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) fail(key, "an array");
      std::vector<T> values;
      for (const json& e : *v) {
        if constexpr (std::is_same_v<T, int>) {
          if (!e.is_number_integer()) fail(key, "an array of integers");
        } else if constexpr (std::is_same_v<T, double>) {
          if (!e.is_number()) fail(key, "an array of numbers");
        } else {
          if (!e.is_string()) fail(key, "an array of strings");
        }
        values.push_back(e.get<T>());
      }
      out = std::move(values);
    }
  }

  const json* object(const char* key) { return find(key); }
  std::string path(const char* key) const { return path_ + "." + key; }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) throw ConfigError("unknown config key '" + path_ + "." + item.key() + "'");
    }
  }

  [[noreturn]] void fail(const char* key, const char* what) const {
    throw ConfigError("config key '" + path(key) + "' must be " + what);
  }

 private:
  const json* find(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

json strong_json(const StrongAugmentConfig& s) {
  return {{"jitter_probability", s.jitter_probability},
          {"grayscale_probability", s.grayscale_probability},
          {"blur_probability", s.blur_probability},
          {"cutout_probability", s.cutout_probability},
          {"brightness", s.brightness},
          {"contrast", s.contrast},
          {"saturation", s.saturation},
          {"blur_sigma_min", s.blur_sigma_min},
          {"blur_sigma_max", s.blur_sigma_max},
          {"cutout_min_rects", s.cutout_min_rects},
          {"cutout_max_rects", s.cutout_max_rects},
          {"cutout_min_area", s.cutout_min_area},
          {"cutout_max_area", s.cutout_max_area},
          {"erase_threshold", s.erase_threshold}};
}

void read_strong(const json& j, const std::string& path, StrongAugmentConfig& s) {
  ObjectReader r(j, path);
  r.read("jitter_probability", s.jitter_probability);
  r.read("grayscale_probability", s.grayscale_probability);
  r.read("blur_probability", s.blur_probability);
  r.read("cutout_probability", s.cutout_probability);
  r.read("brightness", s.brightness);
  r.read("contrast", s.contrast);
  r.read("saturation", s.saturation);
  r.read("blur_sigma_min", s.blur_sigma_min);
  r.read("blur_sigma_max", s.blur_sigma_max);
  r.read("cutout_min_rects", s.cutout_min_rects);
  r.read("cutout_max_rects", s.cutout_max_rects);
  r.read("cutout_min_area", s.cutout_min_area);
  r.read("cutout_max_area", s.cutout_max_area);
  r.read("erase_threshold", s.erase_threshold);
  r.finish();
}

// beta is configured in units of 1/255; keep the JSON value free of
// representation noise so the identity hash is stable.
double beta_in_255(double beta) { return std::round(beta * 255.0 * 1e9) / 1e9; }

void read_data(const json& j, DataConfig& d) {
  ObjectReader r(j, "data");
  r.read("dir", d.dir);
  std::vector<std::string> classes;
  for (ShapeKind k : d.scene.class_shapes) classes.push_back(to_string(k));
  r.read_list("classes", classes);
  d.scene.class_shapes.clear();
  for (const std::string& name : classes) {
    auto kind = shape_from_string(name);
    if (!kind) throw ConfigError("config key 'data.classes': unknown shape '" + name + "'");
    d.scene.class_shapes.push_back(*kind);
  }
  r.read_list("class_weights", d.scene.class_weights);
  r.read_list("minority_classes", d.minority_classes);
  r.read("image_size", d.scene.image_size);
  r.read("min_objects", d.scene.min_objects);
  r.read("max_objects", d.scene.max_objects);
  r.read("min_size", d.scene.min_size);
  r.read("max_size", d.scene.max_size);
  r.read("background_variation", d.scene.background_variation);
  if (const json* sizes = r.object("sizes")) {
    ObjectReader s(*sizes, r.path("sizes"));
    s.read("source_train", d.source_train);
    s.read("target_train", d.target_train);
    s.read("target_test", d.target_test);
    s.finish();
  }
  if (const json* t = r.object("target_domain")) {
    ObjectReader s(*t, r.path("target_domain"));
    s.read("haze", d.target.haze);
    s.read("haze_level", d.target.haze_level);
    s.read("contrast", d.target.contrast);
    s.read("hue_shift", d.target.hue_shift);
    s.read("noise", d.target.noise);
    std::string texture = to_string(d.target.texture);
    s.read("texture", texture);
    auto tex = texture_from_string(texture);
    if (!tex) throw ConfigError("config key 'data.target_domain.texture': unknown texture '" + texture + "'");
    d.target.texture = *tex;
    s.read("texture_strength", d.target.texture_strength);
    s.finish();
  }
  d.target.tag = DomainConfig::Tag::kTarget;
  r.read("workers", d.workers);
  r.finish();
}

void read_train(const json& j, ExperimentConfig& e) {
  TrainConfig& t = e.train;
  ObjectReader r(j, "train");
  std::string mode = to_string(t.mode);
  r.read("mode", mode);
  auto m = train_mode_from_string(mode);
  if (!m) throw ConfigError("config key 'train.mode': unknown mode '" + mode + "'");
  t.mode = *m;
  r.read("apr", t.apr);
  r.read("rmo", t.rmo);
  r.read("batch_source", t.batch_source);
  r.read("batch_target", t.batch_target);
  r.read("burn_in_steps", t.burn_in_steps);
  r.read("adapt_steps", t.adapt_steps);
  r.read("learning_rate", t.learning_rate);
  r.read("momentum", t.momentum);
  r.read("weight_decay", t.weight_decay);
  r.read("ema_alpha", t.ema_alpha);
  r.read("threshold", t.threshold);
  r.read("nms_iou", t.nms_iou);
  r.read("lambda_t", t.lambda_t);
  r.read("lambda_dis", t.lambda_dis);
  r.read("lambda_grl", t.lambda_grl);
  r.read("discriminator_hidden", t.discriminator_hidden);
  double beta255 = beta_in_255(t.beta);
  r.read("beta_255", beta255);
  t.beta = beta255 / 255.0;
  r.read("confusion_momentum", t.confusion_momentum);
  r.read("crop_capacity", t.crop_capacity);
  r.read("max_crops", t.max_crops);
  r.read("augment_source", t.augment_source);
  if (const json* s = r.object("strong")) read_strong(*s, r.path("strong"), t.strong);
  if (const json* p = r.object("paste")) {
    ObjectReader s(*p, r.path("paste"));
    s.read("max_overlap_iou", t.paste.max_overlap_iou);
    s.read("max_attempts", t.paste.max_attempts);
    s.read("min_side", t.paste.min_side);
    s.read("jitter_crops", t.paste.jitter_crops);
    if (const json* jit = s.object("jitter")) read_strong(*jit, s.path("jitter"), t.paste.jitter);
    s.finish();
  }
  r.read("eval_every", e.eval_every);
  r.read("checkpoint_every", e.checkpoint_every);
  r.read("eval_score_threshold", e.eval_score_threshold);
  r.finish();
}

}  // namespace

std::vector<std::string> ExperimentConfig::class_names() const {
  std::vector<std::string> names;
  for (ShapeKind k : data.scene.class_shapes) names.push_back(to_string(k));
  return names;
}

std::filesystem::path ExperimentConfig::data_dir() const {
  if (!data.dir.empty()) return data.dir;
  return std::filesystem::path(output_dir) / "data";
}

ExperimentConfig default_experiment() {
  ExperimentConfig e;
  e.data.scene.class_shapes = {ShapeKind::kCircle, ShapeKind::kSquare, ShapeKind::kRing, ShapeKind::kDiamond};
  e.data.scene.class_weights = {10, 10, 1, 1};
  e.data.minority_classes = {2, 3};
  e.data.target = DomainConfig::default_target();
  e.data.target.haze = 0.35;
  e.data.target.noise = 0.03;
  e.data.target.texture_strength = 0.08;
  e.train.burn_in_steps = 1500;
  e.train.adapt_steps = 800;
  e.train.learning_rate = 0.03;
  e.train.ema_alpha = 0.995;
  return e;
}

ExperimentConfig experiment_from_json(const json& j) {
  ExperimentConfig e = default_experiment();
  ObjectReader r(j, "config");
  r.read("seed", e.seed);
  r.read("output_dir", e.output_dir);
  if (const json* d = r.object("data")) read_data(*d, e.data);
  if (const json* m = r.object("model")) {
    ObjectReader s(*m, "model");
    s.read("stride", e.model.stride);
    s.read_list("channels", e.model.channels);
    s.read("box_reference", e.model.box_reference);
    s.finish();
  }
  if (const json* t = r.object("train")) read_train(*t, e);
  r.finish();
  validate(e);
  return e;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& ex) {
    throw ConfigError("config file " + path.string() + ": " + ex.what());
  }
  return experiment_from_json(j);
}

json to_json(const ExperimentConfig& e) {
  const DataConfig& d = e.data;
  const TrainConfig& t = e.train;
  json data = {
      {"dir", d.dir},
      {"classes", e.class_names()},
      {"class_weights", d.scene.class_weights},
      {"minority_classes", d.minority_classes},
      {"image_size", d.scene.image_size},
      {"min_objects", d.scene.min_objects},
      {"max_objects", d.scene.max_objects},
      {"min_size", d.scene.min_size},
      {"max_size", d.scene.max_size},
      {"background_variation", d.scene.background_variation},
      {"sizes", {{"source_train", d.source_train}, {"target_train", d.target_train}, {"target_test", d.target_test}}},
      {"target_domain",
       {{"haze", d.target.haze},
        {"haze_level", d.target.haze_level},
        {"contrast", d.target.contrast},
        {"hue_shift", d.target.hue_shift},
        {"noise", d.target.noise},
        {"texture", to_string(d.target.texture)},
        {"texture_strength", d.target.texture_strength}}},
      {"workers", d.workers}};
  json model = {{"stride", e.model.stride}, {"channels", e.model.channels}, {"box_reference", e.model.box_reference}};
  json train = {{"mode", to_string(t.mode)},
                {"apr", t.apr},
                {"rmo", t.rmo},
                {"batch_source", t.batch_source},
                {"batch_target", t.batch_target},
                {"burn_in_steps", t.burn_in_steps},
                {"adapt_steps", t.adapt_steps},
                {"learning_rate", t.learning_rate},
                {"momentum", t.momentum},
                {"weight_decay", t.weight_decay},
                {"ema_alpha", t.ema_alpha},
                {"threshold", t.threshold},
                {"nms_iou", t.nms_iou},
                {"lambda_t", t.lambda_t},
                {"lambda_dis", t.lambda_dis},
                {"lambda_grl", t.lambda_grl},
                {"discriminator_hidden", t.discriminator_hidden},
                {"beta_255", beta_in_255(t.beta)},
                {"confusion_momentum", t.confusion_momentum},
                {"crop_capacity", t.crop_capacity},
                {"max_crops", t.max_crops},
                {"augment_source", t.augment_source},
                {"strong", strong_json(t.strong)},
                {"paste",
                 {{"max_overlap_iou", t.paste.max_overlap_iou},
                  {"max_attempts", t.paste.max_attempts},
                  {"min_side", t.paste.min_side},
                  {"jitter_crops", t.paste.jitter_crops},
                  {"jitter", strong_json(t.paste.jitter)}}},
                {"eval_every", e.eval_every},
                {"checkpoint_every", e.checkpoint_every},
                {"eval_score_threshold", e.eval_score_threshold}};
  return {{"seed", e.seed}, {"output_dir", e.output_dir}, {"data", data}, {"model", model}, {"train", train}};
}

void validate(const ExperimentConfig& e) {
  validate(e.data.scene);
  const int classes = e.data.scene.num_classes();
  for (int c : e.data.minority_classes) {
    if (c < 0 || c >= classes) throw ConfigError("data.minority_classes: class index out of range");
  }
  if (e.data.source_train < 0 || e.data.target_train < 0 || e.data.target_test < 0) {
    throw ConfigError("data.sizes: counts must be non-negative");
  }
  if (e.data.workers < 1) throw ConfigError("data.workers must be >= 1");
  DetectorConfig model = e.model;
  model.input_size = e.data.scene.image_size;
  model.num_classes = classes;
  validate(model);
  validate(e.train);
  if (e.eval_every < 0 || e.checkpoint_every < 0) throw ConfigError("train.eval_every/checkpoint_every must be >= 0");
  if (e.eval_score_threshold < 0 || e.eval_score_threshold >= 1) {
    throw ConfigError("train.eval_score_threshold must be in [0, 1)");
  }
}

std::string hash_hex(const std::string& bytes) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << hash_string(bytes);
  return os.str();
}

std::string experiment_id(const ExperimentConfig& config) {
  json j = to_json(config);
  // Where results are written does not change what they are.
  j.erase("output_dir");
  j["data"].erase("dir");
  j["data"].erase("workers");
  return hash_hex(j.dump());
}

std::string dataset_id(const ExperimentConfig& config) {
  json d = to_json(config)["data"];
  d.erase("dir");
  d.erase("workers");
  d.erase("minority_classes");
  return hash_hex(json{{"seed", config.seed}, {"data", d}}.dump());
}

std::string burn_in_id(const ExperimentConfig& config) {
  const json full = to_json(config);
  const json& t = full["train"];
  json key = {{"dataset", dataset_id(config)},
              {"seed", config.seed},
              {"model", full["model"]},
              {"train", {{"burn_in_steps", t["burn_in_steps"]},
                         {"batch_source", t["batch_source"]},
                         {"learning_rate", t["learning_rate"]},
                         {"momentum", t["momentum"]},
                         {"weight_decay", t["weight_decay"]},
                         {"augment_source", t["augment_source"]},
                         {"strong", t["strong"]},
                         {"discriminator_hidden", t["discriminator_hidden"]},
                         {"crop_capacity", t["crop_capacity"]},
                         {"confusion_momentum", t["confusion_momentum"]}}}};
  return hash_hex(key.dump());
}

std::string run_label(const ExperimentConfig& config) {
  std::string label = to_string(config.train.mode);
  if (config.train.mode == TrainMode::kAat) {
    if (!config.train.apr) label += "-no-apr";
    if (!config.train.rmo) label += "-no-rmo";
  }
  return label;
}

Datasets generate_datasets(const ExperimentConfig& config) {
  const auto names = config.class_names();
  const DataConfig& d = config.data;
  Datasets out;
  out.source_train =
      generate_split("source_train", config.seed, d.scene, DomainConfig::source(), d.source_train, names, d.workers);
  out.target_train = generate_split("target_train", config.seed, d.scene, d.target, d.target_train, names, d.workers);
  out.target_test = generate_split("target_test", config.seed, d.scene, d.target, d.target_test, names, d.workers);
  return out;
}

void save_datasets(const Datasets& data, const std::filesystem::path& dir, const std::string& id) {
  save_split(data.source_train, dir, id);
  save_split(data.target_train, dir, id);
  save_split(data.target_test, dir, id);
}

Datasets load_datasets(const std::filesystem::path& dir, const std::string& expected_id) {
  Datasets out;
  for (auto [name, split] : {std::pair{"source_train", &out.source_train}, std::pair{"target_train", &out.target_train},
                             std::pair{"target_test", &out.target_test}}) {
    const auto file = dir / (std::string(name) + ".json");
    if (!std::filesystem::exists(file)) {
      throw ConfigError("dataset split '" + std::string(name) + "' not found in " + dir.string() +
                        " (run gen-data first)");
    }
    std::ifstream in(file);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& ex) {
      throw FormatError(file.string() + ": " + ex.what());
    }
    const std::string found = j.value("experiment", std::string());
    if (!expected_id.empty() && found != expected_id) {
      throw ConfigError("dataset in " + dir.string() + " has id " + found + ", config expects " + expected_id +
                        " (regenerate with gen-data)");
    }
    *split = load_split(dir, name);
  }
  return out;
}

Trainer make_trainer(const ExperimentConfig& config) {
  DetectorConfig model = config.model;
  model.input_size = config.data.scene.image_size;
  model.num_classes = config.data.scene.num_classes();
  return Trainer(model, config.train, config.seed);
}

EvalReport evaluate_params(const Trainer& trainer, const ParameterSet<float>& params, const Split& split,
                           const ExperimentConfig& config) {
  if (split.items.empty()) throw ContractError("cannot evaluate on empty split '" + split.name + "'");
  std::vector<Detections> gt;
  gt.reserve(split.items.size());
  for (const LabeledImage& item : split.items) gt.push_back(item.labels);
  return evaluate(trainer.predict(params, split, config.eval_score_threshold), gt,
                  config.data.scene.num_classes(), config.data.minority_classes);
}

RunResult run_adaptation(const ExperimentConfig& config, const Datasets& data, TrainState start,
                         const RunHooks& hooks) {
  const auto t0 = std::chrono::steady_clock::now();
  const Trainer trainer = make_trainer(config);
  RunResult result;
  result.label = run_label(config);
  result.experiment = experiment_id(config);
  result.state = std::move(start);
  const TrainData td{&data.source_train, &data.target_train, config.data.minority_classes};
  const long first = result.state.iteration;

  auto eval_now = [&] {
    EvalPoint p{result.state.iteration, evaluate_params(trainer, result.state.teacher, data.target_test, config)};
    if (hooks.on_eval) hooks.on_eval(p);
    result.curve.push_back(std::move(p));
  };
  eval_now();
  for (int k = 0; k < config.train.adapt_steps; ++k) {
    const LossReport report = trainer.train_step(result.state, td);
    if (hooks.on_step) hooks.on_step(result.state, report);
    const long done = result.state.iteration - first;
    if ((config.eval_every > 0 && done % config.eval_every == 0) || k + 1 == config.train.adapt_steps) {
      if (result.curve.back().iteration != result.state.iteration) eval_now();
    }
  }
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

void write_eval_header(std::ostream& out, const ExperimentConfig& config) {
  out << "iteration,map,minority_ap";
  for (const std::string& name : config.class_names()) out << ",ap_" << name;
  out << '\n';
}

void write_eval_row(std::ostream& out, const EvalPoint& point) {
  auto opt = [&](const std::optional<double>& v) {
    if (v) out << *v;
  };
  out << std::setprecision(9) << point.iteration << ',' << point.report.map << ',';
  opt(point.report.minority_ap);
  for (const ClassEval& c : point.report.classes) {
    out << ',';
    opt(c.ap);
  }
  out << '\n';
}

RunCurve read_eval_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read eval log " + path.string());
  RunCurve curve;
  curve.label = path.parent_path().filename().string();
  std::string line;
  bool header = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(2, eq - 2);
      const std::string value = line.substr(eq + 1);
      if (key == "label") curve.label = value;
      if (key == "experiment") curve.experiment = value;
      continue;
    }
    if (!header) {
      if (line.rfind("iteration,map,minority_ap", 0) != 0) {
        throw FormatError(path.string() + ": missing eval log header");
      }
      header = true;
      continue;
    }
    std::istringstream fields(line);
    std::string it, map, minority;
    std::getline(fields, it, ',');
    std::getline(fields, map, ',');
    std::getline(fields, minority, ',');
    try {
      CurveRow row;
      row.iteration = std::stol(it);
      row.map = std::stod(map);
      if (!minority.empty()) row.minority_ap = std::stod(minority);
      curve.rows.push_back(row);
    } catch (const std::exception&) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": malformed row");
    }
  }
  if (!header) throw FormatError(path.string() + ": missing eval log header");
  return curve;
}

namespace {

std::pair<std::string, double> split_beta(const std::string& label) {
  const auto pos = label.rfind("-beta");
  if (pos == std::string::npos) return {label, -1};
  try {
    return {label.substr(0, pos), std::stod(label.substr(pos + 5))};
  } catch (const std::exception&) {
    return {label, -1};
  }
}

}  // namespace

std::vector<RunCurve> sort_runs(std::vector<RunCurve> runs) {
  std::stable_sort(runs.begin(), runs.end(), [](const RunCurve& a, const RunCurve& b) {
    return split_beta(a.label) < split_beta(b.label);
  });
  return runs;
}

std::vector<ReportRow> summarize(const std::vector<RunCurve>& runs) {
  std::optional<double> baseline;
  for (const RunCurve& r : runs) {
    if (r.label == to_string(TrainMode::kMeanTeacher) && !r.rows.empty()) baseline = r.rows.back().map;
  }
  std::vector<ReportRow> rows;
  for (const RunCurve& r : runs) {
    ReportRow row;
    row.label = r.label;
    if (!r.rows.empty()) {
      row.final_map = r.rows.back().map;
      row.minority_ap = r.rows.back().minority_ap;
    }
    if (baseline) row.gain = row.final_map - *baseline;
    rows.push_back(row);
  }
  return rows;
}

void write_learning_curves(std::ostream& out, const std::vector<RunCurve>& runs) {
  out << "run,experiment,iteration,map,minority_ap\n" << std::setprecision(9);
  for (const RunCurve& r : runs) {
    for (const CurveRow& row : r.rows) {
      out << r.label << ',' << r.experiment << ',' << row.iteration << ',' << row.map << ',';
      if (row.minority_ap) out << *row.minority_ap;
      out << '\n';
    }
  }
}

std::string format_report(const std::vector<ReportRow>& rows) {
  std::ostringstream os;
  os << std::left << std::setw(24) << "run" << std::right << std::setw(10) << "mAP" << std::setw(12) << "minorityAP"
     << std::setw(10) << "gain" << '\n';
  os << std::fixed << std::setprecision(2);
  for (const ReportRow& r : rows) {
    os << std::left << std::setw(24) << r.label << std::right << std::setw(10) << 100 * r.final_map;
    if (r.minority_ap) {
      os << std::setw(12) << 100 * *r.minority_ap;
    } else {
      os << std::setw(12) << "-";
    }
    if (r.gain) {
      os << std::setw(10) << std::showpos << 100 * *r.gain << std::noshowpos;
    } else {
      os << std::setw(10) << "-";
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace aat
