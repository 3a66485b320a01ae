#include "aat/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "aat/errors.hpp"

namespace aat {
namespace {

using json = nlohmann::json;

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

void check_sizes(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw ContractError(std::string(what) + ": prediction and ground-truth image counts differ");
}

}  // namespace

MatchResult match_detections(const Detections& detections, const Detections& ground_truth, double iou_threshold) {
  MatchResult result;
  result.true_positive.assign(detections.size(), false);
  result.matched_gt.assign(detections.size(), -1);
  std::vector<bool> taken(ground_truth.size(), false);
  for (std::size_t i = 0; i < detections.size(); ++i) {
    int best = -1;
    double best_iou = 0;
    for (std::size_t g = 0; g < ground_truth.size(); ++g) {
      if (taken[g] || ground_truth[g].class_id != detections[i].class_id) continue;
      const double o = iou(detections[i].box, ground_truth[g].box);
      if (o >= iou_threshold && (best < 0 || o > best_iou)) {
        best = static_cast<int>(g);
        best_iou = o;
      }
    }
    if (best >= 0) {
      taken[static_cast<std::size_t>(best)] = true;
      result.true_positive[i] = true;
      result.matched_gt[i] = best;
    }
  }
  result.false_negatives = static_cast<int>(std::count(taken.begin(), taken.end(), false));
  return result;
}

std::optional<double> average_precision(std::vector<ScoredFlag> flags, int num_ground_truth) {
  if (num_ground_truth < 0) throw ContractError("average_precision: negative ground-truth count");
  if (num_ground_truth == 0) return flags.empty() ? std::nullopt : std::optional<double>(0.0);
  std::stable_sort(flags.begin(), flags.end(),
                   [](const ScoredFlag& a, const ScoredFlag& b) { return a.score > b.score; });
  std::vector<double> precision, recall;
  int tp = 0, fp = 0;
  for (const ScoredFlag& f : flags) {
    f.true_positive ? ++tp : ++fp;
    precision.push_back(static_cast<double>(tp) / (tp + fp));
    recall.push_back(static_cast<double>(tp) / num_ground_truth);
  }
  // Precision envelope, then area under the step function.
  for (std::size_t i = precision.size(); i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double ap = 0, prev_recall = 0;
  for (std::size_t i = 0; i < recall.size(); ++i) {
    ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  return ap;
}

EvalReport evaluate(const std::vector<Detections>& predictions, const std::vector<Detections>& ground_truth,
                    int num_classes, const std::vector<int>& minority_classes, double iou_threshold) {
  check_sizes(predictions.size(), ground_truth.size(), "evaluate");
  if (num_classes < 1) throw ContractError("evaluate: need at least one class");
  EvalReport report;
  report.classes.resize(static_cast<std::size_t>(num_classes));
  report.minority_classes = minority_classes;
  std::vector<std::vector<ScoredFlag>> flags(static_cast<std::size_t>(num_classes));
  for (std::size_t n = 0; n < predictions.size(); ++n) {
    Detections dets = predictions[n];
    std::stable_sort(dets.begin(), dets.end(),
                     [](const Detection& a, const Detection& b) { return a.score > b.score; });
    const MatchResult m = match_detections(dets, ground_truth[n], iou_threshold);
    for (std::size_t i = 0; i < dets.size(); ++i) {
      const int c = dets[i].class_id;
      if (c < 0 || c >= num_classes) throw ContractError("evaluate: detection class out of range");
      flags[c].push_back({dets[i].score, m.true_positive[i]});
      m.true_positive[i] ? ++report.classes[c].tp : ++report.classes[c].fp;
    }
    for (const Detection& g : ground_truth[n]) {
      if (g.class_id < 0 || g.class_id >= num_classes) throw ContractError("evaluate: ground-truth class out of range");
      ++report.classes[g.class_id].num_gt;
    }
  }
  double sum = 0;
  int present = 0;
  for (int c = 0; c < num_classes; ++c) {
    ClassEval& ce = report.classes[c];
    ce.fn = ce.num_gt - ce.tp;
    ce.ap = average_precision(flags[c], ce.num_gt);
    if (ce.num_gt > 0) {
      sum += *ce.ap;
      ++present;
    }
  }
  report.map = present > 0 ? sum / present : 0.0;
  double msum = 0;
  int mcount = 0;
  for (int c : minority_classes) {
    if (c < 0 || c >= num_classes) throw ContractError("evaluate: minority class out of range");
    if (report.classes[c].num_gt > 0) {
      msum += *report.classes[c].ap;
      ++mcount;
    }
  }
  if (mcount > 0) report.minority_ap = msum / mcount;
  return report;
}

PseudoLabelQuality pseudo_label_quality(const std::vector<Detections>& pseudo_labels,
                                        const std::vector<Detections>& ground_truth, int num_classes,
                                        double iou_threshold) {
  check_sizes(pseudo_labels.size(), ground_truth.size(), "pseudo_label_quality");
  PseudoLabelQuality q;
  q.classes.resize(static_cast<std::size_t>(num_classes));
  std::vector<int> num_gt(static_cast<std::size_t>(num_classes), 0);
  for (std::size_t n = 0; n < pseudo_labels.size(); ++n) {
    Detections labels = pseudo_labels[n];
    sort_by_rank(labels);
    const MatchResult m = match_detections(labels, ground_truth[n], iou_threshold);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const int c = labels[i].class_id;
      if (c < 0 || c >= num_classes) throw ContractError("pseudo_label_quality: class out of range");
      m.true_positive[i] ? ++q.classes[c].tp : ++q.classes[c].fp;
    }
    for (const Detection& g : ground_truth[n]) {
      if (g.class_id < 0 || g.class_id >= num_classes) {
        throw ContractError("pseudo_label_quality: ground-truth class out of range");
      }
      ++num_gt[g.class_id];
    }
  }
  auto finish = [](ClassQuality& cq, int gt) {
    cq.fn = gt - cq.tp;
    if (cq.tp + cq.fp > 0) cq.precision = static_cast<double>(cq.tp) / (cq.tp + cq.fp);
    if (gt > 0) cq.recall = static_cast<double>(cq.tp) / gt;
  };
  int total_gt = 0;
  for (int c = 0; c < num_classes; ++c) {
    finish(q.classes[c], num_gt[c]);
    q.overall.tp += q.classes[c].tp;
    q.overall.fp += q.classes[c].fp;
    total_gt += num_gt[c];
  }
  finish(q.overall, total_gt);
  return q;
}

json to_json(const EvalReport& report, const std::vector<std::string>& class_names) {
  json classes = json::array();
  for (std::size_t c = 0; c < report.classes.size(); ++c) {
    const ClassEval& ce = report.classes[c];
    json j = {{"class", static_cast<int>(c)}, {"ap", optional_number(ce.ap)}, {"num_gt", ce.num_gt},
              {"tp", ce.tp},                  {"fp", ce.fp},                  {"fn", ce.fn}};
    if (c < class_names.size()) j["name"] = class_names[c];
    classes.push_back(j);
  }
  return {{"map", report.map},
          {"minority_ap", optional_number(report.minority_ap)},
          {"minority_classes", report.minority_classes},
          {"classes", classes}};
}

json to_json(const PseudoLabelQuality& quality) {
  auto one = [](const ClassQuality& q) {
    return json{{"precision", optional_number(q.precision)},
                {"recall", optional_number(q.recall)},
                {"tp", q.tp},
                {"fp", q.fp},
                {"fn", q.fn}};
  };
  json classes = json::array();
  for (const ClassQuality& q : quality.classes) classes.push_back(one(q));
  return {{"classes", classes}, {"overall", one(quality.overall)}};
}

json to_json(const Detection& d) {
  return {{"box", {d.box.x1, d.box.y1, d.box.x2, d.box.y2}}, {"class", d.class_id}, {"score", d.score}};
}

json to_json(const Detections& detections) {
  json out = json::array();
  for (const Detection& d : detections) out.push_back(to_json(d));
  return out;
}

Detection detection_from_json(const json& j) {
  try {
    const auto b = j.at("box").get<std::vector<double>>();
    if (b.size() != 4) throw FormatError("detection box must have 4 coordinates");
    return Detection{Box{b[0], b[1], b[2], b[3]}, j.at("class").get<int>(), j.value("score", 1.0)};
  } catch (const json::exception& e) {
    throw FormatError(std::string("detection: ") + e.what());
  }
}

std::string format_table(const EvalReport& report, const std::vector<std::string>& class_names) {
  std::ostringstream out;
  char line[128];
  std::snprintf(line, sizeof line, "%-12s %8s %6s %6s %6s %6s\n", "class", "AP50", "gt", "tp", "fp", "fn");
  out << line;
  for (std::size_t c = 0; c < report.classes.size(); ++c) {
    const ClassEval& ce = report.classes[c];
    const std::string name = c < class_names.size() ? class_names[c] : std::to_string(c);
    const std::string ap = ce.ap ? std::to_string(*ce.ap * 100).substr(0, 6) : "-";
    std::snprintf(line, sizeof line, "%-12s %8s %6d %6d %6d %6d\n", name.c_str(), ap.c_str(), ce.num_gt, ce.tp,
                  ce.fp, ce.fn);
    out << line;
  }
  std::snprintf(line, sizeof line, "%-12s %8.2f\n", "mAP", report.map * 100);
  out << line;
  if (report.minority_ap) {
    std::snprintf(line, sizeof line, "%-12s %8.2f\n", "minority", *report.minority_ap * 100);
    out << line;
  }
  return out.str();
}

}  // namespace aat
