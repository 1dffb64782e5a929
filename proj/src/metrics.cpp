// Copyright 2026 The halspan Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "halspan/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include "halspan/align.hpp"
#include "halspan/error.hpp"

namespace halspan {
namespace {

Measured ratio(std::size_t num, std::size_t den, const char* reason) {
  if (den == 0) return Measured::absent(reason);
  return Measured::of(static_cast<double>(num) / static_cast<double>(den));
}

ClassMetrics class_metrics(std::size_t tp, std::size_t fp, std::size_t fn,
                           const std::string& name) {
  ClassMetrics m;
  m.support = tp + fn;
  m.precision =
      ratio(tp, tp + fp, ("no predictions of " + name).c_str());
  m.recall = ratio(tp, tp + fn, ("no gold " + name + " instances").c_str());
  m.f1 = ratio(2 * tp, 2 * tp + fp + fn,
               ("neither gold nor predicted " + name + " instances").c_str());
  return m;
}

Measured mean_of(const Measured& a, const Measured& b, const char* what) {
  if (!a.has_value() || !b.has_value()) {
    return Measured::absent(std::string(what) + " undefined for a class: " +
                            (a.has_value() ? b.absent_reason : a.absent_reason));
  }
  return Measured::of((*a.value + *b.value) / 2.0);
}

Json measured_json(const Measured& m) {
  return m.has_value() ? Json(*m.value) : Json(nullptr);
}

Json class_json(const ClassMetrics& c) {
  Json j = Json::object();
  j["p"] = measured_json(c.precision);
  j["r"] = measured_json(c.recall);
  j["f1"] = measured_json(c.f1);
  j["support"] = c.support;
  Json reasons = Json::object();
  if (!c.precision.has_value()) reasons["p"] = c.precision.absent_reason;
  if (!c.recall.has_value()) reasons["r"] = c.recall.absent_reason;
  if (!c.f1.has_value()) reasons["f1"] = c.f1.absent_reason;
  if (!reasons.empty()) j["absent"] = std::move(reasons);
  return j;
}

std::string csv_cell(const Measured& m) {
  if (!m.has_value()) return "";
  std::ostringstream out;
  out.precision(10);
  out << *m.value;
  return out.str();
}

}  // namespace

std::string_view to_string(Level l) {
  return l == Level::kToken ? "token" : "example";
}

std::string_view to_string(Slice s) {
  switch (s) {
    case Slice::kSummary:
      return "Summary";
    case Slice::kData2txt:
      return "Data2txt";
    case Slice::kQA:
      return "QA";
    case Slice::kWhole:
      return "Whole";
  }
  return "?";
}

Slice slice_of(TaskType t) {
  switch (t) {
    case TaskType::kSummary:
      return Slice::kSummary;
    case TaskType::kData2txt:
      return Slice::kData2txt;
    case TaskType::kQA:
      return Slice::kQA;
  }
  return Slice::kWhole;
}

Confusion confusion_at(std::span<const std::int32_t> gold,
                       std::span<const double> scores, double threshold) {
  if (gold.size() != scores.size()) {
    throw ContractViolation("gold and scores differ in length");
  }
  Confusion c;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (gold[i] == 1) {
      predicted ? ++c.tp : ++c.fn;
    } else if (gold[i] == 0) {
      predicted ? ++c.fp : ++c.tn;
    } else {
      throw ContractViolation("gold label " + std::to_string(gold[i]) +
                              " is not 0 or 1");
    }
  }
  return c;
}

MetricsReport report_from_confusion(const Confusion& c, Level level,
                                    Slice slice, double threshold,
                                    Measured auroc) {
  MetricsReport r;
  r.level = level;
  r.slice = slice;
  r.threshold = threshold;
  r.confusion = c;
  r.class_1 = class_metrics(c.tp, c.fp, c.fn, "hallucinated");
  r.class_0 = class_metrics(c.tn, c.fn, c.fp, "supported");
  r.macro.precision = mean_of(r.class_0.precision, r.class_1.precision,
                              "precision");
  r.macro.recall = mean_of(r.class_0.recall, r.class_1.recall, "recall");
  r.macro.f1 = mean_of(r.class_0.f1, r.class_1.f1, "f1");
  r.auroc = std::move(auroc);
  return r;
}

Measured auroc(std::span<const std::int32_t> gold,
               std::span<const double> scores) {
  if (gold.size() != scores.size()) {
    throw ContractViolation("gold and scores differ in length");
  }
  std::vector<std::size_t> order(gold.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });
  // Mann-Whitney U with midranks for ties.
  double positive_rank_sum = 0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (gold[order[k]] == 1) {
        positive_rank_sum += midrank;
        ++positives;
      }
    }
    i = j;
  }
  const std::size_t negatives = gold.size() - positives;
  if (positives == 0) return Measured::absent("no positive instances");
  if (negatives == 0) return Measured::absent("no negative instances");
  const double p = static_cast<double>(positives);
  const double u = positive_rank_sum - p * (p + 1.0) / 2.0;
  return Measured::of(u / (p * static_cast<double>(negatives)));
}

MetricsReport token_metrics(std::span<const std::int32_t> gold,
                            std::span<const double> probs, double threshold) {
  return report_from_confusion(confusion_at(gold, probs, threshold),
                               Level::kToken, Slice::kWhole, threshold,
                               auroc(gold, probs));
}

MetricsReport example_metrics(
    std::span<const RagRecord> records,
    const std::map<std::string, std::vector<PredictedSpan>>& predictions,
    const std::map<std::string, double>& scores) {
  std::vector<std::string> missing;
  std::set<std::string> gold_ids;
  for (const RagRecord& r : records) {
    gold_ids.insert(r.id);
    if (!predictions.contains(r.id)) missing.push_back(r.id + " (prediction)");
    if (!scores.contains(r.id)) missing.push_back(r.id + " (score)");
  }
  for (const auto& [id, _] : predictions) {
    if (!gold_ids.contains(id)) missing.push_back(id + " (gold)");
  }
  for (const auto& [id, _] : scores) {
    if (!gold_ids.contains(id)) missing.push_back(id + " (gold)");
  }
  if (!missing.empty()) {
    std::string msg = "example_metrics: unmatched ids:";
    for (const std::string& m : missing) msg += " " + m;
    throw ContractViolation(msg);
  }

  std::vector<std::int32_t> gold;
  std::vector<double> score;
  Confusion c;
  for (const RagRecord& r : records) {
    const bool g = !r.labels.empty();
    const bool p = !predictions.at(r.id).empty();
    if (g) {
      p ? ++c.tp : ++c.fn;
    } else {
      p ? ++c.fp : ++c.tn;
    }
    gold.push_back(g ? 1 : 0);
    score.push_back(scores.at(r.id));
  }
  return report_from_confusion(c, Level::kExample, Slice::kWhole,
                               kDefaultThreshold, auroc(gold, score));
}

double RecordPrediction::score() const {
  return probs.empty() ? 0.0 : *std::max_element(probs.begin(), probs.end());
}

RecordPrediction make_record_prediction(const TokenPrediction& p,
                                        double threshold) {
  return RecordPrediction{p.id, p.offsets, p.probs, detect_spans(p, threshold)};
}

SlicedReport sliced_report(std::span<const RagRecord> corpus,
                           std::span<const RecordPrediction> predictions,
                           double threshold) {
  std::map<std::string, const RecordPrediction*> by_id;
  for (const RecordPrediction& p : predictions) by_id[p.id] = &p;

  struct Bucket {
    std::vector<RagRecord> records;
    std::vector<std::int32_t> token_gold;
    std::vector<double> token_probs;
    std::map<std::string, std::vector<PredictedSpan>> spans;
    std::map<std::string, double> scores;
  };
  std::map<Slice, Bucket> buckets;
  std::vector<std::string> missing;
  for (const RagRecord& r : corpus) {
    auto it = by_id.find(r.id);
    if (it == by_id.end()) {
      missing.push_back(r.id);
      continue;
    }
    const RecordPrediction& p = *it->second;
    if (p.tokens.size() != p.probs.size()) {
      throw ContractViolation("prediction " + p.id +
                              ": tokens and probs differ in length");
    }
    const std::vector<std::int32_t> labels =
        overlap_labels(labelable_spans(r), p.tokens);
    for (Slice s : {slice_of(r.task_type), Slice::kWhole}) {
      Bucket& b = buckets[s];
      b.records.push_back(r);
      for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == kIgnoreLabel) continue;
        b.token_gold.push_back(labels[i]);
        b.token_probs.push_back(p.probs[i]);
      }
      b.spans[r.id] = p.spans;
      b.scores[r.id] = p.score();
    }
  }
  std::set<std::string> gold_ids;
  for (const RagRecord& r : corpus) gold_ids.insert(r.id);
  for (const auto& [id, _] : by_id) {
    if (!gold_ids.contains(id)) missing.push_back(id + " (gold)");
  }
  if (!missing.empty()) {
    std::string msg = "sliced_report: unmatched ids:";
    for (const std::string& m : missing) msg += " " + m;
    throw ContractViolation(msg);
  }

  SlicedReport out;
  constexpr Slice kOrder[] = {Slice::kSummary, Slice::kData2txt, Slice::kQA,
                              Slice::kWhole};
  for (Level level : {Level::kToken, Level::kExample}) {
    for (Slice s : kOrder) {
      const std::string name =
          std::string(to_string(level)) + "/" + std::string(to_string(s));
      auto it = buckets.find(s);
      if (it == buckets.end()) {
        out.omitted.emplace_back(name, "no records in slice");
        continue;
      }
      const Bucket& b = it->second;
      MetricsReport r;
      if (level == Level::kToken) {
        if (b.token_gold.empty()) {
          out.omitted.emplace_back(name, "no answer tokens in slice");
          continue;
        }
        r = token_metrics(b.token_gold, b.token_probs, threshold);
      } else {
        r = example_metrics(b.records, b.spans, b.scores);
        r.threshold = threshold;
      }
      r.slice = s;
      out.reports.push_back(std::move(r));
    }
  }
  return out;
}

Json to_json(const MetricsReport& r, std::string_view model_manifest_version) {
  Json j = Json::object();
  j["level"] = std::string(to_string(r.level));
  j["slice"] = std::string(to_string(r.slice));
  j["class_0"] = class_json(r.class_0);
  j["class_1"] = class_json(r.class_1);
  Json macro = Json::object();
  macro["p"] = measured_json(r.macro.precision);
  macro["r"] = measured_json(r.macro.recall);
  macro["f1"] = measured_json(r.macro.f1);
  Json reasons = Json::object();
  if (!r.macro.precision.has_value()) reasons["p"] = r.macro.precision.absent_reason;
  if (!r.macro.recall.has_value()) reasons["r"] = r.macro.recall.absent_reason;
  if (!r.macro.f1.has_value()) reasons["f1"] = r.macro.f1.absent_reason;
  if (!reasons.empty()) macro["absent"] = std::move(reasons);
  j["macro"] = std::move(macro);
  j["auroc"] = measured_json(r.auroc);
  if (!r.auroc.has_value()) j["auroc_absent"] = r.auroc.absent_reason;
  j["threshold"] = r.threshold;
  j["model_manifest_version"] = std::string(model_manifest_version);
  j["confusion"] = {{"tp", r.confusion.tp},
                    {"fp", r.confusion.fp},
                    {"fn", r.confusion.fn},
                    {"tn", r.confusion.tn}};
  return j;
}

Json to_json(const SlicedReport& r, std::string_view model_manifest_version) {
  Json reports = Json::array();
  for (const MetricsReport& m : r.reports) {
    reports.push_back(to_json(m, model_manifest_version));
  }
  Json omitted = Json::array();
  for (const auto& [name, reason] : r.omitted) {
    omitted.push_back({{"slice", name}, {"reason", reason}});
  }
  return Json{{"reports", std::move(reports)}, {"omitted", std::move(omitted)}};
}

std::string to_csv(const SlicedReport& r) {
  std::ostringstream out;
  out << "level,slice,threshold,p0,r0,f1_0,support0,p1,r1,f1_1,support1,"
         "macro_p,macro_r,macro_f1,auroc,tp,fp,fn,tn\n";
  for (const MetricsReport& m : r.reports) {
    out << to_string(m.level) << ',' << to_string(m.slice) << ','
        << m.threshold << ',' << csv_cell(m.class_0.precision) << ','
        << csv_cell(m.class_0.recall) << ',' << csv_cell(m.class_0.f1) << ','
        << m.class_0.support << ',' << csv_cell(m.class_1.precision) << ','
        << csv_cell(m.class_1.recall) << ',' << csv_cell(m.class_1.f1) << ','
        << m.class_1.support << ',' << csv_cell(m.macro.precision) << ','
        << csv_cell(m.macro.recall) << ',' << csv_cell(m.macro.f1) << ','
        << csv_cell(m.auroc) << ',' << m.confusion.tp << ',' << m.confusion.fp
        << ',' << m.confusion.fn << ',' << m.confusion.tn << '\n';
  }
  return out.str();
}

}  // namespace halspan
