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

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "halspan/corpus.hpp"
#include "halspan/detector.hpp"

namespace halspan {

// Confusion counts for the positive (hallucinated) class.
struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  Confusion& operator+=(const Confusion& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
  }
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

// A metric that may be undefined. Undefined values carry a reason and are
// never reported as 0 or NaN.
struct Measured {
  std::optional<double> value;
  std::string absent_reason;

  static Measured of(double v) { return {v, {}}; }
  static Measured absent(std::string reason) {
    return {std::nullopt, std::move(reason)};
  }
  bool has_value() const { return value.has_value(); }
};

struct ClassMetrics {
  Measured precision;
  Measured recall;
  Measured f1;
  std::size_t support = 0;
};

struct MacroMetrics {
  Measured precision;
  Measured recall;
  Measured f1;
};

enum class Level { kToken, kExample };
enum class Slice { kSummary, kData2txt, kQA, kWhole };

std::string_view to_string(Level l);
std::string_view to_string(Slice s);
Slice slice_of(TaskType t);

struct MetricsReport {
  Level level = Level::kToken;
  Slice slice = Slice::kWhole;
  double threshold = kDefaultThreshold;
  Confusion confusion;
  ClassMetrics class_0;  // supported
  ClassMetrics class_1;  // hallucinated
  MacroMetrics macro;
  Measured auroc;
};

// Positive prediction iff score >= threshold.
Confusion confusion_at(std::span<const std::int32_t> gold,
                       std::span<const double> scores, double threshold);

// Per-class P/R/F1 and their unweighted means. F1 is 2TP / (2TP + FP + FN),
// which equals the harmonic mean of P and R whenever both are defined.
MetricsReport report_from_confusion(const Confusion& c, Level level,
                                    Slice slice, double threshold,
                                    Measured auroc);

// Probability that a random positive outscores a random negative, ties
// counted as one half. Absent when either class is missing.
Measured auroc(std::span<const std::int32_t> gold,
               std::span<const double> scores);

// `gold` holds 0/1 labels with ignored positions already removed.
MetricsReport token_metrics(std::span<const std::int32_t> gold,
                            std::span<const double> probs, double threshold);

// A record is positive iff it has a span; predicted positive iff it has a
// predicted span. AUROC ranks records by `scores`. Throws ContractViolation
// listing ids missing on either side.
MetricsReport example_metrics(
    std::span<const RagRecord> records,
    const std::map<std::string, std::vector<PredictedSpan>>& predictions,
    const std::map<std::string, double>& scores);

// One record's detector output: answer tokens with probabilities plus the
// spans emitted at some threshold.
struct RecordPrediction {
  std::string id;
  std::vector<OffsetToken> tokens;
  std::vector<double> probs;
  std::vector<PredictedSpan> spans;

  // Max token probability; 0 for an answer without tokens.
  double score() const;
};

RecordPrediction make_record_prediction(const TokenPrediction& p,
                                        double threshold);

struct SlicedReport {
  std::vector<MetricsReport> reports;  // token slices, then example slices
  std::vector<std::pair<std::string, std::string>> omitted;  // name, reason
};

// Token and example reports for Summary, Data2txt, QA and Whole. Whole is
// computed over all records, not averaged. Empty slices are omitted.
SlicedReport sliced_report(std::span<const RagRecord> corpus,
                           std::span<const RecordPrediction> predictions,
                           double threshold);

Json to_json(const MetricsReport& r, std::string_view model_manifest_version);
Json to_json(const SlicedReport& r, std::string_view model_manifest_version);

// One row per level x slice.
std::string to_csv(const SlicedReport& r);

}  // namespace halspan
