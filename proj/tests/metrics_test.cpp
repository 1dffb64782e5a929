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
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "halspan/error.hpp"
#include "testing/oracles.hpp"

namespace halspan {
namespace {

void expect_matches(const Measured& m, double oracle) {
  if (oracle < 0) {
    EXPECT_FALSE(m.has_value());
    EXPECT_FALSE(m.absent_reason.empty());
  } else {
    ASSERT_TRUE(m.has_value());
    EXPECT_NEAR(*m.value, oracle, 1e-9);
  }
}

TEST(TokenMetrics, WorkedExample) {
  const std::vector<std::int32_t> gold = {0, 1, 0, 1};
  const std::vector<double> probs = {0.6, 0.4, 0.5, 0.7};
  const MetricsReport r = token_metrics(gold, probs, 0.5);
  EXPECT_EQ(r.confusion, (Confusion{1, 2, 1, 0}));
  EXPECT_NEAR(*r.class_1.precision.value, 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(*r.class_1.recall.value, 0.5, 1e-12);
  EXPECT_NEAR(*r.class_1.f1.value, 0.4, 1e-12);
  EXPECT_NEAR(*r.auroc.value, 0.5, 1e-12);
  EXPECT_EQ(r.class_1.support, 2u);
  // Class 0: nothing predicted 0 is correct.
  EXPECT_NEAR(*r.class_0.precision.value, 0.0, 1e-12);
  EXPECT_NEAR(*r.class_0.recall.value, 0.0, 1e-12);
  EXPECT_NEAR(*r.macro.f1.value, 0.2, 1e-12);
}

TEST(TokenMetrics, PerfectRanking) {
  const std::vector<std::int32_t> gold = {0, 0, 1, 1};
  const std::vector<double> probs = {0.1, 0.2, 0.8, 0.9};
  const MetricsReport r = token_metrics(gold, probs, 0.5);
  EXPECT_DOUBLE_EQ(*r.auroc.value, 1.0);
  EXPECT_DOUBLE_EQ(*r.class_1.f1.value, 1.0);
  EXPECT_DOUBLE_EQ(*r.macro.f1.value, 1.0);
}

TEST(TokenMetrics, F1FromPrecisionAndRecall) {
  // 21 TP, 7 FP, 9 FN: P = 0.75, R = 0.70.
  Confusion c{21, 7, 9, 0};
  const MetricsReport r =
      report_from_confusion(c, Level::kToken, Slice::kWhole, 0.5, Measured{});
  EXPECT_NEAR(*r.class_1.precision.value, 0.75, 1e-12);
  EXPECT_NEAR(*r.class_1.recall.value, 0.70, 1e-12);
  EXPECT_NEAR(*r.class_1.f1.value, 0.7241379310, 1e-9);
}

TEST(TokenMetrics, UndefinedValuesAreAbsent) {
  const std::vector<std::int32_t> gold = {0, 0, 0};
  const std::vector<double> probs = {0.1, 0.2, 0.3};
  const MetricsReport r = token_metrics(gold, probs, 0.5);
  EXPECT_FALSE(r.class_1.precision.has_value());
  EXPECT_FALSE(r.class_1.recall.has_value());
  EXPECT_FALSE(r.class_1.f1.has_value());
  EXPECT_FALSE(r.macro.f1.has_value());
  EXPECT_FALSE(r.auroc.has_value());
  EXPECT_FALSE(r.auroc.absent_reason.empty());
  EXPECT_DOUBLE_EQ(*r.class_0.f1.value, 1.0);

  const Json j = to_json(r, "halspan-model/1");
  EXPECT_TRUE(j["class_1"]["f1"].is_null());
  EXPECT_TRUE(j["class_1"]["absent"].contains("f1"));
  EXPECT_TRUE(j["auroc"].is_null());
  EXPECT_EQ(j["model_manifest_version"], "halspan-model/1");
}

TEST(TokenMetrics, ThresholdZeroRecallsEverything) {
  const std::vector<std::int32_t> gold = {1, 0, 1, 1};
  const std::vector<double> probs = {0.0, 0.3, 0.01, 1.0};
  const MetricsReport r = token_metrics(gold, probs, 0.0);
  EXPECT_DOUBLE_EQ(*r.class_1.recall.value, 1.0);
}

TEST(TokenMetrics, RejectsBadInput) {
  const std::vector<std::int32_t> gold = {0, 2};
  const std::vector<double> probs = {0.1, 0.2};
  EXPECT_THROW(token_metrics(gold, probs, 0.5), ContractViolation);
  EXPECT_THROW(token_metrics(gold, std::vector<double>{0.1}, 0.5),
               ContractViolation);
}

TEST(TokenMetrics, MatchesBruteForceOracle) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + trial % 200;
    const double base_rate = u(rng);
    std::vector<std::int32_t> gold(n);
    std::vector<double> probs(n);
    for (std::size_t i = 0; i < n; ++i) {
      gold[i] = u(rng) < base_rate ? 1 : 0;
      // Coarse grid so ties occur.
      probs[i] = std::round(u(rng) * 20) / 20;
    }
    const double threshold = std::round(u(rng) * 20) / 20;
    std::vector<std::int32_t> predicted(n);
    for (std::size_t i = 0; i < n; ++i) predicted[i] = probs[i] >= threshold;
    const testing::BruteScores want = testing::brute_scores(gold, predicted);
    const MetricsReport got = token_metrics(gold, probs, threshold);
    EXPECT_EQ(got.confusion, (Confusion{want.tp, want.fp, want.fn, want.tn}));
    expect_matches(got.class_0.precision, want.precision[0]);
    expect_matches(got.class_0.recall, want.recall[0]);
    expect_matches(got.class_0.f1, want.f1[0]);
    expect_matches(got.class_1.precision, want.precision[1]);
    expect_matches(got.class_1.recall, want.recall[1]);
    expect_matches(got.class_1.f1, want.f1[1]);
    expect_matches(got.auroc, testing::pairwise_auroc(gold, probs));
  }
}

TEST(TokenMetrics, PermutationInvariant) {
  std::mt19937_64 rng(18);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::int32_t> gold(150);
  std::vector<double> probs(150);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    gold[i] = u(rng) < 0.3;
    probs[i] = u(rng);
  }
  const MetricsReport a = token_metrics(gold, probs, 0.4);
  std::vector<std::size_t> order(gold.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::int32_t> g2;
  std::vector<double> p2;
  for (std::size_t i : order) {
    g2.push_back(gold[i]);
    p2.push_back(probs[i]);
  }
  const MetricsReport b = token_metrics(g2, p2, 0.4);
  EXPECT_EQ(a.confusion, b.confusion);
  EXPECT_NEAR(*a.auroc.value, *b.auroc.value, 1e-12);
}

RagRecord record(std::string id, TaskType task, bool hallucinated) {
  RagRecord r;
  r.id = std::move(id);
  r.task_type = task;
  r.answer = "alpha beta gamma";
  if (hallucinated) r.labels = {hallucinated_span(6, 10)};
  return r;
}

TEST(ExampleMetrics, AurocOfMaxScores) {
  const std::vector<RagRecord> records = {
      record("a", TaskType::kQA, true), record("b", TaskType::kQA, true),
      record("c", TaskType::kQA, false), record("d", TaskType::kQA, false)};
  std::map<std::string, std::vector<PredictedSpan>> spans = {
      {"a", {PredictedSpan{hallucinated_span(0, 5), 0.9}}},
      {"b", {}},
      {"c", {PredictedSpan{hallucinated_span(0, 5), 0.6}}},
      {"d", {}}};
  const std::map<std::string, double> scores = {
      {"a", 0.9}, {"b", 0.4}, {"c", 0.6}, {"d", 0.1}};
  const MetricsReport r = example_metrics(records, spans, scores);
  EXPECT_EQ(r.level, Level::kExample);
  EXPECT_DOUBLE_EQ(*r.auroc.value, 0.75);
  EXPECT_EQ(r.confusion, (Confusion{1, 1, 1, 1}));
}

TEST(ExampleMetrics, UnmatchedIdsAreContractViolation) {
  const std::vector<RagRecord> records = {record("a", TaskType::kQA, true)};
  std::map<std::string, std::vector<PredictedSpan>> spans = {{"zzz", {}}};
  const std::map<std::string, double> scores = {{"zzz", 0.1}};
  try {
    example_metrics(records, spans, scores);
    FAIL();
  } catch (const ContractViolation& e) {
    EXPECT_NE(std::string(e.what()).find("zzz"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("a (prediction)"), std::string::npos);
  }
}

TEST(ExampleMetrics, MatchesBruteForceOracle) {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + trial % 60;
    std::vector<RagRecord> records;
    std::map<std::string, std::vector<PredictedSpan>> spans;
    std::map<std::string, double> scores;
    std::vector<std::int32_t> gold, predicted;
    std::vector<double> score_list;
    for (std::size_t i = 0; i < n; ++i) {
      const std::string id = "r" + std::to_string(i);
      const bool g = u(rng) < 0.5;
      const bool p = u(rng) < 0.5;
      records.push_back(record(id, TaskType::kSummary, g));
      spans[id] = p ? std::vector{PredictedSpan{hallucinated_span(0, 5), 0.7}}
                    : std::vector<PredictedSpan>{};
      scores[id] = std::round(u(rng) * 10) / 10;
      gold.push_back(g);
      predicted.push_back(p);
      score_list.push_back(scores[id]);
    }
    const testing::BruteScores want = testing::brute_scores(gold, predicted);
    const MetricsReport got = example_metrics(records, spans, scores);
    EXPECT_EQ(got.confusion, (Confusion{want.tp, want.fp, want.fn, want.tn}));
    expect_matches(got.class_1.f1, want.f1[1]);
    expect_matches(got.class_0.f1, want.f1[0]);
    expect_matches(got.auroc, testing::pairwise_auroc(gold, score_list));
  }
}

RecordPrediction prediction_for(const RagRecord& r, std::vector<double> probs) {
  // Tokens of "alpha beta gamma".
  RecordPrediction p;
  p.id = r.id;
  p.tokens = {{0, 3, 0, 5, false, Segment::kAnswer},
              {1, 4, 6, 10, false, Segment::kAnswer},
              {2, 5, 11, 16, false, Segment::kAnswer}};
  p.probs = std::move(probs);
  return p;
}

const MetricsReport* find(const SlicedReport& s, Level level, Slice slice) {
  for (const MetricsReport& r : s.reports) {
    if (r.level == level && r.slice == slice) return &r;
  }
  return nullptr;
}

TEST(SlicedReport, QaOnlyCorpusWholeEqualsQa) {
  const std::vector<RagRecord> corpus = {record("a", TaskType::kQA, true),
                                         record("b", TaskType::kQA, false)};
  const std::vector<RecordPrediction> preds = {
      prediction_for(corpus[0], {0.1, 0.8, 0.2}),
      prediction_for(corpus[1], {0.6, 0.1, 0.2})};
  const SlicedReport s = sliced_report(corpus, preds, 0.5);
  for (Level level : {Level::kToken, Level::kExample}) {
    const MetricsReport* qa = find(s, level, Slice::kQA);
    const MetricsReport* whole = find(s, level, Slice::kWhole);
    ASSERT_NE(qa, nullptr);
    ASSERT_NE(whole, nullptr);
    EXPECT_EQ(qa->confusion, whole->confusion);
    EXPECT_EQ(find(s, level, Slice::kSummary), nullptr);
  }
  EXPECT_EQ(s.omitted.size(), 4u);
  EXPECT_EQ(find(s, Level::kToken, Slice::kQA)->confusion,
            (Confusion{1, 1, 0, 4}));
}

TEST(SlicedReport, WholeIsUnionOfSlices) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  static const TaskType kTasks[] = {TaskType::kQA, TaskType::kData2txt,
                                    TaskType::kSummary};
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<RagRecord> corpus;
    std::vector<RecordPrediction> preds;
    for (int i = 0; i < 30; ++i) {
      corpus.push_back(record("r" + std::to_string(i), kTasks[(i * 7 + trial) % 3],
                              u(rng) < 0.5));
      preds.push_back(prediction_for(corpus.back(), {u(rng), u(rng), u(rng)}));
      preds.back().spans = detect_spans(
          TokenPrediction{preds.back().id, preds.back().probs,
                          preds.back().tokens},
          0.5);
    }
    const SlicedReport s = sliced_report(corpus, preds, 0.5);
    for (Level level : {Level::kToken, Level::kExample}) {
      Confusion sum;
      for (Slice slice : {Slice::kSummary, Slice::kData2txt, Slice::kQA}) {
        if (const MetricsReport* r = find(s, level, slice)) sum += r->confusion;
      }
      ASSERT_EQ(find(s, level, Slice::kWhole)->confusion, sum);
    }
  }
}

TEST(SlicedReport, MissingPredictionIsContractViolation) {
  const std::vector<RagRecord> corpus = {record("a", TaskType::kQA, true)};
  EXPECT_THROW(sliced_report(corpus, {}, 0.5), ContractViolation);
}

TEST(SlicedReport, CsvHasHeaderAndOneRowPerReport) {
  const std::vector<RagRecord> corpus = {record("a", TaskType::kQA, true)};
  const std::vector<RecordPrediction> preds = {
      prediction_for(corpus[0], {0.1, 0.8, 0.2})};
  const SlicedReport s = sliced_report(corpus, preds, 0.5);
  const std::string csv = to_csv(s);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'),
            static_cast<long>(s.reports.size()) + 1);
  EXPECT_EQ(csv.rfind("level,slice,threshold", 0), 0u);
}

}  // namespace
}  // namespace halspan
