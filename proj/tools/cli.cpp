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

#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "halspan/align.hpp"
#include "halspan/backend.hpp"
#include "halspan/corpus.hpp"
#include "halspan/detector.hpp"
#include "halspan/error.hpp"
#include "halspan/metrics.hpp"
#include "halspan/tagproto.hpp"
#include "halspan/tokenizer.hpp"

namespace halspan::cli {
namespace {

namespace fs = std::filesystem;

constexpr std::string_view kLabelsVersion = "halspan-labels/1";
constexpr std::string_view kPredictionsVersion = "halspan-predictions/1";
constexpr const char* kDefaultTokenizer = "word-hash:8192";

// Thrown by command bodies to leave with a specific exit code.
struct Exit {
  int code;
  std::string reason;
};

fs::path meta_path(const fs::path& file) {
  return fs::path(file.string() + ".meta.json");
}

void write_json_file(const fs::path& path, const Json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Exit{kUsage, "cannot write " + path.string()};
  out << j.dump(2) << '\n';
}

std::optional<Json> read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Exit{kUsage, path.string() + ": " + e.what()};
  }
}

void require_file(const fs::path& path, std::string_view what) {
  if (!fs::exists(path)) {
    throw Exit{kUsage, std::string(what) + " not found: " + path.string()};
  }
}

std::vector<RagRecord> load_input(const fs::path& path, bool strict) {
  require_file(path, "input corpus");
  try {
    return load_corpus(path, LoadOptions{strict});
  } catch (const Error& e) {
    throw Exit{kUsage, path.string() + ": " + e.what()};
  }
}

class JsonlWriter {
 public:
  explicit JsonlWriter(const fs::path& path)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw Exit{kUsage, "cannot write " + path.string()};
  }
  void write(const Json& j) { out_ << j.dump() << '\n'; }
  void write_line(const std::string& line) { out_ << line << '\n'; }
  ~JsonlWriter() { out_.flush(); }

 private:
  fs::path path_;
  std::ofstream out_;
};

double check_threshold(double t) {
  if (!(t > 0.0 && t < 1.0)) {
    throw Exit{kUsage, "threshold must lie in (0, 1)"};
  }
  return t;
}

std::unique_ptr<Tokenizer> tokenizer_or_usage(const std::string& spec) {
  try {
    return make_tokenizer(spec);
  } catch (const Error& e) {
    throw Exit{kUsage, e.what()};
  }
}

// ---- translate ------------------------------------------------------------

struct TranslateArgs {
  std::string input;
  std::string source_lang;
  std::string target_lang;
  std::string backend = "identity";
  std::string backend_config;
  std::size_t parallelism = kDefaultParallelism;
  std::size_t max_retries = RetryPolicy{}.max_retries;
  std::string out;
  std::string failures_out;
  std::uint64_t seed = 0;
  bool strict = false;
};

Json cmd_translate(const TranslateArgs& a) {
  std::vector<RagRecord> records = load_input(a.input, a.strict);
  if (a.parallelism == 0) throw Exit{kUsage, "--parallelism must be >= 1"};

  std::unique_ptr<TranslationBackend> backend;
  try {
    backend = make_backend(a.backend, a.backend_config);
  } catch (const TransportError& e) {
    throw Exit{kTransport, e.what()};
  } catch (const Error& e) {
    throw Exit{kUsage, e.what()};
  }

  std::vector<RagRecord> eligible;
  std::vector<RecordFailure> mismatched;
  for (RagRecord& r : records) {
    if (!a.source_lang.empty() && r.language != a.source_lang) {
      mismatched.push_back({r.id, FailureKind::kProtocol,
                            "record language \"" + r.language +
                                "\" is not --source-lang \"" + a.source_lang +
                                "\""});
    } else {
      eligible.push_back(std::move(r));
    }
  }

  CorpusTranslation result =
      translate_corpus(eligible, *backend, a.target_lang, a.parallelism,
                       RetryPolicy{a.max_retries});
  result.failures.insert(result.failures.begin(), mismatched.begin(),
                         mismatched.end());

  save_corpus(result.translated, a.out);
  const fs::path failures_path =
      a.failures_out.empty() ? fs::path(a.out + ".failures.jsonl")
                             : fs::path(a.failures_out);
  std::size_t transport = 0;
  {
    JsonlWriter failures(failures_path);
    for (const RecordFailure& f : result.failures) {
      const bool is_transport = f.kind == FailureKind::kTransport;
      transport += is_transport;
      failures.write(Json{{"id", f.id},
                          {"kind", is_transport ? "transport" : "protocol"},
                          {"reason", f.reason}});
    }
  }
  if (transport > 0) {
    std::string first;
    for (const RecordFailure& f : result.failures) {
      if (f.kind == FailureKind::kTransport) {
        first = f.reason;
        break;
      }
    }
    throw Exit{kTransport, std::to_string(transport) +
                               " record(s) hit transport errors; first: " +
                               first};
  }
  if (!result.failures.empty()) {
    throw Exit{kPartialFailure,
               std::to_string(result.failures.size()) +
                   " record(s) failed; see " + failures_path.string()};
  }
  return Json{{"translated", result.translated.size()},
              {"failures", 0},
              {"out", a.out}};
}

// ---- build-labels ---------------------------------------------------------

struct BuildLabelsArgs {
  std::string input;
  std::string tokenizer = kDefaultTokenizer;
  std::size_t max_len = TrainConfig{}.max_len;
  std::string out;
  std::uint64_t seed = 0;
  bool strict = false;
};

Json cmd_build_labels(const BuildLabelsArgs& a, std::ostream& err) {
  require_file(a.input, "input corpus");
  const auto tokenizer = tokenizer_or_usage(a.tokenizer);
  if (a.max_len < kPackingOverhead) {
    throw Exit{kUsage, "--max-len is below the packing overhead"};
  }
  JsonlWriter writer(a.out);
  std::vector<std::string> unencodable;
  std::size_t written = 0;
  std::size_t truncated = 0;
  try {
    CorpusReader reader(a.input, LoadOptions{a.strict});
    while (auto record = reader.next()) {
      try {
        const TokenLabelSequence seq =
            build_labels(to_binary(*record), *tokenizer, a.max_len);
        writer.write(label_line(seq));
        ++written;
        truncated += seq.truncated;
      } catch (const UnencodableRecord& e) {
        err << e.what() << '\n';
        unencodable.push_back(e.id());
      }
    }
  } catch (const Error& e) {
    throw Exit{kUsage, a.input + ": " + e.what()};
  }
  write_json_file(meta_path(a.out),
                  Json{{"version", kLabelsVersion},
                       {"tokenizer", tokenizer->name()},
                       {"max_len", a.max_len},
                       {"seed", a.seed},
                       {"ignore_label", kIgnoreLabel},
                       {"records", written},
                       {"unencodable", unencodable}});
  if (!unencodable.empty()) {
    std::string ids;
    for (const std::string& id : unencodable) ids += (ids.empty() ? "" : ",") + id;
    throw Exit{kPartialFailure, "unencodable records: " + ids};
  }
  return Json{{"records", written}, {"truncated", truncated}, {"out", a.out}};
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
  std::string labels;
  std::string model_dir;
  std::string tokenizer;
  TrainConfig train;
  ToyEncoderConfig encoder;
};

Json cmd_train(const TrainArgs& a) {
  require_file(a.labels, "label file");
  const std::optional<Json> meta = read_json_file(meta_path(a.labels));
  if (!meta) {
    throw Exit{kArtifactMismatch,
               "label file has no manifest " + meta_path(a.labels).string()};
  }
  const std::string label_tokenizer = meta->value("tokenizer", "");
  if (!a.tokenizer.empty() && a.tokenizer != label_tokenizer) {
    throw Exit{kArtifactMismatch, "tokenizer " + a.tokenizer +
                                      " does not match label file tokenizer " +
                                      label_tokenizer};
  }
  const auto tokenizer = tokenizer_or_usage(label_tokenizer);

  std::vector<TokenLabelSequence> data;
  try {
    data = load_label_file(a.labels);
  } catch (const Error& e) {
    throw Exit{kUsage, a.labels + ": " + e.what()};
  }
  for (const TokenLabelSequence& seq : data) {
    if (seq.tokens.size() > a.train.max_len) {
      throw Exit{kArtifactMismatch,
                 "sequence " + seq.id + " has " +
                     std::to_string(seq.tokens.size()) +
                     " tokens, beyond max_len " +
                     std::to_string(a.train.max_len)};
    }
  }

  ToyEncoderConfig enc = a.encoder;
  enc.vocab_size = tokenizer->vocab_size();
  TokenClassifier model(std::make_unique<ToyTransformerEncoder>(enc, a.train.seed),
                        a.train.seed);
  TrainResult result;
  try {
    result = train(model, data, a.train);
  } catch (const ContractViolation& e) {
    throw Exit{kUsage, e.what()};
  }

  ModelManifest manifest;
  manifest.backbone_id = model.encoder().backbone_id();
  manifest.max_len = a.train.max_len;
  manifest.tokenizer = label_tokenizer;
  manifest.seed = a.train.seed;
  manifest.encoder_config = model.encoder().config();
  manifest.train_config = to_json(a.train);
  try {
    save_model(model, manifest, a.model_dir);
  } catch (const IoError& e) {
    throw Exit{kUsage, e.what()};
  }
  return Json{{"model_dir", a.model_dir},
              {"epochs", result.epoch_loss.size()},
              {"epoch_loss", result.epoch_loss},
              {"seed", a.train.seed}};
}

// ---- predict --------------------------------------------------------------

struct PredictArgs {
  std::string model_dir;
  std::string input;
  std::optional<double> threshold;
  std::string tokenizer;
  std::string out;
  std::size_t threads = 1;
  bool strict = false;
};

Json prediction_line(const RecordPrediction& p) {
  Json spans = Json::array();
  for (const PredictedSpan& s : p.spans) {
    spans.push_back({{"start", s.span.start},
                     {"end", s.span.end},
                     {"confidence", s.confidence}});
  }
  Json tokens = Json::array();
  for (std::size_t i = 0; i < p.tokens.size(); ++i) {
    tokens.push_back({{"start", p.tokens[i].char_start},
                      {"end", p.tokens[i].char_end},
                      {"prob", p.probs[i]}});
  }
  return Json{{"id", p.id},
              {"spans", std::move(spans)},
              {"score", p.score()},
              {"tokens", std::move(tokens)}};
}

Json cmd_predict(const PredictArgs& a, std::ostream& err) {
  require_file(a.model_dir, "model directory");
  LoadedModel loaded;
  try {
    loaded = load_model(a.model_dir);
  } catch (const Error& e) {
    throw Exit{kArtifactMismatch, e.what()};
  }
  if (!a.tokenizer.empty() && a.tokenizer != loaded.manifest.tokenizer) {
    throw Exit{kArtifactMismatch, "tokenizer " + a.tokenizer +
                                      " does not match model tokenizer " +
                                      loaded.manifest.tokenizer};
  }
  const auto tokenizer = tokenizer_or_usage(loaded.manifest.tokenizer);
  if (tokenizer->vocab_size() != loaded.model->encoder().vocab_size()) {
    throw Exit{kArtifactMismatch, "model vocabulary does not match tokenizer " +
                                      loaded.manifest.tokenizer};
  }
  const double threshold =
      check_threshold(a.threshold.value_or(loaded.manifest.threshold_default));
  const std::vector<RagRecord> records = load_input(a.input, a.strict);

  std::vector<TokenLabelSequence> seqs;
  std::vector<std::string> unencodable;
  for (const RagRecord& r : records) {
    try {
      seqs.push_back(build_labels(to_binary(r), *tokenizer,
                                  loaded.manifest.max_len));
    } catch (const UnencodableRecord& e) {
      err << e.what() << '\n';
      unencodable.push_back(e.id());
    }
  }
  const std::vector<TokenPrediction> preds =
      predict(*loaded.model, seqs, 8, std::max<std::size_t>(1, a.threads));
  std::size_t span_count = 0;
  {
    JsonlWriter writer(a.out);
    for (const TokenPrediction& p : preds) {
      const RecordPrediction rp = make_record_prediction(p, threshold);
      span_count += rp.spans.size();
      writer.write(prediction_line(rp));
    }
  }
  write_json_file(meta_path(a.out),
                  Json{{"version", kPredictionsVersion},
                       {"model_manifest_version", loaded.manifest.version},
                       {"tokenizer", loaded.manifest.tokenizer},
                       {"threshold", threshold},
                       {"seed", loaded.manifest.seed},
                       {"unencodable", unencodable}});
  if (!unencodable.empty()) {
    throw Exit{kPartialFailure, std::to_string(unencodable.size()) +
                                    " record(s) could not be encoded"};
  }
  return Json{{"records", preds.size()},
              {"spans", span_count},
              {"threshold", threshold},
              {"out", a.out}};
}

// ---- evaluate -------------------------------------------------------------

struct EvaluateArgs {
  std::string gold;
  std::string predictions;
  std::string report_dir;
  std::optional<double> threshold;
  bool strict = false;
};

std::vector<RecordPrediction> load_predictions(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Exit{kUsage, "cannot open " + path.string()};
  std::vector<RecordPrediction> out;
  std::string text;
  std::size_t line = 0;
  try {
    while (std::getline(in, text)) {
      ++line;
      if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
      const Json j = Json::parse(text);
      RecordPrediction p;
      p.id = j.at("id").get<std::string>();
      for (const Json& s : j.at("spans")) {
        PredictedSpan ps;
        ps.span = hallucinated_span(s.at("start").get<std::size_t>(),
                                    s.at("end").get<std::size_t>());
        ps.confidence = s.at("confidence").get<double>();
        p.spans.push_back(std::move(ps));
      }
      if (j.contains("tokens")) {
        for (const Json& t : j.at("tokens")) {
          OffsetToken tok;
          tok.index = p.tokens.size();
          tok.char_start = t.at("start").get<std::size_t>();
          tok.char_end = t.at("end").get<std::size_t>();
          tok.segment = Segment::kAnswer;
          p.tokens.push_back(tok);
          p.probs.push_back(t.at("prob").get<double>());
        }
      }
      out.push_back(std::move(p));
    }
  } catch (const Json::exception& e) {
    throw Exit{kUsage, path.string() + ": line " + std::to_string(line) + ": " +
                           e.what()};
  }
  return out;
}

Json cmd_evaluate(const EvaluateArgs& a) {
  const std::vector<RagRecord> gold = load_input(a.gold, a.strict);
  require_file(a.predictions, "predictions file");
  const std::vector<RecordPrediction> preds = load_predictions(a.predictions);
  const std::optional<Json> meta = read_json_file(meta_path(a.predictions));

  std::set<std::string> gold_ids, pred_ids;
  for (const RagRecord& r : gold) gold_ids.insert(r.id);
  for (const RecordPrediction& p : preds) pred_ids.insert(p.id);
  if (gold_ids != pred_ids || pred_ids.size() != preds.size()) {
    std::string detail;
    for (const std::string& id : gold_ids) {
      if (!pred_ids.contains(id)) detail += " missing-prediction:" + id;
    }
    for (const std::string& id : pred_ids) {
      if (!gold_ids.contains(id)) detail += " unknown-id:" + id;
    }
    if (pred_ids.size() != preds.size()) detail += " duplicate-prediction-ids";
    throw Exit{kArtifactMismatch, "gold and prediction ids differ:" + detail};
  }

  double threshold = kDefaultThreshold;
  if (meta && meta->contains("threshold")) threshold = meta->at("threshold");
  if (a.threshold) threshold = *a.threshold;
  check_threshold(threshold);
  const std::string version =
      meta ? meta->value("model_manifest_version", "") : "";

  SlicedReport report;
  try {
    report = sliced_report(gold, preds, threshold);
  } catch (const ContractViolation& e) {
    throw Exit{kArtifactMismatch, e.what()};
  }

  std::error_code ec;
  fs::create_directories(a.report_dir, ec);
  if (ec) throw Exit{kUsage, "cannot create " + a.report_dir};
  Json doc = to_json(report, version);
  doc["threshold"] = threshold;
  doc["model_manifest_version"] = version;
  write_json_file(fs::path(a.report_dir) / "report.json", doc);
  {
    std::ofstream csv(fs::path(a.report_dir) / "report.csv", std::ios::trunc);
    if (!csv) throw Exit{kUsage, "cannot write report.csv"};
    csv << to_csv(report);
  }

  Json summary{{"report_dir", a.report_dir}, {"threshold", threshold}};
  for (const MetricsReport& m : report.reports) {
    if (m.slice != Slice::kWhole) continue;
    const std::string key = std::string(to_string(m.level)) + "_f1";
    summary[key] = m.class_1.f1.has_value() ? Json(*m.class_1.f1.value)
                                            : Json(nullptr);
  }
  return summary;
}

// ---- stats ----------------------------------------------------------------

struct StatsArgs {
  std::string input;
  std::string tokenizer = kDefaultTokenizer;
};

Json cmd_stats(const StatsArgs& a) {
  const std::vector<RagRecord> records = load_input(a.input, false);
  const auto tokenizer = tokenizer_or_usage(a.tokenizer);
  if (records.empty()) throw Exit{kUsage, "corpus is empty"};
  const LengthStats s = length_stats(records, *tokenizer);
  return Json{{"records", records.size()}, {"mean", s.mean},
              {"median", s.median},        {"min", s.min},
              {"max", s.max},              {"tokenizer", tokenizer->name()}};
}

// Flags that a --config JSON object may set, per command. Values on the
// command line win over the file.
std::vector<std::string> with_config(const std::vector<std::string>& args) {
  auto it = std::find(args.begin(), args.end(), "--config");
  std::string path;
  std::vector<std::string> rest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (path.empty()) {
    if (it != args.end()) throw Exit{kUsage, "--config needs a file"};
    return args;
  }
  const std::optional<Json> config = read_json_file(path);
  if (!config) throw Exit{kUsage, "config file not found: " + path};
  if (!config->is_object()) throw Exit{kUsage, "config must be a JSON object"};
  for (auto kv = config->begin(); kv != config->end(); ++kv) {
    const std::string flag = "--" + kv.key();
    const bool given = std::any_of(rest.begin(), rest.end(), [&](const auto& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
    if (given) continue;
    if (kv->is_boolean()) {
      if (kv->get<bool>()) rest.push_back(flag);
      continue;
    }
    rest.push_back(flag);
    rest.push_back(kv->is_string() ? kv->get<std::string>() : kv->dump());
  }
  return rest;
}

void use_stderr_logger() {
  static const bool once = [] {
    auto logger = spdlog::get("halspan");
    if (!logger) logger = spdlog::stderr_color_mt("halspan");
    spdlog::set_default_logger(logger);
    return true;
  }();
  (void)once;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out,
        std::ostream& err) {
  use_stderr_logger();
  auto fail = [&](int code, const std::string& reason) {
    err << Json{{"status", "error"}, {"exit", code}, {"reason", reason}}.dump()
        << '\n';
    return code;
  };

  std::vector<std::string> args;
  try {
    args = with_config(raw_args);
  } catch (const Exit& e) {
    return fail(e.code, e.reason);
  }

  CLI::App app{"Token-level hallucination detection pipeline", "halspan"};
  app.require_subcommand(1);

  TranslateArgs translate_args;
  auto* translate = app.add_subcommand("translate",
                                       "Translate a corpus, preserving spans");
  translate->add_option("input", translate_args.input, "Input JSONL corpus")
      ->required();
  translate->add_option("--source-lang", translate_args.source_lang,
                        "Only translate records in this language");
  translate->add_option("--target-lang", translate_args.target_lang)->required();
  translate->add_option("--backend", translate_args.backend,
                        "identity | drop-close-tag | http")
      ->capture_default_str();
  translate->add_option("--backend-config", translate_args.backend_config,
                        "JSON with endpoint, model, timeout_seconds");
  translate->add_option("--parallelism", translate_args.parallelism)
      ->capture_default_str();
  translate->add_option("--max-retries", translate_args.max_retries)
      ->capture_default_str();
  translate->add_option("--out", translate_args.out)->required();
  translate->add_option("--failures-out", translate_args.failures_out);
  translate->add_flag("--strict", translate_args.strict);
  translate->add_option("--seed", translate_args.seed,
                        "Accepted for a shared config; translation is seedless");

  BuildLabelsArgs labels_args;
  auto* build = app.add_subcommand("build-labels",
                                   "Tokenize and write per-token labels");
  build->add_option("input", labels_args.input)->required();
  build->add_option("--tokenizer", labels_args.tokenizer)->capture_default_str();
  build->add_option("--max-len", labels_args.max_len)->capture_default_str();
  build->add_option("--out", labels_args.out)->required();
  build->add_option("--seed", labels_args.seed)->capture_default_str();
  build->add_flag("--strict", labels_args.strict);

  TrainArgs train_args;
  std::size_t hidden = train_args.encoder.hidden_size;
  auto* train_cmd = app.add_subcommand("train", "Train the token classifier");
  train_cmd->add_option("labels", train_args.labels)->required();
  train_cmd->add_option("--model-dir", train_args.model_dir)->required();
  train_cmd->add_option("--tokenizer", train_args.tokenizer,
                        "Expected tokenizer; must match the label file");
  train_cmd->add_option("--epochs", train_args.train.epochs)
      ->capture_default_str();
  train_cmd->add_option("--learning-rate", train_args.train.learning_rate)
      ->capture_default_str();
  train_cmd->add_option("--batch-size", train_args.train.batch_size)
      ->capture_default_str();
  train_cmd->add_option("--max-len", train_args.train.max_len)
      ->capture_default_str();
  train_cmd->add_option("--weight-decay", train_args.train.weight_decay)
      ->capture_default_str();
  train_cmd->add_option("--seed", train_args.train.seed)->capture_default_str();
  train_cmd->add_option("--hidden-size", hidden)->capture_default_str();
  train_cmd->add_option("--ffn-size", train_args.encoder.ffn_size)
      ->capture_default_str();
  train_cmd->add_option("--layers", train_args.encoder.layers)
      ->capture_default_str();

  PredictArgs predict_args;
  double predict_threshold = 0;
  auto* predict_cmd = app.add_subcommand("predict", "Detect hallucinated spans");
  predict_cmd->add_option("model_dir", predict_args.model_dir)->required();
  predict_cmd->add_option("input", predict_args.input)->required();
  auto* predict_thr = predict_cmd->add_option("--threshold", predict_threshold);
  predict_cmd->add_option("--tokenizer", predict_args.tokenizer,
                          "Expected tokenizer; must match the model");
  predict_cmd->add_option("--threads", predict_args.threads)
      ->capture_default_str();
  predict_cmd->add_option("--out", predict_args.out)->required();
  predict_cmd->add_flag("--strict", predict_args.strict);

  EvaluateArgs eval_args;
  double eval_threshold = 0;
  auto* evaluate = app.add_subcommand("evaluate", "Score predictions");
  evaluate->add_option("gold", eval_args.gold)->required();
  evaluate->add_option("predictions", eval_args.predictions)->required();
  evaluate->add_option("--report-dir", eval_args.report_dir)->required();
  auto* eval_thr = evaluate->add_option("--threshold", eval_threshold);
  evaluate->add_flag("--strict", eval_args.strict);

  StatsArgs stats_args;
  auto* stats = app.add_subcommand("stats", "Packed token length statistics");
  stats->add_option("input", stats_args.input)->required();
  stats->add_option("--tokenizer", stats_args.tokenizer)->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    return fail(kUsage, e.what());
  }

  Json summary;
  std::string command;
  try {
    if (*translate) {
      command = "translate";
      summary = cmd_translate(translate_args);
    } else if (*build) {
      command = "build-labels";
      summary = cmd_build_labels(labels_args, err);
    } else if (*train_cmd) {
      command = "train";
      train_args.encoder.hidden_size = hidden;
      summary = cmd_train(train_args);
    } else if (*predict_cmd) {
      command = "predict";
      if (predict_thr->count() > 0) predict_args.threshold = predict_threshold;
      summary = cmd_predict(predict_args, err);
    } else if (*evaluate) {
      command = "evaluate";
      if (eval_thr->count() > 0) eval_args.threshold = eval_threshold;
      summary = cmd_evaluate(eval_args);
    } else if (*stats) {
      command = "stats";
      summary = cmd_stats(stats_args);
    }
  } catch (const Exit& e) {
    return fail(e.code, e.reason);
  } catch (const TransportError& e) {
    return fail(kTransport, e.what());
  } catch (const std::exception& e) {
    return fail(kUsage, e.what());
  }

  Json line{{"status", "ok"}, {"command", command}};
  for (auto it = summary.begin(); it != summary.end(); ++it) {
    line[it.key()] = it.value();
  }
  out << line.dump() << '\n';
  return kOk;
}

}  // namespace halspan::cli
