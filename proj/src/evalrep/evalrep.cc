#include "eelmo/evalrep/evalrep.h"

#include <cstdio>
#include <iostream>
#include <sstream>

#include "eelmo/errors.h"
#include "json.hpp"

namespace eelmo::evalrep {

using json = nlohmann::json;

double MicroAccuracy(const std::vector<std::optional<std::string>> &predicted,
                     const std::vector<std::string> &gold) {
  if (predicted.size() != gold.size()) {
    throw ContractError("micro accuracy over " + std::to_string(predicted.size()) +
                        " predictions and " + std::to_string(gold.size()) + " gold labels");
  }
  if (gold.empty()) {
    std::cerr << "warning: micro accuracy of an empty set is reported as 0\n";
    return 0.0;
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (predicted[i] && *predicted[i] == gold[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(gold.size());
}

double MicroAccuracy(const std::vector<ranker::Prediction> &predictions) {
  std::vector<std::optional<std::string>> predicted;
  std::vector<std::string> gold;
  for (const ranker::Prediction &p : predictions) {
    predicted.push_back(p.predicted);
    gold.push_back(p.gold);
  }
  return MicroAccuracy(predicted, gold);
}

std::string FrequencyBucket(std::int64_t frequency) {
  if (frequency <= 0) return "unseen";
  if (frequency <= 10) return "1-10";
  if (frequency <= 50) return "11-50";
  return ">=51";
}

std::string DocMentionBucket(std::size_t mentions) {
  if (mentions <= 4) return "1-4";
  if (mentions <= 9) return "5-9";
  if (mentions <= 19) return "10-19";
  return ">=20";
}

const std::vector<std::string> &FrequencyBucketLabels() {
  static const std::vector<std::string> labels{"unseen", "1-10", "11-50", ">=51"};
  return labels;
}

const std::vector<std::string> &DocMentionBucketLabels() {
  static const std::vector<std::string> labels{"1-4", "5-9", "10-19", ">=20"};
  return labels;
}

DocMentionCounts CountDocMentions(const std::vector<corpus::Paragraph> &paragraphs) {
  DocMentionCounts counts;
  for (const corpus::Paragraph &p : paragraphs) counts[p.doc_id] += p.mentions.size();
  return counts;
}

DocMentionCounts CountDocMentions(const std::vector<ranker::Prediction> &predictions) {
  DocMentionCounts counts;
  for (const ranker::Prediction &p : predictions) ++counts[p.doc_id];
  return counts;
}

namespace {

std::vector<BucketStat> Empty(const std::vector<std::string> &labels) {
  std::vector<BucketStat> out;
  for (const std::string &l : labels) out.push_back({l});
  return out;
}

void Add(std::vector<BucketStat> &buckets, const std::string &label, bool correct) {
  for (BucketStat &b : buckets) {
    if (b.label == label) {
      ++b.n;
      if (correct) ++b.n_correct;
      return;
    }
  }
}

void Finish(std::vector<BucketStat> &buckets) {
  for (BucketStat &b : buckets) {
    b.accuracy = b.n ? static_cast<double>(b.n_correct) / static_cast<double>(b.n) : 0.0;
  }
}

json BucketsJson(const std::vector<BucketStat> &buckets) {
  json out = json::array();
  for (const BucketStat &b : buckets) {
    out.push_back({{"label", b.label}, {"n", b.n}, {"correct", b.n_correct},
                   {"accuracy", b.accuracy}});
  }
  return out;
}

}  // namespace

EvalReport BucketReport(const std::vector<ranker::Prediction> &predictions,
                        const corpus::EntityInventory &inventory,
                        const DocMentionCounts &doc_mentions) {
  const DocMentionCounts own = CountDocMentions(predictions);
  EvalReport r;
  r.frequency_buckets = Empty(FrequencyBucketLabels());
  r.doc_mention_buckets = Empty(DocMentionBucketLabels());
  for (const ranker::Prediction &p : predictions) {
    const bool correct = p.correct();
    ++r.n_queries;
    if (correct) ++r.n_correct;
    if (!p.gold_in_candidates) ++r.n_gold_missing;
    std::int64_t freq = 0;
    if (auto id = inventory.Find(p.gold)) freq = inventory.entry(*id).frequency;
    Add(r.frequency_buckets, FrequencyBucket(freq), correct);
    auto it = doc_mentions.find(p.doc_id);
    const std::size_t n = it != doc_mentions.end() ? it->second : own.at(p.doc_id);
    Add(r.doc_mention_buckets, DocMentionBucket(n), correct);
  }
  Finish(r.frequency_buckets);
  Finish(r.doc_mention_buckets);
  r.micro_accuracy = r.n_queries ? static_cast<double>(r.n_correct) /
                                       static_cast<double>(r.n_queries)
                                 : MicroAccuracy({}, {});
  return r;
}

std::vector<ranker::Prediction> GoldInCandidates(
    const std::vector<ranker::Prediction> &predictions) {
  std::vector<ranker::Prediction> out;
  for (const ranker::Prediction &p : predictions) {
    if (p.gold_in_candidates) out.push_back(p);
  }
  return out;
}

std::string FormatReport(const EvalReport &report, const std::string &name) {
  json record;
  if (!name.empty()) record["name"] = name;
  record["micro_accuracy"] = report.micro_accuracy;
  record["n_queries"] = report.n_queries;
  record["n_correct"] = report.n_correct;
  record["n_gold_missing"] = report.n_gold_missing;
  record["frequency_buckets"] = BucketsJson(report.frequency_buckets);
  record["doc_mention_buckets"] = BucketsJson(report.doc_mention_buckets);
  return record.dump() + "\n";
}

std::string FormatReportTable(const EvalReport &report, const std::string &name) {
  std::ostringstream out;
  char line[128];
  if (!name.empty()) out << "[" << name << "]\n";
  std::snprintf(line, sizeof line, "micro accuracy %.4f (%zu/%zu, gold missing %zu)\n",
                report.micro_accuracy, report.n_correct, report.n_queries,
                report.n_gold_missing);
  out << line;
  auto section = [&](const char *title, const std::vector<BucketStat> &buckets) {
    out << title << "\n";
    for (const BucketStat &b : buckets) {
      std::snprintf(line, sizeof line, "  %-8s %6zu  %.4f\n", b.label.c_str(), b.n, b.accuracy);
      out << line;
    }
  };
  section("entity frequency", report.frequency_buckets);
  section("mentions in document", report.doc_mention_buckets);
  return out.str();
}

const std::vector<Ablation> &AblationConfigs() {
  static const std::vector<Ablation> configs{
      {"full", true, true}, {"-prior", false, true}, {"-lexical", true, false},
      {"-both", false, false}};
  return configs;
}

AblationResult TrainAndEvaluate(const Ablation &ablation, const EvalData &train,
                                const EvalData &eval, lm::LmModel &model,
                                ranker::RankerShape shape, const ranker::RankerTrainSpec &spec,
                                std::uint64_t init_seed,
                                const corpus::EntityInventory &inventory,
                                const DocMentionCounts &doc_mentions,
                                bool gold_in_candidates_only) {
  shape.use_prior = ablation.use_prior;
  shape.use_lexical = ablation.use_lexical;
  net::SeededRng rng(init_seed);
  ranker::RankerParams params = ranker::RankerParams::Init(shape, rng);
  AblationResult result;
  result.ablation = ablation;
  result.training = ranker::TrainRanker(*train.queries, *train.paragraphs, model, params, spec);
  result.predictions =
      ranker::Predict(*eval.queries, *eval.paragraphs, model, params, inventory);
  if (gold_in_candidates_only) result.predictions = GoldInCandidates(result.predictions);
  result.report = BucketReport(result.predictions, inventory, doc_mentions);
  return result;
}

std::vector<AblationResult> AblationEval(const EvalData &train, const EvalData &eval,
                                         const lm::LmModel &model,
                                         const ranker::RankerShape &shape,
                                         const ranker::RankerTrainSpec &spec,
                                         std::uint64_t init_seed,
                                         const corpus::EntityInventory &inventory,
                                         const DocMentionCounts &doc_mentions,
                                         bool gold_in_candidates_only) {
  std::vector<AblationResult> out;
  for (const Ablation &a : AblationConfigs()) {
    lm::LmModel copy = model;  // fine-tuning must not leak across runs
    out.push_back(TrainAndEvaluate(a, train, eval, copy, shape, spec, init_seed, inventory,
                                   doc_mentions, gold_in_candidates_only));
  }
  return out;
}

}  // namespace eelmo::evalrep
