#ifndef EELMO_EVALREP_EVALREP_H_
#define EELMO_EVALREP_EVALREP_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "eelmo/corpus/corpus.h"
#include "eelmo/corpus/vocab.h"
#include "eelmo/ranker/train.h"

namespace eelmo::evalrep {

// correct / total. Empty input gives 0 and a warning on stderr; length
// mismatch is a ContractError.
double MicroAccuracy(const std::vector<std::optional<std::string>> &predicted,
                     const std::vector<std::string> &gold);
double MicroAccuracy(const std::vector<ranker::Prediction> &predictions);

// Entity frequency: "unseen" (0), "1-10", "11-50", ">=51".
std::string FrequencyBucket(std::int64_t frequency);
// Gold mentions in the document: "1-4", "5-9", "10-19", ">=20".
std::string DocMentionBucket(std::size_t mentions);

const std::vector<std::string> &FrequencyBucketLabels();
const std::vector<std::string> &DocMentionBucketLabels();

struct BucketStat {
  std::string label;
  std::size_t n = 0;
  std::size_t n_correct = 0;
  double accuracy = 0.0;  // 0 for an empty bucket

  bool operator==(const BucketStat &) const = default;
};

struct EvalReport {
  double micro_accuracy = 0.0;
  std::size_t n_queries = 0;
  std::size_t n_correct = 0;
  std::size_t n_gold_missing = 0;
  std::vector<BucketStat> frequency_buckets;
  std::vector<BucketStat> doc_mention_buckets;

  bool operator==(const EvalReport &) const = default;
};

using DocMentionCounts = std::map<std::string, std::size_t>;

DocMentionCounts CountDocMentions(const std::vector<corpus::Paragraph> &paragraphs);
DocMentionCounts CountDocMentions(const std::vector<ranker::Prediction> &predictions);

// Gold keys missing from the inventory fall in "unseen". Documents missing
// from `doc_mentions` are counted from the predictions themselves.
EvalReport BucketReport(const std::vector<ranker::Prediction> &predictions,
                        const corpus::EntityInventory &inventory,
                        const DocMentionCounts &doc_mentions);

// Keeps predictions whose gold entity was among the candidates.
std::vector<ranker::Prediction> GoldInCandidates(
    const std::vector<ranker::Prediction> &predictions);

// One JSON object per line, same record style as the corpus files.
std::string FormatReport(const EvalReport &report, const std::string &name = "");
std::string FormatReportTable(const EvalReport &report, const std::string &name = "");

struct Ablation {
  std::string name;  // "full", "-prior", "-lexical", "-both"
  bool use_prior = true;
  bool use_lexical = true;
};

const std::vector<Ablation> &AblationConfigs();

struct AblationResult {
  Ablation ablation;
  EvalReport report;
  std::vector<ranker::Prediction> predictions;
  ranker::RankerTrainReport training;
};

struct EvalData {
  const std::vector<ranker::Query> *queries = nullptr;
  const std::vector<corpus::IndexedParagraph> *paragraphs = nullptr;
};

// Trains a fresh ranker per configuration from `init_seed` and evaluates it.
// `model` is only read unless spec.fine_tune is set.
AblationResult TrainAndEvaluate(const Ablation &ablation, const EvalData &train,
                                const EvalData &eval, lm::LmModel &model,
                                ranker::RankerShape shape, const ranker::RankerTrainSpec &spec,
                                std::uint64_t init_seed,
                                const corpus::EntityInventory &inventory,
                                const DocMentionCounts &doc_mentions,
                                bool gold_in_candidates_only = false);

std::vector<AblationResult> AblationEval(const EvalData &train, const EvalData &eval,
                                         const lm::LmModel &model,
                                         const ranker::RankerShape &shape,
                                         const ranker::RankerTrainSpec &spec,
                                         std::uint64_t init_seed,
                                         const corpus::EntityInventory &inventory,
                                         const DocMentionCounts &doc_mentions,
                                         bool gold_in_candidates_only = false);

}  // namespace eelmo::evalrep

#endif  // EELMO_EVALREP_EVALREP_H_
