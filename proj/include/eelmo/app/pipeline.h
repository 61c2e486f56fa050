#ifndef EELMO_APP_PIPELINE_H_
#define EELMO_APP_PIPELINE_H_

#include <optional>
#include <string>
#include <vector>

#include "eelmo/app/checkpoint.h"
#include "eelmo/app/config.h"
#include "eelmo/corpus/corpus.h"
#include "eelmo/corpus/indexed.h"
#include "eelmo/corpus/priors.h"
#include "eelmo/corpus/vocab.h"
#include "eelmo/evalrep/evalrep.h"
#include "eelmo/lm/model.h"
#include "eelmo/lm/train.h"
#include "eelmo/ranker/train.h"

namespace eelmo::app {

// File names inside a data directory.
inline constexpr const char *kCorpusFile = "corpus.jsonl";
inline constexpr const char *kTrainFile = "train.jsonl";
inline constexpr const char *kDevFile = "dev.jsonl";
inline constexpr const char *kTestFile = "test.jsonl";
inline constexpr const char *kInventoryFile = "inventory.tsv";
inline constexpr const char *kCandidatesFile = "candidates.tsv";

std::string JoinPath(const std::string &dir, const std::string &name);
// Creates `dir` and parents; throws IoError.
void EnsureDirectory(const std::string &dir);

struct DataSet {
  std::vector<corpus::Paragraph> train, dev, test;
  corpus::EntityInventory inventory;
  corpus::CandidateTable candidates;

  // "train", "dev", "test", "heldout" (dev then test) or "all".
  std::vector<corpus::Paragraph> Split(const std::string &name) const;
};

// Synthetic corpus, document split, inventory with train-split frequencies
// and a candidate table built from the train split.
DataSet Synthesize(const RunConfig &config);
void WriteDataSet(const std::string &dir, const DataSet &data);
DataSet LoadDataSet(const std::string &dir);

// Model plus the indexing tables it was built with.
struct LmBundle {
  corpus::Vocabulary vocab;
  corpus::CharAlphabet alphabet;
  lm::LmModel model;
  std::size_t max_chars = 16;

  std::vector<corpus::IndexedParagraph> Index(const std::vector<corpus::Paragraph> &paragraphs,
                                              const corpus::EntityInventory &inventory) const;
};

// Vocabulary from train paragraphs plus title words, alphabet from the same,
// seeded init, entity rows from titles.
LmBundle InitLm(const RunConfig &config, const DataSet &data);
Checkpoint LmToCheckpoint(const RunConfig &config, LmBundle &lm);
LmBundle LmFromCheckpoint(const Checkpoint &checkpoint, const corpus::EntityInventory &inventory);

struct LmRun {
  LmBundle lm;
  std::vector<lm::EpochLoss> trace;
};

LmRun TrainLmStage(const RunConfig &config, const DataSet &data,
                   const lm::StepObserver &observer = {});

Checkpoint RankerToCheckpoint(const RunConfig &config, ranker::RankerParams &params);
ranker::RankerParams RankerFromCheckpoint(const Checkpoint &checkpoint);

struct RankerRun {
  ranker::RankerParams params;
  ranker::RankerTrainReport report;
};

RankerRun TrainRankerStage(const RunConfig &config, const DataSet &data, LmBundle &lm);
// "epoch<TAB>loss" lines.
std::string FormatRankerTrace(const ranker::RankerTrainReport &report);

struct EvalRun {
  std::vector<ranker::Prediction> predictions;
  evalrep::EvalReport report;
  std::vector<ranker::Prediction> prior_predictions;
  evalrep::EvalReport prior_report;
};

EvalRun EvaluateStage(const DataSet &data, const std::string &split, LmBundle &lm,
                      ranker::RankerParams &params, bool gold_in_candidates_only);

// The four retrained ablation configurations on `split`.
std::vector<evalrep::AblationResult> AblationStage(const RunConfig &config, const DataSet &data,
                                                   const std::string &split, LmBundle &lm,
                                                   bool gold_in_candidates_only);

}  // namespace eelmo::app

#endif  // EELMO_APP_PIPELINE_H_
