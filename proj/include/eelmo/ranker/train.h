#ifndef EELMO_RANKER_TRAIN_H_
#define EELMO_RANKER_TRAIN_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eelmo/corpus/indexed.h"
#include "eelmo/corpus/vocab.h"
#include "eelmo/lm/model.h"
#include "eelmo/netcore/gradcheck.h"
#include "eelmo/netcore/tensor.h"
#include "eelmo/ranker/ranker.h"

namespace eelmo::ranker {

// Copies the context and entity extents from the language model.
RankerShape FitToModel(RankerShape shape, const lm::LmModel &model);

struct RankerTrainSpec {
  double lr = 1e-3;
  std::size_t epochs = 10;
  std::uint64_t seed = 1;
  bool fine_tune = false;  // also update the encoder and entity table
};

struct RankerTrainReport {
  std::vector<double> epoch_loss;  // mean per used query
  std::size_t n_used = 0;
  std::size_t n_skipped = 0;  // gold missing from the candidates
};

// Context means computed once under frozen upstream parameters.
struct CachedContext {
  net::Tensor forward;
  net::Tensor backward;
};

std::vector<CachedContext> ComputeContexts(const std::vector<Query> &queries,
                                           const std::vector<corpus::IndexedParagraph> &paragraphs,
                                           lm::LmModel &model);

// Softmax cross-entropy of the gold candidate over the candidate scores.
// Requires the gold among the candidates.
net::Var QueryLoss(net::Tape &tape, const Query &query, const ContextRepr &ctx,
                   lm::LmModel &model, RankerParams &params, bool training,
                   net::SeededRng *dropout_rng);

// Per-candidate scalar scores in candidate order.
std::vector<net::Var> CandidateScores(net::Tape &tape, const Query &query,
                                      const ContextRepr &ctx, lm::LmModel &model,
                                      RankerParams &params, bool training,
                                      net::SeededRng *dropout_rng);

// QueryLoss minus its value at the current parameters, for finite
// differences. Dropout draws restart from `dropout_seed` on every call.
net::LossBuilder CenteredQueryLossBuilder(const Query &query, const CachedContext &ctx,
                                          lm::LmModel &model, RankerParams &params,
                                          bool training, std::uint64_t dropout_seed);

RankerTrainReport TrainRanker(const std::vector<Query> &queries,
                              const std::vector<corpus::IndexedParagraph> &paragraphs,
                              lm::LmModel &model, RankerParams &params,
                              const RankerTrainSpec &spec);

struct Prediction {
  std::string doc_id;
  std::size_t mention_index = 0;  // within the document
  std::string gold;
  std::optional<std::string> predicted;  // empty when there were no candidates
  double score = 0.0;
  bool gold_in_candidates = false;

  bool correct() const { return predicted && *predicted == gold; }
  bool operator==(const Prediction &) const = default;
};

// Evaluation-mode ranking of every query; parallel over queries.
std::vector<Prediction> Predict(const std::vector<Query> &queries,
                                const std::vector<corpus::IndexedParagraph> &paragraphs,
                                lm::LmModel &model, RankerParams &params,
                                const corpus::EntityInventory &inventory);

// Highest-prior candidate, ties by entity id.
std::vector<Prediction> PredictByPrior(const std::vector<Query> &queries,
                                       const corpus::EntityInventory &inventory);

// doc_id<TAB>mention_index<TAB>gold<TAB>predicted<TAB>score, "-" for no
// prediction.
std::string FormatPredictions(const std::vector<Prediction> &predictions);
std::vector<Prediction> ParsePredictions(const std::string &text);

}  // namespace eelmo::ranker

#endif  // EELMO_RANKER_TRAIN_H_
