#ifndef EELMO_LM_TRAIN_H_
#define EELMO_LM_TRAIN_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "eelmo/corpus/indexed.h"
#include "eelmo/lm/model.h"

namespace eelmo::lm {

struct TrainSpec {
  LmConfig config = LmConfig::kB;
  double lr = 0.1;
  std::size_t epochs = 10;
  // 0 selects min(size - 1, 64).
  std::size_t n_negatives_words = 0;
  std::size_t n_negatives_entities = 0;
  double entity_scale = 1.0;
  std::size_t batch = 1;  // paragraphs per optimizer step
  std::uint64_t seed = 1;
};

// Per-epoch means over paragraphs of the summed NLLs.
struct EpochLoss {
  std::size_t epoch = 0;  // 1-based
  double ll_w = 0.0;
  double ll_e = 0.0;
  double total = 0.0;
};

// Called after every optimizer step (and after renormalization).
using StepObserver =
    std::function<void(std::size_t epoch, std::size_t step, const LmModel &model)>;

LossSpec MakeLossSpec(const TrainSpec &spec, const LmModel &model);

// Config a trains only ThetaE; b trains everything; c trains everything on
// the entity terms alone. AdaGrad; every ThetaE row touched by a step is put
// back on the unit sphere. Trainable flags are restored on return.
// Throws DivergenceError naming epoch and paragraph on a non-finite loss.
std::vector<EpochLoss> TrainLm(const std::vector<corpus::IndexedParagraph> &paragraphs,
                               const TrainSpec &spec, LmModel &model,
                               const StepObserver &observer = {});

// Mean loss over paragraphs without updating anything; parallel over
// paragraphs.
EpochLoss EvaluateLm(const std::vector<corpus::IndexedParagraph> &paragraphs,
                     const TrainSpec &spec, LmModel &model);

// "epoch<TAB>ll_w<TAB>ll_e<TAB>total" lines.
std::string FormatLossTrace(const std::vector<EpochLoss> &trace);

}  // namespace eelmo::lm

#endif  // EELMO_LM_TRAIN_H_
