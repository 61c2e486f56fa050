#ifndef EELMO_LM_MODEL_H_
#define EELMO_LM_MODEL_H_

#include <cstdint>
#include <string>
#include <vector>

#include "eelmo/corpus/indexed.h"
#include "eelmo/corpus/vocab.h"
#include "eelmo/encoder/encoder.h"
#include "eelmo/lm/targets.h"
#include "eelmo/netcore/gradcheck.h"
#include "eelmo/netcore/parameter.h"
#include "eelmo/netcore/rng.h"
#include "eelmo/netcore/tape.h"

namespace eelmo::lm {

enum class LmConfig { kA, kB, kC };

LmConfig ParseLmConfig(const std::string &name);
const char *LmConfigName(LmConfig config);

struct LmShape {
  encoder::EncoderShape encoder;
  std::size_t vocab = 0;
  std::size_t entities = 0;
};

// Encoder plus the word output table (ThetaS) and entity table (ThetaE),
// each shared by both directions.
struct LmModel {
  encoder::EncoderParams encoder;
  net::Parameter word_table;    // [V x d_h]
  net::Parameter entity_table;  // [E x d_h], rows on the unit sphere

  // The entity table starts at zero; call InitEntityEmbeddings next.
  static LmModel Init(const LmShape &shape, net::SeededRng &rng);

  std::vector<net::Parameter *> All();
  std::size_t d() const { return encoder.shape.d_h; }
};

// ThetaE[e] = normalized mean of ThetaS over the title tokens of e.
// Throws InitializationError for an empty title or a zero mean.
net::Tensor EntityEmbeddingsFromTitles(const corpus::EntityInventory &inventory,
                                       const net::Tensor &word_table);
void InitEntityEmbeddings(const corpus::EntityInventory &inventory,
                          LmModel &model);

struct LossSpec {
  LmConfig config = LmConfig::kB;
  std::size_t n_negatives_words = 64;
  std::size_t n_negatives_entities = 64;
  double entity_scale = 1.0;
};

// Negative counts clamped to the output-space size minus one.
LossSpec ResolveNegatives(LossSpec spec, std::size_t vocab, std::size_t entities);

enum class Direction { kForward = 0, kBackward = 1 };

struct TermRecord {
  Direction direction;
  std::size_t position;
  Target target;
  double nll;
};

struct LossBreakdown {
  double ll_w = 0.0;  // summed word NLL
  double ll_e = 0.0;  // summed entity NLL, before entity_scale
  std::size_t word_terms = 0;
  std::size_t entity_terms = 0;
  std::vector<TermRecord> terms;

  double total(double entity_scale = 1.0) const { return ll_w + entity_scale * ll_e; }
};

struct LossResult {
  net::Var loss;  // scalar; a constant 0 when no term applies
  bool has_terms = false;
  LossBreakdown breakdown;
  std::vector<net::Var> term_vars;  // parallel to breakdown.terms, unscaled
};

// Negative log-likelihood of every planned target. Forward terms score the
// forward top state at k, backward terms the backward top state at k. The
// negatives of a term are drawn from negatives.Fork(key(direction, k, kind)),
// so they do not depend on which other terms are present.
LossResult EelmoLoss(net::Tape &tape, const corpus::IndexedParagraph &paragraph,
                     const TargetPlan &plan, LmModel &model, const LossSpec &spec,
                     const net::SeededRng &negatives);

// The loss minus its per-term values at the current parameters. Same
// gradient as EelmoLoss, but finite differences no longer cancel against a
// large total, which keeps their rounding noise near 1e-12.
net::LossBuilder CenteredLossBuilder(const corpus::IndexedParagraph &paragraph,
                                     const TargetPlan &plan, LmModel &model,
                                     const LossSpec &spec, net::SeededRng negatives);

}  // namespace eelmo::lm

#endif  // EELMO_LM_MODEL_H_
