#ifndef EELMO_RANKER_RANKER_H_
#define EELMO_RANKER_RANKER_H_

#include <cstdint>
#include <string>
#include <vector>

#include "eelmo/corpus/indexed.h"
#include "eelmo/corpus/priors.h"
#include "eelmo/encoder/encoder.h"
#include "eelmo/features/features.h"
#include "eelmo/netcore/parameter.h"
#include "eelmo/netcore/rng.h"
#include "eelmo/netcore/tape.h"

namespace eelmo::ranker {

struct RankerShape {
  std::size_t prior_bins = 15;
  std::size_t lexical_bins = 10;
  bool use_prior = true;
  bool use_lexical = true;
  std::size_t d_context = 32;  // final-layer state extent
  std::size_t d_entity = 32;   // entity embedding extent
  std::size_t hidden = 0;      // 0 selects input_extent / 2
  double dropout = 0.7;        // drop probability after the hidden ReLU
  bool dropout_input = false;  // also drop on the assembled input

  std::size_t input_extent() const;
  std::size_t hidden_extent() const;
};

struct RankerParams {
  RankerShape shape;
  features::BinLayer prior_bin;                  // present when use_prior
  std::vector<features::BinLayer> lexical_bins;  // 10 when use_lexical
  net::Parameter w1, b1, w2, b2;

  static RankerParams Init(const RankerShape &shape, net::SeededRng &rng);

  std::vector<net::Parameter *> BinParams();
  std::vector<net::Parameter *> FeedForwardParams();
  std::vector<net::Parameter *> All();
};

// Mean forward top state over [s-1, e-1] and backward over [s+1, e+1].
struct ContextRepr {
  net::Var forward;
  net::Var backward;
};

ContextRepr ContextRepresentation(net::Tape &tape, const encoder::EncodedSequence &encoded,
                                  const corpus::IndexedMention &mention);

// [f_p bins; f_s[1..10] bins; forward ctx; backward ctx; entity row], with
// ablated blocks left out. Throws DimensionError on extent mismatches.
net::Var AssembleInput(net::Tape &tape, const ContextRepr &ctx,
                       const features::FeatureBundle &bundle, net::Var entity_row,
                       RankerParams &params);

// affine -> ReLU -> dropout -> affine. `dropout_rng` may be null outside
// training.
net::Var Score(net::Tape &tape, net::Var input, RankerParams &params, bool training,
               net::SeededRng *dropout_rng);

struct Candidate {
  corpus::EntityId entity{};
  double prior = 0.0;
  features::FeatureBundle features;
};

struct Query {
  std::size_t paragraph = 0;  // index into the indexed paragraph list
  std::size_t mention = 0;    // index within the paragraph
  std::string doc_id;
  std::size_t doc_mention_index = 0;  // position among the document's mentions
  corpus::EntityId gold{};
  std::string surface;
  std::vector<Candidate> candidates;  // table order: descending prior

  bool gold_in_candidates() const;
  std::size_t gold_index() const;  // requires gold_in_candidates()
};

// One query per gold mention. Candidates come from the table lookup of the
// mention surface; candidate keys absent from the inventory are dropped.
std::vector<Query> BuildQueries(const std::vector<corpus::IndexedParagraph> &paragraphs,
                                const corpus::CandidateTable &table,
                                const corpus::EntityInventory &inventory);

struct ScoredCandidate {
  corpus::EntityId entity{};
  double score = 0.0;
  std::size_t rank = 0;  // 1-based
};

// Sorted by descending score, ties by ascending entity id. Throws QueryError
// for an empty list or mismatched lengths.
std::vector<ScoredCandidate> Rank(const std::vector<corpus::EntityId> &entities,
                                  const std::vector<double> &scores);

}  // namespace eelmo::ranker

#endif  // EELMO_RANKER_RANKER_H_
