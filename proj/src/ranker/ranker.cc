#include "eelmo/ranker/ranker.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "eelmo/errors.h"
#include "eelmo/netcore/layers.h"
#include "eelmo/netcore/optim.h"

namespace eelmo::ranker {

std::size_t RankerShape::input_extent() const {
  std::size_t n = 2 * d_context + d_entity;
  if (use_prior) n += prior_bins;
  if (use_lexical) n += features::kLexicalFeatures * lexical_bins;
  return n;
}

std::size_t RankerShape::hidden_extent() const {
  return hidden ? hidden : std::max<std::size_t>(1, input_extent() / 2);
}

RankerParams RankerParams::Init(const RankerShape &shape, net::SeededRng &rng) {
  if (shape.d_context == 0 || shape.d_entity == 0) {
    throw ParameterError("ranker context and entity extents must be positive");
  }
  if (!(shape.dropout >= 0.0 && shape.dropout < 1.0)) {
    throw ParameterError("dropout must lie in [0, 1)");
  }
  RankerParams p;
  p.shape = shape;
  if (shape.use_prior) p.prior_bin = features::BinLayer::Init("ranker/prior_bin/", shape.prior_bins);
  if (shape.use_lexical) {
    for (std::size_t k = 0; k < features::kLexicalFeatures; ++k) {
      p.lexical_bins.push_back(features::BinLayer::Init(
          "ranker/lexical_bin" + std::to_string(k + 1) + "/", shape.lexical_bins));
    }
  }
  const std::size_t in = shape.input_extent(), hidden = shape.hidden_extent();
  const double s1 = std::sqrt(6.0 / static_cast<double>(in + hidden));
  const double s2 = std::sqrt(6.0 / static_cast<double>(hidden + 1));
  p.w1 = net::Parameter("ranker/w1", net::UniformTensor({in, hidden}, s1, rng));
  p.b1 = net::Parameter("ranker/b1", net::Tensor({hidden}));
  p.w2 = net::Parameter("ranker/w2", net::UniformTensor({hidden, 1}, s2, rng));
  p.b2 = net::Parameter("ranker/b2", net::Tensor({1}));
  return p;
}

std::vector<net::Parameter *> RankerParams::BinParams() {
  std::vector<net::Parameter *> out;
  if (shape.use_prior) out = prior_bin.All();
  for (features::BinLayer &b : lexical_bins) {
    for (net::Parameter *p : b.All()) out.push_back(p);
  }
  return out;
}

std::vector<net::Parameter *> RankerParams::FeedForwardParams() { return {&w1, &b1, &w2, &b2}; }

std::vector<net::Parameter *> RankerParams::All() {
  std::vector<net::Parameter *> out = BinParams();
  for (net::Parameter *p : FeedForwardParams()) out.push_back(p);
  return out;
}

ContextRepr ContextRepresentation(net::Tape &tape, const encoder::EncodedSequence &encoded,
                                  const corpus::IndexedMention &mention) {
  const std::size_t n = encoded.positions();
  if (mention.start < 1 || mention.end < mention.start ||
      static_cast<std::size_t>(mention.end) + 2 > n) {
    throw ValidationError("mention (" + std::to_string(mention.start) + "," +
                          std::to_string(mention.end) + ") outside the encoded paragraph");
  }
  std::vector<net::Var> fwd, bwd;
  for (int k = mention.start - 1; k <= mention.end - 1; ++k) {
    fwd.push_back(encoded.ForwardTop(static_cast<std::size_t>(k)));
  }
  for (int k = mention.start + 1; k <= mention.end + 1; ++k) {
    bwd.push_back(encoded.BackwardTop(static_cast<std::size_t>(k)));
  }
  return {tape.Mean(fwd), tape.Mean(bwd)};
}

net::Var AssembleInput(net::Tape &tape, const ContextRepr &ctx,
                       const features::FeatureBundle &bundle, net::Var entity_row,
                       RankerParams &params) {
  const RankerShape &shape = params.shape;
  auto require = [&tape](net::Var v, std::size_t extent, const char *what) {
    if (tape.value(v).size() != extent) {
      throw DimensionError(std::string(what) + " has extent " +
                           std::to_string(tape.value(v).size()) + ", expected " +
                           std::to_string(extent));
    }
  };
  require(ctx.forward, shape.d_context, "forward context");
  require(ctx.backward, shape.d_context, "backward context");
  require(entity_row, shape.d_entity, "entity row");
  std::vector<net::Var> parts;
  if (shape.use_prior) {
    parts.push_back(features::BinProject(
        tape, tape.Constant(net::Tensor::Scalar(bundle.prior)), params.prior_bin));
  }
  if (shape.use_lexical) {
    for (std::size_t k = 0; k < features::kLexicalFeatures; ++k) {
      parts.push_back(features::BinProject(
          tape, tape.Constant(net::Tensor::Scalar(bundle.lexical[k])), params.lexical_bins[k]));
    }
  }
  parts.push_back(ctx.forward);
  parts.push_back(ctx.backward);
  parts.push_back(entity_row);
  return tape.Concat(parts);
}

net::Var Score(net::Tape &tape, net::Var input, RankerParams &params, bool training,
               net::SeededRng *dropout_rng) {
  const RankerShape &shape = params.shape;
  if (tape.value(input).size() != shape.input_extent()) {
    throw DimensionError("ranker input has extent " + std::to_string(tape.value(input).size()) +
                         ", expected " + std::to_string(shape.input_extent()));
  }
  const bool drop = training && shape.dropout > 0.0;
  if (drop && dropout_rng == nullptr) throw ContractError("training dropout needs a generator");
  if (drop && shape.dropout_input) {
    input = tape.MulConstant(
        input, net::DropoutMask(shape.input_extent(), shape.dropout, *dropout_rng, true));
  }
  net::Var h = tape.Relu(
      tape.Affine(input, tape.Leaf(params.w1), tape.Leaf(params.b1)));
  if (drop) {
    h = tape.MulConstant(h, net::DropoutMask(shape.hidden_extent(), shape.dropout,
                                             *dropout_rng, true));
  }
  return tape.Affine(h, tape.Leaf(params.w2), tape.Leaf(params.b2));
}

bool Query::gold_in_candidates() const {
  return std::any_of(candidates.begin(), candidates.end(),
                     [this](const Candidate &c) { return c.entity == gold; });
}

std::size_t Query::gold_index() const {
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].entity == gold) return i;
  }
  throw QueryError("gold entity not among the candidates of '" + surface + "'");
}

std::vector<Query> BuildQueries(const std::vector<corpus::IndexedParagraph> &paragraphs,
                                const corpus::CandidateTable &table,
                                const corpus::EntityInventory &inventory) {
  std::vector<Query> out;
  std::map<std::string, std::size_t> per_doc;
  for (std::size_t pi = 0; pi < paragraphs.size(); ++pi) {
    const corpus::IndexedParagraph &p = paragraphs[pi];
    for (std::size_t mi = 0; mi < p.mentions.size(); ++mi) {
      const corpus::IndexedMention &m = p.mentions[mi];
      Query q;
      q.paragraph = pi;
      q.mention = mi;
      q.doc_id = p.doc_id;
      q.doc_mention_index = per_doc[p.doc_id]++;
      q.gold = m.entity;
      q.surface = m.surface;
      if (const auto *list = table.Find(m.surface)) {
        for (const corpus::Candidate &c : *list) {
          auto id = inventory.Find(c.entity);
          if (!id) continue;
          Candidate cand;
          cand.entity = *id;
          cand.prior = c.prior;
          cand.features.prior = c.prior;
          cand.features.lexical = features::LexicalFeatures(m.surface, inventory.entry(*id).title);
          q.candidates.push_back(cand);
        }
      }
      out.push_back(std::move(q));
    }
  }
  return out;
}

std::vector<ScoredCandidate> Rank(const std::vector<corpus::EntityId> &entities,
                                  const std::vector<double> &scores) {
  if (entities.empty()) throw QueryError("cannot rank an empty candidate list");
  if (entities.size() != scores.size()) {
    throw QueryError("candidate and score counts differ");
  }
  std::vector<std::size_t> order(entities.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return corpus::Index(entities[a]) < corpus::Index(entities[b]);
  });
  std::vector<ScoredCandidate> out;
  for (std::size_t r = 0; r < order.size(); ++r) {
    out.push_back({entities[order[r]], scores[order[r]], r + 1});
  }
  return out;
}

}  // namespace eelmo::ranker
