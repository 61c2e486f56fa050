#include "eelmo/lm/model.h"

#include <algorithm>
#include <cmath>

#include "eelmo/errors.h"
#include "eelmo/netcore/layers.h"

namespace eelmo::lm {

LmConfig ParseLmConfig(const std::string &name) {
  if (name == "a") return LmConfig::kA;
  if (name == "b") return LmConfig::kB;
  if (name == "c") return LmConfig::kC;
  throw ParameterError("unknown LM config '" + name + "' (expected a, b or c)");
}

const char *LmConfigName(LmConfig config) {
  switch (config) {
    case LmConfig::kA: return "a";
    case LmConfig::kB: return "b";
    case LmConfig::kC: return "c";
  }
  return "?";
}

LmModel LmModel::Init(const LmShape &shape, net::SeededRng &rng) {
  if (shape.vocab < 4) throw ParameterError("vocabulary must hold a real word");
  if (shape.entities == 0) throw ParameterError("entity inventory is empty");
  LmModel m;
  m.encoder = encoder::EncoderParams::Init(shape.encoder, rng);
  const std::size_t d = shape.encoder.d_h;
  m.word_table = net::Parameter("lm/word_table",
                                net::UniformTensor({shape.vocab, d}, 0.1, rng));
  m.entity_table = net::Parameter("lm/entity_table", net::Tensor({shape.entities, d}));
  return m;
}

std::vector<net::Parameter *> LmModel::All() {
  std::vector<net::Parameter *> out = encoder.All();
  out.push_back(&word_table);
  out.push_back(&entity_table);
  return out;
}

net::Tensor EntityEmbeddingsFromTitles(const corpus::EntityInventory &inventory,
                                       const net::Tensor &word_table) {
  const std::size_t d = word_table.cols();
  net::Tensor out({inventory.size(), d});
  for (std::size_t e = 0; e < inventory.size(); ++e) {
    const corpus::EntityEntry &entry = inventory.entries()[e];
    if (entry.title_tokens.empty()) {
      throw InitializationError("entity '" + entry.key + "' has no title tokens");
    }
    double *row = &out.storage()[e * d];
    for (corpus::WordId w : entry.title_tokens) {
      const std::size_t r = corpus::Index(w);
      if (r >= word_table.rows()) {
        throw VocabularyError("title token id " + std::to_string(r) +
                              " outside the word table");
      }
      for (std::size_t i = 0; i < d; ++i) row[i] += word_table.at(r, i);
    }
    double norm = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      row[i] /= static_cast<double>(entry.title_tokens.size());
      norm += row[i] * row[i];
    }
    norm = std::sqrt(norm);
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw InitializationError("entity '" + entry.key +
                                "' has a zero title embedding");
    }
    for (std::size_t i = 0; i < d; ++i) row[i] /= norm;
  }
  return out;
}

void InitEntityEmbeddings(const corpus::EntityInventory &inventory, LmModel &model) {
  if (inventory.size() != model.entity_table.tensor().rows()) {
    throw DimensionError("inventory has " + std::to_string(inventory.size()) +
                         " entities but the table has " +
                         std::to_string(model.entity_table.tensor().rows()) + " rows");
  }
  net::Tensor init = EntityEmbeddingsFromTitles(inventory, model.word_table.tensor());
  std::copy(init.storage().begin(), init.storage().end(),
            model.entity_table.tensor().storage().begin());
}

LossSpec ResolveNegatives(LossSpec spec, std::size_t vocab, std::size_t entities) {
  if (vocab >= 2) spec.n_negatives_words = std::min(spec.n_negatives_words, vocab - 1);
  if (entities >= 2) {
    spec.n_negatives_entities = std::min(spec.n_negatives_entities, entities - 1);
  }
  return spec;
}

namespace {

std::uint64_t TermKey(Direction d, std::size_t k, TargetKind kind) {
  return (static_cast<std::uint64_t>(k) << 3) |
         (static_cast<std::uint64_t>(d) << 1) |
         (kind == TargetKind::kEntity ? 1u : 0u);
}

}  // namespace

LossResult EelmoLoss(net::Tape &tape, const corpus::IndexedParagraph &paragraph,
                     const TargetPlan &plan, LmModel &model, const LossSpec &spec,
                     const net::SeededRng &negatives) {
  const std::size_t n = paragraph.words.size();
  if (plan.forward.size() != n || plan.backward.size() != n) {
    throw ContractError("target plan covers " + std::to_string(plan.forward.size()) +
                        " positions but the paragraph has " + std::to_string(n));
  }
  const bool words = spec.config != LmConfig::kC;
  const std::size_t vocab = model.word_table.tensor().rows();
  const std::size_t entities = model.entity_table.tensor().rows();

  // Nothing to score: skip the encoder entirely.
  bool any = false;
  for (std::size_t k = 0; k < n && !any; ++k) {
    for (const Target *t : {&plan.forward[k], &plan.backward[k]}) {
      if (t->kind == TargetKind::kEntity || (words && t->kind == TargetKind::kWord)) {
        any = true;
      }
    }
  }
  LossResult result;
  if (!any) {
    result.loss = tape.Constant(net::Tensor::Scalar(0.0));
    return result;
  }

  encoder::EncodedSequence seq = encoder::Encode(tape, paragraph, model.encoder);
  net::Var word_table = tape.Leaf(model.word_table);
  net::Var entity_table = tape.Leaf(model.entity_table);
  std::vector<net::Var> word_terms, entity_terms;
  for (Direction dir : {Direction::kForward, Direction::kBackward}) {
    const auto &targets = dir == Direction::kForward ? plan.forward : plan.backward;
    for (std::size_t k = 0; k < n; ++k) {
      const Target &t = targets[k];
      if (t.kind == TargetKind::kNone) continue;
      if (t.kind == TargetKind::kWord && !words) continue;
      const bool is_entity = t.kind == TargetKind::kEntity;
      const std::size_t space = is_entity ? entities : vocab;
      const std::size_t count =
          is_entity ? spec.n_negatives_entities : spec.n_negatives_words;
      if (t.id < 0 || static_cast<std::size_t>(t.id) >= space) {
        throw ContractError("target " + DescribeTarget(t) + " outside an output space of " +
                            std::to_string(space));
      }
      const std::size_t target = static_cast<std::size_t>(t.id);
      net::SeededRng rng = negatives.Fork(TermKey(dir, k, t.kind));
      std::vector<std::size_t> neg = rng.SampleWithoutReplacement(space, count, target);
      net::Var ctx = dir == Direction::kForward ? seq.ForwardTop(k) : seq.BackwardTop(k);
      net::Var term = tape.SampledSoftmaxLoss(ctx, is_entity ? entity_table : word_table,
                                              target, neg);
      const double nll = tape.scalar(term);
      result.breakdown.terms.push_back({dir, k, t, nll});
      result.term_vars.push_back(term);
      if (is_entity) {
        result.breakdown.ll_e += nll;
        ++result.breakdown.entity_terms;
        entity_terms.push_back(term);
      } else {
        result.breakdown.ll_w += nll;
        ++result.breakdown.word_terms;
        word_terms.push_back(term);
      }
    }
  }
  std::vector<net::Var> parts;
  if (!word_terms.empty()) parts.push_back(tape.Sum(tape.Concat(word_terms)));
  if (!entity_terms.empty()) {
    net::Var e = tape.Sum(tape.Concat(entity_terms));
    parts.push_back(spec.entity_scale == 1.0 ? e : tape.Scale(e, spec.entity_scale));
  }
  result.loss = parts.size() == 1 ? parts[0] : tape.Add(parts[0], parts[1]);
  result.has_terms = true;
  return result;
}

net::LossBuilder CenteredLossBuilder(const corpus::IndexedParagraph &paragraph,
                                     const TargetPlan &plan, LmModel &model,
                                     const LossSpec &spec, net::SeededRng negatives) {
  std::vector<double> reference;
  {
    net::Tape tape;
    LossResult r = EelmoLoss(tape, paragraph, plan, model, spec, negatives);
    for (const TermRecord &t : r.breakdown.terms) reference.push_back(t.nll);
  }
  return [&paragraph, plan, &model, spec, negatives,
          reference = std::move(reference)](net::Tape &tape) {
    LossResult r = EelmoLoss(tape, paragraph, plan, model, spec, negatives);
    if (r.term_vars.size() != reference.size()) {
      throw ContractError("loss terms changed between evaluations");
    }
    if (r.term_vars.empty()) return r.loss;
    std::vector<net::Var> centered;
    for (std::size_t i = 0; i < reference.size(); ++i) {
      net::Var d = tape.Sub(r.term_vars[i], tape.Constant(net::Tensor::Scalar(reference[i])));
      if (r.breakdown.terms[i].target.kind == TargetKind::kEntity && spec.entity_scale != 1.0) {
        d = tape.Scale(d, spec.entity_scale);
      }
      centered.push_back(d);
    }
    return tape.Sum(tape.Concat(centered));
  };
}

}  // namespace eelmo::lm
