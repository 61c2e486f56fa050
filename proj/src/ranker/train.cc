#include "eelmo/ranker/train.h"

#include <cmath>
#include <numeric>
#include <sstream>

#include "eelmo/errors.h"
#include "eelmo/netcore/kernels.h"
#include "eelmo/netcore/optim.h"

namespace eelmo::ranker {

namespace {

net::Tensor EntityRow(const lm::LmModel &model, corpus::EntityId id) {
  const net::Tensor &table = model.entity_table.tensor();
  const std::size_t d = table.cols();
  const std::size_t row = static_cast<std::size_t>(corpus::Index(id));
  net::Tensor out({d});
  for (std::size_t j = 0; j < d; ++j) out[j] = table.values()[row * d + j];
  return out;
}

// Flags of the upstream families, so frozen runs can restore them.
std::vector<net::Parameter *> Upstream(lm::LmModel &model) {
  std::vector<net::Parameter *> out = model.encoder.All();
  out.push_back(&model.entity_table);
  return out;
}

class FreezeGuard {
 public:
  FreezeGuard(std::vector<net::Parameter *> params, bool freeze) : params_(std::move(params)) {
    for (net::Parameter *p : params_) {
      flags_.push_back(p->trainable());
      if (freeze) p->set_trainable(false);
    }
  }
  ~FreezeGuard() {
    for (std::size_t i = 0; i < params_.size(); ++i) params_[i]->set_trainable(flags_[i]);
  }
  FreezeGuard(const FreezeGuard &) = delete;
  FreezeGuard &operator=(const FreezeGuard &) = delete;

 private:
  std::vector<net::Parameter *> params_;
  std::vector<bool> flags_;
};

void CheckQuery(const Query &query, const std::vector<corpus::IndexedParagraph> &paragraphs) {
  if (query.paragraph >= paragraphs.size() ||
      query.mention >= paragraphs[query.paragraph].mentions.size()) {
    throw QueryError("query for '" + query.surface + "' references a missing mention");
  }
}

}  // namespace

RankerShape FitToModel(RankerShape shape, const lm::LmModel &model) {
  shape.d_context = model.encoder.shape.d_h;
  shape.d_entity = model.entity_table.tensor().cols();
  return shape;
}

std::vector<CachedContext> ComputeContexts(const std::vector<Query> &queries,
                                           const std::vector<corpus::IndexedParagraph> &paragraphs,
                                           lm::LmModel &model) {
  for (const Query &q : queries) CheckQuery(q, paragraphs);
  FreezeGuard guard(model.All(), true);
  // Group by paragraph so each one is encoded once.
  std::vector<std::vector<std::size_t>> by_paragraph(paragraphs.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    by_paragraph[queries[i].paragraph].push_back(i);
  }
  std::vector<CachedContext> out(queries.size());
  net::kernels::ParallelFor(paragraphs.size(), [&](std::size_t pi) {
    if (by_paragraph[pi].empty()) return;
    net::Tape tape;
    encoder::EncodedSequence enc = encoder::Encode(tape, paragraphs[pi], model.encoder);
    for (std::size_t qi : by_paragraph[pi]) {
      ContextRepr ctx =
          ContextRepresentation(tape, enc, paragraphs[pi].mentions[queries[qi].mention]);
      out[qi] = {tape.value(ctx.forward), tape.value(ctx.backward)};
    }
  });
  return out;
}

std::vector<net::Var> CandidateScores(net::Tape &tape, const Query &query,
                                      const ContextRepr &ctx, lm::LmModel &model,
                                      RankerParams &params, bool training,
                                      net::SeededRng *dropout_rng) {
  std::vector<net::Var> scores;
  const bool live_table = model.entity_table.trainable();
  net::Var table = live_table ? tape.Leaf(model.entity_table) : net::Var{};
  for (const Candidate &c : query.candidates) {
    net::Var row = live_table
                       ? tape.GatherRow(table, static_cast<std::size_t>(corpus::Index(c.entity)))
                       : tape.Constant(EntityRow(model, c.entity));
    net::Var input = AssembleInput(tape, ctx, c.features, row, params);
    scores.push_back(Score(tape, input, params, training, dropout_rng));
  }
  return scores;
}

net::Var QueryLoss(net::Tape &tape, const Query &query, const ContextRepr &ctx,
                   lm::LmModel &model, RankerParams &params, bool training,
                   net::SeededRng *dropout_rng) {
  if (query.candidates.empty()) throw QueryError("query '" + query.surface + "' has no candidates");
  const std::size_t gold = query.gold_index();
  std::vector<net::Var> scores =
      CandidateScores(tape, query, ctx, model, params, training, dropout_rng);
  return tape.SoftmaxCrossEntropy(scores, gold);
}

net::LossBuilder CenteredQueryLossBuilder(const Query &query, const CachedContext &ctx,
                                          lm::LmModel &model, RankerParams &params,
                                          bool training, std::uint64_t dropout_seed) {
  const std::size_t gold = query.gold_index();
  std::vector<double> reference;
  {
    net::Tape tape;
    net::SeededRng drop(dropout_seed);
    ContextRepr c{tape.Constant(ctx.forward), tape.Constant(ctx.backward)};
    for (net::Var v : CandidateScores(tape, query, c, model, params, training, &drop)) {
      reference.push_back(tape.scalar(v));
    }
  }
  return [&query, ctx, &model, &params, training, dropout_seed, gold,
          reference = std::move(reference)](net::Tape &tape) {
    net::SeededRng drop(dropout_seed);
    ContextRepr c{tape.Constant(ctx.forward), tape.Constant(ctx.backward)};
    std::vector<net::Var> scores = CandidateScores(tape, query, c, model, params, training, &drop);
    return tape.SoftmaxCrossEntropyChange(scores, gold, reference);
  };
}

RankerTrainReport TrainRanker(const std::vector<Query> &queries,
                              const std::vector<corpus::IndexedParagraph> &paragraphs,
                              lm::LmModel &model, RankerParams &params,
                              const RankerTrainSpec &spec) {
  if (!(spec.lr > 0.0)) throw ParameterError("learning rate must be positive");
  RankerTrainReport report;
  std::vector<std::size_t> used;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    CheckQuery(queries[i], paragraphs);
    if (queries[i].gold_in_candidates()) {
      used.push_back(i);
    } else {
      ++report.n_skipped;
    }
  }
  report.n_used = used.size();

  std::vector<CachedContext> cache;
  if (!spec.fine_tune) cache = ComputeContexts(queries, paragraphs, model);
  FreezeGuard guard(Upstream(model), !spec.fine_tune);
  // Word table and LM heads never enter the ranker loss.
  FreezeGuard lm_heads({&model.word_table}, true);

  std::vector<net::Parameter *> trained = params.All();
  if (spec.fine_tune) {
    for (net::Parameter *p : Upstream(model)) {
      if (p->trainable()) trained.push_back(p);
    }
  }
  const net::AdamOptions adam{.lr = spec.lr};
  std::vector<std::size_t> all_rows(model.entity_table.tensor().rows());
  std::iota(all_rows.begin(), all_rows.end(), 0);
  const net::SeededRng root(spec.seed);
  for (std::size_t epoch = 1; epoch <= spec.epochs; ++epoch) {
    net::SeededRng order_rng = root.Fork(2 * epoch);
    const net::SeededRng drop_root = root.Fork(2 * epoch + 1);
    std::vector<std::size_t> order = used;
    order_rng.Shuffle(order);
    double sum = 0.0;
    for (std::size_t qi : order) {
      const Query &q = queries[qi];
      net::Tape tape;
      ContextRepr ctx;
      if (spec.fine_tune) {
        encoder::EncodedSequence enc =
            encoder::Encode(tape, paragraphs[q.paragraph], model.encoder);
        ctx = ContextRepresentation(tape, enc, paragraphs[q.paragraph].mentions[q.mention]);
      } else {
        ctx = {tape.Constant(cache[qi].forward), tape.Constant(cache[qi].backward)};
      }
      net::SeededRng drop = drop_root.Fork(qi);
      net::Var loss = QueryLoss(tape, q, ctx, model, params, true, &drop);
      const double value = tape.scalar(loss);
      if (!std::isfinite(value)) {
        throw DivergenceError("non-finite ranker loss at epoch " + std::to_string(epoch) +
                              ", query " + std::to_string(qi) + " ('" + q.surface + "' in '" +
                              q.doc_id + "')");
      }
      sum += value;
      for (net::Parameter *p : trained) p->ResetGrad();
      tape.Backward(loss);
      for (net::Parameter *p : trained) {
        p->tensor().grad();
        net::AdamStep(*p, adam);
      }
      if (spec.fine_tune && model.entity_table.trainable()) {
        // Adam momentum moves rows the query never read.
        net::RenormalizeUnitSphere(all_rows, model.entity_table);
      }
      for (net::Parameter *p : trained) p->ResetGrad();
    }
    report.epoch_loss.push_back(used.empty() ? 0.0 : sum / static_cast<double>(used.size()));
  }
  return report;
}

std::vector<Prediction> Predict(const std::vector<Query> &queries,
                                const std::vector<corpus::IndexedParagraph> &paragraphs,
                                lm::LmModel &model, RankerParams &params,
                                const corpus::EntityInventory &inventory) {
  std::vector<CachedContext> cache = ComputeContexts(queries, paragraphs, model);
  FreezeGuard upstream(model.All(), true);
  FreezeGuard ranker(params.All(), true);
  std::vector<Prediction> out(queries.size());
  net::kernels::ParallelFor(queries.size(), [&](std::size_t qi) {
    const Query &q = queries[qi];
    Prediction &p = out[qi];
    p.doc_id = q.doc_id;
    p.mention_index = q.doc_mention_index;
    p.gold = inventory.key(q.gold);
    p.gold_in_candidates = q.gold_in_candidates();
    if (q.candidates.empty()) return;
    net::Tape tape;
    ContextRepr ctx{tape.Constant(cache[qi].forward), tape.Constant(cache[qi].backward)};
    std::vector<net::Var> vars = CandidateScores(tape, q, ctx, model, params, false, nullptr);
    std::vector<double> scores;
    std::vector<corpus::EntityId> ids;
    for (std::size_t i = 0; i < vars.size(); ++i) {
      scores.push_back(tape.scalar(vars[i]));
      ids.push_back(q.candidates[i].entity);
    }
    const ScoredCandidate top = Rank(ids, scores).front();
    p.predicted = inventory.key(top.entity);
    p.score = top.score;
  });
  return out;
}

std::vector<Prediction> PredictByPrior(const std::vector<Query> &queries,
                                       const corpus::EntityInventory &inventory) {
  std::vector<Prediction> out;
  for (const Query &q : queries) {
    Prediction p;
    p.doc_id = q.doc_id;
    p.mention_index = q.doc_mention_index;
    p.gold = inventory.key(q.gold);
    p.gold_in_candidates = q.gold_in_candidates();
    if (!q.candidates.empty()) {
      std::vector<double> scores;
      std::vector<corpus::EntityId> ids;
      for (const Candidate &c : q.candidates) {
        scores.push_back(c.prior);
        ids.push_back(c.entity);
      }
      const ScoredCandidate top = Rank(ids, scores).front();
      p.predicted = inventory.key(top.entity);
      p.score = top.score;
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::string FormatPredictions(const std::vector<Prediction> &predictions) {
  std::ostringstream out;
  out.precision(17);
  for (const Prediction &p : predictions) {
    out << p.doc_id << '\t' << p.mention_index << '\t' << p.gold << '\t'
        << (p.predicted ? *p.predicted : "-") << '\t' << p.score << '\t'
        << (p.gold_in_candidates ? 1 : 0) << '\n';
  }
  return out.str();
}

std::vector<Prediction> ParsePredictions(const std::string &text) {
  std::vector<Prediction> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream fields(line);
    for (std::string s; std::getline(fields, s, '\t');) f.push_back(s);
    if (f.size() != 5 && f.size() != 6) {
      throw ParseError("line " + std::to_string(line_no) + ": expected 5 or 6 fields");
    }
    Prediction p;
    try {
      p.doc_id = f[0];
      p.mention_index = std::stoul(f[1]);
      p.gold = f[2];
      if (f[3] != "-") p.predicted = f[3];
      p.score = std::stod(f[4]);
      p.gold_in_candidates = f.size() == 6 ? f[5] == "1" : true;
    } catch (const std::logic_error &) {
      throw ParseError("line " + std::to_string(line_no) + ": bad numeric field");
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace eelmo::ranker
