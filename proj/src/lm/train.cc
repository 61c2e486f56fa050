#include "eelmo/lm/train.h"

#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "eelmo/errors.h"
#include "eelmo/netcore/kernels.h"
#include "eelmo/netcore/optim.h"

namespace eelmo::lm {

namespace {

constexpr std::size_t kDefaultNegatives = 64;

// Marks the families the config trains; returns the previous flags.
std::vector<bool> ApplyFreeze(LmConfig config, LmModel &model) {
  std::vector<bool> previous;
  for (net::Parameter *p : model.All()) {
    previous.push_back(p->trainable());
    p->set_trainable(config != LmConfig::kA || p == &model.entity_table);
  }
  return previous;
}

void Restore(const std::vector<bool> &flags, LmModel &model) {
  std::vector<net::Parameter *> all = model.All();
  for (std::size_t i = 0; i < all.size(); ++i) all[i]->set_trainable(flags[i]);
}

}  // namespace

LossSpec MakeLossSpec(const TrainSpec &spec, const LmModel &model) {
  LossSpec loss;
  loss.config = spec.config;
  loss.entity_scale = spec.entity_scale;
  loss.n_negatives_words = spec.n_negatives_words ? spec.n_negatives_words : kDefaultNegatives;
  loss.n_negatives_entities =
      spec.n_negatives_entities ? spec.n_negatives_entities : kDefaultNegatives;
  const std::size_t vocab = model.word_table.tensor().rows();
  const std::size_t entities = model.entity_table.tensor().rows();
  if (spec.n_negatives_words == 0 || spec.n_negatives_entities == 0) {
    LossSpec clamped = ResolveNegatives(loss, vocab, entities);
    if (spec.n_negatives_words == 0) loss.n_negatives_words = clamped.n_negatives_words;
    if (spec.n_negatives_entities == 0) {
      loss.n_negatives_entities = clamped.n_negatives_entities;
    }
  }
  if (loss.n_negatives_words >= vocab || loss.n_negatives_entities >= entities) {
    throw ParameterError("negatives must be fewer than the output space (" +
                         std::to_string(vocab) + " words, " +
                         std::to_string(entities) + " entities)");
  }
  return loss;
}

std::vector<EpochLoss> TrainLm(const std::vector<corpus::IndexedParagraph> &paragraphs,
                               const TrainSpec &spec, LmModel &model,
                               const StepObserver &observer) {
  if (!(spec.lr > 0.0)) throw ParameterError("learning rate must be positive");
  if (spec.batch == 0) throw ParameterError("batch must be positive");
  const LossSpec loss_spec = MakeLossSpec(spec, model);
  std::vector<bool> flags = ApplyFreeze(spec.config, model);
  std::vector<net::Parameter *> params = model.All();
  std::vector<EpochLoss> trace;
  const net::SeededRng root(spec.seed);
  try {
    std::size_t step = 0;
    for (std::size_t epoch = 1; epoch <= spec.epochs; ++epoch) {
      net::SeededRng order_rng = root.Fork(2 * epoch);
      const net::SeededRng neg_root = root.Fork(2 * epoch + 1);
      std::vector<std::size_t> order(paragraphs.size());
      std::iota(order.begin(), order.end(), 0);
      order_rng.Shuffle(order);

      EpochLoss sums;
      sums.epoch = epoch;
      for (net::Parameter *p : params) p->ResetGrad();
      std::size_t pending = 0;
      auto apply = [&] {
        for (net::Parameter *p : params) {
          if (!p->trainable()) continue;
          p->tensor().grad();  // a family the batch never reached steps by zero
          net::AdagradStep(*p, spec.lr);
        }
        if (model.entity_table.trainable()) {
          const auto &touched = model.entity_table.touched_rows();
          std::vector<std::size_t> rows(touched.begin(), touched.end());
          net::RenormalizeUnitSphere(rows, model.entity_table);
        }
        for (net::Parameter *p : params) p->ResetGrad();
        pending = 0;
        ++step;
        if (observer) observer(epoch, step, model);
      };
      for (std::size_t i = 0; i < order.size(); ++i) {
        const corpus::IndexedParagraph &p = paragraphs[order[i]];
        net::Tape tape;
        LossResult r = EelmoLoss(tape, p, BuildTargetPlan(p), model, loss_spec,
                                 neg_root.Fork(order[i]));
        const double total = r.breakdown.total(loss_spec.entity_scale);
        if (!std::isfinite(total)) {
          throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) +
                                ", paragraph " + std::to_string(order[i]) + " ('" +
                                p.doc_id + "')");
        }
        sums.ll_w += r.breakdown.ll_w;
        sums.ll_e += r.breakdown.ll_e;
        sums.total += total;
        if (r.has_terms) tape.Backward(r.loss);
        if (++pending == spec.batch) apply();
      }
      if (pending > 0) apply();
      const double n = paragraphs.empty() ? 1.0 : static_cast<double>(paragraphs.size());
      sums.ll_w /= n;
      sums.ll_e /= n;
      sums.total /= n;
      trace.push_back(sums);
    }
  } catch (...) {
    Restore(flags, model);
    throw;
  }
  Restore(flags, model);
  return trace;
}

EpochLoss EvaluateLm(const std::vector<corpus::IndexedParagraph> &paragraphs,
                     const TrainSpec &spec, LmModel &model) {
  const LossSpec loss_spec = MakeLossSpec(spec, model);
  std::vector<LossBreakdown> parts(paragraphs.size());
  // Frozen copies keep the shared parameters read-only across threads.
  std::vector<bool> flags = ApplyFreeze(LmConfig::kA, model);
  model.entity_table.set_trainable(false);
  const net::SeededRng root(spec.seed);
  try {
    net::kernels::ParallelFor(paragraphs.size(), [&](std::size_t i) {
      net::Tape tape;
      parts[i] = EelmoLoss(tape, paragraphs[i], BuildTargetPlan(paragraphs[i]), model,
                           loss_spec, root.Fork(i))
                     .breakdown;
    });
  } catch (...) {
    Restore(flags, model);
    throw;
  }
  Restore(flags, model);
  EpochLoss out;
  for (const LossBreakdown &b : parts) {
    out.ll_w += b.ll_w;
    out.ll_e += b.ll_e;
    out.total += b.total(loss_spec.entity_scale);
  }
  const double n = paragraphs.empty() ? 1.0 : static_cast<double>(paragraphs.size());
  out.ll_w /= n;
  out.ll_e /= n;
  out.total /= n;
  return out;
}

std::string FormatLossTrace(const std::vector<EpochLoss> &trace) {
  std::ostringstream out;
  out.precision(10);
  for (const EpochLoss &e : trace) {
    out << e.epoch << '\t' << e.ll_w << '\t' << e.ll_e << '\t' << e.total << '\n';
  }
  return out.str();
}

}  // namespace eelmo::lm
