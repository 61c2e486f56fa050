#include "eelmo/app/gradsuite.h"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>

#include "eelmo/corpus/indexed.h"
#include "eelmo/corpus/priors.h"
#include "eelmo/corpus/synth.h"
#include "eelmo/features/features.h"
#include "eelmo/lm/model.h"
#include "eelmo/lm/targets.h"
#include "eelmo/netcore/gradcheck.h"
#include "eelmo/netcore/layers.h"
#include "eelmo/ranker/train.h"

namespace eelmo::app {

namespace {

using net::GradcheckResult;
using net::Parameter;
using net::SeededRng;
using net::Tape;
using net::Tensor;
using net::Var;

std::size_t Between(SeededRng &rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.Below(hi - lo + 1));
}

GradcheckResult Check(const net::LossBuilder &build, const std::vector<Parameter *> &params) {
  return net::Gradcheck(build, params, kGradStep);
}

GradcheckResult AffineCase(std::uint64_t seed) {
  SeededRng rng(seed);
  const std::size_t n = Between(rng, 1, 3), a = Between(rng, 1, 5), b = Between(rng, 1, 5);
  Parameter x("x", net::UniformTensor({n, a}, 1.0, rng));
  Parameter w("w", net::UniformTensor({a, b}, 1.0, rng));
  Parameter bias("bias", net::UniformTensor({b}, 1.0, rng));
  Tensor readout = net::UniformTensor({n, b}, 1.0, rng);
  return Check(
      [&](Tape &t) {
        return t.Dot(t.Affine(t.Leaf(x), t.Leaf(w), t.Leaf(bias)), t.Constant(readout));
      },
      {&x, &w, &bias});
}

GradcheckResult CellCase(std::uint64_t seed) {
  SeededRng rng(seed);
  const std::size_t d_in = Between(rng, 1, 4), d_h = Between(rng, 1, 4);
  net::LstmParams cell = net::LstmParams::Init("cell/", d_in, d_h, rng);
  Parameter x("x", net::UniformTensor({d_in}, 1.0, rng));
  Parameter state("state", net::UniformTensor({2 * d_h}, 1.0, rng));
  Tensor readout = net::UniformTensor({2 * d_h}, 1.0, rng);
  std::vector<Parameter *> params = cell.All();
  params.push_back(&x);
  params.push_back(&state);
  return Check(
      [&](Tape &t) {
        return t.Dot(net::RecurrentCellStep(t, t.Leaf(x), t.Leaf(state), cell),
                     t.Constant(readout));
      },
      params);
}

GradcheckResult CharCnnCase(std::uint64_t seed) {
  SeededRng rng(seed);
  net::CharCnnShape shape;
  shape.alphabet = Between(rng, 4, 9);
  shape.d_char = Between(rng, 1, 3);
  shape.max_chars = Between(rng, 3, 6);
  shape.widths.clear();
  for (std::size_t w = 1; w <= std::min<std::size_t>(3, shape.max_chars); ++w) {
    if (w == 1 || rng.Uniform() < 0.6) shape.widths.push_back(w);
  }
  shape.filters_per_width = Between(rng, 1, 3);
  shape.d_tok = Between(rng, 1, 3);
  net::CharCnnParams params = net::CharCnnParams::Init("cnn/", shape, rng);
  const std::size_t tokens = Between(rng, 1, 3);
  std::vector<std::vector<std::int32_t>> ids(tokens);
  for (auto &row : ids) {
    const std::size_t len = Between(rng, 1, shape.max_chars);
    for (std::size_t c = 0; c < shape.max_chars; ++c) {
      row.push_back(c < len ? static_cast<std::int32_t>(Between(rng, 1, shape.alphabet - 1)) : 0);
    }
  }
  Tensor readout = net::UniformTensor({tokens, shape.d_tok}, 1.0, rng);
  return Check(
      [&](Tape &t) { return t.Dot(net::CharConvEncode(t, ids, params), t.Constant(readout)); },
      params.All());
}

GradcheckResult SampledSoftmaxCase(std::uint64_t seed) {
  SeededRng rng(seed);
  const std::size_t v = Between(rng, 2, 20), d = Between(rng, 1, 5);
  Parameter table("table", net::UniformTensor({v, d}, 1.0, rng));
  Parameter context("context", net::UniformTensor({d}, 1.0, rng));
  const std::size_t target = static_cast<std::size_t>(rng.Below(v));
  const std::vector<std::size_t> negatives =
      rng.SampleWithoutReplacement(v, Between(rng, 1, v - 1), target);
  return Check(
      [&](Tape &t) {
        return t.SampledSoftmaxLoss(t.Leaf(context), t.Leaf(table), target, negatives);
      },
      {&table, &context});
}

GradcheckResult BinCase(std::uint64_t seed) {
  SeededRng rng(seed);
  features::BinLayer layer = features::BinLayer::Init("bin/", Between(rng, 1, 15));
  for (double &c : layer.centers.tensor().values()) c += rng.Uniform(-0.05, 0.05);
  for (double &r : layer.rho.tensor().values()) r = rng.Uniform(0.0, 2.0);
  Parameter x("x", Tensor::Vector({rng.Uniform()}));
  Tensor readout = net::UniformTensor({layer.d()}, 1.0, rng);
  std::vector<Parameter *> params = layer.All();
  params.push_back(&x);
  return Check(
      [&](Tape &t) {
        return t.Dot(features::BinProject(t, t.Leaf(x), layer), t.Constant(readout));
      },
      params);
}

GradcheckResult ScorerCase(std::uint64_t seed) {
  SeededRng rng(seed);
  ranker::RankerShape shape;
  shape.use_prior = rng.Uniform() < 0.5;
  shape.use_lexical = rng.Uniform() < 0.5;
  shape.prior_bins = Between(rng, 1, 4);
  shape.lexical_bins = Between(rng, 1, 3);
  shape.d_context = Between(rng, 1, 4);
  shape.d_entity = Between(rng, 1, 4);
  shape.hidden = Between(rng, 1, 6);
  shape.dropout = 0.3;
  ranker::RankerParams params = ranker::RankerParams::Init(shape, rng);
  Parameter input("input", net::UniformTensor({shape.input_extent()}, 1.0, rng));
  const bool training = seed % 2 == 0;
  std::vector<Parameter *> all = params.FeedForwardParams();
  all.push_back(&input);
  return Check(
      [&](Tape &t) {
        SeededRng drop(seed);
        return ranker::Score(t, t.Leaf(input), params, training, &drop);
      },
      all);
}

// Small corpus shared by the two full-loss checks.
struct LossFixture {
  corpus::SynthCorpus synth;
  corpus::CharAlphabet alphabet;
  std::vector<corpus::IndexedParagraph> indexed;
  std::vector<std::size_t> with_mentions;

  LossFixture() {
    corpus::SynthSpec spec;
    spec.n_entities = 6;
    spec.n_paragraphs = 12;
    spec.vocab_size = 40;
    spec.min_tokens = 3;
    spec.max_tokens = 6;
    spec.seed = 5;
    synth = corpus::SynthesizeCorpus(spec);
    alphabet = corpus::CharAlphabet::Build(synth.paragraphs);
    indexed = corpus::IndexCorpus(synth.paragraphs, synth.vocab, alphabet, synth.inventory, 8);
    for (std::size_t i = 0; i < indexed.size(); ++i) {
      if (!indexed[i].mentions.empty()) with_mentions.push_back(i);
    }
  }

  lm::LmModel Model(std::uint64_t seed, std::size_t d_h) const {
    lm::LmShape shape;
    shape.encoder.char_cnn.alphabet = alphabet.size();
    shape.encoder.char_cnn.d_char = 3;
    shape.encoder.char_cnn.widths = {1, 2};
    shape.encoder.char_cnn.filters_per_width = 3;
    shape.encoder.char_cnn.max_chars = 8;
    shape.encoder.char_cnn.d_tok = 5;
    shape.encoder.d_h = d_h;
    shape.encoder.layers = 2;
    shape.vocab = synth.vocab.size();
    shape.entities = synth.inventory.size();
    SeededRng rng(seed);
    return lm::LmModel::Init(shape, rng);
  }
};

// Unit-scale weights keep gates out of saturation, so gradients stay above
// the finite-difference rounding floor.
void Randomize(const std::vector<Parameter *> &params, double scale, std::uint64_t seed) {
  SeededRng rng(seed);
  for (Parameter *p : params) {
    for (double &v : p->tensor().values()) v = rng.Uniform(-scale, scale);
  }
}

GradcheckResult EelmoLossCase(const LossFixture &f, std::uint64_t seed) {
  lm::LmModel model = f.Model(seed, 2);
  Randomize(model.All(), 0.85, seed);
  lm::InitEntityEmbeddings(f.synth.inventory, model);
  const corpus::IndexedParagraph &p = f.indexed[f.with_mentions[seed % f.with_mentions.size()]];
  lm::LossSpec spec;
  spec.config = seed % 2 ? lm::LmConfig::kB : lm::LmConfig::kC;
  spec.n_negatives_words = 5;
  spec.n_negatives_entities = 3;
  return Check(lm::CenteredLossBuilder(p, lm::BuildTargetPlan(p), model, spec, SeededRng(seed)),
               model.All());
}

GradcheckResult RankerLossCase(const LossFixture &f, std::uint64_t seed) {
  lm::LmModel model = f.Model(3, 4);
  lm::InitEntityEmbeddings(f.synth.inventory, model);
  const corpus::CandidateTable table = corpus::BuildPriors(f.synth.paragraphs, 0);
  const std::vector<ranker::Query> queries =
      ranker::BuildQueries(f.indexed, table, f.synth.inventory);
  const std::vector<ranker::CachedContext> cache =
      ranker::ComputeContexts(queries, f.indexed, model);
  const std::size_t i = (seed * 7) % queries.size();
  SeededRng rng(seed);
  ranker::RankerShape shape;
  shape.prior_bins = 4;
  shape.lexical_bins = 3;
  shape.hidden = 6;
  shape.dropout = 0.3;
  ranker::RankerParams params = ranker::RankerParams::Init(ranker::FitToModel(shape, model), rng);
  // Small output weights keep scores near zero so score changes carry little
  // rounding.
  for (double &v : params.w2.tensor().values()) v = rng.Uniform(-0.01, 0.01);
  return Check(ranker::CenteredQueryLossBuilder(queries[i], cache[i], model, params,
                                                seed % 2 == 0, seed),
               params.All());
}

}  // namespace

std::size_t GradSuiteReport::configs() const {
  std::size_t n = 0;
  for (const OpGradReport &op : ops) n += op.configs;
  return n;
}

double GradSuiteReport::max_relative_error() const {
  double m = 0.0;
  for (const OpGradReport &op : ops) m = std::max(m, op.max_relative_error);
  return m;
}

bool GradSuiteReport::passed() const {
  return std::all_of(ops.begin(), ops.end(),
                     [](const OpGradReport &op) { return op.failures == 0; });
}

GradSuiteReport RunGradSuite(const GradSuiteOptions &options) {
  const auto start = std::chrono::steady_clock::now();
  const LossFixture fixture;
  const std::vector<std::pair<std::string, std::function<GradcheckResult(std::uint64_t)>>> ops{
      {"affine", AffineCase},
      {"recurrent_cell", CellCase},
      {"char_cnn", CharCnnCase},
      {"sampled_softmax", SampledSoftmaxCase},
      {"bin_layer", BinCase},
      {"ff_scorer", ScorerCase},
      {"eelmo_loss", [&](std::uint64_t s) { return EelmoLossCase(fixture, s); }},
      {"ranker_loss", [&](std::uint64_t s) { return RankerLossCase(fixture, s); }},
  };
  GradSuiteReport report;
  for (const auto &[name, run] : ops) {
    OpGradReport op;
    op.op = name;
    for (std::size_t k = 0; k < options.configs_per_op; ++k) {
      const std::uint64_t seed = options.first_seed + k;
      GradcheckResult r = run(seed);
      ++op.configs;
      if (r.max_relative_error >= kGradTolerance) ++op.failures;
      if (r.max_relative_error >= op.max_relative_error) {
        op.max_relative_error = r.max_relative_error;
        op.worst_seed = seed;
        for (const net::ParameterCheck &c : r.per_parameter) {
          if (c.max_relative_error == r.max_relative_error) op.worst_parameter = c.id;
        }
      }
    }
    report.ops.push_back(op);
  }
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::string FormatGradSuite(const GradSuiteReport &report) {
  std::ostringstream out;
  char line[160];
  for (const OpGradReport &op : report.ops) {
    std::snprintf(line, sizeof line, "%-16s configs %3zu  failures %zu  max rel err %.3e (seed %llu, %s)\n",
                  op.op.c_str(), op.configs, op.failures, op.max_relative_error,
                  static_cast<unsigned long long>(op.worst_seed), op.worst_parameter.c_str());
    out << line;
  }
  std::snprintf(line, sizeof line, "total configs %zu  max rel err %.3e  %.1fs  %s\n",
                report.configs(), report.max_relative_error(), report.seconds,
                report.passed() ? "PASS" : "FAIL");
  out << line;
  return out.str();
}

}  // namespace eelmo::app
