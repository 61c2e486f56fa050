// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Oracles here are written independently of the library.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "eelmo/app/checkpoint.h"
#include "eelmo/app/config.h"
#include "eelmo/app/gradsuite.h"
#include "eelmo/app/pipeline.h"
#include "eelmo/corpus/priors.h"
#include "eelmo/evalrep/evalrep.h"
#include "eelmo/features/features.h"
#include "eelmo/lm/model.h"
#include "eelmo/lm/targets.h"
#include "eelmo/lm/train.h"
#include "eelmo/netcore/layers.h"
#include "eelmo/netcore/tape.h"
#include "eelmo/ranker/train.h"
#include "test_util.h"

namespace {

using namespace eelmo;
using Clock = std::chrono::steady_clock;

int g_failed = 0;

void Report(int id, bool pass, const std::string &what, const std::string &detail) {
  std::printf("%s criterion %2d: %s | %s\n", pass ? "PASS" : "FAIL", id, what.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failed;
}

std::string Fmt(const char *format, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c, d);
  return buf;
}

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

bool SameBytes(const net::Tensor &a, const net::Tensor &b) {
  const auto x = a.values(), y = b.values();
  return x.size() == y.size() && std::memcmp(x.data(), y.data(), x.size_bytes()) == 0;
}

// 1. Finite-difference suite over every differentiable operation.
void GradientSuite() {
  const auto start = Clock::now();
  const app::GradSuiteReport r = app::RunGradSuite({});
  const double secs = Seconds(start);
  std::size_t failures = 0;
  for (const auto &op : r.ops) failures += op.failures;
  const bool pass = r.ops.size() == 8 && r.configs() >= 100 && failures == 0 &&
                    r.max_relative_error() < 1e-4 && secs < 120.0;
  Report(1, pass, "gradient suite, 8 ops, step 1e-5",
         Fmt("%.0f configs, %.0f failures, max rel err %.3e, %.1f s", double(r.configs()),
             double(failures), r.max_relative_error(), secs));
}

// 2. Sampled softmax against exact cross-entropy, long double oracle.
void SampledSoftmaxOracle() {
  net::SeededRng rng(2024);
  double worst = 0.0;
  int cases = 0;
  for (std::size_t vocab = 2; vocab <= 200; vocab += (vocab < 20 ? 1 : 9)) {
    for (int rep = 0; rep < 3; ++rep) {
      const std::size_t d = 1 + rng.Below(8);
      net::Tensor table = net::UniformTensor({vocab, d}, 2.0, rng);
      net::Tensor ctx = net::UniformTensor({d}, 2.0, rng);
      const std::size_t target = rng.Below(vocab);
      std::vector<std::size_t> negatives;
      for (std::size_t v = 0; v < vocab; ++v) {
        if (v != target) negatives.push_back(v);
      }
      rng.Shuffle(negatives);
      net::Tape tape;
      const double got = tape.scalar(tape.SampledSoftmaxLoss(
          tape.Constant(ctx), tape.Constant(table), target, negatives));
      std::vector<long double> s(vocab, 0.0L);
      for (std::size_t v = 0; v < vocab; ++v) {
        for (std::size_t k = 0; k < d; ++k) {
          s[v] += static_cast<long double>(table.at(v, k)) * ctx[k];
        }
      }
      const long double m = *std::max_element(s.begin(), s.end());
      long double z = 0.0L;
      for (long double x : s) z += std::exp(x - m);
      const long double exact = m + std::log(z) - s[target];
      worst = std::max(worst, static_cast<double>(std::fabs(got - exact)));
      ++cases;
    }
  }
  Report(2, worst <= 1e-10, "sampled softmax with the full complement equals exact CE",
         Fmt("%.0f cases, vocab 2..200, max |diff| %.3e (tol 1e-10)", cases, worst));
}

// 3. Target plan against a direct walk of the mention slots.
lm::TargetPlan Walk(const corpus::IndexedParagraph &p) {
  const int n = static_cast<int>(p.words.size());
  lm::TargetPlan plan;
  auto filler = [&](int k) -> lm::Target {
    for (const auto &m : p.mentions) {
      if (k >= m.start && k <= m.end) return lm::Target::Entity(m.entity);
    }
    return lm::Target::Word(p.words[static_cast<std::size_t>(k)]);
  };
  for (int k = 0; k < n; ++k) {
    plan.forward.push_back(k + 1 <= n - 1 ? filler(k + 1) : lm::Target::None());
    plan.backward.push_back(k - 1 >= 0 ? filler(k - 1) : lm::Target::None());
  }
  return plan;
}

void TargetPlanOracle() {
  std::size_t cases = 0, mismatches = 0, boundary = 0;
  for (int t = 1; t <= 6; ++t) {
    corpus::IndexedParagraph p;
    p.words.push_back(corpus::Vocabulary::kBos);
    for (int k = 1; k <= t; ++k) p.words.push_back(corpus::WordId{100 + k});
    p.words.push_back(corpus::Vocabulary::kEos);
    p.chars.resize(p.words.size());
    std::function<void(int)> place = [&](int from) {
      ++cases;
      bool touches_edge = false;
      for (const auto &m : p.mentions) touches_edge |= m.start == 1 || m.end == t;
      boundary += touches_edge;
      if (!(lm::BuildTargetPlan(p) == Walk(p))) ++mismatches;
      for (int s = from; s <= t; ++s) {
        for (int e = s; e <= t; ++e) {
          p.mentions.push_back({s, e, corpus::EntityId{static_cast<int>(p.mentions.size())}, ""});
          place(e + 1);
          p.mentions.pop_back();
        }
      }
    };
    place(1);
  }
  Report(3, mismatches == 0 && cases == 376, "target plan equals brute-force walker, T <= 6",
         Fmt("%.0f placements (%.0f touch BOS/EOS), %.0f mismatches", double(cases),
             double(boundary), double(mismatches)));
}

// 4. Config contracts.
void ConfigContracts() {
  auto f = testing::MakeFixture(30);
  bool a_frozen = true, a_entity_moved = false;
  {
    auto model = testing::TinyModel(f);
    std::vector<net::Tensor> before;
    for (net::Parameter *p : model.All()) before.push_back(p->tensor());
    lm::TrainSpec spec;
    spec.config = lm::LmConfig::kA;
    spec.epochs = 2;
    lm::TrainLm(f.indexed, spec, model);
    const auto all = model.All();
    for (std::size_t i = 0; i < all.size(); ++i) {
      const bool same = SameBytes(before[i], all[i]->tensor());
      if (all[i] == &model.entity_table) {
        a_entity_moved = !same;
      } else {
        a_frozen &= same;
      }
    }
  }

  std::size_t c_paragraphs = 0, c_nonzero = 0, c_touched = 0;
  {
    auto model = testing::TinyModel(f);
    lm::LossSpec spec;
    spec.config = lm::LmConfig::kC;
    spec.n_negatives_words = 5;
    spec.n_negatives_entities = 3;
    for (const auto &p : f.indexed) {
      if (p.mentions.empty()) continue;
      ++c_paragraphs;
      for (net::Parameter *q : model.All()) q->ResetGrad();
      net::Tape tape;
      auto r = lm::EelmoLoss(tape, p, lm::BuildTargetPlan(p), model, spec, net::SeededRng(9));
      tape.Backward(r.loss);
      c_touched += model.word_table.touched_rows().size();
      const net::Tensor &t = model.word_table.tensor();
      if (t.has_grad()) {
        for (double g : std::as_const(t).grad()) c_nonzero += g != 0.0;
      }
    }
  }

  double worst = 0.0;
  std::size_t checked = 0;
  {
    auto model = testing::TinyModel(f);
    lm::LossSpec spec;
    spec.config = lm::LmConfig::kB;
    spec.n_negatives_words = 5;
    spec.n_negatives_entities = 3;
    for (const auto &p : f.indexed) {
      net::Tape tape;
      auto r = lm::EelmoLoss(tape, p, lm::BuildTargetPlan(p), model, spec, net::SeededRng(11));
      double ll_w = 0.0, ll_e = 0.0;
      for (const auto &t : r.breakdown.terms) {
        (t.target.kind == lm::TargetKind::kEntity ? ll_e : ll_w) += t.nll;
      }
      worst = std::max(worst, std::fabs(tape.scalar(r.loss) - (ll_w + ll_e)));
      ++checked;
    }
  }
  const bool pass = a_frozen && a_entity_moved && c_paragraphs > 0 && c_nonzero == 0 &&
                    c_touched == 0 && worst <= 1e-12;
  Report(4, pass, "config a freezes non-entity params; config c zero word-table grad; additivity",
         std::string("a: ") + (a_frozen ? "frozen" : "CHANGED") +
             (a_entity_moved ? ", entity table moved" : ", entity table static") +
             Fmt("; c: %.0f paragraphs, %.0f nonzero grads, %.0f touched rows",
                 double(c_paragraphs), double(c_nonzero), double(c_touched)) +
             Fmt("; additivity %.0f paragraphs, max |diff| %.3e", double(checked), worst));
}

// 5. Unit sphere after every step, all three configs.
void UnitSphere() {
  auto f = testing::MakeFixture(20);
  double worst = 0.0;
  std::size_t steps = 0;
  for (lm::LmConfig config : {lm::LmConfig::kA, lm::LmConfig::kB, lm::LmConfig::kC}) {
    auto model = testing::TinyModel(f);
    lm::TrainSpec spec;
    spec.config = config;
    spec.epochs = 2;
    spec.lr = 0.5;
    lm::TrainLm(f.indexed, spec, model, [&](std::size_t, std::size_t, const lm::LmModel &m) {
      const net::Tensor &t = m.entity_table.tensor();
      for (std::size_t r = 0; r < t.rows(); ++r) {
        long double sq = 0.0L;
        for (std::size_t c = 0; c < t.cols(); ++c) sq += static_cast<long double>(t.at(r, c)) * t.at(r, c);
        worst = std::max(worst, static_cast<double>(std::fabs(std::sqrt(sq) - 1.0L)));
      }
      ++steps;
    });
  }
  Report(5, steps > 0 && worst < 1e-9, "entity rows on the unit sphere after every step",
         Fmt("%.0f steps over configs a/b/c, max | |row| - 1 | %.3e", double(steps), worst));
}

// 6. Binning analytics. Oracle: exp(-(s * |x - c|)^2) with s = softplus(rho).
void Binning() {
  bool centers_exact = true;
  for (std::size_t d : {1, 10, 15}) {
    features::BinLayer layer = features::BinLayer::Init("b/", d);
    for (std::size_t i = 0; i < d; ++i) {
      centers_exact &= features::BinProjectValues(layer.centers.tensor()[i], layer)[i] == 1.0;
    }
  }
  features::BinLayer one = features::BinLayer::Init("b/", 1);
  one.centers.tensor()[0] = 0.25;
  one.rho.tensor()[0] = std::log(std::expm1(4.0));  // sharpness 4
  const double e_case = std::fabs(features::BinProjectValues(0.5, one)[0] - std::exp(-1.0));

  net::SeededRng rng(6);
  double asym = 0.0;
  for (int trial = 0; trial < 2000; ++trial) {
    features::BinLayer b = features::BinLayer::Init("b/", 1);
    b.centers.tensor()[0] = rng.Uniform();
    b.rho.tensor()[0] = rng.Uniform(-2.0, 3.0);
    const double c = b.centers.tensor()[0], delta = rng.Uniform(0.0, 1.0);
    asym = std::max(asym, std::fabs(features::BinProjectValues(c + delta, b)[0] -
                                    features::BinProjectValues(c - delta, b)[0]));
  }
  Report(6, centers_exact && e_case <= 1e-12 && asym <= 1e-15, "bin projection analytics",
         std::string(centers_exact ? "p=1 at every center" : "center value != 1") +
             Fmt("; |p - e^-1| %.3e (tol 1e-12); max asymmetry %.3e (tol 1e-15)", e_case, asym));
}

// 7. Priors on a 10-link toy table, hand counted.
void PriorOracle() {
  auto para = [](const std::string &doc, std::vector<std::string> tokens,
                 const std::string &entity) {
    corpus::Paragraph p;
    p.doc_id = doc;
    p.tokens = std::move(tokens);
    p.mentions = {{1, static_cast<int>(p.tokens.size()), entity, ""}};
    corpus::Validate(p);
    return p;
  };
  std::vector<corpus::Paragraph> toy;
  for (int i = 0; i < 5; ++i) toy.push_back(para("d", {"Paris"}, "Paris_France"));
  for (int i = 0; i < 3; ++i) toy.push_back(para("d", {"PARIS"}, "Paris_Texas"));
  toy.push_back(para("d", {"New", "York"}, "NYC"));
  toy.push_back(para("d", {"new", "york"}, "New_York_State"));
  const corpus::CandidateTable t = corpus::BuildPriors(toy, 0);
  // Hand counts: paris 5/8 and 3/8, new york 1/2 and 1/2.
  const bool exact = corpus::CountMentions(toy) == 10 &&
                     t.Prior("paris", "Paris_France") == 5.0 / 8.0 &&
                     t.Prior("paris", "Paris_Texas") == 3.0 / 8.0 &&
                     t.Prior("new york", "NYC") == 0.5 &&
                     t.Prior("new york", "New_York_State") == 0.5 && t.size() == 2;

  app::RunConfig config;
  const app::DataSet data = app::Synthesize(config);
  const auto all = data.Split("all");
  const double recall = corpus::CandidateRecall(all, corpus::BuildPriors(all, 0));
  Report(7, exact && recall == 1.0, "prior hand counts and self-built recall",
         std::string(exact ? "toy priors exact" : "toy priors WRONG") +
             Fmt("; uncapped recall %.6f on %.0f links", recall, double(corpus::CountMentions(all))));
}

struct PipelineOutput {
  std::string lm_checkpoint;
  std::string ranker_checkpoint;
  std::string held_in_report, held_out_report;
  app::EvalRun held_in, held_out;
  double seconds = 0.0;
};

PipelineOutput RunPipeline(const app::RunConfig &config) {
  const auto start = Clock::now();
  PipelineOutput out;
  const app::DataSet data = app::Synthesize(config);
  app::LmRun lm = app::TrainLmStage(config, data);
  app::RankerRun rk = app::TrainRankerStage(config, data, lm.lm);
  out.lm_checkpoint = app::SerializeCheckpoint(app::LmToCheckpoint(config, lm.lm));
  out.ranker_checkpoint = app::SerializeCheckpoint(app::RankerToCheckpoint(config, rk.params));
  out.held_in = app::EvaluateStage(data, "train", lm.lm, rk.params, false);
  out.held_out = app::EvaluateStage(data, "heldout", lm.lm, rk.params, false);
  out.held_in_report = evalrep::FormatReport(out.held_in.report);
  out.held_out_report = evalrep::FormatReport(out.held_out.report);
  out.seconds = Seconds(start);
  return out;
}

// 8. End-to-end tiny corpus.
void EndToEnd(const PipelineOutput &run) {
  const double in = run.held_in.report.micro_accuracy;
  const double out = run.held_out.report.micro_accuracy;
  const double prior = run.held_out.prior_report.micro_accuracy;
  Report(8, in >= 0.90 && out > prior && run.seconds < 600.0,
         "tiny corpus: held-in >= 0.90, held-out > prior baseline, < 10 min",
         Fmt("held-in %.4f; held-out %.4f vs prior %.4f; %.1f s", in, out, prior, run.seconds));
}

// 9. Ablations.
void Ablations() {
  ranker::RankerShape paper;
  paper.d_context = 512;
  paper.d_entity = 512;
  const std::size_t prior = 15, lexical = 10 * 10, ctx = 512 + 512, entity = 512;
  bool extents = true;
  for (bool use_prior : {true, false}) {
    for (bool use_lexical : {true, false}) {
      ranker::RankerShape s = paper;
      s.use_prior = use_prior;
      s.use_lexical = use_lexical;
      const std::size_t expected =
          (use_prior ? prior : 0) + (use_lexical ? lexical : 0) + ctx + entity;
      extents &= s.input_extent() == expected;
    }
  }
  ranker::RankerShape both = paper;
  both.use_prior = both.use_lexical = false;
  extents &= paper.input_extent() == 1651 && both.input_extent() == 1536;

  auto f = testing::MakeFixture(30);
  auto model = testing::TinyModel(f);
  const corpus::CandidateTable table = corpus::BuildPriors(f.synth.paragraphs, 0);
  const auto queries = ranker::BuildQueries(f.indexed, table, f.synth.inventory);
  ranker::RankerShape shape = ranker::FitToModel({}, model);
  shape.use_prior = false;
  net::SeededRng init(8);
  ranker::RankerParams params = ranker::RankerParams::Init(shape, init);
  ranker::RankerTrainSpec spec;
  spec.epochs = 3;
  ranker::TrainRanker(queries, f.indexed, model, params, spec);
  const auto base = ranker::Predict(queries, f.indexed, model, params, f.synth.inventory);
  net::SeededRng noise(99);
  int variant = 0;
  bool invariant = true;
  for (; variant < 20; ++variant) {
    auto perturbed = queries;
    for (auto &q : perturbed) {
      for (auto &c : q.candidates) {
        c.prior = variant % 2 ? noise.Uniform(0.0, 1.0) : (noise.Below(2) ? 1.0 : 1e-12);
        c.features.prior = c.prior;
      }
    }
    invariant &= ranker::Predict(perturbed, f.indexed, model, params, f.synth.inventory) == base;
  }
  Report(9, extents && invariant, "-prior invariant to prior perturbation; ablation extents",
         Fmt("%.0f perturbed tables; extents full %.0f, -prior %.0f, -lexical %.0f", variant,
             double(paper.input_extent()), double(paper.input_extent() - prior),
             double(paper.input_extent() - lexical)) +
             Fmt(", -both %.0f", double(both.input_extent())) +
             (extents ? "" : " MISMATCH"));
}

// 10. Determinism across two runs.
void Determinism(const PipelineOutput &a, const app::RunConfig &config) {
  const PipelineOutput b = RunPipeline(config);
  const bool lm = a.lm_checkpoint == b.lm_checkpoint;
  const bool rk = a.ranker_checkpoint == b.ranker_checkpoint;
  const bool reports = a.held_in.report == b.held_in.report && a.held_out.report == b.held_out.report &&
                       a.held_in_report == b.held_in_report && a.held_out_report == b.held_out_report;
  const bool preds = a.held_out.predictions == b.held_out.predictions;
  Report(10, lm && rk && reports && preds, "two full runs give identical checkpoints and reports",
         std::string("lm checkpoint ") + (lm ? "identical" : "DIFFERS") + ", ranker checkpoint " +
             (rk ? "identical" : "DIFFERS") + ", reports " + (reports ? "identical" : "DIFFER") +
             Fmt(" (%.0f + %.0f checkpoint bytes)", double(a.lm_checkpoint.size()),
                 double(a.ranker_checkpoint.size())));
}

// 11. Bucket boundaries and partition.
void Buckets(const PipelineOutput &run) {
  struct Case {
    std::int64_t value;
    const char *label;
  };
  bool boundaries = true;
  for (Case c : {Case{0, "unseen"}, {1, "1-10"}, {10, "1-10"}, {11, "11-50"}, {50, "11-50"},
                 {51, ">=51"}, {100000, ">=51"}}) {
    boundaries &= evalrep::FrequencyBucket(c.value) == c.label;
  }
  for (Case c : {Case{1, "1-4"}, {4, "1-4"}, {5, "5-9"}, {9, "5-9"}, {10, "10-19"},
                 {19, "10-19"}, {20, ">=20"}, {500, ">=20"}}) {
    boundaries &= evalrep::DocMentionBucket(static_cast<std::size_t>(c.value)) == c.label;
  }
  boundaries &= evalrep::FrequencyBucketLabels() ==
                    std::vector<std::string>{"unseen", "1-10", "11-50", ">=51"} &&
                evalrep::DocMentionBucketLabels() ==
                    std::vector<std::string>{"1-4", "5-9", "10-19", ">=20"};

  bool partition = true;
  std::size_t reports = 0;
  for (const evalrep::EvalReport *r :
       {&run.held_in.report, &run.held_out.report, &run.held_out.prior_report}) {
    std::size_t n_f = 0, n_d = 0, c_f = 0, c_d = 0;
    for (const auto &b : r->frequency_buckets) n_f += b.n, c_f += b.n_correct;
    for (const auto &b : r->doc_mention_buckets) n_d += b.n, c_d += b.n_correct;
    partition &= n_f == r->n_queries && n_d == r->n_queries && c_f == r->n_correct &&
                 c_d == r->n_correct;
    ++reports;
  }
  Report(11, boundaries && partition, "bucket boundaries and partition of all queries",
         std::string(boundaries ? "boundaries exact" : "boundaries WRONG") +
             Fmt("; %.0f reports partition %.0f held-in and %.0f held-out queries", double(reports),
                 double(run.held_in.report.n_queries), double(run.held_out.report.n_queries)) +
             (partition ? "" : " PARTITION BROKEN"));
}

}  // namespace

int main() {
  const auto start = Clock::now();
  GradientSuite();
  SampledSoftmaxOracle();
  TargetPlanOracle();
  ConfigContracts();
  UnitSphere();
  Binning();
  PriorOracle();

  const app::RunConfig config =
      app::RunConfig::Load(std::string(EELMO_SOURCE_DIR) + "/configs/tiny_synth.cfg");
  const PipelineOutput run = RunPipeline(config);
  EndToEnd(run);
  Ablations();
  Determinism(run, config);
  Buckets(run);
  std::printf("%d of 11 criteria failed, %.1f s\n", g_failed, Seconds(start));
  return g_failed == 0 ? 0 : 1;
}
