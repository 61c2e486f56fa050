#include <cmath>

#include "doctest.h"
#include "eelmo/corpus/priors.h"
#include "eelmo/errors.h"
#include "eelmo/evalrep/evalrep.h"
#include "json.hpp"
#include "test_util.h"

namespace eelmo::evalrep {
namespace {

using ranker::Prediction;

Prediction Make(const std::string &doc, const std::string &gold, const std::string &pred,
                bool in_candidates = true) {
  Prediction p;
  p.doc_id = doc;
  p.gold = gold;
  if (!pred.empty()) p.predicted = pred;
  p.gold_in_candidates = in_candidates;
  return p;
}

TEST_CASE("micro accuracy") {
  CHECK(MicroAccuracy({"a", "b", "c", "x"}, {"a", "b", "c", "d"}) == 0.75);
  CHECK(MicroAccuracy({"a", "b"}, {"a", "b"}) == 1.0);
  CHECK(MicroAccuracy({std::nullopt}, {"a"}) == 0.0);
  CHECK(MicroAccuracy({}, {}) == 0.0);
  CHECK(MicroAccuracy(std::vector<Prediction>{}) == 0.0);
  CHECK_THROWS_AS(MicroAccuracy({"a"}, {"a", "b"}), ContractError);

  // Independent one-pass counter.
  net::SeededRng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Prediction> preds;
    int hits = 0;
    const int n = 1 + static_cast<int>(rng.Below(40));
    for (int i = 0; i < n; ++i) {
      const std::string g = "E" + std::to_string(rng.Below(4));
      const std::string p = rng.Uniform() < 0.1 ? "" : "E" + std::to_string(rng.Below(4));
      hits += p == g;
      preds.push_back(Make("d", g, p));
    }
    CHECK(MicroAccuracy(preds) == static_cast<double>(hits) / n);
  }
}

TEST_CASE("bucket boundaries") {
  CHECK(FrequencyBucket(0) == "unseen");
  CHECK(FrequencyBucket(1) == "1-10");
  CHECK(FrequencyBucket(10) == "1-10");
  CHECK(FrequencyBucket(11) == "11-50");
  CHECK(FrequencyBucket(50) == "11-50");
  CHECK(FrequencyBucket(51) == ">=51");
  CHECK(DocMentionBucket(1) == "1-4");
  CHECK(DocMentionBucket(4) == "1-4");
  CHECK(DocMentionBucket(5) == "5-9");
  CHECK(DocMentionBucket(9) == "5-9");
  CHECK(DocMentionBucket(10) == "10-19");
  CHECK(DocMentionBucket(19) == "10-19");
  CHECK(DocMentionBucket(20) == ">=20");
}

TEST_CASE("bucket report partitions the queries") {
  corpus::EntityInventory inv;
  inv.Add("A", "a", 10);
  inv.Add("B", "b", 11);
  inv.Add("C", "c", 51);
  inv.Add("Z", "z", 0);
  std::vector<Prediction> preds;
  for (int i = 0; i < 20; ++i) preds.push_back(Make("big", i % 2 ? "A" : "C", "A"));
  preds.push_back(Make("small", "B", "B"));
  preds.push_back(Make("small", "Z", "", false));
  preds.push_back(Make("small", "missing", "A"));

  EvalReport r = BucketReport(preds, inv, CountDocMentions(preds));
  CHECK(r.n_queries == 23);
  CHECK(r.n_correct == 11);
  CHECK(r.n_gold_missing == 1);
  CHECK(r.micro_accuracy == 11.0 / 23.0);
  std::size_t total = 0;
  for (const BucketStat &b : r.frequency_buckets) total += b.n;
  CHECK(total == 23);
  total = 0;
  for (const BucketStat &b : r.doc_mention_buckets) total += b.n;
  CHECK(total == 23);
  CHECK(r.frequency_buckets[0].label == "unseen");
  CHECK(r.frequency_buckets[0].n == 2);
  CHECK(r.frequency_buckets[1].n == 10);
  CHECK(r.frequency_buckets[1].accuracy == 1.0);
  CHECK(r.frequency_buckets[2].n == 1);
  CHECK(r.frequency_buckets[3].n == 10);
  CHECK(r.frequency_buckets[3].accuracy == 0.0);
  CHECK(r.doc_mention_buckets[0].n == 3);
  CHECK(r.doc_mention_buckets[3].label == ">=20");
  CHECK(r.doc_mention_buckets[3].n == 20);
  CHECK(r.doc_mention_buckets[1].accuracy == 0.0);

  // Explicit counts take precedence over the prediction-derived ones.
  DocMentionCounts counts{{"small", 7}};
  EvalReport s = BucketReport(preds, inv, counts);
  CHECK(s.doc_mention_buckets[1].n == 3);

  std::vector<Prediction> kept = GoldInCandidates(preds);
  CHECK(kept.size() == 22);

  nlohmann::json j = nlohmann::json::parse(FormatReport(r, "test"));
  CHECK(j["n_queries"] == 23);
  CHECK(j["frequency_buckets"].size() == 4);
  CHECK(j["doc_mention_buckets"][3]["label"] == ">=20");
  CHECK(FormatReportTable(r).find("micro accuracy 0.4783") != std::string::npos);
}

TEST_CASE("single-document corpus fills one doc bucket") {
  testing::Fixture f = testing::MakeFixture(10, 6, 40, 3);
  std::vector<corpus::Paragraph> paragraphs = f.synth.paragraphs;
  for (corpus::Paragraph &p : paragraphs) p.doc_id = "only";
  DocMentionCounts counts = CountDocMentions(paragraphs);
  CHECK(counts.at("only") == corpus::CountMentions(paragraphs));
  std::vector<Prediction> preds;
  for (const corpus::Paragraph &p : paragraphs) {
    for (const corpus::Mention &m : p.mentions) preds.push_back(Make("only", m.entity, m.entity));
  }
  EvalReport r = BucketReport(preds, f.synth.inventory, counts);
  std::size_t nonempty = 0, total = 0;
  for (const BucketStat &b : r.doc_mention_buckets) {
    nonempty += b.n > 0;
    total += b.n;
  }
  CHECK(nonempty == 1);
  CHECK(total == preds.size());
  CHECK(r.micro_accuracy == 1.0);
}

struct Pipeline {
  testing::Fixture f;
  lm::LmModel model;
  corpus::CandidateTable table;
  std::vector<ranker::Query> queries;

  explicit Pipeline(std::size_t ambiguity) {
    corpus::SynthSpec spec;
    spec.n_entities = 6;
    spec.n_paragraphs = 24;
    spec.vocab_size = 40;
    spec.min_tokens = 3;
    spec.max_tokens = 6;
    spec.ambiguity = ambiguity;
    spec.seed = 9;
    f.synth = corpus::SynthesizeCorpus(spec);
    f.alphabet = corpus::CharAlphabet::Build(f.synth.paragraphs);
    f.indexed = corpus::IndexCorpus(f.synth.paragraphs, f.synth.vocab, f.alphabet,
                                    f.synth.inventory, f.max_chars);
    model = testing::TinyModel(f, 3, 4);
    table = corpus::BuildPriors(f.synth.paragraphs, 0);
    queries = ranker::BuildQueries(f.indexed, table, f.synth.inventory);
  }
};

ranker::RankerShape Shape(const lm::LmModel &model) {
  ranker::RankerShape s;
  s.prior_bins = 4;
  s.lexical_bins = 3;
  s.dropout = 0.2;
  return ranker::FitToModel(s, model);
}

TEST_CASE("ablation runs produce four bounded reports") {
  Pipeline p(1);
  ranker::RankerTrainSpec spec;
  spec.epochs = 2;
  EvalData data{&p.queries, &p.f.indexed};
  const DocMentionCounts counts = CountDocMentions(p.f.synth.paragraphs);
  std::vector<AblationResult> results = AblationEval(data, data, p.model, Shape(p.model), spec, 4,
                                                     p.f.synth.inventory, counts);
  REQUIRE(results.size() == 4);
  CHECK(results[0].ablation.name == "full");
  CHECK(results[3].ablation.name == "-both");
  for (const AblationResult &r : results) {
    CHECK(r.report.micro_accuracy >= 0.0);
    CHECK(r.report.micro_accuracy <= 1.0);
    CHECK(r.report.n_queries == p.queries.size());
  }
  // Unambiguous aliases: context alone suffices.
  CHECK(results[3].report.micro_accuracy >= 0.9);

  AblationResult direct = TrainAndEvaluate(AblationConfigs()[0], data, data, p.model,
                                           Shape(p.model), spec, 4, p.f.synth.inventory, counts);
  CHECK(direct.report == results[0].report);
  CHECK(direct.predictions == results[0].predictions);
}

TEST_CASE("gold-in-candidates filter") {
  Pipeline p(2);
  std::vector<ranker::Query> queries = p.queries;
  for (std::size_t i = 0; i < queries.size(); i += 4) {
    auto &c = queries[i].candidates;
    std::erase_if(c, [&](const ranker::Candidate &x) { return x.entity == queries[i].gold; });
  }
  ranker::RankerTrainSpec spec;
  spec.epochs = 1;
  EvalData data{&queries, &p.f.indexed};
  const DocMentionCounts counts = CountDocMentions(p.f.synth.paragraphs);
  AblationResult all = TrainAndEvaluate(AblationConfigs()[0], data, data, p.model,
                                        Shape(p.model), spec, 2, p.f.synth.inventory, counts);
  AblationResult kept = TrainAndEvaluate(AblationConfigs()[0], data, data, p.model,
                                         Shape(p.model), spec, 2, p.f.synth.inventory, counts,
                                         true);
  const std::size_t missing = (queries.size() + 3) / 4;
  CHECK(all.report.n_gold_missing == missing);
  CHECK(kept.report.n_gold_missing == 0);
  CHECK(kept.report.n_queries + missing == all.report.n_queries);
  CHECK(kept.report.n_correct == all.report.n_correct);
}

}  // namespace
}  // namespace eelmo::evalrep
