#include "eelmo/app/pipeline.h"

#include <filesystem>
#include <sstream>

#include "eelmo/corpus/synth.h"
#include "eelmo/errors.h"
#include "eelmo/fileio.h"

namespace eelmo::app {

std::string JoinPath(const std::string &dir, const std::string &name) {
  return (std::filesystem::path(dir) / name).string();
}

void EnsureDirectory(const std::string &dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
}

std::vector<corpus::Paragraph> DataSet::Split(const std::string &name) const {
  if (name == "train") return train;
  if (name == "dev") return dev;
  if (name == "test") return test;
  if (name == "heldout") {
    std::vector<corpus::Paragraph> out = dev;
    out.insert(out.end(), test.begin(), test.end());
    return out;
  }
  if (name == "all") {
    std::vector<corpus::Paragraph> out = train;
    out.insert(out.end(), dev.begin(), dev.end());
    out.insert(out.end(), test.begin(), test.end());
    return out;
  }
  throw ParameterError("unknown split '" + name + "' (train, dev, test, heldout, all)");
}

namespace {

DataSet Assemble(const RunConfig &config, const std::vector<corpus::Paragraph> &paragraphs,
                 corpus::EntityInventory inventory) {
  corpus::Split split = corpus::SplitByDocument(
      paragraphs, {config.split_train, config.split_dev, config.split_test}, config.seed);
  DataSet data;
  data.train = std::move(split.train);
  data.dev = std::move(split.dev);
  data.test = std::move(split.test);
  inventory.RecountFrequencies(data.train);
  data.inventory = std::move(inventory);
  data.candidates =
      corpus::BuildPriors(data.train, static_cast<std::size_t>(config.candidate_cap));
  return data;
}

}  // namespace

DataSet Synthesize(const RunConfig &config) {
  corpus::SynthCorpus synth = corpus::SynthesizeCorpus(config.Synth());
  return Assemble(config, synth.paragraphs, synth.inventory);
}

void WriteDataSet(const std::string &dir, const DataSet &data) {
  corpus::WriteCorpus(JoinPath(dir, kCorpusFile), data.Split("all"));
  corpus::WriteCorpus(JoinPath(dir, kTrainFile), data.train);
  corpus::WriteCorpus(JoinPath(dir, kDevFile), data.dev);
  corpus::WriteCorpus(JoinPath(dir, kTestFile), data.test);
  data.inventory.Save(JoinPath(dir, kInventoryFile));
  data.candidates.Save(JoinPath(dir, kCandidatesFile));
}

DataSet LoadDataSet(const std::string &dir) {
  DataSet data;
  data.train = corpus::LoadCorpus(JoinPath(dir, kTrainFile));
  data.dev = corpus::LoadCorpus(JoinPath(dir, kDevFile));
  data.test = corpus::LoadCorpus(JoinPath(dir, kTestFile));
  data.inventory = corpus::EntityInventory::Load(JoinPath(dir, kInventoryFile));
  data.candidates = corpus::CandidateTable::Load(JoinPath(dir, kCandidatesFile));
  return data;
}

std::vector<corpus::IndexedParagraph> LmBundle::Index(
    const std::vector<corpus::Paragraph> &paragraphs,
    const corpus::EntityInventory &inventory) const {
  return corpus::IndexCorpus(paragraphs, vocab, alphabet, inventory, max_chars);
}

namespace {

std::vector<std::string> TitleWords(const corpus::EntityInventory &inventory) {
  std::vector<std::string> out;
  for (const corpus::EntityEntry &e : inventory.entries()) {
    for (const std::string &w : corpus::SplitWhitespace(e.title)) out.push_back(w);
  }
  return out;
}

}  // namespace

LmBundle InitLm(const RunConfig &config, const DataSet &data) {
  config.Validate();
  const std::vector<std::string> titles = TitleWords(data.inventory);
  LmBundle b;
  b.vocab = corpus::Vocabulary::Build(data.train, titles);
  b.alphabet = corpus::CharAlphabet::Build(data.train, titles);
  b.max_chars = static_cast<std::size_t>(config.max_chars);
  net::SeededRng rng = net::SeededRng(config.seed).Fork(0x1e);
  b.model = lm::LmModel::Init(
      config.LmShapeFor(b.alphabet.size(), b.vocab.size(), data.inventory.size()), rng);
  corpus::EntityInventory resolved = data.inventory;
  resolved.ResolveTitles(b.vocab);
  lm::InitEntityEmbeddings(resolved, b.model);
  return b;
}

Checkpoint LmToCheckpoint(const RunConfig &config, LmBundle &lm) {
  Checkpoint c;
  c.kind = "lm";
  c.config = config;
  c.meta["words"] = lm.vocab.words();
  c.meta["alphabet"] = lm.alphabet.bytes();
  c.meta["max_chars"] = lm.max_chars;
  c.Capture(lm.model.All());
  return c;
}

LmBundle LmFromCheckpoint(const Checkpoint &checkpoint,
                          const corpus::EntityInventory &inventory) {
  if (checkpoint.kind != "lm") {
    throw FormatError("expected a language-model checkpoint, got '" + checkpoint.kind + "'");
  }
  LmBundle b;
  try {
    b.vocab = corpus::Vocabulary::FromWords(checkpoint.meta.at("words"));
    b.alphabet = corpus::CharAlphabet::FromBytes(checkpoint.meta.at("alphabet"));
    b.max_chars = checkpoint.meta.at("max_chars");
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(std::string("checkpoint metadata: ") + e.what());
  }
  net::SeededRng rng(0);
  b.model = lm::LmModel::Init(
      checkpoint.config.LmShapeFor(b.alphabet.size(), b.vocab.size(), inventory.size()), rng);
  checkpoint.Restore(b.model.All());
  return b;
}

LmRun TrainLmStage(const RunConfig &config, const DataSet &data,
                   const lm::StepObserver &observer) {
  LmRun run{InitLm(config, data), {}};
  const auto indexed = run.lm.Index(data.train, data.inventory);
  run.trace = lm::TrainLm(indexed, config.LmTrain(run.lm.vocab.size(), data.inventory.size()), run.lm.model, observer);
  return run;
}

Checkpoint RankerToCheckpoint(const RunConfig &config, ranker::RankerParams &params) {
  Checkpoint c;
  c.kind = "ranker";
  c.config = config;
  const ranker::RankerShape &s = params.shape;
  c.meta["shape"] = {{"prior_bins", s.prior_bins},     {"lexical_bins", s.lexical_bins},
                     {"use_prior", s.use_prior},       {"use_lexical", s.use_lexical},
                     {"d_context", s.d_context},       {"d_entity", s.d_entity},
                     {"hidden", s.hidden_extent()},    {"dropout", s.dropout},
                     {"dropout_input", s.dropout_input}};
  c.Capture(params.All());
  return c;
}

ranker::RankerParams RankerFromCheckpoint(const Checkpoint &checkpoint) {
  if (checkpoint.kind != "ranker") {
    throw FormatError("expected a ranker checkpoint, got '" + checkpoint.kind + "'");
  }
  ranker::RankerShape s;
  try {
    const nlohmann::json &j = checkpoint.meta.at("shape");
    s.prior_bins = j.at("prior_bins");
    s.lexical_bins = j.at("lexical_bins");
    s.use_prior = j.at("use_prior");
    s.use_lexical = j.at("use_lexical");
    s.d_context = j.at("d_context");
    s.d_entity = j.at("d_entity");
    s.hidden = j.at("hidden");
    s.dropout = j.at("dropout");
    s.dropout_input = j.at("dropout_input");
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(std::string("ranker checkpoint metadata: ") + e.what());
  }
  net::SeededRng rng(0);
  ranker::RankerParams params = ranker::RankerParams::Init(s, rng);
  checkpoint.Restore(params.All());
  return params;
}

RankerRun TrainRankerStage(const RunConfig &config, const DataSet &data, LmBundle &lm) {
  const auto indexed = lm.Index(data.train, data.inventory);
  const auto queries = ranker::BuildQueries(indexed, data.candidates, data.inventory);
  net::SeededRng rng = net::SeededRng(config.seed).Fork(0x2a);
  RankerRun run{ranker::RankerParams::Init(ranker::FitToModel(config.Ranker(), lm.model), rng),
                {}};
  run.report = ranker::TrainRanker(queries, indexed, lm.model, run.params, config.RankerTrain());
  return run;
}

std::string FormatRankerTrace(const ranker::RankerTrainReport &report) {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t e = 0; e < report.epoch_loss.size(); ++e) {
    out << e + 1 << '\t' << report.epoch_loss[e] << '\n';
  }
  return out.str();
}

EvalRun EvaluateStage(const DataSet &data, const std::string &split, LmBundle &lm,
                      ranker::RankerParams &params, bool gold_in_candidates_only) {
  const std::vector<corpus::Paragraph> paragraphs = data.Split(split);
  const auto indexed = lm.Index(paragraphs, data.inventory);
  const auto queries = ranker::BuildQueries(indexed, data.candidates, data.inventory);
  const evalrep::DocMentionCounts counts = evalrep::CountDocMentions(paragraphs);
  EvalRun run;
  run.predictions = ranker::Predict(queries, indexed, lm.model, params, data.inventory);
  run.prior_predictions = ranker::PredictByPrior(queries, data.inventory);
  if (gold_in_candidates_only) {
    run.predictions = evalrep::GoldInCandidates(run.predictions);
    run.prior_predictions = evalrep::GoldInCandidates(run.prior_predictions);
  }
  run.report = evalrep::BucketReport(run.predictions, data.inventory, counts);
  run.prior_report = evalrep::BucketReport(run.prior_predictions, data.inventory, counts);
  return run;
}

std::vector<evalrep::AblationResult> AblationStage(const RunConfig &config, const DataSet &data,
                                                   const std::string &split, LmBundle &lm,
                                                   bool gold_in_candidates_only) {
  const auto train_indexed = lm.Index(data.train, data.inventory);
  const auto train_queries =
      ranker::BuildQueries(train_indexed, data.candidates, data.inventory);
  const std::vector<corpus::Paragraph> paragraphs = data.Split(split);
  const auto eval_indexed = lm.Index(paragraphs, data.inventory);
  const auto eval_queries = ranker::BuildQueries(eval_indexed, data.candidates, data.inventory);
  const std::uint64_t init_seed = net::SeededRng(config.seed).Fork(0x2a).seed();
  return evalrep::AblationEval({&train_queries, &train_indexed}, {&eval_queries, &eval_indexed},
                               lm.model, ranker::FitToModel(config.Ranker(), lm.model),
                               config.RankerTrain(), init_seed, data.inventory,
                               evalrep::CountDocMentions(paragraphs), gold_in_candidates_only);
}

}  // namespace eelmo::app
