// eelmo: command-line driver for the synthetic-data pipeline.
//
//   eelmo synth --out data/
//   eelmo train-lm --data data/ --config b --out lm/
//   eelmo train-ranker --data data/ --lm lm/model.ckpt --out ranker/
//   eelmo eval --data data/ --lm lm/model.ckpt --ranker ranker/ranker.ckpt --out eval/
//   eelmo report --buckets --data data/ --predictions eval/predictions.tsv
//   eelmo gradcheck

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "eelmo/app/checkpoint.h"
#include "eelmo/app/config.h"
#include "eelmo/app/gradsuite.h"
#include "eelmo/app/pipeline.h"
#include "eelmo/corpus/corpus.h"
#include "eelmo/corpus/priors.h"
#include "eelmo/errors.h"
#include "eelmo/evalrep/evalrep.h"
#include "eelmo/fileio.h"

namespace {

using namespace eelmo;
using app::JoinPath;

// Options shared by every pipeline command. Later layers win: base config,
// then --config-file, then --set pairs, then dedicated flags.
struct ConfigLayers {
  std::string config_file;
  std::vector<std::string> sets;
  bool paper_dims = false;
  std::int64_t seed = -1;

  void Add(CLI::App *cmd) {
    cmd->add_option("--config-file", config_file, "key=value run config file")
        ->check(CLI::ExistingFile);
    cmd->add_option("--set", sets, "override one config key (key=value)");
    cmd->add_flag("--paper-dims", paper_dims, "512-wide states and 8192 negatives");
    cmd->add_option("--seed", seed, "master seed");
  }

  app::RunConfig Apply(app::RunConfig config) const {
    if (!config_file.empty()) {
      const app::RunConfig file = app::RunConfig::Load(config_file);
      // Keep path fields of the base; the file supplies tunables.
      const std::string data = config.data_dir, lm = config.lm_checkpoint,
                        rk = config.ranker_checkpoint, out = config.out_dir;
      config = file;
      if (config.data_dir.empty()) config.data_dir = data;
      if (config.lm_checkpoint.empty()) config.lm_checkpoint = lm;
      if (config.ranker_checkpoint.empty()) config.ranker_checkpoint = rk;
      if (config.out_dir.empty()) config.out_dir = out;
    }
    for (const std::string &kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw FormatError("--set expects key=value, got '" + kv + "'");
      config.Set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (paper_dims) config.ApplyPaperDims();
    if (seed >= 0) config.seed = static_cast<std::uint64_t>(seed);
    return config;
  }
};

app::RunConfig DataDirConfig(const std::string &dir) {
  const std::string path = JoinPath(dir, app::kRunConfigFile);
  if (std::filesystem::exists(path)) return app::RunConfig::Load(path);
  return {};
}

void Finish(const app::RunConfig &config, const std::string &out) {
  app::RunConfig saved = config;
  saved.out_dir = out;
  saved.Save(JoinPath(out, app::kRunConfigFile));
}

void AddAblationFlags(CLI::App *cmd, bool &ablate_prior, bool &ablate_lexical) {
  cmd->add_flag("--ablate-prior", ablate_prior, "drop the prior block from the ranker input");
  cmd->add_flag("--ablate-lexical", ablate_lexical, "drop the lexical block from the ranker input");
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App cli{"E-ELMo entity-aware language model and local NED ranker"};
  cli.require_subcommand(1);

  // synth
  ConfigLayers synth_layers;
  std::string synth_out;
  CLI::App *synth = cli.add_subcommand("synth", "generate a synthetic corpus, inventory and candidates");
  synth_layers.Add(synth);
  synth->add_option("--out", synth_out, "output data directory")->required();

  // priors
  std::string priors_corpus, priors_out;
  std::int64_t priors_cap = static_cast<std::int64_t>(corpus::kDefaultCandidateCap);
  CLI::App *priors = cli.add_subcommand("priors", "build a candidate table from an annotated corpus");
  priors->add_option("--corpus", priors_corpus, "annotated JSONL corpus")
      ->required()
      ->check(CLI::ExistingFile);
  priors->add_option("--out", priors_out, "output directory")->required();
  priors->add_option("--cap", priors_cap, "candidates per mention, 0 = unlimited")
      ->check(CLI::NonNegativeNumber);

  // train-lm
  ConfigLayers lm_layers;
  std::string lm_data, lm_out, lm_init, lm_config;
  std::int64_t lm_epochs = -1;
  CLI::App *train_lm = cli.add_subcommand("train-lm", "train the entity-aware language model");
  lm_layers.Add(train_lm);
  train_lm->add_option("--data", lm_data, "data directory from synth")->required();
  train_lm->add_option("--config", lm_config, "a: entities only, b: everything, c: entity terms only")
      ->check(CLI::IsMember({"a", "b", "c"}));
  train_lm->add_option("--init", lm_init, "start from this LM checkpoint")->check(CLI::ExistingFile);
  train_lm->add_option("--epochs", lm_epochs, "training epochs");
  train_lm->add_option("--out", lm_out, "output directory")->required();

  // train-ranker
  ConfigLayers rk_layers;
  std::string rk_data, rk_lm, rk_out;
  bool rk_ablate_prior = false, rk_ablate_lexical = false, rk_fine_tune = false;
  std::int64_t rk_epochs = -1;
  CLI::App *train_ranker = cli.add_subcommand("train-ranker", "train the local ranker atop an LM checkpoint");
  rk_layers.Add(train_ranker);
  train_ranker->add_option("--data", rk_data, "data directory")->required();
  train_ranker->add_option("--lm", rk_lm, "LM checkpoint")->required()->check(CLI::ExistingFile);
  train_ranker->add_option("--out", rk_out, "output directory")->required();
  train_ranker->add_option("--epochs", rk_epochs, "training epochs");
  train_ranker->add_flag("--fine-tune", rk_fine_tune, "also update the encoder and entity table");
  AddAblationFlags(train_ranker, rk_ablate_prior, rk_ablate_lexical);

  // eval
  ConfigLayers ev_layers;
  std::string ev_data, ev_lm, ev_ranker, ev_out, ev_split = "test";
  bool ev_ablate_prior = false, ev_ablate_lexical = false, ev_gold_only = false, ev_all = false;
  CLI::App *eval = cli.add_subcommand("eval", "rank held-out mentions and write a report");
  ev_layers.Add(eval);
  eval->add_option("--data", ev_data, "data directory")->required();
  eval->add_option("--lm", ev_lm, "LM checkpoint")->required()->check(CLI::ExistingFile);
  eval->add_option("--ranker", ev_ranker, "ranker checkpoint; trained on the spot when absent")
      ->check(CLI::ExistingFile);
  eval->add_option("--split", ev_split, "train, dev, test, heldout (dev+test) or all")
      ->check(CLI::IsMember({"train", "dev", "test", "heldout", "all"}));
  eval->add_option("--out", ev_out, "output directory")->required();
  AddAblationFlags(eval, ev_ablate_prior, ev_ablate_lexical);
  eval->add_flag("--gold-in-candidates-only", ev_gold_only,
                 "score only queries whose gold entity is a candidate");
  eval->add_flag("--all-ablations", ev_all, "retrain and evaluate the four ablation configurations");

  // report
  std::string rp_predictions, rp_data, rp_corpus, rp_out;
  bool rp_buckets = false;
  CLI::App *report = cli.add_subcommand("report", "accuracy breakdown of a predictions file");
  report->add_option("--predictions", rp_predictions, "predictions TSV")
      ->required()
      ->check(CLI::ExistingFile);
  report->add_option("--data", rp_data, "data directory (inventory frequencies)")->required();
  report->add_option("--corpus", rp_corpus, "corpus for per-document mention counts")
      ->check(CLI::ExistingFile);
  report->add_flag("--buckets", rp_buckets, "frequency and document-mention buckets");
  report->add_option("--out", rp_out, "also write report.jsonl and report.txt here");

  // gradcheck
  app::GradSuiteOptions gc_options;
  CLI::App *gradcheck = cli.add_subcommand("gradcheck", "finite-difference gradient suite");
  gradcheck->add_option("--configs-per-op", gc_options.configs_per_op, "configurations per operation")
      ->check(CLI::PositiveNumber);
  gradcheck->add_option("--first-seed", gc_options.first_seed, "first configuration seed");

  CLI11_PARSE(cli, argc, argv);

  try {
    if (*synth) {
      app::RunConfig config = synth_layers.Apply({});
      config.data_dir = synth_out;
      config.Validate();
      app::EnsureDirectory(synth_out);
      const app::DataSet data = app::Synthesize(config);
      app::WriteDataSet(synth_out, data);
      Finish(config, synth_out);
      std::printf("synth: %zu/%zu/%zu paragraphs (train/dev/test), %zu entities, %zu mention keys\n",
                  data.train.size(), data.dev.size(), data.test.size(), data.inventory.size(),
                  data.candidates.size());
      std::printf("synth: candidate recall of the train-built table on test %.4f\n",
                  corpus::CandidateRecall(data.test, data.candidates));
    } else if (*priors) {
      const auto paragraphs = corpus::LoadCorpus(priors_corpus);
      const corpus::CandidateTable table =
          corpus::BuildPriors(paragraphs, static_cast<std::size_t>(priors_cap));
      app::EnsureDirectory(priors_out);
      table.Save(JoinPath(priors_out, app::kCandidatesFile));
      app::RunConfig config;
      config.candidate_cap = priors_cap;
      config.data_dir = priors_corpus;
      Finish(config, priors_out);
      std::printf("priors: %zu mention keys, %zu links, candidate recall %.4f\n", table.size(),
                  corpus::CountMentions(paragraphs), corpus::CandidateRecall(paragraphs, table));
    } else if (*train_lm) {
      const app::DataSet data = app::LoadDataSet(lm_data);
      app::RunConfig config = DataDirConfig(lm_data);
      std::optional<app::Checkpoint> init;
      if (!lm_init.empty()) {
        init = app::LoadCheckpoint(lm_init);
        config = init->config;
      }
      config = lm_layers.Apply(config);
      if (!lm_config.empty()) config.lm_config = lm_config;
      if (lm_epochs >= 0) config.lm_epochs = lm_epochs;
      config.data_dir = lm_data;
      config.Validate();
      app::EnsureDirectory(lm_out);
      app::LmBundle lm = init ? app::LmFromCheckpoint(*init, data.inventory) : app::InitLm(config, data);
      app::SaveCheckpoint(JoinPath(lm_out, "init.ckpt"), app::LmToCheckpoint(config, lm));
      const auto indexed = lm.Index(data.train, data.inventory);
      const auto trace = lm::TrainLm(indexed, config.LmTrain(lm.vocab.size(), data.inventory.size()), lm.model);
      app::SaveCheckpoint(JoinPath(lm_out, "model.ckpt"), app::LmToCheckpoint(config, lm));
      WriteFileAtomic(JoinPath(lm_out, "loss_trace.tsv"), lm::FormatLossTrace(trace));
      Finish(config, lm_out);
      const lm::EpochLoss &last = trace.back();
      std::printf("train-lm: config %s, %zu epochs, final ll_w %.6f ll_e %.6f total %.6f\n",
                  config.lm_config.c_str(), trace.size(), last.ll_w, last.ll_e, last.total);
    } else if (*train_ranker) {
      const app::DataSet data = app::LoadDataSet(rk_data);
      const app::Checkpoint lm_ckpt = app::LoadCheckpoint(rk_lm);
      app::RunConfig config = rk_layers.Apply(lm_ckpt.config);
      if (rk_ablate_prior) config.use_prior = false;
      if (rk_ablate_lexical) config.use_lexical = false;
      if (rk_fine_tune) config.fine_tune = true;
      if (rk_epochs >= 0) config.ranker_epochs = rk_epochs;
      config.data_dir = rk_data;
      config.lm_checkpoint = rk_lm;
      config.Validate();
      app::EnsureDirectory(rk_out);
      app::LmBundle lm = app::LmFromCheckpoint(lm_ckpt, data.inventory);
      app::RankerRun run = app::TrainRankerStage(config, data, lm);
      app::SaveCheckpoint(JoinPath(rk_out, "ranker.ckpt"), app::RankerToCheckpoint(config, run.params));
      if (config.fine_tune) {
        app::SaveCheckpoint(JoinPath(rk_out, "lm_finetuned.ckpt"), app::LmToCheckpoint(config, lm));
      }
      WriteFileAtomic(JoinPath(rk_out, "ranker_trace.tsv"), app::FormatRankerTrace(run.report));
      Finish(config, rk_out);
      std::printf("train-ranker: %zu queries used, %zu skipped (gold not a candidate), final loss %.6f\n",
                  run.report.n_used, run.report.n_skipped,
                  run.report.epoch_loss.empty() ? 0.0 : run.report.epoch_loss.back());
    } else if (*eval) {
      const app::DataSet data = app::LoadDataSet(ev_data);
      const app::Checkpoint lm_ckpt = app::LoadCheckpoint(ev_lm);
      app::LmBundle lm = app::LmFromCheckpoint(lm_ckpt, data.inventory);
      app::RunConfig config = lm_ckpt.config;
      std::optional<app::Checkpoint> rk_ckpt;
      if (!ev_ranker.empty()) {
        rk_ckpt = app::LoadCheckpoint(ev_ranker);
        config = rk_ckpt->config;
      }
      config = ev_layers.Apply(config);
      config.data_dir = ev_data;
      config.lm_checkpoint = ev_lm;
      config.ranker_checkpoint = ev_ranker;
      app::EnsureDirectory(ev_out);
      std::string jsonl, table;
      if (ev_all) {
        if (rk_ckpt) throw ContractError("--all-ablations retrains rankers; drop --ranker");
        config.Validate();
        for (const evalrep::AblationResult &r :
             app::AblationStage(config, data, ev_split, lm, ev_gold_only)) {
          jsonl += evalrep::FormatReport(r.report, r.ablation.name);
          table += evalrep::FormatReportTable(r.report, r.ablation.name) + "\n";
          const std::string tag =
              r.ablation.name == "full" ? "full" : "no_" + r.ablation.name.substr(1);
          WriteFileAtomic(JoinPath(ev_out, "predictions_" + tag + ".tsv"),
                          ranker::FormatPredictions(r.predictions));
        }
      } else {
        ranker::RankerParams params;
        if (rk_ckpt) {
          params = app::RankerFromCheckpoint(*rk_ckpt);
          if (params.shape.use_prior == ev_ablate_prior || params.shape.use_lexical == ev_ablate_lexical) {
            throw ContractError(
                "ablation flags do not match the ranker checkpoint (trained with prior=" +
                std::string(params.shape.use_prior ? "on" : "off") +
                ", lexical=" + std::string(params.shape.use_lexical ? "on" : "off") + ")");
          }
        } else {
          config.use_prior = !ev_ablate_prior;
          config.use_lexical = !ev_ablate_lexical;
          config.Validate();
          params = app::TrainRankerStage(config, data, lm).params;
        }
        const app::EvalRun run = app::EvaluateStage(data, ev_split, lm, params, ev_gold_only);
        WriteFileAtomic(JoinPath(ev_out, "predictions.tsv"), ranker::FormatPredictions(run.predictions));
        WriteFileAtomic(JoinPath(ev_out, "prior_predictions.tsv"),
                        ranker::FormatPredictions(run.prior_predictions));
        jsonl = evalrep::FormatReport(run.report, "model") +
                evalrep::FormatReport(run.prior_report, "prior");
        table = evalrep::FormatReportTable(run.report, "model") + "\n" +
                evalrep::FormatReportTable(run.prior_report, "prior");
      }
      WriteFileAtomic(JoinPath(ev_out, "report.jsonl"), jsonl);
      WriteFileAtomic(JoinPath(ev_out, "report.txt"), table);
      Finish(config, ev_out);
      std::cout << table;
    } else if (*report) {
      const auto predictions = ranker::ParsePredictions(ReadFile(rp_predictions));
      const app::DataSet data = app::LoadDataSet(rp_data);
      const evalrep::DocMentionCounts counts =
          rp_corpus.empty() ? evalrep::CountDocMentions(predictions)
                            : evalrep::CountDocMentions(corpus::LoadCorpus(rp_corpus));
      const evalrep::EvalReport rep = evalrep::BucketReport(predictions, data.inventory, counts);
      std::string table = rp_buckets
                              ? evalrep::FormatReportTable(rep)
                              : "micro accuracy " + std::to_string(rep.micro_accuracy) + " over " +
                                    std::to_string(rep.n_queries) + " queries\n";
      if (!rp_out.empty()) {
        app::EnsureDirectory(rp_out);
        WriteFileAtomic(JoinPath(rp_out, "report.jsonl"), evalrep::FormatReport(rep));
        WriteFileAtomic(JoinPath(rp_out, "report.txt"), table);
        app::RunConfig config;
        config.data_dir = rp_data;
        Finish(config, rp_out);
      }
      std::cout << table;
    } else if (*gradcheck) {
      const app::GradSuiteReport rep = app::RunGradSuite(gc_options);
      std::cout << app::FormatGradSuite(rep);
      return rep.passed() ? 0 : 1;
    }
  } catch (const std::exception &e) {
    std::fprintf(stderr, "eelmo: %s\n", e.what());
    return 1;
  }
  return 0;
}
