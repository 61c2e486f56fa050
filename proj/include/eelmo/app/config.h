#ifndef EELMO_APP_CONFIG_H_
#define EELMO_APP_CONFIG_H_

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "eelmo/corpus/synth.h"
#include "eelmo/lm/model.h"
#include "eelmo/lm/train.h"
#include "eelmo/ranker/train.h"

namespace eelmo::app {

// Every tunable of a run. Serialized as `key=value` lines; `#` starts a
// comment. Defaults are desk scale; ApplyPaperDims() switches to 512-wide
// states and 8192 negatives.
struct RunConfig {
  std::uint64_t seed = 1;

  // synthetic corpus
  std::int64_t synth_entities = 25;
  std::int64_t synth_paragraphs = 200;
  std::int64_t synth_ambiguity = 2;
  std::int64_t synth_vocab = 300;
  std::int64_t synth_min_tokens = 8;
  std::int64_t synth_max_tokens = 14;
  std::int64_t synth_max_mentions = 2;
  double synth_topic_rate = 0.7;
  double split_train = 0.8;
  double split_dev = 0.1;
  double split_test = 0.1;
  std::int64_t candidate_cap = 30;

  // encoder
  std::int64_t max_chars = 16;
  std::int64_t d_char = 16;
  std::string char_widths = "1,2,3";
  std::int64_t filters_per_width = 32;
  std::int64_t d_tok = 32;
  std::int64_t d_h = 32;
  std::int64_t layers = 2;
  bool residual = false;

  // language model
  std::string lm_config = "b";
  double lm_lr = 0.1;
  std::int64_t lm_epochs = 10;
  std::int64_t n_negatives_words = 64;
  std::int64_t n_negatives_entities = 64;
  double entity_scale = 1.0;
  std::int64_t lm_batch = 1;

  // ranker
  std::int64_t prior_bins = 15;
  std::int64_t lexical_bins = 10;
  std::int64_t ranker_hidden = 0;
  double dropout = 0.7;
  bool dropout_input = false;
  double ranker_lr = 1e-3;
  std::int64_t ranker_epochs = 10;
  bool fine_tune = false;
  bool use_prior = true;
  bool use_lexical = true;

  // paths, informational
  std::string data_dir;
  std::string lm_checkpoint;
  std::string ranker_checkpoint;
  std::string out_dir;

  using Field = std::variant<bool *, std::int64_t *, std::uint64_t *, double *, std::string *>;
  std::vector<std::pair<std::string, Field>> Fields();

  // Throws FormatError for unknown keys or malformed values.
  void Set(const std::string &key, const std::string &value);
  std::string Get(const std::string &key) const;
  void ApplyPaperDims();
  // Range checks; throws ParameterError.
  void Validate() const;

  std::string ToText() const;
  static RunConfig FromText(const std::string &text);
  static RunConfig Load(const std::string &path);
  void Save(const std::string &path) const;

  bool operator==(const RunConfig &) const = default;

  corpus::SynthSpec Synth() const;
  lm::LmShape LmShapeFor(std::size_t alphabet, std::size_t vocab, std::size_t entities) const;
  // Negative counts are capped at one less than the output space.
  lm::TrainSpec LmTrain(std::size_t vocab, std::size_t entities) const;
  ranker::RankerShape Ranker() const;
  ranker::RankerTrainSpec RankerTrain() const;
};

inline constexpr const char *kRunConfigFile = "run_config.cfg";

}  // namespace eelmo::app

#endif  // EELMO_APP_CONFIG_H_
