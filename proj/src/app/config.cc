#include "eelmo/app/config.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "eelmo/errors.h"
#include "eelmo/fileio.h"

namespace eelmo::app {

namespace {

std::string Trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T ParseNumber(const std::string &key, const std::string &value) {
  T out{};
  const char *end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw FormatError("config key '" + key + "': cannot parse '" + value + "'");
  }
  return out;
}

std::string FormatDouble(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);  // shortest round trip
  return std::string(buf, ptr);
}

std::vector<std::size_t> ParseWidths(const std::string &text) {
  std::vector<std::size_t> out;
  std::istringstream in(text);
  for (std::string part; std::getline(in, part, ',');) {
    out.push_back(ParseNumber<std::size_t>("char_widths", Trim(part)));
  }
  if (out.empty()) throw ParameterError("char_widths is empty");
  return out;
}

}  // namespace

std::vector<std::pair<std::string, RunConfig::Field>> RunConfig::Fields() {
  return {
      {"seed", &seed},
      {"synth_entities", &synth_entities},
      {"synth_paragraphs", &synth_paragraphs},
      {"synth_ambiguity", &synth_ambiguity},
      {"synth_vocab", &synth_vocab},
      {"synth_min_tokens", &synth_min_tokens},
      {"synth_max_tokens", &synth_max_tokens},
      {"synth_max_mentions", &synth_max_mentions},
      {"synth_topic_rate", &synth_topic_rate},
      {"split_train", &split_train},
      {"split_dev", &split_dev},
      {"split_test", &split_test},
      {"candidate_cap", &candidate_cap},
      {"max_chars", &max_chars},
      {"d_char", &d_char},
      {"char_widths", &char_widths},
      {"filters_per_width", &filters_per_width},
      {"d_tok", &d_tok},
      {"d_h", &d_h},
      {"layers", &layers},
      {"residual", &residual},
      {"lm_config", &lm_config},
      {"lm_lr", &lm_lr},
      {"lm_epochs", &lm_epochs},
      {"n_negatives_words", &n_negatives_words},
      {"n_negatives_entities", &n_negatives_entities},
      {"entity_scale", &entity_scale},
      {"lm_batch", &lm_batch},
      {"prior_bins", &prior_bins},
      {"lexical_bins", &lexical_bins},
      {"ranker_hidden", &ranker_hidden},
      {"dropout", &dropout},
      {"dropout_input", &dropout_input},
      {"ranker_lr", &ranker_lr},
      {"ranker_epochs", &ranker_epochs},
      {"fine_tune", &fine_tune},
      {"use_prior", &use_prior},
      {"use_lexical", &use_lexical},
      {"data_dir", &data_dir},
      {"lm_checkpoint", &lm_checkpoint},
      {"ranker_checkpoint", &ranker_checkpoint},
      {"out_dir", &out_dir},
  };
}

void RunConfig::Set(const std::string &key, const std::string &value) {
  for (auto &[name, field] : Fields()) {
    if (name != key) continue;
    std::visit(
        [&](auto *ptr) {
          using T = std::remove_pointer_t<decltype(ptr)>;
          if constexpr (std::is_same_v<T, bool>) {
            if (value == "true" || value == "1") {
              *ptr = true;
            } else if (value == "false" || value == "0") {
              *ptr = false;
            } else {
              throw FormatError("config key '" + key + "': expected true or false, got '" +
                                value + "'");
            }
          } else if constexpr (std::is_same_v<T, std::string>) {
            *ptr = value;
          } else {
            *ptr = ParseNumber<T>(key, value);
          }
        },
        field);
    return;
  }
  throw FormatError("unknown config key '" + key + "'");
}

std::string RunConfig::Get(const std::string &key) const {
  for (auto &[name, field] : const_cast<RunConfig *>(this)->Fields()) {
    if (name != key) continue;
    return std::visit(
        [](auto *ptr) -> std::string {
          using T = std::remove_pointer_t<decltype(ptr)>;
          if constexpr (std::is_same_v<T, bool>) {
            return *ptr ? "true" : "false";
          } else if constexpr (std::is_same_v<T, std::string>) {
            return *ptr;
          } else if constexpr (std::is_same_v<T, double>) {
            return FormatDouble(*ptr);
          } else {
            return std::to_string(*ptr);
          }
        },
        field);
  }
  throw FormatError("unknown config key '" + key + "'");
}

void RunConfig::ApplyPaperDims() {
  d_tok = 512;
  d_h = 512;
  n_negatives_words = 8192;
  n_negatives_entities = 8192;
}

void RunConfig::Validate() const {
  auto positive = [](std::int64_t v, const char *name) {
    if (v <= 0) throw ParameterError(std::string(name) + " must be positive");
  };
  positive(max_chars, "max_chars");
  positive(d_char, "d_char");
  positive(filters_per_width, "filters_per_width");
  positive(d_tok, "d_tok");
  positive(d_h, "d_h");
  positive(layers, "layers");
  positive(lm_batch, "lm_batch");
  positive(prior_bins, "prior_bins");
  positive(lexical_bins, "lexical_bins");
  positive(synth_entities, "synth_entities");
  positive(synth_paragraphs, "synth_paragraphs");
  positive(synth_ambiguity, "synth_ambiguity");
  positive(synth_vocab, "synth_vocab");
  positive(synth_min_tokens, "synth_min_tokens");
  positive(synth_max_mentions, "synth_max_mentions");
  if (synth_max_tokens < synth_min_tokens) {
    throw ParameterError("synth_max_tokens must be at least synth_min_tokens");
  }
  if (!(synth_topic_rate >= 0.0 && synth_topic_rate <= 1.0)) {
    throw ParameterError("synth_topic_rate must lie in [0, 1]");
  }
  if (!(split_train >= 0.0 && split_dev >= 0.0 && split_test >= 0.0) ||
      std::abs(split_train + split_dev + split_test - 1.0) > 1e-9) {
    throw ParameterError("split ratios must be non-negative and sum to 1");
  }
  if (lm_epochs < 0 || ranker_epochs < 0) throw ParameterError("epochs must be non-negative");
  if (n_negatives_words < 0 || n_negatives_entities < 0 || ranker_hidden < 0 ||
      candidate_cap < 0) {
    throw ParameterError("negative counts are not allowed");
  }
  if (!(lm_lr > 0.0) || !(ranker_lr > 0.0)) throw ParameterError("learning rates must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ParameterError("dropout must lie in [0, 1)");
  lm::ParseLmConfig(lm_config);
  for (std::size_t w : ParseWidths(char_widths)) {
    if (w == 0 || w > static_cast<std::size_t>(max_chars)) {
      throw ParameterError("char width " + std::to_string(w) + " outside [1, max_chars]");
    }
  }
}

std::string RunConfig::ToText() const {
  std::string out;
  for (auto &[name, field] : const_cast<RunConfig *>(this)->Fields()) {
    out += name + "=" + Get(name) + "\n";
  }
  return out;
}

RunConfig RunConfig::FromText(const std::string &text) {
  RunConfig config;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError("line " + std::to_string(line_no) + ": expected key=value");
    }
    try {
      config.Set(Trim(line.substr(0, eq)), Trim(line.substr(eq + 1)));
    } catch (const FormatError &e) {
      throw FormatError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return config;
}

RunConfig RunConfig::Load(const std::string &path) { return FromText(ReadFile(path)); }

void RunConfig::Save(const std::string &path) const { WriteFileAtomic(path, ToText()); }

corpus::SynthSpec RunConfig::Synth() const {
  corpus::SynthSpec s;
  s.n_entities = static_cast<std::size_t>(synth_entities);
  s.n_paragraphs = static_cast<std::size_t>(synth_paragraphs);
  s.ambiguity = static_cast<std::size_t>(synth_ambiguity);
  s.vocab_size = static_cast<std::size_t>(synth_vocab);
  s.min_tokens = static_cast<std::size_t>(synth_min_tokens);
  s.max_tokens = static_cast<std::size_t>(synth_max_tokens);
  s.max_mentions = static_cast<std::size_t>(synth_max_mentions);
  s.topic_rate = synth_topic_rate;
  s.seed = seed;
  return s;
}

lm::LmShape RunConfig::LmShapeFor(std::size_t alphabet, std::size_t vocab,
                                  std::size_t entities) const {
  lm::LmShape shape;
  net::CharCnnShape &c = shape.encoder.char_cnn;
  c.alphabet = alphabet;
  c.d_char = static_cast<std::size_t>(d_char);
  c.widths = ParseWidths(char_widths);
  c.filters_per_width = static_cast<std::size_t>(filters_per_width);
  c.max_chars = static_cast<std::size_t>(max_chars);
  c.d_tok = static_cast<std::size_t>(d_tok);
  shape.encoder.d_h = static_cast<std::size_t>(d_h);
  shape.encoder.layers = static_cast<std::size_t>(layers);
  shape.encoder.residual = residual;
  shape.vocab = vocab;
  shape.entities = entities;
  return shape;
}

lm::TrainSpec RunConfig::LmTrain(std::size_t vocab, std::size_t entities) const {
  lm::TrainSpec t;
  t.config = lm::ParseLmConfig(lm_config);
  t.lr = lm_lr;
  t.epochs = static_cast<std::size_t>(lm_epochs);
  // Upper bounds; 0 keeps the trainer's automatic choice.
  auto clamp = [](std::int64_t n, std::size_t space) {
    const auto v = static_cast<std::size_t>(n);
    return space >= 2 ? std::min(v, space - 1) : v;
  };
  t.n_negatives_words = clamp(n_negatives_words, vocab);
  t.n_negatives_entities = clamp(n_negatives_entities, entities);
  t.entity_scale = entity_scale;
  t.batch = static_cast<std::size_t>(lm_batch);
  t.seed = seed;
  return t;
}

ranker::RankerShape RunConfig::Ranker() const {
  ranker::RankerShape s;
  s.prior_bins = static_cast<std::size_t>(prior_bins);
  s.lexical_bins = static_cast<std::size_t>(lexical_bins);
  s.use_prior = use_prior;
  s.use_lexical = use_lexical;
  s.d_context = static_cast<std::size_t>(d_h);
  s.d_entity = static_cast<std::size_t>(d_h);
  s.hidden = static_cast<std::size_t>(ranker_hidden);
  s.dropout = dropout;
  s.dropout_input = dropout_input;
  return s;
}

ranker::RankerTrainSpec RunConfig::RankerTrain() const {
  ranker::RankerTrainSpec t;
  t.lr = ranker_lr;
  t.epochs = static_cast<std::size_t>(ranker_epochs);
  t.seed = seed;
  t.fine_tune = fine_tune;
  return t;
}

}  // namespace eelmo::app
