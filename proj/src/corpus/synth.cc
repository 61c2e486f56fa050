#include "eelmo/corpus/synth.h"

#include <algorithm>
#include <cstdio>
#include <set>

#include "eelmo/errors.h"
#include "eelmo/netcore/rng.h"

namespace eelmo::corpus {

namespace {

constexpr std::string_view kOnsets = "bdfgklmnprstvz";
constexpr std::string_view kVowels = "aeiou";

std::string PseudoWord(net::SeededRng &rng) {
  const std::size_t syllables = 2 + rng.Below(2);
  std::string w;
  for (std::size_t s = 0; s < syllables; ++s) {
    w += kOnsets[rng.Below(kOnsets.size())];
    w += kVowels[rng.Below(kVowels.size())];
  }
  return w;
}

std::size_t Draw(const std::vector<double> &cumulative, net::SeededRng &rng) {
  const double u = rng.Uniform() * cumulative.back();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  return std::min<std::size_t>(it - cumulative.begin(), cumulative.size() - 1);
}

}  // namespace

SynthCorpus SynthesizeCorpus(const SynthSpec &spec) {
  if (spec.n_entities == 0 || spec.n_paragraphs == 0 || spec.vocab_size == 0 ||
      spec.ambiguity == 0 || spec.max_mentions == 0 ||
      spec.max_paragraphs_per_doc == 0 || spec.min_tokens == 0) {
    throw ParameterError("synthetic corpus extents must be positive");
  }
  if (spec.ambiguity > spec.n_entities) {
    throw ParameterError("ambiguity exceeds the number of entities");
  }
  if (spec.max_tokens < spec.min_tokens) {
    throw ParameterError("max_tokens < min_tokens");
  }
  if (!(spec.topic_rate >= 0.0 && spec.topic_rate <= 1.0)) {
    throw ParameterError("topic_rate must lie in [0, 1]");
  }
  net::SeededRng rng(spec.seed);
  const std::size_t n = spec.n_entities;
  const std::size_t groups = (n + spec.ambiguity - 1) / spec.ambiguity;

  std::vector<std::size_t> alias_length(groups);
  std::size_t alias_words = 0;
  for (std::size_t g = 0; g < groups; ++g) {
    alias_length[g] = rng.Below(3) == 0 ? 2 : 1;
    alias_words += alias_length[g];
  }
  if (spec.vocab_size < alias_words + 1 + n) {
    throw ParameterError("vocab_size " + std::to_string(spec.vocab_size) +
                         " too small: need at least " +
                         std::to_string(alias_words + 1 + n));
  }
  const std::size_t background_words =
      std::max<std::size_t>(1, (spec.vocab_size - alias_words) / 5);
  const std::size_t per_topic = (spec.vocab_size - alias_words - background_words) / n;
  if (per_topic == 0) throw ParameterError("vocab_size too small for topics");

  std::set<std::string> used;
  auto fresh = [&]() {
    for (;;) {
      std::string w = PseudoWord(rng);
      if (used.insert(w).second) return w;
    }
  };

  SynthCorpus out;
  std::vector<std::string> group_alias(groups);
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t k = 0; k < alias_length[g]; ++k) {
      group_alias[g] += (k ? " " : "") + fresh();
    }
  }
  out.topic_words.resize(n);
  for (std::size_t e = 0; e < n; ++e) {
    for (std::size_t k = 0; k < per_topic; ++k) out.topic_words[e].push_back(fresh());
  }
  std::vector<std::string> background;
  while (used.size() < spec.vocab_size) background.push_back(fresh());

  const int width = n > 100 ? 4 : (n > 10 ? 2 : 1);
  std::vector<std::string> keys(n);
  std::vector<double> cumulative(n);
  double acc = 0.0;
  for (std::size_t e = 0; e < n; ++e) {
    char key[32];
    std::snprintf(key, sizeof(key), "E%0*zu", width, e);
    keys[e] = key;
    out.aliases.push_back(group_alias[e / spec.ambiguity]);
    acc += rng.Uniform(1.0, 3.0);
    cumulative[e] = acc;
  }

  std::vector<std::size_t> links(n, 0);
  std::size_t doc = 0, left_in_doc = 0;
  for (std::size_t i = 0; i < spec.n_paragraphs; ++i) {
    if (left_in_doc == 0) {
      left_in_doc = 1 + rng.Below(spec.max_paragraphs_per_doc);
      ++doc;
    }
    --left_in_doc;
    const std::size_t e = Draw(cumulative, rng);
    const std::vector<std::string> alias = SplitWhitespace(out.aliases[e]);
    const std::size_t fillers =
        spec.min_tokens + rng.Below(spec.max_tokens - spec.min_tokens + 1);
    const std::size_t n_mentions =
        std::min(1 + rng.Below(spec.max_mentions), fillers + 1);
    // Mentions go before filler slots chosen without replacement.
    std::vector<std::size_t> slots =
        rng.SampleWithoutReplacement(fillers + 1, n_mentions, fillers + 1);
    std::sort(slots.begin(), slots.end());

    Paragraph p;
    char doc_id[32];
    std::snprintf(doc_id, sizeof(doc_id), "doc%04zu", doc);
    p.doc_id = doc_id;
    std::size_t next = 0;
    for (std::size_t f = 0; f <= fillers; ++f) {
      if (next < slots.size() && slots[next] == f) {
        Mention m;
        m.start = static_cast<int>(p.tokens.size()) + 1;
        p.tokens.insert(p.tokens.end(), alias.begin(), alias.end());
        m.end = static_cast<int>(p.tokens.size());
        m.entity = keys[e];
        p.mentions.push_back(std::move(m));
        ++links[e];
        ++next;
      }
      if (f == fillers) break;
      const auto &topic = out.topic_words[e];
      if (rng.Uniform() < spec.topic_rate) {
        p.tokens.push_back(topic[rng.Below(topic.size())]);
      } else {
        p.tokens.push_back(background[rng.Below(background.size())]);
      }
    }
    Validate(p);
    out.paragraphs.push_back(std::move(p));
  }

  std::vector<std::string> all_words(used.begin(), used.end());
  out.vocab = Vocabulary::Build({}, all_words);
  for (std::size_t e = 0; e < n; ++e) {
    out.inventory.Add(keys[e], out.aliases[e] + " " + out.topic_words[e][0],
                      static_cast<std::int64_t>(links[e]));
  }
  out.inventory.ResolveTitles(out.vocab);
  return out;
}

}  // namespace eelmo::corpus
