#include "eelmo/corpus/vocab.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>
#include <sstream>

#include "eelmo/errors.h"
#include "eelmo/fileio.h"

namespace eelmo::corpus {

std::vector<std::string> SplitWhitespace(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

Vocabulary::Vocabulary() {
  Add(kBosToken);
  Add(kEosToken);
  Add(kUnkToken);
}

WordId Vocabulary::Add(const std::string &word) {
  auto it = ids_.find(word);
  if (it != ids_.end()) return it->second;
  const WordId id{static_cast<std::int32_t>(words_.size())};
  words_.push_back(word);
  ids_.emplace(word, id);
  return id;
}

Vocabulary Vocabulary::Build(const std::vector<Paragraph> &paragraphs,
                             const std::vector<std::string> &extra) {
  std::set<std::string> distinct(extra.begin(), extra.end());
  for (const Paragraph &p : paragraphs) {
    distinct.insert(p.tokens.begin(), p.tokens.end());
  }
  Vocabulary vocab;
  for (const std::string &w : distinct) vocab.Add(w);
  return vocab;
}

Vocabulary Vocabulary::FromWords(const std::vector<std::string> &words) {
  if (words.size() < 3 || words[0] != kBosToken || words[1] != kEosToken ||
      words[2] != kUnkToken) {
    throw FormatError("vocabulary must start with the sentinel tokens");
  }
  Vocabulary vocab;
  for (std::size_t i = 3; i < words.size(); ++i) {
    if (vocab.Contains(words[i])) {
      throw FormatError("duplicate vocabulary entry '" + words[i] + "'");
    }
    vocab.Add(words[i]);
  }
  return vocab;
}

WordId Vocabulary::Lookup(std::string_view word) const {
  auto it = ids_.find(std::string(word));
  return it == ids_.end() ? kUnk : it->second;
}

bool Vocabulary::Contains(std::string_view word) const {
  return ids_.count(std::string(word)) > 0;
}

const std::string &Vocabulary::Word(WordId id) const {
  const std::size_t i = Index(id);
  if (i >= words_.size()) {
    throw VocabularyError("word id " + std::to_string(i) + " outside [0," +
                          std::to_string(words_.size()) + ")");
  }
  return words_[i];
}

CharAlphabet::CharAlphabet() { std::fill(std::begin(ids_), std::end(ids_), kUnk); }

void CharAlphabet::Add(unsigned char byte) {
  if (ids_[byte] != kUnk) return;
  ids_[byte] = static_cast<std::int32_t>(kReserved + bytes_.size());
  bytes_.push_back(byte);
}

CharAlphabet CharAlphabet::Build(const std::vector<Paragraph> &paragraphs,
                                 const std::vector<std::string> &extra) {
  std::set<unsigned char> seen;
  auto scan = [&seen](const std::string &token) {
    for (char c : token) seen.insert(static_cast<unsigned char>(c));
  };
  for (const std::string &t : extra) scan(t);
  for (const Paragraph &p : paragraphs) {
    for (const std::string &t : p.tokens) scan(t);
  }
  CharAlphabet alphabet;
  for (unsigned char b : seen) alphabet.Add(b);
  return alphabet;
}

CharAlphabet CharAlphabet::FromBytes(const std::vector<int> &bytes) {
  CharAlphabet alphabet;
  for (int b : bytes) {
    if (b < 0 || b > 255) throw FormatError("alphabet byte out of range");
    if (alphabet.ids_[b] != kUnk) throw FormatError("duplicate alphabet byte");
    alphabet.Add(static_cast<unsigned char>(b));
  }
  return alphabet;
}

std::int32_t CharAlphabet::Lookup(unsigned char byte) const { return ids_[byte]; }

std::vector<std::int32_t> CharAlphabet::Encode(std::string_view token,
                                               std::size_t max_chars) const {
  if (max_chars < 3) throw ParameterError("max_chars must be at least 3");
  std::vector<std::int32_t> ids(max_chars, kPad);
  ids[0] = kBow;
  const std::size_t n = std::min(token.size(), max_chars - 2);
  for (std::size_t i = 0; i < n; ++i) {
    ids[i + 1] = Lookup(static_cast<unsigned char>(token[i]));
  }
  ids[n + 1] = kEow;
  return ids;
}

std::vector<std::int32_t> CharAlphabet::EncodeSentinel(
    WordId sentinel, std::size_t max_chars) const {
  if (max_chars < 3) throw ParameterError("max_chars must be at least 3");
  if (sentinel != Vocabulary::kBos && sentinel != Vocabulary::kEos) {
    throw ParameterError("only BOS and EOS have sentinel encodings");
  }
  std::vector<std::int32_t> ids(max_chars, kPad);
  ids[0] = kBow;
  ids[1] = sentinel == Vocabulary::kBos ? kBosChar : kEosChar;
  ids[2] = kEow;
  return ids;
}

EntityId EntityInventory::Add(const std::string &key, const std::string &title,
                              std::int64_t frequency) {
  if (key.empty()) throw ValidationError("empty entity key");
  if (ids_.count(key)) throw ValidationError("duplicate entity key '" + key + "'");
  if (SplitWhitespace(title).empty()) {
    throw ValidationError("entity '" + key + "' has an empty title");
  }
  if (frequency < 0) {
    throw ValidationError("entity '" + key + "' has negative frequency");
  }
  const EntityId id{static_cast<std::int32_t>(entries_.size())};
  entries_.push_back({key, title, {}, frequency});
  ids_.emplace(key, id);
  return id;
}

std::optional<EntityId> EntityInventory::Find(std::string_view key) const {
  auto it = ids_.find(std::string(key));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

EntityId EntityInventory::Id(std::string_view key) const {
  auto id = Find(key);
  if (!id) throw ValidationError("unknown entity '" + std::string(key) + "'");
  return *id;
}

const EntityEntry &EntityInventory::entry(EntityId id) const {
  const std::size_t i = Index(id);
  if (i >= entries_.size()) {
    throw VocabularyError("entity id " + std::to_string(i) + " outside [0," +
                          std::to_string(entries_.size()) + ")");
  }
  return entries_[i];
}

void EntityInventory::ResolveTitles(const Vocabulary &vocab) {
  for (EntityEntry &e : entries_) {
    e.title_tokens.clear();
    for (const std::string &t : SplitWhitespace(e.title)) {
      e.title_tokens.push_back(vocab.Lookup(t));
    }
  }
}

void EntityInventory::RecountFrequencies(const std::vector<Paragraph> &paragraphs) {
  for (EntityEntry &e : entries_) e.frequency = 0;
  for (const Paragraph &p : paragraphs) {
    for (const Mention &m : p.mentions) {
      auto id = Find(m.entity);
      if (id) ++entries_[Index(*id)].frequency;
    }
  }
}

EntityInventory EntityInventory::Parse(const std::string &text) {
  EntityInventory inventory;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = "entity file line " + std::to_string(line_no);
    const std::size_t a = line.find('\t');
    const std::size_t b = a == std::string::npos ? a : line.find('\t', a + 1);
    if (b == std::string::npos || line.find('\t', b + 1) != std::string::npos) {
      throw ParseError(where + ": expected 3 tab-separated fields");
    }
    const std::string freq = line.substr(b + 1);
    std::int64_t frequency = 0;
    auto [ptr, ec] = std::from_chars(freq.data(), freq.data() + freq.size(), frequency);
    if (ec != std::errc() || ptr != freq.data() + freq.size()) {
      throw ParseError(where + ": bad frequency '" + freq + "'");
    }
    try {
      inventory.Add(line.substr(0, a), line.substr(a + 1, b - a - 1), frequency);
    } catch (const ValidationError &e) {
      throw ValidationError(where + ": " + e.what());
    }
  }
  return inventory;
}

EntityInventory EntityInventory::Load(const std::string &path) {
  return Parse(ReadFile(path));
}

std::string EntityInventory::Format() const {
  std::string out;
  for (const EntityEntry &e : entries_) {
    out += e.key + "\t" + e.title + "\t" + std::to_string(e.frequency) + "\n";
  }
  return out;
}

void EntityInventory::Save(const std::string &path) const {
  WriteFileAtomic(path, Format());
}

}  // namespace eelmo::corpus
