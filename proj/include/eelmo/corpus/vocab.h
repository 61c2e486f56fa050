#ifndef EELMO_CORPUS_VOCAB_H_
#define EELMO_CORPUS_VOCAB_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "eelmo/corpus/corpus.h"

namespace eelmo::corpus {

enum class WordId : std::int32_t {};
enum class EntityId : std::int32_t {};

inline std::size_t Index(WordId id) { return static_cast<std::size_t>(id); }
inline std::size_t Index(EntityId id) { return static_cast<std::size_t>(id); }

class Vocabulary {
 public:
  static constexpr WordId kBos{0};
  static constexpr WordId kEos{1};
  static constexpr WordId kUnk{2};
  static constexpr const char *kBosToken = "<s>";
  static constexpr const char *kEosToken = "</s>";
  static constexpr const char *kUnkToken = "<unk>";

  Vocabulary();

  // Sentinels first, then the distinct tokens of `paragraphs` and `extra` in
  // byte order.
  static Vocabulary Build(const std::vector<Paragraph> &paragraphs,
                          const std::vector<std::string> &extra = {});
  // Inverse of words(). The first three entries must be the sentinels.
  static Vocabulary FromWords(const std::vector<std::string> &words);

  // Unseen words map to kUnk.
  WordId Lookup(std::string_view word) const;
  bool Contains(std::string_view word) const;
  const std::string &Word(WordId id) const;
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string> &words() const { return words_; }

 private:
  WordId Add(const std::string &word);

  std::vector<std::string> words_;
  std::unordered_map<std::string, WordId> ids_;
};

// Byte-level alphabet for the character CNN. Each token is encoded as
// [bow, bytes..., eow] padded to max_chars; long tokens keep their first
// max_chars - 2 bytes.
class CharAlphabet {
 public:
  static constexpr std::int32_t kPad = 0;
  static constexpr std::int32_t kUnk = 1;
  static constexpr std::int32_t kBow = 2;
  static constexpr std::int32_t kEow = 3;
  static constexpr std::int32_t kBosChar = 4;
  static constexpr std::int32_t kEosChar = 5;
  static constexpr std::int32_t kReserved = 6;

  CharAlphabet();

  static CharAlphabet Build(const std::vector<Paragraph> &paragraphs,
                            const std::vector<std::string> &extra = {});
  static CharAlphabet FromBytes(const std::vector<int> &bytes);

  std::int32_t Lookup(unsigned char byte) const;
  std::vector<std::int32_t> Encode(std::string_view token,
                                   std::size_t max_chars) const;
  // Encoding of the BOS / EOS pseudo-tokens.
  std::vector<std::int32_t> EncodeSentinel(WordId sentinel,
                                           std::size_t max_chars) const;
  std::size_t size() const { return kReserved + bytes_.size(); }
  const std::vector<int> &bytes() const { return bytes_; }

 private:
  void Add(unsigned char byte);

  std::vector<int> bytes_;
  std::int32_t ids_[256];
};

struct EntityEntry {
  std::string key;
  std::string title;
  std::vector<WordId> title_tokens;
  std::int64_t frequency = 0;
};

// Dense id <-> knowledge-base key mapping with titles and link counts.
class EntityInventory {
 public:
  // Throws ValidationError on a duplicate key, empty title or negative
  // frequency.
  EntityId Add(const std::string &key, const std::string &title,
               std::int64_t frequency = 0);

  std::optional<EntityId> Find(std::string_view key) const;
  // Throws ValidationError for unknown keys.
  EntityId Id(std::string_view key) const;
  const EntityEntry &entry(EntityId id) const;
  const std::string &key(EntityId id) const { return entry(id).key; }
  std::size_t size() const { return entries_.size(); }
  const std::vector<EntityEntry> &entries() const { return entries_; }

  // Tokenizes titles on whitespace and looks each token up in `vocab`.
  void ResolveTitles(const Vocabulary &vocab);
  // frequency := number of gold links in `paragraphs`.
  void RecountFrequencies(const std::vector<Paragraph> &paragraphs);

  // TSV: key<TAB>title<TAB>frequency.
  static EntityInventory Parse(const std::string &text);
  static EntityInventory Load(const std::string &path);
  std::string Format() const;
  void Save(const std::string &path) const;

 private:
  std::vector<EntityEntry> entries_;
  std::unordered_map<std::string, EntityId> ids_;
};

// Whitespace split, empty fields dropped.
std::vector<std::string> SplitWhitespace(std::string_view text);

}  // namespace eelmo::corpus

#endif  // EELMO_CORPUS_VOCAB_H_
