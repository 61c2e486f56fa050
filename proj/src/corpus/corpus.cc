#include "eelmo/corpus/corpus.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "eelmo/fileio.h"
#include "eelmo/errors.h"
#include "eelmo/netcore/rng.h"
#include "json.hpp"

namespace eelmo::corpus {

using json = nlohmann::json;

void Validate(Paragraph &p) {
  if (p.tokens.empty()) {
    throw ValidationError("paragraph '" + p.doc_id + "' has no tokens");
  }
  const int t = p.length();
  std::sort(p.mentions.begin(), p.mentions.end(),
            [](const Mention &a, const Mention &b) {
              return a.start < b.start || (a.start == b.start && a.end < b.end);
            });
  int last_end = 0;
  for (Mention &m : p.mentions) {
    if (m.start < 1 || m.end < m.start || m.end > t) {
      throw ValidationError("mention span (" + std::to_string(m.start) + "," +
                            std::to_string(m.end) + ") outside [1," +
                            std::to_string(t) + "]");
    }
    if (m.start <= last_end) {
      throw ValidationError("overlapping mentions ending at " +
                            std::to_string(last_end) + " and starting at " +
                            std::to_string(m.start));
    }
    if (m.entity.empty()) throw ValidationError("mention without entity");
    last_end = m.end;
    m.surface.clear();
    for (int k = m.start; k <= m.end; ++k) {
      if (k > m.start) m.surface += ' ';
      m.surface += p.tokens[static_cast<std::size_t>(k - 1)];
    }
  }
}

namespace {

Paragraph ParseRecord(const std::string &line) {
  json record = json::parse(line);
  if (!record.is_object()) throw ParseError("record is not an object");
  Paragraph p;
  p.doc_id = record.at("doc_id").get<std::string>();
  p.tokens = record.at("tokens").get<std::vector<std::string>>();
  if (record.contains("mentions")) {
    for (const json &m : record.at("mentions")) {
      Mention mention;
      mention.start = m.at("start").get<int>();
      mention.end = m.at("end").get<int>();
      mention.entity = m.at("entity").get<std::string>();
      p.mentions.push_back(std::move(mention));
    }
  }
  return p;
}

}  // namespace

std::vector<Paragraph> ParseCorpus(const std::string &text) {
  std::vector<Paragraph> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Paragraph p;
    try {
      p = ParseRecord(line);
    } catch (const json::exception &e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const ParseError &e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
    try {
      Validate(p);
    } catch (const ValidationError &e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " +
                            e.what());
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<Paragraph> LoadCorpus(const std::string &path) {
  return ParseCorpus(ReadFile(path));
}

std::string FormatParagraph(const Paragraph &p) {
  json record;
  record["doc_id"] = p.doc_id;
  record["tokens"] = p.tokens;
  json mentions = json::array();
  for (const Mention &m : p.mentions) {
    mentions.push_back({{"start", m.start}, {"end", m.end}, {"entity", m.entity}});
  }
  record["mentions"] = std::move(mentions);
  return record.dump();
}

void WriteCorpus(const std::string &path,
                 const std::vector<Paragraph> &paragraphs) {
  std::string text;
  for (const Paragraph &p : paragraphs) text += FormatParagraph(p) + "\n";
  WriteFileAtomic(path, text);
}

Split SplitByDocument(const std::vector<Paragraph> &paragraphs,
                      std::array<double, 3> ratios, std::uint64_t seed) {
  double sum = 0.0;
  for (double r : ratios) {
    if (r < 0.0) throw ParameterError("split ratios must be non-negative");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ParameterError("split ratios must sum to 1, got " +
                         std::to_string(sum));
  }
  std::vector<std::string> docs;
  std::map<std::string, bool> seen;
  for (const Paragraph &p : paragraphs) {
    if (seen.emplace(p.doc_id, true).second) docs.push_back(p.doc_id);
  }
  net::SeededRng rng(seed);
  rng.Shuffle(docs);
  const std::size_t n = docs.size();
  auto rounded = [n](double r) {
    return static_cast<std::size_t>(std::llround(r * static_cast<double>(n)));
  };
  const std::size_t n_train = std::min(n, rounded(ratios[0]));
  const std::size_t n_dev = std::min(n - n_train, rounded(ratios[1]));
  std::map<std::string, int> part;
  for (std::size_t i = 0; i < n; ++i) {
    part[docs[i]] = i < n_train ? 0 : (i < n_train + n_dev ? 1 : 2);
  }
  Split split;
  for (const Paragraph &p : paragraphs) {
    switch (part[p.doc_id]) {
      case 0: split.train.push_back(p); break;
      case 1: split.dev.push_back(p); break;
      default: split.test.push_back(p); break;
    }
  }
  return split;
}

std::size_t CountMentions(const std::vector<Paragraph> &paragraphs) {
  std::size_t n = 0;
  for (const Paragraph &p : paragraphs) n += p.mentions.size();
  return n;
}

}  // namespace eelmo::corpus
