#include "eelmo/corpus/priors.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "eelmo/errors.h"
#include "eelmo/fileio.h"

namespace eelmo::corpus {

std::string NormalizeMention(std::string_view mention) {
  std::string out;
  bool pending_space = false;
  for (char c : mention) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isspace(u)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>(std::tolower(u));
  }
  return out;
}

namespace {

bool Ranked(const Candidate &a, const Candidate &b) {
  return a.prior > b.prior || (a.prior == b.prior && a.entity < b.entity);
}

}  // namespace

void CandidateTable::Set(const std::string &mention,
                         std::vector<Candidate> candidates) {
  std::set<std::string> seen;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Candidate &c = candidates[i];
    if (!(c.prior > 0.0 && c.prior <= 1.0 + 1e-9)) {
      throw ValidationError("prior " + std::to_string(c.prior) + " for '" +
                            mention + "' outside (0, 1]");
    }
    if (!seen.insert(c.entity).second) {
      throw ValidationError("duplicate candidate '" + c.entity + "' for '" +
                            mention + "'");
    }
    if (i > 0 && Ranked(c, candidates[i - 1])) {
      throw ValidationError("candidates for '" + mention +
                            "' not sorted by descending prior");
    }
  }
  lists_[NormalizeMention(mention)] = std::move(candidates);
}

const std::vector<Candidate> *CandidateTable::Find(std::string_view mention) const {
  auto it = lists_.find(NormalizeMention(mention));
  return it == lists_.end() ? nullptr : &it->second;
}

double CandidateTable::Prior(std::string_view mention,
                             std::string_view entity) const {
  const auto *list = Find(mention);
  if (list == nullptr) return 0.0;
  for (const Candidate &c : *list) {
    if (c.entity == entity) return c.prior;
  }
  return 0.0;
}

void CandidateTable::Cap(std::size_t cap) {
  if (cap == 0) return;
  for (auto &[mention, list] : lists_) {
    if (list.size() > cap) list.resize(cap);
  }
}

CandidateTable CandidateTable::Parse(const std::string &text) {
  std::vector<std::pair<std::string, std::vector<Candidate>>> lists;
  std::set<std::string> closed;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = "candidate file line " + std::to_string(line_no);
    const std::size_t a = line.find('\t');
    const std::size_t b = a == std::string::npos ? a : line.find('\t', a + 1);
    if (b == std::string::npos || line.find('\t', b + 1) != std::string::npos) {
      throw ParseError(where + ": expected 3 tab-separated fields");
    }
    const std::string mention = NormalizeMention(line.substr(0, a));
    const std::string field = line.substr(b + 1);
    double prior = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), prior);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
      throw ParseError(where + ": bad prior '" + field + "'");
    }
    if (lists.empty() || lists.back().first != mention) {
      if (!closed.insert(mention).second) {
        throw ParseError(where + ": candidates for '" + mention +
                         "' are not contiguous");
      }
      lists.emplace_back(mention, std::vector<Candidate>{});
    }
    lists.back().second.push_back({line.substr(a + 1, b - a - 1), prior});
  }
  CandidateTable table;
  for (auto &[mention, list] : lists) {
    double sum = 0.0;
    for (const Candidate &c : list) sum += c.prior;
    if (sum > 1.0 + 1e-9) {
      throw ValidationError("priors for '" + mention + "' sum to " +
                            std::to_string(sum) + " > 1");
    }
    table.Set(mention, std::move(list));
  }
  return table;
}

CandidateTable CandidateTable::Load(const std::string &path) {
  return Parse(ReadFile(path));
}

std::string CandidateTable::Format() const {
  std::ostringstream out;
  out.precision(17);
  for (const auto &[mention, list] : lists_) {
    for (const Candidate &c : list) {
      out << mention << '\t' << c.entity << '\t' << c.prior << '\n';
    }
  }
  return out.str();
}

void CandidateTable::Save(const std::string &path) const {
  WriteFileAtomic(path, Format());
}

CandidateTable BuildPriors(const std::vector<Paragraph> &paragraphs,
                           std::size_t cap) {
  std::map<std::string, std::map<std::string, std::size_t>> counts;
  for (const Paragraph &p : paragraphs) {
    for (const Mention &m : p.mentions) {
      ++counts[NormalizeMention(m.surface)][m.entity];
    }
  }
  CandidateTable table;
  for (const auto &[mention, by_entity] : counts) {
    std::size_t total = 0;
    for (const auto &[entity, n] : by_entity) total += n;
    std::vector<Candidate> list;
    for (const auto &[entity, n] : by_entity) {
      list.push_back({entity, static_cast<double>(n) / static_cast<double>(total)});
    }
    std::sort(list.begin(), list.end(), Ranked);
    if (cap > 0 && list.size() > cap) list.resize(cap);
    table.Set(mention, std::move(list));
  }
  return table;
}

double CandidateRecall(const std::vector<Paragraph> &paragraphs,
                       const CandidateTable &table) {
  std::size_t total = 0, hits = 0;
  for (const Paragraph &p : paragraphs) {
    for (const Mention &m : p.mentions) {
      ++total;
      const auto *list = table.Find(m.surface);
      if (list == nullptr) continue;
      for (const Candidate &c : *list) {
        if (c.entity == m.entity) {
          ++hits;
          break;
        }
      }
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace eelmo::corpus
