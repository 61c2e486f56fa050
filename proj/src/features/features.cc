#include "eelmo/features/features.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "eelmo/corpus/vocab.h"
#include "eelmo/errors.h"

namespace eelmo::features {

BinLayer BinLayer::Init(const std::string &prefix, std::size_t d) {
  if (d == 0) throw ParameterError("bin layer needs at least one bin");
  net::Tensor centers({d}), rho({d});
  // softplus(rho) = d  <=>  rho = log(exp(d) - 1) = d + log(1 - exp(-d)).
  const double dd = static_cast<double>(d);
  const double rho0 = dd + std::log1p(-std::exp(-dd));
  for (std::size_t i = 0; i < d; ++i) {
    centers[i] = d == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(d - 1);
    rho[i] = rho0;
  }
  BinLayer layer;
  layer.centers = net::Parameter(prefix + "centers", std::move(centers));
  layer.rho = net::Parameter(prefix + "rho", std::move(rho));
  return layer;
}

net::Var BinProject(net::Tape &tape, net::Var x, BinLayer &layer) {
  return tape.BinProject(x, tape.Leaf(layer.centers), tape.Leaf(layer.rho));
}

std::vector<double> BinProjectValues(double x, const BinLayer &layer) {
  const std::size_t d = layer.centers.tensor().size();
  std::vector<double> out(d);
  for (std::size_t i = 0; i < d; ++i) {
    const double z = net::Softplus(layer.rho.tensor()[i]) *
                     std::abs(x - layer.centers.tensor()[i]);
    out[i] = std::exp(-z * z);
  }
  return out;
}

std::size_t Levenshtein(std::string_view a, std::string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diagonal = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t above = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1,
                         diagonal + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diagonal = above;
    }
  }
  return row[b.size()];
}

namespace {

using Tokens = std::vector<std::string>;

bool IsPrefix(const Tokens &part, const Tokens &whole) {
  return part.size() <= whole.size() && std::equal(part.begin(), part.end(), whole.begin());
}

bool IsSuffix(const Tokens &part, const Tokens &whole) {
  return part.size() <= whole.size() &&
         std::equal(part.rbegin(), part.rend(), whole.rbegin());
}

bool Contains(const Tokens &whole, const Tokens &part) {
  return std::search(whole.begin(), whole.end(), part.begin(), part.end()) != whole.end();
}

std::set<std::string> Bigrams(const std::string &s) {
  std::set<std::string> out;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) out.insert(s.substr(i, 2));
  return out;
}

double Flag(bool b) { return b ? 1.0 : 0.0; }

}  // namespace

LexicalVector LexicalFeatures(std::string_view mention_in, std::string_view title_in) {
  const std::string mention = corpus::NormalizeMention(mention_in);
  const std::string title = corpus::NormalizeMention(title_in);
  if (mention.empty() || title.empty()) {
    throw FeatureError("lexical features need a nonempty mention and title");
  }
  const Tokens m = corpus::SplitWhitespace(mention);
  const Tokens t = corpus::SplitWhitespace(title);
  LexicalVector f{};
  f[0] = Flag(mention == title);
  f[1] = Flag(IsPrefix(m, t));
  f[2] = Flag(IsSuffix(m, t));
  f[3] = Flag(IsPrefix(t, m));
  f[4] = Flag(IsSuffix(t, m));
  f[5] = Flag(Contains(t, m));
  f[6] = Flag(Contains(m, t));
  const double longest = static_cast<double>(std::max(mention.size(), title.size()));
  f[7] = 1.0 - static_cast<double>(Levenshtein(mention, title)) / longest;

  const std::set<std::string> bm = Bigrams(mention), bt = Bigrams(title);
  if (bm.empty() && bt.empty()) {
    f[8] = Flag(mention == title);
  } else {
    std::size_t shared = 0;
    for (const std::string &g : bm) shared += bt.count(g);
    f[8] = static_cast<double>(shared) / static_cast<double>(bm.size() + bt.size() - shared);
  }
  const std::set<std::string> title_tokens(t.begin(), t.end());
  std::size_t covered = 0;
  for (const std::string &tok : m) covered += title_tokens.count(tok);
  f[9] = static_cast<double>(covered) / static_cast<double>(m.size());
  return f;
}

double PriorFeature(std::string_view mention, std::string_view entity,
                    const corpus::CandidateTable &priors) {
  return priors.Prior(mention, entity);
}

}  // namespace eelmo::features
