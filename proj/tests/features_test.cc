#include <cmath>

#include "doctest.h"
#include "eelmo/errors.h"
#include "eelmo/features/features.h"
#include "eelmo/netcore/gradcheck.h"
#include "eelmo/netcore/rng.h"

namespace eelmo::features {
namespace {

BinLayer SingleBin(double center, double sharpness) {
  BinLayer layer = BinLayer::Init("b/", 1);
  layer.centers.tensor()[0] = center;
  layer.rho.tensor()[0] = std::log(std::expm1(sharpness));
  return layer;
}

TEST_CASE("bin projection analytics") {
  BinLayer layer = BinLayer::Init("b/", 15);
  for (std::size_t i = 0; i < 15; ++i) {
    CHECK(BinProjectValues(layer.centers.tensor()[i], layer)[i] == 1.0);
    CHECK(std::abs(net::Softplus(layer.rho.tensor()[i]) - 15.0) < 1e-12);
  }
  CHECK(layer.centers.tensor()[0] == 0.0);
  CHECK(layer.centers.tensor()[14] == 1.0);
  CHECK(BinLayer::Init("b/", 1).centers.tensor()[0] == 0.5);

  BinLayer one = SingleBin(0.5, 1.0);
  CHECK(std::abs(BinProjectValues(1.5, one)[0] - std::exp(-1.0)) <= 1e-12);

  net::SeededRng rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    BinLayer b = SingleBin(rng.Uniform(), rng.Uniform(0.5, 10.0));
    const double c = b.centers.tensor()[0];
    const double delta = rng.Uniform(0.0, 0.5);
    CHECK(std::abs(BinProjectValues(c + delta, b)[0] - BinProjectValues(c - delta, b)[0]) <=
          1e-15);
  }
  CHECK_THROWS_AS(BinLayer::Init("b/", 0), ParameterError);
}

TEST_CASE("bin projection stays in (0, 1] on the unit interval") {
  net::SeededRng rng(5);
  for (std::size_t d : {1, 3, 10, 15}) {
    BinLayer layer = BinLayer::Init("b/", d);
    for (int trial = 0; trial < 200; ++trial) {
      for (double p : BinProjectValues(rng.Uniform(), layer)) {
        CHECK(p > 0.0);
        CHECK(p <= 1.0);
      }
    }
  }
}

TEST_CASE("tape bin projection matches values and gradients") {
  net::SeededRng rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    BinLayer layer = BinLayer::Init("b/", 4);
    for (double &c : layer.centers.tensor().values()) c += rng.Uniform(-0.1, 0.1);
    net::Parameter x("x", net::Tensor::Vector({rng.Uniform()}));
    net::Tensor weights({4});
    for (double &w : weights.values()) w = rng.Uniform(-1, 1);
    net::Tape tape;
    net::Var out = BinProject(tape, tape.Leaf(x), layer);
    auto expected = BinProjectValues(x.tensor()[0], layer);
    for (std::size_t i = 0; i < 4; ++i) CHECK(tape.value(out)[i] == expected[i]);
    auto build = [&](net::Tape &t) {
      return t.Dot(BinProject(t, t.Leaf(x), layer), t.Constant(weights));
    };
    CHECK(net::Gradcheck(build, {&x, &layer.centers, &layer.rho}).max_relative_error < 1e-4);
  }
}

TEST_CASE("lexical features on identical strings") {
  LexicalVector f = LexicalFeatures("Michael Jordan", "michael  jordan");
  for (double v : f) CHECK(v == 1.0);
}

TEST_CASE("lexical features for a surname mention") {
  LexicalVector f = LexicalFeatures("jordan", "michael jordan");
  CHECK(f[0] == 0.0);
  CHECK(f[1] == 0.0);
  CHECK(f[2] == 1.0);
  CHECK(f[3] == 0.0);
  CHECK(f[4] == 0.0);
  CHECK(f[5] == 1.0);
  CHECK(f[6] == 0.0);
  CHECK(f[7] == doctest::Approx(1.0 - 8.0 / 14.0));
  // Bigrams: {jo,or,rd,da,an} vs those plus {mi,ic,ch,ha,ae,el,l ," j"}.
  CHECK(f[8] == doctest::Approx(5.0 / 13.0));
  CHECK(f[9] == 1.0);

  LexicalVector g = LexicalFeatures("michael jordan", "jordan");
  CHECK(g[4] == 1.0);
  CHECK(g[6] == 1.0);
  CHECK(g[9] == doctest::Approx(0.5));
}

TEST_CASE("disjoint strings score zero on similarity features") {
  LexicalVector f = LexicalFeatures("abcd", "wxyz");
  CHECK(f[7] == 0.0);
  CHECK(f[8] == 0.0);
  for (std::size_t k = 0; k < 7; ++k) CHECK(f[k] == 0.0);
  CHECK(f[9] == 0.0);
  // Single characters have no bigrams.
  CHECK(LexicalFeatures("a", "a")[8] == 1.0);
  CHECK(LexicalFeatures("a", "b")[8] == 0.0);
  CHECK(Levenshtein("kitten", "sitting") == 3);
  CHECK(Levenshtein("", "abc") == 3);
}

TEST_CASE("lexical features stay in [0, 1] on random strings") {
  net::SeededRng rng(13);
  const std::string alphabet = "ab cAB\t";
  auto random_string = [&]() {
    std::string s;
    const std::size_t n = 1 + rng.Below(8);
    for (std::size_t i = 0; i < n; ++i) s += alphabet[rng.Below(alphabet.size())];
    s += "x";  // never empty after normalization
    return s;
  };
  for (int trial = 0; trial < 2000; ++trial) {
    const std::string m = random_string(), t = random_string();
    LexicalVector f = LexicalFeatures(m, t);
    for (double v : f) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    // Containment cannot drop when the title is the mention itself.
    LexicalVector self = LexicalFeatures(m, m);
    for (std::size_t k = 0; k < kLexicalFeatures; ++k) CHECK(self[k] >= f[k]);
  }
}

TEST_CASE("lexical features reject empty strings") {
  CHECK_THROWS_AS(LexicalFeatures("", "x"), FeatureError);
  CHECK_THROWS_AS(LexicalFeatures("x", "  "), FeatureError);
}

TEST_CASE("prior feature") {
  corpus::CandidateTable table;
  table.Set("paris", {{"E1", 0.8}, {"E2", 0.2}});
  table.Set("london", {{"E3", 1.0}});
  CHECK(PriorFeature("Paris", "E1", table) == 0.8);
  CHECK(PriorFeature("berlin", "E1", table) == 0.0);
  CHECK(PriorFeature("paris", "E3", table) == 0.0);
  CHECK(PriorFeature("london", "E3", table) == 1.0);
}

}  // namespace
}  // namespace eelmo::features
