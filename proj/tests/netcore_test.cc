#include <cmath>
#include <numeric>
#include <set>

#include "doctest.h"
#include "eelmo/errors.h"
#include "eelmo/netcore/gradcheck.h"
#include "eelmo/netcore/kernels.h"
#include "eelmo/netcore/layers.h"
#include "eelmo/netcore/optim.h"
#include "eelmo/netcore/rng.h"
#include "eelmo/netcore/tape.h"

using namespace eelmo;
using namespace eelmo::net;

namespace {

Tensor RandomTensor(Shape shape, SeededRng &rng, double scale = 1.0) {
  return UniformTensor(std::move(shape), scale, rng);
}

// Exact softmax cross-entropy over the whole table, computed directly.
double ExactSoftmaxCrossEntropy(const Tensor &table,
                                const std::vector<double> &ctx,
                                std::size_t target) {
  std::vector<double> scores(table.rows());
  for (std::size_t v = 0; v < table.rows(); ++v) {
    for (std::size_t k = 0; k < ctx.size(); ++k) {
      scores[v] += table.at(v, k) * ctx[k];
    }
  }
  double m = *std::max_element(scores.begin(), scores.end());
  double z = 0.0;
  for (double s : scores) z += std::exp(s - m);
  return -(scores[target] - m - std::log(z));
}

}  // namespace

TEST_CASE("tensor extents and errors") {
  Tensor t({2, 3});
  CHECK(t.size() == 6);
  CHECK(t.rows() == 2);
  CHECK(t.cols() == 3);
  CHECK_THROWS_AS(Tensor({2, 0}), DimensionError);
  CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0}), DimensionError);
  CHECK_FALSE(t.has_grad());
  t.grad()[4] = 2.0;
  CHECK(t.has_grad());
  t.zero_grad();
  CHECK(std::as_const(t).grad()[4] == 0.0);
}

TEST_CASE("affine examples") {
  Tape tape;
  Var x = tape.Constant(Tensor({1, 2}, {1, 2}));
  Var w = tape.Constant(Tensor({2, 2}, {1, 0, 0, 1}));
  Var b = tape.Constant(Tensor::Vector({0, 0}));
  Var y = tape.Affine(x, w, b);
  CHECK(tape.value(y).storage() == std::vector<double>{1, 2});

  SeededRng rng(3);
  Var zero = tape.Constant(Tensor({1, 2}));
  Var any_w = tape.Constant(RandomTensor({2, 2}, rng));
  Var bias = tape.Constant(Tensor::Vector({3, 4}));
  CHECK(tape.value(tape.Affine(zero, any_w, bias)).storage() ==
        std::vector<double>{3, 4});
}

TEST_CASE("affine matches a triple-loop oracle") {
  SeededRng rng(11);
  Tensor a = RandomTensor({2, 3}, rng);
  Tensor w = RandomTensor({3, 2}, rng);
  Tensor b = RandomTensor({2}, rng);
  Tape tape;
  Var y = tape.Affine(tape.Constant(a), tape.Constant(w), tape.Constant(b));
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      double expect = b[j];
      for (std::size_t k = 0; k < 3; ++k) expect += a.at(i, k) * w.at(k, j);
      CHECK(std::abs(tape.value(y).at(i, j) - expect) < 1e-12);
    }
  }
}

TEST_CASE("affine shape mismatch names both shapes") {
  Tape tape;
  Var x = tape.Constant(Tensor({1, 3}));
  Var w = tape.Constant(Tensor({2, 2}));
  Var b = tape.Constant(Tensor({2}));
  try {
    tape.Affine(x, w, b);
    FAIL("expected DimensionError");
  } catch (const DimensionError &e) {
    std::string msg = e.what();
    CHECK(msg.find("[1x3]") != std::string::npos);
    CHECK(msg.find("[2x2]") != std::string::npos);
  }
}

TEST_CASE("serial and OpenMP kernels agree bitwise") {
  SeededRng rng(5);
  for (auto [n, k, m] : {std::tuple<std::size_t, std::size_t, std::size_t>{
                             1, 7, 300},
                         {17, 33, 65},
                         {64, 64, 128},
                         {3, 1, 1}}) {
    Tensor a = RandomTensor({n, k}, rng);
    Tensor b = RandomTensor({k, m}, rng);
    Tensor g = RandomTensor({n, m}, rng);
    std::vector<double> s(n * m), p(n * m);
    kernels::serial::MatMul(a.values(), b.values(), s, n, k, m);
    kernels::parallel::MatMul(a.values(), b.values(), p, n, k, m);
    CHECK(s == p);
    std::vector<double> sw(k * m, 0.5), pw(k * m, 0.5);
    kernels::serial::AccumulateATB(a.values(), g.values(), sw, n, k, m);
    kernels::parallel::AccumulateATB(a.values(), g.values(), pw, n, k, m);
    CHECK(sw == pw);
    std::vector<double> sx(n * k, -1.0), px(n * k, -1.0);
    kernels::serial::AccumulateABT(g.values(), b.values(), sx, n, k, m);
    kernels::parallel::AccumulateABT(g.values(), b.values(), px, n, k, m);
    CHECK(sx == px);
  }
}

TEST_CASE("recurrent cell examples") {
  SeededRng rng(2);
  LstmParams params = LstmParams::Init("cell/", 3, 4, rng);
  for (Parameter *p : params.All()) {
    for (double &v : p->tensor().values()) v = 0.0;
  }
  Tape tape;
  Var x = tape.Constant(RandomTensor({3}, rng));
  Var state = tape.Constant(Tensor({8}));
  Var next = RecurrentCellStep(tape, x, state, params);
  for (double v : tape.value(next).values()) CHECK(v == 0.0);

  // Saturated gates: forget ~ 1, input ~ 0 keeps the cell.
  LstmParams sat = LstmParams::Init("sat/", 3, 4, rng);
  for (std::size_t k = 0; k < 4; ++k) {
    sat.bias.tensor()[k] = -50.0;
    sat.bias.tensor()[4 + k] = 50.0;
  }
  for (double &v : sat.w.tensor().values()) v = 0.0;
  for (double &v : sat.u.tensor().values()) v = 0.0;
  Tensor prev = RandomTensor({8}, rng);
  Var out = RecurrentCellStep(tape, x, tape.Constant(prev), sat);
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(std::abs(tape.value(out)[4 + k] - prev[4 + k]) < 1e-9);
  }

  LstmParams bad = LstmParams::Init("bad/", 3, 4, rng);
  CHECK_THROWS_AS(RecurrentCellStep(tape, x, tape.Constant(Tensor({6})), bad),
                  DimensionError);
}

TEST_CASE("recurrent cell gradient matches finite differences") {
  SeededRng rng(21);
  LstmParams params = LstmParams::Init("cell/", 3, 4, rng);
  Parameter x("x", RandomTensor({3}, rng));
  Parameter state("state", RandomTensor({8}, rng));
  Tensor readout = RandomTensor({8}, rng);
  auto build = [&](Tape &tape) {
    Var out = RecurrentCellStep(tape, tape.Leaf(x), tape.Leaf(state), params);
    return tape.Dot(out, tape.Constant(readout));
  };
  std::vector<Parameter *> all = params.All();
  all.push_back(&x);
  all.push_back(&state);
  GradcheckResult r = Gradcheck(build, all, 1e-5);
  CHECK(r.max_relative_error < 1e-4);
}

TEST_CASE("char convolution examples") {
  SeededRng rng(7);
  CharCnnShape shape;
  shape.alphabet = 6;
  shape.d_char = 3;
  shape.widths = {1, 2};
  shape.filters_per_width = 2;
  shape.max_chars = 5;
  shape.d_tok = 4;
  CharCnnParams params = CharCnnParams::Init("cnn/", shape, rng);
  std::vector<std::vector<std::int32_t>> ids = {
      {1, 2, 3, 0, 0}, {4, 5, 0, 0, 0}, {1, 2, 3, 0, 0}};
  Tape tape;
  Var out = CharConvEncode(tape, ids, params);
  CHECK(tape.value(out).shape() == Shape{3, 4});
  for (std::size_t c = 0; c < 4; ++c) {
    CHECK(tape.value(out).at(0, c) == tape.value(out).at(2, c));
  }
  std::vector<std::vector<std::int32_t>> bad = {{1, 9, 0, 0, 0}};
  CHECK_THROWS_AS(CharConvEncode(tape, bad, params), VocabularyError);
}

TEST_CASE("width-1 filter pools the max embedding coordinate") {
  // 1-d embeddings, filter weight 1, bias 0: pooled = max over chars.
  Tape tape;
  Var emb = tape.Constant(Tensor({4, 1}, {0.0, 0.7, -0.2, 0.4}));
  Var filt = tape.Constant(Tensor({1, 1}, {1.0}));
  Var bias = tape.Constant(Tensor({1}, {0.0}));
  std::vector<std::size_t> widths = {1};
  std::vector<Var> fs = {filt}, bs = {bias};
  std::vector<std::vector<std::int32_t>> ids = {{2, 3, 2}};
  Var pooled = tape.CharConvPool(ids, emb, widths, fs, bs);
  // chars 2, 3, 2 -> values -0.2, 0.4, -0.2 -> max 0.4
  CHECK(tape.value(pooled)[0] == 0.4);
}

TEST_CASE("char convolution gradient matches finite differences") {
  SeededRng rng(8);
  CharCnnShape shape;
  shape.alphabet = 7;
  shape.d_char = 3;
  shape.widths = {1, 2, 3};
  shape.filters_per_width = 2;
  shape.max_chars = 6;
  shape.d_tok = 3;
  CharCnnParams params = CharCnnParams::Init("cnn/", shape, rng);
  std::vector<std::vector<std::int32_t>> ids = {{1, 2, 3, 4, 0, 0},
                                                {5, 6, 2, 0, 0, 0}};
  Tensor readout = RandomTensor({2, 3}, rng);
  auto build = [&](Tape &tape) {
    Var out = CharConvEncode(tape, ids, params);
    return tape.Dot(out, tape.Constant(readout));
  };
  CHECK(Gradcheck(build, params.All()).max_relative_error < 1e-4);
}

TEST_CASE("sampled softmax with the full complement is exact") {
  SeededRng rng(13);
  for (std::size_t vocab : {2, 5, 50, 200}) {
    Tensor table = RandomTensor({vocab, 6}, rng);
    Tensor ctx = RandomTensor({6}, rng);
    const std::size_t target = rng.Below(vocab);
    std::vector<std::size_t> negatives;
    for (std::size_t v = 0; v < vocab; ++v) {
      if (v != target) negatives.push_back(v);
    }
    Tape tape;
    Var loss = tape.SampledSoftmaxLoss(tape.Constant(ctx), tape.Constant(table),
                                       target, negatives);
    CHECK(std::abs(tape.scalar(loss) -
                   ExactSoftmaxCrossEntropy(table, ctx.storage(), target)) <
          1e-10);
  }
}

TEST_CASE("sampled softmax degenerate cases and errors") {
  Tape tape;
  Var ctx = tape.Constant(Tensor::Vector({0.3, -1.0}));
  Var zero_table = tape.Constant(Tensor({10, 2}));
  std::vector<std::size_t> four = {1, 2, 3, 4};
  CHECK(tape.scalar(tape.SampledSoftmaxLoss(ctx, zero_table, 0, four)) ==
        doctest::Approx(std::log(5.0)).epsilon(1e-14));
  Var tied = tape.Constant(Tensor({2, 2}, {1.0, 2.0, 1.0, 2.0}));
  std::vector<std::size_t> one = {1};
  CHECK(tape.scalar(tape.SampledSoftmaxLoss(ctx, tied, 0, one)) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-14));
  std::vector<std::size_t> with_target = {0, 1};
  CHECK_THROWS_AS(tape.SampledSoftmaxLoss(ctx, zero_table, 0, with_target),
                  ContractError);
  std::vector<std::size_t> none;
  CHECK_THROWS_AS(tape.SampledSoftmaxLoss(ctx, zero_table, 0, none),
                  DegenerateSetError);
  std::vector<std::size_t> dup = {1, 1};
  CHECK_THROWS_AS(tape.SampledSoftmaxLoss(ctx, zero_table, 0, dup),
                  ContractError);
}

TEST_CASE("sampled softmax touches only the scored rows") {
  SeededRng rng(4);
  Parameter table("table", RandomTensor({8, 3}, rng));
  Parameter ctx("ctx", RandomTensor({3}, rng));
  Tape tape;
  std::vector<std::size_t> negatives = {2, 5};
  Var loss = tape.SampledSoftmaxLoss(tape.Leaf(ctx), tape.Leaf(table), 6,
                                     negatives);
  tape.Backward(loss);
  CHECK(table.touched_rows() == std::set<std::size_t>{2, 5, 6});
  auto g = std::as_const(table.tensor()).grad();
  for (std::size_t r = 0; r < 8; ++r) {
    if (r == 2 || r == 5 || r == 6) continue;
    for (std::size_t c = 0; c < 3; ++c) CHECK(g[r * 3 + c] == 0.0);
  }
}

TEST_CASE("dropout masks") {
  SeededRng rng(1);
  Tensor no_drop = DropoutMask(100, 0.0, rng, true);
  for (double v : no_drop.values()) CHECK(v == 1.0);
  Tensor inference = DropoutMask(100, 0.7, rng, false);
  for (double v : inference.values()) CHECK(v == 1.0);
  CHECK_THROWS_AS(DropoutMask(4, 1.0, rng, true), ParameterError);
  CHECK_THROWS_AS(DropoutMask(4, -0.1, rng, true), ParameterError);

  Tensor mask = DropoutMask(100000, 0.5, rng, true);
  std::size_t zeros = 0;
  for (double v : mask.values()) {
    if (v == 0.0) {
      ++zeros;
    } else {
      CHECK(v == 2.0);
    }
  }
  const double frac = static_cast<double>(zeros) / 1e5;
  CHECK(std::abs(frac - 0.5) <= 0.01);
}

TEST_CASE("adagrad update rule") {
  Parameter p("p", Tensor::Vector({1.0}));
  p.tensor().grad()[0] = 1.0;
  AdagradStep(p, 0.1);
  CHECK(p.tensor()[0] - 1.0 == doctest::Approx(-0.1 / (1.0 + 1e-8)).epsilon(1e-15));

  Parameter z("z", Tensor::Vector({0.25, -3.0}));
  z.tensor().grad();
  AdagradStep(z, 0.1);
  CHECK(z.tensor().storage() == std::vector<double>{0.25, -3.0});

  Parameter frozen("f", Tensor::Vector({0.5}), false);
  frozen.tensor().grad()[0] = 9.0;
  AdagradStep(frozen, 0.1);
  AdamStep(frozen, AdamOptions{});
  CHECK(frozen.tensor()[0] == 0.5);

  Parameter no_grad("n", Tensor::Vector({0.5}));
  CHECK_THROWS_AS(AdagradStep(no_grad, 0.1), StateError);
  CHECK_THROWS_AS(AdamStep(no_grad, AdamOptions{}), StateError);
}

TEST_CASE("adam first step moves by lr * sign") {
  Parameter p("p", Tensor::Vector({1.0, 1.0}));
  p.tensor().grad()[0] = 2.0;
  p.tensor().grad()[1] = -0.5;
  AdamStep(p, AdamOptions{});
  CHECK(p.tensor()[0] == doctest::Approx(1.0 - 1e-3 * 2.0 / (2.0 + 1e-8)));
  CHECK(p.tensor()[1] == doctest::Approx(1.0 + 1e-3 * 0.5 / (0.5 + 1e-8)));
  CHECK(p.state().step == 1);
}

TEST_CASE("unit-sphere renormalization") {
  Parameter table("t", Tensor({3, 2}, {3, 4, 0.6, 0.8, 5, 12}));
  std::vector<std::size_t> rows = {0, 1};
  RenormalizeUnitSphere(rows, table);
  CHECK(table.tensor().at(0, 0) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(table.tensor().at(0, 1) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(std::abs(table.tensor().at(1, 0) - 0.6) <= 1e-15);
  CHECK(std::abs(table.tensor().at(1, 1) - 0.8) <= 1e-15);
  CHECK(table.tensor().at(2, 0) == 5.0);
  CHECK(table.tensor().at(2, 1) == 12.0);

  SeededRng rng(9);
  Parameter random("r", RandomTensor({4, 7}, rng, 3.0));
  std::vector<std::size_t> all = {0, 1, 2, 3};
  RenormalizeUnitSphere(all, random);
  Tensor once = random.tensor();
  RenormalizeUnitSphere(all, random);
  for (std::size_t r = 0; r < 4; ++r) {
    double sq = 0.0;
    for (double v : random.tensor().row(r)) sq += v * v;
    CHECK(std::abs(std::sqrt(sq) - 1.0) < 1e-12);
    for (std::size_t c = 0; c < 7; ++c) {
      CHECK(std::abs(random.tensor().at(r, c) - once.at(r, c)) <= 1e-15);
    }
  }

  Parameter zero("z", Tensor({2, 2}));
  std::vector<std::size_t> row1 = {1};
  try {
    RenormalizeUnitSphere(row1, zero);
    FAIL("expected NormalizationError");
  } catch (const NormalizationError &e) {
    CHECK(std::string(e.what()).find("row 1") != std::string::npos);
  }
}

TEST_CASE("gradcheck trivial functions") {
  Parameter theta("theta", Tensor::Vector({3.0}));
  auto square = [&](Tape &tape) {
    Var t = tape.Leaf(theta);
    return tape.Sum(tape.Mul(t, t));
  };
  GradcheckResult r = Gradcheck(square, {&theta});
  CHECK(r.per_parameter[0].analytic == doctest::Approx(6.0));
  CHECK(std::abs(r.per_parameter[0].numeric - 6.0) < 1e-8);

  auto constant = [&](Tape &tape) {
    return tape.Constant(Tensor::Scalar(4.0));
  };
  GradcheckResult c = Gradcheck(constant, {&theta});
  CHECK(c.per_parameter[0].analytic == 0.0);
  CHECK(c.per_parameter[0].numeric == 0.0);
  CHECK(c.max_relative_error == 0.0);

  auto bad = [&](Tape &tape) {
    return tape.Constant(Tensor::Scalar(std::nan("")));
  };
  CHECK_THROWS_AS(Gradcheck(bad, {&theta}), NumericError);
  CHECK_THROWS_AS(Gradcheck(square, {&theta}, 0.0), ParameterError);
}

TEST_CASE("seeded rng is reproducible and samples without replacement") {
  SeededRng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.NextU64() == b.NextU64());
  SeededRng c(43);
  CHECK(a.NextU64() != c.NextU64());

  for (std::size_t n : {10u, 100u, 1000u}) {
    for (std::size_t count : {1u, 5u, 9u}) {
      SeededRng r(n * 31 + count);
      auto sample = r.SampleWithoutReplacement(n, count, 3);
      std::set<std::size_t> unique(sample.begin(), sample.end());
      CHECK(unique.size() == count);
      CHECK(unique.count(3) == 0);
      for (std::size_t v : sample) CHECK(v < n);
    }
  }
  SeededRng r(1);
  CHECK_THROWS_AS(r.SampleWithoutReplacement(5, 5, 2), ParameterError);
  CHECK(r.SampleWithoutReplacement(5, 4, 2).size() == 4);
}

TEST_CASE("bin projection gradient matches finite differences") {
  SeededRng rng(17);
  Parameter x("x", Tensor::Vector({0.37}));
  Parameter centers("c", RandomTensor({5}, rng));
  Parameter rho("rho", RandomTensor({5}, rng));
  Tensor readout = RandomTensor({5}, rng);
  auto build = [&](Tape &tape) {
    Var p = tape.BinProject(tape.Leaf(x), tape.Leaf(centers), tape.Leaf(rho));
    return tape.Dot(p, tape.Constant(readout));
  };
  CHECK(Gradcheck(build, {&x, &centers, &rho}).max_relative_error < 1e-4);
}

TEST_CASE("softmax cross-entropy over equal scores is log n") {
  Tape tape;
  std::vector<Var> scores;
  for (int i = 0; i < 4; ++i) scores.push_back(tape.Constant(Tensor::Scalar(0.3)));
  CHECK(tape.scalar(tape.SoftmaxCrossEntropy(scores, 2)) ==
        doctest::Approx(std::log(4.0)).epsilon(1e-14));
}

TEST_CASE("centered softmax cross-entropy matches the difference of losses") {
  SeededRng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.Below(6);
    const std::size_t gold = rng.Below(n);
    std::vector<double> ref(n), cur(n);
    for (std::size_t i = 0; i < n; ++i) {
      ref[i] = rng.Uniform(-3, 3);
      cur[i] = ref[i] + rng.Uniform(-0.5, 0.5);
    }
    Tape full, centered;
    std::vector<Var> a, b;
    for (std::size_t i = 0; i < n; ++i) {
      a.push_back(full.Constant(Tensor::Scalar(cur[i])));
      b.push_back(centered.Constant(Tensor::Scalar(cur[i])));
    }
    Tape base;
    std::vector<Var> r;
    for (double x : ref) r.push_back(base.Constant(Tensor::Scalar(x)));
    const double expect = full.scalar(full.SoftmaxCrossEntropy(a, gold)) -
                          base.scalar(base.SoftmaxCrossEntropy(r, gold));
    CHECK(std::abs(centered.scalar(centered.SoftmaxCrossEntropyChange(b, gold, ref)) - expect) <
          1e-12);
  }
  // At the reference the change is exactly zero.
  Tape t;
  std::vector<Var> s{t.Constant(Tensor::Scalar(0.4)), t.Constant(Tensor::Scalar(-1.0))};
  const std::vector<double> ref{0.4, -1.0};
  CHECK(t.scalar(t.SoftmaxCrossEntropyChange(s, 1, ref)) == 0.0);
  CHECK_THROWS_AS(t.SoftmaxCrossEntropyChange(s, 1, std::vector<double>{1.0}), DimensionError);

  Parameter w("w", RandomTensor({3}, rng));
  std::vector<double> reference;
  auto scores = [&](Tape &tape) {
    Var x = tape.Leaf(w);
    std::vector<Var> out;
    for (std::size_t i = 0; i < 3; ++i) out.push_back(tape.Scale(tape.Slice(x, i, 1), 0.5));
    return out;
  };
  {
    Tape tape;
    for (Var v : scores(tape)) reference.push_back(tape.scalar(v));
  }
  auto build = [&](Tape &tape) {
    std::vector<Var> s = scores(tape);
    return tape.SoftmaxCrossEntropyChange(s, 0, reference);
  };
  CHECK(Gradcheck(build, {&w}).max_relative_error < 1e-6);
}
