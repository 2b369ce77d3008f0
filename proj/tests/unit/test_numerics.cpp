// Copyright 2026 The walign Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "gradcheck.hpp"
#include "walign/numerics/adam.hpp"
#include "walign/numerics/ops.hpp"

using namespace walign;
using walign::testing::gradient_errors;
using walign::testing::random_tensor;
using walign::testing::worst_error;

namespace {

Tensor<double> mat(Shape s, std::vector<double> v) { return Tensor<double>(std::move(s), std::move(v)); }

}  // namespace

TEST_CASE("matmul hand cases") {
  Tape<double> tape;
  std::mt19937_64 rng(1);
  Tensor<double> m = random_tensor({3, 4}, rng);
  Tensor<double> eye({3, 3});
  for (int i = 0; i < 3; ++i) eye[i * 3 + i] = 1;
  auto out = ops::matmul(tape.constant(eye), tape.constant(m));
  CHECK(out.value() == m);

  auto r = ops::matmul(tape.constant(mat({2, 2}, {1, 2, 3, 4})), tape.constant(mat({2, 1}, {1, 1})));
  CHECK(r.value().shape() == Shape{2, 1});
  CHECK(r.value()[0] == 3);
  CHECK(r.value()[1] == 7);
}

TEST_CASE("matmul shape mismatch names both shapes") {
  Tape<double> tape;
  auto a = tape.constant(Tensor<double>({2, 3}));
  auto b = tape.constant(Tensor<double>({4, 5}));
  try {
    ops::matmul(a, b);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2, 3]") != std::string::npos);
    CHECK(msg.find("[4, 5]") != std::string::npos);
  }
}

TEST_CASE("matmul gradients match central differences") {
  std::mt19937_64 rng(7);
  Parameter<double> a("a", random_tensor({4, 5}, rng));
  Parameter<double> b("b", random_tensor({5, 6}, rng));
  Parameter<double> bt("bt", random_tensor({6, 5}, rng));
  Parameter<double> ba("ba", random_tensor({2, 3, 4}, rng));
  Parameter<double> bb("bb", random_tensor({2, 4, 3}, rng));
  const Tensor<double> target = random_tensor({4, 6}, rng);
  const Tensor<double> target3 = random_tensor({2, 3, 3}, rng);

  auto plain = [&](Tape<double>& t) {
    return ops::mse(ops::matmul(t.leaf(a), t.leaf(b)), t.constant(target));
  };
  CHECK(worst_error(gradient_errors({&a, &b}, plain)) < 1e-4);

  auto transposed = [&](Tape<double>& t) {
    return ops::mse(ops::matmul(t.leaf(a), t.leaf(bt), true), t.constant(target));
  };
  CHECK(worst_error(gradient_errors({&a, &bt}, transposed)) < 1e-4);

  auto batched = [&](Tape<double>& t) {
    return ops::mse(ops::matmul(t.leaf(ba), t.leaf(bb)), t.constant(target3));
  };
  CHECK(worst_error(gradient_errors({&ba, &bb}, batched)) < 1e-4);

  auto batched_t = [&](Tape<double>& t) {
    return ops::mse(ops::matmul(t.leaf(ba), t.leaf(ba), true), t.constant(target3));
  };
  CHECK(worst_error(gradient_errors({&ba}, batched_t)) < 1e-4);
}

TEST_CASE("softmax_rows examples") {
  Tape<double> tape;
  auto even = ops::softmax_rows(tape.constant(mat({2}, {0, 0})));
  CHECK(even.value()[0] == doctest::Approx(0.5));
  CHECK(even.value()[1] == doctest::Approx(0.5));

  auto big = ops::softmax_rows(tape.constant(mat({2}, {1000, 0})));
  CHECK(std::isfinite(big.value()[0]));
  CHECK(big.value()[0] == doctest::Approx(1.0));
  CHECK(big.value()[1] == doctest::Approx(0.0));

  Mask mask({3});
  mask[1] = 1;
  auto masked = ops::softmax_rows(tape.constant(mat({3}, {1, 2, 3})), &mask);
  const double e1 = std::exp(1.0), e3 = std::exp(3.0);
  CHECK(masked.value()[0] == doctest::Approx(e1 / (e1 + e3)).epsilon(1e-12));
  CHECK(masked.value()[1] == 0.0);
  CHECK(masked.value()[2] == doctest::Approx(e3 / (e1 + e3)).epsilon(1e-12));

  Mask all({3}, 1);
  CHECK_THROWS_AS(ops::softmax_rows(tape.constant(mat({3}, {1, 2, 3})), &all), DegenerateRowError);
}

TEST_CASE("softmax rows sum to one for random inputs and masks") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> len(1, 9);
  std::normal_distribution<float> val(0.0f, 30.0f);
  std::bernoulli_distribution coin(0.4);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = len(rng), rows = len(rng);
    Tensor<float> x({rows, n});
    for (float& v : x.storage()) v = val(rng);
    Mask mask({rows, n});
    for (int r = 0; r < rows; ++r) {
      for (int j = 0; j < n; ++j) mask[r * n + j] = coin(rng);
      mask[r * n + std::uniform_int_distribution<int>(0, n - 1)(rng)] = 0;
    }
    Tape<float> tape;
    auto y = ops::softmax_rows(tape.constant(x), &mask);
    for (int r = 0; r < rows; ++r) {
      double total = 0;
      for (int j = 0; j < n; ++j) {
        const float p = y.value()[r * n + j];
        CHECK(p >= 0.0f);
        if (mask[r * n + j]) CHECK(p == 0.0f);
        total += p;
      }
      CHECK(std::abs(total - 1.0) < 1e-5);
    }
  }
}

TEST_CASE("softmax head-broadcast mask and gradient") {
  std::mt19937_64 rng(3);
  Parameter<double> x("x", random_tensor({2, 3, 4, 5}, rng));
  Mask mask({2, 4, 5});
  for (int i = 0; i < mask.size(); ++i) mask[i] = (i % 3 == 1);
  const Tensor<double> target = random_tensor({2, 3, 4, 5}, rng, 0.3);
  auto build = [&](Tape<double>& t) {
    return ops::mse(ops::softmax_rows(t.leaf(x), &mask), t.constant(target));
  };
  CHECK(worst_error(gradient_errors({&x}, build)) < 1e-4);
  Tape<double> tape;
  auto y = ops::softmax_rows(tape.leaf(x), &mask);
  // Mask row (b=1, q=2) applies to every head of batch item 1.
  for (int h = 0; h < 3; ++h) {
    for (int j = 0; j < 5; ++j) {
      const int64_t mi = (1 * 4 + 2) * 5 + j;
      const int64_t xi = ((1 * 3 + h) * 4 + 2) * 5 + j;
      if (mask[mi]) CHECK(y.value()[xi] == 0.0);
    }
  }
}

TEST_CASE("layer_norm examples") {
  Tape<double> tape;
  auto ones = tape.constant(mat({2}, {1, 1}));
  auto zeros = tape.constant(mat({2}, {0, 0}));
  auto c = ops::layer_norm(tape.constant(mat({2}, {4, 4})), ones, zeros);
  CHECK(c.value()[0] == 0.0);
  CHECK(c.value()[1] == 0.0);

  auto pm = ops::layer_norm(tape.constant(mat({2}, {1, -1})), ones, zeros);
  CHECK(pm.value()[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(pm.value()[1] == doctest::Approx(-1.0).epsilon(1e-4));

  std::mt19937_64 rng(5);
  Tensor<double> row = random_tensor({1, 16}, rng, 3.0);
  Tensor<double> g({16}, 1.0), b({16}, 0.0);
  auto y = ops::layer_norm(tape.constant(row), tape.constant(g), tape.constant(b));
  double mean = 0, var = 0;
  for (double v : y.value().storage()) mean += v;
  mean /= 16;
  for (double v : y.value().storage()) var += (v - mean) * (v - mean);
  var /= 16;
  CHECK(std::abs(mean) < 1e-6);
  CHECK(std::abs(var - 1.0) < 1e-3);
}

TEST_CASE("layer_norm gradients") {
  std::mt19937_64 rng(9);
  Parameter<double> x("x", random_tensor({3, 4, 6}, rng));
  Parameter<double> g("g", random_tensor({6}, rng));
  Parameter<double> b("b", random_tensor({6}, rng));
  const Tensor<double> target = random_tensor({3, 4, 6}, rng);
  auto build = [&](Tape<double>& t) {
    return ops::mse(ops::layer_norm(t.leaf(x), t.leaf(g), t.leaf(b)), t.constant(target));
  };
  CHECK(worst_error(gradient_errors({&x, &g, &b}, build)) < 1e-4);
}

TEST_CASE("cross_entropy examples and oracle") {
  Tape<double> tape;
  std::vector<int32_t> tgt{2};
  std::vector<uint8_t> pad{0};
  auto uniform = ops::cross_entropy(tape.constant(Tensor<double>({1, 4})), tgt, pad);
  CHECK(uniform.value().item() == doctest::Approx(std::log(4.0)).epsilon(1e-12));

  auto confident = ops::cross_entropy(tape.constant(mat({1, 4}, {0, 0, 50, 0})), tgt, pad);
  CHECK(confident.value().item() < 1e-12);

  std::vector<int32_t> bad{4};
  CHECK_THROWS_AS(ops::cross_entropy(tape.constant(Tensor<double>({1, 4})), bad, pad), IndexError);

  // Naive oracle: per sentence mean of -log softmax, then mean over sentences.
  std::mt19937_64 rng(13);
  Tensor<double> logits = random_tensor({2, 3, 5}, rng, 2.0);
  std::vector<int32_t> targets{0, 4, 2, 1, 3, 3};
  std::vector<uint8_t> mask{0, 0, 1, 0, 0, 0};
  double expected = 0;
  for (int b = 0; b < 2; ++b) {
    double part = 0;
    int count = 0;
    for (int t = 0; t < 3; ++t) {
      if (mask[b * 3 + t]) continue;
      const double* row = logits.data() + (b * 3 + t) * 5;
      double z = 0;
      for (int v = 0; v < 5; ++v) z += std::exp(row[v]);
      part += -std::log(std::exp(row[targets[b * 3 + t]]) / z);
      ++count;
    }
    expected += part / count;
  }
  expected /= 2;
  auto got = ops::cross_entropy(tape.constant(logits), targets, mask);
  CHECK(std::abs(got.value().item() - expected) < 1e-6);

  Parameter<double> p("logits", logits);
  auto build = [&](Tape<double>& t) { return ops::cross_entropy(t.leaf(p), targets, mask); };
  CHECK(worst_error(gradient_errors({&p}, build)) < 1e-4);
}

TEST_CASE("mse examples and oracle") {
  Tape<double> tape;
  std::mt19937_64 rng(17);
  Tensor<double> a = random_tensor({3, 4}, rng);
  CHECK(ops::mse(tape.constant(a), tape.constant(a)).value().item() == 0.0);
  CHECK(ops::mse(tape.constant(mat({2}, {1, 0})), tape.constant(mat({2}, {0, 1}))).value().item() ==
        doctest::Approx(1.0));
  Tensor<double> b = random_tensor({3, 4}, rng);
  double expected = 0;
  for (int i = 0; i < 12; ++i) expected += (a[i] - b[i]) * (a[i] - b[i]);
  expected /= 12;
  CHECK(std::abs(ops::mse(tape.constant(a), tape.constant(b)).value().item() - expected) < 1e-9);
  CHECK_THROWS_AS(ops::mse(tape.constant(a), tape.constant(Tensor<double>({4, 3}))), DimensionError);
}

TEST_CASE("masked_mse averages per slice") {
  Tape<double> tape;
  // Slice 0: one live cell with error 1. Slice 1: two live cells, errors 2 and 0.
  auto a = tape.constant(mat({2, 2}, {1, 5, 2, 0}));
  auto b = tape.constant(mat({2, 2}, {0, 0, 0, 0}));
  Mask mask({2, 2});
  mask[1] = 1;
  auto loss = ops::masked_mse(a, b, mask);
  CHECK(loss.value().item() == doctest::Approx((1.0 + (4.0 + 0.0) / 2.0) / 2.0));

  std::mt19937_64 rng(23);
  Parameter<double> x("x", random_tensor({3, 2, 4}, rng));
  Parameter<double> y("y", random_tensor({3, 2, 4}, rng));
  Mask m({3, 2, 4});
  for (int i = 0; i < m.size(); ++i) m[i] = (i % 5 == 0);
  auto build = [&](Tape<double>& t) { return ops::masked_mse(t.leaf(x), t.leaf(y), m); };
  CHECK(worst_error(gradient_errors({&x, &y}, build)) < 1e-4);
}

TEST_CASE("backward contract and closed forms") {
  std::mt19937_64 rng(29);
  Parameter<double> p("p", random_tensor({2, 3}, rng));
  p.zero_grad();
  {
    Tape<double> tape;
    tape.backward(ops::sum(tape.leaf(p)));
  }
  for (double g : p.grad.storage()) CHECK(g == 1.0);

  // Gradients accumulate until cleared.
  {
    Tape<double> tape;
    tape.backward(ops::sum(tape.leaf(p)));
  }
  for (double g : p.grad.storage()) CHECK(g == 2.0);

  p.zero_grad();
  {
    Tape<double> tape;
    tape.backward(ops::mse(tape.leaf(p), tape.constant(Tensor<double>({2, 3}))));
  }
  for (int i = 0; i < 6; ++i) CHECK(p.grad[i] == doctest::Approx(2 * p.value[i] / 6));

  Tape<double> tape;
  CHECK_THROWS_AS(tape.backward(ops::scale(tape.leaf(p), 2.0)), ContractError);
}

TEST_CASE("shape ops gradients") {
  std::mt19937_64 rng(31);
  Parameter<double> x("x", random_tensor({2, 3, 4}, rng));
  Parameter<double> bias("bias", random_tensor({4}, rng));
  Parameter<double> row("row", random_tensor({4}, rng));
  Parameter<double> table("table", random_tensor({6, 4}, rng));
  std::vector<int32_t> ids{0, 5, 2, 2, 1, 3};

  auto check = [&](std::vector<Parameter<double>*> ps, auto fn, Shape out_shape) {
    const Tensor<double> target = random_tensor(out_shape, rng);
    auto build = [&](Tape<double>& t) { return ops::mse(fn(t), t.constant(target)); };
    CHECK(worst_error(gradient_errors(ps, build)) < 1e-4);
  };
  check({&x, &bias}, [&](Tape<double>& t) { return ops::add(t.leaf(x), t.leaf(bias)); }, {2, 3, 4});
  check({&x}, [&](Tape<double>& t) { return ops::relu(ops::scale(t.leaf(x), 1.5)); }, {2, 3, 4});
  check({&x}, [&](Tape<double>& t) { return ops::mean_axis(t.leaf(x), 1); }, {2, 4});
  check({&x}, [&](Tape<double>& t) { return ops::slice_last(t.leaf(x), 1, 3); }, {2, 3, 2});
  check({&x}, [&](Tape<double>& t) { return ops::transpose_last2(t.leaf(x)); }, {2, 4, 3});
  check({&x, &row}, [&](Tape<double>& t) { return ops::prepend_row(t.leaf(x), t.leaf(row)); },
        {2, 4, 4});
  check({&table}, [&](Tape<double>& t) { return ops::embedding(t.leaf(table), ids, Shape{2, 3}); },
        {2, 3, 4});
}

TEST_CASE("attention kernels gradients and values") {
  std::mt19937_64 rng(37);
  Parameter<double> q("q", random_tensor({2, 3, 4}, rng));
  Parameter<double> k("k", random_tensor({2, 5, 4}, rng));
  Parameter<double> v("v", random_tensor({2, 5, 4}, rng));
  Parameter<double> p("p", random_tensor({2, 2, 3, 5}, rng));

  // Value check for one score against a direct dot product.
  Tape<double> tape;
  auto s = ops::head_scores(tape.leaf(q), tape.leaf(k), 2, 0.5);
  const double direct = 0.5 * (q.value[(1 * 3 + 2) * 4 + 2] * k.value[(1 * 5 + 4) * 4 + 2] +
                               q.value[(1 * 3 + 2) * 4 + 3] * k.value[(1 * 5 + 4) * 4 + 3]);
  CHECK(s.value()[((1 * 2 + 1) * 3 + 2) * 5 + 4] == doctest::Approx(direct).epsilon(1e-12));

  const Tensor<double> ts = random_tensor({2, 2, 3, 5}, rng);
  auto scores = [&](Tape<double>& t) {
    return ops::mse(ops::head_scores(t.leaf(q), t.leaf(k), 2, 0.7), t.constant(ts));
  };
  CHECK(worst_error(gradient_errors({&q, &k}, scores)) < 1e-4);

  const Tensor<double> tm = random_tensor({2, 3, 4}, rng);
  auto mix = [&](Tape<double>& t) {
    return ops::mse(ops::head_mix(t.leaf(p), t.leaf(v)), t.constant(tm));
  };
  CHECK(worst_error(gradient_errors({&p, &v}, mix)) < 1e-4);

  Tape<double> t2;
  CHECK_THROWS_AS(ops::head_scores(t2.leaf(q), t2.leaf(k), 3, 1.0), DimensionError);
}

TEST_CASE("backward is deterministic") {
  std::mt19937_64 rng(41);
  Parameter<float> a("a", tensor_cast<float>(random_tensor({8, 16}, rng)));
  Parameter<float> b("b", tensor_cast<float>(random_tensor({16, 8}, rng)));
  auto run = [&]() {
    a.zero_grad();
    b.zero_grad();
    Tape<float> tape;
    auto y = ops::softmax_rows(ops::matmul(tape.leaf(a), tape.leaf(b)));
    tape.backward(ops::mse(y, tape.constant(Tensor<float>({8, 8}, 0.1f))));
    return std::make_pair(a.grad, b.grad);
  };
  auto first = run();
  auto second = run();
  CHECK(first.first == second.first);
  CHECK(first.second == second.second);
}

TEST_CASE("adam updates") {
  Parameter<double> p("p", Tensor<double>({3}, 1.0));
  std::vector<Parameter<double>*> ps{&p};
  AdamState<double> state;
  p.zero_grad();
  adam_step<double>(ps, state, 0.1);
  for (double v : p.value.storage()) CHECK(v == 1.0);

  Parameter<double> q("q", Tensor<double>({2}, 0.0));
  q.grad = Tensor<double>({2}, std::vector<double>{0.5, -2.0});
  std::vector<Parameter<double>*> qs{&q};
  AdamState<double> qstate;
  adam_step<double>(qs, qstate, 0.01);
  CHECK(q.value[0] < 0.0);
  CHECK(q.value[1] > 0.0);

  // f(w) = (w - 3)^2 starting at 0.
  Parameter<double> w("w", Tensor<double>({1}, 0.0));
  std::vector<Parameter<double>*> ws{&w};
  AdamState<double> wstate;
  auto f = [&]() { return (w.value[0] - 3) * (w.value[0] - 3); };
  const double start = f();
  for (int i = 0; i < 2; ++i) {
    w.grad = Tensor<double>({1}, std::vector<double>{2 * (w.value[0] - 3)});
    adam_step<double>(ws, wstate, 0.1);
  }
  CHECK(f() < start);
}

TEST_CASE("learning rate schedules") {
  CHECK(learning_rate(LrSchedule::kInverseSqrt, 1.0, 4000, 2000) == doctest::Approx(0.5));
  CHECK(learning_rate(LrSchedule::kInverseSqrt, 1.0, 4000, 4000) == doctest::Approx(1.0));
  CHECK(learning_rate(LrSchedule::kInverseSqrt, 1.0, 4000, 16000) == doctest::Approx(0.5));
  CHECK(learning_rate(LrSchedule::kConstant, 2e-3, 100, 5000) == doctest::Approx(2e-3));
  CHECK_THROWS_AS(parse_lr_schedule("cosine"), ConfigError);
}
