/*
 * Copyright 2026 The ReliFusion Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "relifusion/grad_check.hpp"
#include "relifusion/tensor.hpp"

using namespace relifusion;
using namespace relifusion::ad;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, double scale = 1.0) {
  return Tensor::randn(std::move(shape), rng, scale);
}

}  // namespace

TEST_CASE("matmul identity and selector") {
  Tensor id({2, 2}, {1, 0, 0, 1});
  Tensor a({2, 2}, {1, 2, 3, 4});
  Tensor r = matmul(id, a);
  CHECK(r.v == std::vector<double>{1, 2, 3, 4});

  Tensor row({1, 2}, {1, 0});
  Tensor col({2, 1}, {2, 5});
  CHECK(matmul(row, col).item() == 2.0);
}

TEST_CASE("matmul matches triple-loop oracle") {
  Rng rng(11);
  Tensor a = random_tensor({3, 4}, rng);
  Tensor b = random_tensor({4, 2}, rng);
  Tensor r = matmul(a, b);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 2; ++j) {
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) acc += a.at(i, k) * b.at(k, j);
      CHECK(r.at(i, j) == doctest::Approx(acc).epsilon(1e-12));
    }
  }
}

TEST_CASE("matmul shape mismatch names both shapes") {
  Tensor a = Tensor::zeros({2, 3});
  Tensor b = Tensor::zeros({2, 3});
  try {
    matmul(a, b);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    std::string msg = e.what();
    CHECK(msg.find("[2x3]") != std::string::npos);
  }
}

TEST_CASE("softmax rows") {
  Tensor u({3}, {1, 1, 1});
  Tensor r = softmax_rows(u);
  for (double x : r.v) CHECK(x == doctest::Approx(1.0 / 3).epsilon(1e-12));

  Tensor h({2}, {0.0, std::log(2.0)});
  Tensor rh = softmax_rows(h);
  CHECK(rh.v[0] == doctest::Approx(1.0 / 3).epsilon(1e-12));
  CHECK(rh.v[1] == doctest::Approx(2.0 / 3).epsilon(1e-12));

  Tensor big({2}, {1000.0, 0.0});
  Tensor rb = softmax_rows(big);
  CHECK(rb.v[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rb.v[1] < 1e-300);

  Tensor bad({2}, {1.0, 0.0});
  bad.v[0] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(softmax_rows(bad), NumericError);
}

TEST_CASE("softmax rows sum to one (property)") {
  Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const int c = 2 + static_cast<int>(rng.below(6));
    const double mag = (trial % 3 == 0) ? 1e3 : 1.0;
    Tensor m = random_tensor({3, c}, rng, mag);
    Tensor s = softmax_rows(m);
    for (int i = 0; i < 3; ++i) {
      double acc = 0.0;
      for (int j = 0; j < c; ++j) {
        CHECK(s.at(i, j) >= 0.0);
        acc += s.at(i, j);
      }
      CHECK(std::fabs(acc - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("layer_norm corners") {
  Tensor g = Tensor::full({4}, 1.0);
  Tensor b = Tensor::zeros({4});

  Tensor c = Tensor::full({4}, 3.7);
  Tensor rc = layer_norm(c, g, b);
  for (double x : rc.v) CHECK(x == doctest::Approx(0.0).epsilon(1e-12));

  Tensor pm({2}, {1.0, -1.0});
  Tensor r = layer_norm(pm, Tensor::full({2}, 1.0), Tensor::zeros({2}));
  CHECK(r.v[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(r.v[1] == doctest::Approx(-1.0).epsilon(1e-4));

  Rng rng(3);
  Tensor x = random_tensor({4}, rng);
  Tensor bias({4}, {0.5, -1.0, 2.0, 0.0});
  Tensor rz = layer_norm(x, Tensor::zeros({4}), bias);
  CHECK(rz.v == bias.v);

  CHECK_THROWS_AS(layer_norm(Tensor::scalar(1.0), Tensor::scalar(1.0), Tensor::scalar(0.0)),
                  ArgumentError);
}

TEST_CASE("gelu values and envelope") {
  CHECK(gelu(Tensor::scalar(0.0)).item() == 0.0);
  CHECK(gelu(Tensor::scalar(10.0)).item() == doctest::Approx(10.0).epsilon(1e-9));
  // x * Phi(x) at x=1, with Phi evaluated through erf directly.
  const double phi1 = 0.5 * (1.0 + std::erf(1.0 / std::sqrt(2.0)));
  CHECK(gelu(Tensor::scalar(1.0)).item() == doctest::Approx(phi1).epsilon(1e-9));
  CHECK(std::fabs(gelu(Tensor::scalar(1.0)).item() - 0.841345) < 1e-6);

  Rng rng(17);
  for (int i = 0; i < 500; ++i) {
    const double x = rng.uniform(-8.0, 8.0);
    const double y = gelu(Tensor::scalar(x)).item();
    CHECK(y > std::min(0.0, x) - 0.2);
    CHECK(y <= std::max(0.0, x));
  }
}

TEST_CASE("sigmoid values, saturation, strict bounds") {
  CHECK(sigmoid(Tensor::scalar(0.0)).item() == 0.5);
  CHECK(std::fabs(sigmoid(Tensor::scalar(40.0)).item() - 1.0) < 1e-15);
  CHECK(std::fabs(sigmoid(Tensor::scalar(-40.0)).item()) < 1e-15);
  CHECK(sigmoid(Tensor::scalar(std::log(3.0))).item() == doctest::Approx(0.75).epsilon(1e-12));

  Rng rng(23);
  for (int i = 0; i < 500; ++i) {
    const double x = rng.uniform(-900.0, 900.0);
    const double y = sigmoid(Tensor::scalar(x)).item();
    CHECK(y > 0.0);
    CHECK(y < 1.0);
  }
}

TEST_CASE("cosine similarity corners") {
  Tensor v({3}, {1.0, 2.0, -0.5});
  CHECK(cosine_sim(v, v).item() == doctest::Approx(1.0).epsilon(1e-12));

  Tensor e1({2}, {1.0, 0.0});
  Tensor e2({2}, {0.0, 1.0});
  CHECK(cosine_sim(e1, e2).item() == 0.0);

  Tensor nv({3}, {-1.0, -2.0, 0.5});
  CHECK(cosine_sim(v, nv).item() == doctest::Approx(-1.0).epsilon(1e-12));

  CHECK_THROWS_AS(cosine_sim(Tensor::zeros({3}), v), DegenerateError);
}

TEST_CASE("mlp_forward corners and oracle") {
  // zero weights, bias b -> b
  std::vector<LinearLayer> net;
  net.push_back({Tensor::zeros({3, 2}), Tensor({2}, {0.7, -0.3})});
  Rng rng(7);
  Tensor x = random_tensor({3}, rng);
  Tensor r = mlp_forward(x, net);
  CHECK(r.v == std::vector<double>{0.7, -0.3});

  // zero input through identity two-layer chain stays zero
  std::vector<LinearLayer> id2;
  Tensor eye({2, 2}, {1, 0, 0, 1});
  id2.push_back({eye, Tensor::zeros({2})});
  id2.push_back({eye, Tensor::zeros({2})});
  Tensor rz = mlp_forward(Tensor::zeros({2}), id2);
  CHECK(rz.v == std::vector<double>{0.0, 0.0});

  // random 4 -> 8 -> 4 against a per-layer oracle
  std::vector<LinearLayer> rnd;
  rnd.push_back({random_tensor({4, 8}, rng), random_tensor({8}, rng)});
  rnd.push_back({random_tensor({8, 4}, rng), random_tensor({4}, rng)});
  Tensor xin = random_tensor({4}, rng);
  Tensor got = mlp_forward(xin, rnd);

  auto phi = [](double t) { return 0.5 * t * (1.0 + std::erf(t / std::sqrt(2.0))); };
  std::vector<double> h(8, 0.0);
  for (int j = 0; j < 8; ++j) {
    double acc = rnd[0].b.v[static_cast<std::size_t>(j)];
    for (int i = 0; i < 4; ++i) acc += xin.v[static_cast<std::size_t>(i)] * rnd[0].w.at(i, j);
    h[static_cast<std::size_t>(j)] = phi(acc);
  }
  for (int j = 0; j < 4; ++j) {
    double acc = rnd[1].b.v[static_cast<std::size_t>(j)];
    for (int i = 0; i < 8; ++i) acc += h[static_cast<std::size_t>(i)] * rnd[1].w.at(i, j);
    CHECK(got.v[static_cast<std::size_t>(j)] == doctest::Approx(acc).epsilon(1e-12));
  }

  std::vector<LinearLayer> broken;
  broken.push_back({Tensor::zeros({5, 2}), Tensor::zeros({2})});
  CHECK_THROWS_AS(mlp_forward(x, broken), DimensionError);
}

TEST_CASE("backward basics") {
  // d(x*y)/dx at (2,3) = 3
  Tape tape;
  Tensor x = tape.leaf(Tensor::scalar(2.0));
  Tensor y = tape.leaf(Tensor::scalar(3.0));
  Tensor p = mul(x, y, &tape);
  tape.backward(p);
  CHECK(tape.grad(x)[0] == 3.0);
  CHECK(tape.grad(y)[0] == 2.0);

  // softmax rows sum to a constant, so the gradient of the sum vanishes
  Tape t2;
  Tensor z = t2.leaf(Tensor({3}, {0.3, -1.1, 2.0}));
  Tensor s = sum(softmax_rows(z, &t2), &t2);
  t2.backward(s);
  for (double g : t2.grad(z)) CHECK(std::fabs(g) < 1e-12);

  CHECK_THROWS_AS(t2.backward(z), ArgumentError);
}

TEST_CASE("forward+backward deterministic bit-for-bit") {
  auto run = [](std::vector<double>& grads_out) {
    Rng rng(99);
    Tensor a = random_tensor({4, 4}, rng);
    Tensor b = random_tensor({4, 4}, rng);
    Tape tape;
    Tensor ta = tape.leaf(a);
    Tensor tb = tape.leaf(b);
    Tensor out = mean(gelu(matmul(softmax_rows(ta, &tape), tb, &tape), &tape), &tape);
    tape.backward(out);
    grads_out = tape.grad(ta);
    return out.item();
  };
  std::vector<double> g1, g2;
  const double v1 = run(g1);
  const double v2 = run(g2);
  CHECK(v1 == v2);
  CHECK(g1 == g2);
}

TEST_CASE("grad_check closed-form corners") {
  // quadratic x^T x: analytic gradient 2x, linear-op regime
  Rng rng(42);
  Tensor x0 = random_tensor({6}, rng);
  auto quad = [](const std::vector<Tensor>& leaves, Tape* tp) {
    return dot(leaves[0], leaves[0], tp);
  };
  auto rep = grad_check(quad, {x0});
  CHECK(rep.max_rel_err < 1e-8);

  // layer_norm composite
  Tensor xl = random_tensor({5}, rng);
  Tensor gl = random_tensor({5}, rng);
  Tensor bl = random_tensor({5}, rng);
  auto ln = [](const std::vector<Tensor>& leaves, Tape* tp) {
    Tensor y = layer_norm(leaves[0], leaves[1], leaves[2], 1e-5, tp);
    return mean(mul(y, y, tp), tp);
  };
  CHECK(grad_check(ln, {xl, gl, bl}).max_rel_err < 1e-5);
}

TEST_CASE("grad_check every primitive") {
  Rng rng(1234);
  const Tensor a = random_tensor({3, 4}, rng);
  const Tensor b = random_tensor({3, 4}, rng);
  const Tensor m = random_tensor({4, 3}, rng);
  const Tensor vec = random_tensor({4}, rng);

  struct Case {
    const char* name;
    ScalarFn fn;
    std::vector<Tensor> point;
    double tol;
  };
  std::vector<Case> cases;
  auto weigh = [](const Tensor& t, Tape* tp) {
    // deterministic non-uniform weighting so reductions do not mask errors
    Tensor w = Tensor::zeros(t.shape);
    for (int i = 0; i < w.size(); ++i) w.v[static_cast<std::size_t>(i)] = 0.3 + 0.1 * i;
    return sum(mul(t, w, tp), tp);
  };

  cases.push_back({"add", [&](const std::vector<Tensor>& l, Tape* tp) { return weigh(add(l[0], l[1], tp), tp); }, {a, b}, 1e-8});
  cases.push_back({"sub", [&](const std::vector<Tensor>& l, Tape* tp) { return weigh(sub(l[0], l[1], tp), tp); }, {a, b}, 1e-8});
  cases.push_back({"mul", [&](const std::vector<Tensor>& l, Tape* tp) { return weigh(mul(l[0], l[1], tp), tp); }, {a, b}, 1e-6});
  cases.push_back({"add_scalar", [&](const std::vector<Tensor>& l, Tape* tp) { return weigh(add_scalar(l[0], 1.7, tp), tp); }, {a}, 1e-8});
  cases.push_back({"mul_scalar", [&](const std::vector<Tensor>& l, Tape* tp) { return weigh(mul_scalar(l[0], -2.5, tp), tp); }, {a}, 1e-8});
  cases.push_back({"scale", [&](const std::vector<Tensor>& l, Tape* tp) { return weigh(scale(l[0], l[1], tp), tp); }, {a, Tensor::scalar(0.8)}, 1e-6});
  cases.push_back({"matmul", [&](const std::vector<Tensor>& l, Tape* tp) { return weigh(matmul(l[0], l[1], tp), tp); }, {a, m}, 1e-6});
  cases.push_back({"transpose", [&](const std::vector<Tensor>& l, Tape* tp) { return weigh(transpose(l[0], tp), tp); }, {a}, 1e-8});
  cases.push_back({"reshape", [&](const std::vector<Tensor>& l, Tape* tp) { return weigh(reshape(l[0], {4, 3}, tp), tp); }, {a}, 1e-8});
  cases.push_back({"concat_rows", [&](const std::vector<Tensor>& l, Tape* tp) { return weigh(concat_rows({l[0], l[1]}, tp), tp); }, {a, b}, 1e-8});
  cases.push_back({"concat_cols", [&](const std::vector<Tensor>& l, Tape* tp) { return weigh(concat_cols(l[0], l[1], tp), tp); }, {a, b}, 1e-8});
  cases.push_back({"slice_rows", [&](const std::vector<Tensor>& l, Tape* tp) { return weigh(slice_rows(l[0], 1, 3, tp), tp); }, {a}, 1e-8});
  cases.push_back({"slice_cols", [&](const std::vector<Tensor>& l, Tape* tp) { return weigh(slice_cols(l[0], 1, 3, tp), tp); }, {a}, 1e-8});
  cases.push_back({"add_rowvec", [&](const std::vector<Tensor>& l, Tape* tp) { return weigh(add_rowvec(l[0], l[1], tp), tp); }, {a, vec}, 1e-8});
  cases.push_back({"dot", [&](const std::vector<Tensor>& l, Tape* tp) { return dot(l[0], l[1], tp); }, {vec, random_tensor({4}, rng)}, 1e-7});
  cases.push_back({"sum", [&](const std::vector<Tensor>& l, Tape* tp) { return sum(l[0], tp); }, {a}, 1e-8});
  cases.push_back({"mean", [&](const std::vector<Tensor>& l, Tape* tp) { return mean(l[0], tp); }, {a}, 1e-8});
  cases.push_back({"row_sum", [&](const std::vector<Tensor>& l, Tape* tp) { return weigh(row_sum(l[0], tp), tp); }, {a}, 1e-8});
  cases.push_back({"row_mean", [&](const std::vector<Tensor>& l, Tape* tp) { return weigh(row_mean(l[0], tp), tp); }, {a}, 1e-8});
  cases.push_back({"softmax_rows", [&](const std::vector<Tensor>& l, Tape* tp) { return weigh(softmax_rows(l[0], tp), tp); }, {a}, 1e-6});
  cases.push_back({"logsumexp_rows", [&](const std::vector<Tensor>& l, Tape* tp) { return weigh(logsumexp_rows(l[0], tp), tp); }, {a}, 1e-6});
  cases.push_back({"layer_norm", [&](const std::vector<Tensor>& l, Tape* tp) { return weigh(layer_norm(l[0], l[1], l[2], 1e-5, tp), tp); }, {vec, random_tensor({4}, rng), random_tensor({4}, rng)}, 1e-5});
  cases.push_back({"gelu", [&](const std::vector<Tensor>& l, Tape* tp) { return weigh(gelu(l[0], tp), tp); }, {a}, 1e-6});
  cases.push_back({"sigmoid", [&](const std::vector<Tensor>& l, Tape* tp) { return weigh(sigmoid(l[0], tp), tp); }, {a}, 1e-6});
  cases.push_back({"exp", [&](const std::vector<Tensor>& l, Tape* tp) { return weigh(exp_(l[0], tp), tp); }, {a}, 1e-6});
  cases.push_back({"log", [&](const std::vector<Tensor>& l, Tape* tp) { return weigh(log_(l[0], tp), tp); }, {add_scalar(mul(a, a), 0.5)}, 1e-6});
  cases.push_back({"abs", [&](const std::vector<Tensor>& l, Tape* tp) { return weigh(abs_(l[0], tp), tp); }, {a}, 1e-6});
  cases.push_back({"l2_normalize", [&](const std::vector<Tensor>& l, Tape* tp) { return weigh(l2_normalize(l[0], tp), tp); }, {vec}, 1e-6});
  cases.push_back({"cosine_sim", [&](const std::vector<Tensor>& l, Tape* tp) { return cosine_sim(l[0], l[1], tp); }, {vec, random_tensor({4}, rng)}, 1e-6});
  cases.push_back({"neighborhood3x3", [&](const std::vector<Tensor>& l, Tape* tp) { return weigh(neighborhood3x3(l[0], tp), tp); }, {random_tensor({2, 3, 3}, rng)}, 1e-8});

  for (const Case& c : cases) {
    auto rep = grad_check(c.fn, c.point);
    INFO(c.name << " max rel err " << rep.max_rel_err);
    CHECK(rep.max_rel_err < c.tol);
  }
}
