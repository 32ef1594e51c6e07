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

#include "relifusion/tensor.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numeric>
#include <sstream>

namespace relifusion::ad {

namespace {

constexpr double kSqrt2 = 1.4142135623730950488016887242097;
constexpr double kInvSqrt2Pi = 0.39894228040143267793994605993438;

int shape_size(const std::vector<int>& s) {
  int n = 1;
  for (int e : s) {
    if (e <= 0) throw ArgumentError("tensor extent must be positive");
    n *= e;
  }
  return n;
}

bool any_traced(std::initializer_list<const Tensor*> ts) {
  for (const Tensor* t : ts) {
    if (t->traced()) return true;
  }
  return false;
}

// Traced inputs without a tape would silently detach gradients; refuse.
void require_tape(const char* op, Tape* tp,
                  std::initializer_list<const Tensor*> ts) {
  if (tp == nullptr && any_traced(ts)) {
    throw ArgumentError(std::string(op) + ": traced input but no tape");
  }
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape != b.shape) {
    throw DimensionError(std::string(op) + ": shape mismatch " + a.shape_str() +
                         " vs " + b.shape_str());
  }
}

double stable_sigmoid(double x) {
  double p;
  if (x >= 0.0) {
    p = 1.0 / (1.0 + std::exp(-x));
  } else {
    const double e = std::exp(x);
    p = e / (1.0 + e);
  }
  // Keep the output strictly inside (0,1) even when rounding lands on an
  // endpoint, so downstream logs stay finite.
  const double hi = 1.0 - DBL_EPSILON / 2.0;
  if (p > hi) p = hi;
  if (p < DBL_MIN) p = DBL_MIN;
  return p;
}

double gauss_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }
double gauss_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

}  // namespace

Tensor::Tensor(std::vector<int> s, std::vector<double> values)
    : shape(std::move(s)), v(std::move(values)) {
  if (shape_size(shape) != static_cast<int>(v.size())) {
    throw DimensionError("tensor value count does not match shape " +
                         shape_str());
  }
}

Tensor Tensor::zeros(std::vector<int> s) {
  const int n = shape_size(s);
  return Tensor(std::move(s), std::vector<double>(static_cast<std::size_t>(n), 0.0));
}

Tensor Tensor::full(std::vector<int> s, double value) {
  const int n = shape_size(s);
  return Tensor(std::move(s), std::vector<double>(static_cast<std::size_t>(n), value));
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

Tensor Tensor::randn(std::vector<int> s, Rng& rng, double sigma) {
  const int n = shape_size(s);
  std::vector<double> v(static_cast<std::size_t>(n));
  for (double& x : v) x = rng.normal(0.0, sigma);
  return Tensor(std::move(s), std::move(v));
}

int Tensor::size() const { return static_cast<int>(v.size()); }

int Tensor::rows() const {
  if (rank() == 1) return 1;
  if (rank() == 2) return shape[0];
  throw DimensionError("rows(): rank-" + std::to_string(rank()) + " tensor");
}

int Tensor::cols() const {
  if (rank() == 1) return shape[0];
  if (rank() == 2) return shape[1];
  throw DimensionError("cols(): rank-" + std::to_string(rank()) + " tensor");
}

double Tensor::item() const {
  if (size() != 1) throw DimensionError("item(): tensor is not scalar");
  return v[0];
}

double& Tensor::at(int i, int j) {
  return v[static_cast<std::size_t>(i) * shape[1] + j];
}
double Tensor::at(int i, int j) const {
  return v[static_cast<std::size_t>(i) * shape[1] + j];
}
double& Tensor::at(int c, int i, int j) {
  return v[(static_cast<std::size_t>(c) * shape[1] + i) * shape[2] + j];
}
double Tensor::at(int c, int i, int j) const {
  return v[(static_cast<std::size_t>(c) * shape[1] + i) * shape[2] + j];
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

void check_finite(const char* op, const Tensor& t) {
  for (double x : t.v) {
    if (!std::isfinite(x)) {
      throw NumericError(std::string(op) + ": non-finite value produced");
    }
  }
}

// ---------------------------------------------------------------------------
// Tape
// ---------------------------------------------------------------------------

Tensor Tape::leaf(const Tensor& t) {
  Tensor out = t;
  out.node = record(t.size(), [](const std::vector<double>&, Tape&) {});
  return out;
}

int Tape::record(int out_size, BackFn fn) {
  nodes_.push_back(Node{std::move(fn), out_size});
  return static_cast<int>(nodes_.size()) - 1;
}

std::vector<double>& Tape::grad_buf(int node, int size) {
  auto& g = grads_[static_cast<std::size_t>(node)];
  if (g.empty()) g.assign(static_cast<std::size_t>(size), 0.0);
  return g;
}

void Tape::backward(const Tensor& root) {
  if (!root.traced() || root.node >= node_count()) {
    throw ArgumentError("backward: root is not on this tape");
  }
  if (root.size() != 1) {
    throw ArgumentError("backward: root must be scalar, got " +
                        root.shape_str());
  }
  grads_.assign(nodes_.size(), {});
  grad_buf(root.node, 1)[0] = 1.0;
  for (int i = root.node; i >= 0; --i) {
    if (!grads_[static_cast<std::size_t>(i)].empty()) {
      nodes_[static_cast<std::size_t>(i)].back(
          grads_[static_cast<std::size_t>(i)], *this);
    }
  }
}

std::vector<double> Tape::grad(const Tensor& t) const {
  if (!t.traced()) throw ArgumentError("grad: tensor is not traced");
  const auto& g = grads_[static_cast<std::size_t>(t.node)];
  if (g.empty()) return std::vector<double>(static_cast<std::size_t>(t.size()), 0.0);
  return g;
}

// ---------------------------------------------------------------------------
// elementwise
// ---------------------------------------------------------------------------

namespace {

// Shared scaffolding for binary elementwise ops with constant local partials.
Tensor binary_ew(const char* name, const Tensor& a, const Tensor& b, Tape* tp,
                 double (*fwd)(double, double),
                 void (*bwd)(double a, double b, double g, double& da, double& db)) {
  require_tape(name, tp, {&a, &b});
  require_same_shape(name, a, b);
  Tensor out;
  out.shape = a.shape;
  out.v.resize(a.v.size());
  for (std::size_t i = 0; i < a.v.size(); ++i) out.v[i] = fwd(a.v[i], b.v[i]);
  check_finite(name, out);
  if (tp && (a.traced() || b.traced())) {
    const int pa = a.node, pb = b.node, n = a.size();
    std::vector<double> av = a.v, bv = b.v;
    out.node = tp->record(n, [=](const std::vector<double>& g, Tape& t) {
      std::vector<double>* ga = pa >= 0 ? &t.grad_buf(pa, n) : nullptr;
      std::vector<double>* gb = pb >= 0 ? &t.grad_buf(pb, n) : nullptr;
      for (int i = 0; i < n; ++i) {
        double da = 0.0, db = 0.0;
        bwd(av[static_cast<std::size_t>(i)], bv[static_cast<std::size_t>(i)],
            g[static_cast<std::size_t>(i)], da, db);
        if (ga) (*ga)[static_cast<std::size_t>(i)] += da;
        if (gb) (*gb)[static_cast<std::size_t>(i)] += db;
      }
    });
  }
  return out;
}

using UnaryFn = double (*)(double);
using UnaryGradFn = double (*)(double x, double y);  // dy/dx from x and y

Tensor unary_ew(const char* name, const Tensor& x, Tape* tp, UnaryFn fwd,
                UnaryGradFn dfn) {
  require_tape(name, tp, {&x});
  Tensor out;
  out.shape = x.shape;
  out.v.resize(x.v.size());
  for (std::size_t i = 0; i < x.v.size(); ++i) out.v[i] = fwd(x.v[i]);
  check_finite(name, out);
  if (tp && x.traced()) {
    const int p = x.node, n = x.size();
    std::vector<double> xv = x.v, yv = out.v;
    out.node = tp->record(n, [=](const std::vector<double>& g, Tape& t) {
      auto& gx = t.grad_buf(p, n);
      for (int i = 0; i < n; ++i) {
        gx[static_cast<std::size_t>(i)] +=
            g[static_cast<std::size_t>(i)] *
            dfn(xv[static_cast<std::size_t>(i)], yv[static_cast<std::size_t>(i)]);
      }
    });
  }
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b, Tape* tp) {
  return binary_ew(
      "add", a, b, tp, [](double x, double y) { return x + y; },
      [](double, double, double g, double& da, double& db) {
        da = g;
        db = g;
      });
}

Tensor sub(const Tensor& a, const Tensor& b, Tape* tp) {
  return binary_ew(
      "sub", a, b, tp, [](double x, double y) { return x - y; },
      [](double, double, double g, double& da, double& db) {
        da = g;
        db = -g;
      });
}

Tensor mul(const Tensor& a, const Tensor& b, Tape* tp) {
  return binary_ew(
      "mul", a, b, tp, [](double x, double y) { return x * y; },
      [](double x, double y, double g, double& da, double& db) {
        da = g * y;
        db = g * x;
      });
}

Tensor add_scalar(const Tensor& a, double c, Tape* tp) {
  require_tape("add_scalar", tp, {&a});
  Tensor out = a;
  out.node = -1;
  for (double& x : out.v) x += c;
  check_finite("add_scalar", out);
  if (tp && a.traced()) {
    const int p = a.node, n = a.size();
    out.node = tp->record(n, [=](const std::vector<double>& g, Tape& t) {
      auto& gx = t.grad_buf(p, n);
      for (int i = 0; i < n; ++i) gx[static_cast<std::size_t>(i)] += g[static_cast<std::size_t>(i)];
    });
  }
  return out;
}

Tensor mul_scalar(const Tensor& a, double c, Tape* tp) {
  require_tape("mul_scalar", tp, {&a});
  Tensor out = a;
  out.node = -1;
  for (double& x : out.v) x *= c;
  check_finite("mul_scalar", out);
  if (tp && a.traced()) {
    const int p = a.node, n = a.size();
    out.node = tp->record(n, [=](const std::vector<double>& g, Tape& t) {
      auto& gx = t.grad_buf(p, n);
      for (int i = 0; i < n; ++i) gx[static_cast<std::size_t>(i)] += c * g[static_cast<std::size_t>(i)];
    });
  }
  return out;
}

Tensor scale(const Tensor& x, const Tensor& s, Tape* tp) {
  require_tape("scale", tp, {&x, &s});
  if (s.size() != 1) throw DimensionError("scale: scalar tensor expected, got " + s.shape_str());
  const double sv = s.v[0];
  Tensor out = x;
  out.node = -1;
  for (double& e : out.v) e *= sv;
  check_finite("scale", out);
  if (tp && (x.traced() || s.traced())) {
    const int px = x.node, ps = s.node, n = x.size();
    std::vector<double> xv = x.v;
    out.node = tp->record(n, [=](const std::vector<double>& g, Tape& t) {
      if (px >= 0) {
        auto& gx = t.grad_buf(px, n);
        for (int i = 0; i < n; ++i) gx[static_cast<std::size_t>(i)] += sv * g[static_cast<std::size_t>(i)];
      }
      if (ps >= 0) {
        auto& gs = t.grad_buf(ps, 1);
        double acc = 0.0;
        for (int i = 0; i < n; ++i) acc += g[static_cast<std::size_t>(i)] * xv[static_cast<std::size_t>(i)];
        gs[0] += acc;
      }
    });
  }
  return out;
}

Tensor gelu(const Tensor& x, Tape* tp) {
  return unary_ew(
      "gelu", x, tp, [](double v) { return v * gauss_cdf(v); },
      [](double v, double) { return gauss_cdf(v) + v * gauss_pdf(v); });
}

Tensor sigmoid(const Tensor& x, Tape* tp) {
  return unary_ew(
      "sigmoid", x, tp, [](double v) { return stable_sigmoid(v); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor exp_(const Tensor& x, Tape* tp) {
  return unary_ew(
      "exp", x, tp, [](double v) { return std::exp(v); },
      [](double, double y) { return y; });
}

Tensor log_(const Tensor& x, Tape* tp) {
  return unary_ew(
      "log", x, tp, [](double v) { return std::log(v); },
      [](double v, double) { return 1.0 / v; });
}

Tensor abs_(const Tensor& x, Tape* tp) {
  return unary_ew(
      "abs", x, tp, [](double v) { return std::fabs(v); },
      [](double v, double) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

// ---------------------------------------------------------------------------
// structure
// ---------------------------------------------------------------------------

Tensor reshape(const Tensor& x, std::vector<int> shape, Tape* tp) {
  require_tape("reshape", tp, {&x});
  if (shape_size(shape) != x.size()) {
    throw DimensionError("reshape: cannot view " + x.shape_str() + " as " +
                         Tensor::zeros(shape).shape_str());
  }
  Tensor out;
  out.shape = std::move(shape);
  out.v = x.v;
  if (tp && x.traced()) {
    const int p = x.node, n = x.size();
    out.node = tp->record(n, [=](const std::vector<double>& g, Tape& t) {
      auto& gx = t.grad_buf(p, n);
      for (int i = 0; i < n; ++i) gx[static_cast<std::size_t>(i)] += g[static_cast<std::size_t>(i)];
    });
  }
  return out;
}

Tensor transpose(const Tensor& x, Tape* tp) {
  require_tape("transpose", tp, {&x});
  if (x.rank() != 2) throw DimensionError("transpose: rank-2 tensor expected, got " + x.shape_str());
  const int r = x.shape[0], c = x.shape[1];
  Tensor out = Tensor::zeros({c, r});
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out.at(j, i) = x.at(i, j);
  if (tp && x.traced()) {
    const int p = x.node;
    out.node = tp->record(r * c, [=](const std::vector<double>& g, Tape& t) {
      auto& gx = t.grad_buf(p, r * c);
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j)
          gx[static_cast<std::size_t>(i) * c + j] += g[static_cast<std::size_t>(j) * r + i];
    });
  }
  return out;
}

namespace {
std::pair<int, int> as_2d(const Tensor& t) {
  if (t.rank() == 1) return {1, t.shape[0]};
  if (t.rank() == 2) return {t.shape[0], t.shape[1]};
  throw DimensionError("expected rank-1 or rank-2 tensor, got " + t.shape_str());
}
}  // namespace

Tensor concat_rows(const std::vector<Tensor>& parts, Tape* tp) {
  if (parts.empty()) throw ArgumentError("concat_rows: no parts");
  for (const Tensor& p : parts) require_tape("concat_rows", tp, {&p});
  const int c = as_2d(parts[0]).second;
  int r = 0;
  for (const Tensor& p : parts) {
    auto [pr, pc] = as_2d(p);
    if (pc != c) throw DimensionError("concat_rows: column mismatch " + p.shape_str());
    r += pr;
  }
  Tensor out = Tensor::zeros({r, c});
  int row = 0;
  for (const Tensor& p : parts) {
    std::copy(p.v.begin(), p.v.end(), out.v.begin() + static_cast<std::ptrdiff_t>(row) * c);
    row += as_2d(p).first;
  }
  bool traced = false;
  for (const Tensor& p : parts) traced = traced || p.traced();
  if (tp && traced) {
    struct Part {
      int node;
      int rows;
    };
    std::vector<Part> meta;
    meta.reserve(parts.size());
    for (const Tensor& p : parts) meta.push_back({p.node, as_2d(p).first});
    out.node = tp->record(r * c, [=](const std::vector<double>& g, Tape& t) {
      int row0 = 0;
      for (const Part& m : meta) {
        if (m.node >= 0) {
          auto& gp = t.grad_buf(m.node, m.rows * c);
          for (int i = 0; i < m.rows * c; ++i)
            gp[static_cast<std::size_t>(i)] += g[static_cast<std::size_t>(row0) * c + i];
        }
        row0 += m.rows;
      }
    });
  }
  return out;
}

Tensor concat_cols(const Tensor& a, const Tensor& b, Tape* tp) {
  require_tape("concat_cols", tp, {&a, &b});
  auto [ar, ac] = as_2d(a);
  auto [br, bc] = as_2d(b);
  if (ar != br) throw DimensionError("concat_cols: row mismatch " + a.shape_str() + " vs " + b.shape_str());
  Tensor out = Tensor::zeros({ar, ac + bc});
  for (int i = 0; i < ar; ++i) {
    for (int j = 0; j < ac; ++j) out.at(i, j) = a.v[static_cast<std::size_t>(i) * ac + j];
    for (int j = 0; j < bc; ++j) out.at(i, ac + j) = b.v[static_cast<std::size_t>(i) * bc + j];
  }
  if (tp && (a.traced() || b.traced())) {
    const int pa = a.node, pb = b.node, r = ar, ca = ac, cb = bc;
    out.node = tp->record(r * (ca + cb), [=](const std::vector<double>& g, Tape& t) {
      if (pa >= 0) {
        auto& ga = t.grad_buf(pa, r * ca);
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < ca; ++j)
            ga[static_cast<std::size_t>(i) * ca + j] += g[static_cast<std::size_t>(i) * (ca + cb) + j];
      }
      if (pb >= 0) {
        auto& gb = t.grad_buf(pb, r * cb);
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < cb; ++j)
            gb[static_cast<std::size_t>(i) * cb + j] += g[static_cast<std::size_t>(i) * (ca + cb) + ca + j];
      }
    });
  }
  return out;
}

Tensor slice_rows(const Tensor& x, int r0, int r1, Tape* tp) {
  require_tape("slice_rows", tp, {&x});
  auto [r, c] = as_2d(x);
  if (r0 < 0 || r1 > r || r0 >= r1) throw ArgumentError("slice_rows: bad range");
  Tensor out = Tensor::zeros({r1 - r0, c});
  std::copy(x.v.begin() + static_cast<std::ptrdiff_t>(r0) * c,
            x.v.begin() + static_cast<std::ptrdiff_t>(r1) * c, out.v.begin());
  if (tp && x.traced()) {
    const int p = x.node, n = r * c;
    out.node = tp->record((r1 - r0) * c, [=](const std::vector<double>& g, Tape& t) {
      auto& gx = t.grad_buf(p, n);
      for (int i = 0; i < (r1 - r0) * c; ++i)
        gx[static_cast<std::size_t>(r0) * c + i] += g[static_cast<std::size_t>(i)];
    });
  }
  return out;
}

Tensor slice_cols(const Tensor& x, int c0, int c1, Tape* tp) {
  require_tape("slice_cols", tp, {&x});
  auto [r, c] = as_2d(x);
  if (c0 < 0 || c1 > c || c0 >= c1) throw ArgumentError("slice_cols: bad range");
  Tensor out = Tensor::zeros({r, c1 - c0});
  for (int i = 0; i < r; ++i)
    for (int j = c0; j < c1; ++j) out.at(i, j - c0) = x.v[static_cast<std::size_t>(i) * c + j];
  if (tp && x.traced()) {
    const int p = x.node, n = r * c, w = c1 - c0;
    out.node = tp->record(r * w, [=](const std::vector<double>& g, Tape& t) {
      auto& gx = t.grad_buf(p, n);
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < w; ++j)
          gx[static_cast<std::size_t>(i) * c + c0 + j] += g[static_cast<std::size_t>(i) * w + j];
    });
  }
  return out;
}

Tensor neighborhood3x3(const Tensor& x, Tape* tp) {
  require_tape("neighborhood3x3", tp, {&x});
  if (x.rank() != 3) throw DimensionError("neighborhood3x3: [C,H,W] expected, got " + x.shape_str());
  const int C = x.shape[0], H = x.shape[1], W = x.shape[2];
  Tensor out = Tensor::zeros({H * W, 9 * C});
  for (int i = 0; i < H; ++i) {
    for (int j = 0; j < W; ++j) {
      const int cell = i * W + j;
      for (int di = -1; di <= 1; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
          const int ii = i + di, jj = j + dj;
          if (ii < 0 || ii >= H || jj < 0 || jj >= W) continue;
          const int slot = (di + 1) * 3 + (dj + 1);
          for (int c = 0; c < C; ++c) out.at(cell, slot * C + c) = x.at(c, ii, jj);
        }
      }
    }
  }
  if (tp && x.traced()) {
    const int p = x.node, n = x.size();
    out.node = tp->record(H * W * 9 * C, [=](const std::vector<double>& g, Tape& t) {
      auto& gx = t.grad_buf(p, n);
      for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j) {
          const int cell = i * W + j;
          for (int di = -1; di <= 1; ++di)
            for (int dj = -1; dj <= 1; ++dj) {
              const int ii = i + di, jj = j + dj;
              if (ii < 0 || ii >= H || jj < 0 || jj >= W) continue;
              const int slot = (di + 1) * 3 + (dj + 1);
              for (int c = 0; c < C; ++c)
                gx[(static_cast<std::size_t>(c) * H + ii) * W + jj] +=
                    g[static_cast<std::size_t>(cell) * 9 * C + slot * C + c];
            }
        }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// linear algebra
// ---------------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b, Tape* tp) {
  require_tape("matmul", tp, {&a, &b});
  if (a.rank() != 2 || b.rank() != 2 || a.shape[1] != b.shape[0]) {
    throw DimensionError("matmul: incompatible shapes " + a.shape_str() +
                         " and " + b.shape_str());
  }
  const int m = a.shape[0], k = a.shape[1], n = b.shape[1];
  Tensor out = Tensor::zeros({m, n});
  for (int i = 0; i < m; ++i) {
    for (int kk = 0; kk < k; ++kk) {
      const double aik = a.at(i, kk);
      if (aik == 0.0) continue;
      const double* brow = b.v.data() + static_cast<std::size_t>(kk) * n;
      double* orow = out.v.data() + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) orow[j] += aik * brow[j];
    }
  }
  check_finite("matmul", out);
  if (tp && (a.traced() || b.traced())) {
    const int pa = a.node, pb = b.node;
    std::vector<double> av = a.v, bv = b.v;
    out.node = tp->record(m * n, [=](const std::vector<double>& g, Tape& t) {
      if (pa >= 0) {
        auto& ga = t.grad_buf(pa, m * k);
        for (int i = 0; i < m; ++i)
          for (int kk = 0; kk < k; ++kk) {
            double acc = 0.0;
            const double* brow = bv.data() + static_cast<std::size_t>(kk) * n;
            const double* grow = g.data() + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) acc += grow[j] * brow[j];
            ga[static_cast<std::size_t>(i) * k + kk] += acc;
          }
      }
      if (pb >= 0) {
        auto& gb = t.grad_buf(pb, k * n);
        for (int kk = 0; kk < k; ++kk)
          for (int i = 0; i < m; ++i) {
            const double aik = av[static_cast<std::size_t>(i) * k + kk];
            if (aik == 0.0) continue;
            const double* grow = g.data() + static_cast<std::size_t>(i) * n;
            double* gbrow = gb.data() + static_cast<std::size_t>(kk) * n;
            for (int j = 0; j < n; ++j) gbrow[j] += aik * grow[j];
          }
      }
    });
  }
  return out;
}

Tensor add_rowvec(const Tensor& m, const Tensor& v, Tape* tp) {
  require_tape("add_rowvec", tp, {&m, &v});
  auto [r, c] = as_2d(m);
  if (v.rank() != 1 || v.shape[0] != c) {
    throw DimensionError("add_rowvec: " + m.shape_str() + " + " + v.shape_str());
  }
  Tensor out = m;
  out.node = -1;
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out.v[static_cast<std::size_t>(i) * c + j] += v.v[static_cast<std::size_t>(j)];
  check_finite("add_rowvec", out);
  if (tp && (m.traced() || v.traced())) {
    const int pm = m.node, pv = v.node;
    out.node = tp->record(r * c, [=](const std::vector<double>& g, Tape& t) {
      if (pm >= 0) {
        auto& gm = t.grad_buf(pm, r * c);
        for (int i = 0; i < r * c; ++i) gm[static_cast<std::size_t>(i)] += g[static_cast<std::size_t>(i)];
      }
      if (pv >= 0) {
        auto& gv = t.grad_buf(pv, c);
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < c; ++j) gv[static_cast<std::size_t>(j)] += g[static_cast<std::size_t>(i) * c + j];
      }
    });
  }
  return out;
}

Tensor dot(const Tensor& u, const Tensor& v, Tape* tp) {
  require_tape("dot", tp, {&u, &v});
  if (u.rank() != 1 || v.rank() != 1 || u.shape != v.shape) {
    throw DimensionError("dot: " + u.shape_str() + " . " + v.shape_str());
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < u.v.size(); ++i) acc += u.v[i] * v.v[i];
  Tensor out = Tensor::scalar(acc);
  check_finite("dot", out);
  if (tp && (u.traced() || v.traced())) {
    const int pu = u.node, pv = v.node, n = u.size();
    std::vector<double> uv = u.v, vv = v.v;
    out.node = tp->record(1, [=](const std::vector<double>& g, Tape& t) {
      if (pu >= 0) {
        auto& gu = t.grad_buf(pu, n);
        for (int i = 0; i < n; ++i) gu[static_cast<std::size_t>(i)] += g[0] * vv[static_cast<std::size_t>(i)];
      }
      if (pv >= 0) {
        auto& gv = t.grad_buf(pv, n);
        for (int i = 0; i < n; ++i) gv[static_cast<std::size_t>(i)] += g[0] * uv[static_cast<std::size_t>(i)];
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// reductions
// ---------------------------------------------------------------------------

Tensor sum(const Tensor& x, Tape* tp) {
  require_tape("sum", tp, {&x});
  double acc = 0.0;
  for (double e : x.v) acc += e;
  Tensor out = Tensor::scalar(acc);
  check_finite("sum", out);
  if (tp && x.traced()) {
    const int p = x.node, n = x.size();
    out.node = tp->record(1, [=](const std::vector<double>& g, Tape& t) {
      auto& gx = t.grad_buf(p, n);
      for (int i = 0; i < n; ++i) gx[static_cast<std::size_t>(i)] += g[0];
    });
  }
  return out;
}

Tensor mean(const Tensor& x, Tape* tp) {
  return mul_scalar(sum(x, tp), 1.0 / x.size(), tp);
}

Tensor row_sum(const Tensor& x, Tape* tp) {
  require_tape("row_sum", tp, {&x});
  auto [r, c] = as_2d(x);
  Tensor out = Tensor::zeros({r});
  for (int i = 0; i < r; ++i) {
    double acc = 0.0;
    for (int j = 0; j < c; ++j) acc += x.v[static_cast<std::size_t>(i) * c + j];
    out.v[static_cast<std::size_t>(i)] = acc;
  }
  check_finite("row_sum", out);
  if (tp && x.traced()) {
    const int p = x.node;
    out.node = tp->record(r, [=](const std::vector<double>& g, Tape& t) {
      auto& gx = t.grad_buf(p, r * c);
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) gx[static_cast<std::size_t>(i) * c + j] += g[static_cast<std::size_t>(i)];
    });
  }
  return out;
}

Tensor row_mean(const Tensor& x, Tape* tp) {
  auto [r, c] = as_2d(x);
  (void)r;
  return mul_scalar(row_sum(x, tp), 1.0 / c, tp);
}

// ---------------------------------------------------------------------------
// row-wise nonlinear
// ---------------------------------------------------------------------------

Tensor softmax_rows(const Tensor& x, Tape* tp) {
  require_tape("softmax_rows", tp, {&x});
  for (double e : x.v) {
    if (!std::isfinite(e)) throw NumericError("softmax_rows: non-finite input");
  }
  auto [r, c] = as_2d(x);
  Tensor out = x;
  out.node = -1;
  for (int i = 0; i < r; ++i) {
    double* row = out.v.data() + static_cast<std::size_t>(i) * c;
    double m = row[0];
    for (int j = 1; j < c; ++j) m = std::max(m, row[j]);
    double z = 0.0;
    for (int j = 0; j < c; ++j) {
      row[j] = std::exp(row[j] - m);
      z += row[j];
    }
    for (int j = 0; j < c; ++j) row[j] /= z;
  }
  check_finite("softmax_rows", out);
  if (tp && x.traced()) {
    const int p = x.node;
    std::vector<double> s = out.v;
    out.node = tp->record(r * c, [=](const std::vector<double>& g, Tape& t) {
      auto& gx = t.grad_buf(p, r * c);
      for (int i = 0; i < r; ++i) {
        const double* srow = s.data() + static_cast<std::size_t>(i) * c;
        const double* grow = g.data() + static_cast<std::size_t>(i) * c;
        double inner = 0.0;
        for (int j = 0; j < c; ++j) inner += srow[j] * grow[j];
        for (int j = 0; j < c; ++j)
          gx[static_cast<std::size_t>(i) * c + j] += srow[j] * (grow[j] - inner);
      }
    });
  }
  return out;
}

Tensor logsumexp_rows(const Tensor& x, Tape* tp) {
  require_tape("logsumexp_rows", tp, {&x});
  auto [r, c] = as_2d(x);
  Tensor out = Tensor::zeros({r});
  std::vector<double> soft(static_cast<std::size_t>(r) * c);
  for (int i = 0; i < r; ++i) {
    const double* row = x.v.data() + static_cast<std::size_t>(i) * c;
    double m = row[0];
    for (int j = 1; j < c; ++j) m = std::max(m, row[j]);
    double z = 0.0;
    for (int j = 0; j < c; ++j) z += std::exp(row[j] - m);
    out.v[static_cast<std::size_t>(i)] = m + std::log(z);
    for (int j = 0; j < c; ++j)
      soft[static_cast<std::size_t>(i) * c + j] = std::exp(row[j] - m) / z;
  }
  check_finite("logsumexp_rows", out);
  if (tp && x.traced()) {
    const int p = x.node;
    out.node = tp->record(r, [=](const std::vector<double>& g, Tape& t) {
      auto& gx = t.grad_buf(p, r * c);
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j)
          gx[static_cast<std::size_t>(i) * c + j] +=
              g[static_cast<std::size_t>(i)] * soft[static_cast<std::size_t>(i) * c + j];
    });
  }
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps, Tape* tp) {
  require_tape("layer_norm", tp, {&x, &gain, &bias});
  auto [r, d] = as_2d(x);
  if (d < 2) throw ArgumentError("layer_norm: normalized axis must have >= 2 elements");
  if (gain.rank() != 1 || gain.shape[0] != d || bias.rank() != 1 || bias.shape[0] != d) {
    throw DimensionError("layer_norm: gain/bias must be [" + std::to_string(d) + "]");
  }
  Tensor out = x;
  out.node = -1;
  std::vector<double> ynorm(static_cast<std::size_t>(r) * d);
  std::vector<double> inv_sd(static_cast<std::size_t>(r));
  for (int i = 0; i < r; ++i) {
    const double* row = x.v.data() + static_cast<std::size_t>(i) * d;
    double mu = 0.0;
    for (int j = 0; j < d; ++j) mu += row[j];
    mu /= d;
    double var = 0.0;
    for (int j = 0; j < d; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= d;
    const double is = 1.0 / std::sqrt(var + eps);
    inv_sd[static_cast<std::size_t>(i)] = is;
    for (int j = 0; j < d; ++j) {
      const double y = (row[j] - mu) * is;
      ynorm[static_cast<std::size_t>(i) * d + j] = y;
      out.v[static_cast<std::size_t>(i) * d + j] = gain.v[static_cast<std::size_t>(j)] * y + bias.v[static_cast<std::size_t>(j)];
    }
  }
  check_finite("layer_norm", out);
  if (tp && (x.traced() || gain.traced() || bias.traced())) {
    const int px = x.node, pg = gain.node, pb = bias.node;
    std::vector<double> gv = gain.v;
    out.node = tp->record(r * d, [=](const std::vector<double>& g, Tape& t) {
      for (int i = 0; i < r; ++i) {
        const double* grow = g.data() + static_cast<std::size_t>(i) * d;
        const double* yrow = ynorm.data() + static_cast<std::size_t>(i) * d;
        if (px >= 0) {
          auto& gx = t.grad_buf(px, r * d);
          // h = gain .* gout; dx = (h - mean(h) - y * mean(h .* y)) * inv_sd
          double mh = 0.0, mhy = 0.0;
          for (int j = 0; j < d; ++j) {
            const double h = gv[static_cast<std::size_t>(j)] * grow[j];
            mh += h;
            mhy += h * yrow[j];
          }
          mh /= d;
          mhy /= d;
          for (int j = 0; j < d; ++j) {
            const double h = gv[static_cast<std::size_t>(j)] * grow[j];
            gx[static_cast<std::size_t>(i) * d + j] +=
                (h - mh - yrow[j] * mhy) * inv_sd[static_cast<std::size_t>(i)];
          }
        }
        if (pg >= 0) {
          auto& gg = t.grad_buf(pg, d);
          for (int j = 0; j < d; ++j) gg[static_cast<std::size_t>(j)] += grow[j] * yrow[j];
        }
        if (pb >= 0) {
          auto& gb = t.grad_buf(pb, d);
          for (int j = 0; j < d; ++j) gb[static_cast<std::size_t>(j)] += grow[j];
        }
      }
    });
  }
  return out;
}

Tensor l2_normalize(const Tensor& x, Tape* tp) {
  require_tape("l2_normalize", tp, {&x});
  if (x.rank() != 1) throw DimensionError("l2_normalize: vector expected, got " + x.shape_str());
  double nsq = 0.0;
  for (double e : x.v) nsq += e * e;
  const double n = std::sqrt(nsq);
  if (!(n > 1e-12)) throw DegenerateError("l2_normalize: near-zero norm");
  Tensor out = x;
  out.node = -1;
  for (double& e : out.v) e /= n;
  check_finite("l2_normalize", out);
  if (tp && x.traced()) {
    const int p = x.node, dn = x.size();
    std::vector<double> y = out.v;
    out.node = tp->record(dn, [=](const std::vector<double>& g, Tape& t) {
      auto& gx = t.grad_buf(p, dn);
      double gy = 0.0;
      for (int i = 0; i < dn; ++i) gy += g[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i)];
      for (int i = 0; i < dn; ++i)
        gx[static_cast<std::size_t>(i)] += (g[static_cast<std::size_t>(i)] - gy * y[static_cast<std::size_t>(i)]) / n;
    });
  }
  return out;
}

Tensor cosine_sim(const Tensor& u, const Tensor& v, Tape* tp) {
  require_tape("cosine_sim", tp, {&u, &v});
  if (u.rank() != 1 || v.rank() != 1 || u.shape != v.shape) {
    throw DimensionError("cosine_sim: " + u.shape_str() + " vs " + v.shape_str());
  }
  double uu = 0.0, vv = 0.0, uv = 0.0;
  for (std::size_t i = 0; i < u.v.size(); ++i) {
    uu += u.v[i] * u.v[i];
    vv += v.v[i] * v.v[i];
    uv += u.v[i] * v.v[i];
  }
  const double nu = std::sqrt(uu), nv = std::sqrt(vv);
  if (!(nu > 1e-12) || !(nv > 1e-12)) {
    throw DegenerateError("cosine_sim: degenerate vector (near-zero norm)");
  }
  const double c = uv / (nu * nv);
  Tensor out = Tensor::scalar(c);
  if (tp && (u.traced() || v.traced())) {
    const int pu = u.node, pv = v.node, n = u.size();
    std::vector<double> uvv = u.v, vvv = v.v;
    out.node = tp->record(1, [=](const std::vector<double>& g, Tape& t) {
      if (pu >= 0) {
        auto& gu = t.grad_buf(pu, n);
        for (int i = 0; i < n; ++i)
          gu[static_cast<std::size_t>(i)] +=
              g[0] * (vvv[static_cast<std::size_t>(i)] / (nu * nv) -
                      c * uvv[static_cast<std::size_t>(i)] / (nu * nu));
      }
      if (pv >= 0) {
        auto& gv = t.grad_buf(pv, n);
        for (int i = 0; i < n; ++i)
          gv[static_cast<std::size_t>(i)] +=
              g[0] * (uvv[static_cast<std::size_t>(i)] / (nu * nv) -
                      c * vvv[static_cast<std::size_t>(i)] / (nv * nv));
      }
    });
  }
  return out;
}

Tensor mlp_forward(const Tensor& x, const std::vector<LinearLayer>& layers,
                   Tape* tp) {
  if (layers.empty()) throw ArgumentError("mlp_forward: empty layer list");
  const bool was_vec = x.rank() == 1;
  Tensor h = was_vec ? reshape(x, {1, x.shape[0]}, tp) : x;
  for (std::size_t li = 0; li < layers.size(); ++li) {
    const LinearLayer& l = layers[li];
    if (h.cols() != l.w.rows() || l.w.rank() != 2) {
      throw DimensionError("mlp_forward: layer " + std::to_string(li) +
                           " expects input cols " + l.w.shape_str() +
                           ", got " + h.shape_str());
    }
    h = add_rowvec(matmul(h, l.w, tp), l.b, tp);
    if (li + 1 < layers.size()) h = gelu(h, tp);
  }
  return was_vec ? reshape(h, {h.cols()}, tp) : h;
}

}  // namespace relifusion::ad
