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

#ifndef RELIFUSION_TENSOR_HPP
#define RELIFUSION_TENSOR_HPP

#include <functional>
#include <string>
#include <vector>

#include "relifusion/errors.hpp"
#include "relifusion/rng.hpp"

namespace relifusion::ad {

class Tape;

// Dense row-major double tensor. A tensor is either a constant (node < 0) or
// the output of a taped op (node indexes into the tape that produced it).
// Values are immutable once produced by an op; training code mutates only its
// own master copies of parameters between steps.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> v;
  int node = -1;

  Tensor() = default;
  Tensor(std::vector<int> s, std::vector<double> values);

  static Tensor zeros(std::vector<int> s);
  static Tensor full(std::vector<int> s, double value);
  static Tensor scalar(double value);
  // Gaussian init, sigma scaled by the caller.
  static Tensor randn(std::vector<int> s, Rng& rng, double sigma);

  int size() const;
  int rank() const { return static_cast<int>(shape.size()); }
  int rows() const;
  int cols() const;
  bool traced() const { return node >= 0; }

  double item() const;
  double& at(int i) { return v[static_cast<std::size_t>(i)]; }
  double at(int i) const { return v[static_cast<std::size_t>(i)]; }
  double& at(int i, int j);
  double at(int i, int j) const;
  double& at(int c, int i, int j);
  double at(int c, int i, int j) const;

  std::string shape_str() const;
};

// Reverse-mode tape. Rebuilt per forward pass (define-by-run). Ops record a
// closure that routes the output gradient to the gradients of traced parents;
// a single reverse sweep visits every node once, in inverse creation order.
class Tape {
 public:
  using BackFn = std::function<void(const std::vector<double>& gout, Tape&)>;

  // Registers a leaf; the returned tensor carries the same values but is
  // traced so downstream ops propagate gradients to it.
  Tensor leaf(const Tensor& t);

  // Runs the reverse sweep from a scalar root.
  void backward(const Tensor& root);

  // Gradient of the last backward() w.r.t. tensor t (zeros if untouched).
  std::vector<double> grad(const Tensor& t) const;

  // For op implementations (including custom ops in other modules).
  int record(int out_size, BackFn fn);
  std::vector<double>& grad_buf(int node, int size);

  int node_count() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    BackFn back;
    int size;
  };
  std::vector<Node> nodes_;
  std::vector<std::vector<double>> grads_;
};

// Throws NumericError if any value is non-finite; every op calls this on its
// output so non-finite values never propagate silently.
void check_finite(const char* op, const Tensor& t);

// ---- elementwise ----
Tensor add(const Tensor& a, const Tensor& b, Tape* tp = nullptr);
Tensor sub(const Tensor& a, const Tensor& b, Tape* tp = nullptr);
Tensor mul(const Tensor& a, const Tensor& b, Tape* tp = nullptr);
Tensor add_scalar(const Tensor& a, double c, Tape* tp = nullptr);
Tensor mul_scalar(const Tensor& a, double c, Tape* tp = nullptr);
// out = s * x where s is a 1-element (possibly traced) tensor.
Tensor scale(const Tensor& x, const Tensor& s, Tape* tp = nullptr);
Tensor gelu(const Tensor& x, Tape* tp = nullptr);
Tensor sigmoid(const Tensor& x, Tape* tp = nullptr);
Tensor exp_(const Tensor& x, Tape* tp = nullptr);
Tensor log_(const Tensor& x, Tape* tp = nullptr);
Tensor abs_(const Tensor& x, Tape* tp = nullptr);

// ---- structure ----
Tensor reshape(const Tensor& x, std::vector<int> shape, Tape* tp = nullptr);
Tensor transpose(const Tensor& x, Tape* tp = nullptr);
Tensor concat_rows(const std::vector<Tensor>& parts, Tape* tp = nullptr);
Tensor concat_cols(const Tensor& a, const Tensor& b, Tape* tp = nullptr);
Tensor slice_rows(const Tensor& x, int r0, int r1, Tape* tp = nullptr);
Tensor slice_cols(const Tensor& x, int c0, int c1, Tape* tp = nullptr);
// [C,H,W] -> [H*W, 9*C]; 3x3 neighborhood per cell, zero padded at borders.
Tensor neighborhood3x3(const Tensor& x, Tape* tp = nullptr);

// ---- linear algebra ----
Tensor matmul(const Tensor& a, const Tensor& b, Tape* tp = nullptr);
Tensor add_rowvec(const Tensor& m, const Tensor& v, Tape* tp = nullptr);
Tensor dot(const Tensor& u, const Tensor& v, Tape* tp = nullptr);

// ---- reductions ----
Tensor sum(const Tensor& x, Tape* tp = nullptr);
Tensor mean(const Tensor& x, Tape* tp = nullptr);
Tensor row_sum(const Tensor& x, Tape* tp = nullptr);
Tensor row_mean(const Tensor& x, Tape* tp = nullptr);

// ---- row-wise nonlinear ----
Tensor softmax_rows(const Tensor& x, Tape* tp = nullptr);
Tensor logsumexp_rows(const Tensor& x, Tape* tp = nullptr);

// Normalizes over the last axis (vector, or each row of a matrix), then
// applies elementwise gain and bias. Constant input maps to zero pre-affine
// output (eps sits inside the square root).
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps = 1e-5, Tape* tp = nullptr);

Tensor l2_normalize(const Tensor& x, Tape* tp = nullptr);
Tensor cosine_sim(const Tensor& u, const Tensor& v, Tape* tp = nullptr);

// ---- small MLP ----
struct LinearLayer {
  Tensor w;  // [in, out]
  Tensor b;  // [out]
};

// Affine-GELU-...-affine chain; the last layer has no activation. x is a
// vector [in] or a batch of rows [n, in].
Tensor mlp_forward(const Tensor& x, const std::vector<LinearLayer>& layers,
                   Tape* tp = nullptr);

}  // namespace relifusion::ad

#endif  // RELIFUSION_TENSOR_HPP
