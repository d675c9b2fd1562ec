// Copyright 2026 The narjoint Authors.
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

#include "nar/ops.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

#include "nar/errors.h"
#include "nar/random.h"

namespace nar {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
Eigen::Map<RowMat<T>> asMat(Tensor& t) {
  return {t.data<T>(), t.rows(), t.cols()};
}

template <typename T>
Eigen::Map<const RowMat<T>> asMat(const Tensor& t) {
  return {t.data<T>(), t.rows(), t.cols()};
}

Graph& sameGraph(Var a, Var b, const char* op) {
  NAR_REQUIRE(a.valid() && b.valid(), std::string(op) + ": unbound input");
  NAR_REQUIRE(a.graph() == b.graph(), std::string(op) + ": inputs from different graphs");
  NAR_REQUIRE(a.precision() == b.precision(),
              std::string(op) + ": mixed precision inputs");
  return *a.graph();
}

enum class Broadcast { kSame, kRow, kScalar };

Broadcast broadcastKind(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return Broadcast::kSame;
  if (b.numel() == 1) return Broadcast::kScalar;
  if (b.numel() == a.cols() && b.rows() == 1) return Broadcast::kRow;
  throw ContractError(std::string(op) + ": shape mismatch " + toString(a.shape()) +
                      " vs " + toString(b.shape()));
}

// Shared body of the elementwise binary ops. `fwd(a, b)` gives the value,
// `dfa(a, b)` and `dfb(a, b)` the partial derivatives.
template <typename Fwd, typename Dfa, typename Dfb>
Var binary(const char* name, Var a, Var b, Fwd fwd, Dfa dfa, Dfb dfb) {
  Graph& g = sameGraph(a, b, name);
  const Broadcast kind = broadcastKind(a.value(), b.value(), name);
  const int ia = a.id();
  const int ib = b.id();
  Tensor out = Tensor::uninitialized(a.shape(), a.precision());
  dispatch(a.precision(), [&](auto zero) {
    using T = decltype(zero);
    const T* pa = a.value().data<T>();
    const T* pb = b.value().data<T>();
    T* po = out.data<T>();
    const std::int64_t n = out.numel();
    if (kind == Broadcast::kSame) {
      for (std::int64_t i = 0; i < n; ++i) po[i] = fwd(pa[i], pb[i]);
    } else if (kind == Broadcast::kScalar) {
      const T v = pb[0];
      for (std::int64_t i = 0; i < n; ++i) po[i] = fwd(pa[i], v);
    } else {
      const std::int64_t cols = a.cols();
      for (std::int64_t r = 0; r < n; r += cols) {
        for (std::int64_t c = 0; c < cols; ++c) po[r + c] = fwd(pa[r + c], pb[c]);
      }
    }
  });
  return g.record(name, {ia, ib}, std::move(out), [=](Graph& graph, int self) {
    dispatch(graph.precision(), [&](auto zero) {
      using T = decltype(zero);
      const Tensor& va = graph.value(ia);
      const Tensor& vb = graph.value(ib);
      const T* pa = va.data<T>();
      const T* pb = vb.data<T>();
      const T* go = graph.outGrad(self).data<T>();
      const std::int64_t cols = va.cols();
      const std::int64_t n = va.numel();
      if (graph.requiresGrad(ia)) {
        T* ga = graph.gradRef(ia).template data<T>();
        if (kind == Broadcast::kSame) {
          for (std::int64_t i = 0; i < n; ++i) ga[i] += go[i] * dfa(pa[i], pb[i]);
        } else if (kind == Broadcast::kScalar) {
          const T v = pb[0];
          for (std::int64_t i = 0; i < n; ++i) ga[i] += go[i] * dfa(pa[i], v);
        } else {
          for (std::int64_t r = 0; r < n; r += cols) {
            for (std::int64_t c = 0; c < cols; ++c) ga[r + c] += go[r + c] * dfa(pa[r + c], pb[c]);
          }
        }
      }
      if (graph.requiresGrad(ib)) {
        T* gb = graph.gradRef(ib).template data<T>();
        if (kind == Broadcast::kSame) {
          for (std::int64_t i = 0; i < n; ++i) gb[i] += go[i] * dfb(pa[i], pb[i]);
        } else if (kind == Broadcast::kScalar) {
          const T v = pb[0];
          T acc = gb[0];
          for (std::int64_t i = 0; i < n; ++i) acc += go[i] * dfb(pa[i], v);
          gb[0] = acc;
        } else {
          for (std::int64_t r = 0; r < n; r += cols) {
            for (std::int64_t c = 0; c < cols; ++c) gb[c] += go[r + c] * dfb(pa[r + c], pb[c]);
          }
        }
      }
    });
  });
}

// Shared body of elementwise unary ops; `deriv(x, y)` may use the input x
// and the output y.
template <typename Fwd, typename Deriv>
Var unary(const char* name, Var x, Fwd fwd, Deriv deriv) {
  NAR_REQUIRE(x.valid(), std::string(name) + ": unbound input");
  Graph& g = *x.graph();
  const int ix = x.id();
  Tensor out = Tensor::uninitialized(x.shape(), x.precision());
  dispatch(x.precision(), [&](auto zero) {
    using T = decltype(zero);
    const T* px = x.value().data<T>();
    T* po = out.data<T>();
    for (std::int64_t i = 0; i < out.numel(); ++i) po[i] = fwd(px[i]);
  });
  return g.record(name, {ix}, std::move(out), [=](Graph& graph, int self) {
    dispatch(graph.precision(), [&](auto zero) {
      using T = decltype(zero);
      const T* px = graph.value(ix).data<T>();
      const T* py = graph.value(self).data<T>();
      const T* go = graph.outGrad(self).data<T>();
      T* gx = graph.gradRef(ix).template data<T>();
      const std::int64_t n = graph.value(ix).numel();
      for (std::int64_t i = 0; i < n; ++i) gx[i] += go[i] * deriv(px[i], py[i]);
    });
  });
}

template <typename T>
T sigmoidOf(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

}  // namespace

Var matmul(Var a, Var b, bool transposeA, bool transposeB) {
  Graph& g = sameGraph(a, b, "matmul");
  NAR_REQUIRE(a.value().rank() == 2 && b.value().rank() == 2,
              "matmul: operands must be rank 2");
  const std::int64_t m = transposeA ? a.cols() : a.rows();
  const std::int64_t ka = transposeA ? a.rows() : a.cols();
  const std::int64_t kb = transposeB ? b.cols() : b.rows();
  const std::int64_t n = transposeB ? b.rows() : b.cols();
  NAR_REQUIRE(ka == kb, "matmul: inner dimensions differ, " + toString(a.shape()) +
                            (transposeA ? "^T" : "") + " * " + toString(b.shape()) +
                            (transposeB ? "^T" : ""));
  Tensor out = Tensor::uninitialized({m, n}, a.precision());
  dispatch(a.precision(), [&](auto zero) {
    using T = decltype(zero);
    auto A = asMat<T>(a.value());
    auto B = asMat<T>(b.value());
    auto C = asMat<T>(out);
    if (!transposeA && !transposeB) C.noalias() = A * B;
    if (!transposeA && transposeB) C.noalias() = A * B.transpose();
    if (transposeA && !transposeB) C.noalias() = A.transpose() * B;
    if (transposeA && transposeB) C.noalias() = A.transpose() * B.transpose();
  });
  const int ia = a.id();
  const int ib = b.id();
  return g.record("matmul", {ia, ib}, std::move(out),
                  [=](Graph& graph, int self) {
    dispatch(graph.precision(), [&](auto zero) {
      using T = decltype(zero);
      auto A = asMat<T>(graph.value(ia));
      auto B = asMat<T>(graph.value(ib));
      auto G = asMat<T>(graph.outGrad(self));
      if (graph.requiresGrad(ia)) {
        auto dA = asMat<T>(graph.gradRef(ia));
        if (!transposeA && !transposeB) dA.noalias() += G * B.transpose();
        if (!transposeA && transposeB) dA.noalias() += G * B;
        if (transposeA && !transposeB) dA.noalias() += B * G.transpose();
        if (transposeA && transposeB) dA.noalias() += B.transpose() * G.transpose();
      }
      if (graph.requiresGrad(ib)) {
        auto dB = asMat<T>(graph.gradRef(ib));
        if (!transposeA && !transposeB) dB.noalias() += A.transpose() * G;
        if (!transposeA && transposeB) dB.noalias() += G.transpose() * A;
        if (transposeA && !transposeB) dB.noalias() += A * G;
        if (transposeA && transposeB) dB.noalias() += G.transpose() * A.transpose();
      }
    });
  });
}

Var add(Var a, Var b) {
  return binary(
      "add", a, b, [](auto x, auto y) { return x + y; },
      [](auto x, auto) { return decltype(x)(1); },
      [](auto x, auto) { return decltype(x)(1); });
}

Var sub(Var a, Var b) {
  return binary(
      "sub", a, b, [](auto x, auto y) { return x - y; },
      [](auto x, auto) { return decltype(x)(1); },
      [](auto x, auto) { return decltype(x)(-1); });
}

Var mul(Var a, Var b) {
  return binary(
      "mul", a, b, [](auto x, auto y) { return x * y; },
      [](auto, auto y) { return y; }, [](auto x, auto) { return x; });
}

Var scale(Var a, double factor) {
  return unary(
      "scale", a, [factor](auto x) { return static_cast<decltype(x)>(x * factor); },
      [factor](auto x, auto) { return static_cast<decltype(x)>(factor); });
}

Var sigmoid(Var x) {
  return unary(
      "sigmoid", x, [](auto v) { return sigmoidOf(v); },
      [](auto, auto y) { return y * (decltype(y)(1) - y); });
}

Var swish(Var x) {
  return unary(
      "swish", x, [](auto v) { return v * sigmoidOf(v); },
      [](auto v, auto) {
        const auto s = sigmoidOf(v);
        return s * (decltype(v)(1) + v * (decltype(v)(1) - s));
      });
}

Var gelu(Var x) {
  return unary(
      "gelu", x,
      [](auto v) {
        using T = decltype(v);
        return T(0.5) * v * (T(1) + std::erf(v / std::numbers::sqrt2_v<T>));
      },
      [](auto v, auto) {
        using T = decltype(v);
        const T cdf = T(0.5) * (T(1) + std::erf(v / std::numbers::sqrt2_v<T>));
        const T pdf = std::exp(T(-0.5) * v * v) * std::numbers::inv_sqrtpi_v<T> /
                      std::numbers::sqrt2_v<T>;
        return cdf + v * pdf;
      });
}

Var glu(Var x) {
  NAR_REQUIRE(x.value().rank() == 2 && x.cols() % 2 == 0,
              "glu: needs an even column count, got " + toString(x.shape()));
  const std::int64_t half = x.cols() / 2;
  Var first = sliceCols(x, 0, half);
  Var second = sliceCols(x, half, half);
  return mul(first, sigmoid(second));
}

Var softmax(Var x) {
  NAR_REQUIRE(x.valid(), "softmax: unbound input");
  Graph& g = *x.graph();
  const int ix = x.id();
  Tensor out(x.shape(), x.precision());
  dispatch(x.precision(), [&](auto zero) {
    using T = decltype(zero);
    auto X = asMat<T>(x.value());
    auto Y = asMat<T>(out);
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
      const T mx = X.row(r).maxCoeff();
      Y.row(r) = (X.row(r).array() - mx).exp();
      Y.row(r) /= Y.row(r).sum();
    }
  });
  return g.record("softmax", {ix}, std::move(out), [=](Graph& graph, int self) {
    dispatch(graph.precision(), [&](auto zero) {
      using T = decltype(zero);
      auto Y = asMat<T>(graph.value(self));
      auto G = asMat<T>(graph.outGrad(self));
      auto dX = asMat<T>(graph.gradRef(ix));
      for (Eigen::Index r = 0; r < Y.rows(); ++r) {
        const T dot = Y.row(r).dot(G.row(r));
        dX.row(r).array() += Y.row(r).array() * (G.row(r).array() - dot);
      }
    });
  });
}

Var logSoftmax(Var x) {
  NAR_REQUIRE(x.valid(), "logSoftmax: unbound input");
  Graph& g = *x.graph();
  const int ix = x.id();
  Tensor out(x.shape(), x.precision());
  dispatch(x.precision(), [&](auto zero) {
    using T = decltype(zero);
    auto X = asMat<T>(x.value());
    auto Y = asMat<T>(out);
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
      const T mx = X.row(r).maxCoeff();
      const T lse = mx + std::log((X.row(r).array() - mx).exp().sum());
      Y.row(r).array() = X.row(r).array() - lse;
    }
  });
  return g.record("log_softmax", {ix}, std::move(out), [=](Graph& graph, int self) {
    dispatch(graph.precision(), [&](auto zero) {
      using T = decltype(zero);
      auto Y = asMat<T>(graph.value(self));
      auto G = asMat<T>(graph.outGrad(self));
      auto dX = asMat<T>(graph.gradRef(ix));
      for (Eigen::Index r = 0; r < Y.rows(); ++r) {
        const T total = G.row(r).sum();
        dX.row(r).array() += G.row(r).array() - Y.row(r).array().exp() * total;
      }
    });
  });
}

Var layerNorm(Var x, Var gamma, Var beta, double eps) {
  Graph& g = sameGraph(x, gamma, "layer_norm");
  sameGraph(x, beta, "layer_norm");
  const std::int64_t cols = x.cols();
  NAR_REQUIRE(gamma.numel() == cols && beta.numel() == cols,
              "layer_norm: gamma/beta must have " + std::to_string(cols) + " entries");
  const int ix = x.id();
  const int igm = gamma.id();
  const int ibt = beta.id();
  const std::int64_t rows = x.rows();
  Tensor out(x.shape(), x.precision());
  // Normalized activations and inverse std, kept for backward.
  auto xhat = std::make_shared<Tensor>(x.shape(), x.precision());
  auto invStd = std::make_shared<std::vector<double>>(static_cast<size_t>(rows));
  dispatch(x.precision(), [&](auto zero) {
    using T = decltype(zero);
    auto X = asMat<T>(x.value());
    auto H = asMat<T>(*xhat);
    auto Y = asMat<T>(out);
    const T* gm = gamma.value().data<T>();
    const T* bt = beta.value().data<T>();
    for (std::int64_t r = 0; r < rows; ++r) {
      const T mu = X.row(r).mean();
      const T var = (X.row(r).array() - mu).square().mean();
      const T inv = T(1) / std::sqrt(var + static_cast<T>(eps));
      (*invStd)[static_cast<size_t>(r)] = inv;
      H.row(r).array() = (X.row(r).array() - mu) * inv;
      for (std::int64_t c = 0; c < cols; ++c) Y(r, c) = gm[c] * H(r, c) + bt[c];
    }
  });
  return g.record("layer_norm", {ix, igm, ibt}, std::move(out),
                  [=](Graph& graph, int self) {
    dispatch(graph.precision(), [&](auto zero) {
      using T = decltype(zero);
      auto H = asMat<T>(static_cast<const Tensor&>(*xhat));
      auto G = asMat<T>(graph.outGrad(self));
      const T* gm = graph.value(igm).data<T>();
      if (graph.requiresGrad(igm)) {
        T* dg = graph.gradRef(igm).template data<T>();
        for (std::int64_t r = 0; r < rows; ++r)
          for (std::int64_t c = 0; c < cols; ++c) dg[c] += G(r, c) * H(r, c);
      }
      if (graph.requiresGrad(ibt)) {
        T* db = graph.gradRef(ibt).template data<T>();
        for (std::int64_t r = 0; r < rows; ++r)
          for (std::int64_t c = 0; c < cols; ++c) db[c] += G(r, c);
      }
      if (graph.requiresGrad(ix)) {
        auto dX = asMat<T>(graph.gradRef(ix));
        std::vector<T> dh(static_cast<size_t>(cols));
        for (std::int64_t r = 0; r < rows; ++r) {
          T meanDh = 0;
          T meanDhH = 0;
          for (std::int64_t c = 0; c < cols; ++c) {
            dh[c] = G(r, c) * gm[c];
            meanDh += dh[c];
            meanDhH += dh[c] * H(r, c);
          }
          meanDh /= static_cast<T>(cols);
          meanDhH /= static_cast<T>(cols);
          const T inv = static_cast<T>((*invStd)[static_cast<size_t>(r)]);
          for (std::int64_t c = 0; c < cols; ++c) {
            dX(r, c) += inv * (dh[c] - meanDh - H(r, c) * meanDhH);
          }
        }
      }
    });
  });
}

Var depthwiseConv1d(Var x, Var kernel, Var bias) {
  Graph& g = sameGraph(x, kernel, "depthwise_conv1d");
  sameGraph(x, bias, "depthwise_conv1d");
  const std::int64_t len = x.rows();
  const std::int64_t ch = x.cols();
  const std::int64_t k = kernel.rows();
  NAR_REQUIRE(kernel.value().rank() == 2 && kernel.cols() == ch && k % 2 == 1,
              "depthwise_conv1d: kernel must be K x C with odd K, got " +
                  toString(kernel.shape()));
  NAR_REQUIRE(bias.numel() == ch, "depthwise_conv1d: bias must have C entries");
  const std::int64_t half = k / 2;
  const int ix = x.id();
  const int iw = kernel.id();
  const int ib = bias.id();
  Tensor out = Tensor::uninitialized(x.shape(), x.precision());
  dispatch(x.precision(), [&](auto zero) {
    using T = decltype(zero);
    const T* px = x.value().data<T>();
    const T* pw = kernel.value().data<T>();
    const T* pb = bias.value().data<T>();
    T* __restrict po = out.data<T>();
    for (std::int64_t t = 0; t < len; ++t) {
      T* __restrict row = po + t * ch;
      for (std::int64_t c = 0; c < ch; ++c) row[c] = pb[c];
      for (std::int64_t j = 0; j < k; ++j) {
        const std::int64_t src = t + j - half;
        if (src < 0 || src >= len) continue;
        const T* xr = px + src * ch;
        const T* wr = pw + j * ch;
        for (std::int64_t c = 0; c < ch; ++c) row[c] += wr[c] * xr[c];
      }
    }
  });
  return g.record("depthwise_conv1d", {ix, iw, ib}, std::move(out),
                  [=](Graph& graph, int self) {
    dispatch(graph.precision(), [&](auto zero) {
      using T = decltype(zero);
      const T* px = graph.value(ix).data<T>();
      const T* pw = graph.value(iw).data<T>();
      const T* go = graph.outGrad(self).data<T>();
      T* __restrict gx = graph.requiresGrad(ix) ? graph.gradRef(ix).template data<T>() : nullptr;
      T* __restrict gw = graph.requiresGrad(iw) ? graph.gradRef(iw).template data<T>() : nullptr;
      T* __restrict gb = graph.requiresGrad(ib) ? graph.gradRef(ib).template data<T>() : nullptr;
      for (std::int64_t t = 0; t < len; ++t) {
        const T* gr = go + t * ch;
        if (gb) {
          for (std::int64_t c = 0; c < ch; ++c) gb[c] += gr[c];
        }
        for (std::int64_t j = 0; j < k; ++j) {
          const std::int64_t src = t + j - half;
          if (src < 0 || src >= len) continue;
          if (gx) {
            for (std::int64_t c = 0; c < ch; ++c) gx[src * ch + c] += gr[c] * pw[j * ch + c];
          }
          if (gw) {
            for (std::int64_t c = 0; c < ch; ++c) gw[j * ch + c] += gr[c] * px[src * ch + c];
          }
        }
      }
    });
  });
}

Var embedding(Var table, std::span<const int> ids) {
  return gatherRows(table, ids);
}

Var gatherRows(Var x, std::span<const int> rows) {
  NAR_REQUIRE(x.valid() && x.value().rank() == 2, "gather_rows: needs a rank-2 input");
  Graph& g = *x.graph();
  const std::int64_t cols = x.cols();
  for (int r : rows) {
    NAR_REQUIRE(r >= 0 && r < x.rows(), "gather_rows: row index " + std::to_string(r) +
                                            " out of range for " + toString(x.shape()));
  }
  auto index = std::make_shared<std::vector<int>>(rows.begin(), rows.end());
  const int ix = x.id();
  Tensor out = Tensor::uninitialized({static_cast<std::int64_t>(rows.size()), cols}, x.precision());
  dispatch(x.precision(), [&](auto zero) {
    using T = decltype(zero);
    const T* px = x.value().data<T>();
    T* po = out.data<T>();
    for (size_t i = 0; i < index->size(); ++i) {
      std::copy_n(px + (*index)[i] * cols, cols, po + static_cast<std::int64_t>(i) * cols);
    }
  });
  return g.record("gather_rows", {ix}, std::move(out), [=](Graph& graph, int self) {
    dispatch(graph.precision(), [&](auto zero) {
      using T = decltype(zero);
      const T* go = graph.outGrad(self).data<T>();
      T* gx = graph.gradRef(ix).template data<T>();
      for (size_t i = 0; i < index->size(); ++i) {
        T* dst = gx + (*index)[i] * cols;
        const T* src = go + static_cast<std::int64_t>(i) * cols;
        for (std::int64_t c = 0; c < cols; ++c) dst[c] += src[c];
      }
    });
  });
}

Var sliceCols(Var x, std::int64_t start, std::int64_t count) {
  NAR_REQUIRE(x.valid() && x.value().rank() == 2, "slice_cols: needs a rank-2 input");
  NAR_REQUIRE(start >= 0 && count >= 0 && start + count <= x.cols(),
              "slice_cols: range out of bounds for " + toString(x.shape()));
  Graph& g = *x.graph();
  const int ix = x.id();
  const std::int64_t rows = x.rows();
  const std::int64_t cols = x.cols();
  Tensor out = Tensor::uninitialized({rows, count}, x.precision());
  dispatch(x.precision(), [&](auto zero) {
    using T = decltype(zero);
    asMat<T>(out) = asMat<T>(x.value()).middleCols(start, count);
  });
  return g.record("slice_cols", {ix}, std::move(out), [=](Graph& graph, int self) {
    dispatch(graph.precision(), [&](auto zero) {
      using T = decltype(zero);
      asMat<T>(graph.gradRef(ix)).middleCols(start, count) += asMat<T>(graph.outGrad(self));
    });
    (void)cols;
  });
}

Var concatCols(std::span<const Var> parts) {
  NAR_REQUIRE(!parts.empty(), "concat_cols: no inputs");
  Graph& g = *parts[0].graph();
  const std::int64_t rows = parts[0].rows();
  std::int64_t total = 0;
  std::vector<int> ids;
  std::vector<std::int64_t> widths;
  for (const Var& p : parts) {
    sameGraph(parts[0], p, "concat_cols");
    NAR_REQUIRE(p.value().rank() == 2 && p.rows() == rows,
                "concat_cols: row counts differ");
    ids.push_back(p.id());
    widths.push_back(p.cols());
    total += p.cols();
  }
  Tensor out = Tensor::uninitialized({rows, total}, parts[0].precision());
  dispatch(out.precision(), [&](auto zero) {
    using T = decltype(zero);
    auto O = asMat<T>(out);
    std::int64_t offset = 0;
    for (const Var& p : parts) {
      O.middleCols(offset, p.cols()) = asMat<T>(p.value());
      offset += p.cols();
    }
  });
  return g.record("concat_cols", ids, std::move(out), [=](Graph& graph, int self) {
    dispatch(graph.precision(), [&](auto zero) {
      using T = decltype(zero);
      auto G = asMat<T>(graph.outGrad(self));
      std::int64_t offset = 0;
      for (size_t i = 0; i < ids.size(); ++i) {
        if (graph.requiresGrad(ids[i])) {
          asMat<T>(graph.gradRef(ids[i])) += G.middleCols(offset, widths[i]);
        }
        offset += widths[i];
      }
    });
  });
}

Var dropout(Var x, double rate) {
  NAR_REQUIRE(rate >= 0.0 && rate < 1.0, "dropout: rate must be in [0,1)");
  Graph& g = *x.graph();
  if (!g.training() || rate == 0.0) return x;
  Rng rng(g.nextSeed());
  std::vector<double> maskValues(static_cast<size_t>(x.numel()));
  const double keep = 1.0 - rate;
  for (auto& m : maskValues) m = rng.uniform() < keep ? 1.0 / keep : 0.0;
  Var mask = g.constant(Tensor::fromValues(x.shape(), maskValues, x.precision()));
  return mul(x, mask);
}

Var sum(Var x) {
  NAR_REQUIRE(x.valid(), "sum: unbound input");
  Graph& g = *x.graph();
  const int ix = x.id();
  Tensor out({1}, x.precision());
  dispatch(x.precision(), [&](auto zero) {
    using T = decltype(zero);
    const T* px = x.value().data<T>();
    T acc = 0;
    for (std::int64_t i = 0; i < x.numel(); ++i) acc += px[i];
    out.data<T>()[0] = acc;
  });
  return g.record("sum", {ix}, std::move(out), [=](Graph& graph, int self) {
    dispatch(graph.precision(), [&](auto zero) {
      using T = decltype(zero);
      const T go = graph.outGrad(self).data<T>()[0];
      Tensor& gx = graph.gradRef(ix);
      T* p = gx.data<T>();
      for (std::int64_t i = 0; i < gx.numel(); ++i) p[i] += go;
    });
  });
}

Var mean(Var x) {
  NAR_REQUIRE(x.numel() > 0, "mean: empty input");
  return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

Var crossEntropy(Var logits, std::span<const int> targets,
                 std::span<const double> weights) {
  NAR_REQUIRE(logits.valid() && logits.value().rank() == 2,
              "cross_entropy: logits must be rank 2");
  const std::int64_t rows = logits.rows();
  const std::int64_t classes = logits.cols();
  NAR_REQUIRE(static_cast<std::int64_t>(targets.size()) == rows,
              "cross_entropy: one target per row required");
  NAR_REQUIRE(weights.empty() || static_cast<std::int64_t>(weights.size()) == rows,
              "cross_entropy: one weight per row required");
  for (int t : targets) {
    NAR_REQUIRE(t >= 0 && t < classes, "cross_entropy: target " + std::to_string(t) +
                                           " outside [0," + std::to_string(classes) + ")");
  }
  std::vector<double> w(static_cast<size_t>(rows), 1.0);
  if (!weights.empty()) w.assign(weights.begin(), weights.end());
  double total = 0.0;
  for (double v : w) total += v;
  Graph& g = *logits.graph();
  if (total == 0.0) return g.constant(Tensor::scalar(0.0, logits.precision()));

  Var logp = logSoftmax(logits);
  std::vector<double> pick(static_cast<size_t>(rows * classes), 0.0);
  for (std::int64_t r = 0; r < rows; ++r) {
    pick[static_cast<size_t>(r * classes + targets[static_cast<size_t>(r)])] =
        -w[static_cast<size_t>(r)] / total;
  }
  Var selector = g.constant(Tensor::fromValues(logits.shape(), pick, logits.precision()));
  return sum(mul(logp, selector));
}

Var l1Loss(Var prediction, Var target) {
  NAR_REQUIRE(prediction.shape() == target.shape(),
              "l1_loss: shape mismatch " + toString(prediction.shape()) + " vs " +
                  toString(target.shape()));
  Var diff = sub(prediction, target);
  Var absDiff = unary(
      "abs", diff, [](auto v) { return std::abs(v); },
      [](auto v, auto) {
        using T = decltype(v);
        return v > T(0) ? T(1) : (v < T(0) ? T(-1) : T(0));
      });
  return mean(absDiff);
}

}  // namespace nar
