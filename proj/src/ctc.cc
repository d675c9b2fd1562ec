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

#include "nar/ctc.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "nar/errors.h"

namespace nar {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double logAdd(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

struct LogProbs {
  std::int64_t frames = 0;
  std::int64_t vocab = 0;
  std::vector<double> values;

  double operator()(std::int64_t t, std::int64_t k) const {
    return values[static_cast<size_t>(t * vocab + k)];
  }
};

LogProbs logSoftmaxRows(const Tensor& logits) {
  NAR_REQUIRE(logits.rank() == 2, "ctc: logits must be T x V, got " + toString(logits.shape()));
  LogProbs lp{logits.rows(), logits.cols(), logits.toDoubles()};
  for (std::int64_t t = 0; t < lp.frames; ++t) {
    double* row = lp.values.data() + t * lp.vocab;
    const double mx = *std::max_element(row, row + lp.vocab);
    double s = 0.0;
    for (std::int64_t k = 0; k < lp.vocab; ++k) s += std::exp(row[k] - mx);
    const double lse = mx + std::log(s);
    for (std::int64_t k = 0; k < lp.vocab; ++k) row[k] -= lse;
  }
  return lp;
}

void checkTarget(const LogProbs& lp, std::span<const int> target, const char* op) {
  NAR_REQUIRE(lp.frames >= 1, std::string(op) + ": need at least one frame");
  for (int c : target) {
    NAR_REQUIRE(c > 0 && c < lp.vocab, std::string(op) + ": target token " + std::to_string(c) +
                                           " outside [1," + std::to_string(lp.vocab) + ")");
  }
  const int need = ctcMinFrames(target);
  NAR_REQUIRE(need <= lp.frames, std::string(op) + ": target of length " +
                                     std::to_string(target.size()) + " needs " +
                                     std::to_string(need) + " frames, got " +
                                     std::to_string(lp.frames));
}

// Whether state s may be entered from s - 2 (skipping the blank between).
bool canSkip(const std::vector<int>& ext, size_t s) {
  return s >= 2 && ext[s] != 0 && ext[s] != ext[s - 2];
}

}  // namespace

int ctcMinFrames(std::span<const int> target) {
  int need = static_cast<int>(target.size());
  for (size_t i = 1; i < target.size(); ++i) need += target[i] == target[i - 1];
  return need;
}

CtcLossResult ctcLoss(const Tensor& logits, std::span<const int> target) {
  const LogProbs lp = logSoftmaxRows(logits);
  checkTarget(lp, target, "ctc_loss");
  const std::vector<int> ext = addBlank(target);
  const size_t S = ext.size();
  const auto T = lp.frames;
  const auto V = lp.vocab;

  std::vector<double> alpha(static_cast<size_t>(T) * S, kNegInf);
  std::vector<double> beta(static_cast<size_t>(T) * S, kNegInf);
  auto at = [S](std::vector<double>& m, std::int64_t t, size_t s) -> double& {
    return m[static_cast<size_t>(t) * S + s];
  };

  at(alpha, 0, 0) = lp(0, ext[0]);
  if (S > 1) at(alpha, 0, 1) = lp(0, ext[1]);
  for (std::int64_t t = 1; t < T; ++t) {
    for (size_t s = 0; s < S; ++s) {
      double a = at(alpha, t - 1, s);
      if (s >= 1) a = logAdd(a, at(alpha, t - 1, s - 1));
      if (canSkip(ext, s)) a = logAdd(a, at(alpha, t - 1, s - 2));
      if (a != kNegInf) at(alpha, t, s) = a + lp(t, ext[s]);
    }
  }

  at(beta, T - 1, S - 1) = lp(T - 1, ext[S - 1]);
  if (S > 1) at(beta, T - 1, S - 2) = lp(T - 1, ext[S - 2]);
  for (std::int64_t t = T - 2; t >= 0; --t) {
    for (size_t s = S; s-- > 0;) {
      double b = at(beta, t + 1, s);
      if (s + 1 < S) b = logAdd(b, at(beta, t + 1, s + 1));
      if (s + 2 < S && canSkip(ext, s + 2)) b = logAdd(b, at(beta, t + 1, s + 2));
      if (b != kNegInf) at(beta, t, s) = b + lp(t, ext[s]);
    }
  }

  double logLik = at(alpha, T - 1, S - 1);
  if (S > 1) logLik = logAdd(logLik, at(alpha, T - 1, S - 2));
  NAR_REQUIRE(logLik != kNegInf, "ctc_loss: no path collapses to the target");

  // alpha * beta counts lp(t, ext[s]) twice; the posterior occupancy is
  // exp(alpha + beta - lp - logLik).
  CtcLossResult result;
  result.loss = -logLik;
  result.gradient.assign(static_cast<size_t>(T * V), 0.0);
  std::vector<double> occupancy(static_cast<size_t>(V));
  for (std::int64_t t = 0; t < T; ++t) {
    std::fill(occupancy.begin(), occupancy.end(), kNegInf);
    for (size_t s = 0; s < S; ++s) {
      const double ab = at(alpha, t, s) + at(beta, t, s);
      if (ab == kNegInf) continue;
      auto& o = occupancy[static_cast<size_t>(ext[s])];
      o = logAdd(o, ab - lp(t, ext[s]));
    }
    for (std::int64_t k = 0; k < V; ++k) {
      const double post = occupancy[static_cast<size_t>(k)] == kNegInf
                              ? 0.0
                              : std::exp(occupancy[static_cast<size_t>(k)] - logLik);
      result.gradient[static_cast<size_t>(t * V + k)] = std::exp(lp(t, k)) - post;
    }
  }
  return result;
}

Var ctcLoss(Var logits, std::span<const int> target) {
  NAR_REQUIRE(logits.valid(), "ctc_loss: unbound input");
  Graph& g = *logits.graph();
  const int ix = logits.id();
  CtcLossResult r = ctcLoss(logits.value(), target);
  Tensor grad = Tensor::fromValues(logits.shape(), r.gradient, logits.precision());
  return g.record("ctc_loss", {ix}, Tensor::scalar(r.loss, logits.precision()),
                  [ix, grad = std::move(grad)](Graph& graph, int self) {
                    const double go = graph.outGrad(self).get(0);
                    Tensor& gx = graph.gradRef(ix);
                    for (std::int64_t i = 0; i < gx.numel(); ++i) {
                      gx.set(i, gx.get(i) + go * grad.get(i));
                    }
                  });
}

Hypothesis greedyDecode(const Tensor& logits, int suppressToken) {
  const LogProbs lp = logSoftmaxRows(logits);
  Hypothesis h;
  for (std::int64_t t = 0; t < lp.frames; ++t) {
    int best = -1;
    for (std::int64_t k = 0; k < lp.vocab; ++k) {
      if (k == suppressToken) continue;
      if (best < 0 || lp(t, k) > lp(t, best)) best = static_cast<int>(k);
    }
    NAR_REQUIRE(best >= 0, "greedy_decode: no selectable token");
    h.path.push_back(best);
    h.frameProbs.push_back(std::exp(lp(t, best)));
  }
  h.text = collapsePath(h.path);
  return h;
}

std::vector<double> charConfidences(const Hypothesis& hypothesis) {
  NAR_REQUIRE(hypothesis.path.size() == hypothesis.frameProbs.size(),
              "char_confidences: path and probabilities differ in length");
  std::vector<double> out;
  size_t t = 0;
  const size_t n = hypothesis.path.size();
  while (t < n) {
    size_t end = t + 1;
    while (end < n && hypothesis.path[end] == hypothesis.path[t]) ++end;
    if (hypothesis.path[t] != 0) {
      double s = 0.0;
      for (size_t u = t; u < end; ++u) s += hypothesis.frameProbs[u];
      out.push_back(s / static_cast<double>(end - t));
    }
    t = end;
  }
  return out;
}

CtcAlignment viterbiAlign(const Tensor& logits, std::span<const int> target) {
  const LogProbs lp = logSoftmaxRows(logits);
  checkTarget(lp, target, "viterbi_align");
  const std::vector<int> ext = addBlank(target);
  const size_t S = ext.size();
  const auto T = lp.frames;

  std::vector<double> score(static_cast<size_t>(T) * S, kNegInf);
  std::vector<int> from(static_cast<size_t>(T) * S, -1);
  auto idx = [S](std::int64_t t, size_t s) { return static_cast<size_t>(t) * S + s; };

  score[idx(0, 0)] = lp(0, ext[0]);
  if (S > 1) score[idx(0, 1)] = lp(0, ext[1]);
  for (std::int64_t t = 1; t < T; ++t) {
    for (size_t s = 0; s < S; ++s) {
      double best = score[idx(t - 1, s)];
      int arg = static_cast<int>(s);
      if (s >= 1 && score[idx(t - 1, s - 1)] > best) {
        best = score[idx(t - 1, s - 1)];
        arg = static_cast<int>(s - 1);
      }
      if (canSkip(ext, s) && score[idx(t - 1, s - 2)] > best) {
        best = score[idx(t - 1, s - 2)];
        arg = static_cast<int>(s - 2);
      }
      if (best == kNegInf) continue;
      score[idx(t, s)] = best + lp(t, ext[s]);
      from[idx(t, s)] = arg;
    }
  }

  size_t s = S - 1;
  if (S > 1 && score[idx(T - 1, S - 2)] > score[idx(T - 1, S - 1)]) s = S - 2;
  NAR_REQUIRE(score[idx(T - 1, s)] != kNegInf, "viterbi_align: no path collapses to the target");

  CtcAlignment out{ext, std::vector<int>(S, 0)};
  for (std::int64_t t = T - 1; t >= 0; --t) {
    ++out.repeats[s];
    if (t > 0) s = static_cast<size_t>(from[idx(t, s)]);
  }
  return out;
}

double pathLogProb(const Tensor& logits, std::span<const int> path) {
  const LogProbs lp = logSoftmaxRows(logits);
  NAR_REQUIRE(static_cast<std::int64_t>(path.size()) == lp.frames,
              "path_log_prob: path length differs from frame count");
  double total = 0.0;
  for (std::int64_t t = 0; t < lp.frames; ++t) total += lp(t, path[static_cast<size_t>(t)]);
  return total;
}

}  // namespace nar
