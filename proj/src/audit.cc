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

#include "nar/audit.h"

#include <cmath>

#include "nar/alignment.h"
#include "nar/ctc.h"
#include "nar/masking.h"
#include "nar/ops.h"

namespace nar {
namespace {

// Runs gradCheck on `build(graph, params)` projected to a scalar.
GradCheckResult checkPrimitive(std::uint64_t seed, const std::vector<Shape>& shapes,
                               const std::function<Var(Graph&, std::vector<Var>&)>& build,
                               double scale = 1.0) {
  Rng rng(seed);
  std::vector<Parameter> params;
  params.reserve(shapes.size());
  for (size_t i = 0; i < shapes.size(); ++i) {
    params.emplace_back("p" + std::to_string(i), randomTensor(shapes[i], rng, scale));
  }
  std::vector<Parameter*> ptrs;
  for (auto& p : params) ptrs.push_back(&p);
  auto f = [&](Graph& g) {
    std::vector<Var> vars;
    for (auto& p : params) vars.push_back(g.param(p));
    Var out = build(g, vars);
    return out.numel() == 1 ? out : randomProjection(out, seed + 1000);
  };
  return gradCheck(f, ptrs, 1e-5);
}

// Moves every parameter off its structured init (zero biases make the
// speech-absent layer norm see a constant row, its most curved point).
void jitter(Model& m, std::uint64_t seed, double scale = 0.3) {
  Rng rng(seed);
  for (Parameter* p : m.parameters()) {
    for (std::int64_t i = 0; i < p->value().numel(); ++i) {
      p->value().set(i, p->value().get(i) + rng.normal(0.0, scale));
    }
  }
}

Matrix randomFrames(Rng& rng, std::int64_t frames, std::int64_t bins) {
  Matrix m(frames, bins);
  for (std::int64_t i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(rng.normal());
  return m;
}

std::vector<int> randomText(Rng& rng, int length, int vocab) {
  std::vector<int> t;
  for (int i = 0; i < length; ++i) t.push_back(static_cast<int>(rng.uniformInt(1, vocab - 2)));
  return t;
}

std::vector<int> randomRepeats(Rng& rng, const std::vector<int>& tokens) {
  std::vector<int> r(tokens.size());
  for (size_t i = 0; i < r.size(); ++i) {
    r[i] = static_cast<int>(i % 2 ? rng.uniformInt(1, 3) : rng.uniformInt(0, 2));
  }
  for (size_t i = 2; i + 1 < r.size(); i += 2) {
    if (tokens[i - 1] == tokens[i + 1]) r[i] = std::max(r[i], 1);
  }
  return r;
}

GradCheckResult auditBlock(std::uint64_t seed) {
  BlockHarness h(8, 2, 3, 2, Precision::kF64, seed, 0.7);
  Rng rng(seed + 100);
  const Tensor input = randomTensor({4, 8}, rng, 1.0, Precision::kF64);
  return gradCheck([&](Graph& g) { return randomProjection(h.block()(g, g.constant(input)), seed); },
                   h.parameters());
}

GradCheckResult auditDuration(std::uint64_t seed) {
  const ModelConfig c = auditModelConfig();
  Model m(c, seed);
  jitter(m, seed + 1000);
  Rng rng(seed);
  const auto text = randomText(rng, 2, c.vocabSize);
  const auto stream = propagateBlankMasks(maskText(text, 0.5, seed, c.vocabSize - 1), c.vocabSize - 1);
  const auto repeats = randomRepeats(rng, addBlank(text));
  std::vector<double> weights;
  for (auto f : stream.masked) weights.push_back(f ? 0.0 : 1.0);
  return gradCheck(
      [&](Graph& g) {
        Var ey = m.encodeText(g, stream.ids, 1);
        Var dur = crossEntropy(m.durationLogits(g, ey), repeats, weights);
        return add(dur, randomProjection(gatherRows(ey, repeatIndices(repeats)), seed));
      },
      m.parameters());
}

GradCheckResult auditStt(std::uint64_t seed) {
  const ModelConfig c = auditModelConfig();
  Model m(c, seed);
  jitter(m, seed + 1000);
  Rng rng(seed);
  const auto speech = unmaskedSpeech(randomFrames(rng, 5, c.melBins));
  const auto text = randomText(rng, 2, c.vocabSize);
  return gradCheck(
      [&](Graph& g) {
        ForwardInput in;
        in.speech = &speech;
        in.speechHead = false;
        return ctcLoss(m.forward(g, in).text, text);
      },
      m.parameters());
}

GradCheckResult auditTts(std::uint64_t seed) {
  const ModelConfig c = auditModelConfig();
  Model m(c, seed);
  jitter(m, seed + 1000);
  Rng rng(seed);
  const auto text = randomText(rng, 2, c.vocabSize);
  const auto tokens = unmaskedTokens(text);
  auto repeats = randomRepeats(rng, tokens.ids);
  int frames = 0;
  for (int v : repeats) frames += v;
  // With an even frame count the L1 signs of a column can cancel exactly.
  if (frames % 2 == 0) {
    ++repeats[0];
    ++frames;
  }
  const Tensor target = randomTensor({frames, c.melBins}, rng, 1.0, Precision::kF64);
  return gradCheck(
      [&](Graph& g) {
        ForwardInput in;
        in.text = &tokens;
        in.repeats = repeats;
        in.durationLoss = true;
        in.textHead = false;
        in.speaker = 1;
        const auto out = m.forward(g, in);
        return add(l1Loss(out.speech, g.constant(target)), out.durationLoss);
      },
      m.parameters());
}

}  // namespace

Tensor randomTensor(Shape shape, Rng& rng, double scale, Precision precision) {
  Tensor t(std::move(shape), precision);
  for (std::int64_t i = 0; i < t.numel(); ++i) t.set(i, rng.normal(0.0, scale));
  return t;
}

Var randomProjection(Var x, std::uint64_t seed) {
  Rng rng(seed);
  Var w = x.graph()->constant(randomTensor(x.shape(), rng, 1.0, x.precision()));
  return sum(mul(x, w));
}

std::vector<AuditCase> primitiveAudits() {
  std::vector<AuditCase> cases;
  auto dims = [](std::uint64_t seed, int lo, int hi) {
    Rng rng(mixSeed(seed, 77));
    return static_cast<std::int64_t>(rng.uniformInt(lo, hi));
  };
  for (int ta = 0; ta < 2; ++ta) {
    for (int tb = 0; tb < 2; ++tb) {
      cases.push_back({"matmul", [=](std::uint64_t s) {
        const auto m = dims(s, 1, 5), k = dims(s + 1, 1, 5), n = dims(s + 2, 1, 5);
        Shape sa = ta ? Shape{k, m} : Shape{m, k};
        Shape sb = tb ? Shape{n, k} : Shape{k, n};
        return checkPrimitive(s, {sa, sb}, [=](Graph&, std::vector<Var>& v) {
          return matmul(v[0], v[1], ta, tb);
        });
      }});
    }
  }
  auto shapeOf = [=](std::uint64_t s) {
    return Shape{dims(s, 1, 5), dims(s + 1, 1, 6)};
  };
  cases.push_back({"add_same", [=](std::uint64_t s) {
    return checkPrimitive(s, {shapeOf(s), shapeOf(s)},
                          [](Graph&, std::vector<Var>& v) { return add(v[0], v[1]); });
  }});
  cases.push_back({"add_row", [=](std::uint64_t s) {
    const Shape sh = shapeOf(s);
    return checkPrimitive(s, {sh, {sh[1]}},
                          [](Graph&, std::vector<Var>& v) { return add(v[0], v[1]); });
  }});
  cases.push_back({"sub", [=](std::uint64_t s) {
    return checkPrimitive(s, {shapeOf(s), shapeOf(s)},
                          [](Graph&, std::vector<Var>& v) { return sub(v[0], v[1]); });
  }});
  cases.push_back({"mul_same", [=](std::uint64_t s) {
    return checkPrimitive(s, {shapeOf(s), shapeOf(s)},
                          [](Graph&, std::vector<Var>& v) { return mul(v[0], v[1]); });
  }});
  cases.push_back({"mul_row", [=](std::uint64_t s) {
    const Shape sh = shapeOf(s);
    return checkPrimitive(s, {sh, {1, sh[1]}},
                          [](Graph&, std::vector<Var>& v) { return mul(v[0], v[1]); });
  }});
  cases.push_back({"mul_scalar", [=](std::uint64_t s) {
    return checkPrimitive(s, {shapeOf(s), {1}},
                          [](Graph&, std::vector<Var>& v) { return mul(v[0], v[1]); });
  }});
  cases.push_back({"scale", [=](std::uint64_t s) {
    return checkPrimitive(s, {shapeOf(s)},
                          [](Graph&, std::vector<Var>& v) { return scale(v[0], -1.7); });
  }});
  cases.push_back({"sigmoid", [=](std::uint64_t s) {
    return checkPrimitive(s, {shapeOf(s)},
                          [](Graph&, std::vector<Var>& v) { return sigmoid(v[0]); });
  }});
  cases.push_back({"swish", [=](std::uint64_t s) {
    return checkPrimitive(s, {shapeOf(s)},
                          [](Graph&, std::vector<Var>& v) { return swish(v[0]); });
  }});
  cases.push_back({"gelu", [=](std::uint64_t s) {
    return checkPrimitive(s, {shapeOf(s)},
                          [](Graph&, std::vector<Var>& v) { return gelu(v[0]); });
  }});
  cases.push_back({"glu", [=](std::uint64_t s) {
    return checkPrimitive(s, {{dims(s, 1, 5), 2 * dims(s + 1, 1, 4)}},
                          [](Graph&, std::vector<Var>& v) { return glu(v[0]); });
  }});
  cases.push_back({"softmax", [=](std::uint64_t s) {
    return checkPrimitive(s, {shapeOf(s)},
                          [](Graph&, std::vector<Var>& v) { return softmax(v[0]); });
  }});
  cases.push_back({"log_softmax", [=](std::uint64_t s) {
    return checkPrimitive(s, {shapeOf(s)},
                          [](Graph&, std::vector<Var>& v) { return logSoftmax(v[0]); });
  }});
  cases.push_back({"layer_norm", [=](std::uint64_t s) {
    const Shape sh{dims(s, 1, 5), dims(s + 1, 2, 8)};
    return checkPrimitive(s, {sh, {sh[1]}, {sh[1]}}, [](Graph&, std::vector<Var>& v) {
      return layerNorm(v[0], v[1], v[2]);
    });
  }});
  cases.push_back({"depthwise_conv1d", [=](std::uint64_t s) {
    const Shape sh{dims(s, 1, 7), dims(s + 1, 1, 4)};
    const std::int64_t k = 2 * dims(s + 2, 0, 2) + 1;
    return checkPrimitive(s, {sh, {k, sh[1]}, {sh[1]}}, [](Graph&, std::vector<Var>& v) {
      return depthwiseConv1d(v[0], v[1], v[2]);
    });
  }});
  cases.push_back({"embedding", [=](std::uint64_t s) {
    const Shape sh{dims(s, 2, 6), dims(s + 1, 1, 4)};
    Rng rng(s);
    std::vector<int> ids;
    for (int i = 0; i < 7; ++i) ids.push_back(static_cast<int>(rng.uniformInt(0, sh[0] - 1)));
    return checkPrimitive(s, {sh}, [ids](Graph&, std::vector<Var>& v) {
      return embedding(v[0], ids);
    });
  }});
  cases.push_back({"slice_concat", [=](std::uint64_t s) {
    const Shape sh{dims(s, 1, 4), dims(s + 1, 2, 6)};
    return checkPrimitive(s, {sh, sh}, [](Graph&, std::vector<Var>& v) {
      const auto c = v[0].cols();
      std::vector<Var> parts{sliceCols(v[0], 1, c - 1), v[1], sliceCols(v[0], 0, 1)};
      return concatCols(parts);
    });
  }});
  cases.push_back({"dropout", [=](std::uint64_t s) {
    Rng rng(s);
    Parameter p("x", randomTensor(shapeOf(s), rng));
    auto f = [&](Graph& g) { return randomProjection(dropout(g.param(p), 0.25), s + 3); };
    return gradCheck(f, {&p}, 1e-5, /*training=*/true, /*graphSeed=*/s);
  }});
  cases.push_back({"sum_mean", [=](std::uint64_t s) {
    return checkPrimitive(s, {shapeOf(s)}, [](Graph&, std::vector<Var>& v) {
      return add(sum(v[0]), scale(mean(mul(v[0], v[0])), 3.0));
    });
  }});
  cases.push_back({"cross_entropy", [=](std::uint64_t s) {
    const Shape sh{dims(s, 1, 6), dims(s + 1, 2, 5)};
    Rng rng(s + 9);
    std::vector<int> targets;
    std::vector<double> weights;
    for (std::int64_t r = 0; r < sh[0]; ++r) {
      targets.push_back(static_cast<int>(rng.uniformInt(0, sh[1] - 1)));
      weights.push_back(r == 0 ? 1.0 : static_cast<double>(rng.uniformInt(0, 1)));
    }
    return checkPrimitive(s, {sh}, [=](Graph&, std::vector<Var>& v) {
      return crossEntropy(v[0], targets, weights);
    });
  }});
  cases.push_back({"l1_loss", [=](std::uint64_t s) {
    const Shape sh = shapeOf(s);
    return checkPrimitive(s, {sh, sh}, [](Graph&, std::vector<Var>& v) {
      return l1Loss(v[0], v[1]);
    });
  }});
  return cases;
}

ModelConfig auditModelConfig() {
  ModelConfig c;
  c.dModel = 8;
  c.heads = 2;
  c.mmLayers = 1;
  c.peripheralLayers = 1;
  c.melBins = 4;
  c.vocabSize = 5;
  c.maxRepeat = 4;
  c.convKernel = 3;
  c.ffnMultiplier = 2;
  c.dropout = 0.0;
  c.speakers = 2;
  c.branchScaleInit = 1.0;
  c.precision = Precision::kF64;
  return c;
}

std::vector<AuditCase> modelAudits() {
  return {{"conformer_block", auditBlock, false},
          {"duration_model", auditDuration, true},
          {"stt_graph", auditStt, true},
          {"tts_graph", auditTts, true}};
}

std::vector<AuditSummary> runGradAudit(int seeds, std::ostream* progress) {
  std::vector<AuditCase> cases = primitiveAudits();
  for (auto& c : modelAudits()) cases.push_back(std::move(c));
  std::vector<AuditSummary> out;
  for (const auto& c : cases) {
    AuditSummary s{c.name, seeds, 0.0, ""};
    for (int i = 0; i < seeds; ++i) {
      const auto r = c.run(static_cast<std::uint64_t>(i) * 7919 + 13);
      const double e = c.error(r);
      if (e >= s.worst) {
        s.worst = e;
        s.where = c.perTensor ? r.worstTensor : r.worstParameter;
      }
    }
    if (progress) *progress << s.name << " seeds=" << s.seeds << " max_rel_err=" << s.worst << "\n" << std::flush;
    out.push_back(s);
  }
  return out;
}

}  // namespace nar
