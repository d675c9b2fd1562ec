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

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nar/graph.h"

namespace nar {

// Differentiable primitives. All operate on rank-1/rank-2 row-major tensors
// of one precision and record a node on the inputs' graph.
//
// Binary elementwise ops accept a right operand with the same shape, a
// single row (rank-1 of length cols, or 1 x cols) broadcast over rows, or a
// single element broadcast everywhere.

Var matmul(Var a, Var b, bool transposeA = false, bool transposeB = false);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);

Var sigmoid(Var x);
Var swish(Var x);
Var gelu(Var x);
// Splits columns in half: first * sigmoid(second).
Var glu(Var x);

// Row-wise over the last dimension.
Var softmax(Var x);
Var logSoftmax(Var x);
// Population variance; eps is added inside the square root.
Var layerNorm(Var x, Var gamma, Var beta, double eps = 1e-5);

// x: L x C, kernel: K x C (K odd), bias: C. Zero "same" padding.
Var depthwiseConv1d(Var x, Var kernel, Var bias);

// Row i of the result is row ids[i] of the table.
Var embedding(Var table, std::span<const int> ids);
Var gatherRows(Var x, std::span<const int> rows);
Var sliceCols(Var x, std::int64_t start, std::int64_t count);
Var concatCols(std::span<const Var> parts);

// Inverted dropout; identity unless the graph is in training mode.
Var dropout(Var x, double rate);

Var sum(Var x);
Var mean(Var x);

// Mean over weighted rows of -log softmax(logits)[target]. Empty weights
// means every row counts once. A zero total weight gives a constant 0.
Var crossEntropy(Var logits, std::span<const int> targets,
                 std::span<const double> weights = {});
// Mean absolute difference; the subgradient at zero is 0.
Var l1Loss(Var prediction, Var target);

}  // namespace nar
