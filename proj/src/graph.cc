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

#include "nar/graph.h"

#include "nar/errors.h"
#include "nar/random.h"

namespace nar {

Parameter::Parameter(std::string name, Tensor value)
    : name_(std::move(name)),
      value_(std::move(value)),
      grad_(value_.shape(), value_.precision()) {}

const Tensor& Var::value() const {
  NAR_REQUIRE(graph_ != nullptr, "use of an unbound Var");
  return graph_->value(id_);
}

Graph::Graph(Precision precision, bool training, std::uint64_t seed)
    : precision_(precision), training_(training), seed_(seed) {}

Var Graph::constant(Tensor value) {
  NAR_REQUIRE(value.precision() == precision_,
              "constant precision " + toString(value.precision()) +
                  " differs from graph precision " + toString(precision_));
  return record("constant", {}, std::move(value), nullptr);
}

Var Graph::param(Parameter& parameter) {
  if (auto it = paramNodes_.find(&parameter); it != paramNodes_.end()) {
    return Var(this, it->second);
  }
  NAR_REQUIRE(parameter.value().precision() == precision_,
              "parameter " + parameter.name() + " has precision " +
                  toString(parameter.value().precision()));
  Var v = record("param", {}, parameter.value(), nullptr);
  nodes_[static_cast<size_t>(v.id())].parameter = &parameter;
  nodes_[static_cast<size_t>(v.id())].requiresGrad = true;
  paramNodes_.emplace(&parameter, v.id());
  return v;
}

std::uint64_t Graph::nextSeed() { return mixSeed(seed_, stochasticOps_++); }

Var Graph::record(std::string_view op, std::vector<int> inputs, Tensor value,
                  BackwardFn backward) {
  NAR_REQUIRE(!backwardDone_, "cannot extend a graph after backward()");
  if (!value.allFinite()) {
    throw NumericError("non-finite output from op '" + std::string(op) +
                       "' with shape " + toString(value.shape()));
  }
  bool needsGrad = false;
  for (int in : inputs) needsGrad = needsGrad || requiresGrad(in);
  if (!needsGrad) backward = nullptr;
  nodes_.push_back(Node{op, std::move(inputs), std::move(value), Tensor{},
                        std::move(backward), nullptr, needsGrad});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Tensor& Graph::gradRef(int id) {
  Node& node = nodes_[static_cast<size_t>(id)];
  if (node.grad.empty()) {
    node.grad = Tensor(node.value.shape(), node.value.precision());
  }
  return node.grad;
}

const Tensor& Graph::grad(Var v) const {
  NAR_REQUIRE(backwardDone_, "gradients are available only after backward()");
  return nodes_[static_cast<size_t>(v.id())].grad;
}

void Graph::backward(Var loss) {
  NAR_REQUIRE(loss.graph() == this, "loss belongs to a different graph");
  NAR_REQUIRE(loss.numel() == 1, "backward() needs a scalar loss, got " +
                                     toString(loss.shape()));
  NAR_REQUIRE(!backwardDone_, "backward() already ran on this graph");
  backwardDone_ = true;
  gradRef(loss.id()).fill(1.0);
  for (int id = loss.id(); id >= 0; --id) {
    Node& node = nodes_[static_cast<size_t>(id)];
    if (node.grad.empty()) continue;
    if (node.backward) {
      node.backward(*this, id);
    } else if (node.parameter != nullptr) {
      node.parameter->grad().addInPlace(node.grad);
    }
  }
}

}  // namespace nar
