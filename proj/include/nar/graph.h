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
#include <functional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nar/tensor.h"

namespace nar {

// A learnable tensor plus its accumulated gradient.
class Parameter {
 public:
  Parameter(std::string name, Tensor value);

  const std::string& name() const { return name_; }
  Tensor& value() { return value_; }
  const Tensor& value() const { return value_; }
  Tensor& grad() { return grad_; }
  const Tensor& grad() const { return grad_; }
  void zeroGrad() { grad_.fill(0.0); }

 private:
  std::string name_;
  Tensor value_;
  Tensor grad_;
};

class Graph;

// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
class Var {
 public:
  Var() = default;

  Graph* graph() const { return graph_; }
  int id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::int64_t rows() const { return value().rows(); }
  std::int64_t cols() const { return value().cols(); }
  std::int64_t numel() const { return value().numel(); }
  Precision precision() const { return value().precision(); }

 private:
  friend class Graph;
  Var(Graph* graph, int id) : graph_(graph), id_(id) {}

  Graph* graph_ = nullptr;
  int id_ = -1;
};

// Tape of op records in creation (hence topological) order. One graph per
// forward pass; backward() runs once and pushes gradients into the
// parameters that were bound with param().
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, int)>;

  explicit Graph(Precision precision, bool training = false,
                 std::uint64_t seed = 0);
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Precision precision() const { return precision_; }
  bool training() const { return training_; }
  size_t size() const { return nodes_.size(); }

  Var constant(Tensor value);
  // Binding the same parameter twice returns the same leaf.
  Var param(Parameter& parameter);

  // Seed for the next stochastic op (dropout); a pure function of the graph
  // seed and the number of stochastic ops recorded so far.
  std::uint64_t nextSeed();

  void backward(Var loss);

  const Tensor& value(int id) const { return nodes_[static_cast<size_t>(id)].value; }
  // Gradient of the loss w.r.t. a node, available after backward().
  const Tensor& grad(Var v) const;

  // Op-author interface.
  Var record(std::string_view op, std::vector<int> inputs, Tensor value,
             BackwardFn backward);
  Tensor& gradRef(int id);
  bool requiresGrad(int id) const { return nodes_[static_cast<size_t>(id)].requiresGrad; }
  const Tensor& outGrad(int id) const { return nodes_[static_cast<size_t>(id)].grad; }
  Var var(int id) { return Var(this, id); }

 private:
  struct Node {
    std::string_view op;
    std::vector<int> inputs;
    Tensor value;
    Tensor grad;
    BackwardFn backward;
    Parameter* parameter = nullptr;
    bool requiresGrad = false;
  };

  Precision precision_;
  bool training_;
  std::uint64_t seed_;
  std::uint64_t stochasticOps_ = 0;
  bool backwardDone_ = false;
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, int> paramNodes_;
};

}  // namespace nar
