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

#include "walign/numerics/tape.hpp"

#include <sstream>

namespace walign {

int64_t shape_size(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d < 0) throw DimensionError("negative dimension in shape " + shape_str(shape));
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

template <typename T>
Var<T> Tape<T>::constant(Tensor<T> value) {
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var<T>(this, static_cast<int>(nodes_.size() - 1));
}

template <typename T>
Var<T> Tape<T>::leaf(Parameter<T>& param) {
  auto it = param_nodes_.find(&param);
  if (it != param_nodes_.end()) return Var<T>(this, it->second);
  Node node;
  node.param = &param;
  node.requires_grad = param.requires_grad;
  nodes_.push_back(std::move(node));
  const int id = static_cast<int>(nodes_.size() - 1);
  param_nodes_.emplace(&param, id);
  return Var<T>(this, id);
}

template <typename T>
Var<T> Tape<T>::record(Tensor<T> value, std::initializer_list<Var<T>> inputs,
                       BackwardFn backward) {
  bool needs = false;
  for (const auto& in : inputs) {
    if (in.tape() != this) throw ContractError("operation mixes variables from different tapes");
    needs = needs || requires_grad(in.id());
  }
  Node node;
  node.value = std::move(value);
  node.requires_grad = needs;
  if (needs) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var<T>(this, static_cast<int>(nodes_.size() - 1));
}

template <typename T>
const Tensor<T>& Tape<T>::value(int id) const {
  const Node& node = nodes_[static_cast<size_t>(id)];
  return node.param != nullptr ? node.param->value : node.value;
}

template <typename T>
Tensor<T>* Tape<T>::grad_sink(int id) {
  Node& node = nodes_[static_cast<size_t>(id)];
  if (!node.requires_grad) return nullptr;
  if (node.grad.empty() && !value(id).empty()) node.grad = Tensor<T>(value(id).shape());
  return &node.grad;
}

template <typename T>
void Tape<T>::backward(const Var<T>& loss) {
  if (loss.tape() != this) throw ContractError("backward: loss was recorded on another tape");
  if (loss.value().size() != 1) {
    throw ContractError("backward: loss must be a scalar, got shape " +
                        shape_str(loss.value().shape()));
  }
  if (!requires_grad(loss.id())) return;
  grad_sink(loss.id())->fill(T(1));
  for (int id = loss.id(); id >= 0; --id) {
    Node& node = nodes_[static_cast<size_t>(id)];
    if (!node.requires_grad || node.grad.empty()) continue;
    if (node.param != nullptr) {
      Parameter<T>& p = *node.param;
      if (p.grad.shape() != p.value.shape()) p.grad = Tensor<T>(p.value.shape());
      T* dst = p.grad.data();
      const T* src = node.grad.data();
      for (int64_t i = 0; i < node.grad.size(); ++i) dst[i] += src[i];
    } else if (node.backward) {
      node.backward(node.grad, node.value);
    }
    // Interior gradients are no longer needed once propagated.
    node.grad = Tensor<T>();
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace walign
