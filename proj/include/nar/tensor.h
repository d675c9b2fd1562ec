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

#include <cstddef>
#include <cstdint>
#include <new>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace nar {

enum class Precision : std::uint8_t { kF32, kF64 };

using Shape = std::vector<std::int64_t>;

// Cache-line aligned storage. Vectorized kernels choose their code path from
// the buffer address, so a fixed alignment keeps results a function of the
// values alone.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::size_t kAlignment = 64;

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t(kAlignment)));
  }
  void deallocate(T* p, std::size_t) { ::operator delete(p, std::align_val_t(kAlignment)); }

  // resize() default-initializes, which leaves float storage unwritten.
  template <typename U, typename... Args>
  void construct(U* p, Args&&... args) {
    ::new (static_cast<void*>(p)) U(std::forward<Args>(args)...);
  }
  template <typename U>
  void construct(U* p) {
    ::new (static_cast<void*>(p)) U;
  }

  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const { return true; }
};

std::string toString(const Shape& shape);
std::string toString(Precision precision);

// Runs `fn` with a value-initialized float or double depending on the
// precision, so templated kernels can be written once:
//   dispatch(p, [&](auto zero) { using T = decltype(zero); ... });
template <typename F>
decltype(auto) dispatch(Precision precision, F&& fn) {
  if (precision == Precision::kF32) {
    return std::forward<F>(fn)(float{});
  }
  return std::forward<F>(fn)(double{});
}

// Dense row-major buffer of rank 1 or 2. Storage is either float or
// double; mixing precisions in one op is a contract violation.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, Precision precision);

  static Tensor fromValues(Shape shape, std::span<const double> values,
                           Precision precision);
  static Tensor scalar(double value, Precision precision);
  // Storage is left unwritten; the caller must set every element.
  static Tensor uninitialized(Shape shape, Precision precision);

  const Shape& shape() const { return shape_; }
  Precision precision() const { return precision_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  std::int64_t numel() const { return numel_; }
  // Rank-1 tensors are treated as a single row.
  std::int64_t rows() const;
  std::int64_t cols() const;
  bool empty() const { return shape_.empty(); }

  template <typename T>
  T* data();
  template <typename T>
  const T* data() const;

  double get(std::int64_t i) const;
  void set(std::int64_t i, double value);
  std::vector<double> toDoubles() const;

  void fill(double value);
  void addInPlace(const Tensor& other);
  bool allFinite() const;
  Tensor reshaped(Shape shape) const;
  Tensor cast(Precision precision) const;

  friend bool operator==(const Tensor& a, const Tensor& b);

 private:
  Shape shape_;
  Precision precision_ = Precision::kF64;
  std::int64_t numel_ = 0;
  std::vector<float, AlignedAllocator<float>> f32_;
  std::vector<double, AlignedAllocator<double>> f64_;
};

template <>
float* Tensor::data<float>();
template <>
double* Tensor::data<double>();
template <>
const float* Tensor::data<float>() const;
template <>
const double* Tensor::data<double>() const;

}  // namespace nar
