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

#include "nar/tensor.h"

#include <bit>
#include <cmath>
#include <sstream>
#include <type_traits>

#include "nar/errors.h"

namespace nar {

std::string toString(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape.size(); ++i) {
    os << (i ? "x" : "") << shape[i];
  }
  os << ']';
  return os.str();
}

std::string toString(Precision precision) {
  return precision == Precision::kF32 ? "f32" : "f64";
}

namespace {

std::int64_t product(const Shape& shape) {
  std::int64_t n = 1;
  for (auto e : shape) {
    NAR_REQUIRE(e >= 0, "negative extent in shape " + toString(shape));
    n *= e;
  }
  return n;
}

}  // namespace

Tensor::Tensor(Shape shape, Precision precision)
    : shape_(std::move(shape)), precision_(precision) {
  NAR_REQUIRE(rank() == 1 || rank() == 2,
              "tensors must be rank 1 or 2, got " + toString(shape_));
  numel_ = product(shape_);
  if (precision_ == Precision::kF32) {
    f32_.assign(static_cast<size_t>(numel_), 0.0f);
  } else {
    f64_.assign(static_cast<size_t>(numel_), 0.0);
  }
}

Tensor Tensor::uninitialized(Shape shape, Precision precision) {
  Tensor t;
  t.shape_ = std::move(shape);
  t.precision_ = precision;
  NAR_REQUIRE(t.rank() == 1 || t.rank() == 2, "tensors must be rank 1 or 2, got " + toString(t.shape_));
  t.numel_ = product(t.shape_);
  if (precision == Precision::kF32) {
    t.f32_.resize(static_cast<size_t>(t.numel_));
  } else {
    t.f64_.resize(static_cast<size_t>(t.numel_));
  }
  return t;
}

Tensor Tensor::fromValues(Shape shape, std::span<const double> values,
                          Precision precision) {
  Tensor t(std::move(shape), precision);
  NAR_REQUIRE(static_cast<std::int64_t>(values.size()) == t.numel(),
              "value count " + std::to_string(values.size()) +
                  " does not match shape " + toString(t.shape()));
  for (std::int64_t i = 0; i < t.numel(); ++i) {
    t.set(i, values[static_cast<size_t>(i)]);
  }
  return t;
}

Tensor Tensor::scalar(double value, Precision precision) {
  Tensor t({1}, precision);
  t.set(0, value);
  return t;
}

std::int64_t Tensor::rows() const { return rank() == 2 ? shape_[0] : 1; }

std::int64_t Tensor::cols() const { return shape_.empty() ? 0 : shape_.back(); }

template <>
float* Tensor::data<float>() {
  NAR_REQUIRE(precision_ == Precision::kF32, "tensor is not f32");
  return f32_.data();
}
template <>
double* Tensor::data<double>() {
  NAR_REQUIRE(precision_ == Precision::kF64, "tensor is not f64");
  return f64_.data();
}
template <>
const float* Tensor::data<float>() const {
  NAR_REQUIRE(precision_ == Precision::kF32, "tensor is not f32");
  return f32_.data();
}
template <>
const double* Tensor::data<double>() const {
  NAR_REQUIRE(precision_ == Precision::kF64, "tensor is not f64");
  return f64_.data();
}

double Tensor::get(std::int64_t i) const {
  return precision_ == Precision::kF32 ? f32_[static_cast<size_t>(i)]
                                       : f64_[static_cast<size_t>(i)];
}

void Tensor::set(std::int64_t i, double value) {
  if (precision_ == Precision::kF32) {
    f32_[static_cast<size_t>(i)] = static_cast<float>(value);
  } else {
    f64_[static_cast<size_t>(i)] = value;
  }
}

std::vector<double> Tensor::toDoubles() const {
  std::vector<double> out(static_cast<size_t>(numel_));
  for (std::int64_t i = 0; i < numel_; ++i) out[static_cast<size_t>(i)] = get(i);
  return out;
}

void Tensor::fill(double value) {
  for (std::int64_t i = 0; i < numel_; ++i) set(i, value);
}

void Tensor::addInPlace(const Tensor& other) {
  NAR_REQUIRE(other.shape_ == shape_ && other.precision_ == precision_,
              "addInPlace: " + toString(shape_) + " vs " + toString(other.shape_));
  dispatch(precision_, [&](auto zero) {
    using T = decltype(zero);
    T* dst = data<T>();
    const T* src = other.data<T>();
    for (std::int64_t i = 0; i < numel_; ++i) dst[i] += src[i];
  });
}

bool Tensor::allFinite() const {
  return dispatch(precision_, [&](auto zero) {
    using T = decltype(zero);
    using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    constexpr Bits kExponent = static_cast<Bits>(sizeof(T) == 4 ? 0x7f800000ull : 0x7ff0000000000000ull);
    const T* p = data<T>();
    Bits bad = 0;
    for (std::int64_t i = 0; i < numel_; ++i) {
      const Bits b = std::bit_cast<Bits>(p[i]);
      bad |= static_cast<Bits>((b & kExponent) == kExponent);
    }
    return bad == 0;
  });
}

Tensor Tensor::reshaped(Shape shape) const {
  NAR_REQUIRE(product(shape) == numel_,
              "cannot reshape " + toString(shape_) + " to " + toString(shape));
  Tensor t = *this;
  t.shape_ = std::move(shape);
  NAR_REQUIRE(t.rank() == 1 || t.rank() == 2, "reshape to unsupported rank");
  return t;
}

Tensor Tensor::cast(Precision precision) const {
  Tensor t(shape_, precision);
  for (std::int64_t i = 0; i < numel_; ++i) t.set(i, get(i));
  return t;
}

bool operator==(const Tensor& a, const Tensor& b) {
  return a.shape_ == b.shape_ && a.precision_ == b.precision_ &&
         a.f32_ == b.f32_ && a.f64_ == b.f64_;
}

}  // namespace nar
