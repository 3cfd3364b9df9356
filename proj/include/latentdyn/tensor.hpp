// Copyright 2026 The LatentDyn Authors.
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
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "latentdyn/error.hpp"

namespace latentdyn {

using Shape = std::vector<std::size_t>;

inline std::size_t NumElements(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string ShapeString(const Shape& shape);

// Dense row-major array. Rank-2 and rank-3 accessors cover every use in the
// project: [rows, cols] matrices and [trial, bin, neuron] data cubes.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;
  explicit BasicTensor(Shape shape, T fill = T{})
      : shape_(std::move(shape)), data_(NumElements(shape_), fill) {}
  BasicTensor(Shape shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    Require(NumElements(shape_) == data_.size(), ErrorCategory::kShapeMismatch,
            "tensor data length " + std::to_string(data_.size()) +
                " does not match shape " + ShapeString(shape_));
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t rows() const { return shape_.at(0); }
  std::size_t cols() const { return shape_.size() > 1 ? shape_[1] : 1; }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  const T& at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }

  T& at(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  const T& at(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  void Reshape(Shape shape) {
    Require(NumElements(shape) == data_.size(), ErrorCategory::kShapeMismatch,
            "cannot reshape " + ShapeString(shape_) + " to " + ShapeString(shape));
    shape_ = std::move(shape);
  }

  friend bool operator==(const BasicTensor& a, const BasicTensor& b) = default;

 private:
  Shape shape_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<double>;
// Observed spike counts x(t), indexed [trial, bin, neuron].
using SpikeTensor = BasicTensor<std::int64_t>;
// Boolean element masks stored one byte per element (0 or 1).
using MaskTensor = BasicTensor<std::uint8_t>;

inline void RequireSameShape(const Shape& a, const Shape& b, const char* what) {
  Require(a == b, ErrorCategory::kShapeMismatch,
          std::string(what) + ": " + ShapeString(a) + " vs " + ShapeString(b));
}

bool AllFinite(std::span<const double> v);

// Gathers whole trials (first axis) of a rank-3 tensor.
template <typename T>
BasicTensor<T> GatherTrials(const BasicTensor<T>& src,
                            std::span<const std::size_t> trials) {
  const std::size_t stride = src.size() / src.dim(0);
  Shape shape = src.shape();
  shape[0] = trials.size();
  BasicTensor<T> out(shape);
  for (std::size_t i = 0; i < trials.size(); ++i) {
    Require(trials[i] < src.dim(0), ErrorCategory::kInvalidArgument,
            "trial index out of range");
    std::copy_n(src.data().begin() + trials[i] * stride, stride,
                out.data().begin() + i * stride);
  }
  return out;
}

}  // namespace latentdyn
