// Copyright 2026 The StreamForge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Value model and containers shared by programs, backends and kernels.
//
// A StreamArray is a dense rank-1 or rank-2 array of small fixed-width
// tuples (Values) of a single scalar kind. Element (i, j) of a rank-2 array
// lives at linear offset i * extent(1) + j; the first index is the row.
// GridArray is the storage-free array whose element (i, j) is the index
// itself. SwizzledMatrix stores a matrix as contiguous square blocks.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "streamforge/error.hpp"

namespace streamforge {

// Order matters: the bytecode encodes per-kind opcodes as base + kind.
enum class ScalarKind : std::uint8_t { f32 = 0, f64 = 1, i32 = 2 };

std::string_view to_string(ScalarKind kind);
std::size_t scalar_size(ScalarKind kind);

template <class T>
struct kind_of;
template <>
struct kind_of<float> {
  static constexpr ScalarKind value = ScalarKind::f32;
};
template <>
struct kind_of<double> {
  static constexpr ScalarKind value = ScalarKind::f64;
};
template <>
struct kind_of<std::int32_t> {
  static constexpr ScalarKind value = ScalarKind::i32;
};
template <class T>
inline constexpr ScalarKind kind_of_v = kind_of<T>::value;

inline constexpr int kMaxWidth = 4;

/// Raw lane storage for one Value. Interpreted according to a ScalarKind
/// that lives elsewhere (in the Value, or in the instruction reading it).
union Lanes {
  float f32[kMaxWidth];
  double f64[kMaxWidth];
  std::int32_t i32[kMaxWidth];
};

template <class T>
T* lanes_of(Lanes& l) {
  if constexpr (std::is_same_v<T, float>) {
    return l.f32;
  } else if constexpr (std::is_same_v<T, double>) {
    return l.f64;
  } else {
    return l.i32;
  }
}
template <class T>
const T* lanes_of(const Lanes& l) {
  return lanes_of<T>(const_cast<Lanes&>(l));
}

/// A 1..4 component tuple of one scalar kind.
class Value {
 public:
  /// Zero-initialized value.
  Value(ScalarKind kind, int width);

  template <class T>
  static Value of(std::initializer_list<T> components) {
    return of(std::span<const T>(components.begin(), components.size()));
  }
  template <class T>
  static Value of(std::span<const T> components) {
    Value v(kind_of_v<T>, static_cast<int>(components.size()));
    for (std::size_t c = 0; c < components.size(); ++c) {
      lanes_of<T>(v.lanes_)[c] = components[c];
    }
    return v;
  }
  static Value f32(float x) { return of<float>({x}); }
  static Value f64(double x) { return of<double>({x}); }
  static Value i32(std::int32_t x) { return of<std::int32_t>({x}); }

  ScalarKind kind() const noexcept { return kind_; }
  int width() const noexcept { return width_; }

  /// Component c converted to double. Throws out_of_range for c >= width.
  double operator[](int c) const;

  /// Component c in its native type; T must match kind().
  template <class T>
  T get(int c) const {
    check_access(kind_of_v<T>, c);
    return lanes_of<T>(lanes_)[c];
  }

  const Lanes& lanes() const noexcept { return lanes_; }
  Lanes& mutable_lanes() noexcept { return lanes_; }

  /// Bitwise equality of kind, width and the used lanes.
  friend bool operator==(const Value& a, const Value& b);

  std::string to_string() const;

 private:
  void check_access(ScalarKind want, int c) const;

  ScalarKind kind_;
  std::uint8_t width_;
  Lanes lanes_{};
};

/// Rank-1 or rank-2 extents, all positive.
class Shape {
 public:
  explicit Shape(std::int64_t n);
  Shape(std::int64_t rows, std::int64_t cols);
  /// Accepts one or two extents.
  static Shape of(std::span<const std::int64_t> extents);

  int rank() const noexcept { return rank_; }
  std::size_t extent(int d) const { return extents_.at(static_cast<std::size_t>(d)); }
  std::size_t element_count() const noexcept { return extents_[0] * extents_[1]; }
  /// Extent of the last dimension: the stride of the first index.
  std::size_t row_stride() const noexcept { return extents_[1]; }

  friend bool operator==(const Shape& a, const Shape& b) {
    return a.rank_ == b.rank_ && a.extents_ == b.extents_;
  }
  std::string to_string() const;

 private:
  int rank_;
  // Rank-1 shapes keep extents_[1] == 1 so element_count is branch free.
  std::array<std::size_t, 2> extents_;
};

/// Dense row-major array of Values.
class StreamArray {
 public:
  /// Zero-filled.
  StreamArray(Shape shape, ScalarKind kind, int width);

  /// Adopts `scalars` (element-major, width scalars per element).
  template <class T>
  StreamArray(Shape shape, int width, std::vector<T> scalars)
      : shape_(shape), kind_(kind_of_v<T>), width_(width) {
    check_layout(scalars.size());
    storage_ = std::move(scalars);
  }

  const Shape& shape() const noexcept { return shape_; }
  ScalarKind kind() const noexcept { return kind_; }
  int width() const noexcept { return width_; }
  int rank() const noexcept { return shape_.rank(); }
  std::size_t size() const noexcept { return shape_.element_count(); }
  std::size_t scalar_count() const noexcept { return size() * static_cast<std::size_t>(width_); }
  std::size_t byte_size() const noexcept { return scalar_count() * scalar_size(kind_); }

  template <class T>
  std::span<const T> scalars() const {
    check_kind(kind_of_v<T>);
    return std::get<std::vector<T>>(storage_);
  }
  template <class T>
  std::span<T> mutable_scalars() {
    check_kind(kind_of_v<T>);
    return std::get<std::vector<T>>(storage_);
  }
  /// Moves the underlying buffer out. Only destruction is valid afterwards.
  template <class T>
  std::vector<T> release() && {
    check_kind(kind_of_v<T>);
    return std::move(std::get<std::vector<T>>(storage_));
  }

  const void* data() const noexcept;

  /// Checked element reads.
  Value at(std::size_t linear) const;
  Value at(std::size_t row, std::size_t col) const;

 private:
  void check_layout(std::size_t scalars) const;
  void check_kind(ScalarKind want) const;

  Shape shape_;
  ScalarKind kind_;
  int width_;
  std::variant<std::vector<float>, std::vector<double>, std::vector<std::int32_t>> storage_;
};

/// Storage-free array whose element at (i, j) is the int32 Value (i, j).
class GridArray {
 public:
  explicit GridArray(Shape shape);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return shape_.element_count(); }
  /// Element width equals the rank.
  int width() const noexcept { return shape_.rank(); }

  Value at(std::size_t linear) const;
  Value at(std::size_t row, std::size_t col) const;

 private:
  Shape shape_;
};

/// Half-open: grid(m, n) enumerates (0,0) .. (m-1, n-1) in row-major order.
GridArray grid(std::int64_t n);
GridArray grid(std::int64_t rows, std::int64_t cols);
GridArray grid(std::span<const std::int64_t> extents);

/// Position handed to array fill functions. For rank-1 arrays row == linear
/// and col == 0.
struct ElementIndex {
  std::size_t linear;
  std::size_t row;
  std::size_t col;
};

/// Returns component `c` of the element at `idx`, converted to the array kind.
using Fill = std::function<double(const ElementIndex& idx, int c)>;

namespace fill {
Fill zeros();
/// 1 on the diagonal of a rank-2 array, 0 elsewhere.
Fill identity();
/// Materializes the grid's elements in linear order.
Fill from(const GridArray& g);
}  // namespace fill

StreamArray make_array(const Shape& shape, ScalarKind kind, int width, const Fill& f);

/// Plain row-major matrix used at kernel boundaries.
template <class T>
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> data;

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, T{}) {}
  DenseMatrix(std::size_t r, std::size_t c, std::vector<T> values)
      : rows(r), cols(c), data(std::move(values)) {
    if (data.size() != rows * cols) {
      throw Error(ErrorCode::shape_mismatch, "DenseMatrix: value count does not match rows*cols");
    }
  }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
    return m;
  }

  T& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;
};

/// Matrix stored as row-major-ordered square blocks, each block contiguous
/// and row-major inside. Dimensions are zero-padded up to block multiples.
template <class T>
class SwizzledMatrix {
 public:
  SwizzledMatrix(std::size_t rows, std::size_t cols, std::size_t block);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t block() const noexcept { return block_; }
  std::size_t block_rows() const noexcept { return block_rows_; }
  std::size_t block_cols() const noexcept { return block_cols_; }
  std::size_t padded_rows() const noexcept { return block_rows_ * block_; }
  std::size_t padded_cols() const noexcept { return block_cols_ * block_; }
  std::size_t block_elements() const noexcept { return block_ * block_; }

  /// Offset of element (i, j) in storage(); valid for padded coordinates.
  std::size_t offset(std::size_t i, std::size_t j) const noexcept {
    const std::size_t bi = i / block_, bj = j / block_;
    return (bi * block_cols_ + bj) * block_elements() + (i % block_) * block_ + (j % block_);
  }

  std::span<const T> block_data(std::size_t bi, std::size_t bj) const {
    return std::span<const T>(storage_).subspan((bi * block_cols_ + bj) * block_elements(),
                                                block_elements());
  }
  std::span<T> mutable_block_data(std::size_t bi, std::size_t bj) {
    return std::span<T>(storage_).subspan((bi * block_cols_ + bj) * block_elements(),
                                          block_elements());
  }

  const std::vector<T>& storage() const noexcept { return storage_; }
  std::vector<T>& mutable_storage() noexcept { return storage_; }

 private:
  std::size_t rows_, cols_, block_;
  std::size_t block_rows_, block_cols_;
  std::vector<T> storage_;
};

inline constexpr std::size_t kDefaultBlock = 64;

template <class T>
SwizzledMatrix<T> swizzle(const DenseMatrix<T>& a, std::size_t block = kDefaultBlock);
template <class T>
DenseMatrix<T> unswizzle(const SwizzledMatrix<T>& s);

}  // namespace streamforge
