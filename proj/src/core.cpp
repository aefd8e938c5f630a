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

#include "streamforge/core.hpp"

#include <algorithm>
#include <cstring>
#include <limits>
#include <sstream>

namespace streamforge {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_shape: return "invalid-shape";
    case ErrorCode::out_of_range: return "out-of-range";
    case ErrorCode::type_mismatch: return "type-mismatch";
    case ErrorCode::undeclared_capture: return "undeclared-capture";
    case ErrorCode::malformed_program: return "malformed-program";
    case ErrorCode::malformed_loop: return "malformed-loop";
    case ErrorCode::arity_mismatch: return "arity-mismatch";
    case ErrorCode::shape_mismatch: return "shape-mismatch";
    case ErrorCode::unresolved_capture: return "unresolved-capture";
    case ErrorCode::indexed_read: return "indexed-read";
    case ErrorCode::arithmetic: return "arithmetic";
    case ErrorCode::loop: return "loop";
    case ErrorCode::format: return "format";
    case ErrorCode::dimension: return "dimension";
    case ErrorCode::unknown_backend: return "unknown-backend";
    case ErrorCode::unknown_kernel: return "unknown-kernel";
    case ErrorCode::oracle_mismatch: return "oracle-mismatch";
    case ErrorCode::usage: return "usage";
  }
  return "unknown";
}

namespace {

template <class Seq>
std::string join_tuple(const Seq& s) {
  std::ostringstream os;
  os << '(';
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (k) os << ',';
    os << s[k];
  }
  os << ')';
  return os.str();
}

std::string read_error_message(const std::string& capture, const std::vector<std::int64_t>& index,
                               const std::vector<std::size_t>& element) {
  std::string msg = "gather " + capture + join_tuple(index) + " out of bounds";
  if (!element.empty()) msg += " at element " + join_tuple(element);
  return msg;
}

}  // namespace

IndexedReadError::IndexedReadError(std::string capture, std::vector<std::int64_t> index,
                                   std::vector<std::size_t> element)
    : Error(ErrorCode::indexed_read, read_error_message(capture, index, element)),
      capture_(std::move(capture)),
      index_(std::move(index)),
      element_(std::move(element)) {}

IndexedReadError IndexedReadError::at_element(std::vector<std::size_t> element) const {
  return IndexedReadError(capture_, index_, std::move(element));
}

std::string_view to_string(ScalarKind kind) {
  switch (kind) {
    case ScalarKind::f32: return "f32";
    case ScalarKind::f64: return "f64";
    case ScalarKind::i32: return "i32";
  }
  return "?";
}

std::size_t scalar_size(ScalarKind kind) {
  switch (kind) {
    case ScalarKind::f32: return sizeof(float);
    case ScalarKind::f64: return sizeof(double);
    case ScalarKind::i32: return sizeof(std::int32_t);
  }
  return 0;
}

// ---- Value -----------------------------------------------------------------

Value::Value(ScalarKind kind, int width) : kind_(kind), width_(static_cast<std::uint8_t>(width)) {
  if (width < 1 || width > kMaxWidth) {
    throw Error(ErrorCode::type_mismatch, "Value width must be in 1..4, got " + std::to_string(width));
  }
}

void Value::check_access(ScalarKind want, int c) const {
  if (c < 0 || c >= width_) {
    throw Error(ErrorCode::out_of_range, "component " + std::to_string(c) + " of a width-" +
                                             std::to_string(width_) + " value");
  }
  if (want != kind_) {
    throw Error(ErrorCode::type_mismatch, "value of kind " + std::string(streamforge::to_string(kind_)) +
                                              " read as " + std::string(streamforge::to_string(want)));
  }
}

double Value::operator[](int c) const {
  check_access(kind_, c);
  switch (kind_) {
    case ScalarKind::f32: return lanes_.f32[c];
    case ScalarKind::f64: return lanes_.f64[c];
    case ScalarKind::i32: return lanes_.i32[c];
  }
  return 0;
}

bool operator==(const Value& a, const Value& b) {
  if (a.kind_ != b.kind_ || a.width_ != b.width_) return false;
  const std::size_t bytes = scalar_size(a.kind_) * a.width_;
  return std::memcmp(&a.lanes_, &b.lanes_, bytes) == 0;
}

std::string Value::to_string() const {
  std::ostringstream os;
  os << streamforge::to_string(kind_) << '(';
  for (int c = 0; c < width_; ++c) {
    if (c) os << ',';
    os << (*this)[c];
  }
  os << ')';
  return os.str();
}

// ---- Shape -----------------------------------------------------------------

namespace {

std::size_t checked_extent(std::int64_t e) {
  if (e < 1 || e > std::numeric_limits<std::int32_t>::max()) {
    throw Error(ErrorCode::invalid_shape, "extent must be in 1..2^31-1, got " + std::to_string(e));
  }
  return static_cast<std::size_t>(e);
}

}  // namespace

Shape::Shape(std::int64_t n) : rank_(1), extents_{checked_extent(n), 1} {}

Shape::Shape(std::int64_t rows, std::int64_t cols)
    : rank_(2), extents_{checked_extent(rows), checked_extent(cols)} {}

Shape Shape::of(std::span<const std::int64_t> extents) {
  if (extents.size() == 1) return Shape(extents[0]);
  if (extents.size() == 2) return Shape(extents[0], extents[1]);
  throw Error(ErrorCode::invalid_shape, "rank must be 1 or 2, got " + std::to_string(extents.size()));
}

std::string Shape::to_string() const {
  if (rank_ == 1) return "(" + std::to_string(extents_[0]) + ")";
  return "(" + std::to_string(extents_[0]) + "," + std::to_string(extents_[1]) + ")";
}

// ---- StreamArray -----------------------------------------------------------

namespace {

template <class T>
std::vector<T> zeros_of(std::size_t n) {
  return std::vector<T>(n, T{});
}

}  // namespace

StreamArray::StreamArray(Shape shape, ScalarKind kind, int width)
    : shape_(shape), kind_(kind), width_(width) {
  check_layout(scalar_count());
  switch (kind) {
    case ScalarKind::f32: storage_ = zeros_of<float>(scalar_count()); break;
    case ScalarKind::f64: storage_ = zeros_of<double>(scalar_count()); break;
    case ScalarKind::i32: storage_ = zeros_of<std::int32_t>(scalar_count()); break;
  }
}

void StreamArray::check_layout(std::size_t scalars) const {
  if (width_ < 1 || width_ > kMaxWidth) {
    throw Error(ErrorCode::type_mismatch, "array element width must be in 1..4");
  }
  if (scalars != scalar_count()) {
    throw Error(ErrorCode::shape_mismatch, "array of shape " + shape_.to_string() + " x width " +
                                               std::to_string(width_) + " needs " +
                                               std::to_string(scalar_count()) + " scalars, got " +
                                               std::to_string(scalars));
  }
}

void StreamArray::check_kind(ScalarKind want) const {
  if (want != kind_) {
    throw Error(ErrorCode::type_mismatch, "array of kind " + std::string(to_string(kind_)) +
                                              " accessed as " + std::string(to_string(want)));
  }
}

const void* StreamArray::data() const noexcept {
  return std::visit([](const auto& v) -> const void* { return v.data(); }, storage_);
}

Value StreamArray::at(std::size_t linear) const {
  if (linear >= size()) {
    throw Error(ErrorCode::out_of_range, "element " + std::to_string(linear) + " of array " +
                                             shape_.to_string());
  }
  Value v(kind_, width_);
  std::memcpy(&v.mutable_lanes(), static_cast<const char*>(data()) + linear * width_ * scalar_size(kind_),
              width_ * scalar_size(kind_));
  return v;
}

Value StreamArray::at(std::size_t row, std::size_t col) const {
  if (shape_.rank() != 2 || row >= shape_.extent(0) || col >= shape_.extent(1)) {
    throw Error(ErrorCode::out_of_range, "element (" + std::to_string(row) + "," +
                                             std::to_string(col) + ") of array " + shape_.to_string());
  }
  return at(row * shape_.row_stride() + col);
}

// ---- GridArray -------------------------------------------------------------

GridArray::GridArray(Shape shape) : shape_(shape) {}

Value GridArray::at(std::size_t linear) const {
  if (linear >= size()) {
    throw Error(ErrorCode::out_of_range, "element " + std::to_string(linear) + " of grid " +
                                             shape_.to_string());
  }
  if (shape_.rank() == 1) return Value::i32(static_cast<std::int32_t>(linear));
  const auto stride = shape_.row_stride();
  return Value::of<std::int32_t>(
      {static_cast<std::int32_t>(linear / stride), static_cast<std::int32_t>(linear % stride)});
}

Value GridArray::at(std::size_t row, std::size_t col) const {
  if (shape_.rank() != 2 || row >= shape_.extent(0) || col >= shape_.extent(1)) {
    throw Error(ErrorCode::out_of_range, "element (" + std::to_string(row) + "," +
                                             std::to_string(col) + ") of grid " + shape_.to_string());
  }
  return Value::of<std::int32_t>({static_cast<std::int32_t>(row), static_cast<std::int32_t>(col)});
}

GridArray grid(std::int64_t n) { return GridArray(Shape(n)); }
GridArray grid(std::int64_t rows, std::int64_t cols) { return GridArray(Shape(rows, cols)); }
GridArray grid(std::span<const std::int64_t> extents) { return GridArray(Shape::of(extents)); }

// ---- make_array ------------------------------------------------------------

namespace fill {

Fill zeros() {
  return [](const ElementIndex&, int) { return 0.0; };
}

Fill identity() {
  return [](const ElementIndex& idx, int) { return idx.row == idx.col ? 1.0 : 0.0; };
}

Fill from(const GridArray& g) {
  return [g](const ElementIndex& idx, int c) { return g.at(idx.linear)[c]; };
}

}  // namespace fill

namespace {

template <class T>
void fill_into(std::span<T> out, const Shape& shape, int width, const Fill& f) {
  const std::size_t stride = shape.row_stride();
  for (std::size_t e = 0; e < shape.element_count(); ++e) {
    ElementIndex idx{e, shape.rank() == 1 ? e : e / stride, shape.rank() == 1 ? 0 : e % stride};
    for (int c = 0; c < width; ++c) {
      out[e * width + c] = static_cast<T>(f(idx, c));
    }
  }
}

}  // namespace

StreamArray make_array(const Shape& shape, ScalarKind kind, int width, const Fill& f) {
  StreamArray a(shape, kind, width);
  switch (kind) {
    case ScalarKind::f32: fill_into(a.mutable_scalars<float>(), shape, width, f); break;
    case ScalarKind::f64: fill_into(a.mutable_scalars<double>(), shape, width, f); break;
    case ScalarKind::i32: fill_into(a.mutable_scalars<std::int32_t>(), shape, width, f); break;
  }
  return a;
}

// ---- Swizzled layout -------------------------------------------------------

template <class T>
SwizzledMatrix<T>::SwizzledMatrix(std::size_t rows, std::size_t cols, std::size_t block)
    : rows_(rows), cols_(cols), block_(block) {
  if (block == 0) throw Error(ErrorCode::invalid_shape, "swizzle block edge must be >= 1");
  block_rows_ = (rows + block - 1) / block;
  block_cols_ = (cols + block - 1) / block;
  storage_.assign(block_rows_ * block_cols_ * block * block, T{});
}

template <class T>
SwizzledMatrix<T> swizzle(const DenseMatrix<T>& a, std::size_t block) {
  SwizzledMatrix<T> s(a.rows, a.cols, block);
  auto& out = s.mutable_storage();
  for (std::size_t i = 0; i < a.rows; ++i) {
    const T* src = a.data.data() + i * a.cols;
    for (std::size_t bj = 0; bj * block < a.cols; ++bj) {
      const std::size_t j0 = bj * block;
      const std::size_t len = std::min(block, a.cols - j0);
      std::copy_n(src + j0, len, out.data() + s.offset(i, j0));
    }
  }
  return s;
}

template <class T>
DenseMatrix<T> unswizzle(const SwizzledMatrix<T>& s) {
  DenseMatrix<T> a(s.rows(), s.cols());
  const std::size_t block = s.block();
  const auto& in = s.storage();
  for (std::size_t i = 0; i < a.rows; ++i) {
    T* dst = a.data.data() + i * a.cols;
    for (std::size_t bj = 0; bj * block < a.cols; ++bj) {
      const std::size_t j0 = bj * block;
      const std::size_t len = std::min(block, a.cols - j0);
      std::copy_n(in.data() + s.offset(i, j0), len, dst + j0);
    }
  }
  return a;
}

template class SwizzledMatrix<float>;
template class SwizzledMatrix<double>;
template SwizzledMatrix<float> swizzle(const DenseMatrix<float>&, std::size_t);
template SwizzledMatrix<double> swizzle(const DenseMatrix<double>&, std::size_t);
template DenseMatrix<float> unswizzle(const SwizzledMatrix<float>&);
template DenseMatrix<double> unswizzle(const SwizzledMatrix<double>&);

}  // namespace streamforge
