/*
 * Copyright 2026 the dpf authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dpf {

/// Error taxonomy shared by the library, the C API and the CLI.
/// The numeric value of Kind doubles as the process exit code.
class Error : public std::runtime_error {
public:
  enum class Kind : int { usage = 1, data = 2, numeric = 3 };

  Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

private:
  Kind kind_;
};

/// Contract violation: bad arguments, shape mismatch, invalid config values.
class UsageError : public Error {
public:
  explicit UsageError(const std::string& what) : Error(Kind::usage, what) {}
};

/// Malformed files, failed IO, corrupt or foreign data.
class DataError : public Error {
public:
  explicit DataError(const std::string& what) : Error(Kind::data, what) {}
};

/// Non-finite values where finite ones are required.
class NumericError : public Error {
public:
  explicit NumericError(const std::string& what) : Error(Kind::numeric, what) {}
};

/// Dense row-major matrix of doubles. The carrier for all coordinate and
/// signal blocks outside the autodiff tape.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Mat() = default;
  Mat(int r, int c, double fill = 0.0) : rows(r), cols(c), v(static_cast<size_t>(r) * c, fill) {}

  double& operator()(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }

  size_t size() const { return v.size(); }
  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

  Mat take_rows(const std::vector<int>& idx) const {
    Mat out(static_cast<int>(idx.size()), cols);
    for (size_t i = 0; i < idx.size(); ++i)
      for (int c = 0; c < cols; ++c) out(static_cast<int>(i), c) = (*this)(idx[i], c);
    return out;
  }
};

inline std::string shape_str(int r, int c) {
  return "[" + std::to_string(r) + "x" + std::to_string(c) + "]";
}

inline void require_same_shape(const Mat& a, const Mat& b, const char* op) {
  if (!a.same_shape(b))
    throw UsageError(std::string(op) + ": shape mismatch " + shape_str(a.rows, a.cols) + " vs " +
                     shape_str(b.rows, b.cols));
}

}  // namespace dpf
