#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace fslsim {

// Dense row-major matrix over any scalar type. Compute paths that need
// forward-mode derivatives instantiate this with detail::Dual.
template <typename T>
struct MatT {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> data;

  MatT() = default;
  MatT(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, T{}) {}

  T& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  const T& operator()(std::size_t i, std::size_t j) const {
    return data[i * cols + j];
  }

  std::size_t size() const { return data.size(); }

  void resize(std::size_t r, std::size_t c) {
    rows = r;
    cols = c;
    data.assign(r * c, T{});
  }
};

using Matrix = MatT<double>;

bool all_finite(const Matrix& m);

// Throws std::invalid_argument naming `what` if any entry is NaN or inf.
void require_finite(const Matrix& m, const char* what);

}  // namespace fslsim
