// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <type_traits>

namespace mshift {

using index = std::ptrdiff_t;
using cplx = std::complex<double>;

inline constexpr double eps = std::numeric_limits<double>::epsilon();

template <typename T>
struct is_complex : std::false_type {};
template <typename T>
struct is_complex<std::complex<T>> : std::true_type {};
template <typename T>
inline constexpr bool is_complex_v = is_complex<T>::value;

/// Scalar types the dense kernels are instantiated for.
template <typename T>
concept Scalar = std::is_same_v<T, double> || std::is_same_v<T, cplx>;

// std::conj promotes real arguments to complex; these helpers keep the type.
template <Scalar T>
constexpr T conj_if(T x) noexcept {
  if constexpr (is_complex_v<T>) {
    return std::conj(x);
  } else {
    return x;
  }
}

template <Scalar T>
constexpr double real_part(T x) noexcept {
  if constexpr (is_complex_v<T>) {
    return x.real();
  } else {
    return x;
  }
}

template <Scalar T>
constexpr double abs2(T x) noexcept {
  if constexpr (is_complex_v<T>) {
    return x.real() * x.real() + x.imag() * x.imag();
  } else {
    return x * x;
  }
}

//
// ... Error types
//

/// Operand shapes do not conform, or a size precondition is violated.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A triangular factor has a zero (or numerically negligible) pivot.
class SingularError : public std::runtime_error {
 public:
  SingularError(const std::string& what, index pivot, index shift = -1)
      : std::runtime_error(what), pivot_(pivot), shift_(shift) {}

  [[nodiscard]] index pivot() const noexcept { return pivot_; }
  [[nodiscard]] index shift() const noexcept { return shift_; }

 private:
  index pivot_;
  index shift_;
};

/// Malformed input file or specification string.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The small dense eigensolver failed or its pencil is singular.
class EigenError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require_dims(bool ok, const char* what) {
  if (!ok) throw DimensionError(what);
}

}  // namespace mshift
