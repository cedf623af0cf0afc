// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>

#include <mshift/core.hpp>
#include <mshift/dense.hpp>

namespace mshift {

/// An LTI triple (A, B, C) with n x n, n x m and p x n shapes.
struct SystemBundle {
  std::string name;
  RealMatrix A;
  RealMatrix B;
  RealMatrix C;

  [[nodiscard]] index n() const noexcept { return A.rows(); }
  [[nodiscard]] index m() const noexcept { return B.cols(); }
  [[nodiscard]] index p() const noexcept { return C.rows(); }

  void validate() const {
    require_dims(A.rows() == A.cols(), "system: A must be square");
    require_dims(B.rows() == n(), "system: B must have n rows");
    require_dims(C.cols() == n(), "system: C must have n columns");
    require_dims(m() >= 1 && p() >= 1, "system: B and C must be nonempty");
  }
};

/**
 * @brief Standard normal samples from mt19937_64 through Box-Muller.
 *
 * std::normal_distribution is implementation-defined, so it would give
 * different systems on different standard libraries for the same seed.
 */
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : gen_(seed) {}

  double operator()() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    constexpr double scale = 0x1.0p-53;
    const double u1 = (static_cast<double>(gen_() >> 11) + 0.5) * scale;
    const double u2 = static_cast<double>(gen_() >> 11) * scale;
    const double rad = std::sqrt(-2.0 * std::log(u1));
    spare_ = rad * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return rad * std::cos(2.0 * std::numbers::pi * u2);
  }

  RealMatrix matrix(index rows, index cols, double scale = 1.0) {
    RealMatrix a(rows, cols);
    for (index j = 0; j < cols; ++j)
      for (index i = 0; i < rows; ++i) a(i, j) = scale * (*this)();
    return a;
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/**
 * @brief Seeded random stable system.
 *
 * A = R - c I with R entries N(0, 1/n) and c = ||(R + R^T)/2||_inf + margin,
 * which bounds the numerical abscissa and hence every eigenvalue real part
 * by -margin. B and C have N(0, 1) entries.
 */
inline SystemBundle random_stable_system(index n, index m, index p, std::uint64_t seed, double margin = 0.1) {
  require_dims(n >= 1 && m >= 1 && p >= 1, "random_stable_system: dimensions must be positive");
  NormalStream rng(seed);
  SystemBundle s;
  s.name = "random-n" + std::to_string(n) + "-m" + std::to_string(m) + "-p" + std::to_string(p) + "-seed" +
           std::to_string(seed);
  s.A = rng.matrix(n, n, 1.0 / std::sqrt(static_cast<double>(n)));
  s.B = rng.matrix(n, m);
  s.C = rng.matrix(p, n);
  double row_max = 0.0;
  for (index i = 0; i < n; ++i) {
    double sum = 0.0;
    for (index j = 0; j < n; ++j) sum += std::abs(0.5 * (s.A(i, j) + s.A(j, i)));
    row_max = std::max(row_max, sum);
  }
  for (index i = 0; i < n; ++i) s.A(i, i) -= row_max + margin;
  return s;
}

}  // namespace mshift
