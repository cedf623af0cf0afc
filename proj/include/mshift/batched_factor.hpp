// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include <mshift/core.hpp>
#include <mshift/dense.hpp>
#include <mshift/flops.hpp>
#include <mshift/givens_schedule.hpp>
#include <mshift/transforms.hpp>
#include <mshift/worker_pool.hpp>

namespace mshift {

/**
 * @brief s trapezoidal blocks and their accumulated column transforms, packed
 * side by side.
 *
 * Block l occupies Z(:, l*nCols : (l+1)*nCols). P holds P*_l, the product of
 * all column operations applied to block l, so that Z_in = R * (P*)^H; it
 * starts as s identity matrices.
 */
struct BlockBatch {
  index s = 0;
  index n_rows = 0;
  index n_cols = 0;
  ComplexMatrix Z;
  ComplexMatrix P;

  BlockBatch() = default;
  BlockBatch(index batch, index rows, index cols)
      : s(batch), n_rows(rows), n_cols(cols), Z(rows, batch * cols), P(cols, batch * cols) {
    reset_p();
  }

  void reset_p() {
    fill(P.view(), cplx{});
    for (index l = 0; l < s; ++l)
      for (index i = 0; i < n_cols; ++i) P(i, l * n_cols + i) = 1.0;
  }

  [[nodiscard]] MatrixView<cplx> block(index l) noexcept { return Z.block(0, l * n_cols, n_rows, n_cols); }
  [[nodiscard]] ConstView<cplx> block(index l) const noexcept { return Z.block(0, l * n_cols, n_rows, n_cols); }
  [[nodiscard]] MatrixView<cplx> p(index l) noexcept { return P.block(0, l * n_cols, n_cols, n_cols); }
  [[nodiscard]] ConstView<cplx> p(index l) const noexcept { return P.block(0, l * n_cols, n_cols, n_cols); }
  /// The retained leading columns of P*_l.
  [[nodiscard]] ConstView<cplx> p_slice(index l, index m_keep) const noexcept {
    return P.block(0, l * n_cols, n_cols, m_keep);
  }
};

namespace detail {

// Column operation on the leading `rows` rows of columns (c1, c2):
//   x2 <- c x2 + s x1,  x1 <- c x1 - conj(s) x2.
inline void rotate_columns(MatrixView<cplx> z, index row0, index rows, index c1, index c2,
                           const GivensRotation& g) noexcept {
  cplx* x1 = z.data + c1 * z.ld + row0;
  cplx* x2 = z.data + c2 * z.ld + row0;
  const cplx sc = std::conj(g.s);
  for (index i = 0; i < rows; ++i) {
    const cplx a = x1[i];
    const cplx b = x2[i];
    x2[i] = g.c * b + g.s * a;
    x1[i] = g.c * a - sc * b;
  }
}

constexpr std::uint64_t rotation_flops_per_row = 20;
constexpr std::uint64_t rotation_setup_flops = 20;

// RQ of one block following the schedule; Z(r, target) is written as an exact zero.
inline void rq_one(MatrixView<cplx> z, MatrixView<cplx> p, const AnnihilationSchedule& sch, FlopCounter* flops) {
  std::uint64_t count = 0;
  std::vector<GivensRotation> rots;
  for (auto step : sch.steps()) {
    rots.clear();
    for (const Rotation& q : step) rots.push_back(givens(z(q.row, q.helper), z(q.row, q.target)).rot);
    for (std::size_t k = 0; k < step.size(); ++k) {
      const Rotation& q = step[k];
      if (rots[k].is_identity()) continue;
      rotate_columns(z, 0, q.row + 1, q.target, q.helper, rots[k]);
      z(q.row, q.target) = 0.0;
      rotate_columns(p, 0, p.rows, q.target, q.helper, rots[k]);
      count += rotation_setup_flops + rotation_flops_per_row * static_cast<std::uint64_t>(q.row + 1 + p.rows);
    }
  }
  add_flops(flops, count);
}

}  // namespace detail

/**
 * @brief Simultaneous RQ factorization of every block in the batch.
 *
 * On return block l holds [0 | R_l] with the annihilated entries exactly zero
 * and P(:, l) holds P*_l. Blocks are independent; the pool splits the batch
 * and results do not depend on its size.
 */
inline void batched_rq(BlockBatch& batch, const AnnihilationSchedule& sch, WorkerPool* pool = nullptr,
                       FlopCounter* flops = nullptr) {
  require_dims(sch.n_rows == batch.n_rows && sch.n_cols == batch.n_cols, "batched_rq: schedule shape mismatch");
  for_each_index(pool, static_cast<std::size_t>(batch.s), [&](std::size_t l) {
    const auto li = static_cast<index>(l);
    detail::rq_one(batch.block(li), batch.p(li), sch, flops);
  });
}

/// Per-block outcome of batched_lq.
struct PivotStatus {
  index pivot = -1;  // first negligible diagonal entry of L, -1 when none
  [[nodiscard]] bool ok() const noexcept { return pivot < 0; }
};

/**
 * @brief Simultaneous LQ factorization with fused forward substitution.
 *
 * The mirror image of batched_rq: rows are processed top-down and entries to
 * the right of the leading diagonal are annihilated, leaving [L | 0]. The
 * schedule is the ordinary greedy plan for (nRows, nCols); every rotation is
 * mirrored on the fly. As soon as row k of L can no longer change, rhs(k, l)
 * is overwritten by y_k of L y = rhs. A diagonal entry with magnitude at most
 * pivot_tol[l] stops the substitution for block l; its remaining rhs entries
 * become NaN.
 */
inline std::vector<PivotStatus> batched_lq(BlockBatch& batch, const AnnihilationSchedule& sch,
                                           MatrixView<cplx> rhs, std::span<const double> pivot_tol,
                                           WorkerPool* pool = nullptr,
                                           FlopCounter* flops = nullptr) {
  require_dims(sch.n_rows == batch.n_rows && sch.n_cols == batch.n_cols, "batched_lq: schedule shape mismatch");
  require_dims(rhs.rows == batch.n_rows && rhs.cols == batch.s, "batched_lq: rhs must be nRows x s");
  require_dims(static_cast<index>(pivot_tol.size()) == batch.s, "batched_lq: one pivot tolerance per block");
  std::vector<PivotStatus> status(static_cast<std::size_t>(batch.s));
  const index nr = batch.n_rows;
  const index nc = batch.n_cols;

  // Rotations still pending per mirrored row.
  std::vector<index> pending_init(static_cast<std::size_t>(nr), 0);
  for (const Rotation& q : sch.rot_info) ++pending_init[static_cast<std::size_t>(nr - 1 - q.row)];

  for_each_index(pool, static_cast<std::size_t>(batch.s), [&](std::size_t l) {
    const auto li = static_cast<index>(l);
    MatrixView<cplx> z = batch.block(li);
    MatrixView<cplx> p = batch.p(li);
    cplx* y = rhs.data + li * rhs.ld;
    std::vector<index> pending = pending_init;
    index done = 0;  // rows of y already substituted
    PivotStatus& st = status[l];
    std::uint64_t count = 0;

    auto substitute_ready_rows = [&] {
      while (done < nr && pending[static_cast<std::size_t>(done)] == 0) {
        const index k = done;
        if (st.ok()) {
          cplx acc = y[k];
          for (index i = 0; i < k; ++i) acc -= z(k, i) * y[i];
          if (std::abs(z(k, k)) <= pivot_tol[l]) {
            st.pivot = k;
            for (index i = k; i < nr; ++i) y[i] = cplx(std::numeric_limits<double>::quiet_NaN(), 0.0);
          } else {
            y[k] = acc / z(k, k);
          }
          count += 8 * static_cast<std::uint64_t>(k + 1);
        }
        ++done;
      }
    };

    substitute_ready_rows();
    std::vector<GivensRotation> rots;
    for (auto step : sch.steps()) {
      rots.clear();
      for (const Rotation& q : step) {
        const index r = nr - 1 - q.row;
        rots.push_back(givens(z(r, nc - 1 - q.helper), z(r, nc - 1 - q.target)).rot);
      }
      for (std::size_t k = 0; k < step.size(); ++k) {
        const Rotation& q = step[k];
        const index r = nr - 1 - q.row;
        const index c1 = nc - 1 - q.target;
        const index c2 = nc - 1 - q.helper;
        if (!rots[k].is_identity()) {
          detail::rotate_columns(z, r, nr - r, c1, c2, rots[k]);
          z(r, c1) = 0.0;
          detail::rotate_columns(p, 0, p.rows, c1, c2, rots[k]);
          count += detail::rotation_setup_flops +
                   detail::rotation_flops_per_row * static_cast<std::uint64_t>(nr - r + p.rows);
        }
        --pending[static_cast<std::size_t>(r)];
      }
      substitute_ready_rows();
    }
    substitute_ready_rows();
    add_flops(flops, count);
  });
  return status;
}

}  // namespace mshift
