// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <future>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <mshift/core.hpp>
#include <mshift/dense.hpp>
#include <mshift/flops.hpp>
#include <mshift/transforms.hpp>
#include <mshift/worker_pool.hpp>

namespace mshift {

/**
 * @brief Reduced triple: Ahat m-Hessenberg, Bhat upper triangular, Chat dense.
 *
 * Ahat(i, j) == 0 exactly for i > j + m and Bhat(i, j) == 0 exactly for i > j.
 * When requested, Q holds the orthogonal factor with Ahat = Q^T A Q,
 * Bhat = Q^T B and Chat = C Q.
 */
struct ControllerHessForm {
  RealMatrix Ahat;
  RealMatrix Bhat;
  RealMatrix Chat;
  std::optional<RealMatrix> Q;
  index m = 0;

  [[nodiscard]] index n() const noexcept { return Ahat.rows(); }
  [[nodiscard]] index p() const noexcept { return Chat.rows(); }
};

enum class Strategy { sequential, overlapped };

inline std::string_view to_string(Strategy s) noexcept {
  return s == Strategy::sequential ? "sequential" : "overlapped";
}

/// A rectangle copied between the panel-side and the update-side buffers.
struct Handoff {
  enum class Direction { to_panel, to_update };
  Direction direction;
  index panel;
  index row0;
  index rows;
  index col0;
  index cols;
};

/// Panel-local, 1-based column numbers at which updates happened.
struct PanelTrace {
  std::vector<index> left_updates;
  std::vector<index> right_updates;
};

struct PanelResult {
  BlockReflector reflector;
  index panel_index = 0;
  index offset = 0;  // first column of the panel
  index width = 0;
  index top = 0;     // first row touched by the reflectors (offset + m)
  PanelTrace trace;
};

struct ReductionOptions {
  index block_size = 64;
  Strategy strategy = Strategy::sequential;
  bool accumulate_q = false;
  WorkerPool* panel_pool = nullptr;   // rows above the panel
  WorkerPool* update_pool = nullptr;  // trailing rows and Y products
  PhaseCounters* counters = nullptr;
  std::vector<Handoff>* handoffs = nullptr;
};

struct MHessResult {
  RealMatrix Ahat;
  std::vector<PanelResult> panels;
};

/**
 * @brief Reduces b columns starting at column z of `a`.
 *
 * Only rows top = z + m .. n-1 of the panel are touched. Each column gets the
 * left update from the reflectors before it, then its own reflector. At the
 * end of every m-column mini-block the new Y columns are formed and the next
 * mini-block receives its right update. `src` supplies the untouched columns
 * right of the current mini-block for the A*V products; it may alias `a`.
 */
inline PanelResult process_panel(MatrixView<double> a, ConstView<double> src, index z, index bw, index m,
                                 FlopCounter* flops = nullptr, WorkerPool* pool = nullptr) {
  const index n = a.rows;
  const index top = z + m;
  require_dims(a.cols == n && src.rows == n && src.cols == n, "process_panel: square matrices expected");
  require_dims(m >= 1 && z >= 0 && bw >= 1 && top + bw <= n, "process_panel: panel does not fit");
  const index nt = n - top;

  PanelResult out;
  out.offset = z;
  out.width = bw;
  out.top = top;
  BlockReflector& q = out.reflector;
  q = BlockReflector(n, bw);
  q.Y = RealMatrix(n, bw);

  index mini_start = 0;
  std::vector<double> w(static_cast<std::size_t>(bw));
  std::vector<double> tw(static_cast<std::size_t>(bw));
  for (index jj = 0; jj < bw; ++jj) {
    const index col = z + jj;
    double* acol = &a(top, col);

    if (jj > 0) {
      // a <- (I - V T^T V^T) a on rows top..n-1
      for (index k = 0; k < jj; ++k) {
        double acc = 0.0;
        for (index i = top + k; i < n; ++i) acc += q.V(i, k) * acol[i - top];
        w[static_cast<std::size_t>(k)] = acc;
      }
      for (index k = 0; k < jj; ++k) {
        double acc = 0.0;
        for (index r = 0; r <= k; ++r) acc += q.T(r, k) * w[static_cast<std::size_t>(r)];
        tw[static_cast<std::size_t>(k)] = acc;
      }
      for (index k = 0; k < jj; ++k) {
        const double t = tw[static_cast<std::size_t>(k)];
        for (index i = top + k; i < n; ++i) acol[i - top] -= q.V(i, k) * t;
      }
      add_flops(flops, static_cast<std::uint64_t>(4 * jj * nt + jj * jj));
      out.trace.left_updates.push_back(jj + 1);
    }

    std::span<double> x(acol + jj, static_cast<std::size_t>(nt - jj));
    const double tau = make_householder_inplace(x, flops);
    q.append(top + jj, x.subspan(1), tau, flops);
    std::fill(x.begin() + 1, x.end(), 0.0);

    if ((jj + 1) % m != 0 && jj + 1 != bw) continue;

    // Mini-block boundary: Y(:, mini) = (A V_mini - Y_old (V_old^T V_mini)) T_mini.
    const index cmini = jj + 1 - mini_start;
    const index row_start = top + mini_start;
    MatrixView<double> ymini = q.Y.block(top, mini_start, nt, cmini);
    gemm(Op::none, Op::none, 1.0, src.block(top, row_start, nt, n - row_start),
         q.V.block(row_start, mini_start, n - row_start, cmini), 0.0, ymini, flops, pool);
    if (mini_start > 0) {
      RealMatrix vv(mini_start, cmini);
      gemm(Op::trans, Op::none, 1.0, q.V.block(row_start, 0, n - row_start, mini_start),
           q.V.block(row_start, mini_start, n - row_start, cmini), 0.0, vv.view(), flops);
      gemm(Op::none, Op::none, -1.0, q.Y.block(top, 0, nt, mini_start), vv.view(), 1.0, ymini, flops, pool);
    }
    RealMatrix ycopy(ymini);
    gemm(Op::none, Op::none, 1.0, ycopy.view(), q.T.block(mini_start, mini_start, cmini, cmini), 0.0, ymini, flops,
         pool);
    out.trace.right_updates.push_back(jj + 1);

    const index nmini = std::min(bw - jj - 1, m);
    if (nmini > 0) {
      gemm(Op::none, Op::trans, -1.0, q.Y.block(top, 0, nt, jj + 1), q.V.block(z + jj + 1, 0, nmini, jj + 1), 1.0,
           a.block(top, z + jj + 1, nt, nmini), flops);
    }
    mini_start = jj + 1;
  }
  return out;
}

namespace detail {

// Rows 0..top-1: Y(0:top) = A(0:top, top:n) V T, then the right update of
// A(0:top, top:n). Row-partitioned; each row's arithmetic is independent of
// the partition.
inline void update_rows_above(MatrixView<double> a, BlockReflector& q, index z, index bw, index m,
                              FlopCounter* flops, WorkerPool* pool) {
  const index n = a.rows;
  const index top = z + m;
  if (top == 0) return;
  const index parts = pool == nullptr ? 1 : std::min<index>(static_cast<index>(pool->size()), top);
  for_each_index(pool, static_cast<std::size_t>(parts), [&](std::size_t part) {
    const Range rg = split_range(top, parts, static_cast<index>(part));
    const index rows = rg.end - rg.begin;
    if (rows == 0) return;
    RealMatrix av(rows, bw);
    gemm(Op::none, Op::none, 1.0, ConstView<double>(a.block(rg.begin, top, rows, n - top)),
         q.V.block(top, 0, n - top, bw), 0.0, av.view(), flops);
    MatrixView<double> y = q.Y.block(rg.begin, 0, rows, bw);
    gemm(Op::none, Op::none, 1.0, av.view(), q.T.view(), 0.0, y, flops);
    const index right = z + bw;
    gemm(Op::none, Op::trans, -1.0, ConstView<double>(y), q.V.block(right, 0, n - right, bw), 1.0,
         a.block(rg.begin, right, rows, n - right), flops);
    if (bw > m) {
      gemm(Op::none, Op::trans, -1.0, ConstView<double>(y.block(0, 0, rows, bw - m)),
           q.V.block(top, 0, right - top, bw - m), 1.0, a.block(rg.begin, top, rows, right - top), flops);
    }
  });
}

// Rows top..n-1, columns z+bw..n-1: right update with Y, then left update
// with (V, T). Column-partitioned.
inline void update_trailing(MatrixView<double> a, const BlockReflector& q, index z, index bw, index m,
                            FlopCounter* flops, WorkerPool* pool) {
  const index n = a.rows;
  const index top = z + m;
  const index left = z + bw;
  const index nt = n - top;
  const index ncols = n - left;
  if (ncols <= 0) return;
  constexpr index min_cols = 8;
  const index parts =
      pool == nullptr ? 1 : std::max<index>(1, std::min<index>(static_cast<index>(pool->size()) * 2, ncols / min_cols));
  for_each_index(pool, static_cast<std::size_t>(parts), [&](std::size_t part) {
    const Range rg = split_range(ncols, parts, static_cast<index>(part));
    const index cols = rg.end - rg.begin;
    if (cols == 0) return;
    MatrixView<double> blk = a.block(top, left + rg.begin, nt, cols);
    gemm(Op::none, Op::trans, -1.0, q.Y.block(top, 0, nt, bw), q.V.block(left + rg.begin, 0, cols, bw), 1.0, blk,
         flops);
    apply_block_reflector(Side::left, q.V.block(top, 0, nt, bw), q.t(), blk, flops);
  });
}

inline void hand_off(ConstView<double> from, MatrixView<double> to, Handoff h, std::vector<Handoff>* log) {
  if (h.rows <= 0 || h.cols <= 0) return;
  copy(from.block(h.row0, h.col0, h.rows, h.cols), to.block(h.row0, h.col0, h.rows, h.cols));
  if (log != nullptr) log->push_back(h);
}

}  // namespace detail

/**
 * @brief Blocked reduction of A to m-Hessenberg form.
 *
 * Panels of b columns are reduced by process_panel. The update for the
 * rows above each panel runs on the panel pool and, with the overlapped
 * strategy, concurrently with the next panel; the trailing rows are updated
 * on the update pool. The overlapped strategy keeps two buffers and records
 * every copy between them; it gives bitwise the same result as sequential.
 */
inline MHessResult mhessenberg_reduce(ConstView<double> a_in, index m, const ReductionOptions& opt = {}) {
  const index n = a_in.rows;
  require_dims(a_in.cols == n, "mhessenberg_reduce: A must be square");
  require_dims(m >= 1 && m < std::max<index>(n, 1), "mhessenberg_reduce: need 1 <= m < n");
  require_dims(opt.block_size >= 1, "mhessenberg_reduce: block size must be positive");
  PhaseTimer timer(opt.counters, Phase::reduction);
  FlopCounter* flops = phase_flops(opt.counters, Phase::reduction);

  MHessResult out;
  RealMatrix host(a_in);
  const index ncols = std::max<index>(n - m - 1, 0);
  const index b = std::min(opt.block_size, std::max<index>(ncols, 1));
  out.panels.reserve(static_cast<std::size_t>((ncols + b - 1) / b));
  const bool overlap = opt.strategy == Strategy::overlapped;
  RealMatrix device;
  if (overlap) device = host;
  MatrixView<double> upd = overlap ? device.view() : host.view();

  std::future<void> rows_above;
  index last_top = n;
  for (index z = 0, i = 0; z < ncols; z += b, ++i) {
    const index bw = std::min(b, ncols - z);
    const index top = z + m;
    using D = Handoff::Direction;
    if (overlap) detail::hand_off(device.view(), host.view(), {D::to_panel, i, top, n - top, z, bw}, opt.handoffs);

    out.panels.push_back(process_panel(host.view(), upd, z, bw, m, flops, opt.update_pool));
    PanelResult& pr = out.panels.back();
    pr.panel_index = i;

    if (overlap) {
      detail::hand_off(host.view(), device.view(), {D::to_update, i, top, n - top, z, bw}, opt.handoffs);
      if (rows_above.valid()) rows_above.get();
      rows_above = std::async(std::launch::async, [&host, &pr, z, bw, m, flops, pool = opt.panel_pool] {
        detail::update_rows_above(host.view(), pr.reflector, z, bw, m, flops, pool);
      });
    } else {
      detail::update_rows_above(host.view(), pr.reflector, z, bw, m, flops, opt.panel_pool);
    }

    detail::update_trailing(upd, pr.reflector, z, bw, m, flops, opt.update_pool);
    if (overlap) {
      detail::hand_off(device.view(), host.view(), {D::to_panel, i, top, bw, z + bw, n - z - bw}, opt.handoffs);
    }
    last_top = top;
  }
  if (rows_above.valid()) rows_above.get();

  if (overlap && last_top < n) {
    copy(device.block(last_top, 0, n - last_top, n), host.block(last_top, 0, n - last_top, n));
  }
  out.Ahat = std::move(host);
  return out;
}

/**
 * @brief Orthogonal reduction of (A, B, C) to controller-Hessenberg form.
 *
 * Householder QR of B, the same reflectors applied to A from both sides and
 * to C from the right, then the blocked m-Hessenberg reduction of A with its
 * reflectors applied to C panel by panel.
 */
inline ControllerHessForm reduce_controller_hessenberg(ConstView<double> a, ConstView<double> b, ConstView<double> c,
                                                       const ReductionOptions& opt = {}) {
  const index n = a.rows;
  const index m = b.cols;
  require_dims(a.cols == n, "reduce_controller_hessenberg: A must be square");
  require_dims(b.rows == n, "reduce_controller_hessenberg: B must have n rows");
  require_dims(c.cols == n, "reduce_controller_hessenberg: C must have n columns");
  require_dims(m >= 1 && m < n, "reduce_controller_hessenberg: need 1 <= m < n");

  FlopCounter* flops = phase_flops(opt.counters, Phase::reduction);
  RealMatrix aw(a);
  RealMatrix bw(b);
  RealMatrix cw(c);
  std::optional<RealMatrix> q;
  if (opt.accumulate_q) q = RealMatrix::identity(n);

  {
    PhaseTimer timer(opt.counters, Phase::reduction);
    std::vector<double> v(static_cast<std::size_t>(n));
    std::vector<double> w(static_cast<std::size_t>(n));
    for (index k = 0; k < m; ++k) {
      std::span<double> x(&bw(k, k), static_cast<std::size_t>(n - k));
      const double tau = make_householder_inplace(x, flops);
      const index len = n - k;
      v[0] = 1.0;
      for (index i = 1; i < len; ++i) v[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)];
      std::fill(x.begin() + 1, x.end(), 0.0);
      if (tau == 0.0) continue;
      // B(k:n, k+1:m) <- H B
      for (index j = k + 1; j < m; ++j) {
        double acc = 0.0;
        for (index i = 0; i < len; ++i) acc += v[static_cast<std::size_t>(i)] * bw(k + i, j);
        acc *= tau;
        for (index i = 0; i < len; ++i) bw(k + i, j) -= acc * v[static_cast<std::size_t>(i)];
      }
      // A <- H A H on rows / columns k..n-1; C <- C H; Q <- Q H
      auto right = [&](RealMatrix& mat) {
        for (index i = 0; i < mat.rows(); ++i) {
          double acc = 0.0;
          for (index l = 0; l < len; ++l) acc += mat(i, k + l) * v[static_cast<std::size_t>(l)];
          acc *= tau;
          for (index l = 0; l < len; ++l) mat(i, k + l) -= acc * v[static_cast<std::size_t>(l)];
        }
        add_flops(flops, static_cast<std::uint64_t>(4 * mat.rows() * len));
      };
      for (index j = 0; j < n; ++j) {
        double acc = 0.0;
        for (index i = 0; i < len; ++i) acc += v[static_cast<std::size_t>(i)] * aw(k + i, j);
        acc *= tau;
        for (index i = 0; i < len; ++i) aw(k + i, j) -= acc * v[static_cast<std::size_t>(i)];
      }
      add_flops(flops, static_cast<std::uint64_t>(4 * n * len + 4 * (m - k) * len));
      right(aw);
      right(cw);
      if (q) right(*q);
    }
  }

  MHessResult red = mhessenberg_reduce(aw.view(), m, opt);
  {
    PhaseTimer timer(opt.counters, Phase::reduction);
    for (const PanelResult& pr : red.panels) {
      apply_block_reflector(Side::right, pr.reflector, cw.view(), flops);
      if (q) apply_block_reflector(Side::right, pr.reflector, q->view(), flops);
    }
  }

  ControllerHessForm out;
  out.Ahat = std::move(red.Ahat);
  out.Bhat = std::move(bw);
  out.Chat = std::move(cw);
  out.Q = std::move(q);
  out.m = m;
  return out;
}

/// Checks the exact zero pattern of a controller-Hessenberg triple.
inline bool has_controller_hessenberg_pattern(const ControllerHessForm& f) {
  const index n = f.n();
  for (index j = 0; j < n; ++j)
    for (index i = j + f.m + 1; i < n; ++i)
      if (f.Ahat(i, j) != 0.0) return false;
  for (index j = 0; j < f.Bhat.cols(); ++j)
    for (index i = j + 1; i < n; ++i)
      if (f.Bhat(i, j) != 0.0) return false;
  return true;
}

}  // namespace mshift
