// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include <mshift/batched_factor.hpp>
#include <mshift/core.hpp>
#include <mshift/dense.hpp>
#include <mshift/flops.hpp>
#include <mshift/givens_schedule.hpp>
#include <mshift/hessenberg.hpp>
#include <mshift/worker_pool.hpp>

namespace mshift {

struct SolverConfig {
  index nb = 64;     // rows eliminated per sliding-window step
  index batch = 16;  // shifts processed together
  WorkerPool* pool = nullptr;
  PhaseCounters* counters = nullptr;
  ScheduleCache* schedules = nullptr;  // shared across calls when set
};

/// Per-shift outcome. `pivot` is the zero-based row of the first negligible pivot.
struct ShiftStatus {
  index pivot = -1;
  [[nodiscard]] bool ok() const noexcept { return pivot < 0; }
};

struct TransferFunctionResult {
  ComplexMatrix G;  // p x (s*m), slice l = G(shift l)
  std::vector<cplx> shifts;
  std::vector<ShiftStatus> status;

  [[nodiscard]] ConstView<cplx> slice(index l, index m) const noexcept { return G.block(0, l * m, G.rows(), m); }
};

struct ShiftedSolution {
  ComplexMatrix X;  // n x s, column l solves the system for shift l
  std::vector<ShiftStatus> status;
};

/// ||Ahat - sigma I||_F given ||Ahat||_F^2.
inline double shifted_frobenius(const RealMatrix& a, double fro2, cplx sigma) {
  double s = fro2;
  for (index i = 0; i < a.rows(); ++i) s += std::norm(a(i, i) - sigma) - a(i, i) * a(i, i);
  return std::sqrt(std::max(s, 0.0));
}

/// Pivot threshold n * eps * ||Ahat - sigma I||_F.
inline double pivot_tolerance(const RealMatrix& a, double fro2, cplx sigma) {
  return static_cast<double>(a.rows()) * eps * shifted_frobenius(a, fro2, sigma);
}

namespace detail {

inline double frobenius2(const RealMatrix& a) {
  double s = 0.0;
  for (double x : a.values()) s += x * x;
  return s;
}

class ScheduleSource {
 public:
  explicit ScheduleSource(ScheduleCache* shared) : cache_(shared) {
    if (cache_ == nullptr) {
      own_ = std::make_unique<ScheduleCache>();
      cache_ = own_.get();
    }
  }
  std::shared_ptr<const AnnihilationSchedule> get(index rows, index cols) { return cache_->get(rows, cols); }

 private:
  ScheduleCache* cache_;
  std::unique_ptr<ScheduleCache> own_;
};

inline cplx nan_value() { return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()}; }

/**
 * Bottom-up RQ sweep over the stack [top; A - sigma I] for one batch of
 * shifts, followed by the m x m head solve. Returns top * P* (:, 0:m) *
 * R11^{-1} * rhs_l for each shift, slices of width k = rhs.cols / s.
 */
inline ComplexMatrix rq_sweep(const ComplexMatrix& stack, index q, const RealMatrix& a, index m,
                              std::span<const cplx> shifts, ConstView<cplx> rhs, double fro2,
                              const SolverConfig& cfg, ScheduleSource& schedules, std::span<ShiftStatus> status) {
  const index n = a.rows();
  const auto s = static_cast<index>(shifts.size());
  const index k_rhs = rhs.cols / std::max<index>(s, 1);
  PhaseCounters* pc = cfg.counters;
  WorkerPool* pool = cfg.pool;

  std::vector<double> tol(static_cast<std::size_t>(s));
  for (index l = 0; l < s; ++l) tol[static_cast<std::size_t>(l)] = pivot_tolerance(a, fro2, shifts[l]);
  auto flag = [&](index l, index pivot) {
    ShiftStatus& st = status[static_cast<std::size_t>(l)];
    if (st.ok() || pivot > st.pivot) st.pivot = pivot;
  };

  ComplexMatrix z2(q + n, s * m);
  ComplexMatrix z2new(q + n, s * m);
  for (index l = 0; l < s; ++l) {
    copy(stack.block(0, n - m, q + n, m), z2.block(0, l * m, q + n, m));
    for (index t = 0; t < m; ++t) z2(q + n - m + t, l * m + t) -= shifts[l];
  }

  for (index k = n; k >= m + 1;) {
    const index nb = std::min(cfg.nb, k - m);
    const index mnb = std::min(m, nb);
    const index r = q + k - nb;
    const ConstView<cplx> z1 = stack.block(0, k - m - nb, q + k, nb);

    BlockBatch batch(s, nb, nb + m);
    for (index l = 0; l < s; ++l) {
      MatrixView<cplx> blk = batch.block(l);
      copy(z1.block(r, 0, nb, nb), blk.block(0, 0, nb, nb));
      copy(z2.block(r, l * m, nb, m), blk.block(0, nb, nb, m));
      for (index j = 0; j + m < nb; ++j) blk(j, j + m) -= shifts[l];
    }
    const auto sched = schedules.get(nb, nb + m);
    {
      PhaseTimer timer(pc, Phase::batched_rq);
      batched_rq(batch, *sched, pool, phase_flops(pc, Phase::batched_rq));
    }
    for (index l = 0; l < s; ++l) {
      ConstView<cplx> blk = batch.block(l);
      for (index j = nb - 1; j >= 0; --j) {
        if (std::abs(blk(j, j + m)) <= tol[static_cast<std::size_t>(l)]) {
          flag(l, k - nb + j);
          break;
        }
      }
    }

    {
      PhaseTimer timer(pc, Phase::batched_gemm);
      for_each_index(pool, static_cast<std::size_t>(s), [&](std::size_t li) {
        const auto l = static_cast<index>(li);
        ConstView<cplx> pl = batch.p(l);
        gemm(Op::none, Op::none, cplx(1.0), z2.block(0, l * m, r, m), pl.block(nb, 0, m, m), cplx(0.0),
             z2new.block(0, l * m, r, m), phase_flops(pc, Phase::batched_gemm));
        for (index t = 0; t < mnb; ++t)
          for (index c = 0; c < m; ++c) z2new(r - m + t, l * m + c) -= shifts[l] * pl(t, c);
      });
    }
    {
      PhaseTimer timer(pc, Phase::outer_gemm);
      ComplexMatrix pcat(nb, s * m);
      for (index l = 0; l < s; ++l) copy(batch.p(l).block(0, 0, nb, m), pcat.block(0, l * m, nb, m));
      gemm(Op::none, Op::none, cplx(1.0), z1.block(0, 0, r, nb), pcat.view(), cplx(1.0), z2new.block(0, 0, r, s * m),
           phase_flops(pc, Phase::outer_gemm), pool);
    }
    std::swap(z2, z2new);
    k -= nb;
  }

  ComplexMatrix out(q, s * k_rhs);
  PhaseTimer timer(pc, Phase::tail);
  FlopCounter* tail_flops = phase_flops(pc, Phase::tail);
  for_each_index(pool, static_cast<std::size_t>(s), [&](std::size_t li) {
    const auto l = static_cast<index>(li);
    const index mm = std::min(m, n);
    ComplexMatrix zh(z2.block(0, l * m, q + mm, mm));
    ComplexMatrix bw(rhs.block(0, l * k_rhs, mm, k_rhs));
    ComplexMatrix x(mm, k_rhs);
    std::uint64_t count = 0;
    bool singular = !status[li].ok();
    for (index i = mm - 1; i >= 0; --i) {
      for (index j = 0; j < i; ++j) {
        const GivensRotation g = givens(zh(q + i, i), zh(q + i, j)).rot;
        if (g.is_identity()) continue;
        detail::rotate_columns(zh.view(), 0, q + i + 1, j, i, g);
        zh(q + i, j) = 0.0;
        count += 20 * static_cast<std::uint64_t>(q + i + 1);
      }
      if (std::abs(zh(q + i, i)) <= tol[li]) {
        flag(l, i);
        singular = true;
        break;
      }
      for (index c = 0; c < k_rhs; ++c) x(i, c) = bw(i, c) / zh(q + i, i);
      for (index c = 0; c < k_rhs; ++c)
        for (index j = 0; j < i; ++j) bw(j, c) -= zh(q + j, i) * x(i, c);
    }
    MatrixView<cplx> dst = out.block(0, l * k_rhs, q, k_rhs);
    if (singular) {
      fill(dst, nan_value());
    } else {
      gemm(Op::none, Op::none, cplx(1.0), zh.block(0, 0, q, mm), x.view(), cplx(0.0), dst);
      count += 8 * static_cast<std::uint64_t>(q * mm * k_rhs);
    }
    add_flops(tail_flops, count);
  });
  return out;
}

// Runs `body(first, count)` over consecutive batches of at most cfg.batch shifts.
template <typename F>
void for_each_batch(index total, index batch, F&& body) {
  const index s = std::max<index>(batch, 1);
  for (index first = 0; first < total; first += s) body(first, std::min(s, total - first));
}

inline void check_chf(const ControllerHessForm& f) {
  require_dims(f.Ahat.rows() == f.Ahat.cols(), "solver: Ahat must be square");
  require_dims(f.m >= 1 && f.m <= f.n(), "solver: need 1 <= m <= n");
  require_dims(f.Bhat.rows() == f.n() && f.Bhat.cols() == f.m, "solver: Bhat must be n x m");
  require_dims(f.Chat.cols() == f.n(), "solver: Chat must have n columns");
}

}  // namespace detail

/**
 * @brief G(sigma) = Chat (sigma I - Ahat)^{-1} Bhat for every shift.
 *
 * Shifts are processed in batches of cfg.batch; within a batch the
 * shift-independent window columns are shared. A shift whose factor has a
 * negligible pivot gets status.pivot >= 0 and a NaN slice; the other shifts
 * are unaffected.
 */
inline TransferFunctionResult eval_transfer_function(const ControllerHessForm& f, std::span<const cplx> shifts,
                                                     const SolverConfig& cfg = {}) {
  detail::check_chf(f);
  require_dims(cfg.nb >= 1, "eval_transfer_function: nb must be positive");
  const index n = f.n();
  const index m = f.m;
  const index p = f.p();
  const auto total = static_cast<index>(shifts.size());

  ComplexMatrix stack(p + n, n);
  copy(f.Chat, stack.block(0, 0, p, n));
  copy(f.Ahat, stack.block(p, 0, n, n));
  const double fro2 = detail::frobenius2(f.Ahat);
  detail::ScheduleSource schedules(cfg.schedules);

  TransferFunctionResult res;
  res.shifts.assign(shifts.begin(), shifts.end());
  res.status.assign(static_cast<std::size_t>(total), {});
  res.G = ComplexMatrix(p, total * m);
  detail::for_each_batch(total, cfg.batch, [&](index first, index s) {
    ComplexMatrix rhs(m, s * m);
    for (index l = 0; l < s; ++l) copy(f.Bhat.block(0, 0, m, m), rhs.block(0, l * m, m, m));
    ComplexMatrix g = detail::rq_sweep(stack, p, f.Ahat, m, shifts.subspan(first, s), rhs.view(), fro2, cfg,
                                       schedules, std::span(res.status).subspan(first, s));
    for (index j = 0; j < g.cols(); ++j)
      for (index i = 0; i < p; ++i) res.G(i, first * m + j) = -g(i, j);
  });
  return res;
}

/**
 * @brief Solves (Ahat - sigma_l I) x_l = Bhat * bhat_l for every shift.
 *
 * `coeffs` is m x s; column l holds bhat_l. The window stacks an identity in
 * place of Chat so the sweep accumulates the needed columns of P*.
 */
inline ShiftedSolution solve_shifted_reduced(const ControllerHessForm& f, std::span<const cplx> shifts,
                                             ConstView<cplx> coeffs, const SolverConfig& cfg = {}) {
  detail::check_chf(f);
  require_dims(cfg.nb >= 1, "solve_shifted_reduced: nb must be positive");
  const index n = f.n();
  const index m = f.m;
  const auto total = static_cast<index>(shifts.size());
  require_dims(coeffs.rows == m && coeffs.cols == total, "solve_shifted_reduced: coefficients must be m x s");

  ComplexMatrix stack(2 * n, n);
  for (index i = 0; i < n; ++i) stack(i, i) = 1.0;
  copy(f.Ahat, stack.block(n, 0, n, n));
  const double fro2 = detail::frobenius2(f.Ahat);
  detail::ScheduleSource schedules(cfg.schedules);

  ShiftedSolution res;
  res.status.assign(static_cast<std::size_t>(total), {});
  res.X = ComplexMatrix(n, total);
  detail::for_each_batch(total, cfg.batch, [&](index first, index s) {
    ComplexMatrix rhs(m, s);
    for (index l = 0; l < s; ++l)
      for (index i = 0; i < m; ++i) {
        cplx acc{};
        for (index j = i; j < m; ++j) acc += f.Bhat(i, j) * coeffs(j, first + l);
        rhs(i, l) = acc;
      }
    ComplexMatrix x = detail::rq_sweep(stack, n, f.Ahat, m, shifts.subspan(first, s), rhs.view(), fro2, cfg,
                                       schedules, std::span(res.status).subspan(first, s));
    copy(x, res.X.block(0, first, n, s));
  });
  return res;
}

/**
 * @brief Solves (Ahat - sigma_l I)^T x_l = c_l for general right-hand sides.
 *
 * LQ of the transposed window processed top-down, with the forward
 * substitution fused into the factorization and x accumulated on the fly in
 * the lower half of the stacked vector w = [y; x]. The window starts as
 * [Ahat^T; -I]; full factors are never formed.
 */
inline ShiftedSolution solve_shifted_transposed(const ControllerHessForm& f, std::span<const cplx> shifts,
                                                ConstView<cplx> c, const SolverConfig& cfg = {}) {
  detail::check_chf(f);
  require_dims(cfg.nb >= 1, "solve_shifted_transposed: nb must be positive");
  const index n = f.n();
  const index m = f.m;
  const auto total = static_cast<index>(shifts.size());
  require_dims(c.rows == n && c.cols == total, "solve_shifted_transposed: rhs must be n x s");

  ComplexMatrix at(2 * n, n);
  for (index j = 0; j < n; ++j)
    for (index i = 0; i < n; ++i) at(i, j) = f.Ahat(j, i);
  for (index i = 0; i < n; ++i) at(n + i, i) = -1.0;
  const double fro2 = detail::frobenius2(f.Ahat);
  detail::ScheduleSource schedules(cfg.schedules);
  PhaseCounters* pc = cfg.counters;
  WorkerPool* pool = cfg.pool;

  ShiftedSolution res;
  res.status.assign(static_cast<std::size_t>(total), {});
  res.X = ComplexMatrix(n, total);
  detail::for_each_batch(total, cfg.batch, [&](index first, index s) {
    const auto sh = shifts.subspan(first, s);
    auto status = std::span(res.status).subspan(first, s);
    std::vector<double> tol(static_cast<std::size_t>(s));
    for (index l = 0; l < s; ++l) tol[static_cast<std::size_t>(l)] = pivot_tolerance(f.Ahat, fro2, sh[l]);
    auto flag = [&](index l, index pivot) {
      ShiftStatus& st = status[static_cast<std::size_t>(l)];
      if (st.ok()) st.pivot = pivot;
    };

    ComplexMatrix w(2 * n, s);
    copy(c.block(0, first, n, s), w.block(0, 0, n, s));
    ComplexMatrix z2(2 * n, s * m);
    ComplexMatrix z2new(2 * n, s * m);
    for (index l = 0; l < s; ++l) {
      copy(at.block(0, 0, 2 * n, m), z2.block(0, l * m, 2 * n, m));
      for (index t = 0; t < m; ++t) z2(t, l * m + t) -= sh[l];
    }

    for (index k = 0; k < n - m;) {
      const index nb = std::min(cfg.nb, n - m - k);
      const index mnb = std::min(m, nb);
      const ConstView<cplx> z1 = at.block(0, k + m, 2 * n, nb);

      BlockBatch batch(s, nb, nb + m);
      for (index l = 0; l < s; ++l) {
        MatrixView<cplx> blk = batch.block(l);
        copy(z2.block(k, l * m, nb, m), blk.block(0, 0, nb, m));
        copy(z1.block(k, 0, nb, nb), blk.block(0, m, nb, nb));
        for (index j = 0; j + m < nb; ++j) blk(j + m, m + j) -= sh[l];
      }
      const auto sched = schedules.get(nb, nb + m);
      std::vector<PivotStatus> piv;
      {
        PhaseTimer timer(pc, Phase::batched_rq);
        piv = batched_lq(batch, *sched, w.block(k, 0, nb, s), tol, pool, phase_flops(pc, Phase::batched_rq));
      }
      for (index l = 0; l < s; ++l)
        if (!piv[static_cast<std::size_t>(l)].ok()) flag(l, k + piv[static_cast<std::size_t>(l)].pivot);

      const index below = k + nb;
      const index nbelow = 2 * n - below;
      ComplexMatrix dw(nb + m, s);
      ComplexMatrix dw_tail(nb, s);
      ComplexMatrix pcat(nb, s * m);
      {
        PhaseTimer timer(pc, Phase::batched_gemm);
        FlopCounter* fl = phase_flops(pc, Phase::batched_gemm);
        for_each_index(pool, static_cast<std::size_t>(s), [&](std::size_t li) {
          const auto l = static_cast<index>(li);
          ConstView<cplx> pl = batch.p(l);
          gemm(Op::none, Op::none, cplx(1.0), pl.block(0, 0, nb + m, nb), w.block(k, l, nb, 1), cplx(0.0),
               dw.block(0, l, nb + m, 1), fl);
          gemm(Op::none, Op::none, cplx(-1.0), z2.block(below, l * m, nbelow, m), dw.block(0, l, m, 1), cplx(1.0),
               w.block(below, l, nbelow, 1), fl);
          gemm(Op::none, Op::none, cplx(1.0), z2.block(below, l * m, nbelow, m), pl.block(0, nb, m, m), cplx(0.0),
               z2new.block(below, l * m, nbelow, m), fl);
          copy(dw.block(m, l, nb, 1), dw_tail.block(0, l, nb, 1));
          copy(pl.block(m, nb, nb, m), pcat.block(0, l * m, nb, m));
        });
      }
      {
        PhaseTimer timer(pc, Phase::outer_gemm);
        FlopCounter* fl = phase_flops(pc, Phase::outer_gemm);
        gemm(Op::none, Op::none, cplx(-1.0), z1.block(below, 0, nbelow, nb), dw_tail.view(), cplx(1.0),
             w.block(below, 0, nbelow, s), fl, pool);
        gemm(Op::none, Op::none, cplx(1.0), z1.block(below, 0, nbelow, nb), pcat.view(), cplx(1.0),
             z2new.block(below, 0, nbelow, s * m), fl, pool);
      }
      for (index l = 0; l < s; ++l) {
        ConstView<cplx> pl = batch.p(l);
        for (index t = nb - mnb; t < nb; ++t) {
          const index row = k + m + t;
          w(row, l) += sh[l] * dw(m + t, l);
          for (index c2 = 0; c2 < m; ++c2) z2new(row, l * m + c2) -= sh[l] * pl(m + t, nb + c2);
        }
      }
      std::swap(z2, z2new);
      k += nb;
    }

    PhaseTimer timer(pc, Phase::tail);
    FlopCounter* tail_flops = phase_flops(pc, Phase::tail);
    for_each_index(pool, static_cast<std::size_t>(s), [&](std::size_t li) {
      const auto l = static_cast<index>(li);
      const index r0 = n - m;
      const index rows = 2 * n - r0;
      ComplexMatrix zt(z2.block(r0, l * m, rows, m));
      cplx* wl = &w(0, l);
      std::uint64_t count = 0;
      bool singular = !status[li].ok();
      for (index kk = 0; kk < m && !singular; ++kk) {
        for (index j = kk + 1; j < m; ++j) {
          const GivensRotation g = givens(zt(kk, kk), zt(kk, j)).rot;
          if (g.is_identity()) continue;
          detail::rotate_columns(zt.view(), kk, rows - kk, j, kk, g);
          zt(kk, j) = 0.0;
          count += 20 * static_cast<std::uint64_t>(rows - kk);
        }
        if (std::abs(zt(kk, kk)) <= tol[li]) {
          flag(l, r0 + kk);
          singular = true;
          break;
        }
        const index rr = r0 + kk;
        wl[rr] /= zt(kk, kk);
        for (index i = kk + 1; i < rows; ++i) wl[r0 + i] -= zt(i, kk) * wl[rr];
        count += 8 * static_cast<std::uint64_t>(rows);
      }
      MatrixView<cplx> dst = res.X.block(0, first + l, n, 1);
      if (singular) {
        fill(dst, detail::nan_value());
      } else {
        copy(w.block(n, l, n, 1), dst);
      }
      add_flops(tail_flops, count);
    });
  });
  return res;
}

/**
 * @brief ||(Ahat - sigma I) x - rhs|| / (||Ahat - sigma I||_F ||x|| + ||rhs||).
 *
 * With `transposed` the residual of (Ahat - sigma I)^T x = rhs is measured.
 */
inline double residual_certificate(const RealMatrix& a, cplx sigma, std::span<const cplx> x, std::span<const cplx> rhs,
                                   bool transposed = false) {
  const index n = a.rows();
  double res2 = 0.0;
  double x2 = 0.0;
  double b2 = 0.0;
  for (index i = 0; i < n; ++i) {
    cplx acc = -sigma * x[static_cast<std::size_t>(i)];
    for (index j = 0; j < n; ++j) acc += (transposed ? a(j, i) : a(i, j)) * x[static_cast<std::size_t>(j)];
    res2 += std::norm(acc - rhs[static_cast<std::size_t>(i)]);
    x2 += std::norm(x[static_cast<std::size_t>(i)]);
    b2 += std::norm(rhs[static_cast<std::size_t>(i)]);
  }
  const double fro = shifted_frobenius(a, detail::frobenius2(a), sigma);
  return std::sqrt(res2) / (fro * std::sqrt(x2) + std::sqrt(b2));
}

/**
 * @brief Largest singular value by one-sided (Hestenes) Jacobi.
 *
 * Works on the orientation with fewer columns; converged when every column
 * pair is orthogonal to `tol` relative.
 */
inline double largest_singular_value(ConstView<cplx> g, double tol = 1e-15) {
  ComplexMatrix a = g.cols <= g.rows ? ComplexMatrix(g) : adjoint(g);
  const index rows = a.rows();
  const index cols = a.cols();
  for (int sweep = 0; sweep < 60; ++sweep) {
    bool rotated = false;
    for (index i = 0; i + 1 < cols; ++i) {
      for (index j = i + 1; j < cols; ++j) {
        double alpha = 0.0;
        double beta = 0.0;
        cplx gamma{};
        for (index r = 0; r < rows; ++r) {
          alpha += std::norm(a(r, i));
          beta += std::norm(a(r, j));
          gamma += std::conj(a(r, i)) * a(r, j);
        }
        const double ag = std::abs(gamma);
        if (ag == 0.0 || ag <= tol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const cplx phase = std::conj(gamma) / ag;
        const double zeta = (beta - alpha) / (2.0 * ag);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double cs = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = cs * t;
        for (index r = 0; r < rows; ++r) {
          const cplx ai = a(r, i);
          const cplx aj = a(r, j) * phase;
          a(r, i) = cs * ai - sn * aj;
          a(r, j) = sn * ai + cs * aj;
        }
      }
    }
    if (!rotated) break;
  }
  double best = 0.0;
  for (index j = 0; j < cols; ++j) {
    double s2 = 0.0;
    for (index r = 0; r < rows; ++r) s2 += std::norm(a(r, j));
    best = std::max(best, std::sqrt(s2));
  }
  return best;
}

/**
 * @brief ||G(z)||_2 over a set of points; +infinity where zI - Ahat is
 * numerically singular.
 */
inline std::vector<double> structured_pseudospectrum_grid(const ControllerHessForm& f, std::span<const cplx> grid,
                                                          const SolverConfig& cfg = {}) {
  const TransferFunctionResult tf = eval_transfer_function(f, grid, cfg);
  std::vector<double> out(grid.size());
  for (std::size_t l = 0; l < grid.size(); ++l) {
    out[l] = tf.status[l].ok() ? largest_singular_value(tf.slice(static_cast<index>(l), f.m))
                               : std::numeric_limits<double>::infinity();
  }
  return out;
}

}  // namespace mshift
