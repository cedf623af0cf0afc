// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <mshift/core.hpp>

namespace mshift {

/// One Givens rotation: zero entry (row, target) using column `helper` (helper > target). Zero-based.
struct Rotation {
  index row;
  index target;
  index helper;

  friend bool operator==(const Rotation&, const Rotation&) = default;
};

/**
 * @brief Step-grouped rotation plan that triangularizes an nRows x nCols
 * trapezoidal block from the right.
 *
 * Row r of the block is structurally nonzero in columns r .. r + delta
 * (delta = nCols - nRows). The first delta of those are annihilated; the last
 * one becomes the diagonal of R. Rotations within one step touch disjoint
 * columns and may run concurrently.
 */
struct AnnihilationSchedule {
  index n_rows = 0;
  index n_cols = 0;
  std::vector<index> job_size;
  std::vector<Rotation> rot_info;

  [[nodiscard]] index num_steps() const noexcept { return static_cast<index>(job_size.size()); }
  [[nodiscard]] index num_rots() const noexcept { return static_cast<index>(rot_info.size()); }
  [[nodiscard]] index delta() const noexcept { return n_cols - n_rows; }

  /// Rotations of step t, as offsets into rot_info.
  [[nodiscard]] std::vector<std::span<const Rotation>> steps() const {
    std::vector<std::span<const Rotation>> out;
    out.reserve(job_size.size());
    std::size_t offset = 0;
    for (index sz : job_size) {
      out.emplace_back(rot_info.data() + offset, static_cast<std::size_t>(sz));
      offset += static_cast<std::size_t>(sz);
    }
    return out;
  }

  friend bool operator==(const AnnihilationSchedule&, const AnnihilationSchedule&) = default;
};

/**
 * @brief Greedy parallel annihilation plan.
 *
 * Rows are scanned bottom-up, targets left to right, helpers right to left
 * starting at the row's last column. An entry can serve as target or helper
 * only when it is ready (not yet annihilated, not a helper this step) and
 * available (everything below it in its column is already zero). The bottom
 * row and the leading diagonal entries (r, r) start out available; zeroing
 * (r, c) makes (r-1, c) available from the next step on.
 */
inline AnnihilationSchedule greedy_schedule(index n_rows, index n_cols) {
  if (n_rows < 1 || n_cols < n_rows) throw DimensionError("greedy_schedule: need nCols >= nRows >= 1");
  AnnihilationSchedule s;
  s.n_rows = n_rows;
  s.n_cols = n_cols;
  const index delta = n_cols - n_rows;
  if (delta == 0) return s;

  const auto at = [n_cols](index r, index c) { return static_cast<std::size_t>(r * n_cols + c); };
  const std::size_t cells = static_cast<std::size_t>(n_rows * n_cols);
  std::vector<char> ready(cells, 0);
  std::vector<char> avail(cells, 0);
  std::vector<char> busy(cells, 0);
  for (index r = 0; r < n_rows; ++r) {
    for (index c = r; c <= r + delta; ++c) ready[at(r, c)] = 1;
    avail[at(r, r)] = 1;
  }
  for (index c = n_rows - 1; c < n_cols; ++c) avail[at(n_rows - 1, c)] = 1;

  const index total = n_rows * delta;
  std::vector<Rotation> previous;
  while (s.num_rots() < total) {
    for (std::size_t i = 0; i < cells; ++i) {
      if (busy[i] != 0) {
        ready[i] = 1;
        busy[i] = 0;
      }
    }
    for (const Rotation& rot : previous) {
      if (rot.row > 0) avail[at(rot.row - 1, rot.target)] = 1;
    }

    std::vector<Rotation> current;
    for (index r = n_rows - 1; r >= 0; --r) {
      for (index c1 = r; c1 <= r + delta; ++c1) {
        if (ready[at(r, c1)] == 0 || avail[at(r, c1)] == 0) continue;
        for (index c2 = r + delta; c2 > c1; --c2) {
          if (ready[at(r, c2)] == 0 || avail[at(r, c2)] == 0) continue;
          current.push_back({r, c1, c2});
          ready[at(r, c1)] = 0;
          ready[at(r, c2)] = 0;
          busy[at(r, c2)] = 1;
          if (r > 0) avail[at(r - 1, c1)] = 0;
          break;
        }
      }
    }
    if (current.empty()) throw std::logic_error("greedy_schedule: no progress possible");
    s.job_size.push_back(static_cast<index>(current.size()));
    s.rot_info.insert(s.rot_info.end(), current.begin(), current.end());
    previous = std::move(current);
  }
  return s;
}

struct ScheduleDiagnostics {
  bool ok = true;
  std::vector<std::string> problems;

  void fail(std::string msg) {
    ok = false;
    problems.push_back(std::move(msg));
  }
};

/**
 * @brief Checks a plan: shapes, disjoint columns per step, every target
 * zeroed exactly once, and no rotation mixing a nonzero entry below its row.
 */
inline ScheduleDiagnostics validate_schedule(const AnnihilationSchedule& s) {
  ScheduleDiagnostics d;
  const index nr = s.n_rows;
  const index nc = s.n_cols;
  const index delta = nc - nr;
  if (nr < 0 || delta < 0) {
    d.fail("invalid shape");
    return d;
  }
  index sum = 0;
  for (index j : s.job_size) {
    if (j < 1) d.fail("empty step");
    sum += j;
  }
  if (sum != s.num_rots()) d.fail("job sizes do not add up to the rotation count");
  if (s.num_rots() != nr * delta) d.fail("rotation count differs from nRows * (nCols - nRows)");
  if (!d.ok) return d;

  // step at which (r, c) is zeroed, -1 if never
  std::vector<index> zeroed(static_cast<std::size_t>(nr * nc), -1);
  const auto at = [nc](index r, index c) { return static_cast<std::size_t>(r * nc + c); };
  const auto name = [](const Rotation& q) {
    std::ostringstream os;
    os << "(" << q.row + 1 << "," << q.target + 1 << "," << q.helper + 1 << ")";
    return os.str();
  };

  const auto steps = s.steps();
  for (std::size_t t = 0; t < steps.size(); ++t) {
    std::vector<char> used(static_cast<std::size_t>(nc), 0);
    for (const Rotation& q : steps[t]) {
      if (q.row < 0 || q.row >= nr || q.target < q.row || q.target >= q.row + delta || q.helper <= q.target ||
          q.helper > q.row + delta) {
        d.fail("rotation " + name(q) + " outside the trapezoid");
        continue;
      }
      for (index c : {q.target, q.helper}) {
        if (used[static_cast<std::size_t>(c)] != 0) {
          d.fail("column clash at step " + std::to_string(t + 1) + " in column " + std::to_string(c + 1));
        }
        used[static_cast<std::size_t>(c)] = 1;
      }
      if (zeroed[at(q.row, q.target)] >= 0) d.fail("target of " + name(q) + " zeroed twice");
      zeroed[at(q.row, q.target)] = static_cast<index>(t);
      if (zeroed[at(q.row, q.helper)] >= 0 && zeroed[at(q.row, q.helper)] < static_cast<index>(t)) {
        d.fail("helper of " + name(q) + " was already zeroed");
      }
    }
  }
  for (index r = 0; r < nr; ++r)
    for (index c = r; c < r + delta; ++c)
      if (zeroed[at(r, c)] < 0) d.fail("target (" + std::to_string(r + 1) + "," + std::to_string(c + 1) + ") never zeroed");
  if (!d.ok) return d;

  for (std::size_t t = 0; t < steps.size(); ++t) {
    for (const Rotation& q : steps[t]) {
      for (index c : {q.target, q.helper}) {
        for (index rr = q.row + 1; rr < nr && rr <= c; ++rr) {
          const index when = c < rr + delta ? zeroed[at(rr, c)] : -1;
          if (when < 0 || when >= static_cast<index>(t)) {
            d.fail("safety: " + name(q) + " at step " + std::to_string(t + 1) + " mixes nonzero (" +
                   std::to_string(rr + 1) + "," + std::to_string(c + 1) + ")");
          }
        }
      }
    }
  }
  return d;
}

/// Grid of 1-based step numbers per block entry; '.' structural zero, 'R' kept diagonal.
inline std::string dump_schedule(const AnnihilationSchedule& s) {
  const index nr = s.n_rows;
  const index nc = s.n_cols;
  std::vector<index> step(static_cast<std::size_t>(nr * nc), 0);
  index t = 1;
  std::size_t offset = 0;
  for (index sz : s.job_size) {
    for (index k = 0; k < sz; ++k) {
      const Rotation& q = s.rot_info[offset++];
      step[static_cast<std::size_t>(q.row * nc + q.target)] = t;
    }
    ++t;
  }
  std::ostringstream os;
  for (index r = 0; r < nr; ++r) {
    for (index c = 0; c < nc; ++c) {
      std::string cell;
      if (c < r || c > r + s.delta()) {
        cell = ".";
      } else if (c == r + s.delta()) {
        cell = "R";
      } else {
        cell = std::to_string(step[static_cast<std::size_t>(r * nc + c)]);
      }
      os << (c == 0 ? "" : " ") << std::string(cell.size() < 3 ? 3 - cell.size() : 0, ' ') << cell;
    }
    os << '\n';
  }
  return os.str();
}

/// Thread-safe memo of schedules keyed by block shape.
class ScheduleCache {
 public:
  std::shared_ptr<const AnnihilationSchedule> get(index n_rows, index n_cols) {
    std::lock_guard lock(mutex_);
    auto& slot = cache_[{n_rows, n_cols}];
    if (!slot) slot = std::make_shared<const AnnihilationSchedule>(greedy_schedule(n_rows, n_cols));
    return slot;
  }

  [[nodiscard]] std::size_t size() const {
    std::lock_guard lock(mutex_);
    return cache_.size();
  }

 private:
  mutable std::mutex mutex_;
  std::map<std::pair<index, index>, std::shared_ptr<const AnnihilationSchedule>> cache_;
};

}  // namespace mshift
