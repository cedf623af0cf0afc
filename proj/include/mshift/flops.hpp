// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <string_view>

namespace mshift {

/// Thread-safe floating point operation tally. Kernels add to it when given one.
class FlopCounter {
 public:
  void add(std::uint64_t n) noexcept { count_.fetch_add(n, std::memory_order_relaxed); }
  [[nodiscard]] std::uint64_t value() const noexcept { return count_.load(std::memory_order_relaxed); }
  void reset() noexcept { count_.store(0, std::memory_order_relaxed); }

 private:
  std::atomic<std::uint64_t> count_{0};
};

inline void add_flops(FlopCounter* c, std::uint64_t n) noexcept {
  if (c != nullptr) c->add(n);
}

enum class Phase : int {
  reduction = 0,
  batched_rq,
  batched_gemm,
  outer_gemm,
  tail,
};

inline constexpr std::array<std::string_view, 5> phase_names{
    "contr-hess-reduction", "small-batched-rq", "batched-gemm", "outer-gemm", "tail-solves"};

/// Per-phase flop and wall-clock accounting for one run.
struct PhaseCounters {
  std::array<FlopCounter, 5> flops;
  std::array<std::atomic<std::int64_t>, 5> nanoseconds{};

  FlopCounter* operator[](Phase p) noexcept { return &flops[static_cast<int>(p)]; }

  void add_time(Phase p, std::chrono::steady_clock::duration d) noexcept {
    nanoseconds[static_cast<int>(p)].fetch_add(
        std::chrono::duration_cast<std::chrono::nanoseconds>(d).count(), std::memory_order_relaxed);
  }
  [[nodiscard]] double seconds(Phase p) const noexcept {
    return static_cast<double>(nanoseconds[static_cast<int>(p)].load()) * 1e-9;
  }
};

/// RAII timer adding its lifetime to a phase.
class PhaseTimer {
 public:
  PhaseTimer(PhaseCounters* counters, Phase phase)
      : counters_(counters), phase_(phase), start_(std::chrono::steady_clock::now()) {}
  ~PhaseTimer() {
    if (counters_ != nullptr) counters_->add_time(phase_, std::chrono::steady_clock::now() - start_);
  }
  PhaseTimer(const PhaseTimer&) = delete;
  PhaseTimer& operator=(const PhaseTimer&) = delete;

 private:
  PhaseCounters* counters_;
  Phase phase_;
  std::chrono::steady_clock::time_point start_;
};

inline FlopCounter* phase_flops(PhaseCounters* c, Phase p) noexcept {
  return c == nullptr ? nullptr : (*c)[p];
}

}  // namespace mshift
