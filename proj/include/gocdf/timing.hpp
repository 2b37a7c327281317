#pragma once

#include <array>
#include <chrono>
#include <string>
#include <vector>

namespace gocdf {

enum class Phase { Objective = 0, Gradient, Retraction, Projection, Linesearch };
inline constexpr int kPhaseCount = 5;

inline const char* phase_name(Phase p) {
  switch (p) {
    case Phase::Objective: return "objective";
    case Phase::Gradient: return "gradient";
    case Phase::Retraction: return "retraction";
    case Phase::Projection: return "projection";
    case Phase::Linesearch: return "linesearch";
  }
  return "?";
}

/// Exclusive phase timer: nested phases pause their parent, so the phase
/// totals never double count and always sum to at most the wall time.
class PhaseTimer {
 public:
  using Clock = std::chrono::steady_clock;

  PhaseTimer() : start_(Clock::now()) {}

  void push(Phase p) {
    const auto now = Clock::now();
    if (!stack_.empty()) charge(stack_.back(), now);
    stack_.push_back(p);
    mark_ = now;
  }

  void pop() {
    const auto now = Clock::now();
    charge(stack_.back(), now);
    stack_.pop_back();
    mark_ = now;
  }

  double seconds(Phase p) const { return totals_[static_cast<int>(p)]; }
  double elapsed() const { return std::chrono::duration<double>(Clock::now() - start_).count(); }
  const std::array<double, kPhaseCount>& totals() const { return totals_; }

 private:
  void charge(Phase p, Clock::time_point now) {
    totals_[static_cast<int>(p)] += std::chrono::duration<double>(now - mark_).count();
  }

  Clock::time_point start_;
  Clock::time_point mark_;
  std::vector<Phase> stack_;
  std::array<double, kPhaseCount> totals_{};
};

class ScopedPhase {
 public:
  ScopedPhase(PhaseTimer& t, Phase p) : t_(t) { t_.push(p); }
  ~ScopedPhase() { t_.pop(); }
  ScopedPhase(const ScopedPhase&) = delete;
  ScopedPhase& operator=(const ScopedPhase&) = delete;

 private:
  PhaseTimer& t_;
};

}  // namespace gocdf
