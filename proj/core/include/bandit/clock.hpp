#pragma once

#include <chrono>
#include <cstdint>

namespace bandit {

// Millisecond event-time source. The service uses the system clock; the
// simulator substitutes a logical clock so whole runs replay bit-for-bit.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual int64_t now_ms() = 0;
};

class SystemClock final : public Clock {
 public:
  int64_t now_ms() override {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
  }
};

class SimClock final : public Clock {
 public:
  explicit SimClock(int64_t start_ms = 0) : now_(start_ms) {}
  int64_t now_ms() override { return now_; }
  void set(int64_t t) { now_ = t; }
  void advance(int64_t delta) { now_ += delta; }

 private:
  int64_t now_;
};

}  // namespace bandit
