#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "core/interp.hpp"

namespace hardex::boundless {

struct SafetyPolicy {
  // Overflow offsets tolerated past the end of an object, inclusive.
  int64_t horizon = 4096;
  // Distinct absorbed cells across all objects.
  uint64_t cap = 65536;
};

struct OverflowEvent {
  bool is_write = false;
  int64_t handle = 0;
  int64_t offset = 0;
  uint64_t step = 0;
};

// Absorbs reads and writes that run moderately past the end of an object
// into a side table, so an off-by-a-little bug degrades into bounded scratch
// traffic instead of a crash. Anything negative, past the horizon, or beyond
// the cell budget stays fail-stop.
class OverflowTable final : public interp::MemoryPolicy {
 public:
  explicit OverflowTable(SafetyPolicy policy = {}) : policy_(policy) {}

  interp::MemDecision on_oob_read(int64_t handle, int64_t size, int64_t offset,
                                  uint64_t step) override;
  interp::MemDecision on_oob_write(int64_t handle, int64_t size, int64_t offset, int64_t value,
                                   uint64_t step) override;

  const std::vector<OverflowEvent>& events() const { return events_; }
  size_t cell_count() const { return cells_.size(); }

  // One JSON object per absorbed access, newline separated.
  std::string events_as_json_lines() const;

 private:
  bool tolerable(int64_t size, int64_t offset) const {
    return offset >= 0 && offset <= size + policy_.horizon;
  }

  SafetyPolicy policy_;
  std::map<std::pair<int64_t, int64_t>, int64_t> cells_;
  std::vector<OverflowEvent> events_;
};

}  // namespace hardex::boundless
