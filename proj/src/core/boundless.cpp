#include "core/boundless.hpp"

#include <sstream>

namespace hardex::boundless {

interp::MemDecision OverflowTable::on_oob_read(int64_t handle, int64_t size, int64_t offset,
                                               uint64_t step) {
  if (!tolerable(size, offset)) {
    return {interp::MemDecision::Detect, "unsafe-oob", 0};
  }
  events_.push_back({false, handle, offset, step});
  auto it = cells_.find({handle, offset});
  return {interp::MemDecision::Absorb, "", it == cells_.end() ? 0 : it->second};
}

interp::MemDecision OverflowTable::on_oob_write(int64_t handle, int64_t size, int64_t offset,
                                                int64_t value, uint64_t step) {
  if (!tolerable(size, offset)) {
    return {interp::MemDecision::Detect, "unsafe-oob", 0};
  }
  const auto key = std::make_pair(handle, offset);
  auto it = cells_.find(key);
  if (it == cells_.end()) {
    if (cells_.size() >= policy_.cap) {
      return {interp::MemDecision::Detect, "unsafe-oob", 0};
    }
    cells_.emplace(key, value);
  } else {
    it->second = value;
  }
  events_.push_back({true, handle, offset, step});
  return {interp::MemDecision::Absorb, "", 0};
}

std::string OverflowTable::events_as_json_lines() const {
  std::ostringstream out;
  for (const OverflowEvent& e : events_) {
    out << "{\"kind\":\"" << (e.is_write ? "write" : "read") << "\",\"handle\":" << e.handle
        << ",\"offset\":" << e.offset << ",\"step\":" << e.step << "}\n";
  }
  return out.str();
}

}  // namespace hardex::boundless
