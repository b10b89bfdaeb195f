#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "core/ir.hpp"

namespace hardex::interp {

enum class Status { Halted, Detected, Crashed, HangLimit };

std::string_view status_name(Status s);

// Cells are sparse: unwritten in-bounds words read as 0. `size` is the
// declared bound; nothing outside it is stored here.
struct MemObject {
  int64_t size = 0;
  std::unordered_map<int64_t, int64_t> cells;
};

struct MachineState {
  std::array<int64_t, ir::kNumRegisters> regs{};
  std::map<int64_t, MemObject> memory;  // handle -> object; handles start at 1
  int64_t next_handle = 1;
  std::vector<int64_t> input;
  std::vector<int64_t> output;
  int64_t pc = 0;
  uint64_t dyn_insts = 0;
  uint64_t cycles = 0;
  uint64_t rollbacks = 0;
  uint64_t input_warnings = 0;
};

// What a memory policy decides for an access outside [0, size).
struct MemDecision {
  enum Kind { Crash, Detect, Absorb } kind = Crash;
  std::string reason;
  int64_t value = 0;  // read value when absorbed
};

class MemoryPolicy {
 public:
  virtual ~MemoryPolicy() = default;
  virtual MemDecision on_oob_read(int64_t handle, int64_t size, int64_t offset, uint64_t step) = 0;
  virtual MemDecision on_oob_write(int64_t handle, int64_t size, int64_t offset, int64_t value,
                                   uint64_t step) = 0;
};

struct Hooks {
  MemoryPolicy* memory = nullptr;
  // Surcharge cycles for touching (handle, page). Fires on in-bounds
  // load/store words and on allocation (first page).
  std::function<uint64_t(int64_t handle, int64_t page)> cost;
  // False denies the named service call; execution stops Detected(denied-syscall).
  std::function<bool(std::string_view)> syscall_allowed;
  // Runs before each step; `step` is 1-based and equals dyn_insts after the step.
  std::function<void(MachineState&, uint64_t step)> pre_step;
  // Maps the fetched opcode; identity when absent. Lets campaigns model
  // decoder faults without mutating the program.
  std::function<ir::Opcode(int64_t pc, ir::Opcode op)> opcode_map;
};

struct Limits {
  uint64_t max_steps = 10'000'000;
  int max_retries = 3;  // per transactional region instance
};

struct ExecResult {
  Status status = Status::Halted;
  std::string reason;  // Detected reason or Crashed trap, empty otherwise
  std::vector<int64_t> output;
  uint64_t dyn_insts = 0;
  uint64_t cycles = 0;
  uint64_t rollbacks = 0;
  uint64_t input_warnings = 0;

  friend bool operator==(const ExecResult&, const ExecResult&) = default;
};

// Deterministic given (p, input, limits, hooks). Never throws on program
// misbehavior; everything lands in ExecResult.
ExecResult execute(const ir::IRProgram& p, const std::vector<int64_t>& input,
                   const Limits& limits = {}, const Hooks& hooks = {});

}  // namespace hardex::interp
