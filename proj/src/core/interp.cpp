#include "core/interp.hpp"

#include <limits>

namespace hardex::interp {

std::string_view status_name(Status s) {
  switch (s) {
    case Status::Halted: return "halted";
    case Status::Detected: return "detected";
    case Status::Crashed: return "crashed";
    case Status::HangLimit: return "hang-limit";
  }
  return "?";
}

namespace {

constexpr int64_t kFunctionalBound = int64_t{1} << 31;

struct WriteUndo {
  int64_t handle;
  int64_t offset;
  bool had;
  int64_t old_value;
};

struct Checkpoint {
  std::array<int64_t, ir::kNumRegisters> regs;
  std::vector<WriteUndo> writelog;
  size_t output_len;
  int64_t pc_at_begin;
  int64_t handle_watermark;
  int retries_left;
};

class Machine {
 public:
  Machine(const ir::IRProgram& p, const std::vector<int64_t>& input, const Limits& limits,
          const Hooks& hooks)
      : p_(p), limits_(limits), hooks_(hooks) {
    st_.input = input;
    st_.pc = p.entry;
  }

  ExecResult run() {
    const auto size = static_cast<int64_t>(p_.instructions.size());
    while (!stopped_) {
      abort_inst_ = false;
      if (st_.dyn_insts >= limits_.max_steps) {
        stop(Status::HangLimit, "");
        break;
      }
      if (hooks_.pre_step) hooks_.pre_step(st_, st_.dyn_insts + 1);
      if (st_.pc < 0 || st_.pc >= size) {
        stop(Status::Crashed, "pc-out-of-range");
        continue;
      }
      const ir::Instruction& inst = p_.instructions[st_.pc];
      ir::Opcode op = hooks_.opcode_map ? hooks_.opcode_map(st_.pc, inst.op) : inst.op;
      const int64_t pc = st_.pc;
      st_.pc = pc + 1;
      ++st_.dyn_insts;
      ++st_.cycles;
      exec(op, inst, pc);
    }
    ExecResult res;
    res.status = status_;
    res.reason = std::move(reason_);
    res.output = std::move(st_.output);
    res.dyn_insts = st_.dyn_insts;
    res.cycles = st_.cycles;
    res.rollbacks = st_.rollbacks;
    res.input_warnings = st_.input_warnings;
    return res;
  }

 private:
  // Any abnormal stop inside an open region aborts the transaction instead:
  // roll back and retry, the way hardware transactions abort on faults.
  // Hang-budget exhaustion is final; halting commits beforehand.
  void stop(Status s, std::string reason) {
    if (s != Status::Halted && s != Status::HangLimit && tx_ && tx_->retries_left > 0) {
      rollback();
      return;
    }
    stopped_ = true;
    status_ = s;
    reason_ = std::move(reason);
  }

  bool interrupted() const { return stopped_ || abort_inst_; }

  void rollback() {
    --tx_->retries_left;
    ++st_.rollbacks;
    abort_inst_ = true;
    st_.regs = tx_->regs;
    for (auto it = tx_->writelog.rbegin(); it != tx_->writelog.rend(); ++it) {
      auto obj = st_.memory.find(it->handle);
      if (obj == st_.memory.end()) continue;
      if (it->had) {
        obj->second.cells[it->offset] = it->old_value;
      } else {
        obj->second.cells.erase(it->offset);
      }
    }
    tx_->writelog.clear();
    st_.output.resize(tx_->output_len);
    st_.memory.erase(st_.memory.lower_bound(tx_->handle_watermark), st_.memory.end());
    st_.next_handle = tx_->handle_watermark;
    st_.pc = tx_->pc_at_begin + 1;
  }

  void charge(int64_t handle, int64_t page) {
    if (hooks_.cost) st_.cycles += hooks_.cost(handle, page);
  }

  static int64_t wrap_add(int64_t a, int64_t b) {
    return static_cast<int64_t>(static_cast<uint64_t>(a) + static_cast<uint64_t>(b));
  }
  static int64_t wrap_sub(int64_t a, int64_t b) {
    return static_cast<int64_t>(static_cast<uint64_t>(a) - static_cast<uint64_t>(b));
  }
  static int64_t wrap_mul(int64_t a, int64_t b) {
    return static_cast<int64_t>(static_cast<uint64_t>(a) * static_cast<uint64_t>(b));
  }

  void begin_tx(int64_t pc) {
    Checkpoint cp;
    cp.regs = st_.regs;
    cp.output_len = st_.output.size();
    cp.pc_at_begin = pc;
    cp.handle_watermark = st_.next_handle;
    cp.retries_left = limits_.max_retries;
    tx_ = std::move(cp);
  }

  void commit() { tx_.reset(); }

  std::optional<int64_t> mem_read(int64_t handle, int64_t offset) {
    auto it = st_.memory.find(handle);
    if (it == st_.memory.end()) {
      stop(Status::Crashed, "invalid-handle");
      return std::nullopt;
    }
    MemObject& obj = it->second;
    if (offset < 0 || offset >= obj.size) {
      if (hooks_.memory) {
        MemDecision d = hooks_.memory->on_oob_read(handle, obj.size, offset, st_.dyn_insts);
        if (d.kind == MemDecision::Absorb) return d.value;
        stop(d.kind == MemDecision::Detect ? Status::Detected : Status::Crashed,
             d.reason.empty() ? "out-of-bounds" : d.reason);
        return std::nullopt;
      }
      stop(Status::Crashed, "out-of-bounds");
      return std::nullopt;
    }
    charge(handle, offset >> 9);
    auto cell = obj.cells.find(offset);
    return cell == obj.cells.end() ? 0 : cell->second;
  }

  void mem_write(int64_t handle, int64_t offset, int64_t value) {
    auto it = st_.memory.find(handle);
    if (it == st_.memory.end()) {
      stop(Status::Crashed, "invalid-handle");
      return;
    }
    MemObject& obj = it->second;
    if (offset < 0 || offset >= obj.size) {
      if (hooks_.memory) {
        MemDecision d = hooks_.memory->on_oob_write(handle, obj.size, offset, value, st_.dyn_insts);
        if (d.kind == MemDecision::Absorb) return;
        stop(d.kind == MemDecision::Detect ? Status::Detected : Status::Crashed,
             d.reason.empty() ? "out-of-bounds" : d.reason);
        return;
      }
      stop(Status::Crashed, "out-of-bounds");
      return;
    }
    charge(handle, offset >> 9);
    if (tx_) {
      auto cell = obj.cells.find(offset);
      tx_->writelog.push_back({handle, offset, cell != obj.cells.end(),
                               cell != obj.cells.end() ? cell->second : 0});
    }
    obj.cells[offset] = value;
  }

  void do_out(int64_t v) {
    if (hooks_.syscall_allowed && !hooks_.syscall_allowed("out")) {
      stop(Status::Detected, "denied-syscall");
      return;
    }
    st_.output.push_back(v);
  }

  static bool in_functional_range(int64_t v) {
    return v > -kFunctionalBound && v < kFunctionalBound;
  }

  const ir::DeltaHeader* delta() {
    if (!p_.delta) {
      stop(Status::Crashed, "missing-delta-header");
      return nullptr;
    }
    return &*p_.delta;
  }

  bool pair_in_file(int idx, const ir::DeltaHeader& d) {
    if (idx + d.bank >= ir::kNumRegisters) {
      stop(Status::Crashed, "register-out-of-range");
      return false;
    }
    return true;
  }

  std::optional<int64_t> pair_decode(int idx, const ir::DeltaHeader& d) {
    if (!pair_in_file(idx, d)) return std::nullopt;
    int64_t c1 = st_.regs[idx];
    int64_t c2 = st_.regs[idx + d.bank];
    if (c1 % d.a1 != 0) {
      stop(Status::Detected, "code-violation:residue1");
      return std::nullopt;
    }
    if (c2 % d.a2 != 0) {
      stop(Status::Detected, "code-violation:residue2");
      return std::nullopt;
    }
    int64_t x1 = c1 / d.a1;
    int64_t x2 = c2 / d.a2;
    if (x1 != x2) {
      stop(Status::Detected, "code-violation:cross-mismatch");
      return std::nullopt;
    }
    return x1;
  }

  void exec_emul(const ir::Instruction& inst, int copy) {
    const ir::DeltaHeader* d = delta();
    if (!d) return;
    const int64_t a = copy == 1 ? d->a1 : d->a2;
    __int128 prod = static_cast<__int128>(st_.regs[inst.reg[1]]) *
                    static_cast<__int128>(st_.regs[inst.reg[2]]);
    if (prod % a != 0) {
      stop(Status::Detected, copy == 1 ? "code-violation:residue1" : "code-violation:residue2");
      return;
    }
    __int128 q = prod / a;
    const __int128 bound = static_cast<__int128>(a) * kFunctionalBound;
    if (q >= bound || q <= -bound) {
      stop(Status::Detected, "range-overflow");
      return;
    }
    st_.regs[inst.reg[0]] = static_cast<int64_t>(q);
  }

  void exec(ir::Opcode op, const ir::Instruction& inst, int64_t pc) {
    using ir::Opcode;
    auto& r = st_.regs;
    switch (op) {
      case Opcode::Const:
        r[inst.reg[0]] = inst.imm;
        break;
      case Opcode::Mov:
        r[inst.reg[0]] = r[inst.reg[1]];
        break;
      case Opcode::Add:
        r[inst.reg[0]] = wrap_add(r[inst.reg[1]], r[inst.reg[2]]);
        break;
      case Opcode::Sub:
        r[inst.reg[0]] = wrap_sub(r[inst.reg[1]], r[inst.reg[2]]);
        break;
      case Opcode::Mul:
        r[inst.reg[0]] = wrap_mul(r[inst.reg[1]], r[inst.reg[2]]);
        break;
      case Opcode::Divs: {
        const int64_t a = r[inst.reg[1]], b = r[inst.reg[2]];
        if (b == 0) {
          stop(Status::Crashed, "div-by-zero");
          break;
        }
        r[inst.reg[0]] = (a == std::numeric_limits<int64_t>::min() && b == -1) ? a : a / b;
        break;
      }
      case Opcode::And:
        r[inst.reg[0]] = r[inst.reg[1]] & r[inst.reg[2]];
        break;
      case Opcode::Or:
        r[inst.reg[0]] = r[inst.reg[1]] | r[inst.reg[2]];
        break;
      case Opcode::Xor:
        r[inst.reg[0]] = r[inst.reg[1]] ^ r[inst.reg[2]];
        break;
      case Opcode::Shl:
        r[inst.reg[0]] = static_cast<int64_t>(static_cast<uint64_t>(r[inst.reg[1]])
                                              << (r[inst.reg[2]] & 63));
        break;
      case Opcode::Shr:
        r[inst.reg[0]] = static_cast<int64_t>(static_cast<uint64_t>(r[inst.reg[1]]) >>
                                              (r[inst.reg[2]] & 63));
        break;
      case Opcode::Eq:
        r[inst.reg[0]] = r[inst.reg[1]] == r[inst.reg[2]] ? 1 : 0;
        break;
      case Opcode::Lt:
        r[inst.reg[0]] = r[inst.reg[1]] < r[inst.reg[2]] ? 1 : 0;
        break;
      case Opcode::Br:
        if (r[inst.reg[0]] != 0) st_.pc = inst.target;
        break;
      case Opcode::Jmp:
        st_.pc = inst.target;
        break;
      case Opcode::Alloc: {
        const int64_t n = r[inst.reg[1]];
        if (n < 0) {
          stop(Status::Crashed, "alloc-negative-size");
          break;
        }
        const int64_t h = st_.next_handle++;
        st_.memory.emplace(h, MemObject{n, {}});
        charge(h, 0);
        r[inst.reg[0]] = h;
        break;
      }
      case Opcode::Load: {
        auto v = mem_read(r[inst.reg[1]], r[inst.reg[2]]);
        if (v) r[inst.reg[0]] = *v;
        break;
      }
      case Opcode::Store:
        mem_write(r[inst.reg[0]], r[inst.reg[1]], r[inst.reg[2]]);
        break;
      case Opcode::In: {
        const int64_t idx = inst.imm;
        if (idx >= 0 && idx < static_cast<int64_t>(st_.input.size())) {
          r[inst.reg[0]] = st_.input[idx];
        } else {
          r[inst.reg[0]] = 0;
          ++st_.input_warnings;
        }
        break;
      }
      case Opcode::Out:
        do_out(r[inst.reg[0]]);
        break;
      case Opcode::Halt:
        commit();
        stop(Status::Halted, "");
        break;
      case Opcode::TxBegin:
        begin_tx(pc);
        break;
      case Opcode::TxEnd:
        commit();
        break;
      case Opcode::Chk:
        if (r[inst.reg[0]] != r[inst.reg[1]]) stop(Status::Detected, "check-divergence");
        break;
      case Opcode::Eenc: {
        const ir::DeltaHeader* d = delta();
        if (!d || !pair_in_file(inst.reg[0], *d)) break;
        const int64_t v = r[inst.reg[1]];
        if (!in_functional_range(v)) {
          stop(Status::Detected, "range-overflow");
          break;
        }
        r[inst.reg[0]] = d->a1 * v;
        r[inst.reg[0] + d->bank] = d->a2 * v;
        break;
      }
      case Opcode::Edec: {
        const ir::DeltaHeader* d = delta();
        if (!d) break;
        auto v = pair_decode(inst.reg[1], *d);
        if (v) r[inst.reg[0]] = *v;
        break;
      }
      case Opcode::Echk: {
        const ir::DeltaHeader* d = delta();
        if (d) pair_decode(inst.reg[0], *d);
        break;
      }
      case Opcode::Emul1:
        exec_emul(inst, 1);
        break;
      case Opcode::Emul2:
        exec_emul(inst, 2);
        break;
      case Opcode::Eload: {
        const ir::DeltaHeader* d = delta();
        if (!d || !pair_in_file(inst.reg[0], *d)) break;
        auto h = pair_decode(inst.reg[1], *d);
        if (!h) break;
        auto o = pair_decode(inst.reg[2], *d);
        if (!o) break;
        auto c1 = mem_read(*h, 2 * *o);
        if (!c1) break;
        auto c2 = mem_read(*h, 2 * *o + 1);
        if (!c2) break;
        r[inst.reg[0]] = *c1;
        r[inst.reg[0] + d->bank] = *c2;
        break;
      }
      case Opcode::Estore: {
        // Addressing is decode-checked; the stored pair is written raw and
        // validated by the checks the transform places around uses.
        const ir::DeltaHeader* d = delta();
        if (!d) break;
        auto h = pair_decode(inst.reg[0], *d);
        if (!h) break;
        auto o = pair_decode(inst.reg[1], *d);
        if (!o) break;
        if (!pair_in_file(inst.reg[2], *d)) break;
        mem_write(*h, 2 * *o, r[inst.reg[2]]);
        if (interrupted()) break;
        mem_write(*h, 2 * *o + 1, r[inst.reg[2] + d->bank]);
        break;
      }
      case Opcode::Eout: {
        const ir::DeltaHeader* d = delta();
        if (!d) break;
        auto v = pair_decode(inst.reg[0], *d);
        if (v) do_out(*v);
        break;
      }
    }
  }

  const ir::IRProgram& p_;
  Limits limits_;
  const Hooks& hooks_;
  MachineState st_;
  std::optional<Checkpoint> tx_;
  bool stopped_ = false;
  bool abort_inst_ = false;
  Status status_ = Status::Halted;
  std::string reason_;
};

}  // namespace

ExecResult execute(const ir::IRProgram& p, const std::vector<int64_t>& input, const Limits& limits,
                   const Hooks& hooks) {
  return Machine(p, input, limits, hooks).run();
}

}  // namespace hardex::interp
