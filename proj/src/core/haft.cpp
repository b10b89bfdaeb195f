#include "core/haft.hpp"

#include <vector>

namespace hardex::haft {

namespace {

constexpr int kBankOffset = 32;

bool is_pseudo(ir::Opcode op) {
  return op == ir::Opcode::TxBegin || op == ir::Opcode::TxEnd || op == ir::Opcode::Chk;
}

ir::Instruction make(ir::Opcode op, int a = 0, int b = 0, int c = 0) {
  ir::Instruction inst;
  inst.op = op;
  inst.reg[0] = static_cast<uint8_t>(a);
  inst.reg[1] = static_cast<uint8_t>(b);
  inst.reg[2] = static_cast<uint8_t>(c);
  return inst;
}

// Same instruction with every register operand moved to the shadow bank.
ir::Instruction shadow_of(ir::Instruction inst) {
  const ir::OpcodeInfo& info = ir::opcode_info(inst.op);
  int slot = 0;
  for (int k = 0; k < info.arity; ++k) {
    if (info.kinds[k] == ir::OperandKind::Reg) {
      inst.reg[slot] = static_cast<uint8_t>(inst.reg[slot] + kBankOffset);
      ++slot;
    }
  }
  return inst;
}

}  // namespace

ir::IRProgram transform_haft(const ir::IRProgram& p, const HaftConfig& cfg) {
  if (cfg.region_blocks < 1) throw TransformError("region_blocks must be at least 1");
  if (cfg.max_retries < 1) throw TransformError("max_retries must be at least 1");
  if (p.delta && p.delta->bank != 16) {
    throw TransformError("encoded program must use bank 16 to leave room for the shadow bank");
  }

  const size_t n = p.instructions.size();
  for (size_t i = 0; i < n; ++i) {
    const ir::Instruction& inst = p.instructions[i];
    if (is_pseudo(inst.op)) throw TransformError("program already carries lock-step markers");
    const ir::OpcodeInfo& info = ir::opcode_info(inst.op);
    int slot = 0;
    for (int k = 0; k < info.arity; ++k) {
      if (info.kinds[k] != ir::OperandKind::Reg) continue;
      if (inst.reg[slot] >= kBankOffset) {
        throw TransformError("register r" + std::to_string(int(inst.reg[slot])) +
                             " is reserved for the shadow bank");
      }
      ++slot;
    }
  }

  // Leaders: entry, every branch target, every instruction after a flow break.
  std::vector<char> leader(n, 0);
  if (n > 0) leader[0] = 1;
  for (size_t i = 0; i < n; ++i) {
    const ir::Instruction& inst = p.instructions[i];
    if (inst.op == ir::Opcode::Br || inst.op == ir::Opcode::Jmp) {
      leader[static_cast<size_t>(inst.target)] = 1;
      if (i + 1 < n) leader[i + 1] = 1;
    } else if (inst.op == ir::Opcode::Halt && i + 1 < n) {
      leader[i + 1] = 1;
    }
  }
  std::vector<char> region_start(n, 0);
  int block = -1;
  for (size_t i = 0; i < n; ++i) {
    if (leader[i]) ++block;
    if (leader[i] && block % cfg.region_blocks == 0) region_start[i] = 1;
  }

  ir::IRProgram out;
  out.delta = p.delta;
  std::vector<ir::Instruction>& code = out.instructions;
  std::vector<int32_t> new_index(n, 0);

  auto push = [&code](const ir::Instruction& inst) { code.push_back(inst); };

  // Check every distinct register operand against its shadow, in slot order.
  auto push_checks = [&](const ir::Instruction& inst) {
    const ir::OpcodeInfo& info = ir::opcode_info(inst.op);
    uint8_t seen[3];
    int nseen = 0;
    int slot = 0;
    for (int k = 0; k < info.arity; ++k) {
      if (info.kinds[k] != ir::OperandKind::Reg) continue;
      const uint8_t r = inst.reg[slot++];
      bool dup = false;
      for (int s = 0; s < nseen; ++s) dup = dup || seen[s] == r;
      if (dup) continue;
      seen[nseen++] = r;
      push(make(ir::Opcode::Chk, r, r + kBankOffset));
    }
  };

  bool open = false;
  bool pending_reopen = false;
  for (size_t i = 0; i < n; ++i) {
    const ir::Instruction& inst = p.instructions[i];
    if (region_start[i]) {
      // Consecutive regions chain: tx_begin over an open region commits it.
      pending_reopen = false;
      new_index[i] = static_cast<int32_t>(code.size());
      push(make(ir::Opcode::TxBegin));
      open = true;
    } else if (pending_reopen && inst.op != ir::Opcode::Halt) {
      pending_reopen = false;
      new_index[i] = static_cast<int32_t>(code.size());
      push(make(ir::Opcode::TxBegin));
      open = true;
    } else {
      new_index[i] = static_cast<int32_t>(code.size());
    }

    switch (inst.op) {
      case ir::Opcode::Br:
        push_checks(inst);
        push(inst);
        break;
      case ir::Opcode::Jmp:
        push(inst);
        open = false;
        break;
      case ir::Opcode::Store:
      case ir::Opcode::Estore:
        push_checks(inst);
        push(inst);
        break;
      case ir::Opcode::Out:
      case ir::Opcode::Eout:
        // Output must leave any region before its side effect escapes.
        push_checks(inst);
        if (open) {
          push(make(ir::Opcode::TxEnd));
          open = false;
        }
        push(inst);
        pending_reopen = true;
        break;
      case ir::Opcode::Halt:
        if (open) {
          push(make(ir::Opcode::TxEnd));
          open = false;
        }
        push(inst);
        break;
      case ir::Opcode::Alloc:
        // One object; the shadow bank receives the same handle.
        push(inst);
        push(make(ir::Opcode::Mov, inst.reg[0] + kBankOffset, inst.reg[0]));
        break;
      default:
        push(inst);
        push(shadow_of(inst));
        break;
    }
  }

  for (ir::Instruction& inst : code) {
    if (inst.target >= 0) inst.target = new_index[static_cast<size_t>(inst.target)];
  }
  out.entry = n > 0 ? new_index[static_cast<size_t>(p.entry)] : 0;
  return out;
}

}  // namespace hardex::haft
