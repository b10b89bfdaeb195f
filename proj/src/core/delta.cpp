#include "core/delta.hpp"

#include "core/rng.hpp"

namespace hardex::delta {

namespace {

constexpr int64_t kFunctionalBound = int64_t{1} << 31;

void require_keys(const EncodingParams& p) {
  if (p.a1 == p.a2 || p.a1 < 3 || p.a2 < 3 || p.a1 % 2 == 0 || p.a2 % 2 == 0) {
    throw ConfigError("encoding keys must be two distinct odd primes");
  }
}

}  // namespace

const std::vector<int64_t>& default_prime_pool() {
  static const std::vector<int64_t> pool = {239, 241, 251, 257, 263, 269, 271, 277, 281, 283};
  return pool;
}

EncodingParams draw_params(uint64_t seed, const std::vector<int64_t>& pool) {
  if (pool.size() < 2) throw ConfigError("prime pool needs at least two keys");
  rng::SplitMix64 g(seed, 0x6b657973);
  const size_t i = g.next_below(pool.size());
  size_t j = g.next_below(pool.size() - 1);
  if (j >= i) ++j;
  EncodingParams p{pool[i], pool[j]};
  require_keys(p);
  return p;
}

bool in_functional_range(int64_t x) { return x > -kFunctionalBound && x < kFunctionalBound; }

EncodedPair encode(int64_t x, const EncodingParams& p) {
  require_keys(p);
  if (!in_functional_range(x)) throw RangeError("value outside functional range");
  return {p.a1 * x, p.a2 * x};
}

int64_t decode_checked(const EncodedPair& v, const EncodingParams& p) {
  require_keys(p);
  if (v.c1 % p.a1 != 0) throw CodeViolation("residue1");
  if (v.c2 % p.a2 != 0) throw CodeViolation("residue2");
  const int64_t x1 = v.c1 / p.a1;
  const int64_t x2 = v.c2 / p.a2;
  if (x1 != x2) throw CodeViolation("cross-mismatch");
  return x1;
}

EncodedPair enc_add(const EncodedPair& a, const EncodedPair& b, const EncodingParams& p) {
  require_keys(p);
  const __int128 c1 = static_cast<__int128>(a.c1) + b.c1;
  const __int128 c2 = static_cast<__int128>(a.c2) + b.c2;
  const __int128 bound1 = static_cast<__int128>(p.a1) * kFunctionalBound;
  const __int128 bound2 = static_cast<__int128>(p.a2) * kFunctionalBound;
  if (c1 >= bound1 || c1 <= -bound1 || c2 >= bound2 || c2 <= -bound2) {
    throw RangeError("sum outside functional range");
  }
  return {static_cast<int64_t>(c1), static_cast<int64_t>(c2)};
}

EncodedPair enc_sub(const EncodedPair& a, const EncodedPair& b, const EncodingParams& p) {
  return enc_add(a, {-b.c1, -b.c2}, p);
}

EncodedPair enc_mul(const EncodedPair& a, const EncodedPair& b, const EncodingParams& p) {
  require_keys(p);
  const __int128 p1 = static_cast<__int128>(a.c1) * b.c1;
  const __int128 p2 = static_cast<__int128>(a.c2) * b.c2;
  if (p1 % p.a1 != 0) throw CodeViolation("residue1");
  if (p2 % p.a2 != 0) throw CodeViolation("residue2");
  const __int128 q1 = p1 / p.a1;
  const __int128 q2 = p2 / p.a2;
  const __int128 bound1 = static_cast<__int128>(p.a1) * kFunctionalBound;
  const __int128 bound2 = static_cast<__int128>(p.a2) * kFunctionalBound;
  if (q1 >= bound1 || q1 <= -bound1 || q2 >= bound2 || q2 <= -bound2) {
    throw RangeError("product outside functional range");
  }
  return {static_cast<int64_t>(q1), static_cast<int64_t>(q2)};
}

namespace {

ir::Instruction make(ir::Opcode op, int a = 0, int b = 0, int c = 0) {
  ir::Instruction inst;
  inst.op = op;
  inst.reg[0] = static_cast<uint8_t>(a);
  inst.reg[1] = static_cast<uint8_t>(b);
  inst.reg[2] = static_cast<uint8_t>(c);
  return inst;
}

ir::Instruction make_imm(ir::Opcode op, int a, int64_t imm) {
  ir::Instruction inst;
  inst.op = op;
  inst.reg[0] = static_cast<uint8_t>(a);
  inst.imm = imm;
  return inst;
}

}  // namespace

ir::IRProgram transform_delta(const ir::IRProgram& p, const EncodingParams& params, int bank) {
  require_keys(params);
  if (bank != 16 && bank != 32) throw ConfigError("bank must be 16 or 32");

  const size_t n = p.instructions.size();
  for (const ir::Instruction& inst : p.instructions) {
    switch (inst.op) {
      case ir::Opcode::Const:
      case ir::Opcode::Mov:
      case ir::Opcode::Add:
      case ir::Opcode::Sub:
      case ir::Opcode::Mul:
      case ir::Opcode::Eq:
      case ir::Opcode::Lt:
      case ir::Opcode::Br:
      case ir::Opcode::Jmp:
      case ir::Opcode::Alloc:
      case ir::Opcode::Load:
      case ir::Opcode::Store:
      case ir::Opcode::In:
      case ir::Opcode::Out:
      case ir::Opcode::Halt:
        break;
      default:
        throw UnsupportedInstruction(std::string("no encoded form for '") +
                                     std::string(ir::opcode_info(inst.op).mnemonic) + "'");
    }
    const ir::OpcodeInfo& info = ir::opcode_info(inst.op);
    int slot = 0;
    for (int k = 0; k < info.arity; ++k) {
      if (info.kinds[k] != ir::OperandKind::Reg) continue;
      if (inst.reg[slot] >= bank) {
        throw TransformError("register r" + std::to_string(int(inst.reg[slot])) +
                             " does not fit a pair with bank " + std::to_string(bank));
      }
      ++slot;
    }
    if (inst.op == ir::Opcode::Const && !in_functional_range(inst.imm)) {
      throw RangeError("constant outside functional range");
    }
  }

  ir::IRProgram out;
  out.delta = ir::DeltaHeader{params.a1, params.a2, bank};
  std::vector<ir::Instruction>& code = out.instructions;
  std::vector<int32_t> new_index(n, 0);

  auto push = [&code](const ir::Instruction& inst) { code.push_back(inst); };

  using ir::Opcode;
  for (size_t i = 0; i < n; ++i) {
    const ir::Instruction& inst = p.instructions[i];
    new_index[i] = static_cast<int32_t>(code.size());
    const int rd = inst.reg[0];
    const int ra = inst.reg[1];
    const int rb = inst.reg[2];
    switch (inst.op) {
      case Opcode::Const:
        push(make_imm(Opcode::Const, rd, params.a1 * inst.imm));
        push(make_imm(Opcode::Const, rd + bank, params.a2 * inst.imm));
        break;
      case Opcode::Mov:
        push(make(Opcode::Mov, rd, ra));
        push(make(Opcode::Mov, rd + bank, ra + bank));
        break;
      case Opcode::Add:
      case Opcode::Sub: {
        const Opcode op = inst.op;
        push(make(op, rd, ra, rb));
        push(make(op, rd + bank, ra + bank, rb + bank));
        break;
      }
      case Opcode::Mul:
        push(make(Opcode::Emul1, rd, ra, rb));
        push(make(Opcode::Emul2, rd + bank, ra + bank, rb + bank));
        break;
      case Opcode::Eq:
      case Opcode::Lt: {
        // Comparisons leave the encoded domain: decode both operands into
        // the destination pair's slots, compare, re-encode the flag.
        const Opcode op = inst.op;
        if (ra == rd && rb == rd) {
          push(make(Opcode::Edec, rd, rd));
          push(make(op, rd, rd, rd));
          push(make(Opcode::Eenc, rd, rd));
        } else if (ra == rd) {
          push(make(Opcode::Edec, rd + bank, ra));
          push(make(Opcode::Edec, rd, rb));
          push(make(op, rd, rd + bank, rd));
          push(make(Opcode::Eenc, rd, rd));
        } else {
          push(make(Opcode::Edec, rd + bank, rb));
          push(make(Opcode::Edec, rd, ra));
          push(make(op, rd, rd, rd + bank));
          push(make(Opcode::Eenc, rd, rd));
        }
        break;
      }
      case Opcode::Br: {
        // A nonzero value has nonzero codewords, so the branch can test the
        // first copy directly once the pair is known well formed.
        ir::Instruction br = inst;
        push(make(Opcode::Echk, rd));
        push(br);
        break;
      }
      case Opcode::Jmp:
        push(inst);
        break;
      case Opcode::Alloc:
        // Cells hold pairs, so the backing object doubles in size. The
        // handle re-enters the encoded domain right away.
        push(make(Opcode::Edec, rd, ra));
        push(make(Opcode::Add, rd, rd, rd));
        push(make(Opcode::Alloc, rd + bank, rd));
        push(make(Opcode::Eenc, rd, rd + bank));
        break;
      case Opcode::Load:
        push(make(Opcode::Eload, rd, ra, rb));
        push(make(Opcode::Echk, rd));
        break;
      case Opcode::Store:
        push(make(Opcode::Echk, rb));
        push(make(Opcode::Estore, rd, ra, rb));
        break;
      case Opcode::In:
        push(inst);
        push(make(Opcode::Eenc, rd, rd));
        break;
      case Opcode::Out:
        push(make(Opcode::Eout, rd));
        break;
      case Opcode::Halt:
        push(inst);
        break;
      default:
        break;
    }
  }

  for (ir::Instruction& inst : code) {
    if (inst.target >= 0) inst.target = new_index[static_cast<size_t>(inst.target)];
  }
  out.entry = n > 0 ? new_index[static_cast<size_t>(p.entry)] : 0;
  if (n == 0) out.delta.reset();
  return out;
}

}  // namespace hardex::delta
