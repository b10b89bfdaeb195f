#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hardex::ir {

// Register machine opcodes. The first block is the base instruction set; the
// txbegin/txend/chk group is emitted by the lock-step transform and the e*
// group by the encoding transform. Hardened programs serialize in the same
// grammar as plain ones, so the interpreter executes all of them natively.
enum class Opcode : uint8_t {
  Const,
  Mov,
  Add,
  Sub,
  Mul,
  Divs,
  And,
  Or,
  Xor,
  Shl,
  Shr,
  Eq,
  Lt,
  Br,
  Jmp,
  Alloc,
  Load,
  Store,
  In,
  Out,
  Halt,
  // lock-step extension
  TxBegin,
  TxEnd,
  Chk,
  // encoded-execution extension (intrinsics of the encoded runtime)
  Eenc,
  Edec,
  Echk,
  Emul1,
  Emul2,
  Eload,
  Estore,
  Eout,
};

inline constexpr int kNumOpcodes = static_cast<int>(Opcode::Eout) + 1;
inline constexpr int kNumRegisters = 64;

enum class OperandKind : uint8_t { Reg, Imm, Target };

struct OpcodeInfo {
  std::string_view mnemonic;
  std::array<OperandKind, 3> kinds;
  uint8_t arity;
};

const OpcodeInfo& opcode_info(Opcode op);
std::optional<Opcode> opcode_from_mnemonic(std::string_view m);

struct Instruction {
  Opcode op = Opcode::Halt;
  std::array<uint8_t, 3> reg{{0, 0, 0}};  // register operands, positional
  int64_t imm = 0;                        // immediate (const, in)
  int32_t target = -1;                    // resolved instruction index (br, jmp)

  friend bool operator==(const Instruction&, const Instruction&) = default;
};

// Parameters recorded by the encoding transform in a `#! delta ...` header
// line. `bank` is the register distance between the two codeword copies.
struct DeltaHeader {
  int64_t a1 = 251;
  int64_t a2 = 257;
  int bank = 32;

  friend bool operator==(const DeltaHeader&, const DeltaHeader&) = default;
};

struct IRProgram {
  std::vector<Instruction> instructions;
  std::map<std::string, int> labels;  // diagnostic only, erased by canonicalization
  std::optional<DeltaHeader> delta;
  int entry = 0;

  // Structural equality: labels are not part of program identity.
  friend bool operator==(const IRProgram& a, const IRProgram& b) {
    return a.instructions == b.instructions && a.delta == b.delta && a.entry == b.entry;
  }
};

class SyntaxError : public std::runtime_error {
 public:
  SyntaxError(int line, const std::string& reason)
      : std::runtime_error("line " + std::to_string(line) + ": " + reason), line_(line), reason_(reason) {}
  int line() const { return line_; }
  const std::string& reason() const { return reason_; }

 private:
  int line_;
  std::string reason_;
};

// Parses IR assembly. Grammar: one instruction per line; `label:` lines;
// `#` comments; blank lines; an optional `#! delta A1=<p> A2=<p> [bank=<n>]`
// header. Branch targets may be label names or numeric instruction indices.
IRProgram parse_program(const std::string& text);

// Deterministic byte serialization: header line first (if any), then one
// instruction per line, lowercase mnemonics, `, `-separated operands, numeric
// branch targets, newline-terminated. Equal programs produce equal bytes.
std::string serialize_canonical(const IRProgram& p);

}  // namespace hardex::ir
