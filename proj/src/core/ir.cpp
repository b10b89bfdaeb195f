#include "core/ir.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <unordered_map>

namespace hardex::ir {

namespace {

using K = OperandKind;

constexpr std::array<OpcodeInfo, kNumOpcodes> kOpcodeTable = {{
    {"const", {K::Reg, K::Imm, K::Reg}, 2},
    {"mov", {K::Reg, K::Reg, K::Reg}, 2},
    {"add", {K::Reg, K::Reg, K::Reg}, 3},
    {"sub", {K::Reg, K::Reg, K::Reg}, 3},
    {"mul", {K::Reg, K::Reg, K::Reg}, 3},
    {"divs", {K::Reg, K::Reg, K::Reg}, 3},
    {"and", {K::Reg, K::Reg, K::Reg}, 3},
    {"or", {K::Reg, K::Reg, K::Reg}, 3},
    {"xor", {K::Reg, K::Reg, K::Reg}, 3},
    {"shl", {K::Reg, K::Reg, K::Reg}, 3},
    {"shr", {K::Reg, K::Reg, K::Reg}, 3},
    {"eq", {K::Reg, K::Reg, K::Reg}, 3},
    {"lt", {K::Reg, K::Reg, K::Reg}, 3},
    {"br", {K::Reg, K::Target, K::Reg}, 2},
    {"jmp", {K::Target, K::Reg, K::Reg}, 1},
    {"alloc", {K::Reg, K::Reg, K::Reg}, 2},
    {"load", {K::Reg, K::Reg, K::Reg}, 3},
    {"store", {K::Reg, K::Reg, K::Reg}, 3},
    {"in", {K::Reg, K::Imm, K::Reg}, 2},
    {"out", {K::Reg, K::Reg, K::Reg}, 1},
    {"halt", {K::Reg, K::Reg, K::Reg}, 0},
    {"txbegin", {K::Reg, K::Reg, K::Reg}, 0},
    {"txend", {K::Reg, K::Reg, K::Reg}, 0},
    {"chk", {K::Reg, K::Reg, K::Reg}, 2},
    {"eenc", {K::Reg, K::Reg, K::Reg}, 2},
    {"edec", {K::Reg, K::Reg, K::Reg}, 2},
    {"echk", {K::Reg, K::Reg, K::Reg}, 1},
    {"emul1", {K::Reg, K::Reg, K::Reg}, 3},
    {"emul2", {K::Reg, K::Reg, K::Reg}, 3},
    {"eload", {K::Reg, K::Reg, K::Reg}, 3},
    {"estore", {K::Reg, K::Reg, K::Reg}, 3},
    {"eout", {K::Reg, K::Reg, K::Reg}, 1},
}};

const std::unordered_map<std::string_view, Opcode>& mnemonic_map() {
  static const auto* map = [] {
    auto* m = new std::unordered_map<std::string_view, Opcode>();
    for (int i = 0; i < kNumOpcodes; ++i) {
      m->emplace(kOpcodeTable[i].mnemonic, static_cast<Opcode>(i));
    }
    return m;
  }();
  return *map;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool is_ident(std::string_view s) {
  if (s.empty()) return false;
  if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

int64_t parse_int(std::string_view tok, int line, const char* what) {
  int64_t v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
    throw SyntaxError(line, std::string("invalid ") + what + " '" + std::string(tok) + "'");
  }
  return v;
}

bool is_small_prime(int64_t n) {
  if (n < 3 || n % 2 == 0) return false;
  for (int64_t d = 3; d * d <= n; d += 2) {
    if (n % d == 0) return false;
  }
  return true;
}

DeltaHeader parse_delta_header(std::string_view rest, int line) {
  DeltaHeader h;
  bool saw_a1 = false, saw_a2 = false;
  size_t pos = 0;
  while (pos < rest.size()) {
    while (pos < rest.size() && std::isspace(static_cast<unsigned char>(rest[pos]))) ++pos;
    size_t end = pos;
    while (end < rest.size() && !std::isspace(static_cast<unsigned char>(rest[end]))) ++end;
    if (end == pos) break;
    std::string_view tok = rest.substr(pos, end - pos);
    pos = end;
    size_t eq = tok.find('=');
    if (eq == std::string_view::npos) throw SyntaxError(line, "malformed delta header token '" + std::string(tok) + "'");
    std::string_view key = tok.substr(0, eq);
    int64_t val = parse_int(tok.substr(eq + 1), line, "delta header value");
    if (key == "A1") {
      h.a1 = val;
      saw_a1 = true;
    } else if (key == "A2") {
      h.a2 = val;
      saw_a2 = true;
    } else if (key == "bank") {
      if (val != 16 && val != 32) throw SyntaxError(line, "delta bank must be 16 or 32");
      h.bank = static_cast<int>(val);
    } else {
      throw SyntaxError(line, "unknown delta header key '" + std::string(key) + "'");
    }
  }
  if (!saw_a1 || !saw_a2) throw SyntaxError(line, "delta header requires A1 and A2");
  if (!is_small_prime(h.a1) || !is_small_prime(h.a2)) throw SyntaxError(line, "delta parameters must be odd primes");
  if (h.a1 == h.a2) throw SyntaxError(line, "delta parameters must be distinct");
  return h;
}

struct PendingTarget {
  size_t inst_index;
  std::string label;  // empty when numeric
  int64_t numeric = -1;
  int line;
};

}  // namespace

const OpcodeInfo& opcode_info(Opcode op) { return kOpcodeTable[static_cast<size_t>(op)]; }

std::optional<Opcode> opcode_from_mnemonic(std::string_view m) {
  auto it = mnemonic_map().find(m);
  if (it == mnemonic_map().end()) return std::nullopt;
  return it->second;
}

IRProgram parse_program(const std::string& text) {
  IRProgram p;
  std::vector<PendingTarget> pending;

  int line_no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t nl = text.find('\n', pos);
    std::string_view raw = (nl == std::string::npos)
                               ? std::string_view(text).substr(pos)
                               : std::string_view(text).substr(pos, nl - pos);
    pos = (nl == std::string::npos) ? text.size() + 1 : nl + 1;
    ++line_no;

    std::string_view line = trim(raw);
    if (line.empty()) continue;

    if (line.substr(0, 2) == "#!") {
      std::string_view body = trim(line.substr(2));
      if (body.substr(0, 5) != "delta") throw SyntaxError(line_no, "unknown directive");
      if (p.delta) throw SyntaxError(line_no, "duplicate delta header");
      p.delta = parse_delta_header(body.substr(5), line_no);
      continue;
    }
    if (line[0] == '#') continue;

    // Strip trailing comment.
    if (size_t h = line.find('#'); h != std::string_view::npos) line = trim(line.substr(0, h));
    if (line.empty()) continue;

    if (line.back() == ':') {
      std::string_view name = trim(line.substr(0, line.size() - 1));
      if (!is_ident(name)) throw SyntaxError(line_no, "invalid label '" + std::string(name) + "'");
      auto [it, inserted] = p.labels.emplace(std::string(name), static_cast<int>(p.instructions.size()));
      if (!inserted) throw SyntaxError(line_no, "duplicate label '" + std::string(name) + "'");
      continue;
    }

    size_t sp = line.find_first_of(" \t");
    std::string_view mnemonic = line.substr(0, sp);
    std::optional<Opcode> op = opcode_from_mnemonic(mnemonic);
    if (!op) throw SyntaxError(line_no, "unknown opcode '" + std::string(mnemonic) + "'");
    const OpcodeInfo& info = opcode_info(*op);

    std::vector<std::string_view> operands;
    if (sp != std::string_view::npos) {
      std::string_view rest = trim(line.substr(sp));
      size_t start = 0;
      while (start <= rest.size() && !rest.empty()) {
        size_t comma = rest.find(',', start);
        std::string_view piece = (comma == std::string_view::npos)
                                     ? rest.substr(start)
                                     : rest.substr(start, comma - start);
        operands.push_back(trim(piece));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
      }
    }
    if (operands.size() != info.arity) {
      throw SyntaxError(line_no, std::string(mnemonic) + " expects " + std::to_string(info.arity) +
                                     " operand(s), got " + std::to_string(operands.size()));
    }

    Instruction inst;
    inst.op = *op;
    int reg_slot = 0;
    for (size_t i = 0; i < operands.size(); ++i) {
      std::string_view tok = operands[i];
      if (tok.empty()) throw SyntaxError(line_no, "empty operand");
      switch (info.kinds[i]) {
        case K::Reg: {
          if (tok[0] != 'r') throw SyntaxError(line_no, "expected register, got '" + std::string(tok) + "'");
          int64_t idx = parse_int(tok.substr(1), line_no, "register");
          if (idx < 0 || idx >= kNumRegisters) {
            throw SyntaxError(line_no, "register index out of range '" + std::string(tok) + "'");
          }
          inst.reg[reg_slot++] = static_cast<uint8_t>(idx);
          break;
        }
        case K::Imm:
          inst.imm = parse_int(tok, line_no, "immediate");
          break;
        case K::Target: {
          PendingTarget t;
          t.inst_index = p.instructions.size();
          t.line = line_no;
          if (is_ident(tok)) {
            t.label = std::string(tok);
          } else {
            t.numeric = parse_int(tok, line_no, "branch target");
          }
          pending.push_back(std::move(t));
          break;
        }
      }
    }
    p.instructions.push_back(inst);
  }

  for (const PendingTarget& t : pending) {
    int64_t target;
    if (!t.label.empty()) {
      auto it = p.labels.find(t.label);
      if (it == p.labels.end()) throw SyntaxError(t.line, "undefined label '" + t.label + "'");
      target = it->second;
    } else {
      target = t.numeric;
    }
    if (target < 0 || target >= static_cast<int64_t>(p.instructions.size())) {
      throw SyntaxError(t.line, "branch target out of range");
    }
    p.instructions[t.inst_index].target = static_cast<int32_t>(target);
  }
  return p;
}

std::string serialize_canonical(const IRProgram& p) {
  std::string out;
  if (p.delta) {
    out += "#! delta A1=" + std::to_string(p.delta->a1) + " A2=" + std::to_string(p.delta->a2);
    if (p.delta->bank != 32) out += " bank=" + std::to_string(p.delta->bank);
    out += "\n";
  }
  for (const Instruction& inst : p.instructions) {
    const OpcodeInfo& info = opcode_info(inst.op);
    out += info.mnemonic;
    int reg_slot = 0;
    for (int i = 0; i < info.arity; ++i) {
      out += (i == 0) ? " " : ", ";
      switch (info.kinds[i]) {
        case K::Reg:
          out += "r" + std::to_string(inst.reg[reg_slot++]);
          break;
        case K::Imm:
          out += std::to_string(inst.imm);
          break;
        case K::Target:
          out += std::to_string(inst.target);
          break;
      }
    }
    out += "\n";
  }
  return out;
}

}  // namespace hardex::ir
