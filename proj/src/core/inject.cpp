#include "core/inject.hpp"

#include <map>
#include <sstream>

#include "core/rng.hpp"

namespace hardex::inject {

Model model_from_name(const std::string& name) {
  if (name == "reg-bitflip") return Model::RegBitflip;
  if (name == "mem-bitflip") return Model::MemBitflip;
  if (name == "opcode-corrupt") return Model::OpcodeCorrupt;
  throw ConfigError("unknown fault model '" + name + "'");
}

std::string_view model_name(Model m) {
  switch (m) {
    case Model::RegBitflip: return "reg-bitflip";
    case Model::MemBitflip: return "mem-bitflip";
    case Model::OpcodeCorrupt: return "opcode-corrupt";
  }
  return "?";
}

ir::Opcode corrupt_opcode(ir::Opcode op) {
  using ir::Opcode;
  switch (op) {
    case Opcode::Const: return Opcode::Mov;
    case Opcode::Mov: return Opcode::Const;
    case Opcode::Add: return Opcode::Sub;
    case Opcode::Sub: return Opcode::Mul;
    case Opcode::Mul: return Opcode::Add;
    case Opcode::Divs: return Opcode::And;
    case Opcode::And: return Opcode::Or;
    case Opcode::Or: return Opcode::Xor;
    case Opcode::Xor: return Opcode::Shl;
    case Opcode::Shl: return Opcode::Shr;
    case Opcode::Shr: return Opcode::Divs;
    case Opcode::Eq: return Opcode::Lt;
    case Opcode::Lt: return Opcode::Eq;
    case Opcode::Br: return Opcode::Jmp;
    case Opcode::Jmp: return Opcode::Br;
    case Opcode::Alloc: return Opcode::Load;
    case Opcode::Load: return Opcode::Store;
    case Opcode::Store: return Opcode::Alloc;
    case Opcode::In: return Opcode::Out;
    case Opcode::Out: return Opcode::Halt;
    case Opcode::Halt: return Opcode::In;
    default: return op;
  }
}

namespace {

// Mutable per-run fault state shared by the interpreter hooks.
struct Armed {
  FaultSpec fault;
  bool fired = false;
  int64_t static_pc = -1;
  bool corrupt_now = false;

  void flip_reg(interp::MachineState& st) const {
    st.regs[fault.reg] ^= int64_t(uint64_t{1} << fault.bit);
  }

  void flip_mem(interp::MachineState& st) const {
    if (st.memory.empty()) return;
    const uint64_t nth = fault.site_a % st.memory.size();
    auto it = st.memory.begin();
    std::advance(it, static_cast<long>(nth));
    interp::MemObject& obj = it->second;
    if (obj.size <= 0) return;
    const int64_t off = static_cast<int64_t>(fault.site_b % static_cast<uint64_t>(obj.size));
    const int64_t old = obj.cells.count(off) ? obj.cells[off] : 0;
    obj.cells[off] = old ^ int64_t(uint64_t{1} << fault.bit);
  }

  void pre_step(interp::MachineState& st, uint64_t step) {
    if (!fired) {
      if (step != fault.step) return;
      fired = true;
      static_pc = st.pc;
      if (fault.model == Model::RegBitflip) flip_reg(st);
      if (fault.model == Model::MemBitflip) flip_mem(st);
      if (fault.model == Model::OpcodeCorrupt) corrupt_now = true;
      return;
    }
    if (!fault.persistent) return;
    if (st.pc != static_pc) return;
    if (fault.model == Model::RegBitflip) flip_reg(st);
    if (fault.model == Model::MemBitflip) flip_mem(st);
    if (fault.model == Model::OpcodeCorrupt) corrupt_now = true;
  }

  ir::Opcode map_opcode(ir::Opcode op) {
    if (!corrupt_now) return op;
    corrupt_now = false;
    return corrupt_opcode(op);
  }
};

FaultSpec draw_fault(Model model, uint64_t golden_dyn, rng::SplitMix64& g) {
  FaultSpec f;
  f.model = model;
  f.step = 1 + g.next_below(golden_dyn);
  switch (model) {
    case Model::RegBitflip:
      f.reg = static_cast<int>(g.next_below(ir::kNumRegisters));
      f.bit = static_cast<int>(g.next_below(64));
      break;
    case Model::MemBitflip:
      f.site_a = g.next();
      f.site_b = g.next();
      f.bit = static_cast<int>(g.next_below(64));
      break;
    case Model::OpcodeCorrupt:
      // A design fault is a property of the circuit, not of one cycle:
      // the chosen instruction misdecodes on every execution.
      f.persistent = true;
      break;
  }
  return f;
}

}  // namespace

interp::ExecResult inject_run(const ir::IRProgram& p, const std::vector<int64_t>& input,
                              const FaultSpec& fault, const interp::Limits& limits) {
  Armed armed{fault};
  interp::Hooks hooks;
  hooks.pre_step = [&armed](interp::MachineState& st, uint64_t step) { armed.pre_step(st, step); };
  if (fault.model == Model::OpcodeCorrupt) {
    hooks.opcode_map = [&armed](int64_t, ir::Opcode op) { return armed.map_opcode(op); };
  }
  return interp::execute(p, input, limits, hooks);
}

Outcome classify(const interp::ExecResult& res, const interp::ExecResult& golden) {
  switch (res.status) {
    case interp::Status::Detected: return Outcome::Detected;
    case interp::Status::Crashed: return Outcome::Crashed;
    case interp::Status::HangLimit: return Outcome::Hang;
    case interp::Status::Halted: break;
  }
  return res.output == golden.output ? Outcome::Masked : Outcome::Sdc;
}

nlohmann::ordered_json run_campaign(const ir::IRProgram& baseline, const ir::IRProgram* hardened,
                                    const CampaignConfig& cfg) {
  if (cfg.runs < 1) throw ConfigError("runs must be at least 1");
  if (cfg.max_retries < 1) throw ConfigError("max_retries must be at least 1");

  interp::Limits limits;
  limits.max_steps = cfg.max_steps;
  limits.max_retries = cfg.max_retries;

  const interp::ExecResult gold_base = interp::execute(baseline, cfg.input, limits);
  if (gold_base.status != interp::Status::Halted) {
    throw GoldenFailure(std::string("baseline did not halt: ") +
                        std::string(interp::status_name(gold_base.status)) +
                        (gold_base.reason.empty() ? "" : " (" + gold_base.reason + ")"));
  }

  const ir::IRProgram& target = hardened ? *hardened : baseline;
  interp::ExecResult gold = gold_base;
  if (hardened) {
    gold = interp::execute(*hardened, cfg.input, limits);
    if (gold.status != interp::Status::Halted) {
      throw GoldenFailure(std::string("hardened variant did not halt: ") +
                          std::string(interp::status_name(gold.status)) +
                          (gold.reason.empty() ? "" : " (" + gold.reason + ")"));
    }
    if (gold.output != gold_base.output) {
      throw GoldenFailure("hardened variant output disagrees with baseline");
    }
  }

  interp::Limits run_limits = limits;
  run_limits.max_steps = 10 * gold.dyn_insts;

  uint64_t counts[5] = {0, 0, 0, 0, 0};
  uint64_t masked_recovered = 0;
  std::map<std::string, uint64_t> detected_reasons;

  bool persistent = false;
  for (uint64_t i = 0; i < cfg.runs; ++i) {
    rng::SplitMix64 g(cfg.seed, i);
    FaultSpec f = draw_fault(cfg.model, gold.dyn_insts, g);
    persistent = f.persistent;
    const interp::ExecResult res = inject_run(target, cfg.input, f, run_limits);
    const Outcome o = classify(res, gold);
    ++counts[static_cast<int>(o)];
    if (o == Outcome::Masked && res.rollbacks > gold.rollbacks) ++masked_recovered;
    if (o == Outcome::Detected) ++detected_reasons[res.reason];
  }

  const double total = static_cast<double>(cfg.runs);
  nlohmann::ordered_json report;
  report["params"] = {
      {"model", model_name(cfg.model)},
      {"variant", hardened ? "hardened" : "baseline"},
      {"runs", cfg.runs},
      {"input", cfg.input},
      {"max_retries", cfg.max_retries},
      {"hang_cap", run_limits.max_steps},
      {"persistent", persistent},
  };
  report["seed"] = cfg.seed;
  report["golden"] = {
      {"output", gold.output},
      {"dyn_insts", gold.dyn_insts},
      {"cycles", gold.cycles},
      {"baseline_dyn_insts", gold_base.dyn_insts},
      {"baseline_cycles", gold_base.cycles},
  };
  report["counts"] = {
      {"masked", counts[0]}, {"detected", counts[1]}, {"sdc", counts[2]},
      {"crashed", counts[3]}, {"hang", counts[4]},
  };
  report["rates"] = {
      {"masked", counts[0] / total}, {"detected", counts[1] / total},
      {"sdc", counts[2] / total},    {"crashed", counts[3] / total},
      {"hang", counts[4] / total},
  };
  report["breakdown"] = {
      {"masked_recovered", masked_recovered},
      {"masked_clean", counts[0] - masked_recovered},
      {"detected_reasons", detected_reasons},
  };
  report["overhead"] = {
      {"dyn_inst_ratio",
       static_cast<double>(gold.dyn_insts) / static_cast<double>(gold_base.dyn_insts)},
      {"cycle_ratio", static_cast<double>(gold.cycles) / static_cast<double>(gold_base.cycles)},
  };
  return report;
}

std::string report_to_csv(const nlohmann::ordered_json& report) {
  const auto& params = report.at("params");
  const auto& counts = report.at("counts");
  const auto& rates = report.at("rates");
  const auto& overhead = report.at("overhead");
  std::ostringstream out;
  out << "model,variant,runs,seed,masked,detected,sdc,crashed,hang,"
         "rate_masked,rate_detected,rate_sdc,rate_crashed,rate_hang,"
         "dyn_inst_ratio,cycle_ratio\n";
  out << params.at("model").get<std::string>() << ','
      << params.at("variant").get<std::string>() << ',' << params.at("runs").dump() << ','
      << report.at("seed").dump() << ',' << counts.at("masked").dump() << ','
      << counts.at("detected").dump() << ',' << counts.at("sdc").dump() << ','
      << counts.at("crashed").dump() << ',' << counts.at("hang").dump() << ','
      << rates.at("masked").dump() << ',' << rates.at("detected").dump() << ','
      << rates.at("sdc").dump() << ',' << rates.at("crashed").dump() << ','
      << rates.at("hang").dump() << ',' << overhead.at("dyn_inst_ratio").dump() << ','
      << overhead.at("cycle_ratio").dump() << '\n';
  return out.str();
}

}  // namespace hardex::inject
