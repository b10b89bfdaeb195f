#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "core/errors.hpp"
#include "core/interp.hpp"
#include "core/ir.hpp"

namespace hardex::inject {

enum class Model { RegBitflip, MemBitflip, OpcodeCorrupt };

Model model_from_name(const std::string& name);  // throws ConfigError
std::string_view model_name(Model m);

// One concrete fault. `step` is the 1-based dynamic instruction index at
// which the fault strikes. Persistent faults re-apply at the same static
// program location every time it executes from then on.
struct FaultSpec {
  Model model = Model::RegBitflip;
  uint64_t step = 1;
  int reg = 0;       // reg-bitflip
  int bit = 0;       // reg- and mem-bitflip
  uint64_t site_a = 0;  // mem-bitflip: object selector
  uint64_t site_b = 0;  // mem-bitflip: offset selector
  bool persistent = false;
};

// Fixed derangement over the base instruction set; region markers, checks
// and encoded intrinsics map to themselves.
ir::Opcode corrupt_opcode(ir::Opcode op);

// Executes p with the fault armed.
interp::ExecResult inject_run(const ir::IRProgram& p, const std::vector<int64_t>& input,
                              const FaultSpec& fault, const interp::Limits& limits);

enum class Outcome { Masked, Detected, Sdc, Crashed, Hang };

// Compares one faulty result against the fault-free reference.
Outcome classify(const interp::ExecResult& res, const interp::ExecResult& golden);

struct CampaignConfig {
  Model model = Model::RegBitflip;
  uint64_t runs = 1000;
  uint64_t seed = 0;
  std::vector<int64_t> input;
  int max_retries = 3;
  uint64_t max_steps = 10'000'000;
};

// Runs a sampling campaign against `program` (the hardened variant when one
// exists, otherwise the baseline itself). The baseline pins the reference
// output and the overhead denominators. Throws GoldenFailure when either
// fault-free run misbehaves.
nlohmann::ordered_json run_campaign(const ir::IRProgram& baseline,
                                    const ir::IRProgram* hardened,
                                    const CampaignConfig& cfg);

// Flat single-row export of a campaign report.
std::string report_to_csv(const nlohmann::ordered_json& report);

}  // namespace hardex::inject
