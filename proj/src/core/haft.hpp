#pragma once

#include "core/errors.hpp"
#include "core/ir.hpp"

namespace hardex::haft {

struct HaftConfig {
  // Basic blocks grouped into one transactional region.
  int region_blocks = 1;
  // Re-executions of a region before a divergence becomes final.
  int max_retries = 3;
};

// Rewrites a program into its lock-step form: every computation runs twice,
// in the master bank r0..r31 and the shadow bank r32..r63, with check
// instructions guarding externally visible operations and transactional
// region markers enabling rollback on divergence.
//
// The input must confine itself to r0..r31 and carry no region or check
// pseudo-instructions. A program with an encoding header must use bank 16,
// so both copies of each codeword pair stay inside the master bank.
ir::IRProgram transform_haft(const ir::IRProgram& p, const HaftConfig& cfg = {});

}  // namespace hardex::haft
