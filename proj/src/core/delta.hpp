#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "core/errors.hpp"
#include "core/ir.hpp"

namespace hardex::delta {

// Two codeword copies of one functional value: c1 = a1*x, c2 = a2*x.
struct EncodedPair {
  int64_t c1 = 0;
  int64_t c2 = 0;
};

struct EncodingParams {
  int64_t a1 = 251;
  int64_t a2 = 257;
};

// Odd primes eligible as encoding keys. Drawing the pair from a pool keeps
// the arithmetic identities a silent circuit fault would have to satisfy
// unpredictable across deployments.
const std::vector<int64_t>& default_prime_pool();

// Picks two distinct keys from the pool, order fixed by the seed.
EncodingParams draw_params(uint64_t seed, const std::vector<int64_t>& pool = default_prime_pool());

// Functional values must satisfy |x| < 2^31.
bool in_functional_range(int64_t x);

EncodedPair encode(int64_t x, const EncodingParams& p);

// Verifies both residues and cross-copy agreement, then strips the code.
// Throws CodeViolation("residue1" | "residue2" | "cross-mismatch").
int64_t decode_checked(const EncodedPair& v, const EncodingParams& p);

// Homomorphic arithmetic on codewords. Addition and subtraction act
// componentwise; multiplication divides one key back out per copy and
// verifies the remainder vanished.
EncodedPair enc_add(const EncodedPair& a, const EncodedPair& b, const EncodingParams& p);
EncodedPair enc_sub(const EncodedPair& a, const EncodedPair& b, const EncodingParams& p);
EncodedPair enc_mul(const EncodedPair& a, const EncodedPair& b, const EncodingParams& p);

// Rewrites a program to compute on codeword pairs held in register pairs
// (rK, rK+bank). Supported opcodes: const, mov, add, sub, mul, eq, lt, br,
// jmp, alloc, load, store, in, out, halt. Bank 32 pairs the full file;
// bank 16 leaves r32..r63 free for a lock-step pass over the result.
ir::IRProgram transform_delta(const ir::IRProgram& p, const EncodingParams& params,
                              int bank = 32);

}  // namespace hardex::delta
