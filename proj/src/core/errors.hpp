#pragma once

#include <stdexcept>
#include <string>

namespace hardex {

// Thrown by hardening transforms when the input program cannot be rewritten
// (reserved registers in use, incompatible encoding bank, already hardened).
class TransformError : public std::runtime_error {
 public:
  explicit TransformError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown by the encoding transform for opcodes with no encoded counterpart.
class UnsupportedInstruction : public std::runtime_error {
 public:
  explicit UnsupportedInstruction(const std::string& what) : std::runtime_error(what) {}
};

// Encoded-domain value left the functional range.
class RangeError : public std::runtime_error {
 public:
  explicit RangeError(const std::string& what) : std::runtime_error(what) {}
};

// A codeword failed its residue or cross-copy check.
class CodeViolation : public std::runtime_error {
 public:
  explicit CodeViolation(const std::string& reason) : std::runtime_error(reason) {}
};

// Sealed data failed authentication.
class IntegrityError : public std::runtime_error {
 public:
  explicit IntegrityError(const std::string& what) : std::runtime_error(what) {}
};

// A channel frame arrived with a stale sequence number.
class ReplayError : public std::runtime_error {
 public:
  explicit ReplayError(const std::string& what) : std::runtime_error(what) {}
};

// Remote attestation failed (unexpected measurement or bad MAC).
class AttestationError : public std::runtime_error {
 public:
  explicit AttestationError(const std::string& what) : std::runtime_error(what) {}
};

// A host call outside the configured allowlist.
class SyscallDenied : public std::runtime_error {
 public:
  explicit SyscallDenied(const std::string& name)
      : std::runtime_error("denied-syscall: " + name) {}
};

// Malformed or inconsistent configuration.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// The fault-free reference run of a campaign did not behave.
class GoldenFailure : public std::runtime_error {
 public:
  explicit GoldenFailure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hardex
