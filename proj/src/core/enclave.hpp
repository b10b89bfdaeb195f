#pragma once

#include <array>
#include <cstdint>
#include <list>
#include <map>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "core/errors.hpp"
#include "core/interp.hpp"
#include "core/ir.hpp"

namespace hardex::enclave {

using Bytes = std::vector<uint8_t>;
using Key = std::array<uint8_t, 32>;

std::array<uint8_t, 32> sha256(std::span<const uint8_t> data);
std::array<uint8_t, 32> hmac_sha256(std::span<const uint8_t> key, std::span<const uint8_t> data);

// AES-256-GCM with a 12-byte nonce and 16-byte tag appended to the
// ciphertext. Opening throws IntegrityError on any authentication failure.
Bytes aead_seal(const Key& key, std::span<const uint8_t, 12> nonce, std::span<const uint8_t> aad,
                std::span<const uint8_t> plaintext);
Bytes aead_open(const Key& key, std::span<const uint8_t, 12> nonce, std::span<const uint8_t> aad,
                std::span<const uint8_t> sealed);

std::string hex(std::span<const uint8_t> data);
Bytes from_hex(const std::string& text);  // throws ConfigError

// Identity of a program: the digest of its canonical serialization. Two
// programs measure equal exactly when their instruction streams agree.
struct Measurement {
  std::array<uint8_t, 32> digest{};
  bool operator==(const Measurement&) const = default;
  std::string hex() const;
};

Measurement measure(const ir::IRProgram& p);

// LRU cost model for the protected page cache: accesses to resident pages
// are free, anything else evicts the coldest page and pays the penalty.
class EpcModel {
 public:
  EpcModel(int64_t pages, uint64_t fault_penalty)
      : capacity_(pages), fault_penalty_(fault_penalty) {}

  uint64_t touch(int64_t handle, int64_t page);
  uint64_t faults() const { return faults_; }
  uint64_t hits() const { return hits_; }

 private:
  using PageId = std::pair<int64_t, int64_t>;
  struct PairHash {
    size_t operator()(const PageId& p) const {
      return std::hash<uint64_t>()(static_cast<uint64_t>(p.first) * 0x9e3779b97f4a7c15ULL ^
                                   static_cast<uint64_t>(p.second));
    }
  };

  int64_t capacity_;
  uint64_t fault_penalty_;
  uint64_t faults_ = 0;
  uint64_t hits_ = 0;
  std::list<PageId> lru_;
  std::unordered_map<PageId, std::list<PageId>::iterator, PairHash> resident_;
};

struct EnvelopeConfig {
  int64_t epc_pages = 22;
  uint64_t fault_penalty = 1000;
  std::set<std::string> allowlist = {"file_get", "file_put", "chan_send", "chan_recv", "out"};
  std::vector<Measurement> expected_measurements;

  static EnvelopeConfig from_json(const nlohmann::json& j);  // throws ConfigError
};

// The protective shell a hardened program runs inside: a measurement-bound
// identity, a sealed-file store keyed off that identity, a paging cost
// model, and an allowlist over host calls.
class Envelope {
 public:
  Envelope(Measurement m, EnvelopeConfig cfg);

  const Measurement& measurement() const { return measurement_; }
  const EnvelopeConfig& config() const { return config_; }
  EpcModel& epc() { return epc_; }

  bool allows(std::string_view name) const;

  // Wire format: nonce(12) || ciphertext || tag(16), keyed per path.
  Bytes seal_file(const std::string& path, std::span<const uint8_t> plaintext);
  Bytes unseal_file(const std::string& path, std::span<const uint8_t> sealed);

  // Store operations pass the syscall gate first.
  void file_put(const std::string& path, std::span<const uint8_t> plaintext);
  Bytes file_get(const std::string& path);
  std::map<std::string, Bytes>& store() { return store_; }

  // Paging cost and gate wired into the interpreter.
  interp::Hooks hooks();

 private:
  Key file_key(const std::string& path) const;

  Measurement measurement_;
  EnvelopeConfig config_;
  Key master_key_{};
  uint64_t seal_counter_ = 0;
  std::map<std::string, Bytes> store_;
  EpcModel epc_;
};

struct SessionKeys {
  Key initiator_to_responder{};
  Key responder_to_initiator{};
};

// Mock remote attestation over a pre-shared key: the responder proves it
// runs the expected code by MACing its measurement with both nonces. Throws
// AttestationError("unexpected-measurement" | "bad-mac").
SessionKeys attest_handshake(const Measurement& responder_measurement,
                             const std::vector<Measurement>& expected,
                             const Key& initiator_psk, const Key& responder_psk,
                             std::span<const uint8_t, 16> nonce_i,
                             std::span<const uint8_t, 16> nonce_r);

// One direction of an authenticated channel. Frames carry an explicit
// sequence number bound into the AEAD as associated data; receivers accept
// only strictly increasing sequence numbers.
class Channel {
 public:
  Channel(const Key& send_key, const Key& recv_key)
      : send_key_(send_key), recv_key_(recv_key) {}

  Bytes send(std::span<const uint8_t> payload);
  Bytes recv(std::span<const uint8_t> frame);  // IntegrityError | ReplayError

 private:
  Key send_key_;
  Key recv_key_;
  uint64_t send_seq_ = 0;
  bool any_received_ = false;
  uint64_t last_accepted_ = 0;
};

}  // namespace hardex::enclave
