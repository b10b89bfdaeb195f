#include "core/enclave.hpp"

#include <openssl/evp.h>

#include <cstring>

namespace hardex::enclave {

namespace {

void evp_check(int ok, const char* what) {
  if (ok != 1) throw IntegrityError(std::string("cipher failure: ") + what);
}

}  // namespace

std::array<uint8_t, 32> sha256(std::span<const uint8_t> data) {
  std::array<uint8_t, 32> out{};
  unsigned int len = 0;
  evp_check(EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr),
            "digest");
  return out;
}

std::array<uint8_t, 32> hmac_sha256(std::span<const uint8_t> key, std::span<const uint8_t> data) {
  // HMAC over the block-sized padded key; keys longer than a block hash first.
  constexpr size_t kBlock = 64;
  std::array<uint8_t, kBlock> k{};
  if (key.size() > kBlock) {
    const auto kh = sha256(key);
    std::memcpy(k.data(), kh.data(), kh.size());
  } else {
    std::memcpy(k.data(), key.data(), key.size());
  }
  std::array<uint8_t, kBlock> ipad{}, opad{};
  for (size_t i = 0; i < kBlock; ++i) {
    ipad[i] = k[i] ^ 0x36;
    opad[i] = k[i] ^ 0x5c;
  }
  Bytes inner(ipad.begin(), ipad.end());
  inner.insert(inner.end(), data.begin(), data.end());
  const auto ih = sha256(inner);
  Bytes outer(opad.begin(), opad.end());
  outer.insert(outer.end(), ih.begin(), ih.end());
  return sha256(outer);
}

Bytes aead_seal(const Key& key, std::span<const uint8_t, 12> nonce, std::span<const uint8_t> aad,
                std::span<const uint8_t> plaintext) {
  EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
  if (!ctx) throw IntegrityError("cipher context");
  Bytes out(plaintext.size() + 16);
  int len = 0;
  try {
    evp_check(EVP_EncryptInit_ex(ctx, EVP_aes_256_gcm(), nullptr, key.data(), nonce.data()),
              "encrypt init");
    if (!aad.empty()) {
      evp_check(EVP_EncryptUpdate(ctx, nullptr, &len, aad.data(), int(aad.size())), "aad");
    }
    if (!plaintext.empty()) {
      evp_check(EVP_EncryptUpdate(ctx, out.data(), &len, plaintext.data(), int(plaintext.size())),
                "encrypt");
    }
    uint8_t fin_buf[16];
    int fin = 0;
    evp_check(EVP_EncryptFinal_ex(ctx, fin_buf, &fin), "encrypt final");
    evp_check(EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_GCM_GET_TAG, 16, out.data() + plaintext.size()),
              "tag");
  } catch (...) {
    EVP_CIPHER_CTX_free(ctx);
    throw;
  }
  EVP_CIPHER_CTX_free(ctx);
  return out;
}

Bytes aead_open(const Key& key, std::span<const uint8_t, 12> nonce, std::span<const uint8_t> aad,
                std::span<const uint8_t> sealed) {
  if (sealed.size() < 16) throw IntegrityError("sealed data truncated");
  const size_t ct_len = sealed.size() - 16;
  EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
  if (!ctx) throw IntegrityError("cipher context");
  Bytes out(ct_len);
  int len = 0;
  bool ok = false;
  try {
    evp_check(EVP_DecryptInit_ex(ctx, EVP_aes_256_gcm(), nullptr, key.data(), nonce.data()),
              "decrypt init");
    if (!aad.empty()) {
      evp_check(EVP_DecryptUpdate(ctx, nullptr, &len, aad.data(), int(aad.size())), "aad");
    }
    if (ct_len > 0) {
      evp_check(EVP_DecryptUpdate(ctx, out.data(), &len, sealed.data(), int(ct_len)), "decrypt");
    }
    uint8_t tag[16];
    std::memcpy(tag, sealed.data() + ct_len, 16);
    evp_check(EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_GCM_SET_TAG, 16, tag), "set tag");
    uint8_t fin_buf[16];
    int fin = 0;
    ok = EVP_DecryptFinal_ex(ctx, fin_buf, &fin) == 1;
  } catch (...) {
    EVP_CIPHER_CTX_free(ctx);
    throw;
  }
  EVP_CIPHER_CTX_free(ctx);
  if (!ok) throw IntegrityError("authentication failed");
  return out;
}

std::string hex(std::span<const uint8_t> data) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (uint8_t b : data) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 15]);
  }
  return out;
}

Bytes from_hex(const std::string& text) {
  if (text.size() % 2 != 0) throw ConfigError("hex string with odd length");
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw ConfigError("invalid hex digit");
  };
  Bytes out(text.size() / 2);
  for (size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<uint8_t>(nibble(text[2 * i]) << 4 | nibble(text[2 * i + 1]));
  }
  return out;
}

std::string Measurement::hex() const { return enclave::hex(digest); }

Measurement measure(const ir::IRProgram& p) {
  const std::string text = ir::serialize_canonical(p);
  return {sha256({reinterpret_cast<const uint8_t*>(text.data()), text.size()})};
}

uint64_t EpcModel::touch(int64_t handle, int64_t page) {
  if (capacity_ <= 0) return 0;
  const PageId id{handle, page};
  auto it = resident_.find(id);
  if (it != resident_.end()) {
    lru_.splice(lru_.begin(), lru_, it->second);
    ++hits_;
    return 0;
  }
  if (static_cast<int64_t>(lru_.size()) >= capacity_) {
    resident_.erase(lru_.back());
    lru_.pop_back();
  }
  lru_.push_front(id);
  resident_[id] = lru_.begin();
  ++faults_;
  return fault_penalty_;
}

EnvelopeConfig EnvelopeConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("envelope config must be an object");
  EnvelopeConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (key == "epc_pages") {
      if (!value.is_number_integer() || value.get<int64_t>() < 0) {
        throw ConfigError("epc_pages must be a non-negative integer");
      }
      cfg.epc_pages = value.get<int64_t>();
    } else if (key == "fault_penalty") {
      if (!value.is_number_unsigned() && !(value.is_number_integer() && value.get<int64_t>() >= 0)) {
        throw ConfigError("fault_penalty must be a non-negative integer");
      }
      cfg.fault_penalty = value.get<uint64_t>();
    } else if (key == "allowlist") {
      if (!value.is_array()) throw ConfigError("allowlist must be an array of names");
      cfg.allowlist.clear();
      for (const auto& name : value) {
        if (!name.is_string()) throw ConfigError("allowlist must be an array of names");
        cfg.allowlist.insert(name.get<std::string>());
      }
    } else if (key == "expected_measurements") {
      if (!value.is_array()) throw ConfigError("expected_measurements must be an array");
      for (const auto& m : value) {
        if (!m.is_string()) throw ConfigError("expected_measurements entries must be hex strings");
        const Bytes raw = from_hex(m.get<std::string>());
        if (raw.size() != 32) throw ConfigError("a measurement is 32 bytes");
        Measurement meas;
        std::memcpy(meas.digest.data(), raw.data(), 32);
        cfg.expected_measurements.push_back(meas);
      }
    } else {
      throw ConfigError("unknown envelope config key '" + key + "'");
    }
  }
  return cfg;
}

Envelope::Envelope(Measurement m, EnvelopeConfig cfg)
    : measurement_(m), config_(std::move(cfg)), epc_(config_.epc_pages, config_.fault_penalty) {
  // Deterministic per-identity master key; a real shell would derive this
  // from hardware sealing keys.
  static const char* tag = "envelope-master-key";
  Bytes seed(tag, tag + std::strlen(tag));
  seed.insert(seed.end(), measurement_.digest.begin(), measurement_.digest.end());
  master_key_ = sha256(seed);
}

bool Envelope::allows(std::string_view name) const {
  return config_.allowlist.count(std::string(name)) > 0;
}

Key Envelope::file_key(const std::string& path) const {
  return hmac_sha256(master_key_,
                     {reinterpret_cast<const uint8_t*>(path.data()), path.size()});
}

Bytes Envelope::seal_file(const std::string& path, std::span<const uint8_t> plaintext) {
  std::array<uint8_t, 12> nonce{};
  const uint64_t n = seal_counter_++;
  for (int i = 0; i < 8; ++i) nonce[11 - i] = static_cast<uint8_t>(n >> (8 * i));
  Bytes out(nonce.begin(), nonce.end());
  const Bytes sealed = aead_seal(file_key(path), nonce, {}, plaintext);
  out.insert(out.end(), sealed.begin(), sealed.end());
  return out;
}

Bytes Envelope::unseal_file(const std::string& path, std::span<const uint8_t> sealed) {
  if (sealed.size() < 12 + 16) throw IntegrityError("sealed file truncated");
  std::span<const uint8_t, 12> nonce(sealed.data(), 12);
  return aead_open(file_key(path), nonce, {}, sealed.subspan(12));
}

void Envelope::file_put(const std::string& path, std::span<const uint8_t> plaintext) {
  if (!allows("file_put")) throw SyscallDenied("file_put");
  store_[path] = seal_file(path, plaintext);
}

Bytes Envelope::file_get(const std::string& path) {
  if (!allows("file_get")) throw SyscallDenied("file_get");
  auto it = store_.find(path);
  if (it == store_.end()) throw IntegrityError("no such sealed file: " + path);
  return unseal_file(path, it->second);
}

interp::Hooks Envelope::hooks() {
  interp::Hooks h;
  h.cost = [this](int64_t handle, int64_t page) { return epc_.touch(handle, page); };
  h.syscall_allowed = [this](std::string_view name) { return allows(name); };
  return h;
}

SessionKeys attest_handshake(const Measurement& responder_measurement,
                             const std::vector<Measurement>& expected,
                             const Key& initiator_psk, const Key& responder_psk,
                             std::span<const uint8_t, 16> nonce_i,
                             std::span<const uint8_t, 16> nonce_r) {
  Bytes transcript(responder_measurement.digest.begin(), responder_measurement.digest.end());
  transcript.insert(transcript.end(), nonce_i.begin(), nonce_i.end());
  transcript.insert(transcript.end(), nonce_r.begin(), nonce_r.end());
  const auto mac = hmac_sha256(responder_psk, transcript);

  bool known = false;
  for (const Measurement& m : expected) known = known || m == responder_measurement;
  if (!known) throw AttestationError("unexpected-measurement");
  const auto check = hmac_sha256(initiator_psk, transcript);
  if (check != mac) throw AttestationError("bad-mac");

  auto derive = [&](uint8_t label) {
    Bytes info{label};
    info.insert(info.end(), nonce_i.begin(), nonce_i.end());
    info.insert(info.end(), nonce_r.begin(), nonce_r.end());
    return hmac_sha256(initiator_psk, info);
  };
  return {derive(0x01), derive(0x02)};
}

Bytes Channel::send(std::span<const uint8_t> payload) {
  const uint64_t seq = send_seq_++;
  uint8_t header[8];
  for (int i = 0; i < 8; ++i) header[7 - i] = static_cast<uint8_t>(seq >> (8 * i));
  std::array<uint8_t, 12> nonce{};
  std::memcpy(nonce.data() + 4, header, 8);
  Bytes frame(header, header + 8);
  frame.insert(frame.end(), nonce.begin(), nonce.end());
  const Bytes sealed = aead_seal(send_key_, nonce, {header, 8}, payload);
  frame.insert(frame.end(), sealed.begin(), sealed.end());
  return frame;
}

Bytes Channel::recv(std::span<const uint8_t> frame) {
  if (frame.size() < 8 + 12 + 16) throw IntegrityError("frame truncated");
  uint64_t seq = 0;
  for (int i = 0; i < 8; ++i) seq = seq << 8 | frame[i];
  if (any_received_ && seq <= last_accepted_) throw ReplayError("stale sequence number");
  std::span<const uint8_t, 12> nonce(frame.data() + 8, 12);
  Bytes payload = aead_open(recv_key_, nonce, frame.first(8), frame.subspan(20));
  any_received_ = true;
  last_accepted_ = seq;
  return payload;
}

}  // namespace hardex::enclave
