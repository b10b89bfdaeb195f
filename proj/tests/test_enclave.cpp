#include <array>
#include <cstring>
#include <string>
#include <vector>

#include "doctest.h"

#include "core/enclave.hpp"
#include "core/interp.hpp"
#include "core/ir.hpp"
#include "support.hpp"

using namespace hardex;
using enclave::Bytes;
using enclave::Key;

namespace {

Bytes bytes_of(const std::string& s) { return Bytes(s.begin(), s.end()); }

Key key_of(uint8_t fill) {
  Key k{};
  k.fill(fill);
  return k;
}

ir::IRProgram load(const std::string& name) {
  return ir::parse_program(testsupport::read_corpus(name));
}

}  // namespace

TEST_CASE("digest and mac primitives match their published vectors") {
  CHECK(enclave::hex(enclave::sha256(bytes_of("abc"))) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(enclave::hex(enclave::sha256({})) ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");

  Bytes k1(20, 0x0b);
  CHECK(enclave::hex(enclave::hmac_sha256(k1, bytes_of("Hi There"))) ==
        "b0344c61d8db38535ca8afceaf0bf12b881dc200c9833da726e9376c2e32cff7");
  CHECK(enclave::hex(enclave::hmac_sha256(bytes_of("Jefe"),
                                          bytes_of("what do ya want for nothing?"))) ==
        "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843");
  // A key longer than the hash block must be hashed down first.
  Bytes k3(131, 0xaa);
  CHECK(enclave::hex(enclave::hmac_sha256(
            k3, bytes_of("Test Using Larger Than Block-Size Key - Hash Key First"))) ==
        "60e431591ee0b67f0d8a26aacbf5b77f8e0bc6213728c5140546040f0ee37f54");
}

TEST_CASE("authenticated encryption matches its published vectors") {
  const Key zero_key{};
  const std::array<uint8_t, 12> zero_nonce{};
  const Bytes tag_only = enclave::aead_seal(zero_key, zero_nonce, {}, {});
  CHECK(enclave::hex(tag_only) == "530f8afbc74536b9a963b4f1c4cb738b");

  const Bytes zeros(16, 0);
  const Bytes sealed = enclave::aead_seal(zero_key, zero_nonce, {}, zeros);
  CHECK(enclave::hex(sealed) ==
        "cea7403d4d606b6e074ec5d3baf39d18"
        "d0d1c8a799996bf0265b98b5d48ab919");
  CHECK(enclave::aead_open(zero_key, zero_nonce, {}, sealed) == zeros);
}

TEST_CASE("sealing round-trips and rejects every kind of damage") {
  const Key key = key_of(0x42);
  const std::array<uint8_t, 12> nonce{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  const Bytes aad = bytes_of("hdr");
  const Bytes msg = bytes_of("attack at dawn");
  Bytes sealed = enclave::aead_seal(key, nonce, aad, msg);
  CHECK(sealed.size() == msg.size() + 16);
  CHECK(enclave::aead_open(key, nonce, aad, sealed) == msg);

  for (size_t i = 0; i < sealed.size(); ++i) {
    Bytes bad = sealed;
    bad[i] ^= uint8_t(1u << (i % 8));
    CHECK_THROWS_AS(enclave::aead_open(key, nonce, aad, bad), IntegrityError);
  }
  CHECK_THROWS_AS(enclave::aead_open(key, nonce, bytes_of("hdX"), sealed), IntegrityError);
  CHECK_THROWS_AS(enclave::aead_open(key_of(0x43), nonce, aad, sealed), IntegrityError);
  CHECK_THROWS_WITH_AS(enclave::aead_open(key, nonce, aad, Bytes(15, 0)),
                       "sealed data truncated", IntegrityError);
}

TEST_CASE("hex encoding round-trips and rejects junk") {
  const Bytes data{0x00, 0x7f, 0x80, 0xff};
  CHECK(enclave::hex(data) == "007f80ff");
  CHECK(enclave::from_hex("007f80ff") == data);
  CHECK(enclave::from_hex("007F80FF") == data);
  CHECK_THROWS_AS(enclave::from_hex("abc"), ConfigError);
  CHECK_THROWS_AS(enclave::from_hex("zz"), ConfigError);
}

TEST_CASE("a measurement identifies the instruction stream, not the text") {
  const ir::IRProgram a = ir::parse_program("top:\n  jmp top\n");
  const ir::IRProgram b = ir::parse_program("# spelled differently\njmp 0\n");
  CHECK(enclave::measure(a) == enclave::measure(b));
  CHECK(enclave::measure(a).hex().size() == 64);

  const ir::IRProgram c = ir::parse_program("const r1, 5\nhalt\n");
  const ir::IRProgram d = ir::parse_program("const r1, 6\nhalt\n");
  CHECK(!(enclave::measure(c) == enclave::measure(d)));
}

TEST_CASE("the page cache charges faults once per residency") {
  enclave::EpcModel epc(2, 1000);
  CHECK(epc.touch(1, 0) == 1000);
  CHECK(epc.touch(1, 1) == 1000);
  CHECK(epc.touch(1, 0) == 0);   // resident, refreshed
  CHECK(epc.touch(1, 2) == 1000);  // evicts (1,1), the coldest
  CHECK(epc.touch(1, 1) == 1000);
  CHECK(epc.touch(2, 0) == 1000);  // pages are per handle
  CHECK(epc.faults() == 5);
  CHECK(epc.hits() == 1);

  enclave::EpcModel off(0, 1000);
  CHECK(off.touch(1, 0) == 0);
  CHECK(off.touch(1, 0) == 0);
  CHECK(off.faults() == 0);
}

TEST_CASE("envelope config parses strictly") {
  const auto def = enclave::EnvelopeConfig::from_json(nlohmann::json::object());
  CHECK(def.epc_pages == 22);
  CHECK(def.fault_penalty == 1000);
  CHECK(def.allowlist ==
        std::set<std::string>{"file_get", "file_put", "chan_send", "chan_recv", "out"});
  CHECK(def.expected_measurements.empty());

  const auto cfg = enclave::EnvelopeConfig::from_json(
      {{"epc_pages", 4}, {"fault_penalty", 50}, {"allowlist", {"out"}}});
  CHECK(cfg.epc_pages == 4);
  CHECK(cfg.fault_penalty == 50);
  CHECK(cfg.allowlist == std::set<std::string>{"out"});

  const std::string m = enclave::measure(load("sum_loop.ir")).hex();
  const auto with_m =
      enclave::EnvelopeConfig::from_json({{"expected_measurements", {m}}});
  REQUIRE(with_m.expected_measurements.size() == 1);
  CHECK(with_m.expected_measurements[0].hex() == m);

  using enclave::EnvelopeConfig;
  CHECK_THROWS_AS(EnvelopeConfig::from_json(nlohmann::json::array()), ConfigError);
  CHECK_THROWS_AS(EnvelopeConfig::from_json({{"epc_pagez", 4}}), ConfigError);
  CHECK_THROWS_AS(EnvelopeConfig::from_json({{"epc_pages", -1}}), ConfigError);
  CHECK_THROWS_AS(EnvelopeConfig::from_json({{"epc_pages", "many"}}), ConfigError);
  CHECK_THROWS_AS(EnvelopeConfig::from_json({{"fault_penalty", -3}}), ConfigError);
  CHECK_THROWS_AS(EnvelopeConfig::from_json({{"allowlist", "out"}}), ConfigError);
  CHECK_THROWS_AS(EnvelopeConfig::from_json({{"allowlist", {1}}}), ConfigError);
  CHECK_THROWS_AS(EnvelopeConfig::from_json({{"expected_measurements", {"abcd"}}}),
                  ConfigError);
  CHECK_THROWS_AS(EnvelopeConfig::from_json({{"expected_measurements", {"zz"}}}), ConfigError);
  try {
    EnvelopeConfig::from_json({{"paging", 1}});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("unknown envelope config key") != std::string::npos);
  }
}

TEST_CASE("sealed files survive the round trip and nothing else does") {
  enclave::Envelope env(enclave::measure(load("sum_loop.ir")), {});
  const Bytes secret = bytes_of("the cache line is a lie");

  Bytes blob = env.seal_file("state/db", secret);
  REQUIRE(blob.size() == 12 + secret.size() + 16);
  // First seal: zero counter, zero prefix.
  for (int i = 0; i < 12; ++i) CHECK(blob[size_t(i)] == 0);
  CHECK(env.unseal_file("state/db", blob) == secret);

  Bytes blob2 = env.seal_file("state/db", secret);
  CHECK(blob2[11] == 1);  // counter advanced, nonce fresh
  CHECK(blob2 != blob);

  for (size_t i = 0; i < blob.size(); ++i) {
    Bytes bad = blob;
    bad[i] ^= uint8_t(1u << (i % 8));
    CHECK_THROWS_AS(env.unseal_file("state/db", bad), IntegrityError);
  }
  CHECK_THROWS_AS(env.unseal_file("state/other", blob), IntegrityError);
  CHECK_THROWS_WITH_AS(env.unseal_file("state/db", Bytes(27, 0)), "sealed file truncated",
                       IntegrityError);

  // A different program identity derives a different file key.
  enclave::Envelope other(enclave::measure(load("fsm.ir")), {});
  CHECK_THROWS_AS(other.unseal_file("state/db", blob), IntegrityError);
}

TEST_CASE("the file store seals on put and gates on the allowlist") {
  enclave::Envelope env(enclave::measure(load("sum_loop.ir")), {});
  const Bytes doc = bytes_of("payload");
  env.file_put("a", doc);
  CHECK(env.store().count("a") == 1);
  CHECK(env.store().at("a") != doc);  // never stored in the clear
  CHECK(env.file_get("a") == doc);
  CHECK_THROWS_WITH_AS(env.file_get("b"), "no such sealed file: b", IntegrityError);

  enclave::EnvelopeConfig closed;
  closed.allowlist = {"out"};
  enclave::Envelope denied(enclave::measure(load("sum_loop.ir")), closed);
  CHECK_THROWS_AS(denied.file_put("a", doc), SyscallDenied);
  CHECK_THROWS_AS(denied.file_get("a"), SyscallDenied);
}

TEST_CASE("attestation accepts the expected program and nothing else") {
  const auto good = enclave::measure(load("sum_loop.ir"));
  const auto rogue = enclave::measure(load("fsm.ir"));
  const std::vector<enclave::Measurement> expected{good,
                                                   enclave::measure(load("matmul8.ir"))};
  const Key psk = key_of(0x11);
  std::array<uint8_t, 16> ni{};
  ni.fill(0xa1);
  std::array<uint8_t, 16> nr{};
  nr.fill(0xb2);

  const auto keys = enclave::attest_handshake(good, expected, psk, psk, ni, nr);
  const auto again = enclave::attest_handshake(good, expected, psk, psk, ni, nr);
  CHECK(keys.initiator_to_responder == again.initiator_to_responder);
  CHECK(keys.responder_to_initiator == again.responder_to_initiator);
  CHECK(keys.initiator_to_responder != keys.responder_to_initiator);

  std::array<uint8_t, 16> ni2 = ni;
  ni2[0] ^= 1;
  const auto fresh = enclave::attest_handshake(good, expected, psk, psk, ni2, nr);
  CHECK(fresh.initiator_to_responder != keys.initiator_to_responder);

  CHECK_THROWS_WITH_AS(enclave::attest_handshake(rogue, expected, psk, psk, ni, nr),
                       "unexpected-measurement", AttestationError);
  CHECK_THROWS_WITH_AS(enclave::attest_handshake(good, expected, psk, key_of(0x12), ni, nr),
                       "bad-mac", AttestationError);
  // Identity is checked before the key ever matters.
  CHECK_THROWS_WITH_AS(enclave::attest_handshake(rogue, expected, psk, key_of(0x12), ni, nr),
                       "unexpected-measurement", AttestationError);
}

TEST_CASE("channel frames deliver in order and refuse tampering and replay") {
  const Key k_ab = key_of(0x21);
  const Key k_ba = key_of(0x22);
  enclave::Channel alice(k_ab, k_ba);
  enclave::Channel bob(k_ba, k_ab);

  const Bytes m1 = bytes_of("first");
  const Bytes f1 = alice.send(m1);
  REQUIRE(f1.size() == 8 + 12 + m1.size() + 16);
  for (int i = 0; i < 8; ++i) CHECK(f1[size_t(i)] == 0);  // seq 0
  CHECK(bob.recv(f1) == m1);
  CHECK_THROWS_WITH_AS(bob.recv(f1), "stale sequence number", ReplayError);

  const Bytes f2 = alice.send(bytes_of("second"));
  CHECK(f2[7] == 1);
  CHECK(bob.recv(f2) == bytes_of("second"));

  // Frames delivered out of order: the newer one wins, the older is stale.
  const Bytes f3 = alice.send(bytes_of("third"));
  const Bytes f4 = alice.send(bytes_of("fourth"));
  CHECK(bob.recv(f4) == bytes_of("fourth"));
  CHECK_THROWS_AS(bob.recv(f3), ReplayError);

  // Replies flow on the reverse key.
  const Bytes r1 = bob.send(bytes_of("ack"));
  CHECK(alice.recv(r1) == bytes_of("ack"));

  const Bytes probe = alice.send(bytes_of("probe"));
  for (size_t i = 0; i < probe.size(); ++i) {
    enclave::Channel fresh(k_ba, k_ab);
    Bytes bad = probe;
    bad[i] ^= uint8_t(1u << (i % 8));
    CHECK_THROWS_AS(fresh.recv(bad), IntegrityError);
  }
  enclave::Channel fresh(k_ba, k_ab);
  CHECK_THROWS_WITH_AS(fresh.recv(Bytes(35, 0)), "frame truncated", IntegrityError);
}

TEST_CASE("the envelope gates host output of a running program") {
  const ir::IRProgram p = ir::parse_program("const r1, 5\nout r1\nhalt\n");
  enclave::EnvelopeConfig closed;
  closed.allowlist = {"file_get"};
  enclave::Envelope denied(enclave::measure(p), closed);
  auto res = interp::execute(p, {}, {}, denied.hooks());
  CHECK(res.status == interp::Status::Detected);
  CHECK(res.reason == "denied-syscall");
  CHECK(res.output.empty());

  enclave::Envelope open(enclave::measure(p), {});
  res = interp::execute(p, {}, {}, open.hooks());
  REQUIRE(res.status == interp::Status::Halted);
  CHECK(res.output == std::vector<int64_t>{5});
}

TEST_CASE("paging is nearly free inside the cache and brutal past it") {
  const ir::IRProgram p = load("stream.ir");

  const std::vector<int64_t> fits{20, 5000};
  const auto plain_small = interp::execute(p, fits);
  REQUIRE(plain_small.status == interp::Status::Halted);
  enclave::Envelope env_small(enclave::measure(p), {});
  const auto paged_small = interp::execute(p, fits, {}, env_small.hooks());
  REQUIRE(paged_small.status == interp::Status::Halted);
  CHECK(paged_small.output == plain_small.output);
  const double small_ratio =
      double(paged_small.cycles) / double(plain_small.cycles);
  CHECK(small_ratio <= 1.05);
  CHECK(env_small.epc().faults() == 20);  // alloc page plus one cold pass
  CHECK(env_small.epc().hits() > 0);

  const std::vector<int64_t> spills{88, 30};
  const auto plain_large = interp::execute(p, spills);
  enclave::Envelope env_large(enclave::measure(p), {});
  const auto paged_large = interp::execute(p, spills, {}, env_large.hooks());
  REQUIRE(paged_large.status == interp::Status::Halted);
  const double large_ratio =
      double(paged_large.cycles) / double(plain_large.cycles);
  CHECK(large_ratio > 10.0);
}
