#include <cstring>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "hardex.h"
#include "support.hpp"

using nlohmann::json;

namespace {

// Owns an hx_program for the scope of one test.
struct Prog {
  hx_program* p = nullptr;
  ~Prog() { hx_program_free(p); }
};

// Owns a C-string returned by the library.
struct Str {
  char* s = nullptr;
  ~Str() { hx_string_free(s); }
};

int parse(const std::string& text, Prog& prog, char* errbuf = nullptr, size_t len = 0) {
  return hx_program_parse(text.c_str(), &prog.p, errbuf, len);
}

std::string corpus(const std::string& name) { return testsupport::read_corpus(name); }

}  // namespace

TEST_CASE("programs parse, serialize and count through the boundary") {
  Prog prog;
  REQUIRE(parse(corpus("sum_loop.ir"), prog) == HX_OK);
  REQUIRE(prog.p != nullptr);
  CHECK(hx_program_instruction_count(prog.p) == 9);

  Str text;
  REQUIRE(hx_program_serialize(prog.p, &text.s) == HX_OK);
  Prog again;
  REQUIRE(parse(text.s, again) == HX_OK);
  Str text2;
  REQUIRE(hx_program_serialize(again.p, &text2.s) == HX_OK);
  CHECK(std::string(text.s) == text2.s);

  CHECK(hx_program_instruction_count(nullptr) == -1);
}

TEST_CASE("parse failures come back as a code and a message") {
  Prog prog;
  char errbuf[256] = {0};
  CHECK(parse("const r1, 1\nnop\n", prog, errbuf, sizeof errbuf) == HX_ESYNTAX);
  CHECK(prog.p == nullptr);
  CHECK(std::string(errbuf).find("unknown opcode") != std::string::npos);
  CHECK(std::string(errbuf).find("2") != std::string::npos);  // the offending line
}

TEST_CASE("hardening modes transform or refuse through the boundary") {
  Prog base;
  REQUIRE(parse(corpus("sum_loop.ir"), base) == HX_OK);
  char errbuf[256] = {0};

  Prog haft;
  REQUIRE(hx_harden(base.p, "haft", 0, &haft.p, errbuf, sizeof errbuf) == HX_OK);
  CHECK(hx_program_instruction_count(haft.p) == 21);

  Prog delta;
  REQUIRE(hx_harden(base.p, "delta", 1, &delta.p, errbuf, sizeof errbuf) == HX_OK);
  Str text;
  REQUIRE(hx_program_serialize(delta.p, &text.s) == HX_OK);
  CHECK(std::string(text.s).find("#! delta A1=") == 0);

  Prog both;
  REQUIRE(hx_harden(base.p, "both", 1, &both.p, errbuf, sizeof errbuf) == HX_OK);
  CHECK(hx_program_instruction_count(both.p) > hx_program_instruction_count(delta.p));

  Prog bad;
  CHECK(hx_harden(base.p, "armored", 0, &bad.p, errbuf, sizeof errbuf) == HX_ECONFIG);
  CHECK(std::string(errbuf).find("unknown mode") != std::string::npos);

  Prog reserved;
  REQUIRE(parse("const r32, 1\nhalt\n", reserved) == HX_OK);
  Prog out1;
  CHECK(hx_harden(reserved.p, "haft", 0, &out1.p, errbuf, sizeof errbuf) == HX_ETRANSFORM);

  Prog bitops;
  REQUIRE(parse(corpus("bitops.ir"), bitops) == HX_OK);
  Prog out2;
  CHECK(hx_harden(bitops.p, "delta", 0, &out2.p, errbuf, sizeof errbuf) == HX_EUNSUPPORTED);
}

TEST_CASE("execution results arrive as structured JSON") {
  Prog prog;
  REQUIRE(parse(corpus("sum_loop.ir"), prog) == HX_OK);
  Str out;
  REQUIRE(hx_execute(prog.p, nullptr, 0, 0, nullptr, &out.s, nullptr, 0) == HX_OK);
  const json r = json::parse(out.s);
  CHECK(r.at("status") == "halted");
  CHECK(r.at("reason") == "");
  CHECK(r.at("output") == std::vector<int64_t>{55});
  CHECK(r.at("dyn_insts") == 45);
  CHECK(r.at("cycles") == 45);
  CHECK(r.at("rollbacks") == 0);
  CHECK(r.at("input_warnings") == 0);
  CHECK(!r.contains("envelope"));

  // A crash is a result, not an API error.
  Prog div;
  REQUIRE(parse(corpus("divzero.ir"), div) == HX_OK);
  const int64_t zero_in[] = {0};
  Str crashed;
  REQUIRE(hx_execute(div.p, zero_in, 1, 0, nullptr, &crashed.s, nullptr, 0) == HX_OK);
  const json c = json::parse(crashed.s);
  CHECK(c.at("status") == "crashed");
  CHECK(c.at("reason") == "div-by-zero");

  Prog spin;
  REQUIRE(parse(corpus("infinite.ir"), spin) == HX_OK);
  Str hung;
  REQUIRE(hx_execute(spin.p, nullptr, 0, 1000, nullptr, &hung.s, nullptr, 0) == HX_OK);
  const json h = json::parse(hung.s);
  CHECK(h.at("status") == "hang-limit");
  CHECK(h.at("dyn_insts") == 1000);
}

TEST_CASE("an envelope config threads through execution") {
  Prog prog;
  REQUIRE(parse(corpus("stream.ir"), prog) == HX_OK);
  const int64_t in[] = {4, 2};
  Str out;
  char errbuf[256] = {0};
  REQUIRE(hx_execute(prog.p, in, 2, 0, R"({"epc_pages": 2, "fault_penalty": 100})", &out.s,
                     errbuf, sizeof errbuf) == HX_OK);
  const json r = json::parse(out.s);
  REQUIRE(r.contains("envelope"));
  CHECK(r.at("envelope").at("measurement").get<std::string>().size() == 64);
  CHECK(r.at("envelope").at("epc_faults").get<uint64_t>() > 0);
  CHECK(r.at("cycles").get<uint64_t>() > r.at("dyn_insts").get<uint64_t>());

  Str none;
  CHECK(hx_execute(prog.p, in, 2, 0, R"({"epc_pagez": 2})", &none.s, errbuf, sizeof errbuf) ==
        HX_ECONFIG);
  CHECK(none.s == nullptr);

  Str denied;
  REQUIRE(hx_execute(prog.p, in, 2, 0, R"({"allowlist": []})", &denied.s, errbuf,
                     sizeof errbuf) == HX_OK);
  CHECK(json::parse(denied.s).at("status") == "detected");
  CHECK(json::parse(denied.s).at("reason") == "denied-syscall");
}

TEST_CASE("measurements are stable hex through the boundary") {
  Prog a;
  REQUIRE(parse(corpus("fsm.ir"), a) == HX_OK);
  Str ha;
  REQUIRE(hx_measure_hex(a.p, &ha.s) == HX_OK);
  CHECK(std::strlen(ha.s) == 64);
  CHECK(std::string(ha.s).find_first_not_of("0123456789abcdef") == std::string::npos);

  Str text;
  REQUIRE(hx_program_serialize(a.p, &text.s) == HX_OK);
  Prog b;
  REQUIRE(parse(text.s, b) == HX_OK);
  Str hb;
  REQUIRE(hx_measure_hex(b.p, &hb.s) == HX_OK);
  CHECK(std::string(ha.s) == hb.s);
}

TEST_CASE("campaigns run and export through the boundary") {
  Prog base;
  REQUIRE(parse(corpus("sum_loop.ir"), base) == HX_OK);
  Prog hard;
  REQUIRE(hx_harden(base.p, "haft", 0, &hard.p, nullptr, 0) == HX_OK);

  char errbuf[256] = {0};
  Str report;
  REQUIRE(hx_campaign(base.p, hard.p,
                      R"({"model": "reg-bitflip", "runs": 200, "seed": 11})", &report.s,
                      errbuf, sizeof errbuf) == HX_OK);
  const json r = json::parse(report.s);
  CHECK(r.at("params").at("variant") == "hardened");
  CHECK(r.at("counts").at("masked").get<uint64_t>() +
            r.at("counts").at("detected").get<uint64_t>() +
            r.at("counts").at("sdc").get<uint64_t>() +
            r.at("counts").at("crashed").get<uint64_t>() +
            r.at("counts").at("hang").get<uint64_t>() ==
        200);

  Str csv;
  REQUIRE(hx_report_to_csv(report.s, &csv.s, errbuf, sizeof errbuf) == HX_OK);
  CHECK(std::string(csv.s).find("reg-bitflip,hardened,200,11,") != std::string::npos);

  Str bad;
  CHECK(hx_campaign(base.p, nullptr, R"({"model": "reg-bitflip", "cadence": 3})", &bad.s,
                    errbuf, sizeof errbuf) == HX_ECONFIG);
  CHECK(std::string(errbuf).find("unknown campaign config key") != std::string::npos);

  Str bad2;
  CHECK(hx_campaign(base.p, nullptr, "not json", &bad2.s, errbuf, sizeof errbuf) == HX_ECONFIG);

  Prog spin;
  REQUIRE(parse(corpus("infinite.ir"), spin) == HX_OK);
  Str bad3;
  CHECK(hx_campaign(spin.p, nullptr, R"({"runs": 5, "max_steps": 2000})", &bad3.s, errbuf,
                    sizeof errbuf) == HX_EGOLDEN);

  Str bad4;
  CHECK(hx_report_to_csv("{}", &bad4.s, errbuf, sizeof errbuf) == HX_ECONFIG);
}

TEST_CASE("service simulation crosses the boundary with exact numbers") {
  const char* cfg = R"({
    "target_instances": 1, "max_instances": 1, "respawn_delay_s": 5.0,
    "scripted_crashes": [{"time_s": 10.0, "instance": 0}]
  })";
  Str report;
  char errbuf[256] = {0};
  REQUIRE(hx_simulate(cfg, 100.0, 1, &report.s, errbuf, sizeof errbuf) == HX_OK);
  const json r = json::parse(report.s);
  CHECK(r.at("availability").get<double>() == 0.95);
  CHECK(r.at("respawns") == 1);

  Str bad;
  CHECK(hx_simulate(R"({"deadline_s": 0.01})", 10.0, 1, &bad.s, errbuf, sizeof errbuf) ==
        HX_ECONFIG);
  Str bad2;
  CHECK(hx_simulate(cfg, -1.0, 1, &bad2.s, errbuf, sizeof errbuf) == HX_ECONFIG);
}

TEST_CASE("null arguments are rejected without touching anything") {
  Prog prog;
  REQUIRE(parse("halt\n", prog) == HX_OK);
  hx_program* out = nullptr;
  char* s = nullptr;
  CHECK(hx_program_parse(nullptr, &out, nullptr, 0) == HX_EINVAL);
  CHECK(hx_program_parse("halt\n", nullptr, nullptr, 0) == HX_EINVAL);
  CHECK(hx_program_serialize(nullptr, &s) == HX_EINVAL);
  CHECK(hx_program_serialize(prog.p, nullptr) == HX_EINVAL);
  CHECK(hx_harden(nullptr, "haft", 0, &out, nullptr, 0) == HX_EINVAL);
  CHECK(hx_harden(prog.p, nullptr, 0, &out, nullptr, 0) == HX_EINVAL);
  CHECK(hx_execute(nullptr, nullptr, 0, 0, nullptr, &s, nullptr, 0) == HX_EINVAL);
  CHECK(hx_execute(prog.p, nullptr, 3, 0, nullptr, &s, nullptr, 0) == HX_EINVAL);
  CHECK(hx_measure_hex(prog.p, nullptr) == HX_EINVAL);
  CHECK(hx_campaign(nullptr, nullptr, "{}", &s, nullptr, 0) == HX_EINVAL);
  CHECK(hx_report_to_csv(nullptr, &s, nullptr, 0) == HX_EINVAL);
  CHECK(hx_simulate(nullptr, 1.0, 0, &s, nullptr, 0) == HX_EINVAL);
  hx_program_free(nullptr);  // must be a no-op
  hx_string_free(nullptr);
}

TEST_CASE("error codes have stable names") {
  CHECK(std::string(hx_code_name(HX_OK)) == "ok");
  CHECK(std::string(hx_code_name(HX_EINVAL)) == "invalid-argument");
  CHECK(std::string(hx_code_name(HX_ESYNTAX)) == "syntax-error");
  CHECK(std::string(hx_code_name(HX_ETRANSFORM)) == "transform-error");
  CHECK(std::string(hx_code_name(HX_EUNSUPPORTED)) == "unsupported-instruction");
  CHECK(std::string(hx_code_name(HX_ERUNTIME)) == "runtime-violation");
  CHECK(std::string(hx_code_name(HX_ECONFIG)) == "config-error");
  CHECK(std::string(hx_code_name(HX_EGOLDEN)) == "golden-failure");
  CHECK(std::string(hx_code_name(HX_EINTERNAL)) == "internal-error");
  CHECK(std::string(hx_code_name(999)) == "?");
}
