// Command-line front end over the shared library. Exit codes: 0 success,
// 2 parse/transform/config error, 3 runtime violation, 4 golden failure.
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hardex.h"

namespace {

struct StringFree {
  void operator()(char* s) const { hx_string_free(s); }
};
using CStr = std::unique_ptr<char, StringFree>;

struct ProgramFree {
  void operator()(hx_program* p) const { hx_program_free(p); }
};
using Program = std::unique_ptr<hx_program, ProgramFree>;

int exit_code_for(int hx_code) {
  switch (hx_code) {
    case HX_OK: return 0;
    case HX_ERUNTIME: return 3;
    case HX_EGOLDEN: return 4;
    case HX_EINTERNAL: return 3;
    default: return 2;
  }
}

[[noreturn]] void die(int code, const std::string& msg) {
  std::fprintf(stderr, "error: %s\n", msg.c_str());
  std::exit(code);
}

void check(int rc, const char* errbuf) {
  if (rc == HX_OK) return;
  die(exit_code_for(rc), std::string(hx_code_name(rc)) + ": " + errbuf);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) die(2, "cannot open " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void spill(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) die(2, "cannot write " + path);
  out << text;
}

Program parse_file(const std::string& path) {
  const std::string text = slurp(path);
  hx_program* raw = nullptr;
  char errbuf[512] = {};
  check(hx_program_parse(text.c_str(), &raw, errbuf, sizeof errbuf), errbuf);
  return Program(raw);
}

std::vector<int64_t> load_input(const std::string& path) {
  if (path.empty()) return {};
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(slurp(path));
  } catch (const nlohmann::json::exception& e) {
    die(2, std::string("bad input file: ") + e.what());
  }
  if (!j.is_array()) die(2, "input file must be a JSON array of integers");
  std::vector<int64_t> input;
  for (const auto& v : j) {
    if (!v.is_number_integer() && !v.is_number_unsigned()) {
      die(2, "input file must be a JSON array of integers");
    }
    input.push_back(v.get<int64_t>());
  }
  return input;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hardening toolchain for the register-machine IR"};
  app.require_subcommand(1);
  char errbuf[512] = {};

  // harden
  std::string h_mode, h_in, h_out;
  uint64_t h_seed = 0;
  auto* harden = app.add_subcommand("harden", "rewrite a program with a hardening transform");
  harden->add_option("--mode", h_mode, "haft | delta | both")->required();
  harden->add_option("--in", h_in, "input program")->required();
  harden->add_option("--out", h_out, "output program")->required();
  harden->add_option("--seed", h_seed, "encoding key draw seed");

  // run
  std::string r_in, r_input, r_enclave;
  uint64_t r_max_steps = 10'000'000;
  auto* run = app.add_subcommand("run", "execute a program");
  run->add_option("--in", r_in, "program")->required();
  run->add_option("--input", r_input, "JSON array of input words");
  run->add_option("--enclave", r_enclave, "envelope config JSON");
  run->add_option("--max-steps", r_max_steps, "dynamic instruction budget");

  // inject
  std::string i_in, i_hardened, i_model, i_report, i_input, i_csv;
  uint64_t i_runs = 0, i_seed = 0;
  int i_retries = 3;
  auto* inject = app.add_subcommand("inject", "run a fault-injection campaign");
  inject->add_option("--in", i_in, "baseline program")->required();
  inject->add_option("--hardened", i_hardened, "hardened variant under attack");
  inject->add_option("--model", i_model, "reg-bitflip | mem-bitflip | opcode-corrupt")->required();
  inject->add_option("--runs", i_runs, "number of sampled faults")->required();
  inject->add_option("--seed", i_seed, "campaign seed")->required();
  inject->add_option("--report", i_report, "report JSON path")->required();
  inject->add_option("--input", i_input, "JSON array of input words");
  inject->add_option("--csv", i_csv, "also export the report as CSV");
  inject->add_option("--max-retries", i_retries, "region retry budget");

  // simulate
  std::string s_config, s_report;
  uint64_t s_seed = 0;
  double s_duration = 0;
  auto* simulate = app.add_subcommand("simulate", "simulate a supervised service");
  simulate->add_option("--config", s_config, "service spec JSON")->required();
  simulate->add_option("--seed", s_seed, "simulation seed")->required();
  simulate->add_option("--duration", s_duration, "simulated seconds")->required();
  simulate->add_option("--report", s_report, "report JSON path")->required();

  // measure
  std::string m_baseline, m_hardened, m_input, m_report;
  auto* measure = app.add_subcommand("measure", "compare hardened against baseline cost");
  measure->add_option("--baseline", m_baseline, "baseline program")->required();
  measure->add_option("--hardened", m_hardened, "hardened program")->required();
  measure->add_option("--input", m_input, "JSON array of input words");
  measure->add_option("--report", m_report, "also write the ratios as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (harden->parsed()) {
    if ((h_mode == "delta" || h_mode == "both") && harden->count("--seed") == 0) {
      die(2, "--seed is required for encoding modes");
    }
    Program in = parse_file(h_in);
    hx_program* raw = nullptr;
    check(hx_harden(in.get(), h_mode.c_str(), h_seed, &raw, errbuf, sizeof errbuf), errbuf);
    Program out(raw);
    char* text = nullptr;
    check(hx_program_serialize(out.get(), &text), errbuf);
    CStr guard(text);
    spill(h_out, text);
    const int64_t before = hx_program_instruction_count(in.get());
    const int64_t after = hx_program_instruction_count(out.get());
    const double ratio = before > 0 ? double(after) / double(before) : 1.0;
    std::printf("instruction-count ratio: %.4f\n", ratio);
    return 0;
  }

  if (run->parsed()) {
    Program prog = parse_file(r_in);
    const std::vector<int64_t> input = load_input(r_input);
    const std::string envelope = r_enclave.empty() ? "" : slurp(r_enclave);
    char* result = nullptr;
    check(hx_execute(prog.get(), input.data(), input.size(), r_max_steps,
                     envelope.empty() ? nullptr : envelope.c_str(), &result, errbuf,
                     sizeof errbuf),
          errbuf);
    CStr guard(result);
    std::printf("%s\n", result);
    return 0;
  }

  if (inject->parsed()) {
    Program baseline = parse_file(i_in);
    Program hardened;
    if (!i_hardened.empty()) hardened = parse_file(i_hardened);
    const std::vector<int64_t> input = load_input(i_input);
    nlohmann::ordered_json cfg{
        {"model", i_model}, {"runs", i_runs}, {"seed", i_seed},
        {"input", input},   {"max_retries", i_retries},
    };
    char* report = nullptr;
    check(hx_campaign(baseline.get(), hardened.get(), cfg.dump().c_str(), &report, errbuf,
                      sizeof errbuf),
          errbuf);
    CStr guard(report);
    spill(i_report, std::string(report) + "\n");
    if (!i_csv.empty()) {
      char* csv = nullptr;
      check(hx_report_to_csv(report, &csv, errbuf, sizeof errbuf), errbuf);
      CStr csv_guard(csv);
      spill(i_csv, csv);
    }
    const auto j = nlohmann::ordered_json::parse(std::string(report));
    const auto& c = j.at("counts");
    std::printf("masked=%llu detected=%llu sdc=%llu crashed=%llu hang=%llu\n",
                (unsigned long long)c.at("masked").get<uint64_t>(),
                (unsigned long long)c.at("detected").get<uint64_t>(),
                (unsigned long long)c.at("sdc").get<uint64_t>(),
                (unsigned long long)c.at("crashed").get<uint64_t>(),
                (unsigned long long)c.at("hang").get<uint64_t>());
    return 0;
  }

  if (simulate->parsed()) {
    const std::string cfg = slurp(s_config);
    char* report = nullptr;
    check(hx_simulate(cfg.c_str(), s_duration, s_seed, &report, errbuf, sizeof errbuf), errbuf);
    CStr guard(report);
    spill(s_report, std::string(report) + "\n");
    const auto j = nlohmann::ordered_json::parse(std::string(report));
    std::printf("availability=%s respawns=%llu\n", j.at("availability").dump().c_str(),
                (unsigned long long)j.at("respawns").get<uint64_t>());
    return 0;
  }

  if (measure->parsed()) {
    Program baseline = parse_file(m_baseline);
    Program hardened = parse_file(m_hardened);
    const std::vector<int64_t> input = load_input(m_input);
    auto run_one = [&](hx_program* p) {
      char* result = nullptr;
      check(hx_execute(p, input.data(), input.size(), 0, nullptr, &result, errbuf, sizeof errbuf),
            errbuf);
      CStr guard(result);
      return nlohmann::ordered_json::parse(std::string(result));
    };
    const auto base = run_one(baseline.get());
    const auto hard = run_one(hardened.get());
    if (base.at("status") != "halted" || hard.at("status") != "halted") {
      die(3, "both programs must halt to be compared");
    }
    nlohmann::ordered_json out{
        {"dyn_inst_ratio", hard.at("dyn_insts").get<double>() / base.at("dyn_insts").get<double>()},
        {"cycle_ratio", hard.at("cycles").get<double>() / base.at("cycles").get<double>()},
    };
    const std::string text = out.dump(2);
    std::printf("%s\n", text.c_str());
    if (!m_report.empty()) spill(m_report, text + "\n");
    return 0;
  }

  return 2;
}
