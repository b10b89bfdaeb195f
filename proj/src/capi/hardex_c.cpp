#include "hardex.h"

#include <cstring>
#include <new>
#include <string>

#include "json.hpp"

#include "core/delta.hpp"
#include "core/enclave.hpp"
#include "core/errors.hpp"
#include "core/haft.hpp"
#include "core/inject.hpp"
#include "core/interp.hpp"
#include "core/ir.hpp"
#include "core/orchestrate.hpp"

using namespace hardex;

struct hx_program {
  ir::IRProgram prog;
};

namespace {

void fill_err(char* errbuf, size_t errbuf_len, const std::string& msg) {
  if (!errbuf || errbuf_len == 0) return;
  const size_t n = std::min(errbuf_len - 1, msg.size());
  std::memcpy(errbuf, msg.data(), n);
  errbuf[n] = '\0';
}

char* dup_string(const std::string& s) {
  char* out = new (std::nothrow) char[s.size() + 1];
  if (!out) return nullptr;
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

// Runs `fn`, translating the exception family into return codes.
template <typename Fn>
int guarded(char* errbuf, size_t errbuf_len, Fn&& fn) {
  try {
    return fn();
  } catch (const ir::SyntaxError& e) {
    fill_err(errbuf, errbuf_len, e.what());
    return HX_ESYNTAX;
  } catch (const UnsupportedInstruction& e) {
    fill_err(errbuf, errbuf_len, e.what());
    return HX_EUNSUPPORTED;
  } catch (const TransformError& e) {
    fill_err(errbuf, errbuf_len, e.what());
    return HX_ETRANSFORM;
  } catch (const ConfigError& e) {
    fill_err(errbuf, errbuf_len, e.what());
    return HX_ECONFIG;
  } catch (const GoldenFailure& e) {
    fill_err(errbuf, errbuf_len, e.what());
    return HX_EGOLDEN;
  } catch (const RangeError& e) {
    fill_err(errbuf, errbuf_len, e.what());
    return HX_ERUNTIME;
  } catch (const CodeViolation& e) {
    fill_err(errbuf, errbuf_len, std::string("code-violation: ") + e.what());
    return HX_ERUNTIME;
  } catch (const IntegrityError& e) {
    fill_err(errbuf, errbuf_len, e.what());
    return HX_ERUNTIME;
  } catch (const ReplayError& e) {
    fill_err(errbuf, errbuf_len, e.what());
    return HX_ERUNTIME;
  } catch (const AttestationError& e) {
    fill_err(errbuf, errbuf_len, e.what());
    return HX_ERUNTIME;
  } catch (const SyscallDenied& e) {
    fill_err(errbuf, errbuf_len, e.what());
    return HX_ERUNTIME;
  } catch (const nlohmann::json::exception& e) {
    fill_err(errbuf, errbuf_len, e.what());
    return HX_ECONFIG;
  } catch (const std::exception& e) {
    fill_err(errbuf, errbuf_len, e.what());
    return HX_EINTERNAL;
  }
}

}  // namespace

extern "C" {

const char* hx_code_name(int code) {
  switch (code) {
    case HX_OK: return "ok";
    case HX_EINVAL: return "invalid-argument";
    case HX_ESYNTAX: return "syntax-error";
    case HX_ETRANSFORM: return "transform-error";
    case HX_EUNSUPPORTED: return "unsupported-instruction";
    case HX_ERUNTIME: return "runtime-violation";
    case HX_ECONFIG: return "config-error";
    case HX_EGOLDEN: return "golden-failure";
    case HX_EINTERNAL: return "internal-error";
  }
  return "?";
}

int hx_program_parse(const char* text, hx_program** out, char* errbuf, size_t errbuf_len) {
  if (!text || !out) return HX_EINVAL;
  *out = nullptr;
  return guarded(errbuf, errbuf_len, [&] {
    auto* p = new hx_program{ir::parse_program(text)};
    *out = p;
    return HX_OK;
  });
}

void hx_program_free(hx_program* p) { delete p; }

int hx_program_serialize(const hx_program* p, char** out_text) {
  if (!p || !out_text) return HX_EINVAL;
  *out_text = dup_string(ir::serialize_canonical(p->prog));
  return *out_text ? HX_OK : HX_EINTERNAL;
}

int64_t hx_program_instruction_count(const hx_program* p) {
  return p ? static_cast<int64_t>(p->prog.instructions.size()) : -1;
}

int hx_harden(const hx_program* p, const char* mode, uint64_t seed, hx_program** out,
              char* errbuf, size_t errbuf_len) {
  if (!p || !mode || !out) return HX_EINVAL;
  *out = nullptr;
  const std::string m = mode;
  return guarded(errbuf, errbuf_len, [&] {
    ir::IRProgram result;
    if (m == "haft") {
      result = haft::transform_haft(p->prog);
    } else if (m == "delta") {
      result = delta::transform_delta(p->prog, delta::draw_params(seed), 32);
    } else if (m == "both") {
      result = haft::transform_haft(delta::transform_delta(p->prog, delta::draw_params(seed), 16));
    } else {
      throw ConfigError("unknown mode '" + m + "'");
    }
    *out = new hx_program{std::move(result)};
    return HX_OK;
  });
}

int hx_execute(const hx_program* p, const int64_t* input, size_t input_len, uint64_t max_steps,
               const char* envelope_json, char** out_result_json, char* errbuf,
               size_t errbuf_len) {
  if (!p || !out_result_json || (input_len > 0 && !input)) return HX_EINVAL;
  *out_result_json = nullptr;
  return guarded(errbuf, errbuf_len, [&] {
    std::vector<int64_t> in(input, input + input_len);
    interp::Limits limits;
    if (max_steps > 0) limits.max_steps = max_steps;

    std::optional<enclave::Envelope> env;
    interp::Hooks hooks;
    if (envelope_json && *envelope_json) {
      const auto cfg = enclave::EnvelopeConfig::from_json(nlohmann::json::parse(envelope_json));
      env.emplace(enclave::measure(p->prog), cfg);
      hooks = env->hooks();
    }

    const interp::ExecResult res = interp::execute(p->prog, in, limits, hooks);
    nlohmann::ordered_json j;
    j["status"] = std::string(interp::status_name(res.status));
    j["reason"] = res.reason;
    j["output"] = res.output;
    j["dyn_insts"] = res.dyn_insts;
    j["cycles"] = res.cycles;
    j["rollbacks"] = res.rollbacks;
    j["input_warnings"] = res.input_warnings;
    if (env) {
      j["envelope"] = {{"measurement", env->measurement().hex()},
                       {"epc_faults", env->epc().faults()},
                       {"epc_hits", env->epc().hits()}};
    }
    *out_result_json = dup_string(j.dump(2));
    return *out_result_json ? HX_OK : HX_EINTERNAL;
  });
}

int hx_measure_hex(const hx_program* p, char** out_hex) {
  if (!p || !out_hex) return HX_EINVAL;
  *out_hex = dup_string(enclave::measure(p->prog).hex());
  return *out_hex ? HX_OK : HX_EINTERNAL;
}

int hx_campaign(const hx_program* baseline, const hx_program* hardened, const char* config_json,
                char** out_report_json, char* errbuf, size_t errbuf_len) {
  if (!baseline || !config_json || !out_report_json) return HX_EINVAL;
  *out_report_json = nullptr;
  return guarded(errbuf, errbuf_len, [&] {
    const nlohmann::json j = nlohmann::json::parse(config_json);
    if (!j.is_object()) throw ConfigError("campaign config must be an object");
    inject::CampaignConfig cfg;
    for (const auto& [key, value] : j.items()) {
      if (key == "model") {
        cfg.model = inject::model_from_name(value.get<std::string>());
      } else if (key == "runs") {
        cfg.runs = value.get<uint64_t>();
      } else if (key == "seed") {
        cfg.seed = value.get<uint64_t>();
      } else if (key == "input") {
        cfg.input = value.get<std::vector<int64_t>>();
      } else if (key == "max_retries") {
        cfg.max_retries = value.get<int>();
      } else if (key == "max_steps") {
        cfg.max_steps = value.get<uint64_t>();
      } else {
        throw ConfigError("unknown campaign config key '" + key + "'");
      }
    }
    const auto report =
        inject::run_campaign(baseline->prog, hardened ? &hardened->prog : nullptr, cfg);
    *out_report_json = dup_string(report.dump(2));
    return *out_report_json ? HX_OK : HX_EINTERNAL;
  });
}

int hx_report_to_csv(const char* report_json, char** out_csv, char* errbuf, size_t errbuf_len) {
  if (!report_json || !out_csv) return HX_EINVAL;
  *out_csv = nullptr;
  return guarded(errbuf, errbuf_len, [&] {
    const auto report = nlohmann::ordered_json::parse(report_json);
    *out_csv = dup_string(inject::report_to_csv(report));
    return *out_csv ? HX_OK : HX_EINTERNAL;
  });
}

int hx_simulate(const char* config_json, double duration_s, uint64_t seed,
                char** out_report_json, char* errbuf, size_t errbuf_len) {
  if (!config_json || !out_report_json) return HX_EINVAL;
  *out_report_json = nullptr;
  return guarded(errbuf, errbuf_len, [&] {
    const auto spec = orch::ServiceSpec::from_json(nlohmann::json::parse(config_json));
    const auto report = orch::simulate(spec, duration_s, seed);
    *out_report_json = dup_string(report.dump(2));
    return *out_report_json ? HX_OK : HX_EINTERNAL;
  });
}

void hx_string_free(char* s) { delete[] s; }

}  // extern "C"
