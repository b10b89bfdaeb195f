#ifndef HARDEX_H
#define HARDEX_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Opaque parsed program. */
typedef struct hx_program hx_program;

/* Return codes. Every function returning int uses these. */
enum {
  HX_OK = 0,
  HX_EINVAL = 1,       /* null argument or bad parameter */
  HX_ESYNTAX = 2,      /* program text failed to parse */
  HX_ETRANSFORM = 3,   /* program cannot be hardened as requested */
  HX_EUNSUPPORTED = 4, /* opcode without an encoded form */
  HX_ERUNTIME = 5,     /* integrity, attestation, replay or range violation */
  HX_ECONFIG = 6,      /* malformed configuration */
  HX_EGOLDEN = 7,      /* fault-free reference run misbehaved */
  HX_EINTERNAL = 8,
};

const char* hx_code_name(int code);

/* Parses program text. On failure fills errbuf (if given) and returns a
 * syntax code. The program must be released with hx_program_free. */
int hx_program_parse(const char* text, hx_program** out, char* errbuf, size_t errbuf_len);

void hx_program_free(hx_program* p);

/* Canonical text form. *out_text is heap-allocated; free with
 * hx_string_free. */
int hx_program_serialize(const hx_program* p, char** out_text);

int64_t hx_program_instruction_count(const hx_program* p);

/* mode: "haft", "delta" or "both". The seed picks the encoding keys. */
int hx_harden(const hx_program* p, const char* mode, uint64_t seed, hx_program** out,
              char* errbuf, size_t errbuf_len);

/* Runs a program. envelope_json may be NULL; otherwise it configures the
 * protective shell ({"epc_pages", "fault_penalty", "allowlist",
 * "expected_measurements"}). The result JSON carries status, reason,
 * output, dyn_insts, cycles and rollbacks. */
int hx_execute(const hx_program* p, const int64_t* input, size_t input_len, uint64_t max_steps,
               const char* envelope_json, char** out_result_json, char* errbuf,
               size_t errbuf_len);

/* Lowercase hex digest of the canonical serialization. */
int hx_measure_hex(const hx_program* p, char** out_hex);

/* Fault-injection campaign. config JSON: {"model", "runs", "seed",
 * "input"?, "max_retries"?}. hardened may be NULL to attack the baseline
 * itself. */
int hx_campaign(const hx_program* baseline, const hx_program* hardened, const char* config_json,
                char** out_report_json, char* errbuf, size_t errbuf_len);

/* One-row CSV export of a campaign report. */
int hx_report_to_csv(const char* report_json, char** out_csv, char* errbuf, size_t errbuf_len);

/* Supervised-service simulation. config JSON mirrors the service spec. */
int hx_simulate(const char* config_json, double duration_s, uint64_t seed,
                char** out_report_json, char* errbuf, size_t errbuf_len);

void hx_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* HARDEX_H */
