// Copyright 2026 The ACE-TSM Simulator Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// C interface to the confidential-VM security monitor simulator.
//
// Every fallible function returns an acetsm_status: 0 on success, a negative
// error code otherwise (see acetsm_status_name). Objects are opaque handles
// released with their matching *_free function; passing NULL to a free
// function is a no-op. Optional `error` out-parameters receive a diagnostic
// buffer the caller must free.

#ifndef ACETSM_ACETSM_H_
#define ACETSM_ACETSM_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef int32_t acetsm_status;

#define ACETSM_OK 0
#define ACETSM_ERR_FAILED (-1)
#define ACETSM_ERR_INVALID_PARAM (-3)
#define ACETSM_ERR_DENIED (-4)
#define ACETSM_ERR_INVALID_ADDRESS (-5)
#define ACETSM_ERR_INVALID_STATE (-10)
#define ACETSM_ERR_MALFORMED_TABLE (-100)
#define ACETSM_ERR_OUT_OF_MEMORY (-101)
#define ACETSM_ERR_PARSE (-102)
#define ACETSM_ERR_NO_MATCHING_LOCKBOX (-103)
#define ACETSM_ERR_AUTH_FAILURE (-104)
#define ACETSM_ERR_ATTESTATION_FAILED (-105)

// Name of a status code, e.g. "InvalidAddress". Never NULL.
const char* acetsm_status_name(acetsm_status status);
const char* acetsm_version(void);

// Owned byte buffer. Data is always followed by a NUL byte, so textual
// buffers can be used as C strings.
typedef struct acetsm_buffer acetsm_buffer;
const uint8_t* acetsm_buffer_data(const acetsm_buffer* buffer);
const char* acetsm_buffer_str(const acetsm_buffer* buffer);
size_t acetsm_buffer_size(const acetsm_buffer* buffer);
void acetsm_buffer_free(acetsm_buffer* buffer);

// --- Scenarios --------------------------------------------------------------

typedef struct acetsm_scenario acetsm_scenario;
typedef struct acetsm_outcome acetsm_outcome;

typedef struct acetsm_run_options {
  int threads;            // nonzero: one thread per hart
  int double_free_check;  // zero disables the allocator check (test hook)
} acetsm_run_options;

acetsm_run_options acetsm_run_options_default(void);

acetsm_status acetsm_scenario_load(const char* path, acetsm_scenario** out,
                                   acetsm_buffer** error);
acetsm_status acetsm_scenario_parse(const char* text, size_t size,
                                    const char* name, acetsm_scenario** out,
                                    acetsm_buffer** error);
// Name is bare ("double_free") or qualified ("attacks/double_free").
acetsm_status acetsm_scenario_bundled(const char* name, acetsm_scenario** out,
                                      acetsm_buffer** error);
const char* acetsm_scenario_name(const acetsm_scenario* scenario);
void acetsm_scenario_free(acetsm_scenario* scenario);

size_t acetsm_bundled_count(void);
// Returns "category/name", or NULL past the end.
const char* acetsm_bundled_name(size_t index);

// A NULL options pointer means acetsm_run_options_default().
acetsm_status acetsm_scenario_run(const acetsm_scenario* scenario,
                                  const acetsm_run_options* options,
                                  acetsm_outcome** out);
int acetsm_outcome_passed(const acetsm_outcome* outcome);
size_t acetsm_outcome_expects_checked(const acetsm_outcome* outcome);
size_t acetsm_outcome_failure_count(const acetsm_outcome* outcome);
const char* acetsm_outcome_failure(const acetsm_outcome* outcome, size_t index);
// Versioned trace text: header line, then one line per entry.
const char* acetsm_outcome_trace(const acetsm_outcome* outcome);
size_t acetsm_outcome_trace_entries(const acetsm_outcome* outcome);
void acetsm_outcome_free(acetsm_outcome* outcome);

// --- Adversarial suite --------------------------------------------------------

typedef struct acetsm_suite acetsm_suite;

acetsm_status acetsm_suite_run(const acetsm_run_options* options,
                               acetsm_suite** out);
size_t acetsm_suite_rows(const acetsm_suite* suite);
const char* acetsm_suite_row_name(const acetsm_suite* suite, size_t index);
int acetsm_suite_row_defended(const acetsm_suite* suite, size_t index);
const char* acetsm_suite_row_detail(const acetsm_suite* suite, size_t index);
int acetsm_suite_all_defended(const acetsm_suite* suite);
// The verdict table as printed by the CLI.
const char* acetsm_suite_table(const acetsm_suite* suite);
void acetsm_suite_free(acetsm_suite* suite);

// --- Allocator overhead -------------------------------------------------------

typedef struct acetsm_allocator_report {
  uint64_t free_tokens;
  uint64_t allocated_tokens;
  uint64_t nonempty_nodes;
  uint64_t token_bytes;
  uint64_t node_bytes;
  uint64_t modeled_bytes;
  uint64_t free_bytes;
  uint64_t allocated_bytes;
} acetsm_allocator_report;

// Report for a confidential region of `region_bytes` at the default base.
// `fill_page` is "" (fresh region) or a page size ("4K", "2M", "1G"): the
// region is then allocated entirely at that granularity before reporting.
acetsm_status acetsm_allocator_report_region(uint64_t region_bytes,
                                             const char* fill_page,
                                             acetsm_allocator_report* out,
                                             acetsm_buffer** error);
acetsm_status acetsm_outcome_allocator(const acetsm_outcome* outcome,
                                       acetsm_allocator_report* out);

// --- TVM attestation payloads ---------------------------------------------------

// Seals a payload given in its text form to the built-in device keys of the
// named KEMs ("testkem", "mlkem768"). `seed` of 0 draws OS randomness; any
// other value gives a reproducible blob.
acetsm_status acetsm_tap_create(const char* payload_text,
                                const char* const* kems, size_t kem_count,
                                uint64_t seed, acetsm_buffer** blob,
                                acetsm_buffer** error);
// Header and lockbox listing; never reveals plaintext.
acetsm_status acetsm_tap_inspect(const uint8_t* blob, size_t size,
                                 acetsm_buffer** description,
                                 acetsm_buffer** error);
// Unseals with the built-in device keys and returns the payload text form.
acetsm_status acetsm_tap_unseal(const uint8_t* blob, size_t size,
                                acetsm_buffer** payload_text,
                                acetsm_buffer** error);
// Comma-separated names of the KEM providers in this build.
const char* acetsm_kem_names(void);

#ifdef __cplusplus
}  // extern "C"
#endif

#endif  // ACETSM_ACETSM_H_
