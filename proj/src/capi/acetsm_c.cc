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

#include "acetsm/acetsm.h"

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "allocator/page_allocator.h"
#include "attestation/kem.h"
#include "attestation/random.h"
#include "attestation/tap.h"
#include "machine/layout.h"
#include "scenario/runner.h"
#include "scenario/scenario.h"
#include "scenario/suite.h"

struct acetsm_buffer {
  std::string bytes;
};

struct acetsm_scenario {
  acetsm::Scenario scenario;
};

struct acetsm_outcome {
  acetsm::ScenarioOutcome outcome;
};

struct acetsm_suite {
  std::vector<acetsm::AttackRow> rows;
  std::string table;
};

namespace {

using acetsm::ErrorCode;
using acetsm::Status;

acetsm_buffer* NewBuffer(std::string bytes) {
  return new acetsm_buffer{std::move(bytes)};
}

acetsm_status Fail(const Status& status, acetsm_buffer** error) {
  if (error != nullptr) *error = NewBuffer(status.ToString());
  return static_cast<acetsm_status>(status.code());
}

acetsm_status Fail(ErrorCode code, std::string message, acetsm_buffer** error) {
  return Fail(Status(code, std::move(message)), error);
}

acetsm::RunOptions ToOptions(const acetsm_run_options* options) {
  const acetsm_run_options o =
      options != nullptr ? *options : acetsm_run_options_default();
  return {.threads = o.threads != 0, .double_free_check = o.double_free_check != 0};
}

void CopyReport(const acetsm::AllocatorReport& in, acetsm_allocator_report* out) {
  *out = {in.free_tokens,  in.allocated_tokens, in.nonempty_nodes,
          in.token_bytes,  in.node_bytes,       in.modeled_bytes,
          in.free_bytes,   in.allocated_bytes};
}

acetsm_status TakeScenario(acetsm::Result<acetsm::Scenario> parsed,
                           acetsm_scenario** out, acetsm_buffer** error) {
  if (out == nullptr) return Fail(ErrorCode::kInvalidParam, "null out", error);
  if (!parsed.ok()) return Fail(parsed.status(), error);
  *out = new acetsm_scenario{std::move(parsed).value()};
  return ACETSM_OK;
}

template <typename T>
const T* At(const std::vector<T>& items, size_t index) {
  return index < items.size() ? &items[index] : nullptr;
}

}  // namespace

extern "C" {

const char* acetsm_status_name(acetsm_status status) {
  return acetsm::ErrorCodeName(static_cast<ErrorCode>(status)).data();
}

const char* acetsm_version(void) { return "0.1.0"; }

const uint8_t* acetsm_buffer_data(const acetsm_buffer* buffer) {
  return reinterpret_cast<const uint8_t*>(buffer->bytes.data());
}
const char* acetsm_buffer_str(const acetsm_buffer* buffer) {
  return buffer->bytes.c_str();
}
size_t acetsm_buffer_size(const acetsm_buffer* buffer) { return buffer->bytes.size(); }
void acetsm_buffer_free(acetsm_buffer* buffer) { delete buffer; }

acetsm_run_options acetsm_run_options_default(void) {
  return {.threads = 0, .double_free_check = 1};
}

acetsm_status acetsm_scenario_load(const char* path, acetsm_scenario** out,
                                   acetsm_buffer** error) {
  if (path == nullptr) return Fail(ErrorCode::kInvalidParam, "null path", error);
  return TakeScenario(acetsm::LoadScenario(path), out, error);
}

acetsm_status acetsm_scenario_parse(const char* text, size_t size,
                                    const char* name, acetsm_scenario** out,
                                    acetsm_buffer** error) {
  if (text == nullptr) return Fail(ErrorCode::kInvalidParam, "null text", error);
  return TakeScenario(acetsm::ParseScenario(std::string_view(text, size),
                                            name != nullptr ? name : ""),
                      out, error);
}

acetsm_status acetsm_scenario_bundled(const char* name, acetsm_scenario** out,
                                      acetsm_buffer** error) {
  if (name == nullptr) return Fail(ErrorCode::kInvalidParam, "null name", error);
  return TakeScenario(acetsm::LoadBundledScenario(name), out, error);
}

const char* acetsm_scenario_name(const acetsm_scenario* scenario) {
  return scenario->scenario.name.c_str();
}

void acetsm_scenario_free(acetsm_scenario* scenario) { delete scenario; }

size_t acetsm_bundled_count(void) { return acetsm::BundledScenarios().size(); }

const char* acetsm_bundled_name(size_t index) {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& entry : acetsm::BundledScenarios()) {
      out.push_back(std::string(entry.category) + "/" + std::string(entry.name));
    }
    return out;
  }();
  const std::string* name = At(names, index);
  return name != nullptr ? name->c_str() : nullptr;
}

acetsm_status acetsm_scenario_run(const acetsm_scenario* scenario,
                                  const acetsm_run_options* options,
                                  acetsm_outcome** out) {
  if (scenario == nullptr || out == nullptr) return ACETSM_ERR_INVALID_PARAM;
  *out = new acetsm_outcome{acetsm::RunScenario(scenario->scenario, ToOptions(options))};
  return ACETSM_OK;
}

int acetsm_outcome_passed(const acetsm_outcome* outcome) {
  return outcome->outcome.passed ? 1 : 0;
}
size_t acetsm_outcome_expects_checked(const acetsm_outcome* outcome) {
  return outcome->outcome.expects_checked;
}
size_t acetsm_outcome_failure_count(const acetsm_outcome* outcome) {
  return outcome->outcome.failures.size();
}
const char* acetsm_outcome_failure(const acetsm_outcome* outcome, size_t index) {
  const std::string* failure = At(outcome->outcome.failures, index);
  return failure != nullptr ? failure->c_str() : nullptr;
}
const char* acetsm_outcome_trace(const acetsm_outcome* outcome) {
  return outcome->outcome.trace_text.c_str();
}
size_t acetsm_outcome_trace_entries(const acetsm_outcome* outcome) {
  return outcome->outcome.trace.size();
}
void acetsm_outcome_free(acetsm_outcome* outcome) { delete outcome; }

acetsm_status acetsm_suite_run(const acetsm_run_options* options,
                               acetsm_suite** out) {
  if (out == nullptr) return ACETSM_ERR_INVALID_PARAM;
  auto rows = acetsm::RunAttackSuite(ToOptions(options));
  std::string table = acetsm::FormatAttackTable(rows);
  *out = new acetsm_suite{std::move(rows), std::move(table)};
  return ACETSM_OK;
}
size_t acetsm_suite_rows(const acetsm_suite* suite) { return suite->rows.size(); }
const char* acetsm_suite_row_name(const acetsm_suite* suite, size_t index) {
  const auto* row = At(suite->rows, index);
  return row != nullptr ? row->name.c_str() : nullptr;
}
int acetsm_suite_row_defended(const acetsm_suite* suite, size_t index) {
  const auto* row = At(suite->rows, index);
  return row != nullptr && row->defended ? 1 : 0;
}
const char* acetsm_suite_row_detail(const acetsm_suite* suite, size_t index) {
  const auto* row = At(suite->rows, index);
  return row != nullptr ? row->detail.c_str() : nullptr;
}
int acetsm_suite_all_defended(const acetsm_suite* suite) {
  for (const auto& row : suite->rows) {
    if (!row.defended) return 0;
  }
  return 1;
}
const char* acetsm_suite_table(const acetsm_suite* suite) { return suite->table.c_str(); }
void acetsm_suite_free(acetsm_suite* suite) { delete suite; }

acetsm_status acetsm_allocator_report_region(uint64_t region_bytes,
                                             const char* fill_page,
                                             acetsm_allocator_report* out,
                                             acetsm_buffer** error) {
  if (out == nullptr) return Fail(ErrorCode::kInvalidParam, "null out", error);
  std::optional<acetsm::PageSize> fill;
  if (fill_page != nullptr && *fill_page != '\0') {
    fill = acetsm::ParsePageSize(fill_page);
    if (!fill) {
      return Fail(ErrorCode::kInvalidParam,
                  std::string("unknown page size ") + fill_page, error);
    }
  }
  // Confidential suffix of memory starting at the default base, aligned to
  // the smallest page size so any 4K-multiple region can be reported.
  acetsm::MachineConfig config;
  config.confidential_size = region_bytes;
  config.memory_size = (config.confidential_base - config.memory_base) + region_bytes;
  config.region_alignment = acetsm::PageSize::k4KiB;
  auto layout = acetsm::MemoryLayout::FromConfig(config);
  if (!layout.ok()) return Fail(layout.status(), error);
  acetsm::PageAllocator allocator(*layout);
  std::vector<acetsm::PageToken> held;
  if (fill) {
    while (true) {
      auto token = allocator.Allocate(*fill);
      if (!token.ok()) break;
      held.push_back(std::move(token).value());
    }
  }
  CopyReport(allocator.Report(), out);
  return ACETSM_OK;
}

acetsm_status acetsm_outcome_allocator(const acetsm_outcome* outcome,
                                       acetsm_allocator_report* out) {
  if (outcome == nullptr || out == nullptr) return ACETSM_ERR_INVALID_PARAM;
  CopyReport(outcome->outcome.allocator, out);
  return ACETSM_OK;
}

acetsm_status acetsm_tap_create(const char* payload_text,
                                const char* const* kems, size_t kem_count,
                                uint64_t seed, acetsm_buffer** blob,
                                acetsm_buffer** error) {
  if (payload_text == nullptr || blob == nullptr || (kems == nullptr && kem_count > 0)) {
    return Fail(ErrorCode::kInvalidParam, "null argument", error);
  }
  auto payload = acetsm::TapPayload::FromText(payload_text);
  if (!payload.ok()) return Fail(payload.status(), error);
  const auto device = acetsm::TsmAttestationKey::Builtin().PublicKeys();
  std::vector<acetsm::KemPublicKey> recipients;
  for (size_t i = 0; i < kem_count; ++i) {
    auto algorithm = acetsm::ParseKemName(kems[i]);
    if (!algorithm) {
      return Fail(ErrorCode::kUnsupportedAlgorithm,
                  std::string("unknown KEM ") + kems[i], error);
    }
    bool found = false;
    for (const auto& key : device) {
      if (key.algorithm == *algorithm) {
        recipients.push_back(key);
        found = true;
      }
    }
    if (!found) {
      return Fail(ErrorCode::kUnsupportedAlgorithm,
                  std::string("KEM not in this build: ") + kems[i], error);
    }
  }
  std::unique_ptr<acetsm::RandomSource> rng;
  if (seed == 0) {
    rng = std::make_unique<acetsm::SystemRandom>();
  } else {
    rng = std::make_unique<acetsm::DeterministicRandom>(seed);
  }
  auto sealed = acetsm::TapCreate(*payload, recipients, *rng);
  if (!sealed.ok()) return Fail(sealed.status(), error);
  const acetsm::Bytes bytes = sealed->Serialize();
  *blob = NewBuffer(std::string(bytes.begin(), bytes.end()));
  return ACETSM_OK;
}

acetsm_status acetsm_tap_inspect(const uint8_t* blob, size_t size,
                                 acetsm_buffer** description,
                                 acetsm_buffer** error) {
  if (blob == nullptr || description == nullptr) {
    return Fail(ErrorCode::kInvalidParam, "null argument", error);
  }
  auto parsed = acetsm::ParseTap(acetsm::ByteSpan(blob, size));
  if (!parsed.ok()) return Fail(parsed.status(), error);
  *description = NewBuffer(parsed->Describe());
  return ACETSM_OK;
}

acetsm_status acetsm_tap_unseal(const uint8_t* blob, size_t size,
                                acetsm_buffer** payload_text,
                                acetsm_buffer** error) {
  if (blob == nullptr || payload_text == nullptr) {
    return Fail(ErrorCode::kInvalidParam, "null argument", error);
  }
  auto parsed = acetsm::ParseTap(acetsm::ByteSpan(blob, size));
  if (!parsed.ok()) return Fail(parsed.status(), error);
  auto payload = acetsm::TapUnseal(*parsed, acetsm::TsmAttestationKey::Builtin());
  if (!payload.ok()) return Fail(payload.status(), error);
  *payload_text = NewBuffer(payload->ToText());
  return ACETSM_OK;
}

const char* acetsm_kem_names(void) {
  static const std::string names = [] {
    std::string out;
    for (auto algorithm : acetsm::AvailableKems()) {
      if (!out.empty()) out += ",";
      out += acetsm::KemName(algorithm);
    }
    return out;
  }();
  return names.c_str();
}

}  // extern "C"
