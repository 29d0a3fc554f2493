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

#ifndef ACETSM_ATTESTATION_MEASUREMENT_H_
#define ACETSM_ATTESTATION_MEASUREMENT_H_

#include <cstdint>
#include <span>
#include <string>

#include "attestation/crypto.h"
#include "common/bytes.h"
#include "machine/hart_state.h"

namespace acetsm {

using crypto::Sha384Digest;

struct MeasurementRegisters {
  Sha384Digest code_data{};
  Sha384Digest fdt{};
  Sha384Digest boot_hart{};

  bool operator==(const MeasurementRegisters&) const = default;
  std::string ToString() const;
};

struct MeasuredPage {
  uint64_t guest_page_number;  // gpa >> 12
  ByteSpan content;            // exactly 4 KiB
};

// Incremental form so the walker can feed pages without buffering them all.
class CodeDataMeasurement {
 public:
  // Pages must arrive in ascending guest page order; zero pages are skipped by
  // the caller.
  void Add(uint64_t guest_page_number, ByteSpan content);
  Sha384Digest Finish() { return hasher_.Finish(); }

 private:
  crypto::Sha384Hasher hasher_;
};

MeasurementRegisters MeasureTvm(std::span<const MeasuredPage> pages,
                                ByteSpan fdt, const HartArchState& boot_hart);

Sha384Digest MeasureBootHart(const HartArchState& boot_hart);

}  // namespace acetsm

#endif  // ACETSM_ATTESTATION_MEASUREMENT_H_
