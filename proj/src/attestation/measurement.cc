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

#include "attestation/measurement.h"

namespace acetsm {

std::string MeasurementRegisters::ToString() const {
  return "code_data=" + ToHex(code_data) + " fdt=" + ToHex(fdt) +
         " boot_hart=" + ToHex(boot_hart);
}

void CodeDataMeasurement::Add(uint64_t guest_page_number, ByteSpan content) {
  Bytes prefix;
  PutBe64(prefix, guest_page_number);
  hasher_.Update(prefix);
  hasher_.Update(content);
}

Sha384Digest MeasureBootHart(const HartArchState& boot_hart) {
  return crypto::Sha384(boot_hart.CanonicalEncoding());
}

MeasurementRegisters MeasureTvm(std::span<const MeasuredPage> pages,
                                ByteSpan fdt, const HartArchState& boot_hart) {
  CodeDataMeasurement code;
  for (const auto& page : pages) code.Add(page.guest_page_number, page.content);
  MeasurementRegisters out;
  out.code_data = code.Finish();
  out.fdt = crypto::Sha384(fdt);
  out.boot_hart = MeasureBootHart(boot_hart);
  return out;
}

}  // namespace acetsm
