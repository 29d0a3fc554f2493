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

#ifndef ACETSM_MACHINE_HART_STATE_H_
#define ACETSM_MACHINE_HART_STATE_H_

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

#include "common/bytes.h"
#include "common/status.h"
#include "machine/domain.h"

namespace acetsm {

// Modeled control/status registers. The enumerator order is the canonical
// order used by the save-state encoding and by the boot-hart measurement.
enum class Csr : uint8_t {
  kPc = 0,           // sepc surrogate
  kCause,            // trap / exit cause
  kTval,             // trap value (gpa, irq id, ...)
  kTimecmp,          // VS timer compare
  kIp,               // interrupt-pending set
  kIe,               // interrupt-enable set
  kIrqId,            // id of the injected external interrupt
  kTimerDisclosure,  // reclassified timer deadline (hypervisor view)
};
inline constexpr size_t kCsrCount = 8;

std::string_view CsrName(Csr csr);
std::optional<Csr> ParseCsr(std::string_view name);

// Bit positions inside the kIp / kIe model.
inline constexpr uint64_t kSoftwareInterruptBit = 1ull << 1;
inline constexpr uint64_t kTimerInterruptBit = 1ull << 5;
inline constexpr uint64_t kExternalInterruptBit = 1ull << 9;

// GPR indices of the argument registers a0..a7.
inline constexpr int kRegA0 = 10;
inline constexpr int kRegA7 = 17;

std::string_view GprName(int index);  // ABI name
std::optional<int> ParseGprName(std::string_view name);  // "x5", "a0", "sp"

class HartArchState {
 public:
  // Size of the little-endian save-state / boot-hart encoding.
  static constexpr size_t kEncodedSize = (32 + kCsrCount) * 8;

  uint64_t gpr(int index) const { return gprs_.at(index); }
  void set_gpr(int index, uint64_t value) {
    if (index != 0) gprs_.at(index) = value;
  }
  uint64_t a(int n) const { return gpr(kRegA0 + n); }
  void set_a(int n, uint64_t value) { set_gpr(kRegA0 + n, value); }

  uint64_t csr(Csr c) const { return csrs_[static_cast<size_t>(c)]; }
  void set_csr(Csr c, uint64_t value) { csrs_[static_cast<size_t>(c)] = value; }

  const DomainTag& domain_tag() const { return tag_; }
  void set_domain_tag(const DomainTag& tag) { tag_ = tag; }

  // Scrubs every register; the domain tag is kept.
  void Clear();

  // x0..x31 then CSRs in canonical order, 8-byte little-endian each.
  Bytes Encode() const;
  static Result<HartArchState> Decode(ByteSpan bytes);

  // Same order, 8-byte big-endian; this is the measured form.
  Bytes CanonicalEncoding() const;

  // Register contents only; the domain tag is not part of equality.
  bool SameRegisters(const HartArchState& other) const {
    return gprs_ == other.gprs_ && csrs_ == other.csrs_;
  }

 private:
  std::array<uint64_t, 32> gprs_{};
  std::array<uint64_t, kCsrCount> csrs_{};
  DomainTag tag_ = DomainTag::Hypervisor();
};

}  // namespace acetsm

#endif  // ACETSM_MACHINE_HART_STATE_H_
