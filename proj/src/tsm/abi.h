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

#ifndef ACETSM_TSM_ABI_H_
#define ACETSM_TSM_ABI_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace acetsm::abi {

// Extension ids (a7) and function ids (a6). Arguments in a0..a5; the TSM
// returns an error code in a0 and a value in a1.
inline constexpr uint64_t kExtTvm = 0x54565331;  // "TVS1"
inline constexpr uint64_t kExtHsm = 0x48534D;
inline constexpr uint64_t kExtIpi = 0x735049;
inline constexpr uint64_t kExtRfence = 0x52464E43;
inline constexpr uint64_t kExtTime = 0x54494D45;

enum TvmFid : uint64_t {
  kPromote = 0,
  kRun = 1,
  kDestroy = 2,
  kSharePage = 3,
  kRetrieveSecret = 4,
  kAllowInterrupt = 5,
};

enum HsmFid : uint64_t {
  kHartStart = 0,
  kHartStop = 1,
  kHartGetStatus = 2,
  kHartSuspend = 3,
};

inline constexpr uint64_t kIpiSend = 0;
inline constexpr uint64_t kTimeSetTimer = 0;
inline constexpr uint64_t kRfenceMaxFid = 6;

// SBI hart_mask_base value meaning "all harts".
inline constexpr uint64_t kMaskBaseAll = ~uint64_t{0};

// Exit reasons reported by run in a1 (and the hypervisor's cause CSR).
enum class ExitReason : uint64_t {
  kNone = 0,
  kGuestEcall = 1,         // hypercall; TVM a0..a7 reclassified to s2..s9
  kExternalInterrupt = 2,  // detail: irq id
  kGuestPageFault = 3,     // detail: faulting gpa
  kHartStart = 4,          // detail: target vhart now StartPending
  kHartStop = 5,
  kHartSuspend = 6,
  kWfi = 7,
  kTvmKilled = 8,  // confidential memory exhausted; TVM destroyed
};

// Hypervisor registers that receive the reclassified TVM a0..a7 on a
// GuestEcall exit (s2..s9).
inline constexpr int kReclassifyBase = 18;

std::string_view ExitReasonName(ExitReason reason);
std::optional<ExitReason> ParseExitReason(std::string_view name);

// "promote", "hsm.start", "ipi", ... or "ext:0x...:fid" for unknown calls.
std::string CallName(uint64_t ext, uint64_t fid);
// Inverse of CallName for the named calls: (ext, fid).
std::optional<std::pair<uint64_t, uint64_t>> ParseCallName(std::string_view name);

}  // namespace acetsm::abi

#endif  // ACETSM_TSM_ABI_H_
