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

#ifndef ACETSM_HSM_HSM_H_
#define ACETSM_HSM_HSM_H_

#include <cstdint>
#include <limits>
#include <optional>
#include <string_view>

#include "common/status.h"

namespace acetsm {

// Values match the SBI HSM get_status encoding.
enum class VHartState : uint64_t {
  kStarted = 0,
  kStopped = 1,
  kStartPending = 2,
  kSuspended = 4,
};

std::string_view VHartStateName(VHartState state);
std::optional<VHartState> ParseVHartState(std::string_view name);

// Stopped->StartPending->Started, Started->Stopped, Started->Suspended->Started.
bool IsHsmEdge(VHartState from, VHartState to);

enum class HsmOp {
  kStart,     // requested by another vhart
  kActivate,  // first run after a start request
  kStop,
  kSuspend,
  kResume,    // run of a suspended vhart
};

// The single place where lifecycle transitions are decided.
// Errors: AlreadyAvailable (start of a non-stopped hart), HartNotStarted
// (activate/resume from the wrong state), InvalidState (stop/suspend when not
// started).
Result<VHartState> ApplyHsm(VHartState from, HsmOp op);

struct VHartLifecycle {
  VHartState state = VHartState::kStopped;
  uint64_t start_gpa = 0;
  uint64_t opaque = 0;
};

inline constexpr uint64_t kNoDeadline = std::numeric_limits<uint64_t>::max();

struct TimerState {
  uint64_t deadline = kNoDeadline;  // vs_timer_cmp
  uint64_t disclosed = 0;           // last value reclassified to the hypervisor
};

// SBI hart_mask/hart_mask_base to a bit set over `count` vharts.
// InvalidParam if the mask names a vhart that does not exist.
Result<uint64_t> ResolveHartMask(uint64_t mask, uint64_t base, uint32_t count);

}  // namespace acetsm

#endif  // ACETSM_HSM_HSM_H_
