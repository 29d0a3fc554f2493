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

#include "hsm/hsm.h"

#include "tsm/abi.h"

namespace acetsm {

std::string_view VHartStateName(VHartState state) {
  switch (state) {
    case VHartState::kStarted: return "started";
    case VHartState::kStopped: return "stopped";
    case VHartState::kStartPending: return "start_pending";
    case VHartState::kSuspended: return "suspended";
  }
  return "?";
}

std::optional<VHartState> ParseVHartState(std::string_view name) {
  for (VHartState s : {VHartState::kStarted, VHartState::kStopped,
                       VHartState::kStartPending, VHartState::kSuspended}) {
    if (VHartStateName(s) == name) return s;
  }
  return std::nullopt;
}

bool IsHsmEdge(VHartState from, VHartState to) {
  using S = VHartState;
  return (from == S::kStopped && to == S::kStartPending) ||
         (from == S::kStartPending && to == S::kStarted) ||
         (from == S::kStarted && to == S::kStopped) ||
         (from == S::kStarted && to == S::kSuspended) ||
         (from == S::kSuspended && to == S::kStarted);
}

Result<VHartState> ApplyHsm(VHartState from, HsmOp op) {
  using S = VHartState;
  switch (op) {
    case HsmOp::kStart:
      if (from != S::kStopped) {
        return MakeError(ErrorCode::kAlreadyAvailable, "hart not stopped");
      }
      return S::kStartPending;
    case HsmOp::kActivate:
      if (from != S::kStartPending) {
        return MakeError(ErrorCode::kHartNotStarted, "no pending start");
      }
      return S::kStarted;
    case HsmOp::kResume:
      if (from != S::kSuspended) {
        return MakeError(ErrorCode::kHartNotStarted, "hart not suspended");
      }
      return S::kStarted;
    case HsmOp::kStop:
    case HsmOp::kSuspend:
      if (from != S::kStarted) {
        return MakeError(ErrorCode::kInvalidState, "hart not started");
      }
      return op == HsmOp::kStop ? S::kStopped : S::kSuspended;
  }
  return MakeError(ErrorCode::kInvalidState, "unknown hsm op");
}

Result<uint64_t> ResolveHartMask(uint64_t mask, uint64_t base, uint32_t count) {
  const uint64_t all = count >= 64 ? ~uint64_t{0} : (uint64_t{1} << count) - 1;
  if (base == abi::kMaskBaseAll) return all;
  if (mask == 0) return uint64_t{0};
  if (base >= count) return MakeError(ErrorCode::kInvalidParam, "mask base out of range");
  // Bits above 63 - base cannot be represented; treat as nonexistent harts.
  if (base > 0 && (mask >> (64 - base)) != 0) {
    return MakeError(ErrorCode::kInvalidParam, "mask addresses nonexistent hart");
  }
  const uint64_t shifted = mask << base;
  if (shifted & ~all) {
    return MakeError(ErrorCode::kInvalidParam, "mask addresses nonexistent hart");
  }
  return shifted;
}

}  // namespace acetsm
