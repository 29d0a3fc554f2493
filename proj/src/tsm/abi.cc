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

#include "tsm/abi.h"

#include <array>
#include <cstdio>

namespace acetsm::abi {
namespace {

struct NamedCall {
  std::string_view name;
  uint64_t ext;
  uint64_t fid;
};

constexpr std::array<NamedCall, 14> kCalls = {{
    {"promote", kExtTvm, kPromote},
    {"run", kExtTvm, kRun},
    {"destroy", kExtTvm, kDestroy},
    {"share_page", kExtTvm, kSharePage},
    {"retrieve_secret", kExtTvm, kRetrieveSecret},
    {"allow_interrupt", kExtTvm, kAllowInterrupt},
    {"hsm.start", kExtHsm, kHartStart},
    {"hsm.stop", kExtHsm, kHartStop},
    {"hsm.status", kExtHsm, kHartGetStatus},
    {"hsm.suspend", kExtHsm, kHartSuspend},
    {"ipi", kExtIpi, kIpiSend},
    {"fence", kExtRfence, 0},
    {"fence.vma", kExtRfence, 1},
    {"set_timer", kExtTime, kTimeSetTimer},
}};

constexpr std::array<std::string_view, 9> kExitNames = {
    "none", "guest_ecall", "external_interrupt", "guest_page_fault",
    "hart_start", "hart_stop", "hart_suspend", "wfi", "tvm_killed"};

}  // namespace

std::string_view ExitReasonName(ExitReason reason) {
  const auto i = static_cast<size_t>(reason);
  return i < kExitNames.size() ? kExitNames[i] : "unknown";
}

std::optional<ExitReason> ParseExitReason(std::string_view name) {
  for (size_t i = 0; i < kExitNames.size(); ++i) {
    if (kExitNames[i] == name) return static_cast<ExitReason>(i);
  }
  return std::nullopt;
}

std::string CallName(uint64_t ext, uint64_t fid) {
  for (const auto& call : kCalls) {
    if (call.ext == ext && call.fid == fid) return std::string(call.name);
  }
  if (ext == kExtRfence && fid <= kRfenceMaxFid) {
    return "fence." + std::to_string(fid);
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "ext:0x%llx:%llu",
                static_cast<unsigned long long>(ext),
                static_cast<unsigned long long>(fid));
  return buf;
}

std::optional<std::pair<uint64_t, uint64_t>> ParseCallName(std::string_view name) {
  for (const auto& call : kCalls) {
    if (call.name == name) return std::make_pair(call.ext, call.fid);
  }
  return std::nullopt;
}

}  // namespace acetsm::abi
