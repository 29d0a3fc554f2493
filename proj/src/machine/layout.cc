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

#include "machine/layout.h"

#include <limits>
#include <string>

namespace acetsm {

std::string DomainTag::ToString() const {
  switch (domain) {
    case Domain::kTsm: return "tsm";
    case Domain::kHypervisor: return "hyp";
    case Domain::kTvm:
      return "tvm(" + std::to_string(tvm) + "," + std::to_string(vhart) + ")";
  }
  return "?";
}

bool Interval::ContainsRange(uint64_t addr, uint64_t len) const {
  if (len == 0) len = 1;
  if (addr < begin || addr >= end) return false;
  // addr < end, so end - addr cannot underflow.
  return len <= end - addr;
}

Permission RegionRule::For(Domain domain) const {
  switch (domain) {
    case Domain::kTsm: return tsm;
    case Domain::kHypervisor: return hypervisor;
    case Domain::kTvm: return tvm;
  }
  return Permission::kNone;
}

Result<MemoryLayout> MemoryLayout::FromConfig(const MachineConfig& config) {
  constexpr uint64_t kMax = std::numeric_limits<uint64_t>::max();
  if (config.hart_count == 0) {
    return MakeError(ErrorCode::kConfigError, "hart_count must be >= 1");
  }
  if (config.memory_size == 0 || config.memory_size > kMax - config.memory_base) {
    return MakeError(ErrorCode::kConfigError, "memory range empty or wraps");
  }
  if (config.confidential_size == 0 ||
      config.confidential_size > kMax - config.confidential_base) {
    return MakeError(ErrorCode::kConfigError,
                     "confidential range empty or wraps");
  }
  const uint64_t align = PageBytes(config.region_alignment);
  if (config.confidential_base % align != 0 ||
      config.confidential_size % align != 0) {
    return MakeError(ErrorCode::kConfigError,
                     "confidential region not aligned to " +
                         std::string(PageSizeName(config.region_alignment)));
  }
  if (config.memory_base % kSmallPageBytes != 0 ||
      config.memory_size % kSmallPageBytes != 0) {
    return MakeError(ErrorCode::kConfigError, "memory not 4K aligned");
  }

  MemoryLayout layout;
  layout.region_alignment_ = config.region_alignment;
  layout.memory_ = {config.memory_base, config.memory_base + config.memory_size};
  layout.confidential_ = {config.confidential_base,
                          config.confidential_base + config.confidential_size};
  if (!layout.memory_.ContainsRange(config.confidential_base,
                                    config.confidential_size)) {
    return MakeError(ErrorCode::kConfigError,
                     "confidential region exceeds configured memory");
  }
  // Two contiguous regions: the confidential one must sit at either end.
  if (layout.confidential_.begin == layout.memory_.begin) {
    layout.non_confidential_ = {layout.confidential_.end, layout.memory_.end};
  } else if (layout.confidential_.end == layout.memory_.end) {
    layout.non_confidential_ = {layout.memory_.begin, layout.confidential_.begin};
  } else {
    return MakeError(ErrorCode::kConfigError,
                     "confidential region must be a prefix or suffix of memory");
  }
  if (layout.non_confidential_.empty()) {
    return MakeError(ErrorCode::kConfigError,
                     "no non-confidential memory left for the hypervisor");
  }

  RegionRule shared{layout.non_confidential_, Permission::kReadWrite,
                    Permission::kReadWrite, Permission::kReadWrite};
  RegionRule confidential{layout.confidential_, Permission::kReadWrite,
                          Permission::kNone, Permission::kOwnedOnly};
  if (layout.non_confidential_.begin < layout.confidential_.begin) {
    layout.rules_ = {shared, confidential};
  } else {
    layout.rules_ = {confidential, shared};
  }
  return layout;
}

Result<NonConfidentialAddress> MemoryLayout::ValidateNonConfidential(
    uint64_t raw, uint64_t len) const {
  if (!non_confidential_.ContainsRange(raw, len)) {
    return MakeError(ErrorCode::kInvalidAddress,
                     "range not owned by the hypervisor");
  }
  return NonConfidentialAddress(raw, len);
}

Result<ConfidentialAddress> MemoryLayout::ValidateConfidential(
    uint64_t raw, uint64_t len) const {
  if (!confidential_.ContainsRange(raw, len)) {
    return MakeError(ErrorCode::kInvalidAddress,
                     "range not in confidential memory");
  }
  return ConfidentialAddress(raw);
}

const RegionRule* MemoryLayout::RuleFor(uint64_t addr) const {
  for (const auto& rule : rules_) {
    if (rule.interval.Contains(addr)) return &rule;
  }
  return nullptr;
}

}  // namespace acetsm
