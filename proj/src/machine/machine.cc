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

#include "machine/machine.h"

#include <algorithm>

namespace acetsm {

Result<Machine> Machine::Build(const MachineConfig& config) {
  ACETSM_ASSIGN_OR_RETURN(MemoryLayout layout, MemoryLayout::FromConfig(config));
  return Machine(config, std::move(layout));
}

Machine::Machine(MachineConfig config, MemoryLayout layout)
    : config_(config), layout_(std::move(layout)), harts_(config.hart_count) {}

bool Machine::Permits(const DomainTag& who, uint64_t address,
                      uint64_t length) const {
  if (length == 0) length = 1;
  if (!layout_.memory().ContainsRange(address, length)) return false;
  uint64_t cursor = address;
  const uint64_t end = address + length;
  while (cursor < end) {
    const RegionRule* rule = layout_.RuleFor(cursor);
    if (rule == nullptr) return false;
    const uint64_t chunk_end = std::min(end, rule->interval.end);
    switch (rule->For(who.domain)) {
      case Permission::kNone:
        return false;
      case Permission::kReadWrite:
        break;
      case Permission::kOwnedOnly:
        if (!IsGranted(who.tvm, cursor, chunk_end - cursor)) return false;
        break;
    }
    cursor = chunk_end;
  }
  return true;
}

void Machine::Notify(const AccessRecord& record) {
  if (!record.allowed) ++access_faults_;
  if (observer_) observer_(record);
}

Result<Bytes> Machine::Read(const DomainTag& who, uint64_t address,
                            uint64_t length) {
  const bool allowed = Permits(who, address, length);
  Notify({who, address, length, AccessOp::kRead, allowed});
  if (!allowed) {
    return MakeError(ErrorCode::kAccessFault,
                     who.ToString() + " read denied");
  }
  return memory_.Read(address, length);
}

Status Machine::Write(const DomainTag& who, uint64_t address, ByteSpan data) {
  const bool allowed = Permits(who, address, data.size());
  Notify({who, address, data.size(), AccessOp::kWrite, allowed});
  if (!allowed) {
    return MakeError(ErrorCode::kAccessFault,
                     who.ToString() + " write denied");
  }
  memory_.Write(address, data);
  return Status::Ok();
}

void Machine::GrantTvm(uint32_t tvm, Interval range) {
  grants_[tvm][range.begin] = range.end;
}

void Machine::RevokeTvm(uint32_t tvm, Interval range) {
  auto it = grants_.find(tvm);
  if (it == grants_.end()) return;
  it->second.erase(range.begin);
  if (it->second.empty()) grants_.erase(it);
}

void Machine::RevokeAllTvm(uint32_t tvm) { grants_.erase(tvm); }

bool Machine::IsGranted(uint32_t tvm, uint64_t address, uint64_t length) const {
  auto owner = grants_.find(tvm);
  if (owner == grants_.end()) return false;
  const auto& ranges = owner->second;
  uint64_t cursor = address;
  const uint64_t end = address + std::max<uint64_t>(length, 1);
  while (cursor < end) {
    auto it = ranges.upper_bound(cursor);
    if (it == ranges.begin()) return false;
    --it;
    if (cursor >= it->second) return false;
    cursor = it->second;
  }
  return true;
}

}  // namespace acetsm
