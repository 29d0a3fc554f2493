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

#include "gstage/table_builder.h"

namespace acetsm {

using namespace gstage;  // NOLINT

GuestTableBuilder::GuestTableBuilder(uint64_t area, uint64_t area_end)
    : next_((area + kRootBytes - 1) & ~(kRootBytes - 1)), end_(area_end) {
  auto root = NewTable(kRootBytes);
  if (root.ok()) root_ = *root;
}

Result<uint64_t> GuestTableBuilder::NewTable(uint64_t bytes) {
  if (next_ + bytes > end_) {
    return MakeError(ErrorCode::kOutOfMemory, "table area exhausted");
  }
  const uint64_t table = next_;
  next_ += bytes;
  tables_[table].assign(bytes / 8, 0);
  return table;
}

static uint64_t IndexAt(uint64_t gpa, int level) {
  const uint64_t mask = level == kLevels - 1 ? kRootEntries - 1 : kTableEntries - 1;
  return (gpa >> LevelShift(level)) & mask;
}

Result<uint64_t> GuestTableBuilder::TableFor(uint64_t gpa, int level) {
  if (root_ == 0) return MakeError(ErrorCode::kOutOfMemory, "no root table");
  uint64_t table = root_;
  for (int l = kLevels - 1; l > level; --l) {
    auto& entries = tables_.at(table);
    uint64_t& pte = entries[IndexAt(gpa, l)];
    if (pte == 0) {
      ACETSM_ASSIGN_OR_RETURN(uint64_t child, NewTable(kTableBytes));
      tables_.at(table)[IndexAt(gpa, l)] = MakePointer(child);
      table = child;
      continue;
    }
    if (pte & kPermMask) {
      return MakeError(ErrorCode::kAlreadyMapped, "huge leaf on the path");
    }
    table = PteAddress(pte);
    if (!tables_.count(table)) {
      return MakeError(ErrorCode::kInvalidState, "path leaves builder tables");
    }
  }
  return table;
}

Status GuestTableBuilder::Map(uint64_t gpa, uint64_t host, PageSize size,
                              uint64_t perms) {
  const int level = LevelOf(size);
  if (gpa % PageBytes(size) != 0 || host % PageBytes(size) != 0) {
    return MakeError(ErrorCode::kInvalidParam, "unaligned mapping");
  }
  ACETSM_ASSIGN_OR_RETURN(uint64_t table, TableFor(gpa, level));
  tables_.at(table)[IndexAt(gpa, level)] = MakeLeaf(host, perms);
  return Status::Ok();
}

void GuestTableBuilder::SetEntry(uint64_t table, uint64_t index, uint64_t pte) {
  tables_.at(table).at(index) = pte;
}

uint64_t GuestTableBuilder::GetEntry(uint64_t table, uint64_t index) const {
  return tables_.at(table).at(index);
}

std::vector<uint64_t> GuestTableBuilder::tables() const {
  std::vector<uint64_t> out;
  for (const auto& [addr, entries] : tables_) out.push_back(addr);
  return out;
}

Status GuestTableBuilder::WriteTo(Machine& machine) const {
  for (const auto& [addr, entries] : tables_) {
    Bytes raw(entries.size() * 8);
    for (size_t i = 0; i < entries.size(); ++i) StoreLe64(&raw[i * 8], entries[i]);
    ACETSM_RETURN_IF_ERROR(machine.Write(DomainTag::Hypervisor(), addr, raw));
  }
  return Status::Ok();
}

}  // namespace acetsm
