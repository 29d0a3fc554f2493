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

#ifndef ACETSM_GSTAGE_TABLE_BUILDER_H_
#define ACETSM_GSTAGE_TABLE_BUILDER_H_

#include <cstdint>
#include <map>
#include <vector>

#include "allocator/page_size.h"
#include "common/status.h"
#include "gstage/gstage.h"
#include "machine/machine.h"

namespace acetsm {

// Hypervisor-side construction of G-stage tables in non-confidential memory.
// Tables are carved from [area, area_end) with a bump pointer.
class GuestTableBuilder {
 public:
  GuestTableBuilder(uint64_t area, uint64_t area_end);

  uint64_t root() const { return root_; }

  // Creates intermediate tables as needed.
  Status Map(uint64_t gpa, uint64_t host, PageSize size = PageSize::k4KiB,
             uint64_t perms = gstage::kPermMask);

  // Address of the table at `level` on the path to gpa, creating it if needed.
  Result<uint64_t> TableFor(uint64_t gpa, int level);

  // Raw entry override, for building hostile tables.
  void SetEntry(uint64_t table, uint64_t index, uint64_t pte);
  uint64_t GetEntry(uint64_t table, uint64_t index) const;
  std::vector<uint64_t> tables() const;

  // Stores every table through the hypervisor's view of memory.
  Status WriteTo(Machine& machine) const;

 private:
  Result<uint64_t> NewTable(uint64_t bytes);

  uint64_t next_;
  uint64_t end_;
  uint64_t root_ = 0;
  std::map<uint64_t, std::vector<uint64_t>> tables_;
};

}  // namespace acetsm

#endif  // ACETSM_GSTAGE_TABLE_BUILDER_H_
