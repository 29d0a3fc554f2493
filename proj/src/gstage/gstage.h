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

#ifndef ACETSM_GSTAGE_GSTAGE_H_
#define ACETSM_GSTAGE_GSTAGE_H_

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string_view>
#include <vector>

#include "allocator/page_allocator.h"
#include "attestation/measurement.h"
#include "common/status.h"
#include "machine/machine.h"

namespace acetsm {

// Sv48x4-style G-stage format. Only V/R/W/X and the PPN are interpreted;
// every other bit must be zero.
namespace gstage {
inline constexpr int kLevels = 4;
inline constexpr uint64_t kRootEntries = 2048;
inline constexpr uint64_t kTableEntries = 512;
inline constexpr uint64_t kRootBytes = kRootEntries * 8;
inline constexpr uint64_t kTableBytes = kTableEntries * 8;
inline constexpr uint64_t kGuestAddressBits = 50;

inline constexpr uint64_t kValid = 1u << 0;
inline constexpr uint64_t kRead = 1u << 1;
inline constexpr uint64_t kWrite = 1u << 2;
inline constexpr uint64_t kExecute = 1u << 3;
inline constexpr uint64_t kPermMask = kRead | kWrite | kExecute;
inline constexpr int kPpnShift = 10;
inline constexpr uint64_t kPpnMask = ((uint64_t{1} << 44) - 1) << kPpnShift;

inline uint64_t MakePointer(uint64_t table_address) {
  return (table_address >> 12) << kPpnShift | kValid;
}
inline uint64_t MakeLeaf(uint64_t page_address, uint64_t perms) {
  return (page_address >> 12) << kPpnShift | perms | kValid;
}
inline uint64_t PteAddress(uint64_t pte) {
  return ((pte & kPpnMask) >> kPpnShift) << 12;
}
// Level 3 is the root; a leaf at level L maps 4 KiB << (9 * L).
inline uint64_t LevelShift(int level) { return 12 + 9 * level; }
}  // namespace gstage

enum class LeafKind { kMapped, kLazyZero, kShared };

std::string_view LeafKindName(LeafKind kind);

struct Translation {
  LeafKind kind;
  uint64_t address = 0;  // host physical address of gpa; 0 for kLazyZero
};

struct TablesStats {
  size_t table_tokens = 0;
  size_t data_tokens = 0;
  size_t lazy_leaves = 0;
  size_t materialized = 0;
  size_t shared = 0;
};

// Confidential page tables of one TVM. Owns its tokens; dropping the object
// without Release() leaks them from the allocator's point of view.
class TvmPageTables {
 public:
  TvmPageTables() = default;
  TvmPageTables(TvmPageTables&&) = default;
  TvmPageTables& operator=(TvmPageTables&&) = default;
  TvmPageTables(const TvmPageTables&) = delete;
  TvmPageTables& operator=(const TvmPageTables&) = delete;

  // Pure lookup. GuestFault when nothing maps gpa.
  Result<Translation> Translate(uint64_t gpa) const;

  // Backs a LazyZero page with a fresh zeroed 4 KiB token. Idempotent.
  Result<uint64_t> MaterializeZeroPage(uint64_t gpa, PageAllocator& allocator);

  // npa must already be validated as non-confidential.
  Status AddShared(uint64_t gpa, const NonConfidentialAddress& npa);

  // Returns every token (zeroized by the allocator).
  Status Release(PageAllocator& allocator, Machine& machine);

  // Confidential intervals owned through this table set.
  std::vector<Interval> OwnedIntervals() const;
  // Data pages only (copied leaves and materialized zero pages).
  std::vector<Interval> MappedIntervals() const;
  uint64_t root_address() const;
  TablesStats stats() const;
  bool empty() const { return tokens_.empty(); }

  // Snapshot copies for exhaustive model checking; tokens are re-forged.
  TvmPageTables Clone(const MemoryLayout& layout) const;

 private:
  friend class GStageWalker;

  struct Leaf {
    LeafKind kind;
    PageSize size;
    uint64_t host = 0;  // token base for kMapped
  };

  const Leaf* FindLeaf(uint64_t gpa, uint64_t* leaf_base) const;

  std::vector<PageToken> tokens_;
  std::vector<uint64_t> root_parts_;  // bases of the four root tokens
  std::map<uint64_t, Leaf> leaves_;   // guest base -> leaf
  std::map<uint64_t, uint64_t> materialized_;  // guest page -> host page
  std::map<uint64_t, uint64_t> shared_;        // guest page -> npa
  size_t table_tokens_ = 0;
};

struct WalkResult {
  TvmPageTables tables;
  std::vector<uint64_t> measured_pages;  // guest page numbers, ascending
  Sha384Digest code_data{};
};

// Validates hypervisor-built tables rooted at `root`, copies every non-zero
// leaf into confidential memory and measures it. All-or-nothing.
class GStageWalker {
 public:
  GStageWalker(Machine& machine, PageAllocator& allocator)
      : machine_(machine), allocator_(allocator) {}

  Result<WalkResult> WalkAndCopy(const NonConfidentialAddress& root);

 private:
  Result<uint64_t> WalkTable(uint64_t table, int level, uint64_t gpa_base,
                             WalkResult& out);
  Status CopyLeaf(uint64_t source, PageSize size, uint64_t gpa_base,
                  WalkResult& out);
  Status MarkVisited(uint64_t table, uint64_t bytes);
  Result<uint64_t> AllocateTable(int level, WalkResult& out);

  Machine& machine_;
  PageAllocator& allocator_;
  std::set<uint64_t> visited_;
  std::unique_ptr<CodeDataMeasurement> measure_;
};

}  // namespace acetsm

#endif  // ACETSM_GSTAGE_GSTAGE_H_
