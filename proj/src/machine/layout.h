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

#ifndef ACETSM_MACHINE_LAYOUT_H_
#define ACETSM_MACHINE_LAYOUT_H_

#include <cstdint>
#include <vector>

#include "allocator/page_size.h"
#include "common/status.h"
#include "machine/domain.h"

namespace acetsm {

struct MachineConfig {
  uint64_t memory_base = 0x8000'0000;
  uint64_t memory_size = 0x8000'0000;
  uint64_t confidential_base = 0xC000'0000;
  uint64_t confidential_size = 0x4000'0000;
  uint32_t hart_count = 1;
  // Base and size of the confidential region must be aligned to this page
  // size.
  PageSize region_alignment = PageSize::k1GiB;
};

// Half-open [begin, end).
struct Interval {
  uint64_t begin = 0;
  uint64_t end = 0;

  uint64_t size() const { return end - begin; }
  bool empty() const { return begin >= end; }
  bool Contains(uint64_t addr) const { return addr >= begin && addr < end; }
  // True iff [addr, addr+len) lies entirely inside. Overflow-safe; len 0 is
  // treated as a single byte probe.
  bool ContainsRange(uint64_t addr, uint64_t len) const;
  bool Overlaps(const Interval& other) const {
    return begin < other.end && other.begin < end;
  }

  friend bool operator==(const Interval&, const Interval&) = default;
};

class MemoryLayout;

// A physical address range the hypervisor owns. Only MemoryLayout can mint
// one, and only after checking it.
class NonConfidentialAddress {
 public:
  uint64_t value() const { return value_; }
  uint64_t length() const { return length_; }

  friend bool operator==(const NonConfidentialAddress&,
                         const NonConfidentialAddress&) = default;

 private:
  friend class MemoryLayout;
  NonConfidentialAddress(uint64_t value, uint64_t length)
      : value_(value), length_(length) {}
  uint64_t value_;
  uint64_t length_;
};

class ConfidentialAddress {
 public:
  uint64_t value() const { return value_; }

  friend bool operator==(const ConfidentialAddress&,
                         const ConfidentialAddress&) = default;
  friend auto operator<=>(const ConfidentialAddress&,
                          const ConfidentialAddress&) = default;

 private:
  friend class MemoryLayout;
  explicit ConfidentialAddress(uint64_t value) : value_(value) {}
  uint64_t value_;
};

enum class Permission : uint8_t {
  kNone,
  kReadWrite,
  // Confidential memory as seen by a TVM: only ranges granted to that TVM.
  kOwnedOnly,
};

struct RegionRule {
  Interval interval;
  Permission tsm = Permission::kReadWrite;
  Permission hypervisor = Permission::kNone;
  Permission tvm = Permission::kNone;

  Permission For(Domain domain) const;
};

class MemoryLayout {
 public:
  static Result<MemoryLayout> FromConfig(const MachineConfig& config);

  const Interval& memory() const { return memory_; }
  const Interval& non_confidential() const { return non_confidential_; }
  const Interval& confidential() const { return confidential_; }
  const std::vector<RegionRule>& region_rules() const { return rules_; }
  PageSize region_alignment() const { return region_alignment_; }

  // Untrusted input accepted; succeeds iff [raw, raw+len) is entirely inside
  // the respective interval.
  Result<NonConfidentialAddress> ValidateNonConfidential(uint64_t raw,
                                                         uint64_t len) const;
  Result<ConfidentialAddress> ValidateConfidential(uint64_t raw,
                                                   uint64_t len) const;

  // Rule covering addr, or nullptr when addr is outside memory.
  const RegionRule* RuleFor(uint64_t addr) const;

 private:
  MemoryLayout() = default;

  Interval memory_;
  Interval non_confidential_;
  Interval confidential_;
  std::vector<RegionRule> rules_;
  PageSize region_alignment_ = PageSize::k1GiB;
};

}  // namespace acetsm

#endif  // ACETSM_MACHINE_LAYOUT_H_
