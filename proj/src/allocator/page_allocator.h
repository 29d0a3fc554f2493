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

#ifndef ACETSM_ALLOCATOR_PAGE_ALLOCATOR_H_
#define ACETSM_ALLOCATOR_PAGE_ALLOCATOR_H_

#include <array>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <unordered_map>
#include <vector>

#include "allocator/page_size.h"
#include "common/status.h"
#include "machine/layout.h"
#include "machine/machine.h"

namespace acetsm {

enum class TokenState : uint8_t { kZeroed, kCarrying };

// Exclusive ownership of one aligned confidential region of one page size.
// Move-only; a moved-from token is empty and owns nothing.
class PageToken {
 public:
  PageToken(PageToken&& other) noexcept { *this = std::move(other); }
  PageToken& operator=(PageToken&& other) noexcept {
    address_ = other.address_;
    size_ = other.size_;
    state_ = other.state_;
    other.address_.reset();
    return *this;
  }
  PageToken(const PageToken&) = delete;
  PageToken& operator=(const PageToken&) = delete;

  bool valid() const { return address_.has_value(); }
  ConfidentialAddress address() const { return address_.value(); }
  uint64_t base() const { return address_.value().value(); }
  PageSize size() const { return size_; }
  uint64_t bytes() const { return PageBytes(size_); }
  Interval interval() const { return {base(), base() + bytes()}; }
  TokenState state() const { return state_; }
  void MarkCarrying() { state_ = TokenState::kCarrying; }

  // Fabricates a token for an arbitrary region. Exists only so tests and the
  // adversarial suite can replay stale tokens against the allocator.
  static PageToken ForgeForReplay(ConfidentialAddress address, PageSize size) {
    return PageToken(address, size, TokenState::kCarrying);
  }

 private:
  friend class PageAllocator;
  PageToken(ConfidentialAddress address, PageSize size, TokenState state)
      : address_(address), size_(size), state_(state) {}

  std::optional<ConfidentialAddress> address_;
  PageSize size_ = PageSize::k4KiB;
  TokenState state_ = TokenState::kZeroed;
};

struct AllocatorReport {
  uint64_t free_tokens = 0;
  uint64_t allocated_tokens = 0;
  uint64_t nonempty_nodes = 0;
  uint64_t token_bytes = 0;    // 9 B per token, free or allocated
  uint64_t node_bytes = 0;     // 32 B per non-empty node
  uint64_t modeled_bytes = 0;  // token_bytes + node_bytes
  uint64_t free_bytes = 0;
  uint64_t allocated_bytes = 0;

  friend bool operator==(const AllocatorReport&, const AllocatorReport&) = default;
};

// Work done by the most recent Allocate/Deallocate.
struct AllocatorOpStats {
  int levels_touched = 0;
  uint64_t entries_touched = 0;
};

// Size-hierarchical free tree of page tokens. Each level holds the free
// tokens of one page size; a node is one aligned parent region at a level
// and counts as non-empty while it holds at least one free token.
class PageAllocator {
 public:
  static constexpr uint64_t kModeledTokenBytes = 9;
  static constexpr uint64_t kModeledNodeBytes = 32;

  // Covers the confidential interval with the fewest, largest tokens of at
  // most `max_size`. 512 GiB tokens are representable but off by default.
  explicit PageAllocator(const MemoryLayout& layout,
                         PageSize max_size = PageSize::k1GiB);

  PageAllocator(const PageAllocator& other);
  PageAllocator& operator=(const PageAllocator& other);

  Result<PageToken> Allocate(PageSize size);
  // Zeroes the region through `machine`, reinserts the token and merges
  // maximally.
  Status Deallocate(PageToken&& token, Machine& machine);

  AllocatorReport Report() const;
  AllocatorOpStats last_op_stats() const;
  PageSize max_page_size() const { return max_size_; }
  const Interval& region() const { return region_; }

  struct FreeEntry {
    uint64_t base;
    PageSize size;
  };
  std::vector<FreeEntry> FreeTokens() const;
  std::vector<FreeEntry> LiveTokens() const;

  // Test hook: disables the live-interval registry check on Deallocate.
  void set_double_free_check(bool enabled);

 private:
  using Level = int;

  uint64_t ParentBase(uint64_t base, PageSize size) const;
  void InsertFree(uint64_t base, PageSize size);
  void EraseFree(uint64_t base, PageSize size);
  void InsertMerged(uint64_t base, PageSize size);

  mutable std::mutex mu_;
  MemoryLayout layout_;
  Interval region_;
  PageSize max_size_;
  std::array<std::set<uint64_t>, kPageSizeCount> free_;
  // Per level: parent-region base -> number of free tokens inside it.
  std::array<std::unordered_map<uint64_t, uint32_t>, kPageSizeCount> nodes_;
  // Live (handed out) tokens: base -> size.
  std::map<uint64_t, PageSize> live_;
  uint64_t free_bytes_ = 0;
  uint64_t live_bytes_ = 0;
  AllocatorOpStats stats_;
  bool double_free_check_ = true;
};

}  // namespace acetsm

#endif  // ACETSM_ALLOCATOR_PAGE_ALLOCATOR_H_
