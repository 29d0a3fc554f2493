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

#include "allocator/page_allocator.h"

#include <string>

namespace acetsm {

PageAllocator::PageAllocator(const MemoryLayout& layout, PageSize max_size)
    : layout_(layout), region_(layout.confidential()), max_size_(max_size) {
  uint64_t cursor = region_.begin;
  while (cursor < region_.end) {
    PageSize chosen = PageSize::k4KiB;
    for (PageSize size : kAllPageSizes) {
      if (LevelOf(size) > LevelOf(max_size_)) break;
      const uint64_t bytes = PageBytes(size);
      if (cursor % bytes == 0 && bytes <= region_.end - cursor) chosen = size;
    }
    InsertFree(cursor, chosen);
    cursor += PageBytes(chosen);
  }
}

PageAllocator::PageAllocator(const PageAllocator& other)
    : layout_(other.layout_) {
  *this = other;
}

PageAllocator& PageAllocator::operator=(const PageAllocator& other) {
  if (this == &other) return *this;
  std::scoped_lock lock(mu_, other.mu_);
  layout_ = other.layout_;
  region_ = other.region_;
  max_size_ = other.max_size_;
  free_ = other.free_;
  nodes_ = other.nodes_;
  live_ = other.live_;
  free_bytes_ = other.free_bytes_;
  live_bytes_ = other.live_bytes_;
  stats_ = other.stats_;
  double_free_check_ = other.double_free_check_;
  return *this;
}

uint64_t PageAllocator::ParentBase(uint64_t base, PageSize size) const {
  const uint64_t span = PageBytes(size) * kEntriesPerLevel;
  return base - base % span;
}

void PageAllocator::InsertFree(uint64_t base, PageSize size) {
  const Level level = LevelOf(size);
  if (free_[level].insert(base).second) {
    ++nodes_[level][ParentBase(base, size)];
    free_bytes_ += PageBytes(size);
  }
}

void PageAllocator::EraseFree(uint64_t base, PageSize size) {
  const Level level = LevelOf(size);
  if (free_[level].erase(base) == 0) return;
  auto node = nodes_[level].find(ParentBase(base, size));
  if (--node->second == 0) nodes_[level].erase(node);
  free_bytes_ -= PageBytes(size);
}

void PageAllocator::InsertMerged(uint64_t base, PageSize size) {
  InsertFree(base, size);
  stats_.levels_touched = 1;
  stats_.entries_touched = 1;
  while (LevelOf(size) < LevelOf(max_size_)) {
    const Level level = LevelOf(size);
    const uint64_t parent = ParentBase(base, size);
    auto node = nodes_[level].find(parent);
    if (node == nodes_[level].end() || node->second < kEntriesPerLevel) break;
    // All 512 children are free: replace them with the parent token.
    auto& set = free_[level];
    const uint64_t span = PageBytes(size) * kEntriesPerLevel;
    set.erase(set.lower_bound(parent), set.lower_bound(parent + span));
    nodes_[level].erase(node);
    free_bytes_ -= span;
    size = *LargerPageSize(size);
    base = parent;
    InsertFree(base, size);
    ++stats_.levels_touched;
    stats_.entries_touched += kEntriesPerLevel + 1;
  }
}

Result<PageToken> PageAllocator::Allocate(PageSize size) {
  std::lock_guard lock(mu_);
  stats_ = {};
  if (LevelOf(size) > LevelOf(max_size_)) {
    return MakeError(ErrorCode::kOutOfMemory,
                     std::string(PageSizeName(size)) + " pages are disabled");
  }
  Level level = LevelOf(size);
  while (level <= LevelOf(max_size_) && free_[level].empty()) ++level;
  if (level > LevelOf(max_size_)) {
    return MakeError(ErrorCode::kOutOfMemory,
                     "no free token at or above " +
                         std::string(PageSizeName(size)));
  }
  uint64_t base = *free_[level].begin();
  PageSize current = static_cast<PageSize>(level);
  EraseFree(base, current);
  stats_.levels_touched = 1;
  stats_.entries_touched = 1;
  // Split the lowest-addressed larger token down to the requested size,
  // keeping the first child at every level.
  while (current != size) {
    current = *SmallerPageSize(current);
    const uint64_t child_bytes = PageBytes(current);
    for (uint64_t i = 1; i < kEntriesPerLevel; ++i) {
      InsertFree(base + i * child_bytes, current);
    }
    ++stats_.levels_touched;
    stats_.entries_touched += kEntriesPerLevel - 1;
  }
  auto address = layout_.ValidateConfidential(base, PageBytes(size));
  if (!address.ok()) return address.status();
  live_[base] = size;
  live_bytes_ += PageBytes(size);
  return PageToken(*address, size, TokenState::kZeroed);
}

Status PageAllocator::Deallocate(PageToken&& token, Machine& machine) {
  std::lock_guard lock(mu_);
  stats_ = {};
  if (!token.valid()) {
    return MakeError(ErrorCode::kForeignToken, "empty token");
  }
  const uint64_t base = token.base();
  const PageSize size = token.size();
  auto live = live_.find(base);
  const bool registered = live != live_.end() && live->second == size;
  if (double_free_check_ && !registered) {
    return MakeError(ErrorCode::kForeignToken,
                     "token not issued by this allocator or already freed");
  }
  if (!region_.ContainsRange(base, PageBytes(size))) {
    return MakeError(ErrorCode::kForeignToken, "token outside region");
  }
  machine.ZeroRange(base, base + PageBytes(size));
  if (registered) {
    live_.erase(live);
    live_bytes_ -= PageBytes(size);
  }
  token.address_.reset();
  InsertMerged(base, size);
  return Status::Ok();
}

AllocatorReport PageAllocator::Report() const {
  std::lock_guard lock(mu_);
  AllocatorReport report;
  for (const auto& level : free_) report.free_tokens += level.size();
  for (const auto& level : nodes_) report.nonempty_nodes += level.size();
  report.allocated_tokens = live_.size();
  report.token_bytes =
      kModeledTokenBytes * (report.free_tokens + report.allocated_tokens);
  report.node_bytes = kModeledNodeBytes * report.nonempty_nodes;
  report.modeled_bytes = report.token_bytes + report.node_bytes;
  report.free_bytes = free_bytes_;
  report.allocated_bytes = live_bytes_;
  return report;
}

AllocatorOpStats PageAllocator::last_op_stats() const {
  std::lock_guard lock(mu_);
  return stats_;
}

std::vector<PageAllocator::FreeEntry> PageAllocator::FreeTokens() const {
  std::lock_guard lock(mu_);
  std::vector<FreeEntry> out;
  for (PageSize size : kAllPageSizes) {
    for (uint64_t base : free_[LevelOf(size)]) out.push_back({base, size});
  }
  return out;
}

std::vector<PageAllocator::FreeEntry> PageAllocator::LiveTokens() const {
  std::lock_guard lock(mu_);
  std::vector<FreeEntry> out;
  for (const auto& [base, size] : live_) out.push_back({base, size});
  return out;
}

void PageAllocator::set_double_free_check(bool enabled) {
  std::lock_guard lock(mu_);
  double_free_check_ = enabled;
}

}  // namespace acetsm
