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

#include "machine/sparse_memory.h"

#include <algorithm>
#include <cstring>

namespace acetsm {

void SparseMemory::Read(uint64_t addr, std::span<uint8_t> out) const {
  size_t done = 0;
  while (done < out.size()) {
    const uint64_t cur = addr + done;
    const uint64_t index = cur / kPageBytes;
    const uint64_t offset = cur % kPageBytes;
    const size_t chunk =
        std::min<uint64_t>(kPageBytes - offset, out.size() - done);
    auto it = pages_.find(index);
    if (it == pages_.end()) {
      std::memset(out.data() + done, 0, chunk);
    } else {
      std::memcpy(out.data() + done, it->second->data() + offset, chunk);
    }
    done += chunk;
  }
}

Bytes SparseMemory::Read(uint64_t addr, uint64_t len) const {
  Bytes out(len);
  Read(addr, out);
  return out;
}

SparseMemory::Page& SparseMemory::MutablePage(uint64_t index) {
  auto& slot = pages_[index];
  if (!slot) {
    slot = std::make_shared<Page>();
    slot->fill(0);
  } else if (slot.use_count() > 1) {
    slot = std::make_shared<Page>(*slot);
  }
  return *slot;
}

void SparseMemory::Write(uint64_t addr, ByteSpan data) {
  size_t done = 0;
  while (done < data.size()) {
    const uint64_t cur = addr + done;
    const uint64_t offset = cur % kPageBytes;
    const size_t chunk =
        std::min<uint64_t>(kPageBytes - offset, data.size() - done);
    Page& page = MutablePage(cur / kPageBytes);
    std::memcpy(page.data() + offset, data.data() + done, chunk);
    done += chunk;
  }
}

void SparseMemory::Zero(uint64_t begin, uint64_t end) {
  if (begin >= end) return;
  const uint64_t first_full = (begin + kPageBytes - 1) / kPageBytes;
  const uint64_t last_full = end / kPageBytes;  // exclusive
  if (first_full < last_full) {
    pages_.erase(pages_.lower_bound(first_full), pages_.lower_bound(last_full));
  }
  auto zero_partial = [this](uint64_t from, uint64_t to) {
    if (from >= to) return;
    auto it = pages_.find(from / kPageBytes);
    if (it == pages_.end()) return;
    Page& page = MutablePage(from / kPageBytes);
    std::memset(page.data() + from % kPageBytes, 0, to - from);
  };
  if (first_full >= last_full) {
    // Range lies within a single page, or spans two partial pages.
    const uint64_t split = std::min(end, first_full * kPageBytes);
    zero_partial(begin, split);
    zero_partial(std::max(split, begin), end);
    return;
  }
  zero_partial(begin, first_full * kPageBytes);
  zero_partial(last_full * kPageBytes, end);
}

bool SparseMemory::IsZero(uint64_t begin, uint64_t end) const {
  for (auto it = pages_.lower_bound(begin / kPageBytes);
       it != pages_.end() && it->first * kPageBytes < end; ++it) {
    const uint64_t page_begin = it->first * kPageBytes;
    const uint64_t from = std::max(begin, page_begin) - page_begin;
    const uint64_t to = std::min(end, page_begin + kPageBytes) - page_begin;
    for (uint64_t i = from; i < to; ++i) {
      if ((*it->second)[i] != 0) return false;
    }
  }
  return true;
}

}  // namespace acetsm
