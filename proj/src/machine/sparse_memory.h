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

#ifndef ACETSM_MACHINE_SPARSE_MEMORY_H_
#define ACETSM_MACHINE_SPARSE_MEMORY_H_

#include <array>
#include <cstdint>
#include <map>
#include <memory>

#include "common/bytes.h"

namespace acetsm {

// Byte store keyed by 4 KiB page. Absent pages read as zero. Pages are shared
// copy-on-write between copies of the store so whole-machine snapshots stay
// cheap.
class SparseMemory {
 public:
  static constexpr uint64_t kPageBytes = 4096;
  using Page = std::array<uint8_t, kPageBytes>;

  void Read(uint64_t addr, std::span<uint8_t> out) const;
  Bytes Read(uint64_t addr, uint64_t len) const;
  void Write(uint64_t addr, ByteSpan data);
  // Zero [begin, end). Fully covered pages are dropped from the store.
  void Zero(uint64_t begin, uint64_t end);
  bool IsZero(uint64_t begin, uint64_t end) const;

  size_t resident_pages() const { return pages_.size(); }

 private:
  Page& MutablePage(uint64_t index);

  std::map<uint64_t, std::shared_ptr<Page>> pages_;
};

}  // namespace acetsm

#endif  // ACETSM_MACHINE_SPARSE_MEMORY_H_
