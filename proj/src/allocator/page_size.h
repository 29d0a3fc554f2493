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

#ifndef ACETSM_ALLOCATOR_PAGE_SIZE_H_
#define ACETSM_ALLOCATOR_PAGE_SIZE_H_

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace acetsm {

// Architectural page sizes of the Sv48 hierarchy. Each is 512x the previous.
enum class PageSize : uint8_t {
  k4KiB = 0,
  k2MiB = 1,
  k1GiB = 2,
  k512GiB = 3,
};

inline constexpr uint64_t kEntriesPerLevel = 512;
inline constexpr uint64_t kSmallPageBytes = 4096;
inline constexpr int kPageSizeCount = 4;
inline constexpr std::array kAllPageSizes = {PageSize::k4KiB, PageSize::k2MiB,
                                             PageSize::k1GiB, PageSize::k512GiB};

constexpr int LevelOf(PageSize size) { return static_cast<int>(size); }

constexpr uint64_t PageBytes(PageSize size) {
  uint64_t bytes = kSmallPageBytes;
  for (int i = 0; i < LevelOf(size); ++i) bytes *= kEntriesPerLevel;
  return bytes;
}

constexpr std::optional<PageSize> LargerPageSize(PageSize size) {
  if (size == PageSize::k512GiB) return std::nullopt;
  return static_cast<PageSize>(LevelOf(size) + 1);
}

constexpr std::optional<PageSize> SmallerPageSize(PageSize size) {
  if (size == PageSize::k4KiB) return std::nullopt;
  return static_cast<PageSize>(LevelOf(size) - 1);
}

constexpr std::string_view PageSizeName(PageSize size) {
  switch (size) {
    case PageSize::k4KiB: return "4K";
    case PageSize::k2MiB: return "2M";
    case PageSize::k1GiB: return "1G";
    case PageSize::k512GiB: return "512G";
  }
  return "?";
}

constexpr std::optional<PageSize> ParsePageSize(std::string_view text) {
  for (PageSize size : kAllPageSizes) {
    if (PageSizeName(size) == text) return size;
  }
  return std::nullopt;
}

}  // namespace acetsm

#endif  // ACETSM_ALLOCATOR_PAGE_SIZE_H_
