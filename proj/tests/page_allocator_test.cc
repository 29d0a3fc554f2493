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

#include <random>
#include <thread>

#include "allocator_oracle.h"
#include "gtest/gtest.h"

namespace acetsm {
namespace {

using testing::CheckAllocatorInvariants;
using testing::GreedyCover;
using testing::Region;

constexpr uint64_t kMiB = 1ull << 20;
constexpr uint64_t kGiB = 1ull << 30;

Machine MakeMachine(uint64_t conf_size, PageSize alignment) {
  MachineConfig config;
  config.memory_base = 0x8000'0000;
  config.memory_size = 0x8000'0000;
  config.confidential_base = 0xC000'0000;
  config.confidential_size = conf_size;
  config.memory_size = 0x4000'0000 + conf_size;
  config.region_alignment = alignment;
  auto machine = Machine::Build(config);
  EXPECT_TRUE(machine.ok()) << machine.status().ToString();
  return std::move(machine).value();
}

TEST(PageAllocatorInitTest, OneGiBRegionIsOneToken) {
  Machine machine = MakeMachine(kGiB, PageSize::k1GiB);
  PageAllocator allocator(machine.layout());
  auto free = allocator.FreeTokens();
  ASSERT_EQ(free.size(), 1u);
  EXPECT_EQ(free[0].base, 0xC000'0000u);
  EXPECT_EQ(free[0].size, PageSize::k1GiB);
  EXPECT_EQ(allocator.Report().token_bytes, 9u);
}

TEST(PageAllocatorInitTest, TwoMiBRegionIsOneToken) {
  Machine machine = MakeMachine(2 * kMiB, PageSize::k2MiB);
  PageAllocator allocator(machine.layout());
  auto free = allocator.FreeTokens();
  ASSERT_EQ(free.size(), 1u);
  EXPECT_EQ(free[0].size, PageSize::k2MiB);
}

TEST(PageAllocatorInitTest, MixedRegionMatchesGreedyCover) {
  Machine machine = MakeMachine(kGiB + 2 * kMiB, PageSize::k2MiB);
  PageAllocator allocator(machine.layout());
  const auto expected =
      GreedyCover(0xC000'0000, 0xC000'0000 + kGiB + 2 * kMiB, PageSize::k1GiB);
  ASSERT_EQ(expected.size(), 2u);
  auto free = allocator.FreeTokens();
  ASSERT_EQ(free.size(), expected.size());
  // FreeTokens is ordered by size, the oracle by address.
  EXPECT_EQ(free[0].base, expected[1].base);
  EXPECT_EQ(PageBytes(free[0].size), expected[1].bytes);
  EXPECT_EQ(free[1].base, expected[0].base);
  EXPECT_EQ(PageBytes(free[1].size), expected[0].bytes);
}

TEST(PageAllocatorTest, SmallAllocationSplitsDownTheChain) {
  Machine machine = MakeMachine(kGiB, PageSize::k1GiB);
  PageAllocator allocator(machine.layout());
  auto token = allocator.Allocate(PageSize::k4KiB);
  ASSERT_TRUE(token.ok());
  EXPECT_EQ(token->base(), 0xC000'0000u);
  EXPECT_EQ(token->state(), TokenState::kZeroed);

  // Split chain: 1 GiB -> 512 x 2 MiB (keep first) -> 512 x 4 KiB (keep first).
  std::vector<Region> expected_free;
  for (uint64_t i = 1; i < 512; ++i) expected_free.push_back({0xC000'0000 + i * 4096, 4096});
  for (uint64_t i = 1; i < 512; ++i)
    expected_free.push_back({0xC000'0000 + i * 2 * kMiB, 2 * kMiB});
  auto free = allocator.FreeTokens();
  ASSERT_EQ(free.size(), expected_free.size());
  ASSERT_EQ(free.size(), 1022u);
  for (size_t i = 0; i < free.size(); ++i) {
    EXPECT_EQ(free[i].base, expected_free[i].base);
    EXPECT_EQ(PageBytes(free[i].size), expected_free[i].bytes);
  }
  const auto report = allocator.Report();
  EXPECT_EQ(report.free_tokens + report.allocated_tokens, 1023u);
  EXPECT_EQ(report.token_bytes, 9207u);
  EXPECT_EQ(report.nonempty_nodes, 2u);
  EXPECT_EQ(report.modeled_bytes, 9207u + 64u);

  const auto stats = allocator.last_op_stats();
  EXPECT_EQ(stats.levels_touched, 3);
  EXPECT_LE(stats.entries_touched, 3u * 512u);
}

TEST(PageAllocatorTest, WholeRegionAllocationEmptiesTree) {
  Machine machine = MakeMachine(kGiB, PageSize::k1GiB);
  PageAllocator allocator(machine.layout());
  auto token = allocator.Allocate(PageSize::k1GiB);
  ASSERT_TRUE(token.ok());
  EXPECT_TRUE(allocator.FreeTokens().empty());
  EXPECT_EQ(allocator.Allocate(PageSize::k2MiB).code(), ErrorCode::kOutOfMemory);
  EXPECT_EQ(allocator.Allocate(PageSize::k512GiB).code(), ErrorCode::kOutOfMemory);
}

TEST(PageAllocatorTest, DeallocateRestoresInitialTree) {
  Machine machine = MakeMachine(kGiB, PageSize::k1GiB);
  PageAllocator allocator(machine.layout());
  const auto initial = allocator.Report();
  auto token = allocator.Allocate(PageSize::k4KiB);
  ASSERT_TRUE(token.ok());
  ASSERT_TRUE(allocator.Deallocate(std::move(*token), machine).ok());
  EXPECT_EQ(allocator.Report(), initial);
  ASSERT_EQ(allocator.FreeTokens().size(), 1u);
  EXPECT_EQ(allocator.last_op_stats().levels_touched, 3);
}

TEST(PageAllocatorTest, DoubleFreeIsRejected) {
  Machine machine = MakeMachine(kGiB, PageSize::k1GiB);
  PageAllocator allocator(machine.layout());
  auto token = allocator.Allocate(PageSize::k4KiB);
  ASSERT_TRUE(token.ok());
  auto replay = PageToken::ForgeForReplay(token->address(), token->size());
  ASSERT_TRUE(allocator.Deallocate(std::move(*token), machine).ok());
  EXPECT_EQ(allocator.Deallocate(std::move(replay), machine).code(),
            ErrorCode::kForeignToken);
  // The moved-from original is empty.
  EXPECT_EQ(allocator.Deallocate(std::move(*token), machine).code(),
            ErrorCode::kForeignToken);
}

TEST(PageAllocatorTest, ForgedTokenOfWrongSizeIsForeign) {
  Machine machine = MakeMachine(kGiB, PageSize::k1GiB);
  PageAllocator allocator(machine.layout());
  auto token = allocator.Allocate(PageSize::k2MiB);
  ASSERT_TRUE(token.ok());
  auto forged = PageToken::ForgeForReplay(token->address(), PageSize::k4KiB);
  EXPECT_EQ(allocator.Deallocate(std::move(forged), machine).code(),
            ErrorCode::kForeignToken);
}

TEST(PageAllocatorTest, CarryingTokenIsZeroedOnFree) {
  Machine machine = MakeMachine(kGiB, PageSize::k1GiB);
  PageAllocator allocator(machine.layout());
  auto token = allocator.Allocate(PageSize::k4KiB);
  ASSERT_TRUE(token.ok());
  const uint64_t base = token->base();
  ASSERT_TRUE(machine.Write(DomainTag::Tsm(), base + 100, Bytes(64, 0xAB)).ok());
  token->MarkCarrying();
  ASSERT_FALSE(machine.IsZero(base, base + 4096));
  ASSERT_TRUE(allocator.Deallocate(std::move(*token), machine).ok());
  EXPECT_TRUE(machine.IsZero(base, base + 4096));
}

TEST(PageAllocatorTest, RandomizedSequenceKeepsInvariants) {
  Machine machine = MakeMachine(8 * kMiB, PageSize::k2MiB);
  PageAllocator allocator(machine.layout());
  std::mt19937_64 rng(11);
  std::vector<PageToken> held;
  for (int step = 0; step < 1500; ++step) {
    if (held.empty() || rng() % 3 != 0) {
      const PageSize size = (rng() % 8 == 0) ? PageSize::k2MiB : PageSize::k4KiB;
      auto token = allocator.Allocate(size);
      if (!token.ok()) {
        ASSERT_EQ(token.code(), ErrorCode::kOutOfMemory);
        continue;
      }
      ASSERT_TRUE(machine.IsZero(token->base(), token->base() + token->bytes()));
      ASSERT_TRUE(machine.Write(DomainTag::Tsm(), token->base(), Bytes(16, 0x5A)).ok());
      held.push_back(std::move(*token));
    } else {
      const size_t idx = rng() % held.size();
      std::swap(held[idx], held.back());
      const Interval freed = held.back().interval();
      ASSERT_TRUE(allocator.Deallocate(std::move(held.back()), machine).ok());
      held.pop_back();
      ASSERT_TRUE(machine.IsZero(freed.begin, freed.end));
    }
    const auto stats = allocator.last_op_stats();
    ASSERT_LE(stats.levels_touched, kPageSizeCount);
    ASSERT_LE(stats.entries_touched,
              static_cast<uint64_t>(stats.levels_touched) * (kEntriesPerLevel + 1));
    std::vector<Region> regions;
    for (const auto& t : held) regions.push_back({t.base(), t.bytes()});
    auto violations = CheckAllocatorInvariants(allocator, regions);
    ASSERT_TRUE(violations.empty()) << violations.front();
  }
}

TEST(PageAllocatorTest, ConcurrentCallersGetDisjointTokens) {
  Machine machine = MakeMachine(8 * kMiB, PageSize::k2MiB);
  PageAllocator allocator(machine.layout());
  constexpr int kThreads = 4;
  std::vector<std::vector<PageToken>> per_thread(kThreads);
  std::vector<std::thread> threads;
  for (int t = 0; t < kThreads; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 200; ++i) {
        auto token = allocator.Allocate(PageSize::k4KiB);
        if (token.ok()) per_thread[t].push_back(std::move(*token));
      }
    });
  }
  for (auto& th : threads) th.join();
  std::vector<Region> regions;
  for (const auto& list : per_thread)
    for (const auto& t : list) regions.push_back({t.base(), t.bytes()});
  EXPECT_EQ(regions.size(), 800u);
  auto violations = CheckAllocatorInvariants(allocator, regions);
  EXPECT_TRUE(violations.empty()) << violations.front();
}

TEST(PageAllocatorTest, CopyIsIndependent) {
  Machine machine = MakeMachine(8 * kMiB, PageSize::k2MiB);
  PageAllocator allocator(machine.layout());
  PageAllocator copy = allocator;
  ASSERT_TRUE(allocator.Allocate(PageSize::k4KiB).ok());
  EXPECT_NE(allocator.Report(), copy.Report());
  EXPECT_EQ(copy.FreeTokens().size(), 4u);
}

}  // namespace
}  // namespace acetsm
