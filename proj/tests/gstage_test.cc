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

#include <random>

#include <gtest/gtest.h>

#include "allocator/page_allocator.h"
#include "attestation/measurement.h"
#include "gstage/gstage.h"
#include "gstage/table_builder.h"
#include "machine/machine.h"

namespace acetsm {
namespace {

using namespace gstage;  // NOLINT

constexpr uint64_t kTableArea = 0x8800'0000;
constexpr uint64_t kTableAreaEnd = 0x8900'0000;
constexpr uint64_t kDataArea = 0x9000'0000;

struct Env {
  Machine machine;
  PageAllocator allocator;
  GuestTableBuilder builder{kTableArea, kTableAreaEnd};
  std::vector<AccessRecord> tsm_reads;  // recorded during walks only
  bool recording = false;

  explicit Env(MachineConfig config = {})
      : machine(Machine::Build(config).value()),
        allocator(machine.layout()) {
    machine.set_access_observer([this](const AccessRecord& r) {
      if (recording && r.domain.domain == Domain::kTsm &&
          r.op == AccessOp::kRead) {
        tsm_reads.push_back(r);
      }
    });
  }

  Bytes Fill(uint64_t host, uint64_t bytes, uint8_t seed) {
    Bytes data(bytes);
    for (size_t i = 0; i < data.size(); ++i) data[i] = static_cast<uint8_t>(seed + i * 31);
    EXPECT_TRUE(machine.Write(DomainTag::Hypervisor(), host, data).ok());
    return data;
  }

  Result<WalkResult> Walk(uint64_t root = 0) {
    EXPECT_TRUE(builder.WriteTo(machine).ok());
    auto addr = machine.layout().ValidateNonConfidential(
        root ? root : builder.root(), kRootBytes);
    if (!addr.ok()) return addr.status();
    recording = true;
    auto result = GStageWalker(machine, allocator).WalkAndCopy(*addr);
    recording = false;
    return result;
  }

  bool NoConfidentialReads() const {
    for (const auto& r : tsm_reads) {
      if (machine.layout().confidential().Overlaps({r.address, r.address + r.length})) {
        return false;
      }
    }
    return true;
  }
};

TEST(GStageTest, SingleLeafIsCopied) {
  Env env;
  const AllocatorReport before = env.allocator.Report();
  const Bytes data = env.Fill(kDataArea, 4096, 1);
  ASSERT_TRUE(env.builder.Map(0, kDataArea).ok());
  auto walk = env.Walk();
  ASSERT_TRUE(walk.ok()) << walk.status().ToString();
  const TablesStats stats = walk->tables.stats();
  EXPECT_EQ(stats.data_tokens, 1u);
  EXPECT_EQ(stats.table_tokens, 4u + 3u);  // 16 KiB root + three levels
  EXPECT_EQ(walk->measured_pages, std::vector<uint64_t>{0});

  auto t = walk->tables.Translate(0x10);
  ASSERT_TRUE(t.ok());
  EXPECT_EQ(t->kind, LeafKind::kMapped);
  EXPECT_TRUE(env.machine.layout().confidential().Contains(t->address));
  auto copy = env.machine.Read(DomainTag::Tsm(), t->address - 0x10, 4096);
  EXPECT_EQ(*copy, data);
  EXPECT_TRUE(env.NoConfidentialReads());

  const MeasuredPage page{0, data};
  EXPECT_EQ(walk->code_data, MeasureTvm({&page, 1}, {}, {}).code_data);

  ASSERT_TRUE(walk->tables.Release(env.allocator, env.machine).ok());
  EXPECT_EQ(env.allocator.Report(), before);
}

TEST(GStageTest, CopiedTablesPointAtConfidentialCopies) {
  Env env;
  env.Fill(kDataArea, 4096, 1);
  ASSERT_TRUE(env.builder.Map(0x5000, kDataArea).ok());
  auto walk = env.Walk();
  ASSERT_TRUE(walk.ok());
  // Follow the copied hierarchy through TSM reads only.
  uint64_t table = walk->tables.root_address();
  for (int level = kLevels - 1; level >= 0; --level) {
    const uint64_t index = (0x5000ull >> LevelShift(level)) & (kTableEntries - 1);
    auto raw = env.machine.Read(DomainTag::Tsm(), table + index * 8, 8);
    const uint64_t pte = LoadLe64(raw->data());
    ASSERT_TRUE(pte & kValid) << level;
    table = PteAddress(pte);
    EXPECT_TRUE(env.machine.layout().confidential().Contains(table));
  }
  EXPECT_EQ(table, walk->tables.Translate(0x5000)->address);
  ASSERT_TRUE(walk->tables.Release(env.allocator, env.machine).ok());
}

TEST(GStageTest, ConfidentialTargetIsRejected) {
  Env env;
  const AllocatorReport before = env.allocator.Report();
  env.Fill(kDataArea, 4096, 1);
  ASSERT_TRUE(env.builder.Map(0, kDataArea).ok());
  ASSERT_TRUE(env.builder.Map(0x1000, 0xC000'0000).ok());
  auto walk = env.Walk();
  EXPECT_EQ(walk.code(), ErrorCode::kInvalidAddress);
  EXPECT_EQ(env.allocator.Report(), before);
  EXPECT_TRUE(env.NoConfidentialReads());
}

TEST(GStageTest, TargetOutsideMemoryIsRejected) {
  Env env;
  ASSERT_TRUE(env.builder.Map(0, 0x2'0000'0000).ok());
  EXPECT_EQ(env.Walk().code(), ErrorCode::kInvalidAddress);
  EXPECT_EQ(env.allocator.Report().allocated_tokens, 0u);
}

TEST(GStageTest, LoopBackToRootIsMalformed) {
  Env env;
  env.Fill(kDataArea, 4096, 1);
  ASSERT_TRUE(env.builder.Map(0, kDataArea).ok());
  const uint64_t level2 = env.builder.TableFor(0, 2).value();
  env.builder.SetEntry(level2, 5, MakePointer(env.builder.root()));
  const AllocatorReport before = env.allocator.Report();
  EXPECT_EQ(env.Walk().code(), ErrorCode::kMalformedTable);
  EXPECT_EQ(env.allocator.Report(), before);
}

TEST(GStageTest, SharedSubtableIsMalformed) {
  Env env;
  env.Fill(kDataArea, 4096, 1);
  ASSERT_TRUE(env.builder.Map(0, kDataArea).ok());
  const uint64_t level1 = env.builder.TableFor(0, 1).value();
  const uint64_t level2 = env.builder.TableFor(0, 2).value();
  env.builder.SetEntry(level2, 1, MakePointer(level1));
  EXPECT_EQ(env.Walk().code(), ErrorCode::kMalformedTable);
}

TEST(GStageTest, EntryLevelViolations) {
  struct Case {
    const char* name;
    int level;
    uint64_t pte;
  };
  const uint64_t page = kDataArea;
  const std::vector<Case> cases = {
      {"reserved bit 60", 0, MakeLeaf(page, kRead) | (1ull << 60)},
      {"reserved bit 4 (U)", 0, MakeLeaf(page, kRead) | (1ull << 4)},
      {"write without read", 0, MakeLeaf(page, kWrite)},
      {"invalid with bits", 0, MakeLeaf(page, kRead) & ~kValid},
      {"leaf in root", 3, MakeLeaf(0, kRead)},
      {"misaligned 2M leaf", 1, MakeLeaf(kDataArea + 0x1000, kRead)},
      {"pointer at last level", 0, MakePointer(kTableArea)},
  };
  for (const auto& c : cases) {
    Env env;
    env.Fill(kDataArea, 4096, 1);
    ASSERT_TRUE(env.builder.Map(0, kDataArea).ok());
    const uint64_t table = env.builder.TableFor(0, c.level).value();
    env.builder.SetEntry(table, 7, c.pte);
    EXPECT_EQ(env.Walk().code(), ErrorCode::kMalformedTable) << c.name;
    EXPECT_EQ(env.allocator.Report().allocated_tokens, 0u) << c.name;
  }
}

TEST(GStageTest, UnalignedRootIsMalformed) {
  Env env;
  EXPECT_EQ(env.Walk(kTableArea + 0x1000).code(), ErrorCode::kMalformedTable);
}

TEST(GStageTest, ZeroPagesAreLazyAndMaterializeOnce) {
  Env env;
  env.Fill(kDataArea, 4096, 1);
  ASSERT_TRUE(env.builder.Map(0, kDataArea).ok());
  ASSERT_TRUE(env.builder.Map(0x1000, kDataArea + 0x1000).ok());  // zero
  auto walk = env.Walk();
  ASSERT_TRUE(walk.ok());
  EXPECT_EQ(walk->tables.stats().data_tokens, 1u);
  EXPECT_EQ(walk->tables.stats().lazy_leaves, 1u);
  EXPECT_EQ(walk->measured_pages, std::vector<uint64_t>{0});

  EXPECT_EQ(walk->tables.Translate(0x1234)->kind, LeafKind::kLazyZero);
  EXPECT_EQ(walk->tables.Translate(0x9000).code(), ErrorCode::kGuestFault);

  const uint64_t live = env.allocator.Report().allocated_tokens;
  auto first = walk->tables.MaterializeZeroPage(0x1234, env.allocator);
  ASSERT_TRUE(first.ok());
  EXPECT_EQ(env.allocator.Report().allocated_tokens, live + 1);
  auto second = walk->tables.MaterializeZeroPage(0x1000, env.allocator);
  EXPECT_EQ(*second, *first);
  EXPECT_EQ(env.allocator.Report().allocated_tokens, live + 1);
  EXPECT_EQ(walk->tables.Translate(0x1234)->address, *first + 0x234);
  // Indistinguishable from a copy of the all-zero source page.
  EXPECT_EQ(*env.machine.Read(DomainTag::Tsm(), *first, 4096),
            *env.machine.Read(DomainTag::Tsm(), kDataArea + 0x1000, 4096));
  ASSERT_TRUE(walk->tables.Release(env.allocator, env.machine).ok());
  EXPECT_EQ(env.allocator.Report().allocated_tokens, 0u);
}

TEST(GStageTest, MaterializeReportsOutOfMemory) {
  MachineConfig config;
  config.memory_size = 0x0F00'8000;
  config.confidential_base = 0x8F00'0000;
  config.confidential_size = 8 * 4096;  // tables take 7 tokens, data 1
  config.region_alignment = PageSize::k4KiB;
  Env env(config);
  env.Fill(kDataArea - 0x0800'0000, 4096, 1);
  ASSERT_TRUE(env.builder.Map(0, kDataArea - 0x0800'0000).ok());
  ASSERT_TRUE(env.builder.Map(0x1000, kDataArea - 0x0800'0000 + 0x1000).ok());
  auto walk = env.Walk();
  ASSERT_TRUE(walk.ok()) << walk.status().ToString();
  EXPECT_EQ(env.allocator.Report().free_tokens, 0u);
  EXPECT_EQ(walk->tables.MaterializeZeroPage(0x1000, env.allocator).code(),
            ErrorCode::kOutOfMemory);
  ASSERT_TRUE(walk->tables.Release(env.allocator, env.machine).ok());
}

TEST(GStageTest, WalkOutOfMemoryReleasesEverything) {
  MachineConfig config;
  config.memory_size = 0x0F00'8000;
  config.confidential_base = 0x8F00'0000;
  config.confidential_size = 8 * 4096;
  config.region_alignment = PageSize::k4KiB;
  Env env(config);
  const AllocatorReport before = env.allocator.Report();
  for (int i = 0; i < 3; ++i) {
    env.Fill(0x8400'0000 + i * 0x1000, 4096, i + 1);
    ASSERT_TRUE(env.builder.Map(i * 0x1000, 0x8400'0000 + i * 0x1000).ok());
  }
  EXPECT_EQ(env.Walk().code(), ErrorCode::kOutOfMemory);
  EXPECT_EQ(env.allocator.Report(), before);
}

TEST(GStageTest, HugeLeafUsesMatchingTokenAndMeasuresNonZeroPages) {
  Env env;
  const uint64_t host = 0x9020'0000;
  const Bytes a = env.Fill(host + 0x3000, 4096, 9);
  const Bytes b = env.Fill(host + 0x1F'F000, 4096, 10);
  ASSERT_TRUE(env.builder.Map(0x20'0000, host, PageSize::k2MiB).ok());
  auto walk = env.Walk();
  ASSERT_TRUE(walk.ok()) << walk.status().ToString();
  EXPECT_EQ(walk->measured_pages,
            (std::vector<uint64_t>{0x203, 0x3FF}));
  const MeasuredPage pages[] = {{0x203, a}, {0x3FF, b}};
  EXPECT_EQ(walk->code_data, MeasureTvm(pages, {}, {}).code_data);
  auto t = walk->tables.Translate(0x3F'F000);
  EXPECT_EQ(*env.machine.Read(DomainTag::Tsm(), t->address, 4096), b);
  bool has_2m = false;
  for (const auto& i : walk->tables.OwnedIntervals()) has_2m |= i.size() == 0x20'0000;
  EXPECT_TRUE(has_2m);
  ASSERT_TRUE(walk->tables.Release(env.allocator, env.machine).ok());
}

TEST(GStageTest, SharedPages) {
  Env env;
  env.Fill(kDataArea, 4096, 1);
  ASSERT_TRUE(env.builder.Map(0, kDataArea).ok());
  ASSERT_TRUE(env.builder.Map(0x1000, kDataArea + 0x1000).ok());
  auto walk = env.Walk();
  ASSERT_TRUE(walk.ok());
  auto npa = env.machine.layout().ValidateNonConfidential(0x9100'0000, 4096);
  EXPECT_EQ(walk->tables.AddShared(0, *npa).code(), ErrorCode::kAlreadyMapped);
  EXPECT_EQ(walk->tables.AddShared(0x1000, *npa).code(), ErrorCode::kAlreadyMapped);
  ASSERT_TRUE(walk->tables.AddShared(0x40'0000, *npa).ok());
  EXPECT_EQ(walk->tables.AddShared(0x40'0000, *npa).code(), ErrorCode::kAlreadyMapped);
  auto t = walk->tables.Translate(0x40'0010);
  EXPECT_EQ(t->kind, LeafKind::kShared);
  EXPECT_EQ(t->address, 0x9100'0010u);
  ASSERT_TRUE(walk->tables.Release(env.allocator, env.machine).ok());
}

TEST(GStageTest, RandomImagesCopyFaithfully) {
  std::mt19937_64 gen(21);
  for (int round = 0; round < 40; ++round) {
    Env env;
    std::map<uint64_t, Bytes> image;  // gpa -> content
    std::set<uint64_t> gpas;
    const int pages = 1 + gen() % 12;
    while (static_cast<int>(gpas.size()) < pages) {
      gpas.insert((gen() % 4096) * 0x1000 + (gen() % 2) * 0x40'0000'0000ull);
    }
    uint64_t host = kDataArea;
    for (uint64_t gpa : gpas) {
      Bytes content(4096, 0);
      if (gen() % 4 != 0) content = env.Fill(host, 4096, gen());
      image[gpa] = content;
      ASSERT_TRUE(env.builder.Map(gpa, host).ok());
      host += 0x1000;
    }
    auto walk = env.Walk();
    ASSERT_TRUE(walk.ok()) << walk.status().ToString();
    std::vector<uint64_t> expected_measured;
    for (const auto& [gpa, content] : image) {
      auto t = walk->tables.Translate(gpa);
      ASSERT_TRUE(t.ok());
      uint64_t addr = t->address;
      if (t->kind == LeafKind::kLazyZero) {
        addr = walk->tables.MaterializeZeroPage(gpa, env.allocator).value();
      } else {
        expected_measured.push_back(gpa >> 12);
      }
      EXPECT_EQ(*env.machine.Read(DomainTag::Tsm(), addr, 4096), content);
    }
    EXPECT_EQ(walk->measured_pages, expected_measured);
    EXPECT_TRUE(env.NoConfidentialReads());
    ASSERT_TRUE(walk->tables.Release(env.allocator, env.machine).ok());
    EXPECT_EQ(env.allocator.Report().allocated_tokens, 0u);
  }
}

// Hostile tables: mutate a valid image at random and check that the walk
// either succeeds or fails without leaking a single token, and never reads
// confidential memory.
TEST(GStageTest, FuzzedTablesNeverLeak) {
  std::mt19937_64 gen(1234);
  std::map<ErrorCode, int> outcomes;
  for (int round = 0; round < 1000; ++round) {
    Env env;
    for (int i = 0; i < 6; ++i) {
      const uint64_t gpa = (gen() % 64) * 0x1000 + (gen() % 3) * 0x4000'0000ull;
      const uint64_t host = kDataArea + i * 0x1000;
      if (gen() % 2) env.Fill(host, 4096, gen());
      (void)env.builder.Map(gpa, host);
    }
    const auto tables = env.builder.tables();
    const int mutations = 1 + gen() % 3;
    for (int m = 0; m < mutations; ++m) {
      const uint64_t table = tables[gen() % tables.size()];
      const uint64_t index = gen() % (table == env.builder.root() ? kRootEntries : kTableEntries);
      uint64_t pte = env.builder.GetEntry(table, index);
      switch (gen() % 6) {
        case 0: pte ^= 1ull << (gen() % 64); break;
        case 1: pte = MakeLeaf(0xC000'0000 + (gen() % 1024) * 0x1000, kRead); break;
        case 2: pte = MakePointer(tables[gen() % tables.size()]); break;
        case 3: pte = gen(); break;
        case 4: pte = MakeLeaf((gen() % 0x4'0000) * 0x1000, kRead | kWrite); break;
        case 5: pte = MakePointer(0x8000'0000 + (gen() % 0x8000) * 0x1000); break;
      }
      env.builder.SetEntry(table, index, pte);
    }
    const AllocatorReport before = env.allocator.Report();
    auto walk = env.Walk();
    ++outcomes[walk.code()];
    ASSERT_TRUE(env.NoConfidentialReads()) << round;
    if (walk.ok()) {
      ASSERT_TRUE(walk->tables.Release(env.allocator, env.machine).ok());
    }
    ASSERT_EQ(env.allocator.Report(), before) << round;
  }
  // The generator must actually exercise each outcome.
  EXPECT_GT(outcomes[ErrorCode::kOk], 0);
  EXPECT_GT(outcomes[ErrorCode::kInvalidAddress], 0);
  EXPECT_GT(outcomes[ErrorCode::kMalformedTable], 0);
}

}  // namespace
}  // namespace acetsm
