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

#include "machine/machine.h"

#include <random>

#include "gtest/gtest.h"
#include "machine/hart_state.h"
#include "machine/layout.h"

namespace acetsm {
namespace {

constexpr uint64_t kGiB = 1ull << 30;

MachineConfig DefaultConfig() {
  MachineConfig config;
  config.memory_base = 0x8000'0000;
  config.memory_size = 2 * kGiB;
  config.confidential_base = 0xC000'0000;
  config.confidential_size = kGiB;
  config.hart_count = 2;
  return config;
}

MemoryLayout DefaultLayout() {
  return *MemoryLayout::FromConfig(DefaultConfig());
}

// Independent interval check done in 128-bit arithmetic.
bool RangeInside(uint64_t raw, uint64_t len, uint64_t begin, uint64_t end) {
  const unsigned __int128 lo = raw;
  const unsigned __int128 hi = lo + (len == 0 ? 1 : len);
  return lo >= begin && hi <= end;
}

TEST(MachineConfigTest, BuildsLayoutSplitAtConfidentialBase) {
  auto machine = Machine::Build(DefaultConfig());
  ASSERT_TRUE(machine.ok()) << machine.status().ToString();
  const auto& layout = machine->layout();
  EXPECT_EQ(layout.non_confidential(), (Interval{0x8000'0000, 0xC000'0000}));
  EXPECT_EQ(layout.confidential(), (Interval{0xC000'0000, 0x1'0000'0000}));
  EXPECT_EQ(machine->hart_count(), 2u);
  for (size_t h = 0; h < machine->hart_count(); ++h) {
    EXPECT_EQ(machine->hart(h).regs.domain_tag(), DomainTag::Hypervisor());
  }
  auto bytes = machine->Read(DomainTag::Hypervisor(), 0x9000'0000, 64);
  ASSERT_TRUE(bytes.ok());
  EXPECT_TRUE(AllZero(*bytes));
}

TEST(MachineConfigTest, RejectsMisalignedConfidentialSize) {
  auto config = DefaultConfig();
  config.confidential_size = kGiB / 2;
  config.confidential_base = 0x1'0000'0000 - config.confidential_size;
  EXPECT_EQ(Machine::Build(config).code(), ErrorCode::kConfigError);
}

TEST(MachineConfigTest, RejectsConfidentialRegionPastMemoryTop) {
  auto config = DefaultConfig();
  config.confidential_base = 0xC000'0000;
  config.confidential_size = 2 * kGiB;
  EXPECT_EQ(Machine::Build(config).code(), ErrorCode::kConfigError);
}

TEST(MachineConfigTest, RejectsZeroHartsAndMiddleRegion) {
  auto config = DefaultConfig();
  config.hart_count = 0;
  EXPECT_EQ(Machine::Build(config).code(), ErrorCode::kConfigError);

  config = DefaultConfig();
  config.memory_size = 3 * kGiB;  // confidential now in the middle
  EXPECT_EQ(Machine::Build(config).code(), ErrorCode::kConfigError);
}

TEST(MachineConfigTest, LowerConfidentialRegionIsAllowed) {
  auto config = DefaultConfig();
  config.confidential_base = 0x8000'0000;
  auto layout = MemoryLayout::FromConfig(config);
  ASSERT_TRUE(layout.ok());
  EXPECT_EQ(layout->non_confidential(), (Interval{0xC000'0000, 0x1'0000'0000}));
}

TEST(AddressValidationTest, NonConfidentialExamples) {
  const auto layout = DefaultLayout();
  auto ok = layout.ValidateNonConfidential(0x9000'0000, 4096);
  ASSERT_TRUE(ok.ok());
  EXPECT_EQ(ok->value(), 0x9000'0000u);
  EXPECT_EQ(layout.ValidateNonConfidential(0xC000'0000, 8).code(),
            ErrorCode::kInvalidAddress);
  // [0xBFFF_F000, 0xC000_1000) crosses into confidential memory.
  ASSERT_FALSE(RangeInside(0xBFFF'F000, 8192, 0x8000'0000, 0xC000'0000));
  EXPECT_EQ(layout.ValidateNonConfidential(0xBFFF'F000, 8192).code(),
            ErrorCode::kInvalidAddress);
}

TEST(AddressValidationTest, ConfidentialExamples) {
  const auto layout = DefaultLayout();
  EXPECT_TRUE(layout.ValidateConfidential(0xC000'1000, 4096).ok());
  EXPECT_EQ(layout.ValidateConfidential(0x9000'0000, 8).code(),
            ErrorCode::kInvalidAddress);
  EXPECT_EQ(layout.ValidateConfidential(0xFFFF'F000 + 0x1'0000'0000, 8).code(),
            ErrorCode::kInvalidAddress);
  EXPECT_EQ(layout.ValidateConfidential(0xFFFF'FFFF'FFFF'FFF0, 0x100).code(),
            ErrorCode::kInvalidAddress);
}

TEST(AddressValidationTest, FuzzedRangesAgreeWithIntervalOracle) {
  const auto layout = DefaultLayout();
  std::mt19937_64 rng(7);
  const uint64_t interesting[] = {0,          0x8000'0000,  0xBFFF'F000,
                                  0xC000'0000, 0xFFFF'F000, 0x1'0000'0000,
                                  ~0ull - 4096};
  for (int i = 0; i < 200000; ++i) {
    uint64_t raw;
    switch (rng() % 3) {
      case 0: raw = rng(); break;
      case 1: raw = interesting[rng() % 7] + (rng() % 8192) - 4096; break;
      default: raw = 0x8000'0000 + rng() % (3 * kGiB); break;
    }
    uint64_t len = (rng() % 2) ? rng() % 0x10000 : rng();
    EXPECT_EQ(layout.ValidateNonConfidential(raw, len).ok(),
              RangeInside(raw, len, 0x8000'0000, 0xC000'0000))
        << std::hex << raw << " " << len;
    EXPECT_EQ(layout.ValidateConfidential(raw, len).ok(),
              RangeInside(raw, len, 0xC000'0000, 0x1'0000'0000))
        << std::hex << raw << " " << len;
  }
}

TEST(LayoutTest, PartitionIsTotalOnSmallConfiguration) {
  MachineConfig config;
  config.memory_base = 0x10'0000;
  config.memory_size = 0x4'0000;
  config.confidential_base = 0x13'0000;
  config.confidential_size = 0x1'0000;
  config.region_alignment = PageSize::k4KiB;
  auto layout = MemoryLayout::FromConfig(config);
  ASSERT_TRUE(layout.ok());
  for (uint64_t addr = config.memory_base;
       addr < config.memory_base + config.memory_size; ++addr) {
    const bool in_nc = layout->non_confidential().Contains(addr);
    const bool in_c = layout->confidential().Contains(addr);
    ASSERT_NE(in_nc, in_c) << std::hex << addr;
  }
  EXPECT_FALSE(layout->non_confidential().Contains(config.memory_base - 1));
  EXPECT_FALSE(layout->confidential().Contains(config.memory_base +
                                               config.memory_size));
}

TEST(LayoutTest, RegionRulesDenyHypervisorOnlyOnConfidential) {
  const auto layout = DefaultLayout();
  ASSERT_EQ(layout.region_rules().size(), 2u);
  for (const auto& rule : layout.region_rules()) {
    EXPECT_EQ(rule.tsm, Permission::kReadWrite);
    if (rule.interval == layout.confidential()) {
      EXPECT_EQ(rule.hypervisor, Permission::kNone);
    } else {
      EXPECT_EQ(rule.hypervisor, Permission::kReadWrite);
    }
  }
}

TEST(AccessTest, HypervisorReadsOwnMemoryButFaultsOnConfidential) {
  auto machine = *Machine::Build(DefaultConfig());
  std::vector<AccessRecord> seen;
  machine.set_access_observer([&](const AccessRecord& r) { seen.push_back(r); });

  const Bytes data = {1, 2, 3, 4};
  ASSERT_TRUE(machine.Write(DomainTag::Hypervisor(), 0x9000'0000, data).ok());
  auto read = machine.Read(DomainTag::Hypervisor(), 0x9000'0000, 4);
  ASSERT_TRUE(read.ok());
  EXPECT_EQ(*read, data);

  EXPECT_EQ(machine.Write(DomainTag::Hypervisor(), 0xC000'0000, data).code(),
            ErrorCode::kAccessFault);
  EXPECT_EQ(machine.Read(DomainTag::Hypervisor(), 0xBFFF'FFFE, 4).code(),
            ErrorCode::kAccessFault);
  EXPECT_EQ(machine.access_faults(), 2u);
  ASSERT_EQ(seen.size(), 4u);
  EXPECT_FALSE(seen[2].allowed);

  EXPECT_TRUE(machine.Write(DomainTag::Tsm(), 0xC000'0000, data).ok());
  EXPECT_EQ(*machine.Read(DomainTag::Tsm(), 0xC000'0000, 4), data);
}

TEST(AccessTest, TvmSeesOnlyGrantedConfidentialRanges) {
  auto machine = *Machine::Build(DefaultConfig());
  machine.GrantTvm(1, {0xC000'0000, 0xC000'1000});
  machine.GrantTvm(2, {0xC000'1000, 0xC000'2000});
  EXPECT_TRUE(machine.Read(DomainTag::Tvm(1, 0), 0xC000'0000, 8).ok());
  EXPECT_EQ(machine.Read(DomainTag::Tvm(1, 0), 0xC000'1000, 8).code(),
            ErrorCode::kAccessFault);
  EXPECT_EQ(machine.Read(DomainTag::Tvm(1, 0), 0xC000'0FFC, 8).code(),
            ErrorCode::kAccessFault);
  machine.RevokeAllTvm(2);
  EXPECT_EQ(machine.Read(DomainTag::Tvm(2, 0), 0xC000'1000, 8).code(),
            ErrorCode::kAccessFault);
  // Non-confidential memory is reachable (shared pages).
  EXPECT_TRUE(machine.Read(DomainTag::Tvm(2, 0), 0x9000'0000, 8).ok());
}

TEST(HartStateTest, X0ReadsZeroAndEncodingRoundTrips) {
  HartArchState state;
  state.set_gpr(0, 42);
  EXPECT_EQ(state.gpr(0), 0u);
  std::mt19937_64 rng(3);
  for (int i = 1; i < 32; ++i) state.set_gpr(i, rng());
  for (size_t c = 0; c < kCsrCount; ++c) state.set_csr(static_cast<Csr>(c), rng());
  auto decoded = HartArchState::Decode(state.Encode());
  ASSERT_TRUE(decoded.ok());
  EXPECT_TRUE(decoded->SameRegisters(state));

  Bytes forged = state.Encode();
  forged[0] = 0xff;  // x0 slot
  EXPECT_EQ(HartArchState::Decode(forged)->gpr(0), 0u);
  EXPECT_EQ(HartArchState::Decode(ByteSpan(forged).first(8)).code(),
            ErrorCode::kParseError);
}

TEST(HartStateTest, CanonicalEncodingIsBigEndianInDocumentedOrder) {
  HartArchState state;
  state.set_gpr(1, 0x0102030405060708);
  state.set_csr(Csr::kTimerDisclosure, 0xAA);
  const Bytes enc = state.CanonicalEncoding();
  ASSERT_EQ(enc.size(), HartArchState::kEncodedSize);
  EXPECT_EQ(enc[8], 0x01);
  EXPECT_EQ(enc[15], 0x08);
  EXPECT_EQ(enc.back(), 0xAA);
  EXPECT_EQ(ParseGprName("a0"), 10);
  EXPECT_EQ(ParseGprName("x31"), 31);
  EXPECT_FALSE(ParseGprName("x32").has_value());
  EXPECT_EQ(ParseCsr("timecmp"), Csr::kTimecmp);
}

}  // namespace
}  // namespace acetsm
