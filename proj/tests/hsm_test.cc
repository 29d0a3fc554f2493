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

#include "hsm/hsm.h"

#include <gtest/gtest.h>

#include <random>

#include "tsm_harness.h"

namespace acetsm {
namespace {

using abi::ExitReason;
using testing::Harness;

constexpr uint64_t kCodeGpa = 0x8000'0000;

int64_t Code(ErrorCode code) { return static_cast<int64_t>(code); }

TEST(ApplyHsmTest, OnlyFsmEdgesSucceed) {
  using S = VHartState;
  const S states[] = {S::kStarted, S::kStopped, S::kStartPending, S::kSuspended};
  const HsmOp ops[] = {HsmOp::kStart, HsmOp::kActivate, HsmOp::kStop,
                       HsmOp::kSuspend, HsmOp::kResume};
  int successes = 0;
  for (S from : states) {
    for (HsmOp op : ops) {
      auto to = ApplyHsm(from, op);
      if (!to.ok()) continue;
      ++successes;
      EXPECT_TRUE(IsHsmEdge(from, *to));
    }
  }
  EXPECT_EQ(successes, 5);  // one per edge of the four-state machine
  EXPECT_EQ(ApplyHsm(S::kStarted, HsmOp::kStart).code(), ErrorCode::kAlreadyAvailable);
  EXPECT_EQ(ApplyHsm(S::kStopped, HsmOp::kStop).code(), ErrorCode::kInvalidState);
  EXPECT_EQ(ApplyHsm(S::kStopped, HsmOp::kActivate).code(), ErrorCode::kHartNotStarted);
  EXPECT_FALSE(IsHsmEdge(S::kStopped, S::kStarted));
  EXPECT_FALSE(IsHsmEdge(S::kSuspended, S::kStopped));
}

TEST(ApplyHsmTest, StateNamesRoundTrip) {
  for (auto s : {VHartState::kStarted, VHartState::kStopped,
                 VHartState::kStartPending, VHartState::kSuspended}) {
    EXPECT_EQ(ParseVHartState(VHartStateName(s)), s);
  }
  EXPECT_FALSE(ParseVHartState("running"));
}

TEST(HartMaskTest, Resolution) {
  EXPECT_EQ(ResolveHartMask(0b10, 0, 2).value(), 0b10u);
  EXPECT_EQ(ResolveHartMask(0b1, 1, 2).value(), 0b10u);
  EXPECT_EQ(ResolveHartMask(0, 0, 2).value(), 0u);
  EXPECT_EQ(ResolveHartMask(0, abi::kMaskBaseAll, 3).value(), 0b111u);
  EXPECT_EQ(ResolveHartMask(0b100, 0, 2).code(), ErrorCode::kInvalidParam);
  EXPECT_EQ(ResolveHartMask(0b1, 2, 2).code(), ErrorCode::kInvalidParam);
  EXPECT_EQ(ResolveHartMask(~uint64_t{0}, 1, 64).code(), ErrorCode::kInvalidParam);
}

// A promoted two-vhart TVM with the boot vhart executing on hart 0.
struct TwoVharts : Harness {
  TwoVharts() : Harness(2, DefaultVmImage(2)) {
    EXPECT_EQ(Promote().error, ErrorCode::kOk);
    EXPECT_TRUE(Run(0, 1, 0).running);
  }
  // Boot vhart starts vhart 1; hart 1 then runs it.
  void StartSecond(uint64_t gpa = kCodeGpa + 0x40, uint64_t opaque = 0x77) {
    auto exit = GuestCall(1, 0, abi::kExtHsm, abi::kHartStart, {1, gpa, opaque});
    ASSERT_TRUE(exit);
    ASSERT_EQ(exit->exit, ExitReason::kHartStart);
    ASSERT_TRUE(Run(0, 1, 0).running);
    ASSERT_TRUE(Run(1, 1, 1).running);
  }
};

TEST(HsmTest, StartMakesTargetPendingThenStarted) {
  TwoVharts h;
  auto exit = h.GuestCall(1, 0, abi::kExtHsm, abi::kHartStart, {1, kCodeGpa + 0x40, 0x77});
  ASSERT_TRUE(exit);
  EXPECT_EQ(exit->exit, ExitReason::kHartStart);
  EXPECT_EQ(exit->detail, 1u);
  EXPECT_EQ(h.tsm.vhart_state(1, 1).value(), VHartState::kStartPending);
  ASSERT_TRUE(h.Run(1, 1, 1).running);
  EXPECT_EQ(h.tsm.vhart_state(1, 1).value(), VHartState::kStarted);
  const HartArchState regs = h.Hardware(1);
  EXPECT_EQ(regs.csr(Csr::kPc), kCodeGpa + 0x40);
  EXPECT_EQ(regs.a(0), 1u);
  EXPECT_EQ(regs.a(1), 0x77u);
  // The caller sees success when it resumes.
  ASSERT_TRUE(h.Run(0, 1, 0).running);
  EXPECT_EQ(h.Hardware(0).a(0), 0u);
  h.ExpectTraceWellFormed();
}

TEST(HsmTest, StartErrors) {
  TwoVharts h;
  h.GuestCall(1, 0, abi::kExtHsm, abi::kHartStart, {0, kCodeGpa, 0});
  EXPECT_EQ(static_cast<int64_t>(h.Hardware(0).a(0)), Code(ErrorCode::kAlreadyAvailable));
  h.GuestCall(1, 0, abi::kExtHsm, abi::kHartStart, {1, 0x9000'0000, 0});
  EXPECT_EQ(static_cast<int64_t>(h.Hardware(0).a(0)), Code(ErrorCode::kInvalidParam));
  h.GuestCall(1, 0, abi::kExtHsm, abi::kHartStart, {2, kCodeGpa, 0});
  EXPECT_EQ(static_cast<int64_t>(h.Hardware(0).a(0)), Code(ErrorCode::kInvalidParam));
  // A lazily backed page is a valid entry point.
  EXPECT_TRUE(h.GuestCall(1, 0, abi::kExtHsm, abi::kHartStart, {1, kCodeGpa + 0x1000, 0}));
  EXPECT_EQ(h.tsm.vhart_state(1, 1).value(), VHartState::kStartPending);
}

TEST(HsmTest, StatusReportsEncodedState) {
  TwoVharts h;
  h.GuestCall(1, 0, abi::kExtHsm, abi::kHartGetStatus, {1});
  EXPECT_EQ(h.Hardware(0).a(1), static_cast<uint64_t>(VHartState::kStopped));
  h.GuestCall(1, 0, abi::kExtHsm, abi::kHartGetStatus, {0});
  EXPECT_EQ(h.Hardware(0).a(1), static_cast<uint64_t>(VHartState::kStarted));
  h.GuestCall(1, 0, abi::kExtHsm, abi::kHartGetStatus, {5});
  EXPECT_EQ(static_cast<int64_t>(h.Hardware(0).a(0)), Code(ErrorCode::kInvalidParam));
}

TEST(HsmTest, StopScrubsAndBlocksRun) {
  TwoVharts h;
  h.StartSecond();
  auto exit = h.GuestCall(1, 1, abi::kExtHsm, abi::kHartStop);
  ASSERT_TRUE(exit);
  EXPECT_EQ(exit->exit, ExitReason::kHartStop);
  EXPECT_EQ(h.tsm.vhart_state(1, 1).value(), VHartState::kStopped);
  EXPECT_TRUE(h.TvmRegs(1, 1).SameRegisters(HartArchState()));
  EXPECT_EQ(h.Run(1, 1, 1).error, ErrorCode::kHartNotStarted);
  // It can be started again.
  h.StartSecond(kCodeGpa + 0x80, 5);
  EXPECT_EQ(h.Hardware(1).csr(Csr::kPc), kCodeGpa + 0x80);
  h.ExpectTraceWellFormed();
}

TEST(HsmTest, SuspendResumeKeepsRegisters) {
  TwoVharts h;
  HartArchState& hw = h.tsm.machine().hart(0).regs;
  for (int i = 1; i < 32; ++i) hw.set_gpr(i, 0x4000 + i);
  hw.set_csr(Csr::kTval, 0x1234);
  HartArchState expected = hw;
  // The call itself loads a0..a7; the result lands in a0/a1.
  for (int i = 0; i < 8; ++i) expected.set_a(i, 0);
  expected.set_a(6, abi::kHartSuspend);
  expected.set_a(7, abi::kExtHsm);

  auto exit = h.GuestCall(1, 0, abi::kExtHsm, abi::kHartSuspend);
  ASSERT_TRUE(exit);
  EXPECT_EQ(exit->exit, ExitReason::kHartSuspend);
  EXPECT_EQ(h.tsm.vhart_state(1, 0).value(), VHartState::kSuspended);
  EXPECT_EQ(h.Run(1, 1, 0).error, ErrorCode::kOk);  // resumes on another hart
  EXPECT_EQ(h.tsm.vhart_state(1, 0).value(), VHartState::kStarted);
  const HartArchState after = h.Hardware(1);
  EXPECT_TRUE(after.SameRegisters(expected));
  for (int c = 0; c < kCsrCount; ++c) {
    EXPECT_EQ(after.csr(static_cast<Csr>(c)), expected.csr(static_cast<Csr>(c)))
        << CsrName(static_cast<Csr>(c));
  }
}

TEST(IpiTest, DeliveredOnNextEntry) {
  TwoVharts h;
  EXPECT_FALSE(h.GuestCall(1, 0, abi::kExtIpi, abi::kIpiSend, {0b10, 0}));
  EXPECT_EQ(h.Hardware(0).a(0), 0u);
  EXPECT_EQ(h.tsm.vhart_info(1, 1)->pending_ipis, 1u);
  EXPECT_EQ(h.Hardware(0).csr(Csr::kIp) & kSoftwareInterruptBit, 0u);
  h.StartSecond();
  EXPECT_NE(h.Hardware(1).csr(Csr::kIp) & kSoftwareInterruptBit, 0u);
  EXPECT_EQ(h.tsm.vhart_info(1, 1)->ipis_delivered, 1u);
}

TEST(IpiTest, SelfIpiAndBadMask) {
  TwoVharts h;
  EXPECT_FALSE(h.GuestCall(1, 0, abi::kExtIpi, abi::kIpiSend, {0b1, 0}));
  EXPECT_NE(h.Hardware(0).csr(Csr::kIp) & kSoftwareInterruptBit, 0u);
  h.GuestCall(1, 0, abi::kExtIpi, abi::kIpiSend, {0b100, 0});
  EXPECT_EQ(static_cast<int64_t>(h.Hardware(0).a(0)), Code(ErrorCode::kInvalidParam));
}

TEST(IpiTest, CountingOracle) {
  TwoVharts h;
  h.StartSecond();
  std::mt19937_64 rng(11);
  uint64_t sent[2] = {0, 0};
  for (int step = 0; step < 300; ++step) {
    const uint32_t from = rng() % 2;
    const uint64_t mask = rng() % 4;  // {}, {0}, {1}, {0,1}
    EXPECT_FALSE(h.GuestCall(1, from, abi::kExtIpi, abi::kIpiSend, {mask, 0}));
    for (int v = 0; v < 2; ++v) sent[v] += (mask >> v) & 1;
  }
  for (uint32_t v = 0; v < 2; ++v) {
    const VHart info = h.tsm.vhart_info(1, v).value();
    EXPECT_EQ(info.ipis_received, sent[v]);
    EXPECT_EQ(info.ipis_delivered, sent[v]);  // both vharts are executing
    EXPECT_EQ(info.pending_ipis, 0u);
  }
}

TEST(FenceTest, AppliedOnNextEntryIncludingResume) {
  TwoVharts h;
  h.StartSecond();
  ASSERT_FALSE(h.Guest(1, 1, GuestEvent::Load(kCodeGpa, 4)));
  ASSERT_EQ(h.GuestCall(1, 1, abi::kExtHsm, abi::kHartSuspend)->exit,
            ExitReason::kHartSuspend);
  EXPECT_FALSE(h.GuestCall(1, 0, abi::kExtRfence, 1, {0b11, 0}));
  EXPECT_EQ(h.tsm.vhart_info(1, 0)->fences_applied, 1u);
  EXPECT_EQ(h.tsm.vhart_info(1, 1)->fences_applied, 0u);
  EXPECT_TRUE(h.tsm.vhart_info(1, 1)->fence_pending);
  ASSERT_TRUE(h.Run(1, 1, 1).running);
  EXPECT_EQ(h.tsm.vhart_info(1, 1)->fences_applied, 1u);
  bool fenced_after_resume = false;
  for (const auto& e : h.tsm.trace().ForHart(1)) {
    if (e.phase == "fence" && e.flow == "c:1.1") fenced_after_resume = true;
  }
  EXPECT_TRUE(fenced_after_resume);
  // Empty mask: success, nothing pending.
  EXPECT_FALSE(h.GuestCall(1, 0, abi::kExtRfence, 0, {0, 0}));
  EXPECT_EQ(h.Hardware(0).a(0), 0u);
  EXPECT_FALSE(h.tsm.vhart_info(1, 1)->fence_pending);
}

TEST(TimerTest, FiresAtDeadlineAndIsDisclosed) {
  TwoVharts h;
  EXPECT_FALSE(h.GuestCall(1, 0, abi::kExtTime, abi::kTimeSetTimer, {100}));
  EXPECT_FALSE(h.Guest(1, 0, GuestEvent::Tick(50)));
  EXPECT_EQ(h.Hardware(0).csr(Csr::kIp) & kTimerInterruptBit, 0u);
  EXPECT_FALSE(h.Guest(1, 0, GuestEvent::Tick(60)));
  EXPECT_NE(h.Hardware(0).csr(Csr::kIp) & kTimerInterruptBit, 0u);
  EXPECT_EQ(h.tsm.vhart_info(1, 0)->timers_fired, 1u);
  ASSERT_EQ(h.Guest(1, 0, GuestEvent::Wfi())->exit, ExitReason::kWfi);
  EXPECT_EQ(h.Hardware(0).csr(Csr::kTimerDisclosure), 100u);
}

TEST(TimerTest, ReprogrammingReplacesTheDeadline) {
  TwoVharts h;
  h.GuestCall(1, 0, abi::kExtTime, abi::kTimeSetTimer, {500});
  h.GuestCall(1, 0, abi::kExtTime, abi::kTimeSetTimer, {300});
  h.tsm.AdvanceClock(350);
  EXPECT_EQ(h.tsm.vhart_info(1, 0)->timers_fired, 1u);
  h.tsm.AdvanceClock(300);
  EXPECT_EQ(h.tsm.vhart_info(1, 0)->timers_fired, 1u);
  // Programming clears a pending timer interrupt.
  h.GuestCall(1, 0, abi::kExtTime, abi::kTimeSetTimer, {10'000});
  EXPECT_EQ(h.Hardware(0).csr(Csr::kIp) & kTimerInterruptBit, 0u);
}

TEST(TimerTest, ExpiryWhileDescheduledIsDeliveredOnEntry) {
  TwoVharts h;
  h.GuestCall(1, 0, abi::kExtTime, abi::kTimeSetTimer, {10});
  ASSERT_EQ(h.Guest(1, 0, GuestEvent::Wfi())->exit, ExitReason::kWfi);
  h.tsm.AdvanceClock(100);
  EXPECT_EQ(h.tsm.vhart_info(1, 0)->timers_fired, 0u);
  ASSERT_TRUE(h.Run(0, 1, 0).running);
  EXPECT_NE(h.Hardware(0).csr(Csr::kIp) & kTimerInterruptBit, 0u);
}

TEST(TimerTest, OnlyTheDisclosedValueReachesTheHypervisor) {
  TwoVharts h;
  h.GuestCall(1, 0, abi::kExtTime, abi::kTimeSetTimer, {777});
  h.Guest(1, 0, GuestEvent::Tick(1000));
  h.Guest(1, 0, GuestEvent::Wfi());
  for (const auto& e : h.tsm.trace().entries()) {
    if (e.phase != "dtor" || e.Extra("target") != "hyp") continue;
    const std::string writes = e.Extra("writes");
    EXPECT_EQ(writes.find("timecmp"), std::string::npos) << writes;
    EXPECT_EQ(writes.find("hyp:ip"), std::string::npos) << writes;
  }
  EXPECT_EQ(h.Hardware(0).csr(Csr::kTimerDisclosure), 777u);
  EXPECT_EQ(h.Hardware(0).csr(Csr::kTimecmp), 0u);
}

}  // namespace
}  // namespace acetsm
