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

// Small driver around Tsm used by the core and HSM tests.

#ifndef ACETSM_TESTS_TSM_HARNESS_H_
#define ACETSM_TESTS_TSM_HARNESS_H_

#include <gtest/gtest.h>

#include "scenario/vm_image.h"
#include "tsm/tsm.h"

namespace acetsm::testing {

inline MachineConfig HarnessConfig(uint32_t harts) {
  MachineConfig config;
  config.hart_count = harts;
  return config;
}

struct Harness {
  Tsm tsm;
  StagedVm vm;

  explicit Harness(uint32_t harts = 1, VmImage image = DefaultVmImage(),
                   TsmOptions options = {})
      : tsm(Tsm::Boot(HarnessConfig(harts), std::move(options)).value()) {
    Stage(image);
  }

  void Stage(const VmImage& image) {
    auto staged = tsm.WithLock(
        [&](Machine& machine, PageAllocator&) { return StageVm(machine, image); });
    EXPECT_TRUE(staged.ok()) << staged.status().ToString();
    if (staged.ok()) vm = std::move(*staged);
  }

  CallResult Call(uint32_t hart, uint64_t ext, uint64_t fid,
                  std::array<uint64_t, 6> args = {}) {
    return tsm.HypervisorCall(hart, ext, fid, args);
  }
  CallResult Promote(uint32_t hart = 0) {
    return Call(hart, abi::kExtTvm, abi::kPromote,
                {vm.boot_hart, vm.root, vm.fdt, vm.tap});
  }
  CallResult Run(uint32_t hart, uint64_t tvm, uint64_t vhart, uint64_t irq = 0,
                 uint64_t r0 = 0, uint64_t r1 = 0) {
    return Call(hart, abi::kExtTvm, abi::kRun, {tvm, vhart, irq, r0, r1});
  }
  CallResult Destroy(uint32_t hart, uint64_t tvm) {
    return Call(hart, abi::kExtTvm, abi::kDestroy, {tvm});
  }
  // Queues a guest event; returns the exit if the vhart was executing.
  std::optional<CallResult> Guest(uint32_t tvm, uint32_t vhart, GuestEvent event) {
    auto r = tsm.QueueGuestEvent(tvm, vhart, std::move(event));
    EXPECT_TRUE(r.ok());
    return r.ok() ? *r : std::nullopt;
  }
  std::optional<CallResult> GuestCall(uint32_t tvm, uint32_t vhart, uint64_t ext,
                                      uint64_t fid, std::array<uint64_t, 6> args = {}) {
    return Guest(tvm, vhart, GuestEvent::Ecall(ext, fid, args));
  }
  HartArchState Hardware(uint32_t hart) { return tsm.machine().hart(hart).regs; }
  HartArchState TvmRegs(uint32_t tvm, uint32_t vhart) {
    return tsm.vhart_registers(tvm, vhart).value();
  }

  void ExpectTraceWellFormed() {
    const auto entries = tsm.trace().entries();
    for (const auto& v : CheckTraceGrammar(entries)) ADD_FAILURE() << v;
    for (const auto& v : CheckHandlerConfinement(entries)) ADD_FAILURE() << v;
  }
};

}  // namespace acetsm::testing

#endif  // ACETSM_TESTS_TSM_HARNESS_H_
