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

// A normal VM prepared by the hypervisor in its own memory, ready to be
// promoted: guest tables, data pages, device tree, boot hart and sealed TAP.

#ifndef ACETSM_SCENARIO_VM_IMAGE_H_
#define ACETSM_SCENARIO_VM_IMAGE_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "attestation/kem.h"
#include "attestation/measurement.h"
#include "attestation/tap.h"
#include "gstage/gstage.h"
#include "gstage/table_builder.h"
#include "machine/hart_state.h"
#include "machine/machine.h"

namespace acetsm {

struct VmPage {
  uint64_t gpa = 0;
  PageSize size = PageSize::k4KiB;
  uint64_t perms = gstage::kPermMask;
  Bytes content;  // placed at the start of the page; the rest is zero
};

// Which reference measurements the TAP carries.
enum class TapReference { kImage, kWrongCode, kWrongFdt, kWrongBootHart };

struct VmImage {
  std::string name = "vm";
  uint64_t table_area = 0x8800'0000;  // guest tables (bump allocated)
  uint64_t table_area_end = 0x8810'0000;
  uint64_t data_area = 0x8900'0000;   // host backing for guest pages
  uint64_t staging = 0x8A00'0000;     // boot hart, FDT, TAP
  std::vector<VmPage> pages;
  uint32_t cpus = 1;
  HartArchState boot;
  std::vector<KemAlgorithm> tap_kems = {KemAlgorithm::kTestKem};
  std::vector<TapSecret> secrets;
  TapReference reference = TapReference::kImage;
  std::optional<uint64_t> tap_flip_bit;
  bool tap_flip_from_end = false;  // bit counted back from the last bit
  uint64_t tap_seed = 1;
};

struct StagedVm {
  uint64_t boot_hart = 0;
  uint64_t root = 0;
  uint64_t fdt = 0;
  uint64_t tap = 0;
  Bytes fdt_bytes;
  Bytes tap_bytes;
  MeasurementRegisters expected;
  GuestTableBuilder tables{0, 0};
};

// Offsets of the staged objects from VmImage::staging.
inline constexpr uint64_t kStagedFdtOffset = 0x1000;
inline constexpr uint64_t kStagedTapOffset = 0x2000;

// Reference measurements computed from the image description alone.
MeasurementRegisters ExpectedMeasurements(const VmImage& image, ByteSpan fdt);

// Writes everything through the hypervisor's view of memory.
Result<StagedVm> StageVm(Machine& machine, const VmImage& image);

// Minimal bootable image: one code page at 0x8000_0000 and one zero page.
VmImage DefaultVmImage(uint32_t cpus = 1);

}  // namespace acetsm

#endif  // ACETSM_SCENARIO_VM_IMAGE_H_
