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

#include "scenario/vm_image.h"

#include <algorithm>

#include "attestation/random.h"
#include "tsm/fdt.h"

namespace acetsm {
namespace {

constexpr uint64_t kGuestMemoryBase = 0x8000'0000;

uint64_t AlignUp(uint64_t value, uint64_t alignment) {
  return (value + alignment - 1) / alignment * alignment;
}

}  // namespace

MeasurementRegisters ExpectedMeasurements(const VmImage& image, ByteSpan fdt) {
  std::vector<const VmPage*> sorted;
  for (const auto& page : image.pages) sorted.push_back(&page);
  std::sort(sorted.begin(), sorted.end(),
            [](const VmPage* a, const VmPage* b) { return a->gpa < b->gpa; });
  CodeDataMeasurement code;
  for (const VmPage* page : sorted) {
    Bytes full(PageBytes(page->size), 0);
    std::copy_n(page->content.begin(),
                std::min(page->content.size(), full.size()), full.begin());
    for (uint64_t off = 0; off < full.size(); off += kSmallPageBytes) {
      ByteSpan chunk = ByteSpan(full).subspan(off, kSmallPageBytes);
      if (AllZero(chunk)) continue;  // zero pages are not measured
      code.Add((page->gpa + off) / kSmallPageBytes, chunk);
    }
  }
  MeasurementRegisters out;
  out.code_data = code.Finish();
  out.fdt = crypto::Sha384(fdt);
  out.boot_hart = MeasureBootHart(image.boot);
  return out;
}

Result<StagedVm> StageVm(Machine& machine, const VmImage& image) {
  const DomainTag hyp = DomainTag::Hypervisor();
  StagedVm staged;
  staged.tables = GuestTableBuilder(image.table_area, image.table_area_end);

  uint64_t next_host = image.data_area;
  uint64_t lowest = ~uint64_t{0};
  uint64_t highest = 0;
  for (const VmPage& page : image.pages) {
    const uint64_t bytes = PageBytes(page.size);
    const uint64_t host = AlignUp(next_host, bytes);
    next_host = host + bytes;
    if (page.content.size() > bytes) {
      return MakeError(ErrorCode::kConfigError, "page content larger than page");
    }
    if (!page.content.empty()) {
      ACETSM_RETURN_IF_ERROR(machine.Write(hyp, host, page.content));
    }
    ACETSM_RETURN_IF_ERROR(staged.tables.Map(page.gpa, host, page.size, page.perms));
    lowest = std::min(lowest, page.gpa);
    highest = std::max(highest, page.gpa + bytes);
  }
  if (image.pages.empty()) lowest = highest = kGuestMemoryBase;
  ACETSM_RETURN_IF_ERROR(staged.tables.WriteTo(machine));
  staged.root = staged.tables.root();

  staged.fdt_bytes = fdt::MinimalTree(image.cpus, lowest, highest - lowest);
  staged.boot_hart = image.staging;
  staged.fdt = image.staging + kStagedFdtOffset;
  staged.tap = image.staging + kStagedTapOffset;
  if (staged.fdt_bytes.size() > kStagedTapOffset - kStagedFdtOffset) {
    return MakeError(ErrorCode::kConfigError, "device tree too large");
  }
  ACETSM_RETURN_IF_ERROR(machine.Write(hyp, staged.boot_hart, image.boot.Encode()));
  ACETSM_RETURN_IF_ERROR(machine.Write(hyp, staged.fdt, staged.fdt_bytes));

  staged.expected = ExpectedMeasurements(image, staged.fdt_bytes);
  TapPayload payload;
  payload.reference = staged.expected;
  payload.secrets = image.secrets;
  switch (image.reference) {
    case TapReference::kImage: break;
    case TapReference::kWrongCode: payload.reference.code_data[0] ^= 1; break;
    case TapReference::kWrongFdt: payload.reference.fdt[0] ^= 1; break;
    case TapReference::kWrongBootHart: payload.reference.boot_hart[0] ^= 1; break;
  }
  std::vector<KemPublicKey> recipients;
  const TsmAttestationKey builtin = TsmAttestationKey::Builtin();
  for (KemAlgorithm alg : image.tap_kems) {
    const KemPrivateKey* key = builtin.Find(alg);
    if (key == nullptr) return MakeError(ErrorCode::kUnsupportedAlgorithm, "kem");
    ACETSM_ASSIGN_OR_RETURN(KemPublicKey pub, FindKemProvider(alg)->PublicKeyOf(*key));
    recipients.push_back(std::move(pub));
  }
  DeterministicRandom rng(image.tap_seed);
  ACETSM_ASSIGN_OR_RETURN(TapBlob blob, TapCreate(payload, recipients, rng));
  staged.tap_bytes = blob.Serialize();
  if (image.tap_flip_bit) {
    const uint64_t bits = staged.tap_bytes.size() * 8;
    const uint64_t bit = image.tap_flip_from_end
                             ? bits - 1 - *image.tap_flip_bit % bits
                             : *image.tap_flip_bit % bits;
    staged.tap_bytes[bit / 8] ^= static_cast<uint8_t>(1u << (bit % 8));
  }
  ACETSM_RETURN_IF_ERROR(machine.Write(hyp, staged.tap, staged.tap_bytes));
  return staged;
}

VmImage DefaultVmImage(uint32_t cpus) {
  VmImage image;
  image.cpus = cpus;
  VmPage code;
  code.gpa = kGuestMemoryBase;
  for (int i = 0; i < 256; ++i) code.content.push_back(static_cast<uint8_t>(i * 13 + 5));
  image.pages.push_back(code);
  VmPage zero;
  zero.gpa = kGuestMemoryBase + 0x1000;
  zero.perms = gstage::kRead | gstage::kWrite;
  image.pages.push_back(zero);
  image.boot.set_csr(Csr::kPc, kGuestMemoryBase);
  image.boot.set_a(1, kGuestMemoryBase + 0x1000);
  image.secrets.push_back({1, Bytes{'s', 'e', 'c', 'r', 'e', 't'}});
  return image;
}

}  // namespace acetsm
