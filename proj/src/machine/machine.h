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

#ifndef ACETSM_MACHINE_MACHINE_H_
#define ACETSM_MACHINE_MACHINE_H_

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <vector>

#include "common/bytes.h"
#include "common/status.h"
#include "machine/domain.h"
#include "machine/hart_state.h"
#include "machine/layout.h"
#include "machine/sparse_memory.h"

namespace acetsm {

enum class AccessOp : uint8_t { kRead, kWrite };

struct AccessRecord {
  DomainTag domain;
  uint64_t address = 0;
  uint64_t length = 0;
  AccessOp op = AccessOp::kRead;
  bool allowed = false;
};

// Hardware-side state of one physical hart.
struct PhysicalHart {
  HartArchState regs;
  // Cached guest translations (gpa page numbers); the TLB model.
  std::set<uint64_t> tlb;
  // Simulated microarchitectural residue has been cleared since the last
  // change of executing domain.
  bool residue_clear = true;
};

class Machine {
 public:
  static Result<Machine> Build(const MachineConfig& config);

  const MachineConfig& config() const { return config_; }
  const MemoryLayout& layout() const { return layout_; }

  // Region-rule checked accesses. Rules are evaluated on every call; a
  // denied access is an AccessFault and is reported to the observer.
  Result<Bytes> Read(const DomainTag& who, uint64_t address, uint64_t length);
  Status Write(const DomainTag& who, uint64_t address, ByteSpan data);
  bool Permits(const DomainTag& who, uint64_t address, uint64_t length) const;

  // Confidential ranges a TVM may touch (the PMP + G-stage combination).
  void GrantTvm(uint32_t tvm, Interval range);
  void RevokeTvm(uint32_t tvm, Interval range);
  void RevokeAllTvm(uint32_t tvm);
  bool IsGranted(uint32_t tvm, uint64_t address, uint64_t length) const;

  // Zero a range on behalf of the TSM.
  void ZeroRange(uint64_t begin, uint64_t end) { memory_.Zero(begin, end); }
  bool IsZero(uint64_t begin, uint64_t end) const {
    return memory_.IsZero(begin, end);
  }

  size_t hart_count() const { return harts_.size(); }
  PhysicalHart& hart(size_t index) { return harts_.at(index); }
  const PhysicalHart& hart(size_t index) const { return harts_.at(index); }

  using AccessObserver = std::function<void(const AccessRecord&)>;
  void set_access_observer(AccessObserver observer) {
    observer_ = std::move(observer);
  }
  uint64_t access_faults() const { return access_faults_; }

 private:
  Machine(MachineConfig config, MemoryLayout layout);
  void Notify(const AccessRecord& record);

  MachineConfig config_;
  MemoryLayout layout_;
  SparseMemory memory_;
  std::vector<PhysicalHart> harts_;
  // tvm id -> (begin -> end) of granted confidential ranges.
  std::map<uint32_t, std::map<uint64_t, uint64_t>> grants_;
  AccessObserver observer_;
  uint64_t access_faults_ = 0;
};

}  // namespace acetsm

#endif  // ACETSM_MACHINE_MACHINE_H_
