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

#ifndef ACETSM_MACHINE_DOMAIN_H_
#define ACETSM_MACHINE_DOMAIN_H_

#include <cstdint>
#include <string>

namespace acetsm {

enum class Domain : uint8_t { kTsm, kHypervisor, kTvm };

// Identifies who is executing (or on whose behalf an access is made).
struct DomainTag {
  Domain domain = Domain::kHypervisor;
  uint32_t tvm = 0;
  uint32_t vhart = 0;

  static DomainTag Tsm() { return {Domain::kTsm, 0, 0}; }
  static DomainTag Hypervisor() { return {Domain::kHypervisor, 0, 0}; }
  static DomainTag Tvm(uint32_t id, uint32_t vhart) {
    return {Domain::kTvm, id, vhart};
  }

  bool is_tvm() const { return domain == Domain::kTvm; }
  // Two tags name the same security domain if they are the same TVM
  // (any vhart) or both the hypervisor.
  bool SameSecurityDomain(const DomainTag& other) const {
    if (domain != other.domain) return false;
    return domain != Domain::kTvm || tvm == other.tvm;
  }

  std::string ToString() const;

  friend bool operator==(const DomainTag&, const DomainTag&) = default;
};

}  // namespace acetsm

#endif  // ACETSM_MACHINE_DOMAIN_H_
