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

// Declarative scenario files. See docs/scenario_format.md.

#ifndef ACETSM_SCENARIO_SCENARIO_H_
#define ACETSM_SCENARIO_SCENARIO_H_

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "common/status.h"
#include "machine/machine.h"
#include "scenario/vm_image.h"

namespace acetsm {

inline constexpr std::string_view kScenarioHeader = "acetsm-scenario v1";

// One script line, split on whitespace. Values are resolved when run.
struct Directive {
  int line = 0;
  std::string keyword;
  std::vector<std::string> args;

  bool is_expect() const { return keyword == "expect"; }
  std::string ToString() const;
};

struct Scenario {
  std::string name;
  MachineConfig machine;
  std::vector<KemAlgorithm> kems = AvailableKems();
  PageSize allocator_max = PageSize::k1GiB;
  std::vector<std::pair<uint64_t, Bytes>> memory;  // hypervisor-written
  std::map<std::string, VmImage> images;
  std::vector<Directive> script;
};

// ParseError messages carry "line N: " prefixes.
Result<Scenario> ParseScenario(std::string_view text, std::string name = "");
Result<Scenario> LoadScenario(const std::string& path);

// Integers: decimal or 0x-prefixed hex; '_' separators are ignored.
std::optional<uint64_t> ParseNumber(std::string_view text);

}  // namespace acetsm

#endif  // ACETSM_SCENARIO_SCENARIO_H_
