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

// The scenario corpus compiled into the library, and the adversarial suite
// that runs its attack half.

#ifndef ACETSM_SCENARIO_SUITE_H_
#define ACETSM_SCENARIO_SUITE_H_

#include <string>
#include <string_view>
#include <vector>

#include "common/status.h"
#include "scenario/runner.h"
#include "scenario/scenario.h"

namespace acetsm {

struct BundledScenario {
  std::string_view name;
  std::string_view category;  // "benign" or "attacks"
  std::string_view text;
};

const std::vector<BundledScenario>& BundledScenarios();

// Looks up by bare name ("double_free") or "category/name".
Result<Scenario> LoadBundledScenario(std::string_view name);

struct AttackRow {
  std::string name;
  bool defended = false;
  std::string detail;  // first failed expectation, if any
};

std::vector<AttackRow> RunAttackSuite(const RunOptions& options = {});

// Renders "<name> defended|VULNERABLE [detail]" lines.
std::string FormatAttackTable(const std::vector<AttackRow>& rows);

}  // namespace acetsm

#endif  // ACETSM_SCENARIO_SUITE_H_
