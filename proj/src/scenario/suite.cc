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

#include "scenario/suite.h"

#include <string>

namespace acetsm {

Result<Scenario> LoadBundledScenario(std::string_view name) {
  for (const auto& entry : BundledScenarios()) {
    const std::string qualified =
        std::string(entry.category) + "/" + std::string(entry.name);
    if (name == entry.name || name == qualified) {
      return ParseScenario(entry.text, std::string(entry.name));
    }
  }
  return Status(ErrorCode::kInvalidParam,
                "no bundled scenario named " + std::string(name));
}

std::vector<AttackRow> RunAttackSuite(const RunOptions& options) {
  std::vector<AttackRow> rows;
  for (const auto& entry : BundledScenarios()) {
    if (entry.category != "attacks") continue;
    AttackRow row;
    row.name = std::string(entry.name);
    auto scenario = ParseScenario(entry.text, row.name);
    if (!scenario.ok()) {
      row.detail = scenario.status().ToString();
    } else {
      ScenarioOutcome outcome = RunScenario(*scenario, options);
      row.defended = outcome.passed;
      if (!outcome.failures.empty()) row.detail = outcome.failures.front();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string FormatAttackTable(const std::vector<AttackRow>& rows) {
  std::string out;
  for (const auto& row : rows) {
    out += row.name;
    out.append(row.name.size() < 24 ? 24 - row.name.size() : 1, ' ');
    out += row.defended ? "defended" : "VULNERABLE";
    if (!row.detail.empty()) out += "  " + row.detail;
    out += '\n';
  }
  return out;
}

}  // namespace acetsm
