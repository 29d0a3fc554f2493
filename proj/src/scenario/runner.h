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

#ifndef ACETSM_SCENARIO_RUNNER_H_
#define ACETSM_SCENARIO_RUNNER_H_

#include <string>
#include <vector>

#include "scenario/scenario.h"
#include "tsm/tsm.h"

namespace acetsm {

struct RunOptions {
  // One thread per hart; directives between barriers run concurrently.
  bool threads = false;
  // Test hook for the mutation check of the adversarial suite.
  bool double_free_check = true;
};

struct ScenarioOutcome {
  std::string name;
  bool passed = false;
  size_t expects_checked = 0;
  std::vector<std::string> failures;  // "line N: ..." diagnostics
  std::vector<TraceEntry> trace;
  std::string trace_text;  // header plus one line per entry
  AllocatorReport allocator;
  AbiStats stats;
};

ScenarioOutcome RunScenario(const Scenario& scenario, const RunOptions& options = {});

}  // namespace acetsm

#endif  // ACETSM_SCENARIO_RUNNER_H_
