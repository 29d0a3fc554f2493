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

#ifndef ACETSM_TSM_TRACE_H_
#define ACETSM_TSM_TRACE_H_

#include <cstdint>
#include <mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "common/status.h"

namespace acetsm {

// One line per phase:
//   h<hart> <flow> <phase> <call> <result> [key=value ...]
// flow is "nc" (non-confidential) or "c:<tvm>.<vhart>"; call and result are
// "-" when not applicable.
struct TraceEntry {
  uint32_t hart = 0;
  std::string flow = "nc";
  std::string phase;
  std::string call = "-";
  std::string result = "-";
  std::vector<std::pair<std::string, std::string>> extras;

  std::string Extra(std::string_view key) const;
  std::string Format() const;
  static Result<TraceEntry> Parse(std::string_view line);
};

inline constexpr std::string_view kTraceHeader = "# acetsm-trace v1";

// Append-only, safe for concurrent writers. Per-hart order is emission order.
class TraceLog {
 public:
  TraceLog() = default;
  TraceLog(const TraceLog& other);
  TraceLog& operator=(const TraceLog& other);

  void Append(TraceEntry entry);
  std::vector<TraceEntry> entries() const;
  std::vector<TraceEntry> ForHart(uint32_t hart) const;
  size_t size() const;
  void Clear();
  void set_enabled(bool enabled) {
    std::lock_guard lock(mu_);
    enabled_ = enabled;
  }

  // Header line followed by one line per entry.
  std::string Format() const;
  static Result<std::vector<TraceEntry>> ParseText(std::string_view text);

 private:
  mutable std::mutex mu_;
  std::vector<TraceEntry> entries_;
  bool enabled_ = true;
};

// Path mediation and residue hygiene: per hart, the flow field changes only on
// a "switch" entry, which must name the previous flow in from=, the new one
// in to=, and carry residue=clear. A switch must change the flow.
std::vector<std::string> CheckTraceGrammar(const std::vector<TraceEntry>& trace);

// Handler confinement: every destructor write is inside its declared target
// domain, and a completed secret handler never writes hypervisor state.
std::vector<std::string> CheckHandlerConfinement(
    const std::vector<TraceEntry>& trace);

}  // namespace acetsm

#endif  // ACETSM_TSM_TRACE_H_
