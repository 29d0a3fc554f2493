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

#include "tsm/trace.h"

#include <map>
#include <sstream>

namespace acetsm {

std::string TraceEntry::Extra(std::string_view key) const {
  for (const auto& [k, v] : extras) {
    if (k == key) return v;
  }
  return {};
}

std::string TraceEntry::Format() const {
  std::string out = "h" + std::to_string(hart) + " " + flow + " " + phase +
                    " " + call + " " + result;
  for (const auto& [k, v] : extras) out += " " + k + "=" + v;
  return out;
}

Result<TraceEntry> TraceEntry::Parse(std::string_view line) {
  std::istringstream in{std::string(line)};
  std::string hart;
  TraceEntry e;
  if (!(in >> hart >> e.flow >> e.phase >> e.call >> e.result) ||
      hart.size() < 2 || hart[0] != 'h') {
    return MakeError(ErrorCode::kParseError, "trace: short line");
  }
  try {
    e.hart = static_cast<uint32_t>(std::stoul(hart.substr(1)));
  } catch (...) {
    return MakeError(ErrorCode::kParseError, "trace: bad hart");
  }
  std::string field;
  while (in >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) {
      return MakeError(ErrorCode::kParseError, "trace: extra without '='");
    }
    e.extras.emplace_back(field.substr(0, eq), field.substr(eq + 1));
  }
  return e;
}

TraceLog::TraceLog(const TraceLog& other) {
  std::lock_guard lock(other.mu_);
  entries_ = other.entries_;
  enabled_ = other.enabled_;
}

TraceLog& TraceLog::operator=(const TraceLog& other) {
  if (this != &other) {
    std::scoped_lock lock(mu_, other.mu_);
    entries_ = other.entries_;
    enabled_ = other.enabled_;
  }
  return *this;
}

void TraceLog::Append(TraceEntry entry) {
  std::lock_guard lock(mu_);
  if (!enabled_) return;
  entries_.push_back(std::move(entry));
}

std::vector<TraceEntry> TraceLog::entries() const {
  std::lock_guard lock(mu_);
  return entries_;
}

std::vector<TraceEntry> TraceLog::ForHart(uint32_t hart) const {
  std::lock_guard lock(mu_);
  std::vector<TraceEntry> out;
  for (const auto& e : entries_) {
    if (e.hart == hart) out.push_back(e);
  }
  return out;
}

size_t TraceLog::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

void TraceLog::Clear() {
  std::lock_guard lock(mu_);
  entries_.clear();
}

std::string TraceLog::Format() const {
  std::lock_guard lock(mu_);
  std::string out(kTraceHeader);
  out += "\n";
  for (const auto& e : entries_) out += e.Format() + "\n";
  return out;
}

Result<std::vector<TraceEntry>> TraceLog::ParseText(std::string_view text) {
  std::vector<TraceEntry> out;
  std::istringstream in{std::string(text)};
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (!header) {
      if (line != kTraceHeader) {
        return MakeError(ErrorCode::kParseError, "trace: missing header");
      }
      header = true;
      continue;
    }
    ACETSM_ASSIGN_OR_RETURN(TraceEntry e, TraceEntry::Parse(line));
    out.push_back(std::move(e));
  }
  if (!header) return MakeError(ErrorCode::kParseError, "trace: empty");
  return out;
}

std::vector<std::string> CheckTraceGrammar(const std::vector<TraceEntry>& trace) {
  std::vector<std::string> violations;
  std::map<uint32_t, std::string> flow;
  for (size_t i = 0; i < trace.size(); ++i) {
    const TraceEntry& e = trace[i];
    auto [it, fresh] = flow.emplace(e.hart, "nc");
    std::string& current = it->second;
    const std::string where = "entry " + std::to_string(i) + " (" + e.Format() + "): ";
    if (e.phase == "switch") {
      if (e.flow == current) violations.push_back(where + "switch to same flow");
      if (e.Extra("from") != current) {
        violations.push_back(where + "switch from " + e.Extra("from") +
                             " but hart was in " + current);
      }
      if (e.Extra("to") != e.flow) {
        violations.push_back(where + "switch names " + e.Extra("to") +
                             " but entry flow is " + e.flow);
      }
      if (e.Extra("residue") != "clear") {
        violations.push_back(where + "residue not cleared on domain switch");
      }
      current = e.flow;
    } else if (e.flow != current) {
      violations.push_back(where + "flow changed without a domain switch");
      current = e.flow;
    }
  }
  return violations;
}

std::vector<std::string> CheckHandlerConfinement(
    const std::vector<TraceEntry>& trace) {
  std::vector<std::string> violations;
  for (size_t i = 0; i < trace.size(); ++i) {
    const TraceEntry& e = trace[i];
    if (e.phase != "dtor") continue;
    const std::string where = "entry " + std::to_string(i) + " (" + e.Format() + "): ";
    const std::string target = e.Extra("target");
    if (target.empty()) {
      violations.push_back(where + "destructor without declared target");
      continue;
    }
    // A rejected call never reaches the handler; only its error code returns.
    if (e.call == "retrieve_secret" && e.result == "ok" && target != "tvm") {
      violations.push_back(where + "secret handler targets " + target);
    }
    const std::string writes = e.Extra("writes");
    std::istringstream in(writes);
    std::string w;
    while (std::getline(in, w, ',')) {
      if (w.empty() || w == "-") continue;
      const std::string domain = w.substr(0, w.find(':'));
      if (domain != target) {
        violations.push_back(where + "write " + w + " outside " + target);
      }
    }
  }
  return violations;
}

}  // namespace acetsm
