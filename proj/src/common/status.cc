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

#include "common/status.h"

#include <array>

namespace acetsm {
namespace {

struct NamedCode {
  ErrorCode code;
  std::string_view name;
};

constexpr std::array kNames = {
    NamedCode{ErrorCode::kOk, "Ok"},
    NamedCode{ErrorCode::kFailed, "Failed"},
    NamedCode{ErrorCode::kUnknownCall, "UnknownCall"},
    NamedCode{ErrorCode::kInvalidParam, "InvalidParam"},
    NamedCode{ErrorCode::kDenied, "Denied"},
    NamedCode{ErrorCode::kInvalidAddress, "InvalidAddress"},
    NamedCode{ErrorCode::kAlreadyAvailable, "AlreadyAvailable"},
    NamedCode{ErrorCode::kInvalidState, "InvalidState"},
    NamedCode{ErrorCode::kMalformedTable, "MalformedTable"},
    NamedCode{ErrorCode::kOutOfMemory, "OutOfMemory"},
    NamedCode{ErrorCode::kParseError, "ParseError"},
    NamedCode{ErrorCode::kNoMatchingLockbox, "NoMatchingLockbox"},
    NamedCode{ErrorCode::kAuthFailure, "AuthFailure"},
    NamedCode{ErrorCode::kAttestationFailed, "AttestationFailed"},
    NamedCode{ErrorCode::kNoSuchTvm, "NoSuchTvm"},
    NamedCode{ErrorCode::kHartNotStarted, "HartNotStarted"},
    NamedCode{ErrorCode::kTvmBusy, "TvmBusy"},
    NamedCode{ErrorCode::kAlreadyMapped, "AlreadyMapped"},
    NamedCode{ErrorCode::kNoSuchSecret, "NoSuchSecret"},
    NamedCode{ErrorCode::kFlowViolation, "FlowViolation"},
    NamedCode{ErrorCode::kForeignToken, "ForeignToken"},
    NamedCode{ErrorCode::kGuestFault, "GuestFault"},
    NamedCode{ErrorCode::kAccessFault, "AccessFault"},
    NamedCode{ErrorCode::kConfigError, "ConfigError"},
    NamedCode{ErrorCode::kUnsupportedAlgorithm, "UnsupportedAlgorithm"},
};

}  // namespace

std::string_view ErrorCodeName(ErrorCode code) {
  for (const auto& entry : kNames) {
    if (entry.code == code) return entry.name;
  }
  return "Unknown";
}

std::optional<ErrorCode> ErrorCodeFromName(std::string_view name) {
  for (const auto& entry : kNames) {
    if (entry.name == name) return entry.code;
  }
  return std::nullopt;
}

std::string Status::ToString() const {
  std::string out(ErrorCodeName(code_));
  if (!message_.empty()) {
    out += ": ";
    out += message_;
  }
  return out;
}

}  // namespace acetsm
