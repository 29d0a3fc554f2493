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

#ifndef ACETSM_COMMON_STATUS_H_
#define ACETSM_COMMON_STATUS_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

namespace acetsm {

// Error codes double as the ABI return values written into a0. Values that
// overlap with SBI keep the SBI numbering; TSM-specific failures live below
// -100 so they never collide with future SBI additions.
enum class ErrorCode : int32_t {
  kOk = 0,
  kFailed = -1,
  kUnknownCall = -2,  // SBI_ERR_NOT_SUPPORTED
  kInvalidParam = -3,
  kDenied = -4,
  kInvalidAddress = -5,
  kAlreadyAvailable = -6,
  kInvalidState = -10,
  kMalformedTable = -100,
  kOutOfMemory = -101,
  kParseError = -102,
  kNoMatchingLockbox = -103,
  kAuthFailure = -104,
  kAttestationFailed = -105,
  kNoSuchTvm = -106,
  kHartNotStarted = -107,
  kTvmBusy = -108,
  kAlreadyMapped = -109,
  kNoSuchSecret = -110,
  kFlowViolation = -111,
  kForeignToken = -112,
  kGuestFault = -113,
  kAccessFault = -114,
  kConfigError = -115,
  kUnsupportedAlgorithm = -116,
};

std::string_view ErrorCodeName(ErrorCode code);
std::optional<ErrorCode> ErrorCodeFromName(std::string_view name);

class [[nodiscard]] Status {
 public:
  Status() = default;
  Status(ErrorCode code, std::string message)
      : code_(code), message_(std::move(message)) {}

  static Status Ok() { return Status(); }

  bool ok() const { return code_ == ErrorCode::kOk; }
  ErrorCode code() const { return code_; }
  const std::string& message() const { return message_; }
  std::string ToString() const;

  friend bool operator==(const Status& a, const Status& b) {
    return a.code_ == b.code_;
  }

 private:
  ErrorCode code_ = ErrorCode::kOk;
  std::string message_;
};

inline Status MakeError(ErrorCode code, std::string message = {}) {
  return Status(code, std::move(message));
}

// Value-or-error. Holds exactly one of T or a non-ok Status.
template <typename T>
class [[nodiscard]] Result {
 public:
  Result(T value) : data_(std::move(value)) {}  // NOLINT: implicit by design
  Result(Status status) : data_(std::move(status)) {}  // NOLINT

  bool ok() const { return std::holds_alternative<T>(data_); }
  Status status() const {
    return ok() ? Status::Ok() : std::get<Status>(data_);
  }
  ErrorCode code() const {
    return ok() ? ErrorCode::kOk : std::get<Status>(data_).code();
  }

  T& value() & { return std::get<T>(data_); }
  const T& value() const& { return std::get<T>(data_); }
  T value() && { return std::get<T>(std::move(data_)); }

  T& operator*() & { return value(); }
  const T& operator*() const& { return value(); }
  T* operator->() { return &value(); }
  const T* operator->() const { return &value(); }

 private:
  std::variant<T, Status> data_;
};

}  // namespace acetsm

#define ACETSM_CONCAT_INNER_(a, b) a##b
#define ACETSM_CONCAT_(a, b) ACETSM_CONCAT_INNER_(a, b)

#define ACETSM_RETURN_IF_ERROR(expr)            \
  do {                                          \
    ::acetsm::Status acetsm_status_ = (expr);   \
    if (!acetsm_status_.ok()) return acetsm_status_; \
  } while (0)

#define ACETSM_ASSIGN_OR_RETURN_IMPL_(tmp, lhs, expr) \
  auto tmp = (expr);                                  \
  if (!tmp.ok()) return tmp.status();                 \
  lhs = std::move(tmp).value()

#define ACETSM_ASSIGN_OR_RETURN(lhs, expr) \
  ACETSM_ASSIGN_OR_RETURN_IMPL_(ACETSM_CONCAT_(acetsm_result_, __LINE__), lhs, expr)

#endif  // ACETSM_COMMON_STATUS_H_
