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

#include "machine/hart_state.h"

#include <charconv>
#include <string>

namespace acetsm {
namespace {

constexpr std::array<std::string_view, kCsrCount> kCsrNames = {
    "pc", "cause", "tval", "timecmp", "ip", "ie", "irq_id", "timer_disclosure"};

constexpr std::array<std::string_view, 32> kAbiNames = {
    "zero", "ra", "sp", "gp", "tp", "t0", "t1", "t2", "s0", "s1", "a0",
    "a1",   "a2", "a3", "a4", "a5", "a6", "a7", "s2", "s3", "s4", "s5",
    "s6",   "s7", "s8", "s9", "s10", "s11", "t3", "t4", "t5", "t6"};

}  // namespace

std::string_view CsrName(Csr csr) {
  return kCsrNames[static_cast<size_t>(csr)];
}

std::optional<Csr> ParseCsr(std::string_view name) {
  for (size_t i = 0; i < kCsrNames.size(); ++i) {
    if (kCsrNames[i] == name) return static_cast<Csr>(i);
  }
  return std::nullopt;
}

std::string_view GprName(int index) { return kAbiNames.at(index); }

std::optional<int> ParseGprName(std::string_view name) {
  for (size_t i = 0; i < kAbiNames.size(); ++i) {
    if (kAbiNames[i] == name) return static_cast<int>(i);
  }
  if (name.size() >= 2 && name[0] == 'x') {
    int index = -1;
    auto [ptr, ec] =
        std::from_chars(name.data() + 1, name.data() + name.size(), index);
    if (ec == std::errc() && ptr == name.data() + name.size() && index >= 0 &&
        index < 32) {
      return index;
    }
  }
  return std::nullopt;
}

void HartArchState::Clear() {
  gprs_.fill(0);
  csrs_.fill(0);
}

Bytes HartArchState::Encode() const {
  Bytes out(kEncodedSize);
  uint8_t* p = out.data();
  for (uint64_t v : gprs_) {
    StoreLe64(p, v);
    p += 8;
  }
  for (uint64_t v : csrs_) {
    StoreLe64(p, v);
    p += 8;
  }
  return out;
}

Result<HartArchState> HartArchState::Decode(ByteSpan bytes) {
  if (bytes.size() != kEncodedSize) {
    return MakeError(ErrorCode::kParseError, "hart state has wrong size");
  }
  HartArchState state;
  const uint8_t* p = bytes.data();
  for (auto& v : state.gprs_) {
    v = LoadLe64(p);
    p += 8;
  }
  for (auto& v : state.csrs_) {
    v = LoadLe64(p);
    p += 8;
  }
  state.gprs_[0] = 0;
  return state;
}

Bytes HartArchState::CanonicalEncoding() const {
  Bytes out;
  out.reserve(kEncodedSize);
  for (uint64_t v : gprs_) PutBe64(out, v);
  for (uint64_t v : csrs_) PutBe64(out, v);
  return out;
}

}  // namespace acetsm
