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

#include "attestation/random.h"

#include <openssl/rand.h>

#include <cstring>
#include <stdexcept>
#include <string_view>

#include "attestation/crypto.h"

namespace acetsm {

void SystemRandom::Fill(std::span<uint8_t> out) {
  if (out.empty()) return;
  if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1) {
    throw std::runtime_error("RAND_bytes failed");
  }
}

DeterministicRandom::DeterministicRandom(uint64_t seed) {
  constexpr std::string_view kLabel = "acetsm-drbg-v1";
  input_.assign(kLabel.begin(), kLabel.end());
  PutBe64(input_, seed);
}

void DeterministicRandom::Fill(std::span<uint8_t> out) {
  if (used_ + out.size() > stream_.size()) {
    // XOF output is prefix-stable, so regrowing keeps earlier bytes intact.
    size_t want = stream_.empty() ? 256 : stream_.size();
    while (want < used_ + out.size()) want *= 2;
    stream_ = crypto::Shake256(input_, want);
  }
  std::memcpy(out.data(), stream_.data() + used_, out.size());
  used_ += out.size();
}

}  // namespace acetsm
