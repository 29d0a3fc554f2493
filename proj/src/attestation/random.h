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

#ifndef ACETSM_ATTESTATION_RANDOM_H_
#define ACETSM_ATTESTATION_RANDOM_H_

#include <cstdint>
#include <span>

#include "common/bytes.h"

namespace acetsm {

class RandomSource {
 public:
  virtual ~RandomSource() = default;
  virtual void Fill(std::span<uint8_t> out) = 0;

  Bytes Take(size_t n) {
    Bytes out(n);
    Fill(out);
    return out;
  }
};

// Operating-system randomness via libcrypto.
class SystemRandom final : public RandomSource {
 public:
  void Fill(std::span<uint8_t> out) override;
};

// Reproducible stream: SHAKE256("acetsm-drbg-v1" || seed as 8-byte
// big-endian), consumed front to back. Used for golden TAP blobs; never for
// production sealing.
class DeterministicRandom final : public RandomSource {
 public:
  explicit DeterministicRandom(uint64_t seed);
  void Fill(std::span<uint8_t> out) override;

 private:
  Bytes input_;
  Bytes stream_;
  size_t used_ = 0;
};

}  // namespace acetsm

#endif  // ACETSM_ATTESTATION_RANDOM_H_
