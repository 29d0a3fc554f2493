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

// ML-KEM-768 (FIPS 203) key encapsulation. Deterministic internal entry
// points take the seeds explicitly; callers supply randomness.

#ifndef ACETSM_ATTESTATION_MLKEM768_H_
#define ACETSM_ATTESTATION_MLKEM768_H_

#include <array>
#include <cstdint>

#include "common/bytes.h"
#include "common/status.h"

namespace acetsm::mlkem768 {

inline constexpr size_t kSeedBytes = 32;
inline constexpr size_t kEncapsulationKeyBytes = 1184;
inline constexpr size_t kDecapsulationKeyBytes = 2400;
inline constexpr size_t kCiphertextBytes = 1088;
inline constexpr size_t kSharedSecretBytes = 32;

using Seed = std::array<uint8_t, kSeedBytes>;
using SharedSecret = std::array<uint8_t, kSharedSecretBytes>;

struct KeyPair {
  Bytes encapsulation_key;
  Bytes decapsulation_key;
};

struct Encapsulation {
  Bytes ciphertext;
  SharedSecret shared_secret;
};

KeyPair KeyGen(const Seed& d, const Seed& z);

// InvalidParam if the encapsulation key fails the length or modulus check.
Result<Encapsulation> Encapsulate(ByteSpan encapsulation_key, const Seed& m);

// InvalidParam on malformed key/ciphertext sizes or a key hash mismatch.
// A wrong ciphertext yields the implicit-rejection secret, not an error.
Result<SharedSecret> Decapsulate(ByteSpan decapsulation_key,
                                 ByteSpan ciphertext);

}  // namespace acetsm::mlkem768

#endif  // ACETSM_ATTESTATION_MLKEM768_H_
