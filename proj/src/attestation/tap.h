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

#ifndef ACETSM_ATTESTATION_TAP_H_
#define ACETSM_ATTESTATION_TAP_H_

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "attestation/kem.h"
#include "attestation/measurement.h"
#include "attestation/random.h"
#include "common/bytes.h"
#include "common/status.h"

namespace acetsm {

// Wire layout (all integers big-endian):
//   "ATAP" | version u16 | lockbox_count u16
//   lockbox_count x { algorithm u16 | key_len u32 | encapsulated_key }
//   nonce[12] | ct_len u32 | ciphertext || tag
// encapsulated_key = kem_ciphertext || AES-256-GCM(kek, 0^12, aad, tap_key)
// with kek = HKDF-SHA384(kem_secret, "", "acetsm tap kek v1" || alg, 32) and
// aad = "ATAP-LOCKBOX" || alg. Payload AAD is "ATAP" || version.
inline constexpr uint16_t kTapVersion = 1;
inline constexpr size_t kTapMaxLockboxes = 16;
inline constexpr size_t kTapMaxBytes = 1 << 20;
inline constexpr size_t kTapKeyBytes = 32;
inline constexpr size_t kTapWrappedKeyBytes = kTapKeyBytes + crypto::kGcmTagBytes;

struct TapSecret {
  uint32_t index;
  Bytes value;
  bool operator==(const TapSecret&) const = default;
};

struct TapPayload {
  MeasurementRegisters reference;
  std::vector<TapSecret> secrets;

  bool operator==(const TapPayload&) const = default;
  Bytes Serialize() const;
  static Result<TapPayload> Deserialize(ByteSpan data);

  // Owner-facing text form:
  //   acetsm-tap-payload v1
  //   pcr_code_data <96 hex>
  //   pcr_fdt <96 hex>
  //   pcr_boot_hart <96 hex>
  //   secret <index> <hex>
  std::string ToText() const;
  static Result<TapPayload> FromText(std::string_view text);
};

struct Lockbox {
  uint16_t algorithm_id;  // may name an algorithm this build lacks
  Bytes encapsulated_key;
};

struct TapBlob {
  uint16_t version = kTapVersion;
  std::vector<Lockbox> lockboxes;
  std::array<uint8_t, crypto::kGcmNonceBytes> nonce{};
  Bytes ciphertext;  // includes the trailing tag

  Bytes Serialize() const;
  size_t serialized_size() const;
  // Header and lockbox listing. Never includes plaintext or key material.
  std::string Describe() const;
};

// Reads `len` bytes at `offset` from wherever the blob lives. Lets the TSM
// validate each chunk's address before touching it.
using TapFetch = std::function<Result<Bytes>(uint64_t offset, size_t len)>;

Result<TapBlob> ParseTap(const TapFetch& fetch);
Result<TapBlob> ParseTap(ByteSpan data);  // trailing bytes are a ParseError

Result<TapBlob> TapCreate(const TapPayload& payload,
                          const std::vector<KemPublicKey>& recipients,
                          RandomSource& rng);

// Tries each lockbox whose algorithm has a held key, in blob order.
Result<TapPayload> TapUnseal(const TapBlob& blob, const TsmAttestationKey& key);

// Releases secrets only when all three registers match.
Result<std::vector<TapSecret>> VerifyLocalAttestation(
    const MeasurementRegisters& measured, const TapPayload& payload);

}  // namespace acetsm

#endif  // ACETSM_ATTESTATION_TAP_H_
