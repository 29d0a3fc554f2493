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

// Thin wrappers over OpenSSL libcrypto for the primitives the attestation
// path needs. All functions are stateless and thread-safe.

#ifndef ACETSM_ATTESTATION_CRYPTO_H_
#define ACETSM_ATTESTATION_CRYPTO_H_

#include <array>
#include <cstdint>

#include "common/bytes.h"
#include "common/status.h"

namespace acetsm::crypto {

inline constexpr size_t kSha384Bytes = 48;
using Sha384Digest = std::array<uint8_t, kSha384Bytes>;

inline constexpr size_t kAesKeyBytes = 32;
inline constexpr size_t kGcmNonceBytes = 12;
inline constexpr size_t kGcmTagBytes = 16;
inline constexpr size_t kX25519Bytes = 32;

Sha384Digest Sha384(ByteSpan data);

// Streaming SHA-384.
class Sha384Hasher {
 public:
  Sha384Hasher();
  ~Sha384Hasher();
  Sha384Hasher(const Sha384Hasher&) = delete;
  Sha384Hasher& operator=(const Sha384Hasher&) = delete;

  void Update(ByteSpan data);
  Sha384Digest Finish();

 private:
  void* ctx_;  // EVP_MD_CTX
};

std::array<uint8_t, 32> Sha3_256(ByteSpan data);
std::array<uint8_t, 64> Sha3_512(ByteSpan data);
Bytes Shake128(ByteSpan data, size_t out_len);
Bytes Shake256(ByteSpan data, size_t out_len);

Bytes HkdfSha384(ByteSpan ikm, ByteSpan salt, ByteSpan info, size_t out_len);

// Returns ciphertext || 16-byte tag.
Bytes AesGcm256Seal(ByteSpan key, ByteSpan nonce, ByteSpan aad,
                    ByteSpan plaintext);
// AuthFailure if the tag does not verify.
Result<Bytes> AesGcm256Open(ByteSpan key, ByteSpan nonce, ByteSpan aad,
                            ByteSpan sealed);

Result<Bytes> X25519PublicKey(ByteSpan private_key);
// Fails on a low-order peer key (all-zero shared secret).
Result<Bytes> X25519SharedSecret(ByteSpan private_key, ByteSpan peer_public);

// Overwrites the buffer in a way the optimizer cannot elide.
void SecureWipe(Bytes& buffer);

}  // namespace acetsm::crypto

#endif  // ACETSM_ATTESTATION_CRYPTO_H_
