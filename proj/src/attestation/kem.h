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

#ifndef ACETSM_ATTESTATION_KEM_H_
#define ACETSM_ATTESTATION_KEM_H_

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "attestation/random.h"
#include "common/bytes.h"
#include "common/status.h"

namespace acetsm {

// Lockbox algorithm identifiers as they appear on the wire.
enum class KemAlgorithm : uint16_t {
  kMlKem768 = 0x0001,
  // X25519 + HKDF-SHA384. Lets the suite run without a post-quantum provider.
  kTestKem = 0x8001,
};

std::string_view KemName(KemAlgorithm algorithm);
std::optional<KemAlgorithm> ParseKemName(std::string_view name);
std::optional<KemAlgorithm> KemFromWireId(uint16_t id);

struct KemPublicKey {
  KemAlgorithm algorithm;
  Bytes key;
};

// Private key material. Wiped on destruction; deliberately has no printer.
class KemPrivateKey {
 public:
  KemPrivateKey(KemAlgorithm algorithm, Bytes key)
      : algorithm_(algorithm), key_(std::move(key)) {}
  ~KemPrivateKey();
  KemPrivateKey(const KemPrivateKey&) = default;
  KemPrivateKey& operator=(const KemPrivateKey&) = default;
  KemPrivateKey(KemPrivateKey&&) = default;
  KemPrivateKey& operator=(KemPrivateKey&&) = default;

  KemAlgorithm algorithm() const { return algorithm_; }
  ByteSpan key() const { return key_; }

 private:
  KemAlgorithm algorithm_;
  Bytes key_;
};

struct KemEncapsulation {
  Bytes ciphertext;
  Bytes shared_secret;
};

class KemProvider {
 public:
  virtual ~KemProvider() = default;
  virtual KemAlgorithm algorithm() const = 0;
  virtual size_t ciphertext_bytes() const = 0;
  virtual Result<KemPublicKey> PublicKeyOf(const KemPrivateKey& key) const = 0;
  virtual Result<KemEncapsulation> Encapsulate(ByteSpan public_key,
                                               RandomSource& rng) const = 0;
  virtual Result<Bytes> Decapsulate(const KemPrivateKey& key,
                                    ByteSpan ciphertext) const = 0;
};

// nullptr for algorithms this build does not provide.
const KemProvider* FindKemProvider(KemAlgorithm algorithm);
std::vector<KemAlgorithm> AvailableKems();

// Key pair generation from explicit randomness.
Result<KemPrivateKey> GenerateKemKey(KemAlgorithm algorithm, RandomSource& rng);

// The TSM's attestation key: one private key per supported algorithm.
class TsmAttestationKey {
 public:
  TsmAttestationKey() = default;
  explicit TsmAttestationKey(std::vector<KemPrivateKey> keys)
      : keys_(std::move(keys)) {}

  // Hard-coded fixture keys (the evaluation platform has no root of trust).
  static TsmAttestationKey Builtin();
  static TsmAttestationKey BuiltinSubset(const std::vector<KemAlgorithm>& algs);

  const std::vector<KemPrivateKey>& keys() const { return keys_; }
  const KemPrivateKey* Find(KemAlgorithm algorithm) const;
  std::vector<KemPublicKey> PublicKeys() const;

 private:
  std::vector<KemPrivateKey> keys_;
};

}  // namespace acetsm

#endif  // ACETSM_ATTESTATION_KEM_H_
