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

#include "attestation/kem.h"

#include <algorithm>
#include <string>

#include "attestation/crypto.h"
#include "attestation/mlkem768.h"

namespace acetsm {
namespace {

constexpr std::string_view kTestKemInfo = "acetsm testkem v1";

class TestKemProvider final : public KemProvider {
 public:
  KemAlgorithm algorithm() const override { return KemAlgorithm::kTestKem; }
  size_t ciphertext_bytes() const override { return crypto::kX25519Bytes; }

  Result<KemPublicKey> PublicKeyOf(const KemPrivateKey& key) const override {
    ACETSM_ASSIGN_OR_RETURN(Bytes pub, crypto::X25519PublicKey(key.key()));
    return KemPublicKey{KemAlgorithm::kTestKem, std::move(pub)};
  }

  Result<KemEncapsulation> Encapsulate(ByteSpan public_key,
                                       RandomSource& rng) const override {
    if (public_key.size() != crypto::kX25519Bytes) {
      return MakeError(ErrorCode::kInvalidParam, "testkem public key size");
    }
    Bytes ephemeral = rng.Take(crypto::kX25519Bytes);
    ACETSM_ASSIGN_OR_RETURN(Bytes ephemeral_pub,
                            crypto::X25519PublicKey(ephemeral));
    ACETSM_ASSIGN_OR_RETURN(Bytes dh,
                            crypto::X25519SharedSecret(ephemeral, public_key));
    KemEncapsulation out;
    out.shared_secret = Derive(dh, ephemeral_pub, public_key);
    out.ciphertext = std::move(ephemeral_pub);
    crypto::SecureWipe(ephemeral);
    crypto::SecureWipe(dh);
    return out;
  }

  Result<Bytes> Decapsulate(const KemPrivateKey& key,
                            ByteSpan ciphertext) const override {
    if (ciphertext.size() != crypto::kX25519Bytes) {
      return MakeError(ErrorCode::kInvalidParam, "testkem ciphertext size");
    }
    ACETSM_ASSIGN_OR_RETURN(Bytes pub, crypto::X25519PublicKey(key.key()));
    ACETSM_ASSIGN_OR_RETURN(Bytes dh,
                            crypto::X25519SharedSecret(key.key(), ciphertext));
    Bytes secret = Derive(dh, ciphertext, pub);
    crypto::SecureWipe(dh);
    return secret;
  }

 private:
  // HKDF-SHA384(ikm = dh, salt = ephemeral_pub || recipient_pub).
  static Bytes Derive(ByteSpan dh, ByteSpan ephemeral_pub,
                      ByteSpan recipient_pub) {
    Bytes salt(ephemeral_pub.begin(), ephemeral_pub.end());
    salt.insert(salt.end(), recipient_pub.begin(), recipient_pub.end());
    const Bytes info(kTestKemInfo.begin(), kTestKemInfo.end());
    return crypto::HkdfSha384(dh, salt, info, 32);
  }
};

class MlKem768Provider final : public KemProvider {
 public:
  KemAlgorithm algorithm() const override { return KemAlgorithm::kMlKem768; }
  size_t ciphertext_bytes() const override { return mlkem768::kCiphertextBytes; }

  Result<KemPublicKey> PublicKeyOf(const KemPrivateKey& key) const override {
    if (key.key().size() != mlkem768::kDecapsulationKeyBytes) {
      return MakeError(ErrorCode::kInvalidParam, "ML-KEM-768 key size");
    }
    // dk = dk_pke || ek || H(ek) || z
    const auto ek = key.key().subspan(384 * 3, mlkem768::kEncapsulationKeyBytes);
    return KemPublicKey{KemAlgorithm::kMlKem768, Bytes(ek.begin(), ek.end())};
  }

  Result<KemEncapsulation> Encapsulate(ByteSpan public_key,
                                       RandomSource& rng) const override {
    mlkem768::Seed m{};
    rng.Fill(m);
    ACETSM_ASSIGN_OR_RETURN(auto enc, mlkem768::Encapsulate(public_key, m));
    m.fill(0);
    return KemEncapsulation{
        std::move(enc.ciphertext),
        Bytes(enc.shared_secret.begin(), enc.shared_secret.end())};
  }

  Result<Bytes> Decapsulate(const KemPrivateKey& key,
                            ByteSpan ciphertext) const override {
    ACETSM_ASSIGN_OR_RETURN(auto secret,
                            mlkem768::Decapsulate(key.key(), ciphertext));
    return Bytes(secret.begin(), secret.end());
  }
};

const TestKemProvider kTestKem;
const MlKem768Provider kMlKem768;

// Fixture material. Never used outside simulation and tests.
constexpr std::string_view kBuiltinTestKemPrivate =
    "a8abababababababababababababababababababababababababababababab6b";
constexpr std::string_view kBuiltinMlKemSeedD =
    "4163455f54534d5f61747465737461746f6e5f6b65795f736565645f645f3031";
constexpr std::string_view kBuiltinMlKemSeedZ =
    "4163455f54534d5f61747465737461746f6e5f6b65795f736565645f7a5f3031";

template <size_t N>
std::array<uint8_t, N> HexArray(std::string_view text) {
  const Bytes bytes = *FromHex(text);
  std::array<uint8_t, N> out{};
  std::copy_n(bytes.begin(), N, out.begin());
  return out;
}

KemPrivateKey BuiltinKey(KemAlgorithm algorithm) {
  if (algorithm == KemAlgorithm::kTestKem) {
    return KemPrivateKey(algorithm, *FromHex(kBuiltinTestKemPrivate));
  }
  auto pair = mlkem768::KeyGen(HexArray<32>(kBuiltinMlKemSeedD),
                               HexArray<32>(kBuiltinMlKemSeedZ));
  return KemPrivateKey(algorithm, std::move(pair.decapsulation_key));
}

}  // namespace

KemPrivateKey::~KemPrivateKey() { crypto::SecureWipe(key_); }

std::string_view KemName(KemAlgorithm algorithm) {
  switch (algorithm) {
    case KemAlgorithm::kMlKem768: return "mlkem768";
    case KemAlgorithm::kTestKem: return "testkem";
  }
  return "unknown";
}

std::optional<KemAlgorithm> ParseKemName(std::string_view name) {
  if (name == "mlkem768") return KemAlgorithm::kMlKem768;
  if (name == "testkem") return KemAlgorithm::kTestKem;
  return std::nullopt;
}

std::optional<KemAlgorithm> KemFromWireId(uint16_t id) {
  switch (id) {
    case static_cast<uint16_t>(KemAlgorithm::kMlKem768):
      return KemAlgorithm::kMlKem768;
    case static_cast<uint16_t>(KemAlgorithm::kTestKem):
      return KemAlgorithm::kTestKem;
    default:
      return std::nullopt;
  }
}

const KemProvider* FindKemProvider(KemAlgorithm algorithm) {
  switch (algorithm) {
    case KemAlgorithm::kMlKem768: return &kMlKem768;
    case KemAlgorithm::kTestKem: return &kTestKem;
  }
  return nullptr;
}

std::vector<KemAlgorithm> AvailableKems() {
  return {KemAlgorithm::kTestKem, KemAlgorithm::kMlKem768};
}

Result<KemPrivateKey> GenerateKemKey(KemAlgorithm algorithm, RandomSource& rng) {
  switch (algorithm) {
    case KemAlgorithm::kTestKem:
      return KemPrivateKey(algorithm, rng.Take(crypto::kX25519Bytes));
    case KemAlgorithm::kMlKem768: {
      mlkem768::Seed d{}, z{};
      rng.Fill(d);
      rng.Fill(z);
      auto pair = mlkem768::KeyGen(d, z);
      return KemPrivateKey(algorithm, std::move(pair.decapsulation_key));
    }
  }
  return MakeError(ErrorCode::kUnsupportedAlgorithm, "unknown KEM");
}

TsmAttestationKey TsmAttestationKey::Builtin() {
  return BuiltinSubset(AvailableKems());
}

TsmAttestationKey TsmAttestationKey::BuiltinSubset(
    const std::vector<KemAlgorithm>& algs) {
  std::vector<KemPrivateKey> keys;
  for (KemAlgorithm alg : algs) keys.push_back(BuiltinKey(alg));
  return TsmAttestationKey(std::move(keys));
}

const KemPrivateKey* TsmAttestationKey::Find(KemAlgorithm algorithm) const {
  for (const auto& key : keys_) {
    if (key.algorithm() == algorithm) return &key;
  }
  return nullptr;
}

std::vector<KemPublicKey> TsmAttestationKey::PublicKeys() const {
  std::vector<KemPublicKey> out;
  for (const auto& key : keys_) {
    auto pub = FindKemProvider(key.algorithm())->PublicKeyOf(key);
    if (pub.ok()) out.push_back(std::move(*pub));
  }
  return out;
}

}  // namespace acetsm
