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

#include "attestation/crypto.h"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/kdf.h>

#include <memory>
#include <stdexcept>

namespace acetsm::crypto {
namespace {

struct MdCtxDeleter {
  void operator()(EVP_MD_CTX* ctx) const { EVP_MD_CTX_free(ctx); }
};
struct CipherCtxDeleter {
  void operator()(EVP_CIPHER_CTX* ctx) const { EVP_CIPHER_CTX_free(ctx); }
};
struct PkeyDeleter {
  void operator()(EVP_PKEY* key) const { EVP_PKEY_free(key); }
};
struct PkeyCtxDeleter {
  void operator()(EVP_PKEY_CTX* ctx) const { EVP_PKEY_CTX_free(ctx); }
};

using MdCtx = std::unique_ptr<EVP_MD_CTX, MdCtxDeleter>;
using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter>;
using Pkey = std::unique_ptr<EVP_PKEY, PkeyDeleter>;
using PkeyCtx = std::unique_ptr<EVP_PKEY_CTX, PkeyCtxDeleter>;

// Failures here mean libcrypto itself is broken, not bad input.
void Check(int rc, const char* what) {
  if (rc != 1) throw std::runtime_error(std::string("libcrypto: ") + what);
}

Bytes Digest(const EVP_MD* md, ByteSpan data, size_t xof_len) {
  MdCtx ctx(EVP_MD_CTX_new());
  Check(EVP_DigestInit_ex(ctx.get(), md, nullptr), "digest init");
  Check(EVP_DigestUpdate(ctx.get(), data.data(), data.size()), "digest update");
  if (xof_len > 0) {
    Bytes out(xof_len);
    Check(EVP_DigestFinalXOF(ctx.get(), out.data(), out.size()), "xof final");
    return out;
  }
  Bytes out(EVP_MD_size(md));
  unsigned int len = 0;
  Check(EVP_DigestFinal_ex(ctx.get(), out.data(), &len), "digest final");
  return out;
}

template <size_t N>
std::array<uint8_t, N> ToArray(const Bytes& bytes) {
  std::array<uint8_t, N> out{};
  std::copy_n(bytes.begin(), N, out.begin());
  return out;
}

}  // namespace

Sha384Digest Sha384(ByteSpan data) {
  return ToArray<kSha384Bytes>(Digest(EVP_sha384(), data, 0));
}

Sha384Hasher::Sha384Hasher() : ctx_(EVP_MD_CTX_new()) {
  Check(EVP_DigestInit_ex(static_cast<EVP_MD_CTX*>(ctx_), EVP_sha384(), nullptr),
        "sha384 init");
}

Sha384Hasher::~Sha384Hasher() {
  EVP_MD_CTX_free(static_cast<EVP_MD_CTX*>(ctx_));
}

void Sha384Hasher::Update(ByteSpan data) {
  Check(EVP_DigestUpdate(static_cast<EVP_MD_CTX*>(ctx_), data.data(),
                         data.size()),
        "sha384 update");
}

Sha384Digest Sha384Hasher::Finish() {
  Sha384Digest out{};
  unsigned int len = 0;
  Check(EVP_DigestFinal_ex(static_cast<EVP_MD_CTX*>(ctx_), out.data(), &len),
        "sha384 final");
  return out;
}

std::array<uint8_t, 32> Sha3_256(ByteSpan data) {
  return ToArray<32>(Digest(EVP_sha3_256(), data, 0));
}

std::array<uint8_t, 64> Sha3_512(ByteSpan data) {
  return ToArray<64>(Digest(EVP_sha3_512(), data, 0));
}

Bytes Shake128(ByteSpan data, size_t out_len) {
  return Digest(EVP_shake128(), data, out_len);
}

Bytes Shake256(ByteSpan data, size_t out_len) {
  return Digest(EVP_shake256(), data, out_len);
}

Bytes HkdfSha384(ByteSpan ikm, ByteSpan salt, ByteSpan info, size_t out_len) {
  PkeyCtx ctx(EVP_PKEY_CTX_new_id(EVP_PKEY_HKDF, nullptr));
  Check(EVP_PKEY_derive_init(ctx.get()), "hkdf init");
  Check(EVP_PKEY_CTX_set_hkdf_md(ctx.get(), EVP_sha384()), "hkdf md");
  // An empty salt is replaced by HashLen zero bytes per RFC 5869; OpenSSL
  // wants a non-null pointer either way.
  static const uint8_t kZeroSalt[kSha384Bytes] = {};
  Check(EVP_PKEY_CTX_set1_hkdf_salt(
            ctx.get(), salt.empty() ? kZeroSalt : salt.data(),
            static_cast<int>(salt.empty() ? sizeof(kZeroSalt) : salt.size())),
        "hkdf salt");
  Check(EVP_PKEY_CTX_set1_hkdf_key(ctx.get(), ikm.data(),
                                   static_cast<int>(ikm.size())),
        "hkdf key");
  Check(EVP_PKEY_CTX_add1_hkdf_info(ctx.get(), info.data(),
                                    static_cast<int>(info.size())),
        "hkdf info");
  Bytes out(out_len);
  size_t len = out_len;
  Check(EVP_PKEY_derive(ctx.get(), out.data(), &len), "hkdf derive");
  return out;
}

Bytes AesGcm256Seal(ByteSpan key, ByteSpan nonce, ByteSpan aad,
                    ByteSpan plaintext) {
  CipherCtx ctx(EVP_CIPHER_CTX_new());
  Check(EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr,
                           nullptr),
        "gcm init");
  Check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN,
                            static_cast<int>(nonce.size()), nullptr),
        "gcm ivlen");
  Check(EVP_EncryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), nonce.data()),
        "gcm key");
  int len = 0;
  if (!aad.empty()) {
    Check(EVP_EncryptUpdate(ctx.get(), nullptr, &len, aad.data(),
                            static_cast<int>(aad.size())),
          "gcm aad");
  }
  Bytes out(plaintext.size() + kGcmTagBytes);
  int written = 0;
  if (!plaintext.empty()) {
    Check(EVP_EncryptUpdate(ctx.get(), out.data(), &written, plaintext.data(),
                            static_cast<int>(plaintext.size())),
          "gcm update");
  }
  Check(EVP_EncryptFinal_ex(ctx.get(), out.data() + written, &len), "gcm final");
  Check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, kGcmTagBytes,
                            out.data() + plaintext.size()),
        "gcm tag");
  return out;
}

Result<Bytes> AesGcm256Open(ByteSpan key, ByteSpan nonce, ByteSpan aad,
                            ByteSpan sealed) {
  if (sealed.size() < kGcmTagBytes) {
    return MakeError(ErrorCode::kAuthFailure, "sealed data shorter than tag");
  }
  const size_t body = sealed.size() - kGcmTagBytes;
  CipherCtx ctx(EVP_CIPHER_CTX_new());
  Check(EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr,
                           nullptr),
        "gcm init");
  Check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN,
                            static_cast<int>(nonce.size()), nullptr),
        "gcm ivlen");
  Check(EVP_DecryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), nonce.data()),
        "gcm key");
  int len = 0;
  if (!aad.empty()) {
    Check(EVP_DecryptUpdate(ctx.get(), nullptr, &len, aad.data(),
                            static_cast<int>(aad.size())),
          "gcm aad");
  }
  Bytes out(body);
  int written = 0;
  if (body > 0) {
    Check(EVP_DecryptUpdate(ctx.get(), out.data(), &written, sealed.data(),
                            static_cast<int>(body)),
          "gcm update");
  }
  Bytes tag(sealed.begin() + body, sealed.end());
  Check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, kGcmTagBytes,
                            tag.data()),
        "gcm set tag");
  if (EVP_DecryptFinal_ex(ctx.get(), out.data() + written, &len) != 1) {
    SecureWipe(out);
    return MakeError(ErrorCode::kAuthFailure, "GCM tag mismatch");
  }
  return out;
}

Result<Bytes> X25519PublicKey(ByteSpan private_key) {
  if (private_key.size() != kX25519Bytes) {
    return MakeError(ErrorCode::kInvalidParam, "x25519 key must be 32 bytes");
  }
  Pkey key(EVP_PKEY_new_raw_private_key(EVP_PKEY_X25519, nullptr,
                                        private_key.data(), private_key.size()));
  if (!key) return MakeError(ErrorCode::kInvalidParam, "bad x25519 key");
  Bytes out(kX25519Bytes);
  size_t len = out.size();
  Check(EVP_PKEY_get_raw_public_key(key.get(), out.data(), &len), "x25519 pub");
  return out;
}

Result<Bytes> X25519SharedSecret(ByteSpan private_key, ByteSpan peer_public) {
  if (private_key.size() != kX25519Bytes || peer_public.size() != kX25519Bytes) {
    return MakeError(ErrorCode::kInvalidParam, "x25519 keys must be 32 bytes");
  }
  Pkey key(EVP_PKEY_new_raw_private_key(EVP_PKEY_X25519, nullptr,
                                        private_key.data(), private_key.size()));
  Pkey peer(EVP_PKEY_new_raw_public_key(EVP_PKEY_X25519, nullptr,
                                        peer_public.data(), peer_public.size()));
  if (!key || !peer) return MakeError(ErrorCode::kInvalidParam, "bad x25519 key");
  PkeyCtx ctx(EVP_PKEY_CTX_new(key.get(), nullptr));
  Check(EVP_PKEY_derive_init(ctx.get()), "x25519 derive init");
  Check(EVP_PKEY_derive_set_peer(ctx.get(), peer.get()), "x25519 peer");
  Bytes out(kX25519Bytes);
  size_t len = out.size();
  if (EVP_PKEY_derive(ctx.get(), out.data(), &len) != 1 || AllZero(out)) {
    return MakeError(ErrorCode::kAuthFailure, "x25519 low-order point");
  }
  return out;
}

void SecureWipe(Bytes& buffer) {
  if (!buffer.empty()) OPENSSL_cleanse(buffer.data(), buffer.size());
}

}  // namespace acetsm::crypto
