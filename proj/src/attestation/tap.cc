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

#include "attestation/tap.h"

#include <algorithm>
#include <charconv>
#include <set>
#include <sstream>

#include "attestation/crypto.h"

namespace acetsm {
namespace {

constexpr std::string_view kMagic = "ATAP";
constexpr std::string_view kLockboxAad = "ATAP-LOCKBOX";
constexpr std::string_view kKekInfo = "acetsm tap kek v1";
constexpr std::string_view kPayloadHeader = "acetsm-tap-payload v1";

Bytes PayloadAad(uint16_t version) {
  Bytes aad(kMagic.begin(), kMagic.end());
  PutBe16(aad, version);
  return aad;
}

Bytes LockboxAad(uint16_t alg) {
  Bytes aad(kLockboxAad.begin(), kLockboxAad.end());
  PutBe16(aad, alg);
  return aad;
}

Bytes Kek(ByteSpan kem_secret, uint16_t alg) {
  Bytes info(kKekInfo.begin(), kKekInfo.end());
  PutBe16(info, alg);
  return crypto::HkdfSha384(kem_secret, {}, info, kTapKeyBytes);
}

Status ParseError(std::string message) {
  return MakeError(ErrorCode::kParseError, "tap: " + std::move(message));
}

uint16_t Be16(ByteSpan b) { return static_cast<uint16_t>(b[0] << 8 | b[1]); }

uint32_t Be32(ByteSpan b) {
  return static_cast<uint32_t>(b[0]) << 24 | static_cast<uint32_t>(b[1]) << 16 |
         static_cast<uint32_t>(b[2]) << 8 | b[3];
}

// Cursor over a fetch callback; enforces the global size cap.
class FetchCursor {
 public:
  explicit FetchCursor(const TapFetch& fetch) : fetch_(fetch) {}

  Result<Bytes> Take(size_t len, const char* what) {
    if (len > kTapMaxBytes || offset_ + len > kTapMaxBytes) {
      return ParseError(std::string(what) + " exceeds size limit");
    }
    auto bytes = fetch_(offset_, len);
    if (!bytes.ok()) {
      if (bytes.code() == ErrorCode::kParseError) return bytes.status();
      // Propagate address errors unchanged; truncation shows as ParseError.
      if (bytes.code() == ErrorCode::kInvalidAddress) return bytes.status();
      return ParseError(std::string("truncated at ") + what);
    }
    if (bytes->size() != len) return ParseError(std::string("truncated at ") + what);
    offset_ += len;
    return bytes;
  }

  uint64_t offset() const { return offset_; }

 private:
  const TapFetch& fetch_;
  uint64_t offset_ = 0;
};

}  // namespace

Bytes TapPayload::Serialize() const {
  Bytes out;
  out.insert(out.end(), reference.code_data.begin(), reference.code_data.end());
  out.insert(out.end(), reference.fdt.begin(), reference.fdt.end());
  out.insert(out.end(), reference.boot_hart.begin(), reference.boot_hart.end());
  PutBe16(out, static_cast<uint16_t>(secrets.size()));
  for (const auto& secret : secrets) {
    PutBe32(out, secret.index);
    PutBe32(out, static_cast<uint32_t>(secret.value.size()));
    out.insert(out.end(), secret.value.begin(), secret.value.end());
  }
  return out;
}

Result<TapPayload> TapPayload::Deserialize(ByteSpan data) {
  ByteReader reader(data);
  TapPayload payload;
  for (Sha384Digest* digest : {&payload.reference.code_data,
                               &payload.reference.fdt,
                               &payload.reference.boot_hart}) {
    ByteSpan raw;
    if (!reader.ReadBytes(digest->size(), raw)) {
      return ParseError("payload truncated in measurements");
    }
    std::copy(raw.begin(), raw.end(), digest->begin());
  }
  uint16_t count = 0;
  if (!reader.ReadU16(count)) return ParseError("payload missing secret count");
  std::set<uint32_t> seen;
  for (uint16_t i = 0; i < count; ++i) {
    uint32_t index = 0, len = 0;
    ByteSpan value;
    if (!reader.ReadU32(index) || !reader.ReadU32(len) ||
        !reader.ReadBytes(len, value)) {
      return ParseError("payload truncated in secret list");
    }
    if (!seen.insert(index).second) {
      return ParseError("duplicate secret index " + std::to_string(index));
    }
    payload.secrets.push_back({index, Bytes(value.begin(), value.end())});
  }
  if (!reader.done()) return ParseError("trailing bytes after payload");
  return payload;
}

std::string TapPayload::ToText() const {
  std::ostringstream out;
  out << kPayloadHeader << "\n";
  out << "pcr_code_data " << ToHex(reference.code_data) << "\n";
  out << "pcr_fdt " << ToHex(reference.fdt) << "\n";
  out << "pcr_boot_hart " << ToHex(reference.boot_hart) << "\n";
  for (const auto& secret : secrets) {
    out << "secret " << secret.index << " " << ToHex(secret.value) << "\n";
  }
  return out.str();
}

Result<TapPayload> TapPayload::FromText(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  TapPayload payload;
  bool header = false;
  int digests = 0;
  std::set<uint32_t> seen;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string key;
    if (!(fields >> key)) continue;
    auto error = [&](const std::string& what) {
      return ParseError("payload line " + std::to_string(line_no) + ": " + what);
    };
    if (!header) {
      std::string version;
      fields >> version;
      if (key + " " + version != kPayloadHeader) return error("bad header");
      header = true;
      continue;
    }
    std::string a, b, extra;
    fields >> a >> b >> extra;
    if (!extra.empty()) return error("unexpected field");
    if (key == "pcr_code_data" || key == "pcr_fdt" || key == "pcr_boot_hart") {
      auto bytes = FromHex(a);
      if (!bytes || bytes->size() != crypto::kSha384Bytes || !b.empty()) {
        return error("digest must be 96 hex digits");
      }
      Sha384Digest& target = key == "pcr_code_data" ? payload.reference.code_data
                             : key == "pcr_fdt"     ? payload.reference.fdt
                                                    : payload.reference.boot_hart;
      std::copy(bytes->begin(), bytes->end(), target.begin());
      ++digests;
    } else if (key == "secret") {
      uint32_t index = 0;
      auto [ptr, ec] = std::from_chars(a.data(), a.data() + a.size(), index);
      if (ec != std::errc() || ptr != a.data() + a.size()) {
        return error("bad secret index");
      }
      auto value = FromHex(b);
      if (!value) return error("bad secret hex");
      if (!seen.insert(index).second) return error("duplicate secret index");
      payload.secrets.push_back({index, std::move(*value)});
    } else {
      return error("unknown key '" + key + "'");
    }
  }
  if (!header) return ParseError("payload: missing header");
  if (digests != 3) return ParseError("payload: need all three pcr lines");
  return payload;
}

size_t TapBlob::serialized_size() const {
  size_t n = 4 + 2 + 2;
  for (const auto& box : lockboxes) n += 2 + 4 + box.encapsulated_key.size();
  return n + nonce.size() + 4 + ciphertext.size();
}

Bytes TapBlob::Serialize() const {
  Bytes out(kMagic.begin(), kMagic.end());
  PutBe16(out, version);
  PutBe16(out, static_cast<uint16_t>(lockboxes.size()));
  for (const auto& box : lockboxes) {
    PutBe16(out, box.algorithm_id);
    PutBe32(out, static_cast<uint32_t>(box.encapsulated_key.size()));
    out.insert(out.end(), box.encapsulated_key.begin(),
               box.encapsulated_key.end());
  }
  out.insert(out.end(), nonce.begin(), nonce.end());
  PutBe32(out, static_cast<uint32_t>(ciphertext.size()));
  out.insert(out.end(), ciphertext.begin(), ciphertext.end());
  return out;
}

std::string TapBlob::Describe() const {
  std::ostringstream out;
  out << "magic ATAP\nversion " << version << "\nlockboxes "
      << lockboxes.size() << "\n";
  for (size_t i = 0; i < lockboxes.size(); ++i) {
    const auto& box = lockboxes[i];
    auto alg = KemFromWireId(box.algorithm_id);
    char id[8];
    std::snprintf(id, sizeof(id), "%04x", box.algorithm_id);
    out << "lockbox " << i << " algorithm 0x" << id << " "
        << (alg ? KemName(*alg) : "unknown") << " key_bytes "
        << box.encapsulated_key.size() << "\n";
  }
  out << "nonce " << ToHex(nonce) << "\nciphertext_bytes " << ciphertext.size()
      << "\ntotal_bytes " << serialized_size() << "\n";
  return out.str();
}

Result<TapBlob> ParseTap(const TapFetch& fetch) {
  FetchCursor cursor(fetch);
  ACETSM_ASSIGN_OR_RETURN(Bytes header, cursor.Take(8, "header"));
  if (!std::equal(kMagic.begin(), kMagic.end(), header.begin())) {
    return ParseError("bad magic");
  }
  TapBlob blob;
  blob.version = Be16(ByteSpan(header).subspan(4));
  if (blob.version != kTapVersion) {
    return ParseError("unsupported version " + std::to_string(blob.version));
  }
  const uint16_t count = Be16(ByteSpan(header).subspan(6));
  if (count == 0 || count > kTapMaxLockboxes) {
    return ParseError("lockbox count " + std::to_string(count));
  }
  for (uint16_t i = 0; i < count; ++i) {
    ACETSM_ASSIGN_OR_RETURN(Bytes head, cursor.Take(6, "lockbox header"));
    Lockbox box;
    box.algorithm_id = Be16(head);
    const uint32_t len = Be32(ByteSpan(head).subspan(2));
    if (auto alg = KemFromWireId(box.algorithm_id)) {
      const size_t expected =
          FindKemProvider(*alg)->ciphertext_bytes() + kTapWrappedKeyBytes;
      if (len != expected) {
        return ParseError("lockbox " + std::to_string(i) + " key length " +
                          std::to_string(len) + ", expected " +
                          std::to_string(expected));
      }
    }
    ACETSM_ASSIGN_OR_RETURN(box.encapsulated_key, cursor.Take(len, "lockbox key"));
    blob.lockboxes.push_back(std::move(box));
  }
  ACETSM_ASSIGN_OR_RETURN(Bytes nonce, cursor.Take(blob.nonce.size(), "nonce"));
  std::copy(nonce.begin(), nonce.end(), blob.nonce.begin());
  ACETSM_ASSIGN_OR_RETURN(Bytes ct_len, cursor.Take(4, "ciphertext length"));
  const uint32_t len = Be32(ct_len);
  if (len < crypto::kGcmTagBytes) return ParseError("ciphertext shorter than tag");
  ACETSM_ASSIGN_OR_RETURN(blob.ciphertext, cursor.Take(len, "ciphertext"));
  return blob;
}

Result<TapBlob> ParseTap(ByteSpan data) {
  TapFetch fetch = [data](uint64_t offset, size_t len) -> Result<Bytes> {
    if (offset > data.size() || len > data.size() - offset) {
      return ParseError("truncated");
    }
    auto part = data.subspan(offset, len);
    return Bytes(part.begin(), part.end());
  };
  ACETSM_ASSIGN_OR_RETURN(TapBlob blob, ParseTap(fetch));
  if (blob.serialized_size() != data.size()) {
    return ParseError("trailing bytes after blob");
  }
  return blob;
}

Result<TapBlob> TapCreate(const TapPayload& payload,
                          const std::vector<KemPublicKey>& recipients,
                          RandomSource& rng) {
  if (recipients.empty()) {
    return MakeError(ErrorCode::kUnsupportedAlgorithm, "tap: no recipient keys");
  }
  if (recipients.size() > kTapMaxLockboxes) {
    return MakeError(ErrorCode::kInvalidParam, "tap: too many recipients");
  }
  for (const auto& r : recipients) {
    if (FindKemProvider(r.algorithm) == nullptr) {
      return MakeError(ErrorCode::kUnsupportedAlgorithm, "tap: unknown KEM");
    }
  }
  Bytes tap_key = rng.Take(kTapKeyBytes);
  TapBlob blob;
  rng.Fill(blob.nonce);
  for (const auto& recipient : recipients) {
    const auto alg = static_cast<uint16_t>(recipient.algorithm);
    ACETSM_ASSIGN_OR_RETURN(
        auto enc, FindKemProvider(recipient.algorithm)->Encapsulate(recipient.key, rng));
    Bytes kek = Kek(enc.shared_secret, alg);
    const std::array<uint8_t, crypto::kGcmNonceBytes> zero_nonce{};
    Bytes wrapped = crypto::AesGcm256Seal(kek, zero_nonce, LockboxAad(alg), tap_key);
    Lockbox box{alg, std::move(enc.ciphertext)};
    box.encapsulated_key.insert(box.encapsulated_key.end(), wrapped.begin(),
                                wrapped.end());
    blob.lockboxes.push_back(std::move(box));
    crypto::SecureWipe(kek);
    crypto::SecureWipe(enc.shared_secret);
  }
  Bytes plain = payload.Serialize();
  blob.ciphertext =
      crypto::AesGcm256Seal(tap_key, blob.nonce, PayloadAad(blob.version), plain);
  crypto::SecureWipe(plain);
  crypto::SecureWipe(tap_key);
  return blob;
}

Result<TapPayload> TapUnseal(const TapBlob& blob, const TsmAttestationKey& key) {
  for (const auto& box : blob.lockboxes) {
    auto alg = KemFromWireId(box.algorithm_id);
    if (!alg) continue;
    const KemPrivateKey* held = key.Find(*alg);
    if (held == nullptr) continue;
    const KemProvider* provider = FindKemProvider(*alg);
    const size_t kem_len = provider->ciphertext_bytes();
    if (box.encapsulated_key.size() != kem_len + kTapWrappedKeyBytes) continue;
    ByteSpan all(box.encapsulated_key);
    auto secret = provider->Decapsulate(*held, all.first(kem_len));
    if (!secret.ok()) continue;
    Bytes kek = Kek(*secret, box.algorithm_id);
    crypto::SecureWipe(*secret);
    const std::array<uint8_t, crypto::kGcmNonceBytes> zero_nonce{};
    auto tap_key = crypto::AesGcm256Open(kek, zero_nonce,
                                         LockboxAad(box.algorithm_id),
                                         all.subspan(kem_len));
    crypto::SecureWipe(kek);
    // Lockbox for a different device with the same algorithm: keep looking.
    if (!tap_key.ok()) continue;
    auto plain = crypto::AesGcm256Open(*tap_key, blob.nonce,
                                       PayloadAad(blob.version), blob.ciphertext);
    crypto::SecureWipe(*tap_key);
    if (!plain.ok()) {
      return MakeError(ErrorCode::kAuthFailure, "tap: payload tag mismatch");
    }
    auto payload = TapPayload::Deserialize(*plain);
    crypto::SecureWipe(*plain);
    return payload;
  }
  return MakeError(ErrorCode::kNoMatchingLockbox,
                   "tap: no lockbox opens with the held keys");
}

Result<std::vector<TapSecret>> VerifyLocalAttestation(
    const MeasurementRegisters& measured, const TapPayload& payload) {
  std::string mismatched;
  if (measured.code_data != payload.reference.code_data) mismatched += " code_data";
  if (measured.fdt != payload.reference.fdt) mismatched += " fdt";
  if (measured.boot_hart != payload.reference.boot_hart) mismatched += " boot_hart";
  if (!mismatched.empty()) {
    return MakeError(ErrorCode::kAttestationFailed,
                     "measurement mismatch:" + mismatched);
  }
  return payload.secrets;
}

}  // namespace acetsm
