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

#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "attestation/kem.h"
#include "attestation/measurement.h"
#include "attestation/random.h"
#include "attestation/tap.h"

namespace acetsm {
namespace {

// Frozen from tests/oracles/tap_oracle.py.
constexpr char kEmptyCode[] =
    "38b060a751ac96384cd9327eb1b1e36a21fdb71114be07434c0cc7bf63f6e1da274edebfe76f65fbd51ad2f14898b95b";
constexpr char kZeroHart[] =
    "dacffdc153af32063304d417ef59c20ab20b91bc59afa914edb097fedf8bca401c4c288186efe1b5874f488e473df22c";
constexpr char kFixtureCode[] =
    "fde081bd8a5f1cea9d4bd481b783694804ed57567543b98508648f2f185ff87a9700fc396c99067b296f2d07ff324890";
constexpr char kFixtureFdt[] =
    "e70a295b5d243f3908fbc70a57465c1c25376a653e88d309a94bcdaa58b3321adbce40ec2c2cafe763f105d2a6b86468";
constexpr char kFixtureHart[] =
    "67c8aa1cde6a473f4e3426a6e7921e16dd7c9607264bd1d3ff65c1e8b43965b1762e88ce3023560e0574a0dc6fc7c2e0";
constexpr char kTestKemPub[] =
    "e3712d851a0e5d79b831c5e34ab22b41a198171de209b8b8faca23a11c624859";
constexpr char kMlKemEkSha3[] =
    "6ed5e9b7fcbdbb8605a6543a55ced0fcc05eff998f061e1d99c335eddacfa12e";

struct Fixture {
  Bytes page0, page5, fdt;
  HartArchState hart;
  std::vector<MeasuredPage> pages;

  Fixture() {
    for (int i = 0; i < 4096; ++i) page0.push_back((i * 7 + 1) & 0xff);
    page5.assign(4096, 0xa5);
    const std::string text("acetsm fixture fdt");
    fdt.assign(text.begin(), text.end());
    fdt.push_back(0);
    hart.set_gpr(11, 0x1000'0000);
    hart.set_csr(Csr::kPc, 0x8000'0000);
    pages = {{0x80000, page0}, {0x80005, page5}};
  }

  MeasurementRegisters Measure() const { return MeasureTvm(pages, fdt, hart); }
};

TapPayload FixturePayload() {
  TapPayload payload;
  payload.reference = Fixture().Measure();
  const std::string password("db-password");
  Bytes counting;
  for (int i = 0; i < 16; ++i) counting.push_back(i);
  payload.secrets = {{1, Bytes(password.begin(), password.end())},
                     {7, counting}};
  return payload;
}

Bytes GoldenBlob() {
  std::ifstream in(ACETSM_SOURCE_DIR "/tests/golden/tap_fixture.hex");
  std::stringstream text;
  text << in.rdbuf();
  auto bytes = FromHex(text.str());
  EXPECT_TRUE(bytes.has_value());
  return bytes.value_or(Bytes{});
}

TEST(MeasurementTest, EmptyInputsMatchReference) {
  auto regs = MeasureTvm({}, {}, HartArchState());
  EXPECT_EQ(ToHex(regs.code_data), kEmptyCode);
  EXPECT_EQ(ToHex(regs.fdt), kEmptyCode);
  EXPECT_EQ(ToHex(regs.boot_hart), kZeroHart);
}

TEST(MeasurementTest, FixtureMatchesReference) {
  auto regs = Fixture().Measure();
  EXPECT_EQ(ToHex(regs.code_data), kFixtureCode);
  EXPECT_EQ(ToHex(regs.fdt), kFixtureFdt);
  EXPECT_EQ(ToHex(regs.boot_hart), kFixtureHart);
  EXPECT_EQ(regs, Fixture().Measure());
}

TEST(MeasurementTest, OneByteChangeOnlyMovesCodeRegister) {
  Fixture f;
  const auto before = f.Measure();
  f.page5[100] ^= 1;
  const auto after = f.Measure();
  EXPECT_NE(before.code_data, after.code_data);
  EXPECT_EQ(before.fdt, after.fdt);
  EXPECT_EQ(before.boot_hart, after.boot_hart);
}

TEST(MeasurementTest, DistinctSmallImagesHaveDistinctDigests) {
  std::mt19937_64 gen(11);
  std::set<Sha384Digest> digests;
  std::set<std::pair<std::vector<uint64_t>, Bytes>> images;
  for (int i = 0; i < 2000; ++i) {
    const int count = 1 + gen() % 3;
    std::vector<uint64_t> gpns;
    Bytes all;
    std::vector<Bytes> contents;
    uint64_t gpn = 0;
    for (int p = 0; p < count; ++p) {
      gpn += 1 + gen() % 4;
      gpns.push_back(gpn);
      Bytes page(4096, 0);
      page[gen() % 4096] = 1 + gen() % 3;
      all.insert(all.end(), page.begin(), page.end());
      contents.push_back(std::move(page));
    }
    if (!images.insert({gpns, all}).second) continue;
    std::vector<MeasuredPage> pages;
    for (int p = 0; p < count; ++p) pages.push_back({gpns[p], contents[p]});
    EXPECT_TRUE(digests.insert(MeasureTvm(pages, {}, {}).code_data).second);
  }
  EXPECT_EQ(digests.size(), images.size());
}

TEST(KemTest, BuiltinKeysMatchReference) {
  auto keys = TsmAttestationKey::Builtin().PublicKeys();
  ASSERT_EQ(keys.size(), 2u);
  EXPECT_EQ(keys[0].algorithm, KemAlgorithm::kTestKem);
  EXPECT_EQ(ToHex(keys[0].key), kTestKemPub);
  EXPECT_EQ(keys[1].algorithm, KemAlgorithm::kMlKem768);
  EXPECT_EQ(ToHex(crypto::Sha3_256(keys[1].key)), kMlKemEkSha3);
}

TEST(KemTest, EncapsulateDecapsulateAgree) {
  DeterministicRandom rng(3);
  for (KemAlgorithm alg : AvailableKems()) {
    auto priv = GenerateKemKey(alg, rng);
    ASSERT_TRUE(priv.ok());
    const KemProvider* kem = FindKemProvider(alg);
    auto pub = kem->PublicKeyOf(*priv);
    ASSERT_TRUE(pub.ok());
    auto enc = kem->Encapsulate(pub->key, rng);
    ASSERT_TRUE(enc.ok());
    EXPECT_EQ(enc->ciphertext.size(), kem->ciphertext_bytes());
    auto secret = kem->Decapsulate(*priv, enc->ciphertext);
    ASSERT_TRUE(secret.ok());
    EXPECT_EQ(*secret, enc->shared_secret) << KemName(alg);
  }
}

TEST(TapTest, GoldenBlobIsBitExact) {
  DeterministicRandom rng(7);
  auto blob = TapCreate(FixturePayload(),
                        TsmAttestationKey::Builtin().PublicKeys(), rng);
  ASSERT_TRUE(blob.ok());
  EXPECT_EQ(ToHex(blob->Serialize()), ToHex(GoldenBlob()));
}

TEST(TapTest, GoldenBlobUnsealsThroughEitherLockbox) {
  auto blob = ParseTap(GoldenBlob());
  ASSERT_TRUE(blob.ok()) << blob.status().ToString();
  ASSERT_EQ(blob->lockboxes.size(), 2u);
  for (KemAlgorithm alg : AvailableKems()) {
    auto payload = TapUnseal(*blob, TsmAttestationKey::BuiltinSubset({alg}));
    ASSERT_TRUE(payload.ok()) << KemName(alg);
    EXPECT_EQ(*payload, FixturePayload());
  }
}

TEST(TapTest, DescribeNeverShowsPlaintext) {
  auto blob = ParseTap(GoldenBlob());
  ASSERT_TRUE(blob.ok());
  const std::string text = blob->Describe();
  EXPECT_NE(text.find("testkem"), std::string::npos);
  EXPECT_NE(text.find("mlkem768"), std::string::npos);
  EXPECT_EQ(text.find(ToHex(FixturePayload().secrets[0].value)), std::string::npos);
  EXPECT_EQ(text.find(kFixtureCode), std::string::npos);
}

TEST(TapTest, RandomPayloadsRoundTrip) {
  std::mt19937_64 gen(5);
  DeterministicRandom rng(99);
  const auto all_keys = TsmAttestationKey::Builtin();
  const auto pubs = all_keys.PublicKeys();
  for (int i = 0; i < 500; ++i) {
    TapPayload payload;
    for (auto* d : {&payload.reference.code_data, &payload.reference.fdt,
                    &payload.reference.boot_hart}) {
      for (auto& b : *d) b = gen();
    }
    const int secrets = gen() % 5;
    for (int s = 0; s < secrets; ++s) {
      Bytes value(gen() % 64);
      for (auto& b : value) b = gen();
      payload.secrets.push_back({static_cast<uint32_t>(s * 3 + gen() % 3), value});
    }
    // ML-KEM lockboxes are slower; include one on every tenth blob.
    std::vector<KemPublicKey> recipients = {pubs[0]};
    if (i % 10 == 0) recipients.push_back(pubs[1]);
    auto blob = TapCreate(payload, recipients, rng);
    ASSERT_TRUE(blob.ok());
    auto parsed = ParseTap(blob->Serialize());
    ASSERT_TRUE(parsed.ok());
    auto opened = TapUnseal(*parsed, all_keys);
    ASSERT_TRUE(opened.ok());
    EXPECT_EQ(*opened, payload);
    EXPECT_EQ(TapPayload::FromText(payload.ToText()).value(), payload);
  }
}

TEST(TapTest, EveryBitFlipIsDetected) {
  const Bytes golden = GoldenBlob();
  const auto testkem_only =
      TsmAttestationKey::BuiltinSubset({KemAlgorithm::kTestKem});
  // header 8, testkem lockbox 6+80, mlkem lockbox 6+1136.
  const size_t testkem_end = 8 + 6 + 80;
  const size_t nonce_begin = testkem_end + 6 + 1136;
  const size_t ct_len_begin = nonce_begin + 12;
  for (size_t byte = 0; byte < golden.size(); ++byte) {
    for (int bit = 0; bit < 8; ++bit) {
      Bytes copy = golden;
      copy[byte] ^= 1 << bit;
      auto blob = ParseTap(copy);
      ErrorCode code = blob.code();
      if (blob.ok()) {
        auto opened = TapUnseal(*blob, testkem_only);
        code = opened.code();
        // The ML-KEM lockbox is never consulted with this key.
        if (opened.ok()) {
          EXPECT_TRUE(byte >= testkem_end && byte < nonce_begin) << byte;
          EXPECT_EQ(*opened, FixturePayload());
          continue;
        }
      }
      if (byte < 8) {
        EXPECT_EQ(code, ErrorCode::kParseError);
      } else if (byte >= 14 && byte < testkem_end) {
        EXPECT_EQ(code, ErrorCode::kNoMatchingLockbox) << byte;
      } else if (byte >= nonce_begin && (byte < ct_len_begin || byte >= ct_len_begin + 4)) {
        EXPECT_EQ(code, ErrorCode::kAuthFailure) << byte;
      }
    }
  }
}

TEST(TapTest, TruncationAndTrailingBytesAreParseErrors) {
  const Bytes golden = GoldenBlob();
  for (size_t n = 0; n < golden.size(); n += 7) {
    EXPECT_EQ(ParseTap(ByteSpan(golden).first(n)).code(), ErrorCode::kParseError) << n;
  }
  Bytes longer = golden;
  longer.push_back(0);
  EXPECT_EQ(ParseTap(longer).code(), ErrorCode::kParseError);
  Bytes no_boxes = golden;
  no_boxes[6] = no_boxes[7] = 0;
  EXPECT_EQ(ParseTap(no_boxes).code(), ErrorCode::kParseError);
}

TEST(TapTest, UnknownAlgorithmLockboxIsSkipped) {
  auto blob = ParseTap(GoldenBlob());
  ASSERT_TRUE(blob.ok());
  blob->lockboxes[0].algorithm_id = 0x7777;
  auto reparsed = ParseTap(blob->Serialize());
  ASSERT_TRUE(reparsed.ok());
  EXPECT_EQ(TapUnseal(*reparsed, TsmAttestationKey::Builtin()).value(),
            FixturePayload());
  EXPECT_EQ(TapUnseal(*reparsed, TsmAttestationKey::BuiltinSubset(
                                     {KemAlgorithm::kTestKem}))
                .code(),
            ErrorCode::kNoMatchingLockbox);
}

TEST(TapTest, MissingOrForeignKeys) {
  DeterministicRandom rng(1);
  const auto pubs = TsmAttestationKey::Builtin().PublicKeys();
  EXPECT_EQ(TapCreate(FixturePayload(), {}, rng).code(),
            ErrorCode::kUnsupportedAlgorithm);

  auto mlkem_only = TapCreate(FixturePayload(), {pubs[1]}, rng);
  ASSERT_TRUE(mlkem_only.ok());
  EXPECT_EQ(TapUnseal(*mlkem_only,
                      TsmAttestationKey::BuiltinSubset({KemAlgorithm::kTestKem}))
                .code(),
            ErrorCode::kNoMatchingLockbox);

  // Same algorithm, different device.
  std::vector<KemPrivateKey> other;
  other.push_back(GenerateKemKey(KemAlgorithm::kTestKem, rng).value());
  auto blob = TapCreate(FixturePayload(), {pubs[0]}, rng);
  ASSERT_TRUE(blob.ok());
  EXPECT_EQ(TapUnseal(*blob, TsmAttestationKey(other)).code(),
            ErrorCode::kNoMatchingLockbox);
}

TEST(TapTest, PayloadParsingRejectsBadInput) {
  TapPayload payload = FixturePayload();
  payload.secrets.push_back({1, {}});
  EXPECT_EQ(TapPayload::Deserialize(payload.Serialize()).code(),
            ErrorCode::kParseError);
  EXPECT_EQ(TapPayload::FromText(payload.ToText()).code(), ErrorCode::kParseError);
  Bytes trailing = FixturePayload().Serialize();
  trailing.push_back(0);
  EXPECT_EQ(TapPayload::Deserialize(trailing).code(), ErrorCode::kParseError);
  EXPECT_EQ(TapPayload::FromText("acetsm-tap-payload v1\npcr_fdt 00\n").code(),
            ErrorCode::kParseError);
}

TEST(LocalAttestationTest, ReleasesSecretsOnlyOnFullMatch) {
  const TapPayload payload = FixturePayload();
  auto secrets = VerifyLocalAttestation(Fixture().Measure(), payload);
  ASSERT_TRUE(secrets.ok());
  EXPECT_EQ(*secrets, payload.secrets);

  Fixture changed;
  changed.fdt.back() = 1;
  auto failed = VerifyLocalAttestation(changed.Measure(), payload);
  EXPECT_EQ(failed.code(), ErrorCode::kAttestationFailed);
  EXPECT_NE(failed.status().message().find("fdt"), std::string::npos);

  TapPayload secretless = payload;
  secretless.secrets.clear();
  auto none = VerifyLocalAttestation(Fixture().Measure(), secretless);
  ASSERT_TRUE(none.ok());
  EXPECT_TRUE(none->empty());
}

}  // namespace
}  // namespace acetsm
