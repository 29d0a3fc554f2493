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

#include "attestation/mlkem768.h"

#include <algorithm>

#include "attestation/crypto.h"

namespace acetsm::mlkem768 {
namespace {

constexpr int kN = 256;
constexpr int kQ = 3329;
constexpr int kK = 3;
constexpr int kEta1 = 2;
constexpr int kEta2 = 2;
constexpr int kDu = 10;
constexpr int kDv = 4;
constexpr size_t kPolyBytes = 384;  // 256 * 12 bits

using Poly = std::array<int32_t, kN>;
using PolyVec = std::array<Poly, kK>;

constexpr int32_t ModQ(int64_t x) {
  int32_t r = static_cast<int32_t>(x % kQ);
  return r < 0 ? r + kQ : r;
}

constexpr int32_t PowMod(int32_t base, int exp) {
  int64_t result = 1;
  int64_t b = base;
  while (exp > 0) {
    if (exp & 1) result = result * b % kQ;
    b = b * b % kQ;
    exp >>= 1;
  }
  return static_cast<int32_t>(result);
}

constexpr int BitRev7(int x) {
  int r = 0;
  for (int i = 0; i < 7; ++i) r |= ((x >> i) & 1) << (6 - i);
  return r;
}

struct Tables {
  std::array<int32_t, 128> zetas{};
  std::array<int32_t, 128> gammas{};
};

constexpr Tables MakeTables() {
  Tables t;
  for (int i = 0; i < 128; ++i) {
    t.zetas[i] = PowMod(17, BitRev7(i));
    t.gammas[i] = PowMod(17, 2 * BitRev7(i) + 1);
  }
  return t;
}

constexpr Tables kTables = MakeTables();

void Ntt(Poly& f) {
  int i = 1;
  for (int len = 128; len >= 2; len /= 2) {
    for (int start = 0; start < kN; start += 2 * len) {
      const int64_t zeta = kTables.zetas[i++];
      for (int j = start; j < start + len; ++j) {
        const int32_t t = ModQ(zeta * f[j + len]);
        f[j + len] = ModQ(f[j] - t);
        f[j] = ModQ(f[j] + t);
      }
    }
  }
}

void InverseNtt(Poly& f) {
  int i = 127;
  for (int len = 2; len <= 128; len *= 2) {
    for (int start = 0; start < kN; start += 2 * len) {
      const int64_t zeta = kTables.zetas[i--];
      for (int j = start; j < start + len; ++j) {
        const int32_t t = f[j];
        f[j] = ModQ(t + f[j + len]);
        f[j + len] = ModQ(zeta * (f[j + len] - t));
      }
    }
  }
  for (auto& c : f) c = ModQ(static_cast<int64_t>(c) * 3303);
}

Poly MultiplyNtts(const Poly& f, const Poly& g) {
  Poly h{};
  for (int i = 0; i < 128; ++i) {
    const int64_t a0 = f[2 * i], a1 = f[2 * i + 1];
    const int64_t b0 = g[2 * i], b1 = g[2 * i + 1];
    h[2 * i] = ModQ(a0 * b0 + ModQ(a1 * b1) * static_cast<int64_t>(kTables.gammas[i]));
    h[2 * i + 1] = ModQ(a0 * b1 + a1 * b0);
  }
  return h;
}

void AddInto(Poly& acc, const Poly& x) {
  for (int i = 0; i < kN; ++i) acc[i] = ModQ(acc[i] + x[i]);
}

void ByteEncode(const Poly& f, int d, uint8_t* out) {
  // Pack 256 d-bit integers little-endian bitwise.
  uint64_t buffer = 0;
  int bits = 0;
  size_t pos = 0;
  for (int i = 0; i < kN; ++i) {
    buffer |= static_cast<uint64_t>(f[i]) << bits;
    bits += d;
    while (bits >= 8) {
      out[pos++] = static_cast<uint8_t>(buffer);
      buffer >>= 8;
      bits -= 8;
    }
  }
}

Poly ByteDecode(const uint8_t* in, int d) {
  Poly f{};
  uint64_t buffer = 0;
  int bits = 0;
  size_t pos = 0;
  const uint64_t mask = (1ull << d) - 1;
  for (int i = 0; i < kN; ++i) {
    while (bits < d) {
      buffer |= static_cast<uint64_t>(in[pos++]) << bits;
      bits += 8;
    }
    f[i] = static_cast<int32_t>(buffer & mask);
    buffer >>= d;
    bits -= d;
  }
  if (d == 12) {
    for (auto& c : f) c = ModQ(c);
  }
  return f;
}

int32_t Compress(int32_t x, int d) {
  // round(2^d * x / q) mod 2^d
  const uint64_t num = (static_cast<uint64_t>(x) << (d + 1)) + kQ;
  return static_cast<int32_t>((num / (2 * kQ)) & ((1u << d) - 1));
}

int32_t Decompress(int32_t y, int d) {
  // round(q * y / 2^d)
  return static_cast<int32_t>((static_cast<uint64_t>(kQ) * y + (1u << (d - 1))) >> d);
}

Poly SampleNtt(const uint8_t rho[32], uint8_t j, uint8_t i) {
  Bytes seed(rho, rho + 32);
  seed.push_back(j);
  seed.push_back(i);
  Poly a{};
  // Rejection sampling consumes an unbounded prefix of the XOF stream; grow
  // the squeeze until enough coefficients were accepted.
  size_t stream_len = 168 * 5;
  for (;;) {
    const Bytes stream = crypto::Shake128(seed, stream_len);
    int count = 0;
    for (size_t pos = 0; pos + 3 <= stream.size() && count < kN; pos += 3) {
      const int32_t d1 = stream[pos] + 256 * (stream[pos + 1] & 0x0f);
      const int32_t d2 = (stream[pos + 1] >> 4) + 16 * stream[pos + 2];
      if (d1 < kQ) a[count++] = d1;
      if (d2 < kQ && count < kN) a[count++] = d2;
    }
    if (count == kN) return a;
    stream_len *= 2;
  }
}

Poly SamplePolyCbd(const Bytes& b, int eta) {
  Poly f{};
  auto bit = [&b](int index) { return (b[index / 8] >> (index % 8)) & 1; };
  for (int i = 0; i < kN; ++i) {
    int x = 0, y = 0;
    for (int j = 0; j < eta; ++j) {
      x += bit(2 * i * eta + j);
      y += bit(2 * i * eta + eta + j);
    }
    f[i] = ModQ(x - y);
  }
  return f;
}

Bytes Prf(int eta, const uint8_t s[32], uint8_t n) {
  Bytes input(s, s + 32);
  input.push_back(n);
  return crypto::Shake256(input, 64 * eta);
}

// Â[i][j] = SampleNTT(rho || j || i)
std::array<PolyVec, kK> GenerateMatrix(const uint8_t rho[32]) {
  std::array<PolyVec, kK> a{};
  for (int i = 0; i < kK; ++i) {
    for (int j = 0; j < kK; ++j) {
      a[i][j] = SampleNtt(rho, static_cast<uint8_t>(j), static_cast<uint8_t>(i));
    }
  }
  return a;
}

struct PkeKeys {
  Bytes ek;
  Bytes dk;
};

PkeKeys PkeKeyGen(const Seed& d) {
  Bytes g_input(d.begin(), d.end());
  g_input.push_back(static_cast<uint8_t>(kK));
  const auto g = crypto::Sha3_512(g_input);
  const uint8_t* rho = g.data();
  const uint8_t* sigma = g.data() + 32;

  const auto a = GenerateMatrix(rho);
  uint8_t n = 0;
  PolyVec s{}, e{};
  for (int i = 0; i < kK; ++i) s[i] = SamplePolyCbd(Prf(kEta1, sigma, n++), kEta1);
  for (int i = 0; i < kK; ++i) e[i] = SamplePolyCbd(Prf(kEta1, sigma, n++), kEta1);
  for (auto& p : s) Ntt(p);
  for (auto& p : e) Ntt(p);

  PkeKeys keys;
  keys.ek.resize(kK * kPolyBytes + 32);
  keys.dk.resize(kK * kPolyBytes);
  for (int i = 0; i < kK; ++i) {
    Poly t = e[i];
    for (int j = 0; j < kK; ++j) AddInto(t, MultiplyNtts(a[i][j], s[j]));
    ByteEncode(t, 12, keys.ek.data() + i * kPolyBytes);
    ByteEncode(s[i], 12, keys.dk.data() + i * kPolyBytes);
  }
  std::copy(rho, rho + 32, keys.ek.begin() + kK * kPolyBytes);
  return keys;
}

Bytes PkeEncrypt(ByteSpan ek, const uint8_t m[32], const uint8_t r[32]) {
  PolyVec t{};
  for (int i = 0; i < kK; ++i) t[i] = ByteDecode(ek.data() + i * kPolyBytes, 12);
  const uint8_t* rho = ek.data() + kK * kPolyBytes;
  const auto a = GenerateMatrix(rho);

  uint8_t n = 0;
  PolyVec y{}, e1{};
  for (int i = 0; i < kK; ++i) y[i] = SamplePolyCbd(Prf(kEta1, r, n++), kEta1);
  for (int i = 0; i < kK; ++i) e1[i] = SamplePolyCbd(Prf(kEta2, r, n++), kEta2);
  const Poly e2 = SamplePolyCbd(Prf(kEta2, r, n++), kEta2);
  for (auto& p : y) Ntt(p);

  Bytes c(kCiphertextBytes);
  const size_t u_bytes = 32 * kDu;
  for (int i = 0; i < kK; ++i) {
    Poly u{};
    for (int j = 0; j < kK; ++j) AddInto(u, MultiplyNtts(a[j][i], y[j]));
    InverseNtt(u);
    AddInto(u, e1[i]);
    for (auto& coeff : u) coeff = Compress(coeff, kDu);
    ByteEncode(u, kDu, c.data() + i * u_bytes);
  }
  Poly v{};
  for (int j = 0; j < kK; ++j) AddInto(v, MultiplyNtts(t[j], y[j]));
  InverseNtt(v);
  AddInto(v, e2);
  const Poly mu_bits = ByteDecode(m, 1);
  for (int i = 0; i < kN; ++i) v[i] = ModQ(v[i] + Decompress(mu_bits[i], 1));
  for (auto& coeff : v) coeff = Compress(coeff, kDv);
  ByteEncode(v, kDv, c.data() + kK * u_bytes);
  return c;
}

std::array<uint8_t, 32> PkeDecrypt(ByteSpan dk, ByteSpan c) {
  const size_t u_bytes = 32 * kDu;
  Poly w{};
  for (int i = 0; i < kK; ++i) {
    Poly u = ByteDecode(c.data() + i * u_bytes, kDu);
    for (auto& coeff : u) coeff = Decompress(coeff, kDu);
    Ntt(u);
    const Poly s = ByteDecode(dk.data() + i * kPolyBytes, 12);
    AddInto(w, MultiplyNtts(s, u));
  }
  InverseNtt(w);
  Poly v = ByteDecode(c.data() + kK * u_bytes, kDv);
  for (int i = 0; i < kN; ++i) {
    v[i] = ModQ(Decompress(v[i], kDv) - w[i]);
    v[i] = Compress(v[i], 1);
  }
  std::array<uint8_t, 32> m{};
  ByteEncode(v, 1, m.data());
  return m;
}

}  // namespace

KeyPair KeyGen(const Seed& d, const Seed& z) {
  PkeKeys pke = PkeKeyGen(d);
  KeyPair pair;
  pair.encapsulation_key = pke.ek;
  pair.decapsulation_key = std::move(pke.dk);
  const auto h = crypto::Sha3_256(pke.ek);
  pair.decapsulation_key.insert(pair.decapsulation_key.end(), pke.ek.begin(),
                                pke.ek.end());
  pair.decapsulation_key.insert(pair.decapsulation_key.end(), h.begin(), h.end());
  pair.decapsulation_key.insert(pair.decapsulation_key.end(), z.begin(), z.end());
  return pair;
}

Result<Encapsulation> Encapsulate(ByteSpan ek, const Seed& m) {
  if (ek.size() != kEncapsulationKeyBytes) {
    return MakeError(ErrorCode::kInvalidParam, "ML-KEM-768 key length");
  }
  // Modulus check: every 12-bit coefficient must already be reduced.
  for (int i = 0; i < kK; ++i) {
    Bytes round(kPolyBytes);
    ByteEncode(ByteDecode(ek.data() + i * kPolyBytes, 12), 12, round.data());
    if (!std::equal(round.begin(), round.end(), ek.begin() + i * kPolyBytes)) {
      return MakeError(ErrorCode::kInvalidParam, "ML-KEM-768 modulus check");
    }
  }
  const auto h = crypto::Sha3_256(ek);
  Bytes g_input(m.begin(), m.end());
  g_input.insert(g_input.end(), h.begin(), h.end());
  const auto g = crypto::Sha3_512(g_input);
  Encapsulation out;
  std::copy_n(g.begin(), 32, out.shared_secret.begin());
  out.ciphertext = PkeEncrypt(ek, m.data(), g.data() + 32);
  return out;
}

Result<SharedSecret> Decapsulate(ByteSpan dk, ByteSpan c) {
  if (dk.size() != kDecapsulationKeyBytes || c.size() != kCiphertextBytes) {
    return MakeError(ErrorCode::kInvalidParam, "ML-KEM-768 input length");
  }
  const ByteSpan dk_pke = dk.subspan(0, kK * kPolyBytes);
  const ByteSpan ek = dk.subspan(kK * kPolyBytes, kEncapsulationKeyBytes);
  const ByteSpan h = dk.subspan(kK * kPolyBytes + kEncapsulationKeyBytes, 32);
  const ByteSpan z = dk.subspan(kK * kPolyBytes + kEncapsulationKeyBytes + 32, 32);
  const auto h_check = crypto::Sha3_256(ek);
  if (!std::equal(h.begin(), h.end(), h_check.begin())) {
    return MakeError(ErrorCode::kInvalidParam, "ML-KEM-768 key hash check");
  }

  const auto m_prime = PkeDecrypt(dk_pke, c);
  Bytes g_input(m_prime.begin(), m_prime.end());
  g_input.insert(g_input.end(), h.begin(), h.end());
  const auto g = crypto::Sha3_512(g_input);

  Bytes j_input(z.begin(), z.end());
  j_input.insert(j_input.end(), c.begin(), c.end());
  const Bytes k_bar = crypto::Shake256(j_input, 32);

  const Bytes c_prime = PkeEncrypt(ek, m_prime.data(), g.data() + 32);
  SharedSecret out;
  // Constant-time select between K' and the implicit-rejection key.
  uint8_t diff = 0;
  for (size_t i = 0; i < c.size(); ++i) diff |= c[i] ^ c_prime[i];
  const uint8_t mask = static_cast<uint8_t>(-static_cast<int>(diff == 0));
  for (size_t i = 0; i < 32; ++i) {
    out[i] = static_cast<uint8_t>((g[i] & mask) | (k_bar[i] & ~mask));
  }
  return out;
}

}  // namespace acetsm::mlkem768
