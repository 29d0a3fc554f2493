#!/usr/bin/env python3
# Copyright 2026 The ACE-TSM Simulator Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Freezes ML-KEM-768 known-answer values from an independent implementation.

Requires the `kyber-py` package (pip install kyber-py). The printed digests
are pasted into tests/crypto_test.cc.
"""
import hashlib

from kyber_py.ml_kem import ML_KEM_768


def vector(label, d, z, m):
    ek, dk = ML_KEM_768._keygen_internal(d, z)
    key, ct = ML_KEM_768._encaps_internal(ek, m)
    assert ML_KEM_768.decaps(dk, ct) == key
    h = lambda b: hashlib.sha3_256(b).hexdigest()
    print(f"{label}: ek={h(ek)} dk={h(dk)} ct={h(ct)} key={key.hex()}")
    # Implicit rejection: flip one ciphertext bit.
    bad = bytearray(ct)
    bad[0] ^= 1
    print(f"{label}: rejected_key={ML_KEM_768.decaps(dk, bytes(bad)).hex()}")


vector("A", bytes(range(32)), bytes(range(32, 64)), bytes(range(64, 96)))
vector("B", bytes([0xA5] * 32), bytes([0x5A] * 32), bytes([0x00] * 32))
