"""Deterministic named random streams.

All randomness in the package flows from one 64-bit master seed through a
named-stream splitter. Derivation rule (documented so other implementations
can reproduce the streams): the stream key is SHA-256 of the names joined by
"/", truncated to four little-endian 32-bit words; the generator is Philox
(a 64-bit counter-based generator) seeded with SeedSequence(entropy=[seed,
w0, w1, w2, w3]).
"""

from __future__ import annotations

import hashlib

import numpy as np


def stream(master_seed: int, *names: str) -> np.random.Generator:
    """Independent generator for the stream identified by ``names``."""
    digest = hashlib.sha256("/".join(names).encode("utf-8")).digest()
    words = [int.from_bytes(digest[4 * i:4 * (i + 1)], "little") for i in range(4)]
    ss = np.random.SeedSequence(entropy=[int(master_seed) & (2**64 - 1), *words])
    return np.random.Generator(np.random.Philox(ss))
