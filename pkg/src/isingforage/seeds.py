"""Deterministic derivation of independent random streams from a master seed.

Streams are keyed by structured paths like (replicate, generation, purpose).
Each key is hashed into SeedSequence spawn words, so adding more replicates,
generations or purposes never perturbs existing streams, and the Philox
counter-based generator gives identical sequences on every platform.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _key_words(key) -> tuple[int, int]:
    """Map one key (int or str) to two uint32 spawn words via SHA-256."""
    if isinstance(key, (int, np.integer)):
        token = f"i:{int(key)}"
    elif isinstance(key, str):
        token = f"s:{key}"
    else:
        raise TypeError(f"stream key must be int or str, got {type(key).__name__}")
    digest = hashlib.sha256(token.encode("utf-8")).digest()
    return (
        int.from_bytes(digest[0:4], "little"),
        int.from_bytes(digest[4:8], "little"),
    )


def derive_seedseq(master_seed: int, *keys) -> np.random.SeedSequence:
    spawn = []
    for key in keys:
        spawn.extend(_key_words(key))
    return np.random.SeedSequence(master_seed, spawn_key=tuple(spawn))


def derive_rng(master_seed: int, *keys) -> np.random.Generator:
    """Independent generator for (master_seed, *keys)."""
    return np.random.Generator(np.random.Philox(derive_seedseq(master_seed, *keys)))
