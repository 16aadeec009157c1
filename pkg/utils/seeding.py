"""Stable seed derivation for replications and policies."""

import hashlib
from typing import Union

import numpy as np


def stable_seed(*parts: Union[int, str]) -> int:
    """Derive a 64-bit seed from an ordered tuple of labels.

    Uses blake2b so the value is identical across processes and Python
    versions (unlike the builtin ``hash``).
    """
    payload = "\x1f".join(str(part) for part in parts).encode("utf-8")
    digest = hashlib.blake2b(payload, digest_size=8).digest()
    return int.from_bytes(digest, "little")


def make_rng(seed: Union[int, np.random.SeedSequence]) -> np.random.Generator:
    """Build a PCG64 generator from an integer seed or seed sequence."""
    return np.random.default_rng(seed)

