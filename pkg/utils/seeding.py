"""
Trial seed derivation.

trial_seed = first 8 bytes (little-endian) of BLAKE2b over the 16-byte
little-endian encoding of (master_seed, trial_index). The scheme depends
only on its two integers, so serial and parallel runs derive the same seeds.
"""

import hashlib
from typing import Optional, Union

import numpy as np

_UINT64 = 2**64

SeedLike = Union[None, int, np.random.Generator]


def as_generator(seed: SeedLike) -> np.random.Generator:
    """Pass generators through; build a fresh one from an int (or OS entropy for None)."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def derive_trial_seed(master_seed: int, trial_index: int) -> int:
    """Derive the 64-bit seed of one trial from the run's master seed."""
    if not 0 <= master_seed < _UINT64:
        raise ValueError(f"master seed out of 64-bit range: {master_seed}")
    if trial_index < 0:
        raise ValueError(f"trial index must be non-negative: {trial_index}")
    payload = master_seed.to_bytes(8, "little") + trial_index.to_bytes(8, "little")
    digest = hashlib.blake2b(payload, digest_size=8).digest()
    return int.from_bytes(digest, "little")


def trial_generator(master_seed: int, trial_index: int) -> np.random.Generator:
    """Generator seeded from the derived trial seed."""
    return np.random.default_rng(derive_trial_seed(master_seed, trial_index))
