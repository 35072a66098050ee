"""Named substream seeding.

One global seed fans out to per-module streams keyed by a string name, so
adding a new consumer never perturbs the draws of existing ones.  The rule:

    child entropy = [global_seed, blake2s(name)[:8] as uint64]

fed to ``numpy.random.SeedSequence``.  Stable across platforms and runs.
"""

import hashlib

import numpy as np


def _name_key(name: str) -> int:
    digest = hashlib.blake2s(name.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def seed_sequence_for(global_seed: int, name: str) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(global_seed) & (2**64 - 1), _name_key(name)])


def rng_for(global_seed: int, name: str) -> np.random.Generator:
    """Generator for the named stream derived from the global seed."""
    return np.random.default_rng(seed_sequence_for(global_seed, name))


def child_seed(global_seed: int, name: str) -> int:
    """A 63-bit integer seed for the named stream (for APIs wanting an int)."""
    return int(seed_sequence_for(global_seed, name).generate_state(1, np.uint64)[0] >> 1)
