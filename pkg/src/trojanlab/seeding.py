"""Deterministic seed derivation.

Every pipeline stage draws its randomness from a generator derived from the
single global seed plus a textual label path, so stages can be re-run in
isolation and still reproduce what a full pipeline run produced.
"""

import hashlib

import numpy as np


def derive_seed(master: int, *labels) -> int:
    """Hash (master seed, label path) into a 64-bit stream seed."""
    text = ":".join([str(int(master))] + [str(l) for l in labels])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def make_rng(master: int, *labels) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_seed(master, *labels)))
