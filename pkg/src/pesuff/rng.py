"""Deterministic seed derivation.

Every source of randomness in the library flows from an explicit integer
seed.  Child seeds are derived by hashing ``(seed, label)`` so that
independent stages (surrogate ensembles, bootstrap blocks, simulation
paths, ...) draw from non-overlapping streams, and so that parallel and
serial execution of per-item work give identical results.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["child_seed", "child_seeds", "generator"]

_MASK64 = (1 << 64) - 1


def child_seed(seed: int, label: str) -> int:
    """Derive a stable 64-bit child seed from ``seed`` and a stage label."""
    payload = f"{int(seed)}:{label}".encode()
    digest = hashlib.blake2b(payload, digest_size=8).digest()
    return int.from_bytes(digest, "little") & _MASK64


def child_seeds(seed: int, label: str, n: int) -> list[int]:
    """Child seeds for ``n`` independent work items of one stage."""
    return [child_seed(seed, f"{label}/{i}") for i in range(n)]


def generator(seed: int, label: str | None = None) -> np.random.Generator:
    """A ``numpy`` generator for the given seed (optionally a labelled child)."""
    if label is not None:
        seed = child_seed(seed, label)
    return np.random.default_rng(seed)
