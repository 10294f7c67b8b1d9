"""Named, splittable random streams derived from a single 64-bit seed.

Every randomized operation in the toolkit draws from a :class:`SeedStream`
child named after the operation (and, where relevant, the sentence index),
so that outputs are a pure function of (inputs, rule, mode, seed) and
parallel application over sentences equals serial application.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np


def _digest(seed: int, path: tuple) -> int:
    h = hashlib.blake2b(digest_size=8)
    h.update(str(seed).encode("utf-8"))
    for part in path:
        h.update(b"\x1f")
        h.update(str(part).encode("utf-8"))
    return int.from_bytes(h.digest(), "big")


@dataclass(frozen=True)
class SeedStream:
    """An immutable handle on one named branch of the seed tree."""

    seed: int
    path: tuple = ()

    def child(self, *names: str | int) -> "SeedStream":
        """Derive a sub-stream; same (seed, path, names) always yields the same stream."""
        return SeedStream(self.seed, self.path + tuple(names))

    def generator(self) -> np.random.Generator:
        """Fresh PCG64 generator for this stream; repeated calls restart it."""
        return np.random.default_rng(_digest(self.seed, self.path))


def choose(gen: np.random.Generator, items: list) -> object:
    """Uniform draw from a non-empty list (kept separate for testability)."""
    if not items:
        raise ValueError("cannot draw from an empty pool")
    return items[int(gen.integers(0, len(items)))]
