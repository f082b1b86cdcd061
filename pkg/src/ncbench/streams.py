"""Splittable random streams.

Every stochastic component draws from an RngStream addressed by
(master_seed, path). Identical addresses reproduce identical draws, and
distinct paths give statistically independent streams, so a run scheduled
across N workers replays the single-worker run bit for bit.
"""

from __future__ import annotations

import numpy as np

__all__ = ["RngStream"]


class RngStream:
    """Counter-addressed random stream backed by a Philox generator.

    The (master_seed, path) pair fully determines the draw sequence; the
    generator is created lazily on first use. child() derives a new
    independent stream by appending ids to the path, leaving the parent's
    own draw position untouched.
    """

    __slots__ = ("master_seed", "path", "_gen")

    def __init__(self, master_seed: int, path: tuple[int, ...] = ()):
        if master_seed < 0:
            raise ValueError("master_seed must be non-negative")
        self.master_seed = int(master_seed)
        self.path = tuple(int(p) for p in path)
        self._gen: np.random.Generator | None = None

    def child(self, *ids: int) -> "RngStream":
        return RngStream(self.master_seed, self.path + ids)

    @property
    def generator(self) -> np.random.Generator:
        if self._gen is None:
            seq = np.random.SeedSequence(self.master_seed, spawn_key=self.path)
            self._gen = np.random.Generator(np.random.Philox(seq))
        return self._gen

    def uniform(self, size=None) -> np.ndarray:
        return self.generator.random(size)

    def normal(self, size=None) -> np.ndarray:
        return self.generator.standard_normal(size)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.master_seed}, path={self.path})"
