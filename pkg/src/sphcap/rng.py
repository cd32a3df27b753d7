"""Hierarchical, counter-based random streams.

A :class:`Seed` is a 64-bit root plus a derivation path. Child streams are
derived by appending integers to the path, so replicate ``i`` of an
experiment always sees the same draws no matter which worker runs it or in
what order.
"""
from dataclasses import dataclass, field

import numpy as np

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class Seed:
    root: int
    path: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if not 0 <= int(self.root) <= _MASK64:
            raise ValueError("seed root must be a 64-bit unsigned integer")
        object.__setattr__(self, "root", int(self.root))
        object.__setattr__(self, "path", tuple(int(p) for p in self.path))

    def child(self, *keys):
        return Seed(self.root, self.path + tuple(int(k) for k in keys))

    def generator(self):
        """numpy Generator on a Philox (counter-based) bit stream."""
        ss = np.random.SeedSequence(self.root, spawn_key=self.path)
        return np.random.Generator(np.random.Philox(ss))

    def __str__(self):
        return ":".join(str(v) for v in (self.root,) + self.path)


def as_seed(seed):
    if isinstance(seed, Seed):
        return seed
    return Seed(int(seed))
