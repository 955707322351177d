"""Deterministic RNG streams.

Every stochastic routine in the package takes an integer seed and derives
its generator through :func:`spawn_rng`.  The splitting rule is fixed: the
root entropy is the user seed, and each consumer appends a path of labels
(strings are hashed with crc32, ints are used as-is).  Identical
(seed, path) pairs always yield identical streams; sibling paths are
statistically independent.
"""

from __future__ import annotations

import zlib

import numpy as np


def _label_to_int(label: int | str) -> int:
    if isinstance(label, bool):  # bool is an int subclass; refuse silently odd keys
        raise TypeError("rng path labels must be int or str, not bool")
    if isinstance(label, int):
        if label < 0:
            raise ValueError("rng path ints must be non-negative")
        return label
    if isinstance(label, str):
        return zlib.crc32(label.encode("utf-8"))
    raise TypeError(f"rng path labels must be int or str, got {type(label)!r}")


def spawn_rng(seed: int, *path: int | str) -> np.random.Generator:
    """Return the generator for ``seed`` at the given stream path.

    Args:
        seed: user-facing experiment seed.
        path: stream labels, e.g. ``("dataset", 3, "noise")``.
    """
    keys = tuple(_label_to_int(p) for p in path)
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=keys)
    return np.random.default_rng(ss)
