"""Seeded random streams.

All randomness goes through numpy's PCG64 bit generator seeded from a
``SeedSequence``; PCG64 output is identical on every platform numpy supports.

Stream-split rule: a batch of trajectories is cut into blocks of
``BLOCK_SIZE``; block ``b`` of a run with seed ``s`` draws from
``SeedSequence(s, spawn_key=(b,))``.  Blocks can therefore run on separate
workers and the merged tallies are identical to a serial run.
"""

from __future__ import annotations

import numpy as np

BLOCK_SIZE = 4096


def make_rng(seed: int, stream: int | None = None) -> np.random.Generator:
    """Generator for ``seed`` (and optional sub-stream index)."""
    if stream is None:
        ss = np.random.SeedSequence(int(seed))
    else:
        ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.PCG64(ss))


def block_uniforms(seed: int, n: int, width: int) -> np.ndarray:
    """``(n, width)`` uniforms in [0, 1) following the block stream rule.

    Trajectory ``i`` always receives the same row regardless of ``n``.
    """
    if n <= 0:
        return np.empty((0, width))
    rows = []
    for b, start in enumerate(range(0, n, BLOCK_SIZE)):
        size = min(BLOCK_SIZE, n - start)
        rows.append(make_rng(seed, b).random((size, width)))
    return np.concatenate(rows, axis=0)
