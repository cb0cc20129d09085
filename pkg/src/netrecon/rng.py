"""Named, order-independent random substreams derived from one integer seed."""

import zlib

import numpy as np


def _key(k) -> int:
    if isinstance(k, (int, np.integer)) and k >= 0:
        return int(k)
    return zlib.crc32(str(k).encode("utf-8"))


def substream(seed: int, *keys) -> np.random.Generator:
    """Generator for the substream ``(seed, *keys)``.

    Keys may be non-negative integers or strings. Identical arguments give
    identical streams regardless of what else has been drawn.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(_key(k) for k in keys))
    return np.random.default_rng(ss)
