"""Named sub-seeds so each component draws from its own reproducible stream."""

import zlib

import numpy as np


def subseed(seed: int, name: str) -> int:
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFF, zlib.crc32(name.encode("utf-8"))])
    return int(ss.generate_state(1)[0])


def rng_for(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng(subseed(seed, name))
