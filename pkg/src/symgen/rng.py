"""Keyed random streams.

Every random decision in the generator is drawn from a Philox stream whose
key is derived from ``(master_seed, record_id, tag)``.  Philox is a
counter-based generator, so streams for different records or different
pipeline stages are independent and can be created in any order, in any
process, without coordination.
"""

from __future__ import annotations

import hashlib
from functools import lru_cache

import numpy as np

_MASK64 = (1 << 64) - 1


@lru_cache(maxsize=None)
def tag_code(tag: str) -> int:
    """Stable 64-bit code for a stream tag (independent of PYTHONHASHSEED)."""
    digest = hashlib.blake2b(tag.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def stream_key(master_seed: int, record_id: int, tag: str) -> np.ndarray:
    seq = np.random.SeedSequence(
        [master_seed & _MASK64, record_id & _MASK64, tag_code(tag)]
    )
    return seq.generate_state(2, np.uint64)


def stream(master_seed: int, record_id: int, tag: str) -> np.random.Generator:
    """Return an independent generator for one (seed, record, stage) triple."""
    return np.random.Generator(np.random.Philox(key=stream_key(master_seed, record_id, tag)))
