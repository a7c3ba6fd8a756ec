"""Deterministic random streams.

Every random draw in this package flows through a Philox4x64 counter-based
bit generator keyed by ``(seed, stream_word)``, where the stream word packs a
purpose tag and an index as ``tag << 32 | index``.  Identical
``(seed, tag, index)`` triples therefore produce byte-identical draws on any
platform and any run, which is part of the package's external contract:
dataset synthesis, random projections and train/test splits are all pure
functions of their inputs and seed.

Stream tags
-----------
==================  =====
synthetic datasets  0
random projections  1
train/test splits   2 (index = trial number)
tie scenarios       3
==================  =====
"""

from __future__ import annotations

import numpy as np

STREAM_SYNTH = 0
STREAM_PROJECTION = 1
STREAM_SPLIT = 2
STREAM_TIE_SCENARIO = 3

_INDEX_BITS = 32


def stream_word(tag: int, index: int = 0) -> int:
    """Pack a purpose tag and an index into one 64-bit stream word."""
    if not 0 <= tag < 2 ** (64 - _INDEX_BITS):
        raise ValueError(f"stream tag out of range: {tag}")
    if not 0 <= index < 2 ** _INDEX_BITS:
        raise ValueError(f"stream index out of range: {index}")
    return (tag << _INDEX_BITS) | index


def generator(seed: int, tag: int, index: int = 0) -> np.random.Generator:
    """Return the Philox generator for ``(seed, tag, index)``.

    ``seed`` must fit in an unsigned 64-bit word; negative seeds are
    rejected rather than wrapped so that configs stay unambiguous.
    """
    if not 0 <= seed < 2 ** 64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    key = np.array([seed, stream_word(tag, index)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
