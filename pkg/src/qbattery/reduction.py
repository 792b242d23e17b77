"""Deterministic compensated reductions.

Every sum in this package that feeds an acceptance number goes through
:func:`compensated_sum`.  The input is split into fixed-size chunks, each
chunk is reduced with ``math.fsum`` (exactly rounded), and the chunk partials
are combined in chunk-index order.  Because the partition is a function of
the array length only, the result is bit-identical no matter how many
workers evaluate the chunks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

# Chunk size fixes the reduction tree; changing it changes results at the
# last-ulp level, so it is a constant, not a parameter.
_CHUNK = 1 << 16


def _chunk_sum(chunk: np.ndarray) -> float:
    # tolist() hands fsum native floats; iterating the ndarray is ~10x slower
    return math.fsum(chunk.tolist())


def compensated_sum(values, max_workers: int | None = None) -> float:
    """Sum ``values`` (float64) with compensated accuracy, deterministically.

    Parameters
    ----------
    values : array_like
        Values to reduce; flattened in C order.
    max_workers : int, optional
        If > 1, chunks are evaluated by a thread pool.  The partials are
        still combined in chunk order, so the result is bit-identical to the
        serial one.

    Returns
    -------
    float
        The compensated sum (0.0 for empty input).
    """
    arr = np.ascontiguousarray(values, dtype=np.float64).ravel()
    if arr.size == 0:
        return 0.0
    chunks = [arr[i:i + _CHUNK] for i in range(0, arr.size, _CHUNK)]
    if max_workers is not None and max_workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            partials = list(pool.map(_chunk_sum, chunks))
    else:
        partials = [_chunk_sum(c) for c in chunks]
    return math.fsum(partials)
