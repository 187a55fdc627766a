"""Counter-based random streams.

Every random draw in the package comes from a Philox4x64 generator keyed by
(seed, stream index), so any consumer can be re-run in isolation and results
do not depend on evaluation order or thread scheduling.

The stream index is folded from a tuple of small nonnegative integers:

    fold(i0, i1, i2, ...) = i0 + i1 * 2**20 + i2 * 2**40 + ...

giving a 64-bit word as long as each component stays below 2**20 (asserted).
The Philox key is the pair (seed mod 2**64, fold(indices)).
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_COMPONENT_BITS = 20


def fold_indices(indices: tuple[int, ...]) -> int:
    word = 0
    for pos, idx in enumerate(indices):
        if idx < 0 or idx >= 1 << _COMPONENT_BITS:
            raise ValueError(f"stream index component out of range: {idx}")
        word |= idx << (pos * _COMPONENT_BITS)
    return word & _MASK64


def stream(seed: int, *indices: int) -> np.random.Generator:
    """Independent generator for the given (seed, indices) address."""
    key = np.array([seed & _MASK64, fold_indices(indices)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
