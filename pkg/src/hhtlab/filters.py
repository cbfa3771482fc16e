"""Mode-selective reconstruction from a decomposition.

Both filters stay in the space the decomposition was computed in (e.g. log
prices); back-transforming is the caller's job.
"""

import numpy as np

from .emd import Decomposition


def _check(decomp: Decomposition, m: int) -> None:
    if not 1 <= m <= decomp.n_modes:
        raise ValueError(f"cutoff m={m} outside 1..{decomp.n_modes}")


def low_pass(decomp: Decomposition, m: int) -> np.ndarray:
    """Modes ``m..n`` plus the residue."""
    _check(decomp, m)
    return decomp.imfs[m - 1:].sum(axis=0) + decomp.residue


def high_pass(decomp: Decomposition, m: int) -> np.ndarray:
    """Modes ``1..m``."""
    _check(decomp, m)
    return decomp.imfs[:m].sum(axis=0)
