"""Pure-NumPy backend for smallest-singular-value grids.

One dense SVD per node.  Correct and simple; the compiled backend in
_smin_cy reproduces these values (up to solver noise) much faster by
triangularizing once and running inverse Lanczos per node.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla

BACKEND = "numpy"


def smin_grid(A: np.ndarray, zs: np.ndarray, workers: int = 1) -> np.ndarray:
    """Smallest singular value of (A - z 1) for every z in zs (flat array)."""
    A = np.asarray(A, dtype=complex)
    n = A.shape[0]
    zs = np.asarray(zs, dtype=complex).ravel()
    out = np.empty(zs.shape[0], dtype=float)

    def node(i):
        out[i] = sla.svdvals(A - zs[i] * np.eye(n))[-1]

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as ex:
            list(ex.map(node, range(zs.shape[0])))
    else:
        for i in range(zs.shape[0]):
            node(i)
    return out
