"""Pseudospectra on complex-plane grids via smallest singular values.

All norms are matrix 2-norms, so the resolvent norm is 1/s_min(G - z) and
the eps-pseudospectrum is the sublevel set {z : s(z) < eps}.  Contour
extraction is left to plotting tools; the grid of raw s(z) values is the
product.

Two evaluation backends exist: a compiled kernel (Schur triangularization
once, inverse Lanczos per node) and a pure-NumPy per-node SVD.  The
compiled one is used when importable unless QBL_FORCE_PURE_SMIN is set.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from . import _smin_np
from .operators import DynamicalMatrix, fmt

try:  # pragma: no cover - exercised only when the extension is built
    from . import _smin_cy
except ImportError:  # pragma: no cover
    _smin_cy = None

__all__ = [
    "PseudospectrumGrid",
    "PseudoEigenpair",
    "resolvent_norm_grid",
    "pseudo_eigenpair",
    "transient_bound_probe",
    "smin_backend_name",
    "smin_values",
]


def _use_compiled() -> bool:
    return _smin_cy is not None and not os.environ.get("QBL_FORCE_PURE_SMIN")


def smin_backend_name() -> str:
    return "cython" if _use_compiled() else "numpy"


def _pick_matrix(D, plane: str) -> np.ndarray:
    if isinstance(D, DynamicalMatrix):
        return D.G if plane == "matrix" else D.rapidity_generator()
    return np.asarray(D, dtype=complex)


def smin_values(A: np.ndarray, zs: np.ndarray, workers: int = 1,
                force_pure: bool = False) -> np.ndarray:
    """s_min(A - z 1) for each z in zs, using the selected backend."""
    A = np.asarray(A, dtype=complex)
    if force_pure or not _use_compiled():
        return _smin_np.smin_grid(A, zs, workers=workers)
    T, _ = sla.schur(A, output="complex")
    return _smin_cy.smin_grid(T, zs, workers=workers)


@dataclass
class PseudospectrumGrid:
    re: np.ndarray            # grid abscissae (n_re,)
    im: np.ndarray            # grid ordinates (n_im,)
    values: np.ndarray        # s(z), shape (n_im, n_re): row-major over im then re
    plane: str                # "matrix" or "rapidity"
    matrix_sha256: str

    def nodes(self) -> np.ndarray:
        return self.re[None, :] + 1j * self.im[:, None]

    def to_csv(self) -> str:
        lines = ["re,im,smin"]
        for j, y in enumerate(self.im):
            for i, x in enumerate(self.re):
                lines.append(f"{fmt(x)},{fmt(y)},{fmt(self.values[j, i])}")
        return "\n".join(lines) + "\n"

    def sidecar(self) -> str:
        meta = {
            "im_range": [float(self.im[0]), float(self.im[-1])],
            "matrix_sha256": self.matrix_sha256,
            "plane": self.plane,
            "re_range": [float(self.re[0]), float(self.re[-1])],
            "resolution": [int(self.re.size), int(self.im.size)],
            "smin_backend": smin_backend_name(),
        }
        return json.dumps(meta, sort_keys=True, indent=1) + "\n"


def _hash_matrix(A: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(A, dtype=complex).tobytes()).hexdigest()


def resolvent_norm_grid(D, region, resolution, workers: int = 1,
                        plane: str = "matrix") -> PseudospectrumGrid:
    """Grid of s(z) = s_min(G - z 1) over a rectangle of the complex plane.

    region = (re_min, re_max, im_min, im_max); resolution = (n_re, n_im)
    with at least 16 nodes per axis.  Nodes landing exactly on eigenvalues
    report s = 0; that is valid data, not an error.
    """
    re_min, re_max, im_min, im_max = map(float, region)
    n_re, n_im = (int(resolution), int(resolution)) if np.isscalar(resolution) \
        else (int(resolution[0]), int(resolution[1]))
    if n_re < 16 or n_im < 16:
        raise ValueError("resolution must be >= 16 per axis")
    A = _pick_matrix(D, plane)
    re = np.linspace(re_min, re_max, n_re)
    im = np.linspace(im_min, im_max, n_im)
    zs = (re[None, :] + 1j * im[:, None]).ravel()
    vals = smin_values(A, zs, workers=workers).reshape(n_im, n_re)
    return PseudospectrumGrid(re=re, im=im, values=vals, plane=plane,
                              matrix_sha256=_hash_matrix(A))


@dataclass
class PseudoEigenpair:
    z: complex
    eps: float                # s_min(G - z)
    vector: np.ndarray        # unit right singular vector
    residual: float           # ||(G - z) v||


def pseudo_eigenpair(D, z: complex, plane: str = "matrix") -> PseudoEigenpair:
    """Smallest singular pair of (G - z 1); the residual ||(G-z)v|| equals
    eps by construction and is re-verified numerically."""
    A = _pick_matrix(D, plane)
    n = A.shape[0]
    M = A - z * np.eye(n)
    try:
        _, s, Vh = np.linalg.svd(M)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise RuntimeError(f"SVD failed at z={z}: {exc}") from exc
    v = Vh[-1].conj()
    eps = float(s[-1])
    res = float(np.linalg.norm(M @ v))
    return PseudoEigenpair(z=complex(z), eps=eps, vector=v, residual=res)


def transient_bound_probe(D, z: complex, horizon: float, dt: float):
    """Deviation ||e^{M t} v - e^{z t} v|| of the pseudo-eigenpair (eps, v)
    at rapidity z, sampled on a uniform grid; M is the EOM generator.

    The initial slope is eps, so the curve stays below eps*t for small t.
    Returns (times, deviations, eps).
    """
    M = _pick_matrix(D, "rapidity")
    pair = pseudo_eigenpair(M, z)
    v = pair.vector
    steps = int(np.floor(horizon / dt + 1e-12))
    times = np.arange(steps + 1) * dt
    P = sla.expm(M * dt)
    dev = np.empty(steps + 1)
    cur = v.copy()
    for i, t in enumerate(times):
        dev[i] = np.linalg.norm(cur - np.exp(z * t) * v)
        cur = P @ cur
    return times, dev, pair.eps
