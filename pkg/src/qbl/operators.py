"""Dynamical matrices under finite boundary conditions, Bloch matrices and
Toeplitz symbols.

Conventions
-----------
Sites are ordered first, internal degrees second: the full array is
``Phi = [a_1, a_1^dag, ..., a_N, a_N^dag]`` for Nambu stencils (per-site
ordering [a_j, a_j^dag]) and ``[a_1, b_1, ..., a_N, b_N]`` for the reduced
coupled-chain basis.  The assembled matrix is

    G = 1_N (x) g_0 + sum_{r=1..R} (S^r (x) g_r + S^dag^r (x) g_{-r}),

with S the boundary-condition shift.  For Nambu stencils G generates
``d/dt Phi = -i G Phi`` (eigenvalues are energies, rapidities are
``sigma(-iG)``); for reduced stencils the stored matrix is the EOM
generator itself, ``d/dt phi = G phi`` (eigenvalues are rapidities).

Semi-infinite chains are never materialized: they are represented
analytically through the symbol g(z) (left boundary) and the associated
symbol g(1/z) (right boundary); see the wienerhopf module.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .model import CouplingStencil

__all__ = [
    "OBC",
    "PBC",
    "SIBC_LEFT",
    "SIBC_RIGHT",
    "BIBC",
    "DynamicalMatrix",
    "assemble",
    "assemble_gkls",
    "bloch",
    "symbol",
    "tau",
    "symplectic_form",
    "quadrature_rotation",
    "matrix_to_csv",
    "DimensionError",
    "DEFAULT_DIM_CAP",
]

OBC = "obc"
PBC = "pbc"
SIBC_LEFT = "sibc_left"
SIBC_RIGHT = "sibc_right"
BIBC = "bibc"

_FINITE_BCS = (OBC, PBC)

DEFAULT_DIM_CAP = 4096

_PAULI = {
    1: np.array([[0, 1], [1, 0]], dtype=complex),
    2: np.array([[0, -1j], [1j, 0]], dtype=complex),
    3: np.array([[1, 0], [0, -1]], dtype=complex),
}


class DimensionError(ValueError):
    pass


def tau(i: int, n_modes: int) -> np.ndarray:
    """Nambu Pauli constant tau_i = 1_n (x) sigma_i (size 2 n_modes)."""
    return np.kron(np.eye(n_modes), _PAULI[i])


def symplectic_form(n_modes: int) -> np.ndarray:
    """Symplectic form Omega = i tau_2 in the paired quadrature ordering
    [x_1, p_1, ..., x_N, p_N]; encodes [R_k, R_l] = i Omega_kl."""
    return np.real(1j * tau(2, n_modes))


def quadrature_rotation(n_modes: int) -> np.ndarray:
    """Unitary W with R = W Phi mapping the Nambu array to quadratures.

    Per-site block (1/sqrt 2) [[1, 1], [-i, i]], i.e. x = (a + a^dag)/sqrt2,
    p = i (a^dag - a)/sqrt2.
    """
    w = np.array([[1, 1], [-1j, 1j]], dtype=complex) / np.sqrt(2)
    return np.kron(np.eye(n_modes), w)


@dataclass
class DynamicalMatrix:
    """Dense dynamical matrix for a finite chain.

    ``G`` follows the stencil's convention (see module docstring);
    ``rapidity_generator()`` always returns the matrix M with
    d/dt phi = M phi, so rapidities are its eigenvalues.
    """

    G: np.ndarray
    bc: str
    n: int
    stencil: CouplingStencil

    @property
    def basis(self) -> str:
        return self.stencil.basis

    @property
    def dim(self) -> int:
        return self.G.shape[0]

    def rapidity_generator(self) -> np.ndarray:
        if self.basis == "nambu":
            return -1j * self.G
        return self.G


def _shift(bc: str, n: int) -> np.ndarray:
    S = np.diag(np.ones(n - 1), 1)
    if bc == PBC:
        S[-1, 0] = 1.0 if n > 1 else S[0, 0] + 1.0
    return S


def assemble(stencil: CouplingStencil, bc: str, n: int,
             dim_cap: int = DEFAULT_DIM_CAP) -> DynamicalMatrix:
    """Assemble the dense dynamical matrix for n sites under OBC or PBC.

    PBC with n <= 2R makes distinct shifts coincide; the wraparound blocks
    then accumulate additively (degenerate-geometry convention).
    """
    if bc not in _FINITE_BCS:
        raise ValueError(f"assemble supports OBC/PBC, got {bc!r}")
    if n < 1:
        raise ValueError("n must be >= 1")
    b = stencil.block_size
    if b * n > dim_cap:
        raise DimensionError(f"matrix dimension {b * n} exceeds cap {dim_cap}")
    S = _shift(bc, n)
    G = np.kron(np.eye(n), stencil.g[0])
    Sp = np.eye(n)
    for r in range(1, stencil.rng + 1):
        Sp = Sp @ S
        G += np.kron(Sp, stencil.g[r]) + np.kron(Sp.T, stencil.g[-r])
    return DynamicalMatrix(G=G, bc=bc, n=n, stencil=stencil)


def assemble_gkls(stencil: CouplingStencil, bc: str, n: int) -> np.ndarray:
    """Dense GKLS matrix from the incoherent stencil parts m_r.

    Uses the same shift assembly as the dynamical matrix: the stencil
    stores the already-truncatable blocks, so imposing OBCs just drops the
    wraparound (the block-circulant ring form truncates to block-Toeplitz).
    """
    if stencil.m is None:
        raise ValueError("stencil carries no incoherent parts")
    if bc not in _FINITE_BCS:
        raise ValueError(f"assemble_gkls supports OBC/PBC, got {bc!r}")
    S = _shift(bc, n)
    M = np.kron(np.eye(n), stencil.m[0])
    Sp = np.eye(n)
    for r in range(1, stencil.rng + 1):
        Sp = Sp @ S
        M += np.kron(Sp, stencil.m[r]) + np.kron(Sp.T, stencil.m[-r])
    return M


def bloch(stencil: CouplingStencil, k: float) -> np.ndarray:
    """Bloch matrix g(k) = sum_r g_r e^{i k r} (2d x 2d)."""
    b = stencil.block_size
    out = np.zeros((b, b), dtype=complex)
    for r in range(-stencil.rng, stencil.rng + 1):
        out += stencil.g[r] * np.exp(1j * k * r)
    return out


def symbol(stencil: CouplingStencil, z: complex, associated: bool = False) -> np.ndarray:
    """Toeplitz symbol g(z) = sum_r g_r z^r, or g(1/z) when associated.

    The restriction z = e^{ik} coincides with bloch(stencil, k).
    """
    if z == 0:
        raise ValueError("symbol undefined at z = 0")
    if associated:
        z = 1.0 / z
    b = stencil.block_size
    out = np.zeros((b, b), dtype=complex)
    for r in range(-stencil.rng, stencil.rng + 1):
        out += stencil.g[r] * z ** r
    return out


def fmt(x) -> str:
    """Shortest round-trip decimal form of a float (deterministic)."""
    return repr(float(x))


def matrix_to_csv(G: np.ndarray) -> str:
    """Row-major CSV serialization with "re,im" pairs per entry."""
    buf = io.StringIO()
    for row in np.atleast_2d(G):
        buf.write(",".join(f"{fmt(v.real)},{fmt(v.imag)}" for v in row))
        buf.write("\n")
    return buf.getvalue()
