"""Pure Gaussian states, symplectic eigenvalues and entanglement entropy.

Quadratures are paired per site, R = [x_1, p_1, ..., x_N, p_N], with
x = (a + a^dag)/sqrt2 and p = i(a^dag - a)/sqrt2, so the symplectic form
is Omega = i tau2 (block-diagonal [[0, 1], [-1, 0]]).  The covariance
convention is the anticommutator one,

    Gamma_ij = <{R_i - <R_i>, R_j - <R_j>}>,

for which the vacuum is Gamma = 1, physical states satisfy
Gamma + i Omega >= 0, and pure states have det Gamma = 1 with all
symplectic eigenvalues equal to 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .operators import DynamicalMatrix, quadrature_rotation, symplectic_form
from .dynamics import Trajectory

__all__ = [
    "GaussianState",
    "EntanglementReport",
    "entanglement_report",
    "random_pure_cm",
    "random_symplectic",
    "symplectic_eigenvalues",
    "entanglement_entropy",
    "ee_trajectory",
    "quadrature_propagator",
    "uncertainty_defect",
]

NU_CLAMP_TOL = 1e-9      # symplectic eigenvalues this far below 1 are noise


@dataclass
class GaussianState:
    mean: np.ndarray          # real quadrature means, length 2N
    cov: np.ndarray           # real symmetric 2N x 2N covariance

    @property
    def n_modes(self) -> int:
        return self.mean.size // 2


@dataclass
class EntanglementReport:
    sites: list[int]
    nus: np.ndarray
    entropy: float
    base: str = "nats"


def entanglement_report(cov: np.ndarray, sites, base: str = "nats",
                        tol: float = NU_CLAMP_TOL) -> EntanglementReport:
    """Symplectic eigenvalues and entropy of the reduced state on sites;
    base "nats" (natural log, default) or "bits"."""
    if base not in ("nats", "bits"):
        raise ValueError(f"unknown base {base!r}")
    nus = symplectic_eigenvalues(cov, sites)
    s = entanglement_entropy(cov, sites, tol=tol)
    if base == "bits":
        s /= np.log(2.0)
    return EntanglementReport(sites=list(sites), nus=nus, entropy=s, base=base)


def _haar_unitary(n: int, rng) -> np.ndarray:
    """QR of a complex Ginibre matrix with phase-fixed R diagonal."""
    Z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def _orth_symplectic_from_unitary(Z: np.ndarray) -> np.ndarray:
    """Paired-ordering orthogonal symplectic O from the unitary Z = X + iY."""
    n = Z.shape[0]
    X, Y = Z.real, Z.imag
    O = np.zeros((2 * n, 2 * n))
    O[0::2, 0::2] = X
    O[0::2, 1::2] = Y
    O[1::2, 0::2] = -Y
    O[1::2, 1::2] = X
    return O


def random_symplectic(n_modes: int, rng, squeeze_mean: float = 0.0,
                      squeeze_sd: float = 0.5) -> np.ndarray:
    """Random symplectic S = O diag(e^{r_j}, e^{-r_j}) O' (Euler form).

    O, O' come from independent Haar unitaries; the squeezing parameters
    r_j are Normal(squeeze_mean, squeeze_sd).  There is no uniform measure
    on the symplectic group, so the squeeze distribution is explicit
    configuration, not a canonical choice.
    """
    O1 = _orth_symplectic_from_unitary(_haar_unitary(n_modes, rng))
    O2 = _orth_symplectic_from_unitary(_haar_unitary(n_modes, rng))
    r = rng.normal(squeeze_mean, squeeze_sd, n_modes)
    d = np.empty(2 * n_modes)
    d[0::2] = np.exp(r)
    d[1::2] = np.exp(-r)
    return O1 @ (d[:, None] * O2)


def random_pure_cm(n_modes: int, seed: int, squeeze_mean: float = 0.0,
                   squeeze_sd: float = 0.5) -> GaussianState:
    """Random pure Gaussian state: Gamma = S^T S, zero means."""
    rng = np.random.default_rng(seed)
    S = random_symplectic(n_modes, rng, squeeze_mean, squeeze_sd)
    cov = S.T @ S
    cov = 0.5 * (cov + cov.T)
    return GaussianState(mean=np.zeros(2 * n_modes), cov=cov)


def uncertainty_defect(cov: np.ndarray) -> float:
    """Most negative eigenvalue of Gamma + i Omega (>= -tol for states)."""
    n = cov.shape[0] // 2
    w = np.linalg.eigvalsh(cov + 1j * symplectic_form(n))
    return float(w.min())


def symplectic_eigenvalues(cov: np.ndarray, sites) -> np.ndarray:
    """Positive eigenvalues of i Omega_A [Gamma]_A for a site subset A."""
    sites = list(sites)
    if not sites:
        raise ValueError("subsystem must be nonempty")
    idx = np.array(sorted(i for s in sites for i in (2 * s, 2 * s + 1)))
    sub = np.asarray(cov)[np.ix_(idx, idx)]
    Om = symplectic_form(len(sites))
    w = np.linalg.eigvals(1j * Om @ sub)
    nus = np.sort(w.real[w.real > 0])
    if len(nus) != len(sites):
        raise ValueError("symplectic eigenvalue extraction failed")
    return nus


def _binary_entropy_term(nu: float) -> float:
    if nu <= 1.0:
        return 0.0
    return ((nu + 1) / 2 * np.log((nu + 1) / 2)
            - (nu - 1) / 2 * np.log((nu - 1) / 2))


def entanglement_entropy(cov: np.ndarray, sites, tol: float = NU_CLAMP_TOL) -> float:
    """Bipartite entanglement entropy (nats) of the reduced state on sites.

    Symplectic eigenvalues within tol below 1 are clamped to 1 (solver
    noise); anything below 1 - 10 tol signals an invalid state.
    """
    nus = symplectic_eigenvalues(cov, sites)
    if np.any(nus < 1.0 - 10 * tol):
        raise ValueError(f"invalid state: symplectic eigenvalue {nus.min()} < 1")
    nus = np.maximum(nus, 1.0)
    return float(sum(_binary_entropy_term(nu) for nu in nus))


def quadrature_propagator(D, t: float) -> np.ndarray:
    """Real quadrature propagator S(t) with R(t) = S(t) R(0).

    S(t) = W V(t) W^dag with V(t) = exp(-iGt); for a Nambu generator the
    result is real and, in the Hamiltonian (unital) case, symplectic.
    """
    if isinstance(D, DynamicalMatrix):
        if D.basis != "nambu":
            raise ValueError("quadrature propagator requires a Nambu matrix")
        M = D.rapidity_generator()
    else:
        M = np.asarray(D, dtype=complex)
    n = M.shape[0] // 2
    W = quadrature_rotation(n)
    V = sla.expm(M * t)
    S = W @ V @ W.conj().T
    if np.abs(S.imag).max() > 1e-9 * max(1.0, np.abs(S.real).max()):
        raise ValueError("quadrature propagator not real; generator is not "
                         "a valid Nambu EOM")
    return S.real


def _symplectic_defect(S: np.ndarray) -> float:
    n = S.shape[0] // 2
    Om = symplectic_form(n)
    num = np.abs(S @ Om @ S.T - Om).max()
    return num / max(1.0, np.linalg.norm(S, 2) ** 2)


def ee_trajectory(D, state0: GaussianState, sites, times,
                  drift_tol: float = 1e-6) -> Trajectory:
    """S_A(t) for a Gaussian state under Hamiltonian (unital) evolution.

    Gamma(t) = S(t) Gamma_0 S(t)^T with the real quadrature propagator
    accumulated step by step; symplecticity drift beyond drift_tol
    (relative to ||S||^2) aborts with a diagnostic.
    """
    times = np.asarray(times, dtype=float)
    dts = np.diff(times)
    if not np.allclose(dts, dts[0], rtol=1e-10, atol=1e-14):
        raise ValueError("times must be uniform")
    Sdt = quadrature_propagator(D, dts[0])
    sites = list(sites)
    idx = np.array(sorted(i for s in sites for i in (2 * s, 2 * s + 1)))
    S = np.eye(Sdt.shape[0])
    out = np.empty(times.size)
    for i in range(times.size):
        rows = S[idx, :]
        sub = rows @ state0.cov @ rows.T
        out[i] = entanglement_entropy_from_sub(sub, len(sites))
        if i + 1 < times.size:
            S = Sdt @ S
    defect = _symplectic_defect(S)
    if defect > drift_tol:
        raise RuntimeError(f"symplecticity drift {defect:.2e} exceeds {drift_tol}")
    return Trajectory(times=times, values=out)


def entanglement_entropy_from_sub(sub: np.ndarray, n_sites: int,
                                  tol: float = NU_CLAMP_TOL) -> float:
    """Entropy from an already-restricted covariance block."""
    Om = symplectic_form(n_sites)
    w = np.linalg.eigvals(1j * Om @ sub)
    nus = np.sort(w.real[w.real > 0])
    if np.any(nus < 1.0 - 10 * tol):
        raise ValueError(f"invalid state: symplectic eigenvalue {nus.min()} < 1")
    nus = np.maximum(nus, 1.0)
    return float(sum(_binary_entropy_term(nu) for nu in nus))
