"""Linear-response susceptibility in frequency and time domain.

The susceptibility of the mode amplitudes to a weak coherent drive at
frequency omega is chi(omega) = i (omega - i eta - G)^{-1} with an
optional regularization eta for marginally stable generators; its 2-norm
equals the resolvent norm 1/s_min(G - (omega - i eta)).  The species-
selected map |chi_{2l-1, 2m-1}| (annihilation sector) is the quantity
plotted in response maps; the time-domain kernel is
chi(t') = -i Theta(t') V(t') tau3.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .operators import DynamicalMatrix, tau
from .pseudospec import pseudo_eigenpair
from .spectral import stability_gap

__all__ = [
    "ResponseMatrix",
    "susceptibility",
    "time_domain_response",
    "end_to_end_gain",
    "pseudoresonance_profile",
    "species_map",
]


@dataclass
class ResponseMatrix:
    omega: float
    eta: float
    chi: np.ndarray

    @property
    def n_sites(self) -> int:
        return self.chi.shape[0] // 2

    def species_map(self) -> np.ndarray:
        return species_map(self.chi)


def species_map(chi: np.ndarray) -> np.ndarray:
    """|chi| restricted to the annihilation sector (odd 1-based indices)."""
    return np.abs(chi[0::2, 0::2])


def _matrix(D) -> np.ndarray:
    """Energy-convention matrix: response poles sit at real drive
    frequencies matching the mode energies.  Reduced-basis generators A
    (EOM d/dt phi = A phi) map to G = iA."""
    if isinstance(D, DynamicalMatrix):
        return D.G if D.basis == "nambu" else 1j * D.G
    return np.asarray(D, dtype=complex)


def susceptibility(D, omega: float, eta: float | None = None) -> ResponseMatrix:
    """chi(omega) = i (omega - i eta - G)^{-1} by dense solve.

    eta defaults to 0 for strictly stable generators and to
    1e-9 ||G||_2 otherwise; singular shifts raise with the nearest
    eigenvalue reported.
    """
    G = _matrix(D)
    n = G.shape[0]
    if eta is None:
        gap = stability_gap(D if isinstance(D, DynamicalMatrix) else G)
        eta = 0.0 if gap < -1e-9 else 1e-9 * np.linalg.norm(G, 2)
    shift = omega - 1j * eta
    M = shift * np.eye(n) - G
    try:
        chi = 1j * np.linalg.solve(M, np.eye(n))
    except np.linalg.LinAlgError:
        lam = np.linalg.eigvals(G)
        nearest = lam[np.argmin(np.abs(lam - shift))]
        raise ValueError(
            f"susceptibility singular at omega={omega}: eigenvalue {nearest} "
            f"coincides with the shift; increase eta") from None
    return ResponseMatrix(omega=float(omega), eta=float(eta), chi=chi)


def time_domain_response(D, t: float) -> np.ndarray:
    """Causal response kernel chi(t) = -i Theta(t) V(t) tau3."""
    G = _matrix(D)
    n = G.shape[0]
    if t < 0:
        return np.zeros((n, n), dtype=complex)
    V = sla.expm(-1j * G * t)
    return -1j * V @ tau(3, n // 2)


def end_to_end_gain(resp: ResponseMatrix) -> float:
    """|chi_{2N-1, 1}|: last-site response to a first-site drive."""
    return float(np.abs(resp.chi[-2, 0]))


def pseudoresonance_profile(D, omega: float, eta: float | None = None):
    """Pseudo-eigenpair at the drive frequency alongside chi row profiles.

    Returns (eps, mode_profile, row_profiles): mode_profile is the
    per-site magnitude of the smallest singular vector of (G - omega);
    row_profiles[l] is the magnitude profile of the l-th row of the
    species-selected susceptibility.
    """
    pair = pseudo_eigenpair(D, omega)
    v = pair.vector
    mode_profile = np.abs(v[0::2])
    resp = susceptibility(D, omega, eta)
    row_profiles = resp.species_map()
    return pair.eps, mode_profile, row_profiles
