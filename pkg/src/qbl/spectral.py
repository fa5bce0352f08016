"""Eigenanalysis of dynamical matrices: rapidities, stability gaps, Krein
signatures, exceptional points, condition numbers, and the finite- vs
infinite-size stability classification."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .model import CouplingStencil
from .operators import DynamicalMatrix, bloch, tau

__all__ = [
    "SpectralReport",
    "KreinData",
    "TYPE_I_DM",
    "TYPE_II_DM",
    "ANOMALOUSLY_RELAXING",
    "WELL_BEHAVED",
    "INCONCLUSIVE",
    "ClassificationResult",
    "rapidities",
    "stability_gap",
    "bulk_stability_gap",
    "krein_analysis",
    "krein_signature",
    "condition_number",
    "detect_exceptional_point",
    "spectral_report",
    "classify",
    "is_pseudo_hermitian",
]


def _rapidity_matrix(D) -> np.ndarray:
    if isinstance(D, DynamicalMatrix):
        return D.rapidity_generator()
    return np.asarray(D, dtype=complex)


def _stored_matrix(D) -> np.ndarray:
    if isinstance(D, DynamicalMatrix):
        return D.G
    return np.asarray(D, dtype=complex)


def rapidities(D) -> np.ndarray:
    """Eigenvalues of the EOM generator (sigma(-iG) for Nambu matrices),
    sorted by descending real part, then descending imaginary part."""
    lam = np.linalg.eigvals(_rapidity_matrix(D))
    order = np.lexsort((-lam.imag, -lam.real))
    return lam[order]


def stability_gap(D) -> float:
    """Largest real part of the rapidity spectrum."""
    return float(np.max(np.linalg.eigvals(_rapidity_matrix(D)).real))


def _bulk_gap_at(stencil: CouplingStencil, k: float) -> float:
    g = bloch(stencil, k)
    m = -1j * g if stencil.basis == "nambu" else g
    return float(np.max(np.linalg.eigvals(m).real))


def bulk_stability_gap(stencil: CouplingStencil, k_grid: int = 256) -> float:
    """Stability gap of the bi-infinite chain: max over k of the rapidity
    band real parts, refined by golden-section search around the grid max."""
    if k_grid < 64:
        raise ValueError("k_grid must be >= 64")
    ks = np.linspace(-np.pi, np.pi, k_grid, endpoint=False)
    vals = np.array([_bulk_gap_at(stencil, k) for k in ks])
    i = int(np.argmax(vals))
    dk = 2 * np.pi / k_grid
    a, b = ks[i] - dk, ks[i] + dk
    # golden-section maximization of a continuous band envelope
    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    c, d = b - inv_phi * (b - a), a + inv_phi * (b - a)
    fc, fd = _bulk_gap_at(stencil, c), _bulk_gap_at(stencil, d)
    for _ in range(80):
        if b - a < 1e-12:
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = _bulk_gap_at(stencil, c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = _bulk_gap_at(stencil, d)
    return max(vals[i], fc, fd)


def is_pseudo_hermitian(G: np.ndarray, tol: float = 1e-10) -> bool:
    """Check G = tau3 G^dag tau3 (entrywise, relative to ||G||)."""
    n = G.shape[0] // 2
    t3 = tau(3, n)
    scale = max(np.abs(G).max(), 1e-300)
    return bool(np.abs(G - t3 @ G.conj().T @ t3).max() <= tol * scale)


@dataclass
class KreinData:
    """Per-eigenpair tau3 signatures of the real eigenvalues of a
    pseudo-Hermitian matrix, plus detected opposite-signature collisions."""

    eigenvalues: np.ndarray          # real eigenvalues only
    signatures: np.ndarray           # raw psi^dag tau3 psi (Euclidean-normalized)
    signs: np.ndarray                # sign(signatures)
    collisions: list[tuple[int, int]]
    degeneracy_tol: float


def krein_signature(vec: np.ndarray) -> float:
    """psi^dag tau3 psi for a Euclidean-normalized eigenvector; the sign is
    the Krein signature, the magnitude (<= 1) is kept for diagnostics."""
    v = vec / np.linalg.norm(vec)
    n = v.shape[0] // 2
    return float(np.real(v.conj() @ (tau(3, n) @ v)))


def krein_analysis(D, degeneracy_tol: float | None = None,
                   real_tol: float = 1e-8) -> KreinData:
    """Krein signatures of real eigenvalues and opposite-signature
    near-degeneracies (Krein collisions).

    Requires a pseudo-Hermitian stored matrix; the default pairing
    tolerance is 1e-7 * ||G||_2.
    """
    G = _stored_matrix(D)
    if not is_pseudo_hermitian(G):
        raise ValueError("krein_analysis requires a pseudo-Hermitian matrix")
    nrm = np.linalg.norm(G, 2)
    if degeneracy_tol is None:
        degeneracy_tol = 1e-7 * max(nrm, 1.0)
    w, V = np.linalg.eig(G)
    keep = np.abs(w.imag) <= real_tol * max(nrm, 1.0)
    w = w[keep].real
    V = V[:, keep]
    order = np.argsort(w)
    w, V = w[order], V[:, order]
    sig = np.array([krein_signature(V[:, i]) for i in range(V.shape[1])])
    signs = np.sign(sig)
    collisions = []
    for i in range(len(w)):
        for j in range(i + 1, len(w)):
            if w[j] - w[i] > degeneracy_tol:
                break
            if signs[i] * signs[j] < 0:
                collisions.append((i, j))
    return KreinData(eigenvalues=w, signatures=sig, signs=signs,
                     collisions=collisions, degeneracy_tol=degeneracy_tol)


def condition_number(D, warn_threshold: float = 1e8) -> float:
    """Condition number K = ||L|| ||L^-1|| of the modal (eigenvector) matrix.

    Near-defective matrices produce a very large K; a warning is emitted
    instead of failing, since K itself is the diagnostic of interest.
    """
    G = _stored_matrix(D)
    _, L = np.linalg.eig(G)
    s = np.linalg.svd(L, compute_uv=False)
    if s[-1] <= np.finfo(float).eps * s[0] * G.shape[0]:
        warnings.warn("modal matrix numerically singular; K unreliable",
                      stacklevel=2)
        return np.inf
    K = float(s[0] / s[-1])
    if K > warn_threshold:
        warnings.warn(f"near-defective matrix: K = {K:.3e}", stacklevel=2)
    return K


def detect_exceptional_point(D, tol: float = 1e-8) -> bool:
    """True when two eigenvectors coalesce (overlap above 1 - tol) or the
    eigenvector matrix is rank-deficient at tolerance tol."""
    G = _stored_matrix(D)
    _, L = np.linalg.eig(G)
    L = L / np.linalg.norm(L, axis=0)
    s = np.linalg.svd(L, compute_uv=False)
    if s[-1] < tol * s[0]:
        return True
    ov = np.abs(L.conj().T @ L)
    np.fill_diagonal(ov, 0.0)
    return bool(ov.max() > 1 - tol)


@dataclass
class SpectralReport:
    eigenvalues: np.ndarray          # rapidities, sorted
    modal_matrix: np.ndarray         # right eigenvectors (columns)
    stability_gap: float
    lindblad_gap: float | None       # |gap| when gap < 0, else None
    condition_number: float
    diagonalizable: bool
    krein: KreinData | None = None


def spectral_report(D, ep_tol: float = 1e-8, with_krein: bool = True) -> SpectralReport:
    """Bundle of the per-matrix spectral diagnostics."""
    M = _rapidity_matrix(D)
    lam, L = np.linalg.eig(M)
    order = np.lexsort((-lam.imag, -lam.real))
    lam, L = lam[order], L[:, order]
    gap = float(np.max(lam.real))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        K = condition_number(D)
    krein = None
    if with_krein:
        try:
            krein = krein_analysis(D)
        except ValueError:
            krein = None
    return SpectralReport(
        eigenvalues=lam,
        modal_matrix=L,
        stability_gap=gap,
        lindblad_gap=(abs(gap) if gap < 0 else None),
        condition_number=K,
        diagonalizable=not detect_exceptional_point(D, ep_tol),
        krein=krein,
    )


TYPE_I_DM = "type_i_dm"
TYPE_II_DM = "type_ii_dm"
ANOMALOUSLY_RELAXING = "anomalously_relaxing"
WELL_BEHAVED = "well_behaved"
INCONCLUSIVE = "inconclusive"


@dataclass
class ClassificationResult:
    label: str
    gap_sequence: list[tuple[int, float]]
    sibc_gap: float
    obc_gap_extrapolated: float | None
    disagreement: bool | None
    discontinuity: bool | None
    plateau: bool
    detail: str = ""


def _stable(gap: float, tol: float) -> bool:
    # marginal gaps (|gap| <= tol) count as stable; cf. the rich steady-state
    # structure of pseudo-Hermitian generators at gap 0
    return gap <= tol


def classify(gap_sequence, sibc_gap: float, tol: float = 1e-6,
             plateau_rtol: float = 0.05) -> ClassificationResult:
    """Classify an open-boundary family by dynamical-stability disagreement
    and stability-gap discontinuity.

    Parameters
    ----------
    gap_sequence : iterable of (N, gap) pairs for increasing sizes (>= 4).
    sibc_gap : stability gap of the semi-infinite chain.
    tol : stability-sign tolerance and discontinuity threshold.
    plateau_rtol : relative change across the two largest sizes below which
        the sequence counts as converged (no curve fitting is attempted;
        convergence need not be monotonic).

    The finite-size extrapolation is a plateau detection; when the sequence
    has not plateaued but its distance to sibc_gap is shrinking, it is
    treated as converging to sibc_gap (no discontinuity).  Anything else is
    reported INCONCLUSIVE, never silently classified.
    """
    seq = sorted((int(n), float(g)) for n, g in gap_sequence)
    if len(seq) < 4:
        raise ValueError("need at least 4 sizes")
    gaps = np.array([g for _, g in seq])
    g_prev, g_last = gaps[-2], gaps[-1]

    plateau = abs(g_last - g_prev) <= max(tol, plateau_rtol * abs(g_last))
    d = np.abs(gaps - sibc_gap)
    converging = d[-1] <= max(tol, 0.75 * d[0]) and d[-1] <= d.min() + tol

    if plateau:
        g_inf = g_last
        discontinuity = abs(g_inf - sibc_gap) > tol
    elif converging:
        g_inf = sibc_gap
        discontinuity = False
    else:
        return ClassificationResult(
            label=INCONCLUSIVE, gap_sequence=seq, sibc_gap=sibc_gap,
            obc_gap_extrapolated=None, disagreement=None, discontinuity=None,
            plateau=False,
            detail="no plateau and no approach toward the semi-infinite gap")

    finite_stable = np.array([_stable(g, tol) for g in gaps])
    # disagreement judged on generic N: majority of the tested sizes
    generic_stable = finite_stable.sum() * 2 >= len(gaps)
    disagreement = generic_stable != _stable(sibc_gap, tol)

    if disagreement and discontinuity:
        label = TYPE_I_DM
    elif disagreement:
        label = TYPE_II_DM
    elif discontinuity:
        label = ANOMALOUSLY_RELAXING
    else:
        label = WELL_BEHAVED
    detail = ""
    if disagreement and not finite_stable.all() and not generic_stable:
        largest_unstable = max(n for (n, g) in seq if not _stable(g, tol))
        detail = f"largest unstable size observed: N={largest_unstable}"
    return ClassificationResult(
        label=label, gap_sequence=seq, sibc_gap=sibc_gap,
        obc_gap_extrapolated=float(g_inf), disagreement=bool(disagreement),
        discontinuity=bool(discontinuity), plateau=bool(plateau), detail=detail)
