"""Semi-infinite spectra via Wiener-Hopf partial indices of 2x2 symbols.

A point lam is in the spectrum of the half-infinite chain iff it lies on
the bulk curve sigma(g(e^{ik})) or the shifted symbol g(z) - lam has a
nonzero left partial index -- for the left-boundary chain; the right-
boundary chain is governed by the associated symbol g(1/z).  The union of
the two covers the full semi-infinite spectrum.

For the nearest-neighbor 2x2 symbols used here, write
P(z) = z (g(z) - lam) and p(z) = det P(z) (a quartic).  The winding number
of det(g(z) - lam) equals (#roots of p inside the unit circle) - 2, and
when it vanishes the two inside roots z1, z2 feed the algebraic
non-triviality conditions

    b(z2) a(z1) = a(z2) b(z1)   and   d(z2) c(z1) = c(z2) d(z1),

which are necessary, and for z1 != z2 sufficient, for the nontrivial index
pair {+1, -1}.  Coincident roots fall back to the explicit recursive
factorization P = A_+ D A_-, which also covers nonzero winding.

All lam probes live in the symbol's eigenvalue plane (the energy plane for
Nambu stencils, the rapidity plane for reduced stencils).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .model import CouplingStencil
from .operators import bloch, fmt
from .spectral import bulk_stability_gap

__all__ = [
    "DetLaurent",
    "PartialIndexResult",
    "FactorizationError",
    "OnBulkCurveError",
    "det_laurent",
    "winding_number",
    "partial_index_test",
    "wh_factorize_2x2",
    "sibc_membership_grid",
    "sibc_stability_gap",
    "MembershipGrid",
    "BULK",
    "MEMBER",
    "NONMEMBER",
    "INCONCLUSIVE_NODE",
]

TOL_CIRCLE = 1e-9       # inside/on-circle classification band for roots
ROOT_TOL = 1e-7         # pairwise root distance below which roots coincide
COND_RTOL = 1e-8        # Theorem-condition residual tolerance (relative)
VERIFY_RTOL = 1e-8      # factor-identity verification tolerance

BULK = "bulk"
MEMBER = "member"
NONMEMBER = "nonmember"
INCONCLUSIVE_NODE = "inconclusive"


class OnBulkCurveError(ValueError):
    """Probe sits on the bulk symbol curve; winding/index test undefined."""


class FactorizationError(RuntimeError):
    pass


def _stencil_mats(stencil: CouplingStencil, associated: bool):
    if stencil.block_size != 2 or stencil.rng != 1:
        raise ValueError("Wiener-Hopf analysis implemented for 2x2, R=1 symbols")
    if associated:
        stencil = stencil.associated()
    return stencil.g[-1], stencil.g[0], stencil.g[1]


def _symbol_scale(stencil: CouplingStencil, lam: complex) -> float:
    s = max(np.abs(stencil.g[r]).max() for r in (-1, 0, 1))
    return max(s + abs(lam), 1e-300)


@dataclass
class DetLaurent:
    """Determinant data of the shifted symbol at one probe point.

    coeffs are the ascending coefficients of p(z) = z^2 det(g(z) - lam);
    p(e^{ik}) = e^{2ik} det(g(e^{ik}) - lam) by construction.
    """

    lam: complex
    coeffs: np.ndarray
    roots: np.ndarray
    inside_roots: np.ndarray
    on_circle: bool
    degree: int


def _detp_coeffs(gm1, g0, g1, lam) -> np.ndarray:
    A, B, C = gm1, g0 - lam * np.eye(2), g1
    c = (np.convolve([A[0, 0], B[0, 0], C[0, 0]], [A[1, 1], B[1, 1], C[1, 1]])
         - np.convolve([A[0, 1], B[0, 1], C[0, 1]], [A[1, 0], B[1, 0], C[1, 0]]))
    return c  # length 5, ascending powers of z


def det_laurent(stencil: CouplingStencil, lam: complex,
                associated: bool = False) -> DetLaurent:
    """Quartic determinant polynomial of z (g(z) - lam) and its roots."""
    gm1, g0, g1 = _stencil_mats(stencil, associated)
    c = _detp_coeffs(gm1, g0, g1, lam)
    scale = max(np.abs(c).max(), 1e-300)
    cc = c.copy()
    cc[np.abs(cc) < 1e-14 * scale] = 0.0
    desc = np.trim_zeros(cc[::-1], "f")
    roots = np.roots(desc) if desc.size > 1 else np.array([], dtype=complex)
    degree = desc.size - 1
    absr = np.abs(roots)
    on_circle = bool(np.any(np.abs(absr - 1.0) <= TOL_CIRCLE))
    inside = roots[absr < 1.0 - TOL_CIRCLE]
    return DetLaurent(lam=complex(lam), coeffs=c, roots=roots,
                      inside_roots=inside, on_circle=on_circle, degree=degree)


def _curve_points(stencil: CouplingStencil, k_samples: int = 2048) -> np.ndarray:
    ks = np.linspace(-np.pi, np.pi, k_samples, endpoint=False)
    pts = np.empty((k_samples, stencil.block_size), dtype=complex)
    for i, k in enumerate(ks):
        pts[i] = np.linalg.eigvals(bloch(stencil, k))
    return pts.ravel()


def _dist_to_curve(stencil: CouplingStencil, lam, k_samples: int = 2048):
    pts = _curve_points(stencil, k_samples)
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    return np.abs(lam[:, None] - pts[None, :]).min(axis=1)


def winding_number(stencil: CouplingStencil, lam: complex,
                   k_samples: int = 1024, associated: bool = False,
                   on_curve_tol: float = 1e-9) -> int:
    """Winding of det(g(e^{ik}) - lam) about zero, by accumulated phase.

    Starts from k_samples uniform samples (>= 1024) and bisects every
    segment whose phase increment reaches pi/2 until all increments are
    resolved.  Raises OnBulkCurveError when the determinant nearly
    vanishes on the circle.
    """
    if k_samples < 1024:
        raise ValueError("k_samples must be >= 1024")
    gm1, g0, g1 = _stencil_mats(stencil, associated)
    pc = _detp_coeffs(gm1, g0, g1, lam)

    def detval(z):
        # det(g(z) - lam) = p(z) / z^2
        return _polyval_asc(pc, z) / (z * z)

    scale = _symbol_scale(stencil, lam) ** 2
    ks = np.linspace(-np.pi, np.pi, k_samples + 1)
    zs = np.exp(1j * ks)
    vals = _polyval_asc(pc, zs) / (zs * zs)
    if np.abs(vals).min() <= on_curve_tol * scale:
        raise OnBulkCurveError(f"probe {lam} lies on the bulk curve")
    total = 0.0
    stack = [(ks[i], ks[i + 1], vals[i], vals[i + 1]) for i in range(k_samples)]
    guard = 0
    while stack:
        k0, k1, d0, d1 = stack.pop()
        dphi = np.angle(d1 / d0)
        if abs(dphi) < np.pi / 2:
            total += dphi
            continue
        guard += 1
        if guard > 10 * k_samples:
            raise OnBulkCurveError(
                f"phase accumulation did not resolve near {lam}")
        km = 0.5 * (k0 + k1)
        dm = detval(np.exp(1j * km))
        if abs(dm) <= on_curve_tol * scale:
            raise OnBulkCurveError(f"probe {lam} lies on the bulk curve")
        stack.append((k0, km, d0, dm))
        stack.append((km, k1, dm, d1))
    nu = total / (2 * np.pi)
    nu_int = int(np.rint(nu))
    if abs(nu - nu_int) > 1e-6:
        raise OnBulkCurveError(f"non-integer winding {nu} at {lam}")
    return nu_int


# ---------------------------------------------------------------------------
# Partial indices

STATUS_BULK = "bulk_curve"
STATUS_TRIVIAL = "trivial"
STATUS_NONTRIVIAL = "nontrivial"
STATUS_DEGENERATE = "degenerate_fallback"
STATUS_INCONCLUSIVE = "inconclusive"


@dataclass
class PartialIndexResult:
    lam: complex
    status: str
    indices: tuple[int, int] | None = None
    winding: int | None = None
    residuals: tuple[float, float] | None = None
    detail: str = ""

    @property
    def nontrivial(self) -> bool:
        return self.status in (STATUS_NONTRIVIAL, STATUS_DEGENERATE) and \
            self.indices is not None and any(k != 0 for k in self.indices)


def _symbol_entries(gm1, g0, g1, lam, z):
    """Entries (a, b, c, d) of g(z) - lam at one or many z."""
    z = np.asarray(z, dtype=complex)
    ent = []
    for i in range(2):
        for j in range(2):
            lamij = lam if i == j else 0.0
            ent.append(gm1[i, j] / z + (g0[i, j] - lamij) + g1[i, j] * z)
    return ent  # a, b, c, d


CURVE_ROOT_TOL = 1e-6   # root this close to the unit circle => on the curve


def _on_bulk_curve(stencil: CouplingStencil, lam: complex,
                   root_tol: float = CURVE_ROOT_TOL) -> bool:
    """lam sits on sigma(g(e^{ik})) iff det(g(z) - lam) has a unit-circle
    root; quartic roots resolve this to roughly their own accuracy."""
    dl = det_laurent(stencil, lam)
    if dl.roots.size == 0:
        return bool(np.abs(dl.coeffs).max() <= 1e-14
                    * _symbol_scale(stencil, lam) ** 2)
    return bool(np.abs(np.abs(dl.roots) - 1.0).min() <= root_tol)


def partial_index_test(stencil: CouplingStencil, lam: complex,
                       associated: bool = False,
                       cond_rtol: float = COND_RTOL,
                       curve_root_tol: float = CURVE_ROOT_TOL) -> PartialIndexResult:
    """Decide triviality of the left partial indices of g(z) - lam.

    Fast path: winding from the inside-root count; when it vanishes, the
    algebraic two-root conditions with residual thresholds.  Coincident
    inside roots are resolved by the full factorization.  Residuals inside
    [tol, 10 tol) are reported inconclusive rather than forced.
    """
    work = stencil.associated() if associated else stencil
    dl = det_laurent(work, lam)
    if dl.roots.size and np.abs(np.abs(dl.roots) - 1.0).min() <= curve_root_tol:
        return PartialIndexResult(lam=complex(lam), status=STATUS_BULK)
    if dl.roots.size == 0 and np.abs(dl.coeffs).max() <= 1e-14 \
            * _symbol_scale(work, lam) ** 2:
        # determinant identically zero: the symbol is singular everywhere
        return PartialIndexResult(lam=complex(lam), status=STATUS_BULK,
                                  detail="identically singular symbol")
    nu = dl.inside_roots.size - 2
    if nu != 0:
        # nonzero winding forces at least one nonzero index; get the exact
        # pair from the factorization
        try:
            kap, _, _ = wh_factorize_2x2(work, lam)
            return PartialIndexResult(lam=complex(lam), status=STATUS_NONTRIVIAL,
                                      indices=tuple(kap), winding=nu)
        except FactorizationError as exc:
            return PartialIndexResult(lam=complex(lam),
                                      status=STATUS_INCONCLUSIVE,
                                      winding=nu, detail=str(exc))
    z1, z2 = dl.inside_roots
    gm1, g0, g1 = work.g[-1], work.g[0], work.g[1]
    a1, b1, c1, d1 = [e.item() for e in _symbol_entries(gm1, g0, g1, lam, z1)]
    a2, b2, c2, d2 = [e.item() for e in _symbol_entries(gm1, g0, g1, lam, z2)]
    r1 = abs(b2 * a1 - a2 * b1)
    r2 = abs(d2 * c1 - c2 * d1)
    dz = abs(z1 - z2)
    scale2 = _symbol_scale(work, lam) ** 2
    tol = cond_rtol * scale2 * max(dz, ROOT_TOL)
    if dz < ROOT_TOL:
        try:
            kap, _, _ = wh_factorize_2x2(work, lam)
        except FactorizationError as exc:
            return PartialIndexResult(lam=complex(lam),
                                      status=STATUS_INCONCLUSIVE,
                                      winding=0, residuals=(r1, r2),
                                      detail=f"degenerate roots: {exc}")
        return PartialIndexResult(lam=complex(lam), status=STATUS_DEGENERATE,
                                  indices=tuple(kap), winding=0,
                                  residuals=(r1, r2))
    if r1 < tol and r2 < tol:
        return PartialIndexResult(lam=complex(lam), status=STATUS_NONTRIVIAL,
                                  indices=(1, -1), winding=0,
                                  residuals=(r1, r2))
    if r1 < 10 * tol and r2 < 10 * tol:
        return PartialIndexResult(lam=complex(lam), status=STATUS_INCONCLUSIVE,
                                  winding=0, residuals=(r1, r2),
                                  detail="residuals in the ambiguous band")
    return PartialIndexResult(lam=complex(lam), status=STATUS_TRIVIAL,
                              indices=(0, 0), winding=0, residuals=(r1, r2))


# ---------------------------------------------------------------------------
# Explicit 2x2 factorization

def _polyval_asc(c, z):
    out = np.zeros_like(np.asarray(z, dtype=complex))
    for ci in c[::-1]:
        out = out * z + ci
    return out


def _remove_zero(Ap, Am, kap, zi, s, alpha, scale):
    """One zero-removal step: column op on A_+, elementary update of A_-.

    Returns updated (Ap, Am, kap) or None when the synthetic division of
    column s leaves a large remainder (wrong branch).
    """
    m = 1 - s
    newAp = Ap.copy()
    for i in range(2):
        num = Ap[i, s] - alpha * Ap[i, m]
        q2 = num[2]
        q1 = num[1] + zi * q2
        rem = num[0] + zi * q1
        if abs(rem) > 1e-6 * max(scale, np.abs(num).max()):
            return None
        newAp[i, s] = np.array([q1, q2, 0.0], dtype=complex)
    # A_- update: Vt = 1 - (zi/z) E_ss + alpha z^{kap_s - kap_m} E_ms,
    # expressed in u = 1/z (the exponent kap_s - kap_m is <= 0 or alpha = 0)
    e = kap[s] - kap[m]
    if e > 0 and alpha != 0.0:
        return None
    Vt = np.zeros((2, 2, 3), dtype=complex)
    Vt[0, 0, 0] = Vt[1, 1, 0] = 1.0
    Vt[s, s, 1] -= zi
    if alpha != 0.0:
        Vt[m, s, -e] += alpha
    newAm = np.zeros((2, 2, 3), dtype=complex)
    for i in range(2):
        for j in range(2):
            acc = np.zeros(5, dtype=complex)
            for l in range(2):
                acc += np.convolve(Vt[i, l], Am[l, j])
            if np.abs(acc[3:]).max() > 1e-9 * max(1.0, np.abs(acc).max()):
                return None
            newAm[i, j] = acc[:3]
    newkap = kap.copy()
    newkap[s] += 1
    if newkap[0] < newkap[1]:  # reshuffle so exponents stay descending
        newAp = newAp[:, ::-1]
        newAm = newAm[::-1, :]
        newkap = newkap[::-1].copy()
    return newAp, newAm, newkap


def wh_factorize_2x2(stencil: CouplingStencil, lam: complex,
                     associated: bool = False,
                     verify_rtol: float = VERIFY_RTOL):
    """Left Wiener-Hopf factorization of x(z) = g(z) - lam.

    Works on P(z) = z x(z) = A_+(z) diag(z^k1, z^k2) A_-(z): the inside
    zeros of det P are removed from A_+ one by one; each removal increments
    one exponent and contributes an elementary factor to A_-.  The branch
    choice (which column carries the zero) is searched and validated by
    the synthetic-division remainder, and the final factor identity is
    verified at 8 random unit-circle points.

    Returns (partial_indices_of_x, factors, verify_residual) where factors
    is a dict with "a_plus" (ascending z-coefficients), "d_exponents" (the
    exponents of D for P), and "a_minus" (coefficients in 1/z).
    """
    gm1, g0, g1 = _stencil_mats(stencil, associated)
    dl = det_laurent(stencil, lam, associated)
    if dl.on_circle:
        raise FactorizationError("determinant root on the unit circle")
    scale = _symbol_scale(stencil, lam)
    I2 = np.eye(2, dtype=complex)
    Ap0 = np.zeros((2, 2, 3), dtype=complex)
    Ap0[:, :, 0], Ap0[:, :, 1], Ap0[:, :, 2] = gm1, g0 - lam * I2, g1
    Am0 = np.zeros((2, 2, 3), dtype=complex)
    Am0[:, :, 0] = I2
    kap0 = np.zeros(2, dtype=int)
    ins = sorted(dl.inside_roots, key=abs, reverse=True)
    # cluster numerically coincident roots onto their mean
    ins = np.asarray(ins, dtype=complex)
    for i in range(len(ins)):
        for j in range(i + 1, len(ins)):
            if abs(ins[i] - ins[j]) < ROOT_TOL:
                mid = 0.5 * (ins[i] + ins[j])
                ins[i] = ins[j] = mid

    def removal_branches(Ap, zi):
        Az = np.array([[_polyval_asc(Ap[i, j], zi) for j in range(2)]
                       for i in range(2)])
        colnrm = np.abs(Az).sum(axis=0)
        ref = max(colnrm.max(), 1e-300)
        branches = []
        if colnrm[0] <= 1e-7 * ref:
            branches.append((0, 0.0))
        if colnrm[0] > 1e-7 * ref:
            alpha = (Az[0, 1] / Az[0, 0]) if abs(Az[0, 0]) >= abs(Az[1, 0]) \
                else (Az[1, 1] / Az[1, 0])
            branches.append((1, complex(alpha)))
        if colnrm[1] <= 1e-7 * ref and (1, 0.0) not in branches:
            branches.append((1, 0.0))
        # last-resort alternatives for borderline numerics
        branches.append((0, 0.0))
        branches.append((1, 0.0))
        seen, uniq = set(), []
        for b in branches:
            key = (b[0], complex(b[1]))
            if key not in seen:
                seen.add(key)
                uniq.append(b)
        return uniq

    def recurse(Ap, Am, kap, remaining):
        if not len(remaining):
            return Ap, Am, kap
        zi = remaining[0]
        for s, alpha in removal_branches(Ap, zi):
            step = _remove_zero(Ap, Am, kap, zi, s, alpha, scale)
            if step is None:
                continue
            out = recurse(*step, remaining[1:])
            if out is not None:
                return out
        return None

    result = recurse(Ap0, Am0, kap0, list(ins))
    if result is None:
        raise FactorizationError(f"no consistent zero-removal branch at {lam}")
    Ap, Am, kap = result

    rng = np.random.default_rng(8128)
    worst = 0.0
    for t in rng.uniform(-np.pi, np.pi, 8):
        z = np.exp(1j * t)
        P = gm1 + (g0 - lam * I2) * z + g1 * z * z
        Apz = np.array([[_polyval_asc(Ap[i, j], z) for j in range(2)]
                        for i in range(2)])
        Amz = np.array([[_polyval_asc(Am[i, j], 1.0 / z) for j in range(2)]
                        for i in range(2)])
        D = np.diag([z ** kap[0], z ** kap[1]])
        worst = max(worst, float(np.abs(Apz @ D @ Amz - P).max()
                                 / max(np.abs(P).max(), 1e-300)))
    if worst > verify_rtol:
        raise FactorizationError(f"factor identity residual {worst:.2e} at {lam}")
    indices = tuple(int(k) - 1 for k in kap)
    factors = {"a_plus": Ap, "d_exponents": tuple(int(k) for k in kap),
               "a_minus": Am}
    return indices, factors, worst


# ---------------------------------------------------------------------------
# Membership grids and the semi-infinite stability gap

@dataclass
class MembershipGrid:
    re: np.ndarray
    im: np.ndarray
    member: np.ndarray        # bool, shape (n_im, n_re)
    status: np.ndarray        # object array of status strings
    plane: str = "symbol"

    def to_csv(self) -> str:
        lines = ["re,im,status"]
        for j, y in enumerate(self.im):
            for i, x in enumerate(self.re):
                lines.append(f"{fmt(x)},{fmt(y)},{self.status[j, i]}")
        return "\n".join(lines) + "\n"


def _batched_inside_counts(gm1, g0, g1, lams):
    """Root data of p(z) for many probes at once.

    Returns (roots (n, deg) padded with inf, inside mask, on-curve mask,
    singular mask).  The degree of p is probe-independent generically (its
    top and bottom coefficients do not involve lam), so one batched
    companion eigenproblem covers the grid; the rare probes with a
    vanishing leading coefficient fall back to per-node root finding.
    """
    n = lams.size
    # with M(z) = g_{-1} + g_0 z + g_1 z^2 (2x2):
    # p(z; lam) = det(M - lam z 1) = det M - lam z tr M + lam^2 z^2
    base = _detp_coeffs(gm1, g0, g1, 0.0)
    lin = -np.array([0.0, np.trace(gm1), np.trace(g0), np.trace(g1), 0.0],
                    dtype=complex)
    quad = np.array([0.0, 0.0, 1.0, 0.0, 0.0], dtype=complex)
    coeffs = (base[None, :] + lams[:, None] * lin[None, :]
              + (lams ** 2)[:, None] * quad[None, :])
    node_scale = np.abs(coeffs).max(axis=1)
    singular = node_scale <= 1e-14 * (np.abs(base).max() + np.abs(lams) ** 2
                                      + np.abs(lams) + 1e-300)
    lead = 4
    while lead > 0 and np.abs(coeffs[:, lead]).max() < 1e-14 * max(
            node_scale.max(), 1e-300):
        lead -= 1
    deg = lead
    roots = np.full((n, max(deg, 1)), np.inf, dtype=complex)
    if deg > 0:
        ok = (np.abs(coeffs[:, deg]) > 1e-13 * node_scale) & ~singular
        if ok.any():
            comp = np.zeros((int(ok.sum()), deg, deg), dtype=complex)
            comp[:, 1:, :-1] = np.eye(deg - 1)
            comp[:, :, -1] = -coeffs[ok, :deg] / coeffs[ok, deg][:, None]
            roots[ok] = np.linalg.eigvals(comp)
        for i in np.where(~ok & ~singular)[0]:
            cc = coeffs[i].copy()
            cc[np.abs(cc) < 1e-14 * node_scale[i]] = 0.0
            desc = np.trim_zeros(cc[::-1], "f")
            if desc.size > 1:
                r = np.roots(desc)
                roots[i, :r.size] = r
    finite = np.isfinite(roots)
    absr = np.where(finite, np.abs(roots), np.inf)
    inside = absr < 1.0 - TOL_CIRCLE
    on_curve = finite & (np.abs(absr - 1.0) <= CURVE_ROOT_TOL)
    return roots, inside, on_curve, singular


def _grid_side(stencil, lams, cond_rtol):
    """Vectorized left-index triviality for one symbol over many probes.

    Returns (nontrivial, inconclusive, on_curve) boolean arrays; on_curve
    marks probes whose determinant has a unit-circle root (bulk points,
    where the index theory does not apply).
    """
    gm1, g0, g1 = stencil.g[-1], stencil.g[0], stencil.g[1]
    n = lams.size
    roots, inside, curve_roots, singular = _batched_inside_counts(
        gm1, g0, g1, lams)
    on_curve = curve_roots.any(axis=1) | singular
    n_in = inside.sum(axis=1)
    nu = n_in - 2
    inconclusive = np.zeros(n, dtype=bool)
    nontrivial = (nu != 0) & ~on_curve
    todo = np.where((nu == 0) & ~on_curve)[0]
    if todo.size:
        z12 = np.empty((todo.size, 2), dtype=complex)
        for row, idx in enumerate(todo):
            z12[row] = roots[idx][inside[idx]][:2]
        z1, z2 = z12[:, 0], z12[:, 1]
        lam_t = lams[todo]
        with np.errstate(divide="ignore", invalid="ignore"):
            # roots at z = 0 produce inf/nan entries; those probes are
            # resolved by the degenerate-fallback factorization below
            ent1 = _entries_vec(gm1, g0, g1, lam_t, z1)
            ent2 = _entries_vec(gm1, g0, g1, lam_t, z2)
        a1, b1, c1, d1 = ent1
        a2, b2, c2, d2 = ent2
        with np.errstate(invalid="ignore"):
            r1 = np.abs(b2 * a1 - a2 * b1)
            r2 = np.abs(d2 * c1 - c2 * d1)
        r1 = np.nan_to_num(r1, nan=np.inf)
        r2 = np.nan_to_num(r2, nan=np.inf)
        dz = np.abs(z1 - z2)
        s = max(np.abs(gm1).max(), np.abs(g0).max(), np.abs(g1).max())
        scale2 = (s + np.abs(lam_t)) ** 2
        tol = cond_rtol * scale2 * np.maximum(dz, ROOT_TOL)
        hit = (r1 < tol) & (r2 < tol)
        amb = (r1 < 10 * tol) & (r2 < 10 * tol) & ~hit
        degen = dz < ROOT_TOL
        for row in np.where(degen)[0]:
            idx = todo[row]
            try:
                kapi, _, _ = wh_factorize_2x2(stencil, lams[idx])
                hit[row] = any(k != 0 for k in kapi)
                amb[row] = False
            except FactorizationError:
                amb[row] = True
                hit[row] = False
        nontrivial[todo] |= hit
        inc = np.zeros(n, dtype=bool)
        inc[todo[amb]] = True
        inconclusive |= inc
    return nontrivial, inconclusive, on_curve


def _entries_vec(gm1, g0, g1, lam, z):
    a = gm1[0, 0] / z + (g0[0, 0] - lam) + g1[0, 0] * z
    b = gm1[0, 1] / z + g0[0, 1] + g1[0, 1] * z
    c = gm1[1, 0] / z + g0[1, 0] + g1[1, 0] * z
    d = gm1[1, 1] / z + (g0[1, 1] - lam) + g1[1, 1] * z
    return a, b, c, d


def sibc_membership_grid(stencil: CouplingStencil, region, resolution,
                         cond_rtol: float = COND_RTOL,
                         curve_samples: int = 2048) -> MembershipGrid:
    """Symbol-plane grid of semi-infinite-spectrum membership.

    A node is a member iff it sits on the bulk curve (within half a grid
    cell) or either the plain or the associated symbol has nonzero left
    partial indices there.  Ambiguous nodes propagate as "inconclusive".
    """
    re_min, re_max, im_min, im_max = map(float, region)
    n_re, n_im = (int(resolution), int(resolution)) if np.isscalar(resolution) \
        else (int(resolution[0]), int(resolution[1]))
    re = np.linspace(re_min, re_max, n_re)
    im = np.linspace(im_min, im_max, n_im)
    lams = (re[None, :] + 1j * im[:, None]).ravel()
    cell = float(np.hypot(re[1] - re[0] if n_re > 1 else 0.0,
                          im[1] - im[0] if n_im > 1 else 0.0))
    near_curve = _dist_to_curve(stencil, lams, curve_samples) <= max(0.5 * cell,
                                                                     1e-12)
    nt_l, inc_l, curve_l = _grid_side(stencil, lams, cond_rtol)
    nt_r, inc_r, curve_r = _grid_side(stencil.associated(), lams, cond_rtol)
    bulk = near_curve | curve_l | curve_r
    member = bulk | nt_l | nt_r
    inconclusive = ~member & (inc_l | inc_r)
    status = np.full(lams.shape, NONMEMBER, dtype=object)
    status[member] = MEMBER
    status[bulk] = BULK
    status[inconclusive] = INCONCLUSIVE_NODE
    return MembershipGrid(re=re, im=im,
                          member=member.reshape(n_im, n_re),
                          status=status.reshape(n_im, n_re))


def _point_member(stencil: CouplingStencil, lam: complex,
                  cond_rtol: float = COND_RTOL) -> bool:
    for assoc in (False, True):
        res = partial_index_test(stencil, lam, associated=assoc,
                                 cond_rtol=cond_rtol)
        if res.status == STATUS_BULK or res.nontrivial:
            return True
    return False


def _rap_to_symbol(stencil: CouplingStencil, r: complex) -> complex:
    # nambu: rapidity = -i * energy  =>  energy = i * rapidity
    return 1j * r if stencil.basis == "nambu" else r


def sibc_stability_gap(stencil: CouplingStencil, search_box=None,
                       resolution=(61, 61), refine_tol: float = 1e-4,
                       cond_rtol: float = COND_RTOL) -> float:
    """Stability gap of the semi-infinite chain.

    Maximal real part, over a rapidity-plane box, of the rapidities that
    belong to the semi-infinite spectrum (bulk curve plus nontrivial-index
    region).  The grid maximizer is refined by point-membership bisection
    along the real-rapidity direction to refine_tol; when the refined
    boundary does not exceed the bulk-curve gap by more than refine_tol,
    the golden-section bulk gap (much tighter) is returned.  The box
    defaults to the bulk-curve bounding box inflated by 25%.
    """
    pts = _curve_points(stencil, 1024)
    raps = -1j * pts if stencil.basis == "nambu" else pts
    if search_box is None:
        rlo, rhi = raps.real.min(), raps.real.max()
        ilo, ihi = raps.imag.min(), raps.imag.max()
        pad_r = 0.25 * max(rhi - rlo, 1.0)
        pad_i = 0.25 * max(ihi - ilo, 1.0)
        search_box = (rlo - pad_r, rhi + pad_r, ilo - pad_i, ihi + pad_i)
    re_min, re_max, im_min, im_max = map(float, search_box)
    n_re, n_im = (int(resolution), int(resolution)) if np.isscalar(resolution) \
        else (int(resolution[0]), int(resolution[1]))
    re = np.linspace(re_min, re_max, n_re)
    im = np.linspace(im_min, im_max, n_im)
    rr = re[None, :] + 1j * im[:, None]
    lams = np.array([_rap_to_symbol(stencil, r) for r in rr.ravel()])
    cell_re = (re_max - re_min) / max(n_re - 1, 1)
    cell = float(np.hypot(cell_re, (im_max - im_min) / max(n_im - 1, 1)))
    bulk = (np.abs(lams[:, None]
                   - np.atleast_1d(pts)[None, :]).min(axis=1) <= 0.5 * cell)
    nt_l, _, _ = _grid_side(stencil, lams, cond_rtol)
    nt_r, _, _ = _grid_side(stencil.associated(), lams, cond_rtol)
    member = (bulk | nt_l | nt_r).reshape(n_im, n_re)

    gap_bulk = bulk_stability_gap(stencil)
    if not member.any():
        return gap_bulk
    j_idx, i_idx = np.where(member)
    best = int(np.argmax(re[i_idx]))
    j0, i0 = j_idx[best], i_idx[best]
    if i0 == n_re - 1 or (n_im > 2 and j0 in (0, n_im - 1)):
        warnings.warn("membership maximizer touches the search box boundary; "
                      "enlarge search_box", stacklevel=2)
    y = im[j0]

    def pm(x):
        return _point_member(stencil, _rap_to_symbol(stencil, x + 1j * y),
                             cond_rtol)

    # bracket the point-membership boundary around the grid maximizer: the
    # grid flags (half-cell bulk tolerance) are coarser than point tests
    lo = re[i0]
    steps = 0
    while not pm(lo) and lo > re_min and steps < 4 * n_re:
        lo -= 0.5 * cell_re
        steps += 1
    if not pm(lo):
        return gap_bulk
    hi = lo + cell_re
    while pm(hi) and hi < re_max:
        lo = hi
        hi += cell_re
    while hi - lo > refine_tol:
        mid = 0.5 * (lo + hi)
        if pm(mid):
            lo = mid
        else:
            hi = mid
    if lo > gap_bulk + refine_tol:
        return float(lo)
    return float(gap_bulk)
