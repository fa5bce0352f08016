"""Time evolution of first and second moments, trajectory ensembles, and
growth-rate measurement.

All propagation happens in the EOM form d/dt phi = M phi with M the
rapidity generator (M = -iG for Nambu matrices), so the same code drives
both bases.  Second moments Q = <Phi Phi^dag> obey the Lyapunov-form
equation dQ/dt = M Q + Q M^dag + tau3 GKLS tau3.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .operators import DynamicalMatrix, tau
from .spectral import condition_number

__all__ = [
    "Trajectory",
    "MomentState",
    "propagator",
    "evolve_mean",
    "evolve_second_moments",
    "steady_state_second_moments",
    "trajectory_ensemble",
    "measure_growth_rate",
    "nambu_mean_sampler",
    "DIVERGENCE_CUTOFF",
    "StepSizeError",
]

DIVERGENCE_CUTOFF = 1e150


class StepSizeError(RuntimeError):
    pass


@dataclass
class MomentState:
    """First and second moments <Phi> and Q = <Phi Phi^dag> at time t
    (Nambu ordering)."""

    mean: np.ndarray
    second: np.ndarray
    t: float = 0.0

    def hermiticity_defect(self) -> float:
        return float(np.abs(self.second - self.second.conj().T).max())

    def quadrature_covariance(self) -> np.ndarray:
        """Anticommutator covariance Gamma of the quadratures R = W Phi.

        Built from the centered second moment dQ = Q - <Phi><Phi>^dag via
        <{dPhi_k, dPhi_l}> = (dQ tau1) + (dQ tau1)^T; vacuum gives the
        identity.
        """
        from .operators import quadrature_rotation, tau

        n = self.mean.size // 2
        dq = self.second - np.outer(self.mean, self.mean.conj())
        m2 = dq @ tau(1, n)
        m2 = m2 + m2.T
        W = quadrature_rotation(n)
        cov = W @ m2 @ W.T
        if np.abs(cov.imag).max() > 1e-9 * max(1.0, np.abs(cov.real).max()):
            raise ValueError("second moment has no real quadrature covariance; "
                             "check the Nambu structure of mean and Q")
        return cov.real

    def ccr_floor_defect(self) -> float:
        """Most negative eigenvalue of Gamma + i Omega; physical states
        satisfy the uncertainty floor Gamma + i Omega >= -tol."""
        from .gaussian import uncertainty_defect

        return uncertainty_defect(self.quadrature_covariance())


@dataclass
class Trajectory:
    times: np.ndarray
    values: np.ndarray            # shape (len(times),) or (n_traj, len(times))
    n_traj: int = 1
    seed: int | None = None
    truncated: bool = False       # divergence cutoff hit; tail dropped
    stderr: np.ndarray | None = None


def _generator(D) -> np.ndarray:
    if isinstance(D, DynamicalMatrix):
        return D.rapidity_generator()
    return np.asarray(D, dtype=complex)


def propagator(D, t: float, method: str = "auto") -> np.ndarray:
    """V(t) = exp(M t) with M the EOM generator (exp(-iGt) for Nambu G).

    method "expm" uses scaling-and-squaring; "eig" diagonalizes (only
    sound when the modal condition number is moderate); "auto" picks eig
    when K < 1e8 and the matrix is small enough to amortize the check.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    M = _generator(D)
    if method == "auto":
        method = "expm"
        try:
            if condition_number(M, warn_threshold=np.inf) < 1e8:
                method = "eig"
        except Exception:
            pass
    if method == "eig":
        w, L = np.linalg.eig(M)
        return (L * np.exp(w * t)) @ np.linalg.inv(L)
    return sla.expm(M * t)


def evolve_mean(D, mean0: np.ndarray, times: np.ndarray) -> Trajectory:
    """<Phi(t)> on a uniform time grid via the cached one-step propagator.

    Propagation is linear and exact up to the matrix exponential of one
    step; trajectories exceeding the divergence cutoff are truncated and
    flagged rather than silently overflowing.
    """
    times = np.asarray(times, dtype=float)
    dts = np.diff(times)
    if times.size < 2 or not np.allclose(dts, dts[0], rtol=1e-10, atol=1e-14):
        raise ValueError("times must be a uniform grid with >= 2 points")
    M = _generator(D)
    V = sla.expm(M * dts[0])
    out = np.empty((times.size, mean0.size), dtype=complex)
    cur = np.asarray(mean0, dtype=complex).copy()
    truncated = False
    for i in range(times.size):
        out[i] = cur
        if i + 1 < times.size:
            cur = V @ cur
            if not np.isfinite(cur).all() or np.abs(cur).max() > DIVERGENCE_CUTOFF:
                out[i + 1:] = np.nan
                truncated = True
                break
    return Trajectory(times=times, values=out, truncated=truncated)


def _rhs_second(M, Mdag, inhom, Q):
    return M @ Q + Q @ Mdag + inhom


def evolve_second_moments(D, m_gkls: np.ndarray | None, Q0: np.ndarray,
                          times: np.ndarray, method: str = "exact_homogeneous",
                          dt: float | None = None,
                          check_rtol: float | None = 1e-6) -> list[np.ndarray]:
    """Q(t) = <Phi Phi^dag>(t) along a time grid.

    method "exact_homogeneous" (only for vanishing GKLS matrix) uses
    Q(t) = V Q0 V^dag; "rk4" integrates the full equation with fixed
    internal step dt (default: the output spacing) and is validated
    against a halved-step rerun (relative mismatch above check_rtol raises
    StepSizeError; pass check_rtol=None to skip the rerun).
    """
    times = np.asarray(times, dtype=float)
    M = _generator(D)
    n = M.shape[0]
    Q0 = np.asarray(Q0, dtype=complex)
    if m_gkls is None:
        m_gkls = np.zeros((n, n), dtype=complex)
    m_gkls = np.asarray(m_gkls, dtype=complex)
    if method == "exact_homogeneous":
        if np.abs(m_gkls).max() > 0:
            raise ValueError("exact_homogeneous requires a vanishing GKLS matrix")
        out = []
        for t in times:
            V = sla.expm(M * t)
            out.append(V @ Q0 @ V.conj().T)
        return out
    if method != "rk4":
        raise ValueError(f"unknown method {method!r}")
    t3 = tau(3, n // 2)
    inhom = t3 @ m_gkls @ t3

    def run(refine):
        Q = Q0.copy()
        out = [Q0.copy()]
        Md = M.conj().T
        for dt_out in np.diff(times):
            base = dt if dt is not None else dt_out
            nsub = max(1, int(np.ceil(dt_out / base - 1e-12))) * refine
            h = dt_out / nsub
            for _ in range(nsub):
                k1 = _rhs_second(M, Md, inhom, Q)
                k2 = _rhs_second(M, Md, inhom, Q + 0.5 * h * k1)
                k3 = _rhs_second(M, Md, inhom, Q + 0.5 * h * k2)
                k4 = _rhs_second(M, Md, inhom, Q + h * k3)
                Q = Q + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            out.append(Q.copy())
        return out

    out = run(1)
    if check_rtol is not None:
        ref = run(2)
        num = np.abs(out[-1] - ref[-1]).max()
        den = max(np.abs(ref[-1]).max(), 1.0)
        if num / den > check_rtol:
            raise StepSizeError(
                f"halved-step check failed: rel mismatch {num / den:.2e}")
    return out


def steady_state_second_moments(D, m_gkls: np.ndarray) -> np.ndarray:
    """Fixed point of the second-moment flow, M Q + Q M^dag = -tau3 m tau3."""
    M = _generator(D)
    n = M.shape[0]
    t3 = tau(3, n // 2)
    return sla.solve_sylvester(M, M.conj().T, -(t3 @ np.asarray(m_gkls) @ t3))


def nambu_mean_sampler(n_sites: int, seed: int):
    """Seed-deterministic random initial means for the Nambu array.

    Each mode's <a_j> is standard complex normal (real and imaginary parts
    i.i.d. N(0,1)); the conjugate slots are filled accordingly.
    """
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(n_sites) + 1j * rng.standard_normal(n_sites)
    mean = np.empty(2 * n_sites, dtype=complex)
    mean[0::2] = a
    mean[1::2] = a.conj()
    return mean


def _observable_series(states: np.ndarray, site: int, kind: str) -> np.ndarray:
    """Extract one observable from stacked mean vectors (..., 2N)."""
    if kind == "x":
        return (states[..., 2 * site] + states[..., 2 * site + 1]) / np.sqrt(2)
    if kind == "p":
        return 1j * (states[..., 2 * site + 1] - states[..., 2 * site]) / np.sqrt(2)
    if kind == "a":
        return states[..., 2 * site]
    if kind == "component":
        return states[..., site]
    raise ValueError(f"unknown observable kind {kind!r}")


def trajectory_ensemble(D, n_traj: int, times: np.ndarray, site: int,
                        seed: int = 0, kind: str = "x",
                        sampler=None, keep_trajectories: bool = False) -> Trajectory:
    """Ensemble average of |<observable(t)>| over random initial means.

    Per-trajectory seeds are seed + index, so any execution order gives
    the same ensemble; the reduction is numpy's fixed-order pairwise mean.
    A custom sampler(seed_i) -> mean vector overrides the default
    standard-complex-normal initial conditions.
    """
    times = np.asarray(times, dtype=float)
    dts = np.diff(times)
    if not np.allclose(dts, dts[0], rtol=1e-10, atol=1e-14):
        raise ValueError("times must be uniform")
    M = _generator(D)
    n = M.shape[0]
    n_sites = n // 2
    if sampler is not None:
        init = np.stack([np.asarray(sampler(seed + i), dtype=complex)
                         for i in range(n_traj)], axis=1)
    elif isinstance(D, DynamicalMatrix) and D.basis == "nambu":
        init = np.stack([nambu_mean_sampler(n_sites, seed + i)
                         for i in range(n_traj)], axis=1)
    else:
        rng_cols = []
        for i in range(n_traj):
            rng = np.random.default_rng(seed + i)
            rng_cols.append(rng.standard_normal(n) + 1j * rng.standard_normal(n))
        init = np.stack(rng_cols, axis=1)
    V = sla.expm(M * dts[0])
    vals = np.empty((n_traj, times.size))
    cur = init
    truncated = False
    for i in range(times.size):
        obs = _observable_series(cur.T, site, kind)
        vals[:, i] = np.abs(obs)
        if i + 1 < times.size:
            cur = V @ cur
            if not np.isfinite(cur).all() or np.abs(cur).max() > DIVERGENCE_CUTOFF:
                vals[:, i + 1:] = np.nan
                truncated = True
                break
    mean = vals.mean(axis=0)
    stderr = vals.std(axis=0, ddof=1) / np.sqrt(n_traj) if n_traj > 1 else \
        np.zeros_like(mean)
    return Trajectory(times=times, values=vals if keep_trajectories else mean,
                      n_traj=n_traj, seed=seed, truncated=truncated,
                      stderr=stderr)


def measure_growth_rate(traj: Trajectory, window: tuple[float, float]) -> float:
    """Least-squares slope of log|value| over a time window.

    Requires strictly positive values inside the window (use on ensemble
    means or |<obs>| series).
    """
    t0, t1 = window
    times = traj.times
    vals = traj.values if traj.values.ndim == 1 else traj.values.mean(axis=0)
    sel = (times >= t0) & (times <= t1) & np.isfinite(vals)
    if sel.sum() < 2:
        raise ValueError("window contains fewer than 2 samples")
    v = np.abs(vals[sel])
    if np.any(v <= 0):
        raise ValueError("nonpositive values in window")
    t = times[sel]
    slope = np.polyfit(t, np.log(v), 1)[0]
    return float(slope)
