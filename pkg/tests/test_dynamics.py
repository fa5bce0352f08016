import numpy as np
import pytest
from numpy.testing import assert_allclose

from qbl.model import CouplingStencil, KOC, build_stencil
from qbl.operators import OBC, assemble
from qbl.dynamics import (
    StepSizeError,
    evolve_mean,
    evolve_second_moments,
    measure_growth_rate,
    nambu_mean_sampler,
    propagator,
    steady_state_second_moments,
    trajectory_ensemble,
)
from qbl.spectral import stability_gap


def koc(n, j=2.0, delta=1.0, omega=0.0, kappa=0.0):
    return assemble(build_stencil(KOC(j=j, delta=delta, omega=omega,
                                      kappa=kappa)), OBC, n)


def lossy_mode(kappa=0.4, omega=1.3):
    return koc(1, j=0, delta=0, omega=omega, kappa=kappa)


class TestPropagator:
    def test_t0_identity(self):
        D = koc(5)
        assert_allclose(propagator(D, 0.0), np.eye(10), atol=1e-14)

    def test_hermitian_generator_unitary(self):
        D = koc(6, j=0, delta=0, omega=2.0)  # G Hermitian, V(t) unitary
        for t in (0.3, 1.7, 6.0):
            V = propagator(D, t)
            assert abs(np.linalg.norm(V, 2) - 1.0) < 1e-10

    def test_methods_agree(self):
        D = koc(6, omega=3.0)
        for t in (0.5, 2.0):
            assert_allclose(propagator(D, t, method="expm"),
                            propagator(D, t, method="eig"), atol=1e-9)

    def test_transient_growth_then_saturation(self):
        # nonreciprocal chain: ||V(t)|| grows at the bulk rate, then the
        # boundary caps it (stable asymptotics)
        D = koc(30)
        delta = 1.0
        norms = {t: np.linalg.norm(propagator(D, t), 2) for t in (2.0, 4.0, 30.0, 40.0)}
        early_rate = np.log(norms[4.0] / norms[2.0]) / 2.0
        assert 0.8 * delta < early_rate <= 1.05 * delta
        late_rate = np.log(norms[40.0] / norms[30.0]) / 10.0
        assert late_rate < 0.1 * delta

    def test_negative_time_rejected(self):
        with pytest.raises(ValueError):
            propagator(koc(2), -1.0)


class TestEvolveMean:
    def test_zero_generator_constant(self):
        z = np.zeros((2, 2))
        st = CouplingStencil.from_matrices(z, z, z, basis="reduced")
        D = assemble(st, OBC, 3)
        m0 = np.arange(6).astype(complex)
        traj = evolve_mean(D, m0, np.linspace(0, 5, 11))
        assert_allclose(traj.values, np.tile(m0, (11, 1)), atol=1e-14)

    def test_single_lossy_mode_decay(self):
        ka = 0.4
        D = lossy_mode(kappa=ka)
        m0 = nambu_mean_sampler(1, 3)
        times = np.linspace(0, 8, 33)
        traj = evolve_mean(D, m0, times)
        assert_allclose(np.abs(traj.values[:, 0]),
                        np.exp(-ka * times) * abs(m0[0]), rtol=1e-10)

    def test_finite_difference_matches_generator(self):
        D = koc(8, omega=1.1)
        M = D.rapidity_generator()
        m0 = nambu_mean_sampler(8, 11)
        dt = 1e-4
        traj = evolve_mean(D, m0, np.arange(3) * dt)
        fd = (traj.values[2] - traj.values[0]) / (2 * dt)
        assert np.abs(fd - M @ traj.values[1]).max() < 1e-6

    def test_divergence_truncation(self):
        # strongly amplifying single mode: gain instead of loss
        st = build_stencil(KOC(j=0, delta=0, omega=0))
        st.g[0] = st.g[0] + 1j * 50.0 * np.eye(2)  # raw gain injection
        D = assemble(st, OBC, 1)
        traj = evolve_mean(D, np.array([1.0, 1.0], complex),
                           np.linspace(0, 20, 201))
        assert traj.truncated
        assert np.isnan(traj.values[-1, 0].real)

    def test_region_ii_asymptotic_slope(self):
        n = 16
        D = koc(n, omega=1.1)
        gap = stability_gap(D)
        times = np.arange(0.0, 120.0, 0.25)
        traj = evolve_mean(D, nambu_mean_sampler(n, 5), times)
        x = (traj.values[:, 2 * (n // 2)] + traj.values[:, 2 * (n // 2) + 1]) / np.sqrt(2)
        from qbl.dynamics import Trajectory
        slope = measure_growth_rate(Trajectory(times=times, values=np.abs(x)),
                                    (80.0, 120.0))
        assert abs(slope - gap) < 0.05 * gap


class TestSecondMoments:
    def test_exact_homogeneous_is_vvdag(self):
        D = koc(5)
        times = np.array([0.0, 0.7, 1.9])
        out = evolve_second_moments(D, None, np.eye(10, dtype=complex), times)
        for t, Q in zip(times, out):
            V = propagator(D, t)
            assert_allclose(Q, V @ V.conj().T, atol=1e-9)

    def test_exact_requires_zero_gkls(self):
        with pytest.raises(ValueError):
            evolve_second_moments(koc(2), np.eye(4), np.eye(4),
                                  np.array([0.0, 0.1]))

    def test_rk4_matches_exact(self):
        D = koc(10)
        rng = np.random.default_rng(0)
        A = rng.standard_normal((20, 20)) + 1j * rng.standard_normal((20, 20))
        Q0 = A @ A.conj().T
        coarse = np.arange(0.0, 10.0 + 1e-9, 1.0)
        exact = evolve_second_moments(D, None, Q0, coarse)
        rk4 = evolve_second_moments(D, None, Q0, coarse, method="rk4",
                                    dt=1e-3, check_rtol=None)
        for Qe, Qr in zip(exact, rk4):
            assert np.abs(Qr - Qe).max() / np.abs(Qe).max() < 1e-6

    def test_rk4_halved_step_check_fires(self):
        D = koc(4)
        with pytest.raises(StepSizeError):
            evolve_second_moments(D, None, np.eye(8, dtype=complex),
                                  np.array([0.0, 3.0]), method="rk4",
                                  check_rtol=1e-14)

    def test_hermiticity_preserved(self):
        D = koc(6, kappa=0.3)
        n = 12
        m = np.zeros((n, n), complex)
        m[0::2, 0::2] = 2 * 0.3 * np.eye(6)   # loss GKLS block
        Q0 = np.eye(n, dtype=complex)
        out = evolve_second_moments(D, m, Q0, np.linspace(0, 5, 26),
                                    method="rk4", check_rtol=None)
        assert max(np.abs(Q - Q.conj().T).max() for Q in out) < 1e-10

    def test_lossy_mode_reaches_steady_state(self):
        ka = 0.5
        D = lossy_mode(kappa=ka, omega=0.9)
        m = np.array([[2 * ka, 0], [0, 0]], complex)
        Qss = steady_state_second_moments(D, m)
        out = evolve_second_moments(D, m, 4 * np.eye(2, dtype=complex),
                                    np.linspace(0, 40, 81), method="rk4",
                                    check_rtol=None)
        assert np.abs(out[-1] - Qss).max() < 1e-6
        # steady state of a pure-loss mode is the vacuum, <a a^dag> = 1
        assert_allclose(Qss, np.diag([1.0, 0.0]), atol=1e-12)


class TestEnsembles:
    def test_zero_sampler_identically_zero(self):
        D = koc(4)
        traj = trajectory_ensemble(D, 5, np.linspace(0, 2, 9), site=2,
                                   sampler=lambda s: np.zeros(8, complex))
        assert np.abs(traj.values).max() == 0.0

    def test_seed_determinism(self):
        D = koc(6, omega=1.1)
        t = np.linspace(0, 3, 13)
        a = trajectory_ensemble(D, 8, t, site=3, seed=42)
        b = trajectory_ensemble(D, 8, t, site=3, seed=42)
        assert np.array_equal(a.values, b.values)
        c = trajectory_ensemble(D, 8, t, site=3, seed=43)
        assert not np.array_equal(a.values, c.values)

    def test_nambu_sampler_structure(self):
        m = nambu_mean_sampler(4, 0)
        assert_allclose(m[1::2], m[0::2].conj())


class TestGrowthRate:
    def test_pure_exponential(self):
        from qbl.dynamics import Trajectory
        t = np.linspace(0, 10, 101)
        traj = Trajectory(times=t, values=np.exp(0.3 * t).astype(complex))
        assert abs(measure_growth_rate(traj, (0, 10)) - 0.3) < 1e-10

    def test_decay(self):
        from qbl.dynamics import Trajectory
        t = np.linspace(0, 5, 51)
        traj = Trajectory(times=t, values=5 * np.exp(-0.7 * t))
        assert abs(measure_growth_rate(traj, (0, 5)) + 0.7) < 1e-10

    def test_window_validation(self):
        from qbl.dynamics import Trajectory
        t = np.linspace(0, 5, 51)
        traj = Trajectory(times=t, values=np.ones(51))
        with pytest.raises(ValueError):
            measure_growth_rate(traj, (10, 20))
        traj2 = Trajectory(times=t, values=np.zeros(51))
        with pytest.raises(ValueError):
            measure_growth_rate(traj2, (0, 5))

    def test_koc_transient_slope_bounded_by_bulk(self):
        D = koc(26)
        times = np.arange(0.0, 20.0, 0.1)
        traj = trajectory_ensemble(D, 60, times, site=13, seed=1)
        slope = measure_growth_rate(traj, (2.0, 8.0))
        assert 0 < slope <= 1.0 * 1.05


class TestMomentState:
    def test_vacuum_covariance_is_identity(self):
        from qbl.dynamics import MomentState
        n = 4
        Q = np.zeros((2 * n, 2 * n), complex)
        Q[0::2, 0::2] = np.eye(n)   # <a a^dag> = 1, all else 0
        ms = MomentState(mean=np.zeros(2 * n, complex), second=Q)
        assert np.abs(ms.quadrature_covariance() - np.eye(2 * n)).max() < 1e-12
        assert ms.ccr_floor_defect() > -1e-12

    def test_ccr_floor_preserved_under_evolution(self):
        from qbl.dynamics import MomentState
        n = 6
        D = koc(n, omega=1.1)
        Q0 = np.zeros((2 * n, 2 * n), complex)
        Q0[0::2, 0::2] = np.eye(n)
        out = evolve_second_moments(D, None, Q0, np.linspace(0, 6, 13))
        for t, Q in zip(np.linspace(0, 6, 13), out):
            ms = MomentState(mean=np.zeros(2 * n, complex), second=Q, t=t)
            assert ms.ccr_floor_defect() > -1e-9

    def test_unphysical_state_flagged(self):
        from qbl.dynamics import MomentState
        ms = MomentState(mean=np.zeros(2, complex),
                         second=np.zeros((2, 2), complex))
        assert ms.ccr_floor_defect() < -0.5


class TestAssembledGKLS:
    def test_lossy_chain_relaxes_to_vacuum(self):
        # uniform onsite loss: the steady state of the full chain is the
        # vacuum, Q = blockdiag([[1, 0], [0, 0]])
        from qbl.model import KOC, build_stencil
        from qbl.operators import assemble_gkls
        st = build_stencil(KOC(j=1.0, delta=0.0, omega=3.0, kappa=0.4))
        n = 4
        D = assemble(st, OBC, n)
        M = assemble_gkls(st, OBC, n)
        Qss = steady_state_second_moments(D, M)
        want = np.zeros((2 * n, 2 * n), complex)
        want[0::2, 0::2] = np.eye(n)
        assert np.abs(Qss - want).max() < 1e-10
        out = evolve_second_moments(D, M, 3 * np.eye(2 * n, dtype=complex),
                                    np.linspace(0, 40, 41), method="rk4",
                                    dt=0.02, check_rtol=None)
        assert np.abs(out[-1] - want).max() < 1e-6

    def test_stencil_without_m_rejected(self):
        from qbl.model import CoupledHN, build_stencil
        from qbl.operators import assemble_gkls
        st = build_stencil(CoupledHN(j_a=1, j_b=1, w=0.3, theta=0.0,
                                     gamma_a=0.2, gamma_b=0.2,
                                     kappa_plus=0.1, kappa_minus=0.5))
        with pytest.raises(ValueError):
            assemble_gkls(st, OBC, 3)
