import numpy as np
import pytest
from numpy.testing import assert_allclose

from qbl.model import KOC, build_stencil
from qbl.operators import OBC, assemble
from qbl.pseudospec import (
    pseudo_eigenpair,
    resolvent_norm_grid,
    smin_backend_name,
    smin_values,
    transient_bound_probe,
)


def koc(n, j=2.0, delta=1.0, omega=0.0, kappa=0.0):
    return assemble(build_stencil(KOC(j=j, delta=delta, omega=omega,
                                      kappa=kappa)), OBC, n)


class TestGrid:
    def test_normal_matrix_distance_field(self):
        rng = np.random.default_rng(0)
        H = rng.standard_normal((8, 8))
        H = (H + H.T).astype(complex)
        ev = np.linalg.eigvals(H)
        g = resolvent_norm_grid(H, (-4, 4, -2, 2), (24, 16))
        dist = np.abs(g.nodes()[..., None] - ev[None, None, :]).min(axis=-1)
        assert_allclose(g.values, dist, atol=1e-9)

    def test_one_by_one(self):
        c = 0.7 - 0.2j
        g = resolvent_norm_grid(np.array([[c]]), (-1, 1, -1, 1), 16)
        assert_allclose(g.values, np.abs(g.nodes() - c), atol=1e-12)

    def test_grid_inclusion_bound(self):
        # s(z) <= dist(z, spectrum) pointwise (eps-balls always included)
        D = koc(12)
        ev = np.linalg.eigvals(D.G)
        g = resolvent_norm_grid(D, (-3, 3, -2, 2), (20, 18))
        dist = np.abs(g.nodes()[..., None] - ev[None, None, :]).min(axis=-1)
        assert np.all(g.values <= dist + 1e-10)

    def test_sublevel_sets_beyond_normal_counterpart(self):
        # interior of the bulk ellipse: resolvent norm far exceeds the
        # normal-matrix value at the same distance from the spectrum
        D = koc(30)
        ev = np.linalg.eigvals(D.G)
        z = 0.8j  # energy plane, well off the real spectrum
        s = smin_values(D.G, np.array([z]))[0]
        dist = np.abs(ev - z).min()
        assert s < dist / 50

    def test_perturbation_robustness(self):
        rng = np.random.default_rng(42)
        D = koc(10)
        E = rng.standard_normal((20, 20)) + 1j * rng.standard_normal((20, 20))
        delta = 0.037
        E *= delta / np.linalg.norm(E, 2)
        zs = rng.uniform(-2, 2, 20) + 1j * rng.uniform(-2, 2, 20)
        s0 = smin_values(D.G, zs)
        s1 = smin_values(D.G + E, zs)
        assert np.all(np.abs(s1 - s0) <= delta + 1e-12)

    def test_eigenvalue_node_reports_zero(self):
        D = koc(6)
        ev = np.linalg.eigvals(D.G)
        s = smin_values(D.G, np.array([ev[0]]))
        assert s[0] < 1e-10

    def test_resolution_floor(self):
        with pytest.raises(ValueError):
            resolvent_norm_grid(koc(4), (-1, 1, -1, 1), (8, 20))

    def test_backends_agree(self):
        rng = np.random.default_rng(3)
        A = rng.standard_normal((40, 40)) + 1j * rng.standard_normal((40, 40))
        zs = rng.uniform(-4, 4, 60) + 1j * rng.uniform(-4, 4, 60)
        s_sel = smin_values(A, zs)
        s_pure = smin_values(A, zs, force_pure=True)
        scale = np.linalg.norm(A, 2)
        assert np.all(np.abs(s_sel - s_pure) <= 1e-8 * scale + 1e-8 * s_pure)

    def test_csv_and_sidecar(self):
        g = resolvent_norm_grid(koc(4), (-1, 1, -1, 1), 16)
        text = g.to_csv()
        assert text.splitlines()[0] == "re,im,smin"
        assert len(text.splitlines()) == 1 + 16 * 16
        assert smin_backend_name() in g.sidecar()


class TestEpsilonScalingWithN:
    def test_monotone_decrease_inside_sibc(self):
        # fixed rapidity inside the semi-infinite region but off the OBC
        # spectrum: eps_N shrinks with N (the infinite-size imprint)
        for z in (0.5, 0.8):
            eps = []
            for n in (10, 20, 30, 40):
                M = koc(n).rapidity_generator()
                eps.append(smin_values(M, np.array([z]))[0])
            assert all(eps[i + 1] < eps[i] for i in range(3))

    def test_doubling_n_halves_eps(self):
        z = 0.5
        eps = {n: smin_values(koc(n).rapidity_generator(), np.array([z]))[0]
               for n in (10, 20, 40)}
        assert eps[20] <= 0.5 * eps[10]
        assert eps[40] <= 0.5 * eps[20]


class TestPseudoEigenpair:
    def test_exact_eigenvalue(self):
        D = koc(8)
        ev, V = np.linalg.eig(D.G)
        pair = pseudo_eigenpair(D, ev[3])
        assert pair.eps < 1e-10
        # the spectrum is doubly degenerate: compare against the eigenspace
        cluster = np.abs(ev - ev[3]) < 1e-8
        Q, _ = np.linalg.qr(V[:, cluster])
        in_space = np.linalg.norm(Q @ (Q.conj().T @ pair.vector))
        assert in_space > 1 - 1e-6

    def test_normal_matrix_distance(self):
        H = np.diag([1.0, -2.0, 0.5]).astype(complex)
        z = 1.0 + 1.5j
        pair = pseudo_eigenpair(H, z)
        assert_allclose(pair.eps, 1.5, atol=1e-12)

    def test_residual_identity(self):
        rng = np.random.default_rng(9)
        A = rng.standard_normal((12, 12)) + 1j * rng.standard_normal((12, 12))
        pair = pseudo_eigenpair(A, 0.3 + 0.1j)
        assert abs(np.linalg.norm(pair.vector) - 1) < 1e-12
        assert abs(pair.residual - pair.eps) < 1e-10

    def test_bkc_with_loss_boundary_mode(self):
        # response-probe point of the lossy nonreciprocal chain: the
        # smallest singular vector is exponentially edge-localized
        j = np.sqrt(3 + 0.25)
        D = koc(30, j=j, delta=0.5, kappa=0.3)
        pair = pseudo_eigenpair(D, 0.0)
        site_amp = np.sqrt(np.abs(pair.vector[0::2]) ** 2
                           + np.abs(pair.vector[1::2]) ** 2)
        edge = max(site_amp[0], site_amp[-1])
        assert edge == site_amp.max()
        assert edge > 2.5 * site_amp[3:-3].mean()


class TestTransientBound:
    def test_exact_eigenpair_no_deviation(self):
        # plain arrays are taken as the EOM generator itself
        M = np.diag([0.3, -0.4]).astype(complex)
        ts, dev, eps = transient_bound_probe(M, 0.3, horizon=1.0, dt=0.1)
        assert eps < 1e-14
        assert dev.max() < 1e-12

    def test_initial_slope_bound(self):
        D = koc(30)
        z = 1.0  # most unstable bulk rapidity (Delta)
        ts, dev, eps = transient_bound_probe(D, z, horizon=0.09, dt=0.005)
        mask = ts > 0
        ratio = dev[mask] / (eps * ts[mask])
        # deviation = eps (t + O(t^2)); the quadratic term's rate constant
        # is O(bulk rate), so the 10% bound holds for t <= 0.1 / rate
        assert np.all(ratio <= 1.1)
        assert abs(ratio[0] - 1.0) < 0.02


def test_pure_backend_threaded_determinism():
    rng = np.random.default_rng(8)
    A = rng.standard_normal((24, 24)) + 1j * rng.standard_normal((24, 24))
    zs = rng.uniform(-3, 3, 40) + 1j * rng.uniform(-3, 3, 40)
    a = smin_values(A, zs, workers=1, force_pure=True)
    b = smin_values(A, zs, workers=4, force_pure=True)
    assert np.array_equal(a, b)
