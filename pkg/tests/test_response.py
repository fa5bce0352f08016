import numpy as np
import pytest
from numpy.testing import assert_allclose

from qbl.model import KOC, build_stencil
from qbl.operators import OBC, assemble, tau
from qbl.pseudospec import smin_values
from qbl.response import (
    end_to_end_gain,
    pseudoresonance_profile,
    susceptibility,
    time_domain_response,
)


def koc(n, j=2.0, delta=1.0, omega=0.0, kappa=0.0):
    return assemble(build_stencil(KOC(j=j, delta=delta, omega=omega,
                                      kappa=kappa)), OBC, n)


def bkc_loss(n, delta, kappa=0.3, j2_minus_d2=3.0):
    return koc(n, j=np.sqrt(j2_minus_d2 + delta ** 2), delta=delta, kappa=kappa)


class TestSusceptibility:
    def test_large_frequency_neumann_decay(self):
        D = koc(8, omega=1.0)
        w = 500.0
        resp = susceptibility(D, w, eta=0.0)
        assert_allclose(resp.chi, (1j / w) * np.eye(16), atol=5e-5)
        # block-diagonal decay: n-th block diagonal suppressed by (||G||/w)^n
        amap = resp.species_map()
        d0 = np.abs(np.diag(amap)).max()
        d1 = np.abs(np.diag(amap, 1)).max()
        d2 = np.abs(np.diag(amap, 2)).max()
        assert d1 < d0 * 0.05
        assert d2 < d1 * 0.05

    def test_single_lossy_mode_closed_form(self):
        om0, ka = 1.3, 0.4
        D = koc(1, j=0, delta=0, omega=om0, kappa=ka)
        for w in (0.0, 0.9, 2.5):
            resp = susceptibility(D, w, eta=0.0)
            assert_allclose(resp.chi[0, 0], 1j / (w - om0 + 1j * ka), rtol=1e-12)

    def test_resolvent_norm_identity(self):
        D = koc(10, omega=1.1)
        for w in (0.3, 2.0):
            resp = susceptibility(D, w, eta=0.0)
            smin = smin_values(D.G, np.array([w + 0.0j]))[0]
            assert abs(np.linalg.norm(resp.chi, 2) * smin - 1.0) < 1e-8

    def test_eta_default_for_marginal(self):
        D = koc(6)  # gap exactly 0
        resp = susceptibility(D, 0.0)
        assert resp.eta > 0
        D2 = koc(6, kappa=0.5)  # strictly stable
        resp2 = susceptibility(D2, 0.0)
        assert resp2.eta == 0.0

    def test_singular_shift_reports_nearest(self):
        D = koc(4, j=0, delta=0, omega=1.0)
        with pytest.raises(ValueError, match="eigenvalue"):
            susceptibility(D, 1.0, eta=0.0)

    def test_kubo_eigenbasis_integral(self):
        D = koc(8, omega=3.0, kappa=0.4)  # strictly stable
        w0 = 0.2
        resp = susceptibility(D, w0, eta=0.0)
        lam, L = np.linalg.eig(D.G)
        integral = L @ np.diag(1j / (w0 - lam)) @ np.linalg.inv(L)
        assert np.abs(integral - resp.chi).max() < 1e-8

    def test_short_ranged_vs_delocalized_zero_frequency(self):
        # Hermitian limit Delta=0: response short-ranged when 0 is outside
        # the semi-infinite spectrum (Omega > J), delocalized when inside
        D3 = koc(30, j=2.0, delta=0.0, omega=3.0)
        amap = susceptibility(D3, 0.0).species_map()
        off = amap.copy()
        np.fill_diagonal(off, 0.0)
        band = np.abs(np.arange(30)[:, None] - np.arange(30)[None, :]) > 3
        assert off[band].max() < 0.1 * np.diag(amap).max()
        D1 = koc(30, j=2.0, delta=0.0, omega=1.1)
        amap1 = susceptibility(D1, 0.0).species_map()
        off1 = amap1.copy()
        np.fill_diagonal(off1, 0.0)
        assert off1[band].max() > 0.1 * np.diag(amap1).max()


class TestTimeDomain:
    def test_causality(self):
        D = koc(3)
        assert np.abs(time_domain_response(D, -0.5)).max() == 0.0

    def test_zero_plus_limit(self):
        D = koc(3, omega=0.9)
        assert_allclose(time_domain_response(D, 0.0), -1j * tau(3, 3), atol=1e-14)

    def test_fourier_transform_matches_frequency_domain(self):
        # chi(omega) = i * FT[chi(t)](omega) * tau3 for a strictly stable
        # model (oscillator-dominated region: all rapidities at -kappa),
        # integrating to a horizon where V(t) has decayed
        D = koc(6, omega=3.0, kappa=0.5)
        w0 = 0.3
        T, dt = 40.0, 0.01
        ts = np.arange(0.0, T + dt / 2, dt)
        import scipy.linalg as sla
        V = sla.expm(-1j * D.G * dt)
        t3 = tau(3, 6)
        acc = np.zeros_like(D.G)
        cur = np.eye(12, dtype=complex)
        # composite trapezoid on e^{i w t} chi(t)
        for i, t in enumerate(ts):
            wgt = 0.5 if i in (0, len(ts) - 1) else 1.0
            acc = acc + wgt * np.exp(1j * w0 * t) * (-1j * cur @ t3) * dt
            cur = V @ cur
        chi_ft = 1j * acc @ t3
        chi = susceptibility(D, w0, eta=0.0).chi
        rel = np.abs(chi_ft - chi).max() / np.abs(chi).max()
        assert rel < 0.01


class TestEndToEndGain:
    def test_diagonal_generator_zero_gain(self):
        D = koc(6, j=0, delta=0, omega=1.0, kappa=0.2)
        resp = susceptibility(D, 0.0)
        assert end_to_end_gain(resp) == 0.0

    def test_gain_grows_with_delta_fixed_spectrum(self):
        gains = []
        for d in (0.0, 0.5, 1.0):
            resp = susceptibility(bkc_loss(30, d), 0.0, eta=0.0)
            gains.append(end_to_end_gain(resp))
        assert gains[0] < gains[1] < gains[2]
        assert gains[2] > 1e3 * max(gains[0], 1e-30)

    def test_gain_exponential_in_n(self):
        ns = np.array([10, 20, 30])
        gains = np.array([end_to_end_gain(susceptibility(bkc_loss(int(n), 1.0),
                                                         0.0, eta=0.0))
                          for n in ns])
        logg = np.log(gains)
        slope, intercept = np.polyfit(ns, logg, 1)
        fit = slope * ns + intercept
        ss_res = np.sum((logg - fit) ** 2)
        ss_tot = np.sum((logg - logg.mean()) ** 2)
        assert slope > 0
        assert 1 - ss_res / ss_tot > 0.99


class TestPseudoresonance:
    def test_normal_far_from_spectrum(self):
        D = koc(8, j=0, delta=0, omega=2.0)
        eps, mode, rows = pseudoresonance_profile(D, 50.0)
        assert abs(eps - 48.0) < 1e-9
        # off-resonant response: uniformly small, no structure beyond the
        # near-identity diagonal
        assert rows.max() < 0.03
        off = rows.copy()
        np.fill_diagonal(off, 0.0)
        assert off.max() < 1e-3 * np.diag(rows).min()

    def test_bkc_loss_rows_match_pseudomode(self):
        D = bkc_loss(30, 0.5)
        eps, mode, rows = pseudoresonance_profile(D, 0.0, eta=0.0)
        sims = []
        for l in range(rows.shape[0]):
            r = rows[l]
            sims.append(np.dot(r, mode) / (np.linalg.norm(r)
                                           * np.linalg.norm(mode)))
        assert max(sims) >= 0.99

    def test_koc_hermitian_profile_wavevector(self):
        # Delta=0, 0 < Omega < J: the zero-frequency pseudomode oscillates
        # with the wavevector solving Omega + J sin k = 0
        om, j, n = 1.1, 2.0, 40
        D = koc(n, j=j, delta=0.0, omega=om)
        eps, mode, rows = pseudoresonance_profile(D, 0.0)
        k_expect = abs(np.arcsin(-om / j))
        # dominant spatial frequency of the mode profile via FFT
        prof = mode - mode.mean()
        freqs = np.fft.rfftfreq(n, d=1.0) * 2 * np.pi
        amp = np.abs(np.fft.rfft(prof))
        k_meas = freqs[np.argmax(amp)]
        # |mode| oscillates at 2k (magnitude of a plane wave envelope)
        assert min(abs(k_meas - k_expect), abs(k_meas - 2 * k_expect),
                   abs(2 * np.pi - k_meas - 2 * k_expect)) < 0.25


class TestReducedBasisResponse:
    def test_lossy_reduced_mode_closed_form(self):
        # reduced-basis generators are converted to the energy convention:
        # a single decoupled lossy site has chi_aa = i/(omega + i kappa)
        from qbl.model import CoupledHN, build_stencil
        from qbl.operators import assemble
        spec = CoupledHN(j_a=1.0, j_b=1.0, w=0.0, theta=0.0, gamma_a=0.0,
                         gamma_b=0.0, kappa_plus=0.0, kappa_minus=0.4)
        D = assemble(build_stencil(spec), OBC, 1)
        for w in (0.0, 0.7):
            resp = susceptibility(D, w, eta=0.0)
            assert abs(resp.chi[0, 0] - 1j / (w + 0.4j)) < 1e-12
