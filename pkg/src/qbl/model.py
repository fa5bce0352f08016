"""Built-in lattice models and their finite-range coupling stencils.

Four nearest-neighbor (range R=1) bosonic lattice models are provided:

* ``CoupledHN``  -- two coherently coupled chains with asymmetric effective
  hopping induced by nearest-neighbor dissipation.  Thanks to its U(1)
  symmetry the dynamics closes on the species array [a_j, b_j], so the
  stencil is stored in this *reduced* basis and directly generates the
  equations of motion, ``d/dt phi = A phi``.
* ``KOC``        -- oscillator chain with imaginary hopping J and imaginary
  pairing Delta (optionally with uniform onsite loss kappa).
* ``GhcTrb``     -- gapped harmonic chain (real hopping and pairing J,
  onsite frequency Omega) with a time-reversal-breaking imaginary hopping
  gamma.
* ``BkcRealHop`` -- imaginary hopping J and pairing Delta plus a *real*
  hopping g that restores reciprocity for g >= Delta.

The latter three are Hamiltonian models stored in the local *Nambu* basis
[a_j, a_j^dag]; their stencil matrices g_r enter the dynamical matrix of
the energy-convention equation of motion ``d/dt Phi = -i G Phi``.

All parameters are plain real numbers in natural units (hbar = 1).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "CoupledHN",
    "KOC",
    "GhcTrb",
    "BkcRealHop",
    "ModelSpec",
    "DerivedHNParams",
    "CouplingStencil",
    "derive_hn_params",
    "build_stencil",
    "ghc_critical_gamma",
    "model_from_config",
    "MODEL_NAMES",
]

SIGMA1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA3 = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)


@dataclass(frozen=True)
class CoupledHN:
    """Two coherently coupled chains with intra-chain dissipative hopping.

    Parameters
    ----------
    j_a, j_b : real intra-chain hopping rates.
    w : inter-chain coherent coupling rate.
    theta : inter-chain dissipator phase (radians).  Phase-diagram sweeps
        are restricted to theta in {0, pi} (non-chiral / chiral regimes).
    gamma_a, gamma_b : nearest-neighbor dissipative coupling rates (>= 0).
    kappa_plus, kappa_minus : local gain / loss rates (>= 0).
    """

    j_a: float
    j_b: float
    w: float
    theta: float
    gamma_a: float
    gamma_b: float
    kappa_plus: float
    kappa_minus: float

    variant = "coupled_hn"

    def __post_init__(self):
        for name in ("gamma_a", "gamma_b", "kappa_plus", "kappa_minus"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if abs(self.j_a) < self.gamma_a or abs(self.j_b) < self.gamma_b:
            # coherent couplings are assumed to dominate the incoherent ones
            warnings.warn(
                "CoupledHN outside the coherently-dominated regime "
                "(|J| < Gamma); downstream analyses are untested there.",
                stacklevel=2,
            )


@dataclass(frozen=True)
class KOC:
    """Oscillator chain (frequency omega) with imaginary hopping j and
    imaginary pairing delta; optional uniform onsite loss kappa."""

    j: float
    delta: float
    omega: float
    kappa: float = 0.0

    variant = "koc"

    def __post_init__(self):
        if self.j < 0 or self.omega < 0 or self.kappa < 0:
            raise ValueError("j, omega, kappa must be nonnegative")


@dataclass(frozen=True)
class GhcTrb:
    """Gapped harmonic chain with time-reversal-breaking imaginary hopping."""

    omega: float
    j: float
    gamma: float

    variant = "ghc_trb"


@dataclass(frozen=True)
class BkcRealHop:
    """Imaginary hopping/pairing chain with an added real hopping g."""

    j: float
    delta: float
    g: float

    variant = "bkc_real"


ModelSpec = CoupledHN | KOC | GhcTrb | BkcRealHop

MODEL_NAMES = {
    "coupled_hn": CoupledHN,
    "koc": KOC,
    "ghc_trb": GhcTrb,
    "bkc_real": BkcRealHop,
}


@dataclass(frozen=True)
class DerivedHNParams:
    """Effective loss rates and asymmetric hopping amplitudes of CoupledHN.

    kappa_{a,b} = kappa_minus - kappa_plus + 2 Gamma_{a,b},
    J_a^{L,R}   = J_a -/+ Gamma_a,
    J_b^L       = J_b - e^{-i theta} Gamma_b,
    J_b^R       = J_b + e^{+i theta} Gamma_b.

    The identity kappa_a - kappa_b = 2 (Gamma_a - Gamma_b) holds by
    construction.
    """

    kappa_a: float
    kappa_b: float
    j_a_l: complex
    j_a_r: complex
    j_b_l: complex
    j_b_r: complex


@dataclass
class CouplingStencil:
    """Finite-range internal coupling matrices of a bulk-invariant model.

    Attributes
    ----------
    d : internal degrees of freedom per site (block size is 2 d).
    rng : coupling range R (couplings vanish beyond |r| > R).
    g : dict mapping r in {-R..R} to the 2d x 2d internal matrix.
    basis : "nambu" (per-site [a, a^dag]; EOM d/dt Phi = -i G Phi) or
        "reduced" (species basis; EOM d/dt phi = A phi).
    h, m : optional coherent / incoherent parts of the Nambu stencil.
    """

    d: int
    rng: int
    g: dict[int, np.ndarray]
    basis: str = "nambu"
    h: dict[int, np.ndarray] | None = None
    m: dict[int, np.ndarray] | None = None
    label: str = ""

    def __post_init__(self):
        if self.basis not in ("nambu", "reduced"):
            raise ValueError(f"unknown basis {self.basis!r}")
        b = self.block_size
        for r in range(-self.rng, self.rng + 1):
            mat = np.asarray(self.g.get(r, np.zeros((b, b))), dtype=complex)
            if mat.shape != (b, b):
                raise ValueError(f"g[{r}] must be {b}x{b}")
            self.g[r] = mat

    @property
    def block_size(self) -> int:
        return 2 * self.d

    def matrices(self):
        """g_r for r = -R..R as a list (zero-filled where absent)."""
        return [self.g[r] for r in range(-self.rng, self.rng + 1)]

    def associated(self) -> "CouplingStencil":
        """Stencil of the associated symbol g(1/z), i.e. g_r -> g_{-r}."""
        return CouplingStencil(
            d=self.d,
            rng=self.rng,
            g={-r: m.copy() for r, m in self.g.items()},
            basis=self.basis,
            label=self.label + "~",
        )

    def transposed(self) -> "CouplingStencil":
        """Entrywise-transposed stencil; its left partial indices are the
        right partial indices of the original symbol."""
        return CouplingStencil(
            d=self.d,
            rng=self.rng,
            g={r: m.T.copy() for r, m in self.g.items()},
            basis=self.basis,
            label=self.label + ".T",
        )

    @classmethod
    def from_matrices(cls, g_minus, g_zero, g_plus, basis="nambu", label=""):
        """Raw R=1 stencil from explicit matrices (no Lindbladian validation)."""
        g_zero = np.asarray(g_zero, dtype=complex)
        d2 = g_zero.shape[0]
        if d2 % 2 or d2 > 4:
            raise ValueError("block size must be 2 or 4")
        return cls(d=d2 // 2, rng=1,
                   g={-1: np.asarray(g_minus, dtype=complex),
                      0: g_zero,
                      1: np.asarray(g_plus, dtype=complex)},
                   basis=basis, label=label)


def derive_hn_params(spec: CoupledHN) -> DerivedHNParams:
    """Effective parameters of the coupled-HN equations of motion."""
    ka = spec.kappa_minus - spec.kappa_plus + 2 * spec.gamma_a
    kb = spec.kappa_minus - spec.kappa_plus + 2 * spec.gamma_b
    out = DerivedHNParams(
        kappa_a=ka,
        kappa_b=kb,
        j_a_l=spec.j_a - spec.gamma_a,
        j_a_r=spec.j_a + spec.gamma_a,
        j_b_l=spec.j_b - np.exp(-1j * spec.theta) * spec.gamma_b,
        j_b_r=spec.j_b + np.exp(1j * spec.theta) * spec.gamma_b,
    )
    # constraint identity kappa_a - kappa_b = 2 (Gamma_a - Gamma_b); exact
    # for dyadic-rational rates, within rounding otherwise
    defect = abs((out.kappa_a - out.kappa_b) - 2 * (spec.gamma_a - spec.gamma_b))
    scale = 1.0 + abs(spec.kappa_minus) + abs(spec.kappa_plus) \
        + abs(spec.gamma_a) + abs(spec.gamma_b)
    assert defect <= 4 * np.finfo(float).eps * scale
    return out


def build_stencil(spec: ModelSpec) -> CouplingStencil:
    """Internal coupling matrices of a built-in model.

    CoupledHN is returned in the reduced species basis [a_j, b_j] with the
    EOM-generator matrices a_r; the Hamiltonian models are returned in the
    Nambu basis with the energy-convention matrices g_r.
    """
    if isinstance(spec, CoupledHN):
        p = derive_hn_params(spec)
        a0 = np.array([[-p.kappa_a, spec.w], [-spec.w, -p.kappa_b]], dtype=complex)
        a1 = -np.diag([p.j_a_r, p.j_b_r]).astype(complex)
        am1 = np.diag([p.j_a_l, p.j_b_l]).astype(complex)
        return CouplingStencil(d=1, rng=1, g={-1: am1, 0: a0, 1: a1},
                               basis="reduced", label="coupled_hn")
    if isinstance(spec, KOC):
        g0h = spec.omega * SIGMA3
        g1 = 0.5j * np.array([[-spec.j, spec.delta], [spec.delta, -spec.j]])
        gm1 = 0.5j * np.array([[spec.j, spec.delta], [spec.delta, spec.j]])
        g0 = g0h - 1j * spec.kappa * I2
        # onsite single-photon loss at rate kappa: L_j = sqrt(2 kappa) a_j
        m0 = 2 * spec.kappa * np.array([[1, 0], [0, 0]], dtype=complex)
        zero = np.zeros((2, 2), dtype=complex)
        return CouplingStencil(
            d=1, rng=1, g={-1: gm1, 0: g0, 1: g1}, basis="nambu", label="koc",
            h={-1: SIGMA3 @ gm1, 0: SIGMA3 @ g0h, 1: SIGMA3 @ g1},
            m={-1: zero.copy(), 0: m0, 1: zero.copy()})
    if isinstance(spec, GhcTrb):
        g0 = spec.omega * SIGMA3
        g1 = 0.5 * np.array([[-spec.j - 1j * spec.gamma, -spec.j],
                             [spec.j, spec.j - 1j * spec.gamma]])
        gm1 = 0.5 * np.array([[-spec.j + 1j * spec.gamma, -spec.j],
                              [spec.j, spec.j + 1j * spec.gamma]])
        zero = np.zeros((2, 2), dtype=complex)
        return CouplingStencil(
            d=1, rng=1, g={-1: gm1, 0: g0, 1: g1}, basis="nambu",
            label="ghc_trb",
            h={-1: SIGMA3 @ gm1, 0: SIGMA3 @ g0, 1: SIGMA3 @ g1},
            m={-1: zero.copy(), 0: zero.copy(), 1: zero.copy()})
    if isinstance(spec, BkcRealHop):
        g1 = np.array([[0.5 * (spec.g - 1j * spec.j), 0.5j * spec.delta],
                       [0.5j * spec.delta, -0.5 * (spec.g + 1j * spec.j)]])
        gm1 = np.array([[0.5 * (spec.g + 1j * spec.j), 0.5j * spec.delta],
                        [0.5j * spec.delta, 0.5 * (-spec.g + 1j * spec.j)]])
        zero = np.zeros((2, 2), dtype=complex)
        return CouplingStencil(
            d=1, rng=1, g={-1: gm1, 0: zero.copy(), 1: g1}, basis="nambu",
            label="bkc_real",
            h={-1: SIGMA3 @ gm1, 0: zero.copy(), 1: SIGMA3 @ g1},
            m={-1: zero.copy(), 0: zero.copy(), 1: zero.copy()})
    raise TypeError(f"unsupported model variant: {type(spec).__name__}")


def ghc_critical_gamma(omega: float, j: float) -> float:
    """Imaginary-hopping strength at which the GhcTrb bulk energy gap closes.

    For omega > 2 j > 0 the positive excitation band
    ``w(k) = gamma sin k + sqrt(omega (omega - 2 j cos k))`` first touches
    zero at

        gamma_c = (omega / sqrt(2)) * sqrt(1 + sqrt(1 - (2 j / omega)^2)).

    The band minimum is strictly positive for gamma < gamma_c and dips
    negative beyond it (thermodynamic stability is lost while bulk
    dynamical stability persists).
    """
    if not (omega > 2 * j > 0):
        raise ValueError("requires omega > 2 j > 0")
    u = 2 * j / omega
    return (omega / np.sqrt(2)) * np.sqrt(1 + np.sqrt(1 - u * u))


def model_from_config(cfg: dict) -> ModelSpec:
    """Instantiate a ModelSpec from a config mapping.

    Expected shape: ``{"model": <name>, "params": {...}}`` with parameter
    keys matching the dataclass field names (lower_snake_case).
    """
    try:
        name = cfg["model"]
        params = dict(cfg["params"])
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed model config: {exc}") from exc
    try:
        cls = MODEL_NAMES[name]
    except KeyError:
        raise ValueError(
            f"unknown model {name!r}; expected one of {sorted(MODEL_NAMES)}"
        ) from None
    try:
        return cls(**params)
    except TypeError as exc:
        raise ValueError(f"bad parameters for {name}: {exc}") from exc
