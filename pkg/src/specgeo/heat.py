"""Heat-kernel coefficients of constant-coefficient Laplace-type operators.

P = -(g^{mu nu} d_mu d_nu + A^mu d_mu + B) acting on C^r-valued functions on a
flat torus.  Only the flat sector of the a_0, a_2, a_4 formulas is live; the
curvature weights are kept so that curved input would only change data.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

# integer weights of the a_2 and a_4 invariants (divided by 6 and 360)
ALPHA = {
    0: 1,  # tr(1) in a_0
    1: 6,  # E in a_2
    2: 1,  # scalar curvature in a_2
    3: 60,  # Laplacian of E
    4: 60,  # s E
    5: 180,  # E^2
    6: 12,  # Laplacian of s
    7: 5,  # s^2
    8: -2,  # |Ric|^2
    9: 2,  # |Riem|^2
    10: 30,  # Omega_ij Omega^ij
}

CONDITION_LIMIT = 1e12


class IllConditionedWindowWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class LaplaceTypeData:
    """Constant coefficients of P on a flat torus.

    ``A`` has shape (d, r, r) (one matrix per upper index mu), ``B`` shape (r, r).
    ``coord_volume`` is the coordinate volume; the Riemannian volume includes
    sqrt(det g_{mu nu}).
    """

    dimension: int
    metric_inverse: np.ndarray
    A: np.ndarray
    B: np.ndarray
    coord_volume: float = (2 * math.pi) ** 2

    def __post_init__(self):
        d = self.dimension
        g = np.asarray(self.metric_inverse, dtype=float)
        A = np.asarray(self.A, dtype=complex)
        B = np.asarray(self.B, dtype=complex)
        if g.shape != (d, d):
            raise ValueError(f"metric_inverse must be {d}x{d}")
        if not np.allclose(g, g.T, atol=1e-14):
            raise ValueError("metric_inverse must be symmetric")
        if np.linalg.eigvalsh(g).min() <= 0:
            raise ValueError("metric_inverse must be positive definite")
        if B.ndim != 2 or B.shape[0] != B.shape[1]:
            raise ValueError("B must be a square matrix")
        r = B.shape[0]
        if A.shape != (d, r, r):
            raise ValueError(f"A must have shape ({d}, {r}, {r})")
        if self.coord_volume <= 0:
            raise ValueError("volume must be positive")
        object.__setattr__(self, "metric_inverse", g)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def fiber_rank(self) -> int:
        return self.B.shape[0]

    @property
    def metric(self) -> np.ndarray:
        return np.linalg.inv(self.metric_inverse)

    @property
    def volume(self) -> float:
        return self.coord_volume / math.sqrt(np.linalg.det(self.metric_inverse))

    @classmethod
    def laplacian(cls, d: int, mass_sq: float = 0.0, rank: int = 1, coord_volume=None) -> "LaplaceTypeData":
        """Delta + m^2 on the torus R^d / 2pi Z^d."""
        vol = (2 * math.pi) ** d if coord_volume is None else coord_volume
        return cls(d, np.eye(d), np.zeros((d, rank, rank)), -mass_sq * np.eye(rank), vol)

    def scaled(self, factor: float) -> "LaplaceTypeData":
        """Coefficients of factor * P."""
        return replace(self, metric_inverse=factor * self.metric_inverse, A=factor * self.A, B=factor * self.B)

    def shifted(self, h: float) -> "LaplaceTypeData":
        """Coefficients of P - h."""
        return replace(self, B=self.B + h * np.eye(self.fiber_rank))


def normal_form(data: LaplaceTypeData) -> tuple[np.ndarray, np.ndarray]:
    """Connection one-form omega_nu = 1/2 g_{nu mu} A^mu and endomorphism E."""
    omega = 0.5 * np.einsum("nm,mab->nab", data.metric, data.A)
    E = data.B - np.einsum("nm,nab,mbc->ac", data.metric_inverse, omega, omega)
    return omega, E


def curvature(omega: np.ndarray) -> np.ndarray:
    """Omega_ij = [omega_i, omega_j] (derivative terms vanish for constant omega)."""
    return np.einsum("iab,jbc->ijac", omega, omega) - np.einsum("jab,ibc->ijac", omega, omega)


@dataclass(frozen=True)
class HeatCoefficients:
    """a_0 .. a_{k_max}; odd entries are identically zero."""

    values: tuple[float, ...]
    condition_number: float | None = None
    residual: float | None = None
    extra: dict = field(default_factory=dict, compare=False)

    def __getitem__(self, k: int) -> float:
        if k % 2:
            return 0.0
        return self.values[k] if k < len(self.values) else 0.0

    @property
    def a0(self) -> float:
        return self[0]

    @property
    def a2(self) -> float:
        return self[2]

    @property
    def a4(self) -> float:
        return self[4]

    def to_dict(self) -> dict:
        out = {f"a{k}": self[k] for k in range(0, len(self.values), 2)}
        if self.condition_number is not None:
            out["condition_number"] = self.condition_number
        if self.residual is not None:
            out["residual"] = self.residual
        return out


def _real(z: complex) -> float:
    return float(np.real(z))


def seeley_dewitt(data: LaplaceTypeData, smear_f: float = 1.0) -> HeatCoefficients:
    """a_0, a_2, a_4 of Tr(f e^{-tP}) ~ sum_k a_k t^{(k-d)/2} for constant f."""
    d = data.dimension
    omega, E = normal_form(data)
    Om = curvature(omega)
    g = data.metric_inverse
    pref = (4 * math.pi) ** (-d / 2) * smear_f * data.volume
    # all curvature invariants of the flat metric vanish
    s = 0.0
    ricci_sq = riem_sq = 0.0
    lap_E = np.zeros_like(E)
    r = data.fiber_rank
    ident = np.eye(r)
    a0 = pref * ALPHA[0] * r
    a2 = pref / 6 * _real(np.trace(ALPHA[1] * E + ALPHA[2] * s * ident))
    omega_sq = np.einsum("ia,jb,ijxy,abyz->xz", g, g, Om, Om)
    inv4 = (
        ALPHA[3] * lap_E
        + ALPHA[4] * s * E
        + ALPHA[5] * E @ E
        + (ALPHA[6] * 0.0 + ALPHA[7] * s * s + ALPHA[8] * ricci_sq + ALPHA[9] * riem_sq) * ident
        + ALPHA[10] * omega_sq
    )
    a4 = pref / 360 * _real(np.trace(inv4))
    return HeatCoefficients((a0, 0.0, a2, 0.0, a4))


# ---------------------------------------------------------------------------
# extraction from sampled traces


def fit_heat_coefficients(
    samples: Sequence[tuple[float, float]], d: int, k_max: int = 12
) -> HeatCoefficients:
    """Least-squares fit of trace(t) ~ sum_{k even, k<=k_max} a_k t^{(k-d)/2}.

    Columns are built in the scaled variable t / max(t) for conditioning; a
    warning is issued when the scaled design matrix has condition above 1e12.
    """
    if k_max < 0 or k_max % 2:
        raise ValueError("k_max must be a non-negative even integer")
    pts = np.asarray(samples, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("samples must be (t, trace) pairs")
    t, y = pts[:, 0], pts[:, 1]
    if np.any(t <= 0):
        raise ValueError("sample times must be positive")
    ks = list(range(0, k_max + 1, 2))
    if len(np.unique(t)) < len(ks) + 1:
        raise ValueError(f"need at least {len(ks) + 1} distinct t values for k_max={k_max}")
    t_ref = float(t.max())
    u = t / t_ref
    # trace * t^{d/2} is a polynomial in t
    lhs = y * t ** (d / 2)
    V = np.stack([u ** (k // 2) for k in ks], axis=1)
    col_scale = np.linalg.norm(V, axis=0)
    Vs = V / col_scale
    cond = float(np.linalg.cond(Vs))
    if cond > CONDITION_LIMIT:
        warnings.warn(f"ill-conditioned sample window (condition {cond:.2e})", IllConditionedWindowWarning)
    coef, *_ = np.linalg.lstsq(Vs, lhs, rcond=None)
    coef = coef / col_scale
    resid = float(np.sqrt(np.mean((V @ coef - lhs) ** 2)))
    values = [0.0] * (k_max + 1)
    for k, c in zip(ks, coef):
        values[k] = float(c / t_ref ** (k // 2))
    return HeatCoefficients(tuple(values), cond, resid)


def torus_trace_samples(
    d: int, ts: Sequence[float], mass_sq: float = 0.0, dirac: bool = False
) -> list[tuple[float, float]]:
    """Exact heat traces of Delta + m^2 (or D^2 + m^2) on R^d / 2pi Z^d from lattice shells."""
    from .lattice import heat_trace, shells_for_tolerance

    out = []
    for t in ts:
        spec = shells_for_tolerance(d, t, dirac=dirac)
        out.append((float(t), heat_trace(spec, t, mass_sq).value))
    return out


# ---------------------------------------------------------------------------
# variational identities

_EPS = 1e-4


def _derivative(fn, eps: float = _EPS) -> np.ndarray:
    """Central difference at 0 with one Richardson step."""
    def central(h):
        return (np.asarray(fn(h)) - np.asarray(fn(-h))) / (2 * h)

    return (4 * central(eps / 2) - central(eps)) / 3


def _vec(hc: HeatCoefficients) -> np.ndarray:
    return np.array([hc[0], hc[2], hc[4]])


@dataclass(frozen=True)
class VariationCheck:
    orders: tuple[int, ...]
    lhs: tuple[float, ...]
    rhs: tuple[float, ...]

    def ok(self, rel: float = 1e-6, abs_: float = 1e-10) -> bool:
        return all(abs(a - b) <= rel * abs(b) + abs_ for a, b in zip(self.lhs, self.rhs))

    def to_dict(self) -> dict:
        return {"orders": list(self.orders), "lhs": list(self.lhs), "rhs": list(self.rhs)}


def conformal_variation_check(data: LaplaceTypeData, c: float) -> VariationCheck:
    """d/de a_k(1, e^{-2ec} P) at e = 0 versus (d - k) a_k(c, P) for k = 0, 2, 4."""
    d = data.dimension
    lhs = _derivative(lambda e: _vec(seeley_dewitt(data.scaled(math.exp(-2 * e * c)))))
    base = _vec(seeley_dewitt(data, c))
    rhs = np.array([(d - k) for k in (0, 2, 4)]) * base
    return VariationCheck((0, 2, 4), tuple(map(float, lhs)), tuple(map(float, rhs)))


def shift_variation_check(data: LaplaceTypeData, h: float) -> VariationCheck:
    """d/de a_k(1, P - e h) at e = 0 versus a_{k-2}(h, P) for k = 2, 4."""
    lhs = _derivative(lambda e: _vec(seeley_dewitt(data.shifted(e * h)))[1:])
    base = seeley_dewitt(data, h)
    rhs = np.array([base[0], base[2]])
    return VariationCheck((2, 4), tuple(map(float, lhs)), tuple(map(float, rhs)))
