"""The noncommutative torus with finitely supported coefficients.

Elements are a = sum_k a_k U_k with U_k U_q = e^{-(i/2) k.Theta q} U_{k+q},
trace tau(a) = a_0 and derivations delta_mu(U_k) = i k_mu U_k.  Gauge
potentials are n-tuples of anti-hermitian elements A_alpha.

The residues of the fluctuated Dirac operator enter only through closed
finite sums (I2, I3, I4 below); the field strength F is built independently
from the algebra, and the identity between the two routes is the central
check of this module.
"""

from __future__ import annotations

import cmath
import itertools
import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

from .action import CutoffFunction, ExpansionTerm
from .diophantine import Verdict, matrix_badly_approximable
from .lattice import ShellSpectrum, enumerate_shells
from .parallel import ordered_map

# c = 4 pi^2 / 3 multiplies every fluctuation term in dimension 4
NC_CONSTANT = 4 * math.pi**2 / 3
GOLDEN = (1 + math.sqrt(5)) / 2

Mode = tuple[int, ...]


def _skew(theta, n: int) -> np.ndarray:
    th = np.asarray(theta, dtype=float)
    if th.shape != (n, n):
        raise ValueError(f"theta must be {n}x{n}")
    if not np.allclose(th, -th.T, atol=1e-14):
        raise ValueError("theta must be skew-symmetric")
    return th


class TorusElement:
    """Finitely supported sum of Weyl unitaries; immutable."""

    __slots__ = ("n", "theta", "_coeffs")

    def __init__(self, n: int, theta, coeffs: Mapping[Sequence[int], complex] | None = None, tol: float = 0.0):
        if n < 1:
            raise ValueError("dimension must be positive")
        self.n = n
        self.theta = _skew(theta, n)
        self.theta.setflags(write=False)
        out: dict[Mode, complex] = {}
        for k, v in (coeffs or {}).items():
            key = tuple(int(x) for x in k)
            if len(key) != n:
                raise ValueError(f"mode {k} has wrong length")
            v = complex(v)
            if abs(v) > tol:
                out[key] = out.get(key, 0j) + v
        self._coeffs = {k: v for k, v in out.items() if v != 0}

    @classmethod
    def unitary(cls, n: int, theta, k: Sequence[int], c: complex = 1.0) -> "TorusElement":
        return cls(n, theta, {tuple(k): c})

    @classmethod
    def zero(cls, n: int, theta) -> "TorusElement":
        return cls(n, theta, {})

    @property
    def coeffs(self) -> dict[Mode, complex]:
        return dict(self._coeffs)

    def __getitem__(self, k: Sequence[int]) -> complex:
        return self._coeffs.get(tuple(k), 0j)

    @property
    def support(self) -> list[Mode]:
        return sorted(self._coeffs)

    def _compatible(self, other: "TorusElement") -> None:
        if not isinstance(other, TorusElement):
            raise TypeError("expected a TorusElement")
        if other.n != self.n or not np.array_equal(other.theta, self.theta):
            raise ValueError("elements live on different noncommutative tori")

    def __add__(self, other: "TorusElement") -> "TorusElement":
        self._compatible(other)
        out = dict(self._coeffs)
        for k, v in other._coeffs.items():
            out[k] = out.get(k, 0j) + v
        return TorusElement(self.n, self.theta, out)

    def __neg__(self) -> "TorusElement":
        return TorusElement(self.n, self.theta, {k: -v for k, v in self._coeffs.items()})

    def __sub__(self, other: "TorusElement") -> "TorusElement":
        return self + (-other)

    def scale(self, c: complex) -> "TorusElement":
        return TorusElement(self.n, self.theta, {k: c * v for k, v in self._coeffs.items()})

    def __mul__(self, other):
        if isinstance(other, TorusElement):
            return weyl_mul(self, other)
        return self.scale(other)

    __rmul__ = scale

    def adjoint(self) -> "TorusElement":
        """(a*)_k = conj(a_{-k})."""
        return TorusElement(self.n, self.theta, {tuple(-x for x in k): v.conjugate() for k, v in self._coeffs.items()})

    def trace(self) -> complex:
        return self[(0,) * self.n]

    def norm_inf(self) -> float:
        return max((abs(v) for v in self._coeffs.values()), default=0.0)

    def close_to(self, other: "TorusElement", tol: float = 1e-12) -> bool:
        return (self - other).norm_inf() <= tol

    def __repr__(self) -> str:
        return f"TorusElement(n={self.n}, coeffs={self._coeffs})"


def _phase(theta: np.ndarray, k: Mode, q: Mode) -> complex:
    return cmath.exp(-0.5j * float(np.dot(k, theta @ np.asarray(q, dtype=float))))


def weyl_mul(a: TorusElement, b: TorusElement) -> TorusElement:
    """(ab)_r = sum_{k+q=r} a_k b_q e^{-(i/2) k.Theta q}."""
    a._compatible(b)
    out: dict[Mode, complex] = {}
    th = a.theta
    for k, x in a._coeffs.items():
        tk = np.asarray(k, dtype=float) @ th
        for q, y in b._coeffs.items():
            r = tuple(i + j for i, j in zip(k, q))
            out[r] = out.get(r, 0j) + x * y * cmath.exp(-0.5j * float(np.dot(tk, q)))
    return TorusElement(a.n, th, out)


def commutator(a: TorusElement, b: TorusElement) -> TorusElement:
    return weyl_mul(a, b) - weyl_mul(b, a)


def derivation(mu: int, a: TorusElement) -> TorusElement:
    """delta_mu(U_k) = i k_mu U_k; ``mu`` is a 0-based axis index."""
    if not 0 <= mu < a.n:
        raise IndexError(f"derivation index {mu} outside 0..{a.n - 1}")
    return TorusElement(a.n, a.theta, {k: 1j * k[mu] * v for k, v in a._coeffs.items()})


# ---------------------------------------------------------------------------
# one-forms


class OneForm:
    """n anti-hermitian components A_alpha (conj(a_{alpha,l}) = -a_{alpha,-l})."""

    def __init__(self, components: Sequence[TorusElement], tol: float = 1e-12):
        comps = tuple(components)
        if not comps:
            raise ValueError("one-form needs components")
        n = comps[0].n
        if len(comps) != n:
            raise ValueError(f"need exactly {n} components")
        for c in comps[1:]:
            comps[0]._compatible(c)
        for alpha, c in enumerate(comps):
            if not (c + c.adjoint()).norm_inf() <= tol * max(1.0, c.norm_inf()):
                raise ValueError(f"component {alpha} is not anti-hermitian")
        self.components = comps

    @property
    def n(self) -> int:
        return self.components[0].n

    @property
    def theta(self) -> np.ndarray:
        return self.components[0].theta

    def __getitem__(self, alpha: int) -> TorusElement:
        return self.components[alpha]

    def is_zero(self) -> bool:
        return all(not c.support for c in self.components)

    @classmethod
    def zero(cls, n: int, theta) -> "OneForm":
        return cls([TorusElement.zero(n, theta) for _ in range(n)])

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "theta": [float(x) for x in self.theta.reshape(-1)],
            "components": [
                [{"l": list(k), "re": v.real, "im": v.imag} for k, v in sorted(c.coeffs.items())]
                for c in self.components
            ],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "OneForm":
        """{n, theta (row-major), components}; components is a list of n lists of
        {l, re, im}, or a flat list whose entries also carry ``alpha`` (0-based)."""
        n = int(data["n"])
        theta = np.asarray(data["theta"], dtype=float).reshape(n, n)
        per = [dict() for _ in range(n)]
        comps = data["components"]
        if comps and isinstance(comps[0], Mapping):
            groups = [[] for _ in range(n)]
            for entry in comps:
                groups[int(entry["alpha"])].append(entry)
        else:
            groups = comps
        if len(groups) != n:
            raise ValueError(f"need {n} component lists")
        for alpha, entries in enumerate(groups):
            for e in entries:
                key = tuple(int(x) for x in e["l"])
                per[alpha][key] = per[alpha].get(key, 0j) + complex(float(e.get("re", 0.0)), float(e.get("im", 0.0)))
        return cls([TorusElement(n, theta, c) for c in per])


def field_strength(A: OneForm) -> list[list[TorusElement]]:
    """F_{ab} = delta_a(A_b) - delta_b(A_a) + [A_a, A_b]."""
    n = A.n
    F = [[TorusElement.zero(n, A.theta) for _ in range(n)] for _ in range(n)]
    for a in range(n):
        for b in range(a + 1, n):
            fab = derivation(a, A[b]) - derivation(b, A[a]) + commutator(A[a], A[b])
            F[a][b] = fab
            F[b][a] = -fab
    return F


_IMAG_TOL = 1e-12


def _real_checked(z: complex, scale: float) -> float:
    if abs(z.imag) > _IMAG_TOL * max(1.0, scale):
        raise ArithmeticError(f"expected a real value, imaginary part {z.imag:.3e}")
    return z.real


def yang_mills_density(A: OneForm) -> float:
    """tau(sum_{a,b} F_ab F_ab) with indices raised by the flat metric."""
    F = field_strength(A)
    terms = []
    for a in range(A.n):
        for b in range(A.n):
            fab = F[a][b]
            # tau(fg) = sum_k f_k g_{-k} e^{-(i/2)k.Theta(-k)} and k.Theta k = 0
            terms.extend(v * fab[tuple(-x for x in k)] for k, v in fab.coeffs.items())
    total = complex(math.fsum(t.real for t in terms), math.fsum(t.imag for t in terms))
    scale = math.fsum(abs(t) for t in terms)
    return _real_checked(total, scale)


def gauge_transform(A: OneForm, u: TorusElement) -> OneForm:
    """gamma_u(A)_alpha = u A_alpha u* + u delta_alpha(u*) for a unitary u."""
    one = TorusElement.unitary(A.n, A.theta, (0,) * A.n)
    if not weyl_mul(u, u.adjoint()).close_to(one, 1e-12):
        raise ValueError("gauge element must be unitary")
    us = u.adjoint()
    return OneForm([weyl_mul(weyl_mul(u, A[a]), us) + weyl_mul(u, derivation(a, us)) for a in range(A.n)])


def pure_gauge(n: int, theta, k: Sequence[int]) -> OneForm:
    """gamma_{U_k}(0): A_alpha = -i k_alpha U_0."""
    zero = OneForm.zero(n, theta)
    return gauge_transform(zero, TorusElement.unitary(n, theta, k))


# ---------------------------------------------------------------------------
# closed-form residues


def _sin_half(theta: np.ndarray, k, q) -> float:
    return math.sin(0.5 * float(np.dot(np.asarray(k, float), theta @ np.asarray(q, float))))


def _neg(*modes: Mode) -> Mode:
    return tuple(-sum(x) for x in zip(*modes))


@dataclass(frozen=True)
class NCIntegrals:
    """Residues of Tr((A+) D^{-1})^q |D|^{-s} at s = 0 for q = 2, 3, 4."""

    I2: float
    I3: float
    I4: float
    diophantine: str
    caveat: str | None = None

    def to_dict(self) -> dict:
        return {"I2": self.I2, "I3": self.I3, "I4": self.I4, "diophantine": self.diophantine, "caveat": self.caveat}


@lru_cache(maxsize=32)
def _verdict_for(theta_bytes: bytes, n: int, depth: int) -> str:
    theta = np.frombuffer(theta_bytes, dtype=float).reshape(n, n)
    return matrix_badly_approximable(theta, depth=depth).verdict.value


def diophantine_verdict(theta: np.ndarray, depth: int = 2) -> str:
    th = np.ascontiguousarray(theta, dtype=float)
    return _verdict_for(th.tobytes(), th.shape[0], depth)


def _caveat(verdict: str) -> str | None:
    if verdict == Verdict.YES.value:
        return None
    return f"theta/2pi verdict {verdict}: the closed forms assume a badly approximable deformation"


def _complex_sum(terms: Iterable[complex]) -> complex:
    terms = list(terms)
    return complex(math.fsum(t.real for t in terms), math.fsum(t.imag for t in terms))


def quadratic_sum(A: OneForm) -> complex:
    """sum a_{a,l} a_{b,-l} (l_a l_b - delta_ab |l|^2)."""
    n = A.n
    out = []
    for a in range(n):
        for b in range(n):
            for l, x in A[a].coeffs.items():
                y = A[b][_neg(l)]
                if y:
                    w = l[a] * l[b] - (sum(c * c for c in l) if a == b else 0)
                    out.append(x * y * w)
    return _complex_sum(out)


def cubic_sum(A: OneForm) -> complex:
    """sum a_{c,-l1-l2} a_{a,l2} a_{a,l1} sin(1/2 l1.Theta l2) (l1)_c."""
    n, th = A.n, A.theta
    out = []
    for a in range(n):
        items = list(A[a].coeffs.items())
        for (l1, x1), (l2, x2) in itertools.product(items, repeat=2):
            s = _sin_half(th, l1, l2)
            if s == 0:
                continue
            m = _neg(l1, l2)
            for c in range(n):
                z = A[c][m]
                if z and l1[c]:
                    out.append(z * x2 * x1 * s * l1[c])
    return _complex_sum(out)


def quartic_sum(A: OneForm) -> complex:
    """sum a_{a,-l1-l2-l3} a_{b,l3} a_{a,l2} a_{b,l1} sin(1/2 l1.Theta(l2+l3)) sin(1/2 l2.Theta l3)."""
    n, th = A.n, A.theta
    out = []
    for a in range(n):
        for b in range(n):
            ia = list(A[a].coeffs.items())
            ib = list(A[b].coeffs.items())
            for (l1, x1), (l2, x2), (l3, x3) in itertools.product(ib, ia, ib):
                s2 = _sin_half(th, l2, l3)
                if s2 == 0:
                    continue
                l23 = tuple(p + q for p, q in zip(l2, l3))
                s1 = _sin_half(th, l1, l23)
                if s1 == 0:
                    continue
                z = A[a][_neg(l1, l2, l3)]
                if z:
                    out.append(z * x3 * x2 * x1 * s1 * s2)
    return _complex_sum(out)


def nc_integral_powers(A: OneForm, depth: int = 2) -> NCIntegrals:
    """Closed forms of the q = 2, 3, 4 residues in dimension 4 (constant c = 4 pi^2 / 3).

    1/2 I2 = c S2, -1/3 I3 = 4 c S3, 1/4 I4 = 2 c S4 with S2, S3, S4 the
    quadratic, cubic and quartic sums over the supports.
    """
    if A.n != 4:
        raise ValueError("closed forms are stated for n = 4")
    verdict = diophantine_verdict(A.theta, depth)
    c = NC_CONSTANT
    S2, S3, S4 = quadratic_sum(A), cubic_sum(A), quartic_sum(A)
    scale = max(1.0, abs(S2), abs(S3), abs(S4))
    I2 = 2 * c * _real_checked(S2, scale)
    I3 = -12 * c * _real_checked(S3, scale)
    I4 = 8 * c * _real_checked(S4, scale)
    return NCIntegrals(I2, I3, I4, verdict, _caveat(verdict))


def zeta_DA_zero(A: OneForm) -> float:
    """zeta_{D_A}(0) - zeta_D(0), with zeta_D(0) = 0.

    n = 4: 2 (1/2 I2 - 1/3 I3 + 1/4 I4); the tadpole and crossed terms vanish.
    n = 2: 0.
    """
    if A.n == 2:
        return 0.0
    if A.n != 4:
        raise ValueError("n must be 2 or 4")
    r = nc_integral_powers(A)
    return 2 * (0.5 * r.I2 - r.I3 / 3 + 0.25 * r.I4)


@dataclass(frozen=True)
class TwoPathResult:
    zeta_value: float
    ym_density: float
    residual: float

    @property
    def scaled_residual(self) -> float:
        return abs(self.residual) / (1 + abs(self.ym_density))

    def to_dict(self) -> dict:
        return {
            "zeta_DA_zero": self.zeta_value,
            "yang_mills_density": self.ym_density,
            "residual": self.residual,
            "scaled_residual": self.scaled_residual,
        }


def two_path_check(A: OneForm) -> TwoPathResult:
    """zeta_DA_zero(A) + c tau(F F), which must vanish."""
    z = zeta_DA_zero(A)
    ym = yang_mills_density(A)
    return TwoPathResult(z, ym, z + NC_CONSTANT * ym)


def two_path_batch(forms: Sequence[OneForm]) -> list[TwoPathResult]:
    return ordered_map(two_path_check, forms)


# ---------------------------------------------------------------------------
# spectrum and action


def dirac_spectrum_nc(n: int, max_norm_sq: int, theta=None) -> ShellSpectrum:
    """D(U_k e_j) = k_mu U_k gamma^mu e_j: the flat-torus Dirac spectrum, independent of theta."""
    if theta is not None:
        _skew(theta, n)
    return enumerate_shells(n, max_norm_sq, dirac=True)


def top_residue(n: int) -> float:
    """Residue of Tr |D|^{-n-s} at s = 0: 2^{m+1} pi^{n/2} / Gamma(n/2), 2^m = spinor rank."""
    return 2 ** (n // 2 + 1) * math.pi ** (n / 2) / math.gamma(n / 2)


def spectral_action_nc(
    n: int, A: OneForm, f: CutoffFunction, Lambda: float, keep_zero: bool = False
) -> list[ExpansionTerm]:
    """Expansion of Tr f(D_A^2 / Lambda^2) on the noncommutative torus.

    Leading term f_n Lambda^n a_0 with a_0 = 1/2 Gamma(n/2) times the top
    residue; in dimension 4 the constant term is f(0) zeta_DA_zero(A).  The
    middle and odd terms vanish and are dropped unless ``keep_zero``.
    """
    if n not in (2, 4):
        raise ValueError("n must be 2 or 4")
    if A.n != n:
        raise ValueError("one-form dimension mismatch")
    a0 = 0.5 * math.gamma(n / 2) * top_residue(n)
    lead_coef = f.moment(n) * a0
    # labels use the moment 1/2 int f(s) s^{n/2-1} ds = f.action_moment(n), which absorbs the 1/2 Gamma(n/2)
    label = "4 pi f_2 Lambda^2" if n == 2 else "8 pi^2 f_4 Lambda^4"
    terms = [ExpansionTerm(n, lead_coef, lead_coef * Lambda**n, label)]
    for k in range(n - 1, 0, -1):
        if keep_zero:
            terms.append(ExpansionTerm(k, 0.0, 0.0, f"f_{k} Lambda^{k} a_{n - k}"))
    const = 0.0 if n == 2 else f.at_zero * zeta_DA_zero(A)
    if const != 0.0 or keep_zero:
        terms.append(ExpansionTerm(0, const, const, "-(4 pi^2/3) f(0) tau(F F)"))
    return terms


# ---------------------------------------------------------------------------
# gamma matrices

_PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


@dataclass(frozen=True, eq=False)
class GammaAlgebra:
    """Hermitian Euclidean gamma matrices of size 2^{d/2} and the chirality."""

    dimension: int
    gammas: tuple[np.ndarray, ...]
    chirality: np.ndarray

    def __post_init__(self):
        d = self.dimension
        size = 2 ** (d // 2)
        eye = np.eye(size)
        for i, gi in enumerate(self.gammas):
            if not np.allclose(gi, gi.conj().T, atol=0):
                raise AssertionError("gamma matrices must be hermitian")
            for j, gj in enumerate(self.gammas):
                if not np.array_equal(gi @ gj + gj @ gi, 2.0 * (i == j) * eye):
                    raise AssertionError("Clifford relations fail")
        if not np.array_equal(self.chirality @ self.chirality, eye):
            raise AssertionError("chirality must square to one")

    def conjugated(self, unitary: np.ndarray) -> "GammaAlgebra":
        u = np.asarray(unitary)
        conj = tuple(u @ g @ u.conj().T for g in self.gammas)
        # exact relations cannot survive rounding; skip the startup assertion
        obj = object.__new__(GammaAlgebra)
        object.__setattr__(obj, "dimension", self.dimension)
        object.__setattr__(obj, "gammas", conj)
        object.__setattr__(obj, "chirality", u @ self.chirality @ u.conj().T)
        return obj

    def trace_product(self, indices: Sequence[int]) -> complex:
        """tr(gamma^{i1} ... gamma^{ik}) with 0-based indices."""
        m = np.eye(self.gammas[0].shape[0], dtype=complex)
        for i in indices:
            m = m @ self.gammas[i]
        return complex(np.trace(m))


def _chirality(gs: Sequence[np.ndarray]) -> np.ndarray:
    d = len(gs)
    prod = np.eye(gs[0].shape[0], dtype=complex)
    for g in gs:
        prod = prod @ g
    return (-1j) ** (d // 2) * prod


def gamma_algebra(d: int) -> GammaAlgebra:
    """Recursive construction: Pauli pair in d = 2, then
    G^a = g^a x s1, G^{d+1} = chi x s1, G^{d+2} = 1 x s2."""
    if d < 2 or d % 2:
        raise ValueError("dimension must be even and >= 2")
    gs = [_PAULI[0], _PAULI[1]]
    cur = 2
    while cur < d:
        chi = _chirality(gs)
        size = gs[0].shape[0]
        gs = [np.kron(g, _PAULI[0]) for g in gs] + [np.kron(chi, _PAULI[0]), np.kron(np.eye(size), _PAULI[1])]
        cur += 2
    return GammaAlgebra(d, tuple(gs), _chirality(gs))


# ---------------------------------------------------------------------------
# generators


def golden_theta(n: int) -> np.ndarray:
    """2 pi times a block matrix of golden-ratio rotations (blocks phi, 1/phi)."""
    if n not in (2, 4):
        raise ValueError("n must be 2 or 4")
    th = np.zeros((n, n))
    blocks = [GOLDEN, 1 / GOLDEN]
    for b in range(n // 2):
        th[2 * b, 2 * b + 1] = 2 * math.pi * blocks[b]
        th[2 * b + 1, 2 * b] = -2 * math.pi * blocks[b]
    return th


def random_one_form(
    n: int, theta, rng: np.random.Generator, modes: int = 3, radius: int = 2, include_zero: bool = True
) -> OneForm:
    """Anti-hermitian components with a few random modes +-l each."""
    comps = []
    for _ in range(n):
        coeffs: dict[Mode, complex] = {}
        for _ in range(modes):
            l = tuple(int(x) for x in rng.integers(-radius, radius + 1, size=n))
            c = complex(rng.normal(), rng.normal())
            if not any(l):
                if include_zero:
                    coeffs[l] = coeffs.get(l, 0j) + 1j * c.imag
                continue
            neg = tuple(-x for x in l)
            coeffs[l] = coeffs.get(l, 0j) + c
            coeffs[neg] = coeffs.get(neg, 0j) - c.conjugate()
        comps.append(TorusElement(n, theta, coeffs))
    return OneForm(comps)


def load_one_form(path: str) -> OneForm:
    with open(path, encoding="utf-8") as fh:
        return OneForm.from_json(json.load(fh))
