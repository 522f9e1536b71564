"""Lattice zeta functions with their meromorphic continuation.

* ``epstein_zeta``: Z_n(s) = sum' |k|^{-s} over Z^n.
* ``poly_zeta``: sum' k^p |k|^{-s} for a monomial k^p = k_1^{p_1}...k_n^{p_n}.
* ``twisted_zeta_1d``: sum' e^{2 pi i k a} |k|^{-s} over Z, entire for a not in Z.

Continuation uses the Mellin transform of a lattice theta series split at t = 1.
For the Epstein case the completed function is

    pi^{-s/2} Gamma(s/2) Z_n(s) = -2/s - 2/(n-s)
        + sum' [ Gamma(s/2, pi|k|^2) (pi|k|^2)^{-s/2}
                 + Gamma((n-s)/2, pi|k|^2) (pi|k|^2)^{-(n-s)/2} ],

which is the integral over t in [1, inf) of (theta_n(t) - 1)(t^{s/2} + t^{(n-s)/2}) dt/t
evaluated shell by shell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath

from .lattice import representation_counts

_DPS = 30
# pi*m >= 80 puts every neglected theta term below e^{-80}
_SHELL_CUTOFF = 26


@dataclass(frozen=True)
class MeroValue:
    """Laurent data of a zeta-type function at a point (poles are at most simple)."""

    at_point: complex
    finite_part: complex
    pole_order: int = 0
    residue: complex = 0.0

    def __post_init__(self):
        if self.pole_order not in (0, 1):
            raise ValueError("only simple poles occur")
        if self.pole_order == 0 and self.residue != 0:
            raise ValueError("residue must vanish without a pole")

    @property
    def value(self) -> complex:
        if self.pole_order:
            raise ArithmeticError(f"pole at s = {self.at_point}")
        return self.finite_part

    def to_dict(self) -> dict:
        return {
            "at_point": self.at_point,
            "finite_part": self.finite_part,
            "pole_order": self.pole_order,
            "residue": self.residue,
        }


def _c(x) -> complex:
    z = complex(x)
    return z


def _real_if_close(z: complex, scale: float = 1.0) -> complex | float:
    if abs(z.imag) <= 1e-15 * max(1.0, abs(z.real), scale):
        return z.real
    return z


def _check_dim(n: int) -> None:
    if not 1 <= n <= 4:
        raise ValueError(f"lattice dimension must be in 1..4, got {n}")


@lru_cache(maxsize=None)
def _shells(n: int) -> tuple[tuple[int, int], ...]:
    r = representation_counts(n, _SHELL_CUTOFF)
    return tuple((m, int(r[m])) for m in range(1, _SHELL_CUTOFF + 1) if r[m])


def _is_close(s: complex, target: float, tol: float = 1e-12) -> bool:
    return abs(s - target) <= tol * max(1.0, abs(target))


def epstein_residue(n: int) -> float:
    """Residue of Z_n at its only pole s = n: the area 2 pi^{n/2} / Gamma(n/2) of S^{n-1}."""
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def _epstein_regular(n: int, s) -> mpmath.mpc:
    """Completed function minus its two polar terms -2/s + 2/(s-n)."""
    total = mpmath.mpf(0)
    sp = s / 2
    sq = (n - s) / 2
    for m, count in _shells(n):
        x = mpmath.pi * m
        total += count * (mpmath.gammainc(sp, x) * x ** (-sp) + mpmath.gammainc(sq, x) * x ** (-sq))
    return total


def epstein_zeta(n: int, s: complex) -> MeroValue:
    """Z_n(s) = sum over nonzero k in Z^n of |k|^{-s}, continued to all s.

    At s = n the pole is reported with its residue and the constant term of
    the Laurent expansion.
    """
    _check_dim(n)
    s = complex(s)
    with mpmath.workdps(_DPS):
        if s == 0:
            return MeroValue(0j, -1.0)
        if _is_close(s, n):
            # Z = g(s) * Lambda(s), g = pi^{s/2}/Gamma(s/2), Lambda = 2/(s-n) + R(s)
            sn = mpmath.mpf(n)
            g = mpmath.pi ** (sn / 2) * mpmath.rgamma(sn / 2)
            dg = g * (mpmath.log(mpmath.pi) - mpmath.digamma(sn / 2)) / 2
            R = -2 / sn + _epstein_regular(n, sn)
            finite = 2 * dg + g * R
            return MeroValue(complex(n), _real_if_close(_c(finite)), 1, epstein_residue(n))
        sm = mpmath.mpc(s.real, s.imag)
        lam = -2 / sm + 2 / (sm - n) + _epstein_regular(n, sm)
        val = mpmath.pi ** (sm / 2) * mpmath.rgamma(sm / 2) * lam
        return MeroValue(s, _real_if_close(_c(val)))


def completed_epstein(n: int, s: complex) -> complex:
    """pi^{-s/2} Gamma(s/2) Z_n(s); symmetric under s -> n - s."""
    _check_dim(n)
    with mpmath.workdps(_DPS):
        sm = mpmath.mpc(complex(s).real, complex(s).imag)
        return _c(-2 / sm + 2 / (sm - n) + _epstein_regular(n, sm))


# ---------------------------------------------------------------------------
# monomial-weighted lattice zetas


def sphere_monomial_integral(n: int, p) -> float:
    """Integral of u_1^{p_1}...u_n^{p_n} over the unit sphere S^{n-1}."""
    p = tuple(int(x) for x in p)
    if n < 1 or len(p) != n:
        raise ValueError("exponent length must equal the dimension")
    if any(x < 0 for x in p):
        raise ValueError("exponents must be non-negative")
    if any(x % 2 for x in p):
        return 0.0
    num = 1.0
    for x in p:
        num *= math.gamma((x + 1) / 2)
    return 2.0 * num / math.gamma((n + sum(p)) / 2)


def poly_zeta_residue(n: int, p) -> float:
    """Residue of the monomial zeta at its pole s = n + |p|_1 (zero if any p_i is odd)."""
    return sphere_monomial_integral(n, p)


def _theta_moment_direct(p: int, t):
    """sum_{k in Z} k^p exp(-pi t k^2), direct summation (t >= 1 regime)."""
    kmax = int(math.sqrt(60.0 / float(t))) + 3
    if p == 0:
        total = mpmath.mpf(1)
    else:
        total = mpmath.mpf(0)
    for k in range(1, kmax + 1):
        total += 2 * mpmath.mpf(k) ** p * mpmath.exp(-mpmath.pi * t * k * k)
    return total


def _gauss_moment_inv(p: int, u):
    """Continuous moment int x^p exp(-pi x^2 / u) dx, as a function of u = 1/t."""
    return mpmath.gamma(mpmath.mpf(p + 1) / 2) * (u / mpmath.pi) ** (mpmath.mpf(p + 1) / 2)


def _poisson_remainder_inv(p: int, u):
    """theta-moment minus its continuous moment at t = 1/u, via Poisson summation.

    FT of x^p e^{-pi t x^2} at frequency m is
    (-1)^{p/2} (2pi)^{-p} (pi/t)^{p/2} t^{-1/2} H_p(m sqrt(pi/t)) e^{-pi m^2/t}.
    """
    total = mpmath.mpf(0)
    mmax = int(math.sqrt(60.0 / float(u))) + 3
    pref = (-1) ** (p // 2) * (2 * mpmath.pi) ** (-p) * (mpmath.pi * u) ** (mpmath.mpf(p) / 2) * mpmath.sqrt(u)
    for m in range(1, mmax + 1):
        y = m * mpmath.sqrt(mpmath.pi * u)
        total += 2 * mpmath.hermite(p, y) * mpmath.exp(-mpmath.pi * m * m * u)
    return pref * total


def _prod(xs):
    out = mpmath.mpf(1)
    for x in xs:
        out *= x
    return out


def _poly_regular(p: tuple[int, ...], s) -> mpmath.mpc:
    """Completed monomial zeta minus its polar term; entire in s."""

    def large_t(t):
        return _prod(_theta_moment_direct(pi, t) for pi in p) * t ** (s / 2 - 1)

    def small_t(u):
        full = _prod(_gauss_moment_inv(pi, u) + _poisson_remainder_inv(pi, u) for pi in p)
        smooth = _prod(_gauss_moment_inv(pi, u) for pi in p)
        return (full - smooth) * u ** (-s / 2 - 1)

    return mpmath.quad(large_t, [1, 4, 16, mpmath.inf]) + mpmath.quad(small_t, [1, 4, 16, mpmath.inf])


def poly_zeta(n: int, p, s: complex) -> MeroValue:
    """sum over nonzero k in Z^n of k^p |k|^{-s}, continued to all s.

    Zero identically when any exponent is odd; otherwise a single simple pole
    at s = n + |p|_1 whose residue is the sphere integral of u^p.
    """
    _check_dim(n)
    p = tuple(int(x) for x in p)
    if len(p) != n:
        raise ValueError("exponent length must equal the dimension")
    if any(x < 0 for x in p):
        raise ValueError("exponents must be non-negative")
    if sum(p) > 8:
        raise ValueError("|p|_1 must be <= 8")
    s = complex(s)
    if any(x % 2 for x in p):
        return MeroValue(s, 0.0)
    if sum(p) == 0:
        return epstein_zeta(n, s)
    P = n + sum(p)
    C = 1.0
    for x in p:
        C *= math.gamma((x + 1) / 2)
    with mpmath.workdps(20):
        if _is_close(s, P):
            sP = mpmath.mpf(P)
            g = mpmath.pi ** (sP / 2) * mpmath.rgamma(sP / 2)
            dg = g * (mpmath.log(mpmath.pi) - mpmath.digamma(sP / 2)) / 2
            polar = 2 * C * mpmath.pi ** (-sP / 2)
            finite = dg * polar + g * _poly_regular(p, sP)
            return MeroValue(complex(P), _real_if_close(_c(finite)), 1, poly_zeta_residue(n, p))
        sm = mpmath.mpc(s.real, s.imag)
        bracket = 2 * C * mpmath.pi ** (-mpmath.mpf(P) / 2) / (sm - P) + _poly_regular(p, sm)
        val = mpmath.pi ** (sm / 2) * mpmath.rgamma(sm / 2) * bracket
        return MeroValue(s, _real_if_close(_c(val)))


# ---------------------------------------------------------------------------
# twisted series in one dimension


def _periodic_pair(a, s):
    """sum_{k>=1} 2 cos(2 pi k a) k^{-s} for 0 < a < 1 via Hurwitz zeta reflection."""
    return (
        2
        * mpmath.gamma(1 - s)
        * (2 * mpmath.pi) ** (s - 1)
        * mpmath.cospi((1 - s) / 2)
        * (mpmath.zeta(1 - s, a) + mpmath.zeta(1 - s, 1 - a))
    )


def twisted_zeta_1d(a: float, s: complex) -> MeroValue:
    """f_a(s) = sum over nonzero k in Z of e^{2 pi i k a} |k|^{-s}.

    Entire in s for a not in Z; for integer a this is 2 zeta(s) and the call is
    delegated to ``epstein_zeta(1, s)``.
    """
    s = complex(s)
    frac = a - math.floor(a)
    if frac < 1e-15 or frac > 1 - 1e-15:
        return epstein_zeta(1, s)
    with mpmath.workdps(40):
        am = mpmath.mpf(frac)
        sm = mpmath.mpc(s.real, s.imag)
        nearest = round(s.real)
        if nearest >= 0 and abs(s - nearest) < 1e-6:
            # removable 0 * inf in the reflection formula: average symmetric offsets
            h = mpmath.mpf("1e-12")
            val = (_periodic_pair(am, sm + h) + _periodic_pair(am, sm - h)) / 2
        else:
            val = _periodic_pair(am, sm)
        return MeroValue(s, _real_if_close(_c(val)))


def product_residue_check(d1: int, d2: int) -> tuple[float, float]:
    """Residue of Z_{d1+d2} at d1+d2 versus the tensor-product formula built from Z_{d1}, Z_{d2}."""
    _check_dim(d1)
    _check_dim(d2)
    d = d1 + d2
    lhs = epstein_zeta(d, d).residue if d <= 4 else epstein_residue(d)
    rhs = (
        0.5
        * math.gamma(d1 / 2)
        * math.gamma(d2 / 2)
        / math.gamma(d / 2)
        * epstein_zeta(d1, d1).residue
        * epstein_zeta(d2, d2).residue
    )
    return float(lhs.real if isinstance(lhs, complex) else lhs), float(
        rhs.real if isinstance(rhs, complex) else rhs
    )
