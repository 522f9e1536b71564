"""Continued fractions, approximation exponents and badly-approximable tests.

Inputs are converted to an exact rational together with an absolute precision
``eps``: a float is the dyadic rational it stores (eps = one ulp), an mpmath
number carries eps = 2^{-prec}|x|, and a ``Fraction`` is exact unless a
precision is declared.  Convergents are only trusted while their error is far
above ``q * eps``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Sequence

import mpmath
import numpy as np

MAX_DEPTH = 60
# trust a convergent only while q*eps stays this far below its error
_TRUST_MARGIN = Fraction(1, 1000)
# anchor for exponent slopes: first trusted denominator at least this large
_ANCHOR_Q = 10**3
# slopes are measured over at least two decades of q
_MIN_SPAN = math.log(100.0)


class PrecisionLossError(ArithmeticError):
    """The available precision cannot resolve the requested expansion depth."""


class RationalInputError(ValueError):
    """The approximation exponent is undefined for a rational number."""


@dataclass(frozen=True)
class Approximand:
    """Exact rational stand-in for a real number, accurate to ``eps``."""

    value: Fraction
    eps: Fraction = Fraction(0)

    @property
    def exact(self) -> bool:
        return self.eps == 0


def as_approximand(x, precision=None) -> Approximand:
    """Convert float / int / Fraction / mpmath.mpf to an ``Approximand``."""
    if isinstance(x, Approximand):
        return x
    if isinstance(x, bool):
        raise TypeError("boolean is not a real number")
    if isinstance(x, int):
        return Approximand(Fraction(x), Fraction(precision or 0))
    if isinstance(x, Fraction):
        return Approximand(x, Fraction(precision or 0))
    if isinstance(x, mpmath.mpf):
        if not mpmath.isfinite(x):
            raise ValueError("value must be finite")
        man, exp = x.man_exp if x != 0 else (0, 0)
        val = Fraction(int(man)) * (Fraction(2) ** int(exp))
        eps = precision if precision is not None else abs(val) * Fraction(1, 2 ** mpmath.mp.prec)
        return Approximand(val, Fraction(eps))
    xf = float(x)
    if not math.isfinite(xf):
        raise ValueError("value must be finite")
    val = Fraction(xf)
    if precision is not None:
        eps = Fraction(precision)
    else:
        eps = Fraction(math.ulp(xf)) if xf != 0 else Fraction(0)
    return Approximand(val, eps)


def _log(x: Fraction) -> float:
    """Natural log of a positive rational of any size."""
    return math.log(x.numerator) - math.log(x.denominator)


@dataclass(frozen=True)
class ContinuedFraction:
    value: Fraction
    partial_quotients: tuple[int, ...]
    convergents: tuple[tuple[int, int], ...]
    terminated: bool
    eps: Fraction = Fraction(0)
    # convergents beyond this index are not resolved by the input precision
    trusted_count: int = field(default=0)

    def errors(self) -> list[Fraction]:
        """|q_k x - p_k| for every convergent, exact in the stored value."""
        return [abs(q * self.value - p) for p, q in self.convergents]

    def as_floats(self) -> list[float]:
        return [p / q for p, q in self.convergents]


def cf_expand(x, depth: int, precision=None, strict: bool = False) -> ContinuedFraction:
    """Partial quotients and convergents of ``x``, at most ``depth`` of each.

    Expansion stops early when the value is exhausted (exact rationals) or when
    a convergent already matches the input within its precision.  With
    ``strict=True`` a precision-limited stop raises ``PrecisionLossError``.
    """
    if depth < 1:
        raise ValueError("depth must be positive")
    if depth > MAX_DEPTH:
        raise ValueError(f"depth must be <= {MAX_DEPTH}")
    ax = as_approximand(x, precision)
    val, eps = ax.value, ax.eps
    quotients: list[int] = []
    convs: list[tuple[int, int]] = []
    p_prev, p = 0, 1
    q_prev, q = 1, 0
    rem = val
    terminated = False
    trusted = 0
    for _ in range(depth):
        a = math.floor(rem)
        quotients.append(a)
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
        convs.append((p, q))
        err = abs(q * val - p)
        if q * eps <= _TRUST_MARGIN * err:
            trusted = len(convs)
        frac = rem - a
        if frac == 0:
            terminated = True
            break
        if eps and err <= 2 * q * eps:
            terminated = True
            if strict:
                raise PrecisionLossError(
                    f"precision exhausted at denominator {q} after {len(quotients)} terms"
                )
            break
        rem = 1 / frac
    if eps == 0:
        trusted = len(convs)
    return ContinuedFraction(val, tuple(quotients), tuple(convs), terminated, eps, trusted)


def _reduce(ax: Approximand) -> Approximand:
    """Distance-to-nearest-integer representative, in [0, 1/2]."""
    frac = ax.value - math.floor(ax.value)
    return Approximand(min(frac, 1 - frac), ax.eps)


def _is_rational(cf: ContinuedFraction) -> bool:
    if not cf.terminated:
        return False
    if cf.eps == 0:
        return True
    q = cf.convergents[-1][1]
    return q**3 * cf.eps <= 1


def approx_exponent(x, depth: int = 40, precision=None) -> float:
    """Estimate the smallest delta with |q x - p| >= c q^{-delta} along convergents.

    The estimate is the largest slope of -log|q_k x - p_k| against log q_k,
    measured from an anchor convergent with q >= 1000 over at least two
    decades.  Badly approximable numbers give about 1; the value is invariant
    under x -> x + m and x -> -x.
    """
    ax = _reduce(as_approximand(x, precision))
    if ax.value == 0:
        raise RationalInputError("approximation exponent is undefined for rationals")
    cf = cf_expand(ax, depth)
    if _is_rational(cf):
        raise RationalInputError("approximation exponent is undefined for rationals")
    pts = []
    for (p, q), err in zip(cf.convergents[: cf.trusted_count], cf.errors()[: cf.trusted_count]):
        if err > 0 and q > 1:
            pts.append((math.log(q), -_log(err)))
    anchor = next((i for i, (X, _) in enumerate(pts) if X >= math.log(_ANCHOR_Q)), None)
    if anchor is None:
        raise PrecisionLossError("no trusted convergent with denominator >= 1000")
    X0, y0 = pts[anchor]
    slopes = [(y - y0) / (X - X0) for X, y in pts[anchor + 1 :] if X - X0 >= _MIN_SPAN]
    if not slopes:
        raise PrecisionLossError("trusted convergents span less than two decades past the anchor")
    return max(slopes)


# ---------------------------------------------------------------------------
# matrices


class Verdict(str, enum.Enum):
    YES = "YES"
    NO_EVIDENCE = "NO_EVIDENCE"
    RATIONAL = "RATIONAL"


@dataclass(frozen=True)
class MatrixVerdict:
    verdict: Verdict
    witness: tuple[int, ...] | None
    depth: int
    integral: bool = False
    exponents: tuple[float | None, ...] = ()

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "witness": list(self.witness) if self.witness is not None else None,
            "depth": self.depth,
            "integral": self.integral,
            "exponents": list(self.exponents),
        }


def _matrix_over_2pi(theta, theta_over_2pi, precision) -> list[list[Approximand]]:
    if theta_over_2pi is not None:
        rows = [[as_approximand(v, precision) for v in row] for row in theta_over_2pi]
    else:
        arr = np.asarray(theta, dtype=float)
        rows = []
        for row in arr:
            out = []
            for v in row:
                w = float(v) / (2 * math.pi)
                # division by a rounded 2*pi adds a few ulps
                out.append(Approximand(Fraction(w), Fraction(4 * math.ulp(w)) if w else Fraction(0)))
            rows.append(out)
    n = len(rows)
    if n not in (2, 4) or any(len(r) != n for r in rows):
        raise ValueError("theta must be a square matrix of size 2 or 4")
    for i in range(n):
        for j in range(n):
            a, b = rows[i][j], rows[j][i]
            if abs(a.value + b.value) > 8 * (a.eps + b.eps) + Fraction(1, 10**12) * (abs(a.value) + 1):
                raise ValueError("theta must be skew-symmetric")
    return rows


def _entry_rational(ax: Approximand) -> bool:
    if ax.value == int(ax.value) and ax.value.denominator == 1:
        return True
    cf = cf_expand(ax, MAX_DEPTH)
    if ax.eps == 0:
        return cf.terminated and cf.convergents[-1][1] == cf.value.denominator
    for p, q in cf.convergents:
        if q**3 * ax.eps > 1:
            return False
        if abs(q * ax.value - p) <= 16 * q * ax.eps:
            return True
    return False


def _entry_integer(ax: Approximand) -> bool:
    nearest = round(ax.value)
    return abs(ax.value - nearest) <= 16 * ax.eps


def matrix_badly_approximable(
    theta=None,
    depth: int = 10,
    tol: float = 0.25,
    theta_over_2pi: Sequence[Sequence] | None = None,
    precision=None,
    cf_depth: int = 40,
) -> MatrixVerdict:
    """Search integer u with |u|_inf <= depth for which every irrational entry
    of transpose(theta) u / 2pi has approximation exponent <= 1 + tol.

    Entries are tested on theta / 2pi.  Either pass the float matrix ``theta``
    or the exact matrix ``theta_over_2pi`` (optionally with ``precision``).
    """
    if depth < 1:
        raise ValueError("depth must be positive")
    M = _matrix_over_2pi(theta, theta_over_2pi, precision)
    n = len(M)
    flat = [a for row in M for a in row]
    if all(_entry_rational(a) for a in flat):
        integral = all(_entry_integer(a) for a in flat)
        return MatrixVerdict(Verdict.RATIONAL, None, depth, integral)

    cache: dict[tuple[Fraction, Fraction], float | None] = {}

    def exponent(ax: Approximand) -> float | None:
        key = _reduce(ax)
        k = (key.value, key.eps)
        if k not in cache:
            if _entry_rational(ax):
                cache[k] = None
            else:
                try:
                    cache[k] = approx_exponent(key, cf_depth)
                except (RationalInputError, PrecisionLossError):
                    cache[k] = math.inf
        return cache[k]

    boxes = sorted(
        (u for u in product(range(-depth, depth + 1), repeat=n) if any(u)),
        key=lambda u: (max(abs(c) for c in u), sum(abs(c) for c in u), tuple(-c for c in u)),
    )
    for u in boxes:
        exps = []
        for i in range(n):
            val = sum((M[j][i].value * u[j] for j in range(n)), Fraction(0))
            eps = sum((M[j][i].eps * abs(u[j]) for j in range(n)), Fraction(0))
            exps.append(exponent(Approximand(val, eps)))
        irr = [e for e in exps if e is not None]
        if irr and all(e <= 1 + tol for e in irr):
            return MatrixVerdict(Verdict.YES, tuple(u), depth, False, tuple(exps))
    return MatrixVerdict(Verdict.NO_EVIDENCE, None, depth)


def liouville_partial_sum(terms: int) -> Approximand:
    """sum_{k=1}^{terms} 10^{-k!} with the precision of the next omitted term."""
    val = sum((Fraction(1, 10 ** math.factorial(k)) for k in range(1, terms + 1)), Fraction(0))
    return Approximand(val, Fraction(2, 10 ** math.factorial(terms + 1)))
