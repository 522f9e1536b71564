"""Partial traces, Cesaro means and Dixmier-trace estimators.

sigma_N = sum_{n<N} mu_n.  A stream is either materialized from torus shells
(run-length encoded, one run per shell) or given by a decreasing function of
n, in which case sums beyond an exact prefix use the integral of mu plus the
first Euler-Maclaurin correction.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate
from scipy.special import expi, gamma

from .lattice import enumerate_shells, spinor_rank
from .zeta import epstein_zeta

# prefix sums of functional streams are kept up to this index
EXACT_PREFIX = 10**7


class StreamRangeError(IndexError):
    """The stream does not determine the requested partial sum exactly."""


class InsufficientNWarning(UserWarning):
    pass


class SingularValueStream:
    """Non-increasing sequence mu_0 >= mu_1 >= ... of singular values."""

    length: int | None = None

    def mu_array(self, count: int) -> np.ndarray:
        raise NotImplementedError

    def partial_trace(self, N: int) -> float:
        raise NotImplementedError

    def prefix_sums(self, N: int) -> np.ndarray:
        """S[j] = sigma_j for 0 <= j <= N."""
        mu = self.mu_array(N)
        out = np.empty(N + 1)
        out[0] = 0.0
        np.cumsum(mu, out=out[1:])
        return out

    def sigma_interp(self, lam: float) -> float:
        """sigma_lambda = sigma_N + (lambda - N) mu_N for lambda in [N, N+1]."""
        if lam < 0:
            raise ValueError("lambda must be non-negative")
        N = int(math.floor(lam))
        return self.partial_trace(N) + (lam - N) * float(self.mu_array(N + 1)[N])

    def scaled(self, c: float) -> "SingularValueStream":
        return _ScaledStream(self, c)


class MaterializedStream(SingularValueStream):
    """Finite run-length encoded stream: value ``values[i]`` repeated ``counts[i]`` times."""

    def __init__(self, values: Sequence[float], counts: Sequence[int] | None = None, complete: bool = True):
        v = np.asarray(values, dtype=float)
        c = np.ones(len(v), dtype=np.int64) if counts is None else np.asarray(counts, dtype=np.int64)
        if len(v) != len(c):
            raise ValueError("values and counts differ in length")
        if np.any(v < 0):
            raise ValueError("singular values must be non-negative")
        if np.any(c < 0):
            raise ValueError("counts must be non-negative")
        order = np.argsort(-v, kind="stable")
        self.values = v[order]
        self.counts = c[order]
        self.offsets = np.concatenate([[0], np.cumsum(self.counts)])
        self.run_sums = np.concatenate([[0.0], np.cumsum(self.values * self.counts)])
        self.length = int(self.offsets[-1])
        # a truncated infinite stream is padded by nothing: sums beyond length are unknown
        self.complete = complete

    @property
    def materialized(self) -> np.ndarray:
        return np.repeat(self.values, self.counts)

    def _check(self, N: int) -> None:
        if N < 0:
            raise StreamRangeError("N must be non-negative")
        if N > self.length and not self.complete:
            raise StreamRangeError(f"N = {N} exceeds the materialized length {self.length}")

    def partial_trace(self, N: int) -> float:
        self._check(N)
        N = min(N, self.length)
        run = int(np.searchsorted(self.offsets, N, side="right")) - 1
        if run >= len(self.values):
            return float(self.run_sums[-1])
        return float(self.run_sums[run] + (N - self.offsets[run]) * self.values[run])

    def mu_array(self, count: int) -> np.ndarray:
        self._check(count)
        if count <= self.length:
            idx = np.searchsorted(self.offsets, np.arange(count), side="right") - 1
            return self.values[idx]
        return np.concatenate([self.materialized, np.zeros(count - self.length)])


class FunctionStream(SingularValueStream):
    """mu_n = fn(n) for a vectorized, non-increasing fn on n >= 0."""

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], exact_prefix: int = EXACT_PREFIX):
        self.fn = fn
        self.exact_prefix = exact_prefix
        self._prefix: np.ndarray | None = None

    def mu_array(self, count: int) -> np.ndarray:
        return np.asarray(self.fn(np.arange(count, dtype=float)), dtype=float)

    def _ensure_prefix(self, N: int) -> np.ndarray:
        if self._prefix is None or len(self._prefix) <= N:
            size = min(self.exact_prefix, max(N, 1024, 2 * (0 if self._prefix is None else len(self._prefix))))
            self._prefix = SingularValueStream.prefix_sums(self, size)
        return self._prefix

    def prefix_sums(self, N: int) -> np.ndarray:
        if N > self.exact_prefix:
            raise StreamRangeError(f"prefix sums are exact only up to {self.exact_prefix}")
        return self._ensure_prefix(N)[: N + 1]

    def partial_trace(self, N: float) -> float:
        if N < 0:
            raise StreamRangeError("N must be non-negative")
        if N <= self.exact_prefix:
            return float(self._ensure_prefix(int(N))[int(N)])
        a = self.exact_prefix
        base = float(self._ensure_prefix(a)[a])

        def integrand(u):
            x = math.exp(u)
            return float(self.fn(np.array([x]))[0]) * x

        tail, _ = integrate.quad(integrand, math.log(a), math.log(N), limit=400, epsabs=0, epsrel=1e-12)
        mu_a = float(self.fn(np.array([float(a)]))[0])
        mu_N = float(self.fn(np.array([float(N)]))[0])
        return base + tail + 0.5 * (mu_a - mu_N)


class _ScaledStream(SingularValueStream):
    def __init__(self, inner: SingularValueStream, c: float):
        if c < 0:
            raise ValueError("scale must be non-negative")
        self.inner, self.c = inner, c
        self.length = inner.length

    def mu_array(self, count):
        return self.c * self.inner.mu_array(count)

    def partial_trace(self, N):
        return self.c * self.inner.partial_trace(N)

    def prefix_sums(self, N):
        return self.c * self.inner.prefix_sums(N)


def partial_trace(sv: SingularValueStream, N: int) -> float:
    return sv.partial_trace(N)


def stream_from_shells(spec, transform: Callable[[np.ndarray], np.ndarray]) -> MaterializedStream:
    """Singular values transform(|k|^2) over the shells, each with its full multiplicity.

    ``transform`` must be non-increasing so that the enumerated shells are the
    largest singular values of the operator.
    """
    vals = np.asarray(transform(spec.norm_sq.astype(float)), dtype=float)
    if np.any(np.diff(vals) > 1e-15 * np.abs(vals[:-1])):
        raise ValueError("transform must be non-increasing in the squared norm")
    return MaterializedStream(vals, spec.multiplicity, complete=False)


def torus_stream(d: int, N_min: int, power: float | None = None, dirac: bool = False) -> MaterializedStream:
    """(1 + Delta)^{-power} on R^d / 2pi Z^d (default power d/2), at least N_min values."""
    p = d / 2 if power is None else power
    rank = spinor_rank(d) if dirac else 1
    ball = math.pi ** (d / 2) / math.gamma(d / 2 + 1)
    M = int(math.ceil((N_min / (rank * ball)) ** (2 / d) * 1.05)) + 4 * d
    while True:
        spec = enumerate_shells(d, M, dirac=dirac)
        sv = stream_from_shells(spec, lambda x: (1.0 + x) ** (-p))
        if sv.length >= N_min:
            return sv
        M = int(M * 1.2) + 1


# ---------------------------------------------------------------------------
# Cesaro mean


def _li(x: np.ndarray) -> np.ndarray:
    return expi(np.log(x))


def cesaro_tau(sv: SingularValueStream, lam: float) -> float:
    """tau_lambda = (1/log lambda) int_e^lambda sigma_rho / log rho  d rho / rho.

    sigma_rho is affine on each [N, N+1], so each piece integrates in closed
    form through log log rho and the logarithmic integral.
    """
    if lam < math.e:
        raise ValueError("lambda must be at least e")
    top = int(math.floor(lam))
    S = sv.prefix_sums(top + 1)
    mu = np.diff(S)
    Ns = np.arange(2, top + 1)
    a = np.maximum(Ns.astype(float), math.e)
    b = np.minimum(Ns + 1.0, lam)
    keep = b > a
    Ns, a, b = Ns[keep], a[keep], b[keep]
    muN = mu[Ns]
    A = S[Ns] - Ns * muN
    pieces = A * (np.log(np.log(b)) - np.log(np.log(a))) + muN * (_li(b) - _li(a))
    return float(math.fsum(pieces) / math.log(lam))


# ---------------------------------------------------------------------------
# estimators


def zeta_residue(d: int, power: float | None = None) -> float:
    """Res_{s=1} sum_n mu_n^s for mu = singular values of (1 + Delta)^{-power} on T^d.

    For power = d/2 this is Res_{s=d} Z_d(s) / d; larger powers are trace class.
    """
    p = d / 2 if power is None else power
    if p > d / 2 + 1e-15:
        return 0.0
    if p < d / 2 - 1e-15:
        raise ValueError("(1 + Delta)^{-p} with p < d/2 is not in the Dixmier ideal")
    return float(epstein_zeta(d, d).residue) / d


def fit_inverse_log(Ns: Sequence[float], values: Sequence[float]) -> tuple[float, float, float]:
    """Least-squares a, b in values ~ a + b / log N; returns (a, b, rms residual)."""
    x = 1.0 / np.log(np.asarray(Ns, dtype=float))
    y = np.asarray(values, dtype=float)
    V = np.stack([np.ones_like(x), x], axis=1)
    (a, b), *_ = np.linalg.lstsq(V, y, rcond=None)
    resid = float(np.sqrt(np.mean((V @ np.array([a, b]) - y) ** 2)))
    return float(a), float(b), resid


@dataclass(frozen=True)
class DixmierEstimate:
    dimension: int
    N_max: int
    cesaro_raw: float
    cesaro_extrapolated: float
    uncertainty: float
    zeta_residue: float
    table: tuple[tuple[int, float, float], ...]

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "N_max": self.N_max,
            "cesaro_raw": self.cesaro_raw,
            "cesaro_extrapolated": self.cesaro_extrapolated,
            "uncertainty": self.uncertainty,
            "zeta_residue": self.zeta_residue,
            "table": [{"N": n, "sigma_N": s, "sigma_over_log": v} for n, s, v in self.table],
        }


def default_ladder(N_max: int) -> list[int]:
    ladder = sorted({int(N_max // 10**j) for j in range(4)})
    return [n for n in ladder if n >= 10]


def dixmier_estimate(d: int, N_max: int, ladder: Sequence[int] | None = None, power: float | None = None) -> DixmierEstimate:
    """Cesaro estimate (1/log N) sigma_N with a + b/log N extrapolation, plus the zeta-residue value."""
    if d not in (2, 4):
        raise ValueError("dimension must be 2 or 4")
    if N_max < 10**4:
        warnings.warn(f"N = {N_max} is small for log-rate convergence", InsufficientNWarning)
    ladder = sorted(set(default_ladder(N_max) if ladder is None else ladder) | {N_max})
    sv = torus_stream(d, max(ladder), power)
    rows = []
    for N in ladder:
        s = sv.partial_trace(N)
        rows.append((int(N), s, s / math.log(N)))
    Ns = [r[0] for r in rows]
    vals = [r[2] for r in rows]
    raw = vals[-1]
    if len(rows) >= 2:
        a, _, resid = fit_inverse_log(Ns, vals)
        if len(rows) >= 3:
            a2, _, _ = fit_inverse_log(Ns[1:], vals[1:])
            unc = max(abs(a - a2), resid)
        else:
            unc = abs(a - raw)
    else:
        a, unc = raw, float("inf")
    return DixmierEstimate(d, int(N_max), raw, a, unc, zeta_residue(d, power), tuple(rows))


# ---------------------------------------------------------------------------
# measurability


@dataclass(frozen=True)
class MeasurabilityReport:
    verdict: str
    limit: float | None
    ladder: tuple[float, ...]
    means: tuple[float, ...]
    cauchy_variation: float
    sign_changes: int
    fit_residual: float

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "limit": self.limit,
            "ladder": list(self.ladder),
            "means": list(self.means),
            "cauchy_variation": self.cauchy_variation,
            "sign_changes": self.sign_changes,
            "fit_residual": self.fit_residual,
        }


def measurability_check(
    sv: SingularValueStream, ladder: Sequence[float], fit_tol: float = 1e-3, noise: float = 1e-9
) -> MeasurabilityReport:
    """Diagnose (1/log N) sigma_N along an increasing ladder.

    oscillating: the increments change sign at least twice;
    converging: the sequence fits a + b / log N with relative residual <= fit_tol;
    diverging: otherwise, with monotone growth; inconclusive if none applies.
    """
    Ns = np.asarray(ladder, dtype=float)
    if len(Ns) < 3 or np.any(np.diff(Ns) <= 0) or Ns[0] <= 1:
        raise ValueError("ladder must contain at least three increasing values > 1")
    means = np.array([sv.partial_trace(int(N) if N <= 2**62 else N) / math.log(N) for N in Ns])
    scale = max(1.0, float(np.abs(means).max()))
    inc = np.diff(means)
    signs = np.sign(inc[np.abs(inc) > noise * scale])
    changes = int(np.count_nonzero(signs[1:] != signs[:-1]))
    half = len(means) // 2
    cauchy = float(np.ptp(means[half:]))
    a, b, resid = fit_inverse_log(Ns, means)
    rel = resid / scale
    if changes >= 2:
        verdict, limit = "oscillating", None
    elif rel <= fit_tol:
        verdict, limit = "converging", a
    elif changes == 0 and means[-1] > means[0]:
        verdict, limit = "diverging", None
    else:
        verdict, limit = "inconclusive", None
    return MeasurabilityReport(verdict, limit, tuple(map(float, Ns)), tuple(map(float, means)), cauchy, changes, float(resid))


# ---------------------------------------------------------------------------
# model streams


def harmonic_stream() -> FunctionStream:
    """mu_n = 1/(n+1); sigma_N = H_N ~ log N."""
    return FunctionStream(lambda n: 1.0 / (n + 1.0))


# shift keeping log log defined and the sequence non-increasing
_OSC_SHIFT = 16.0


def oscillating_stream() -> FunctionStream:
    """mu_n = (2 + sin(log log m)) / m with m = n + 16: not measurable."""
    return FunctionStream(lambda n: (2.0 + np.sin(np.log(np.log(n + _OSC_SHIFT)))) / (n + _OSC_SHIFT))


def loglog_ladder(lo: float = 1.0, hi: float = 6.5, points: int = 40) -> list[float]:
    """N = exp(exp(x)) for x evenly spaced: uniform steps in log log N."""
    return [math.exp(math.exp(x)) for x in np.linspace(lo, hi, points)]


def weyl_density_check(d: int, ns: Sequence[int]) -> list[tuple[int, float]]:
    """n * mu_n for (1 + Delta)^{-d/2}, tending to pi^{d/2} / Gamma(d/2 + 1)."""
    sv = torus_stream(d, max(ns) + 1)
    mu = sv.mu_array(max(ns) + 1)
    return [(int(n), float(n * mu[n])) for n in ns]


def limit_constant(d: int) -> float:
    return float(math.pi ** (d / 2) / gamma(d / 2 + 1))
