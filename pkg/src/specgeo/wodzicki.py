"""Wodzicki residue of a classical symbol from its order -d component.

The sphere S^{d-1} is parametrized by nested angles; in the variable
cos(theta_j) the surface weight is (1 - x^2)^{(j-1)/2}, so each polar angle
gets a Gauss-Jacobi rule and the azimuth a trapezoid rule.  This is exact on
polynomials up to the node count, which is what the monomial tests certify.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import roots_jacobi


class QuadratureError(ArithmeticError):
    """Two refinement levels of the sphere rule disagree beyond tolerance."""


class HomogeneityError(ValueError):
    """A symbol failed the degree -d homogeneity spot-check."""


SymbolEval = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SymbolFunction:
    """Order -d homogeneous symbol sigma(x, xi) with values in r x r matrices.

    ``evaluate(x, xi)`` takes a point x of shape (d,) and directions xi of shape
    (m, d) and returns an array of shape (m, r, r).
    """

    dimension: int
    fiber_rank: int
    evaluate: SymbolEval
    x_domain_volume: float = 1.0
    x_dependent: bool = False

    def trace_on(self, x: np.ndarray, xi: np.ndarray) -> np.ndarray:
        vals = np.asarray(self.evaluate(x, xi))
        if vals.shape != (len(xi), self.fiber_rank, self.fiber_rank):
            raise ValueError(f"symbol returned shape {vals.shape}")
        return np.trace(vals, axis1=1, axis2=2)


@lru_cache(maxsize=64)
def sphere_rule(d: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes (m, d) on S^{d-1} and weights exact for polynomials of degree < 2n."""
    if d < 2:
        raise ValueError("sphere rule needs d >= 2")
    m_phi = 2 * n
    phi = 2 * math.pi * np.arange(m_phi) / m_phi
    pts = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    w = np.full(m_phi, 2 * math.pi / m_phi)
    for j in range(1, d - 1):
        # S^{j+1} from S^j: u = (sin t * v, cos t); sin^j t dt = (1 - x^2)^{(j-1)/2} dx
        a = (j - 1) / 2
        x, wx = roots_jacobi(n, a, a)
        s = np.sqrt(1 - x * x)
        pts = np.concatenate(
            [(s[:, None, None] * pts[None, :, :]), np.broadcast_to(x[:, None, None], (n, len(pts), 1))],
            axis=2,
        ).reshape(-1, j + 2)
        w = (wx[:, None] * w[None, :]).reshape(-1)
    return pts, w


def check_homogeneity(sym: SymbolFunction, x=None, samples: int = 100, seed: int = 0, tol: float = 1e-10) -> float:
    """Max over random xi of |sigma(x, 2 xi) - 2^{-d} sigma(x, xi)|, raising above ``tol``."""
    d = sym.dimension
    rng = np.random.default_rng(seed)
    x = np.zeros(d) if x is None else np.asarray(x, dtype=float)
    xi = rng.standard_normal((samples, d))
    xi /= np.linalg.norm(xi, axis=1, keepdims=True)
    xi *= rng.uniform(0.5, 2.0, size=(samples, 1))
    a = np.asarray(sym.evaluate(x, 2 * xi))
    b = np.asarray(sym.evaluate(x, xi)) * 2.0 ** (-d)
    scale = np.maximum(1.0, np.abs(b).max())
    err = float(np.abs(a - b).max() / scale)
    if err > tol:
        raise HomogeneityError(f"symbol is not homogeneous of degree -{d}: deviation {err:.3e}")
    return err


def sphere_integral(fn: Callable[[np.ndarray], np.ndarray], d: int, n: int = 16, tol: float = 1e-10, max_n: int = 256) -> complex:
    """Integral of fn over S^{d-1} with doubling refinement until two levels agree."""
    prev = None
    while n <= max_n:
        pts, w = sphere_rule(d, n)
        val = complex(np.dot(w, fn(pts)))
        if prev is not None and abs(val - prev) <= tol * max(1.0, abs(val)):
            return val
        prev = val
        n *= 2
    raise QuadratureError(f"sphere quadrature did not converge up to {max_n} nodes")


def local_density(sym: SymbolFunction, x=None, tol: float = 1e-10) -> complex:
    """c(x) = (2pi)^{-d} times the sphere integral of tr sigma(x, .)."""
    d = sym.dimension
    if d not in (2, 3, 4):
        raise ValueError("dimension must be 2, 3 or 4")
    x = np.zeros(d) if x is None else np.asarray(x, dtype=float)
    return sphere_integral(lambda pts: sym.trace_on(x, pts), d, tol=tol) / (2 * math.pi) ** d


def wres(sym: SymbolFunction, grid: int = 8, check: bool = True) -> complex:
    """Integral of the residue density over the x-domain.

    Constant symbols use one point; x-dependent ones the trapezoid rule on a
    periodic grid over [0, 2pi)^d (spectrally accurate for smooth periodic x).
    """
    if check:
        check_homogeneity(sym)
    d = sym.dimension
    if not sym.x_dependent:
        return local_density(sym) * sym.x_domain_volume
    axes = [2 * math.pi * np.arange(grid) / grid] * d
    total = 0.0 + 0.0j
    for idx in np.ndindex(*([grid] * d)):
        total += local_density(sym, np.array([axes[k][i] for k, i in enumerate(idx)]))
    return total / grid**d * sym.x_domain_volume


# ---------------------------------------------------------------------------
# named families


def laplacian_symbol(d: int, rank: int = 1) -> SymbolFunction:
    """Principal symbol |xi|^{-d} Id of (1 + Delta)^{-d/2} on R^d / 2pi Z^d."""

    def ev(x, xi):
        nrm = np.linalg.norm(xi, axis=1) ** (-d)
        return nrm[:, None, None] * np.eye(rank)[None, :, :]

    return SymbolFunction(d, rank, ev, (2 * math.pi) ** d)


def monomial_symbol(d: int, p) -> SymbolFunction:
    """xi^p |xi|^{-d-|p|}, homogeneous of degree -d."""
    p = np.asarray(p, dtype=int)
    if len(p) != d:
        raise ValueError("exponent length must equal the dimension")
    tot = int(p.sum())

    def ev(x, xi):
        val = np.prod(xi**p, axis=1) * np.linalg.norm(xi, axis=1) ** (-d - tot)
        return val[:, None, None]

    return SymbolFunction(d, 1, ev, 1.0)


def matrix_symbol(d: int, diag) -> SymbolFunction:
    """diag(c_1, ..., c_r) |xi|^{-d}."""
    D = np.diag(np.asarray(diag, dtype=complex))

    def ev(x, xi):
        return np.linalg.norm(xi, axis=1)[:, None, None] ** (-d) * D[None, :, :]

    return SymbolFunction(d, len(diag), ev, (2 * math.pi) ** d)


def connes_trace_check(d: int, rank: int = 1) -> tuple[float, float]:
    """Dixmier trace of (1 + Delta)^{-d/2} on T^d (zeta-residue estimator) versus WRes / d.

    The (2pi)^{-d} of the density cancels the coordinate volume (2pi)^d of the torus.
    """
    from .dixmier import zeta_residue

    if d not in (2, 4):
        raise ValueError("dimension must be 2 or 4")
    wr = wres(laplacian_symbol(d, rank)).real
    return rank * zeta_residue(d), wr / d


def tabulated_wres(d: int, order: int, values, volume: float = 1.0) -> complex:
    """WRes of a constant symbol given by tr sigma at the nodes of ``sphere_rule(d, order)``.

    ``volume`` is the coordinate volume of the x-domain.
    """
    pts, w = sphere_rule(d, order)
    vals = np.asarray(values, dtype=complex)
    if vals.shape != (len(w),):
        raise ValueError(f"expected {len(w)} values for the order-{order} rule in dimension {d}")
    return complex(np.dot(w, vals)) / (2 * math.pi) ** d * volume
