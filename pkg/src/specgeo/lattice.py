"""Lattice shells of Z^n and the Dirac/Laplace spectra of flat tori R^n / 2piZ^n.

The Laplacian on the torus has eigenfunctions e^{ik.x}, k in Z^n, with eigenvalue
|k|^2.  The Dirac operator squares to the Laplacian tensored with the identity on
spinors, so its spectrum is the same set of shells with an extra multiplicity
2^floor(n/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class TailBoundError(ArithmeticError):
    """Raised when a truncated lattice sum cannot meet the requested tolerance."""


def spinor_rank(n: int) -> int:
    return 2 ** (n // 2)


@dataclass(frozen=True, eq=False)
class ShellSpectrum:
    """Shells ``(norm_sq, lattice_count)`` of Z^n up to ``max_norm_sq``."""

    dimension: int
    norm_sq: np.ndarray
    lattice_count: np.ndarray
    spinor_rank: int
    max_norm_sq: int

    @property
    def shells(self) -> list[tuple[int, int]]:
        return [(int(m), int(c)) for m, c in zip(self.norm_sq, self.lattice_count)]

    @property
    def multiplicity(self) -> np.ndarray:
        """Eigenvalue multiplicity of each shell, spinor factor included."""
        return self.lattice_count * self.spinor_rank

    @property
    def kernel_dimension(self) -> int:
        return self.spinor_rank

    def __len__(self) -> int:
        return len(self.norm_sq)


def representation_counts(n: int, max_norm_sq: int) -> np.ndarray:
    """Array r with r[m] = #{k in Z^n : |k|^2 = m} for 0 <= m <= max_norm_sq.

    Built one coordinate at a time: the box scan over Z^n factorizes because
    |k|^2 is a sum of per-coordinate squares.
    """
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    if max_norm_sq < 0:
        raise ValueError(f"max_norm_sq must be >= 0, got {max_norm_sq}")
    M = int(max_norm_sq)
    kmax = math.isqrt(M)
    squares = np.arange(kmax + 1, dtype=np.int64) ** 2
    one_d = np.zeros(M + 1, dtype=np.int64)
    one_d[0] = 1
    one_d[squares[1:]] = 2
    counts = one_d.copy()
    for _ in range(n - 1):
        nxt = counts.copy()
        for k in range(1, kmax + 1):
            sq = int(squares[k])
            nxt[sq:] += 2 * counts[: M + 1 - sq]
        counts = nxt
    return counts


def enumerate_shells(n: int, max_norm_sq: int, dirac: bool = False) -> ShellSpectrum:
    """All nonempty shells of Z^n with |k|^2 <= max_norm_sq, in ascending order.

    With ``dirac=True`` the shells carry the spinor multiplicity 2^floor(n/2).
    """
    counts = representation_counts(n, max_norm_sq)
    (idx,) = np.nonzero(counts)
    return ShellSpectrum(
        dimension=n,
        norm_sq=idx.astype(np.int64),
        lattice_count=counts[idx],
        spinor_rank=spinor_rank(n) if dirac else 1,
        max_norm_sq=int(max_norm_sq),
    )


def _floor_sq(lam: float) -> int:
    # lam^2 can land a hair below an integer (e.g. sqrt(2)**2)
    x = lam * lam
    return math.floor(x * (1.0 + 1e-12) + 1e-12)


def counting_function(spec: ShellSpectrum, lam: float) -> int:
    """Number of eigenvalues of |D| (or sqrt(Laplacian)) that are <= lam, kernel included."""
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    limit = _floor_sq(lam)
    if limit > spec.max_norm_sq:
        raise ValueError(
            f"lambda^2 = {lam * lam:g} exceeds enumerated range max_norm_sq = {spec.max_norm_sq}"
        )
    mask = spec.norm_sq <= limit
    return int(spec.lattice_count[mask].sum()) * spec.spinor_rank


def theta_1d(t: float) -> float:
    """sum_{k in Z} exp(-t k^2), using the Poisson-dual series when t is small."""
    if t <= 0:
        raise ValueError("t must be positive")
    if t >= 1.0:
        kmax = int(math.sqrt(40.0 / t)) + 2
        k = np.arange(1, kmax + 1)
        return float(1.0 + 2.0 * np.sum(np.exp(-t * k * k)))
    kmax = int(math.sqrt(40.0 * t) / math.pi) + 2
    m = np.arange(1, kmax + 1)
    return float(math.sqrt(math.pi / t) * (1.0 + 2.0 * np.sum(np.exp(-(math.pi**2) * m * m / t))))


@dataclass(frozen=True)
class HeatTraceValue:
    value: float
    rel_tail_bound: float

    def __float__(self) -> float:
        return self.value


def heat_trace(
    spec: ShellSpectrum, t: float, shift: float = 0.0, tol: float = 1e-12
) -> HeatTraceValue:
    """spinor_rank * sum_k exp(-t(|k|^2 + shift)) over the enumerated shells.

    The neglected part (|k|^2 > max_norm_sq) is bounded via the box
    |k|_inf > sqrt(M/n) and the Gaussian integral; fails if the relative
    bound exceeds ``tol``.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if shift < 0:
        raise ValueError("shift must be non-negative")
    n = spec.dimension
    weights = np.exp(-t * spec.norm_sq.astype(float))
    value = float(np.dot(spec.lattice_count.astype(float), weights))
    J = math.isqrt(spec.max_norm_sq // n)
    one_d_tail = 0.5 * math.sqrt(math.pi / t) * math.erfc(J * math.sqrt(t))
    tail = n * theta_1d(t) ** (n - 1) * 2.0 * one_d_tail
    rel = tail / value
    if rel > tol:
        raise TailBoundError(
            f"truncation at max_norm_sq={spec.max_norm_sq} leaves relative tail {rel:.3e} > {tol:.1e}"
        )
    return HeatTraceValue(spec.spinor_rank * value * math.exp(-t * shift), rel)


def heat_trace_product(n: int, t: float, shift: float = 0.0, dirac: bool = False) -> float:
    """Closed product form spinor_rank * theta_1d(t)^n * exp(-t shift)."""
    rank = spinor_rank(n) if dirac else 1
    return rank * theta_1d(t) ** n * math.exp(-t * shift)


def shells_for_tolerance(n: int, t: float, tol: float = 1e-13, dirac: bool = False) -> ShellSpectrum:
    """Smallest convenient shell enumeration whose heat-trace tail at t is below tol."""
    M = max(4 * n, int(math.ceil((math.log(1.0 / tol) + 10.0) / t)))
    while True:
        J = math.isqrt(M // n)
        if math.erfc(J * math.sqrt(t)) * math.sqrt(math.pi / t) * n * theta_1d(t) ** (n - 1) < 0.1 * tol * theta_1d(t) ** n:
            return enumerate_shells(n, M, dirac=dirac)
        M = int(M * 1.3) + 1
