"""Moyal plane R^{2N} in the oscillator (Wigner) matrix basis.

A function is f = sum c_mn f_mn with f_mn the eigen-transitions of the
harmonic oscillator; in that basis the twisted product is the matrix product
and the basic integrals are

    int f_mn = (2 pi theta)^N delta_mn,   int conj(f_mn) f_kl = (2 pi theta)^N delta_mk delta_nl.

The product convention is x_1 * x_2 = x_1 x_2 + i theta / 2, realized by
f * h (x) = (2 pi)^{-2} int f(x - theta/2 S u) e^{i u.x} h^(u) du with
S = [[0, 1], [-1, 0]] and h^ the Fourier transform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import eval_genlaguerre, eval_hermite, gammaln

S_MATRIX = np.array([[0.0, 1.0], [-1.0, 0.0]])


class TruncationDefectWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class MoyalMatrix:
    """Coefficients c_mn, multi-indices flattened row-major over {0..K}^N."""

    N: int
    theta: float
    K: int
    coeffs: np.ndarray

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be positive")
        if self.theta <= 0:
            raise ValueError("theta must be positive")
        if self.K < 0:
            raise ValueError("cutoff must be non-negative")
        c = np.array(self.coeffs, dtype=complex)
        size = (self.K + 1) ** self.N
        if c.shape != (size, size):
            raise ValueError(f"coefficient matrix must be {size}x{size}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def basis(cls, N: int, theta: float, K: int, m: Sequence[int] | int, n: Sequence[int] | int) -> "MoyalMatrix":
        size = (K + 1) ** N
        c = np.zeros((size, size), dtype=complex)
        c[flat_index(m, K, N), flat_index(n, K, N)] = 1.0
        return cls(N, theta, K, c)

    @classmethod
    def gaussian(cls, N: int, theta: float, K: int) -> "MoyalMatrix":
        """f_00 = 2^N exp(-|x|^2 / theta)."""
        return cls.basis(N, theta, K, 0, 0)

    @classmethod
    def hamiltonian(cls, theta: float, K: int) -> "MoyalMatrix":
        """H = (x_1^2 + x_2^2)/2 = sum theta(m + 1/2) f_mm, truncated (N = 1)."""
        return cls(1, theta, K, np.diag(theta * (np.arange(K + 1) + 0.5)))

    def _compatible(self, other: "MoyalMatrix") -> None:
        if (self.N, self.theta, self.K) != (other.N, other.theta, other.K):
            raise ValueError("Moyal matrices have different N, theta or cutoff")

    def adjoint(self) -> "MoyalMatrix":
        """(f*)_mn = conj(c_nm)."""
        return MoyalMatrix(self.N, self.theta, self.K, self.coeffs.conj().T)

    def scale(self, c: complex) -> "MoyalMatrix":
        return MoyalMatrix(self.N, self.theta, self.K, c * self.coeffs)

    def __add__(self, other: "MoyalMatrix") -> "MoyalMatrix":
        self._compatible(other)
        return MoyalMatrix(self.N, self.theta, self.K, self.coeffs + other.coeffs)

    def __sub__(self, other: "MoyalMatrix") -> "MoyalMatrix":
        return self + other.scale(-1)

    def integral(self) -> complex:
        return (2 * math.pi * self.theta) ** self.N * complex(np.trace(self.coeffs))

    def l2_norm(self) -> float:
        return math.sqrt((2 * math.pi * self.theta) ** self.N) * float(np.linalg.norm(self.coeffs))

    def boundary_weight(self) -> float:
        """Largest coefficient on a multi-index touching the cutoff K."""
        idx = np.array([any(x == self.K for x in multi_index(i, self.K, self.N)) for i in range(len(self.coeffs))])
        if not idx.any():
            return 0.0
        c = np.abs(self.coeffs)
        return float(max(c[idx, :].max(), c[:, idx].max()))

    def __call__(self, x1, x2):
        """Evaluate at points of R^2 (N = 1 only)."""
        if self.N != 1:
            raise ValueError("pointwise evaluation is implemented for N = 1")
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        out = np.zeros(np.broadcast(x1, x2).shape, dtype=complex)
        for m, n in zip(*np.nonzero(self.coeffs)):
            out += self.coeffs[m, n] * basis_function(int(m), int(n), self.theta)(x1, x2)
        return out


def flat_index(m: Sequence[int] | int, K: int, N: int) -> int:
    m = (m,) * N if isinstance(m, (int, np.integer)) and N > 1 and m == 0 else m
    mm = (int(m),) if isinstance(m, (int, np.integer)) else tuple(int(x) for x in m)
    if len(mm) != N or any(not 0 <= x <= K for x in mm):
        raise IndexError(f"multi-index {m} outside {{0..{K}}}^{N}")
    out = 0
    for x in mm:
        out = out * (K + 1) + x
    return out


def multi_index(i: int, K: int, N: int) -> tuple[int, ...]:
    out = []
    for _ in range(N):
        i, r = divmod(i, K + 1)
        out.append(r)
    return tuple(reversed(out))


def basis_function(m: int, n: int, theta: float) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """f_mn on R^2 in polar form; for n >= m

    f_mn = 2 (-1)^m sqrt(m!/n!) (2 r^2/theta)^{(n-m)/2} e^{i(n-m)phi} L_m^{n-m}(2 r^2/theta) e^{-r^2/theta},

    and f_nm = conj(f_mn).
    """
    lo, hi = min(m, n), max(m, n)
    pref = 2.0 * (-1) ** lo * math.exp(0.5 * (gammaln(lo + 1) - gammaln(hi + 1)))

    def fn(x1, x2):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        r2 = x1 * x1 + x2 * x2
        u = 2.0 * r2 / theta
        # (x1 + i x2)^{hi-lo} = r^{hi-lo} e^{i(hi-lo)phi}
        z = ((x1 + 1j * x2) * math.sqrt(2.0 / theta)) ** (hi - lo)
        val = pref * z * eval_genlaguerre(lo, hi - lo, u) * np.exp(-r2 / theta)
        return val if n >= m else np.conj(val)

    return fn


def star(f: MoyalMatrix, g: MoyalMatrix, warn_tol: float = 1e-12) -> MoyalMatrix:
    """(f * g)_ml = sum_n c_mn d_nl; warns when either factor has weight on the cutoff."""
    f._compatible(g)
    defect = max(f.boundary_weight(), g.boundary_weight())
    if defect > warn_tol and f.K > 0:
        import warnings

        warnings.warn(f"coefficients reach the cutoff K={f.K} (max {defect:.2e})", TruncationDefectWarning)
    return MoyalMatrix(f.N, f.theta, f.K, f.coeffs @ g.coeffs)


def moyal_trace_pairing(f: MoyalMatrix, g: MoyalMatrix) -> complex:
    """(pi theta)^{-N} int f * g = 2^N tr(C D)."""
    f._compatible(g)
    return 2**f.N * complex(np.sum(f.coeffs * g.coeffs.T))


def left_mult_norm_bound(f: MoyalMatrix) -> tuple[float, float]:
    """Operator norm of g -> f * g on L^2 (largest singular value) and (2 pi theta)^{-N/2} ||f||_2."""
    op = float(np.linalg.norm(f.coeffs, 2)) if f.coeffs.size else 0.0
    bound = (2 * math.pi * f.theta) ** (-f.N / 2) * f.l2_norm()
    return op, bound


# ---------------------------------------------------------------------------
# quadrature tools (N = 1)


def _grid(step: float, box: float) -> np.ndarray:
    n = int(round(box / step))
    return step * np.arange(-n, n + 1)


def from_function(fn: Callable, theta: float, K: int, step: float = 0.05, box: float | None = None) -> MoyalMatrix:
    """c_mn = (2 pi theta)^{-1} int conj(f_mn) f by the trapezoid rule (N = 1, rapidly decaying f)."""
    box = box if box is not None else 8.0 * math.sqrt(theta * (K + 1))
    g = _grid(step, box)
    X1, X2 = np.meshgrid(g, g, indexing="ij")
    F = fn(X1, X2)
    c = np.zeros((K + 1, K + 1), dtype=complex)
    for m in range(K + 1):
        for n in range(K + 1):
            c[m, n] = np.sum(np.conj(basis_function(m, n, theta)(X1, X2)) * F) * step**2
    return MoyalMatrix(1, theta, K, c / (2 * math.pi * theta))


def fourier_grid(h: Callable, u: np.ndarray, step: float = 0.1, box: float = 10.0) -> np.ndarray:
    """h^(u1, u2) = int h(y) e^{-i u.y} dy on the product grid u x u (separable trapezoid)."""
    y = _grid(step, box)
    Y1, Y2 = np.meshgrid(y, y, indexing="ij")
    H = h(Y1, Y2)
    E = np.exp(-1j * np.outer(u, y))
    return (E @ H @ E.T) * step**2


def star_quadrature(
    f: Callable, h: Callable, theta: float, points: np.ndarray, step: float = 0.2, box: float = 12.0, h_hat=None
) -> np.ndarray:
    """f * h at ``points`` (shape (m, 2)) from the oscillatory integral representation."""
    u = _grid(step, box)
    U1, U2 = np.meshgrid(u, u, indexing="ij")
    Hh = fourier_grid(h, u) if h_hat is None else h_hat(U1, U2)
    # x - theta/2 S u = (x1 - theta/2 u2, x2 + theta/2 u1)
    out = np.empty(len(points), dtype=complex)
    for i, (x1, x2) in enumerate(np.asarray(points, dtype=float)):
        vals = f(x1 - 0.5 * theta * U2, x2 + 0.5 * theta * U1) * np.exp(1j * (U1 * x1 + U2 * x2)) * Hh
        out[i] = vals.sum() * step**2 / (2 * math.pi) ** 2
    return out


def gaussian_derivative(center: Sequence[float], width: float, alpha: Sequence[int]):
    """d^alpha of exp(-|x - center|^2 / width) via Hermite polynomials."""
    a1, a2 = center
    s = math.sqrt(width)

    def fn(x1, x2):
        t1 = (np.asarray(x1) - a1) / s
        t2 = (np.asarray(x2) - a2) / s
        out = np.exp(-(t1 * t1) - t2 * t2)
        out = out * (-1 / s) ** alpha[0] * eval_hermite(alpha[0], t1)
        return out * (-1 / s) ** alpha[1] * eval_hermite(alpha[1], t2)

    return fn


def star_series_gaussians(g1: tuple, g2: tuple, theta: float, order: int, points: np.ndarray) -> np.ndarray:
    """Moyal series sum_{|a|<=order} (i theta/2)^{|a|}/a! d^a f D^a g for Gaussians (center, width).

    D = (d_2, -d_1).  The series is asymptotic for general f, g.
    """
    x1, x2 = np.asarray(points, dtype=float).T
    total = np.zeros(len(x1), dtype=complex)
    for j in range(order + 1):
        for r in range(j + 1):
            # alpha = (r, j - r): d_1^r d_2^{j-r} f times d_2^r (-d_1)^{j-r} g
            coef = (0.5j * theta) ** j / (math.factorial(r) * math.factorial(j - r)) * (-1) ** (j - r)
            df = gaussian_derivative(g1[0], g1[1], (r, j - r))(x1, x2)
            dg = gaussian_derivative(g2[0], g2[1], (j - r, r))(x1, x2)
            total += coef * df * dg
    return total


def hs_product_norm(
    f: MoyalMatrix,
    g_momentum: Callable[[np.ndarray], np.ndarray],
    step: float = 0.25,
    xi_box: float = 7.0,
    box: float | None = None,
) -> tuple[float, float]:
    """Hilbert-Schmidt norm of L_f g(-i grad) from its kernel, and (2 pi)^{-1} ||f||_2 ||g||_2.

    K(x, y) = (2 pi)^{-2} int f(x - theta/2 S xi) g(|xi|) e^{i xi.(x - y)} d xi is tabulated
    in y by FFT over the xi grid for every x on a grid; |K|^2 is summed over both.
    ``xi_box`` must cover the support of g to double precision.
    """
    if f.N != 1:
        raise ValueError("implemented for N = 1")
    theta = f.theta
    xi = _grid(step, xi_box)
    n = len(xi)
    XI1, XI2 = np.meshgrid(xi, xi, indexing="ij")
    G = g_momentum(np.hypot(XI1, XI2))
    gnorm = math.sqrt(float(np.sum(np.abs(G) ** 2)) * step**2)
    rhs = f.l2_norm() * gnorm / (2 * math.pi)
    if gnorm == 0.0:
        return 0.0, rhs
    reach = 0.5 * theta * xi_box
    box = box if box is not None else 6.0 * math.sqrt(theta * (f.K + 1)) + reach
    # f decays on the scale sqrt(theta); trapezoid error ~ exp(-pi^2 theta / (2 hx^2))
    xs = _grid(0.35 * math.sqrt(theta), box)
    hx = xs[1] - xs[0]
    dy = 2 * math.pi / (n * step)
    total = 0.0
    for x1 in xs:
        a = x1 - 0.5 * theta * XI2[None, :, :]
        b = xs[:, None, None] + 0.5 * theta * XI1[None, :, :]
        F = f(np.broadcast_to(a, b.shape), b) * G * np.exp(1j * (XI1 * x1 + XI2 * xs[:, None, None]))
        # K(x, y_j) on the reciprocal y grid
        Ky = np.fft.fft2(F, axes=(1, 2)) * step**2 / (2 * math.pi) ** 2
        total += float(np.sum(np.abs(Ky) ** 2)) * dy**2
    lhs = math.sqrt(total * hx**2)
    return lhs, rhs


# ---------------------------------------------------------------------------
# Dixmier trace


def _h(s: float, N: int, integral: float, eps: float) -> float:
    return (
        (s - 1)
        * 2**N
        * (2 * math.pi) ** (-2 * N)
        * integral
        * math.pi**N
        * math.gamma(N * (s - 1))
        / (math.gamma(N * s) * eps ** (2 * N * (s - 1)))
    )


def moyal_dixmier(f: MoyalMatrix, epsilon: float = 1.0) -> tuple[float, float]:
    """lim_{s -> 1} (s - 1) Tr[(L_f x 1_{2^N}) (-Delta + eps^2)^{-Ns}] and int f / (N! (2 pi)^N).

    The limit uses s - 1 in {0.01, 0.005, 0.0025} with two Richardson steps.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    integral = f.integral()
    if abs(integral.imag) > 1e-12 * max(1.0, abs(integral)):
        raise ValueError("the integral of f must be real")
    I = integral.real
    N = f.N
    h1, h2, h3 = (_h(1 + d, N, I, epsilon) for d in (0.01, 0.005, 0.0025))
    r1 = 2 * h2 - h1
    r2 = 2 * h3 - h2
    limit = (4 * r2 - r1) / 3
    return limit, I / (math.factorial(N) * (2 * math.pi) ** N)
