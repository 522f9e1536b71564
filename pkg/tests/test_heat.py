import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specgeo.heat import (
    ALPHA,
    HeatCoefficients,
    IllConditionedWindowWarning,
    LaplaceTypeData,
    conformal_variation_check,
    fit_heat_coefficients,
    normal_form,
    seeley_dewitt,
    shift_variation_check,
    torus_trace_samples,
)

WINDOW = np.linspace(0.005, 0.02, 40)


def mass_oracle(d, m2, rank=1):
    """Coefficients of (4 pi t)^{-d/2} (2 pi)^d e^{-t m^2}: a_{2j} = (-m^2)^j / j! times a_0."""
    a0 = rank * (4 * math.pi) ** (-d / 2) * (2 * math.pi) ** d
    return a0, -m2 * a0, m2**2 / 2 * a0


def test_alpha_constants():
    assert (ALPHA[3], ALPHA[5], ALPHA[6], ALPHA[7], ALPHA[8], ALPHA[9], ALPHA[10]) == (60, 180, 12, 5, -2, 2, 30)
    assert ALPHA[1] / 6 == 1 and ALPHA[5] / 360 == 0.5


def test_normal_form_examples():
    d = 2
    omega, E = normal_form(LaplaceTypeData.laplacian(d, 1.5, rank=2))
    assert np.allclose(omega, 0) and np.allclose(E, -1.5 * np.eye(2))
    c = np.array([0.3, -0.7])
    A = np.stack([2 * c[m] * np.eye(1) for m in range(d)])
    omega, E = normal_form(LaplaceTypeData(d, np.eye(d), A, np.zeros((1, 1))))
    assert np.allclose(omega[:, 0, 0], c)
    assert np.allclose(E, -np.dot(c, c))
    B = np.diag([0.4, -2.0])
    _, E = normal_form(LaplaceTypeData(d, np.eye(d), np.zeros((d, 2, 2)), B))
    assert np.allclose(E, B)


def test_invalid_data():
    with pytest.raises(ValueError):
        LaplaceTypeData(2, np.array([[1.0, 0.0], [0.0, -1.0]]), np.zeros((2, 1, 1)), np.zeros((1, 1)))
    with pytest.raises(ValueError):
        LaplaceTypeData(2, np.eye(2), np.zeros((3, 1, 1)), np.zeros((1, 1)))


def test_flat_laplacian_two_dim():
    hc = seeley_dewitt(LaplaceTypeData.laplacian(2))
    assert hc.a0 == pytest.approx(math.pi, rel=1e-15)
    assert hc.a2 == 0 and hc.a4 == 0
    assert hc[1] == 0 and hc[3] == 0


@pytest.mark.parametrize("d", [2, 4])
@pytest.mark.parametrize("m2", [0.0, 1.0, 4.0, 0.37])
def test_mass_term_matches_exponential_oracle(d, m2):
    hc = seeley_dewitt(LaplaceTypeData.laplacian(d, m2))
    for got, want in zip((hc.a0, hc.a2, hc.a4), mass_oracle(d, m2)):
        assert abs(got - want) <= 1e-12 * abs(want) + 1e-300


@pytest.mark.parametrize("d", [2, 4])
@pytest.mark.parametrize("m", [0.0, 1.0, 2.0])
def test_fit_recovers_closed_form(d, m):
    samples = torus_trace_samples(d, WINDOW, m * m)
    hc = fit_heat_coefficients(samples, d)
    ref = seeley_dewitt(LaplaceTypeData.laplacian(d, m * m))
    scale = abs(ref.a0)
    for k in (0, 2, 4):
        assert abs(hc[k] - ref[k]) <= 1e-6 * max(abs(ref[k]), scale)


def test_fit_single_term_model():
    samples = [(t, math.pi / t) for t in WINDOW]
    hc = fit_heat_coefficients(samples, 2, k_max=4)
    assert hc.a0 == pytest.approx(math.pi, rel=1e-12)
    assert abs(hc.a2) <= 1e-10 and abs(hc.a4) <= 1e-10


def test_fit_dirac_two_dim():
    hc = fit_heat_coefficients(torus_trace_samples(2, WINDOW, dirac=True), 2)
    assert hc.a0 == pytest.approx(2 * math.pi, rel=1e-8)
    assert abs(hc.a2) < 1e-6


def test_fit_warns_on_ill_conditioned_window():
    ts = np.linspace(0.01, 0.0100001, 20)
    with pytest.warns(IllConditionedWindowWarning):
        fit_heat_coefficients([(t, math.pi / t) for t in ts], 2, k_max=12)


def test_fit_needs_enough_points():
    with pytest.raises(ValueError):
        fit_heat_coefficients([(0.01, 1.0), (0.02, 2.0)], 2, k_max=4)
    with pytest.raises(ValueError):
        fit_heat_coefficients([(0.01, 1.0)] * 10, 2, k_max=3)


def _exact_connection_trace(w1, w2, t, K=70):
    ks = np.arange(-K, K + 1)
    I = np.eye(w1.shape[0])
    second = np.einsum("kab,kbc->kac", 1j * ks[:, None, None] * I + w2, 1j * ks[:, None, None] * I + w2)
    total = 0.0
    for k1 in ks:
        first = (1j * k1 * I + w1) @ (1j * k1 * I + w1)
        total += np.exp(-t * np.linalg.eigvals(-first[None] - second)).sum().real
    return total


def test_curvature_term_against_exact_spectrum():
    # constant non-commuting connection on T^2: Omega = [omega_1, omega_2] != 0
    sx = np.array([[0, 1], [1, 0]], complex)
    sy = np.array([[0, -1j], [1j, 0]])
    w1, w2 = 0.7j * sx, 0.4j * sy
    samples = [(t, _exact_connection_trace(w1, w2, t)) for t in np.linspace(0.01, 0.04, 30)]
    fit = fit_heat_coefficients(samples, 2)
    data = LaplaceTypeData(2, np.eye(2), np.array([2 * w1, 2 * w2]), w1 @ w1 + w2 @ w2)
    ref = seeley_dewitt(data)
    assert abs(fit.a0 - ref.a0) <= 1e-9 * ref.a0
    assert abs(fit.a2) <= 1e-8
    assert abs(fit.a4 - ref.a4) <= 1e-6 * abs(ref.a4)
    assert ref.a4 != 0


@pytest.mark.parametrize("d", [2, 4])
@pytest.mark.parametrize("m2", [0.0, 1.3])
@pytest.mark.parametrize("c", [0.5, -1.2])
def test_conformal_variation(d, m2, c):
    chk = conformal_variation_check(LaplaceTypeData.laplacian(d, m2), c)
    assert chk.ok(rel=1e-6, abs_=1e-10)
    # k = d term vanishes on both sides
    if d == 4:
        assert abs(chk.rhs[2]) == 0 and abs(chk.lhs[2]) < 1e-10


def test_conformal_variation_two_dim_laplacian_value():
    chk = conformal_variation_check(LaplaceTypeData.laplacian(2), 0.8)
    assert chk.lhs[0] == pytest.approx(2 * 0.8 * math.pi, rel=1e-8)


def test_conformal_variation_against_exact_trace_scaling():
    # a_k(lambda P) = lambda^{(k-d)/2} a_k(P) read off fitted exact traces
    d, m2, lam = 2, 1.0, 1.3
    base = fit_heat_coefficients(torus_trace_samples(d, WINDOW * lam, m2), d)
    scaled = fit_heat_coefficients([(t / lam, v) for t, v in torus_trace_samples(d, WINDOW * lam, m2)], d)
    for k in (0, 2, 4):
        assert scaled[k] == pytest.approx(lam ** ((k - d) / 2) * base[k], rel=1e-6)


@pytest.mark.parametrize("d", [2, 4])
@pytest.mark.parametrize("h", [0.7, -2.0])
def test_shift_variation(d, h):
    assert shift_variation_check(LaplaceTypeData.laplacian(d, 0.5), h).ok()


def _random_data(seed, d, r):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(d, d))
    g = X @ X.T + d * np.eye(d)
    A = rng.normal(size=(d, r, r)) + 1j * rng.normal(size=(d, r, r))
    B = rng.normal(size=(r, r))
    return LaplaceTypeData(d, g, A, B + B.T, 1.0 + rng.random())


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([2, 3, 4]), st.integers(1, 3), st.floats(-1.5, 1.5))
def test_variational_identities_random_data(seed, d, r, c):
    data = _random_data(seed, d, r)
    assert conformal_variation_check(data, c).ok(rel=1e-6, abs_=1e-8)
    assert shift_variation_check(data, c).ok(rel=1e-6, abs_=1e-8)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.2, 3.0))
def test_smearing_is_linear_and_odd_entries_vanish(seed, f):
    data = _random_data(seed, 2, 2)
    a, b = seeley_dewitt(data, f), seeley_dewitt(data, 1.0)
    for k in (0, 2, 4):
        assert a[k] == pytest.approx(f * b[k], rel=1e-13, abs=1e-15)
    assert a[1] == a[3] == a[5] == 0


def test_coefficients_dict():
    hc = HeatCoefficients((1.0, 0.0, 2.0), 3.0, 0.1)
    assert hc.to_dict() == {"a0": 1.0, "a2": 2.0, "condition_number": 3.0, "residual": 0.1}
    assert hc[4] == 0.0
