import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specgeo.action import (
    CutoffFunction,
    TruncationError,
    action_direct,
    action_expansion,
    expansion_total,
    expansion_vs_direct,
    heat_coefficients_from_residues,
    torus_dirac_heat_coefficients,
)
from specgeo.heat import fit_heat_coefficients, torus_trace_samples
from specgeo.lattice import counting_function, enumerate_shells, heat_trace, shells_for_tolerance

SHARP = CutoffFunction.sharp()
EXP = CutoffFunction.exponential()


@pytest.fixture(scope="module")
def dirac2():
    return enumerate_shells(2, 200**2 + 1, dirac=True)


def test_sharp_action_examples(dirac2):
    assert action_direct(dirac2, SHARP, 1.0) == 10
    assert action_direct(dirac2, SHARP, 0.5) == 2
    assert action_direct(dirac2, SHARP, 1e-3) == dirac2.kernel_dimension
    for L in (3.7, 20.0, 150.0):
        assert action_direct(dirac2, SHARP, L) == counting_function(dirac2, L)


def test_exp_action_is_heat_trace():
    spec = shells_for_tolerance(2, 0.01, dirac=True)
    for L in (2.0, 10.0):
        assert action_direct(spec, EXP, L) == heat_trace(spec, 1 / L**2).value


def test_truncation_error():
    with pytest.raises(TruncationError):
        action_direct(enumerate_shells(2, 10), SHARP, 10.0)
    with pytest.raises(ValueError):
        action_direct(enumerate_shells(2, 10), SHARP, 0.0)


@pytest.mark.parametrize("k", range(1, 9))
def test_sharp_moments_closed_form_vs_quadrature(k):
    assert abs(SHARP.moment(k) - 1 / math.gamma(k / 2 + 1)) < 1e-15
    assert abs(SHARP.moment_numeric(k) - SHARP.moment(k)) <= 1e-12


@pytest.mark.parametrize("k", range(1, 9))
def test_exp_moments(k):
    assert EXP.moment(k) == 1.0
    assert abs(EXP.moment_numeric(k) - 1.0) <= 1e-12


def test_tabulated_cutoff():
    f = CutoffFunction.tabulated([0, 1, 2], [1, 1, 0])
    # int_0^1 1 ds + int_1^2 (2 - s) ds = 1.5 for k = 2
    assert f.moment(2) == pytest.approx(1.5, rel=1e-12)
    assert f.at_zero == 1.0 and f.support_end == 2.0
    with pytest.raises(ValueError):
        CutoffFunction.tabulated([0, 1], [0.5, 1.0])
    with pytest.raises(ValueError):
        CutoffFunction("gauss")


def test_leading_term_matches_weyl_fit(dirac2):
    coeffs = torus_dirac_heat_coefficients(2)
    lead = action_expansion(coeffs, SHARP, 200.0, 2)[0]
    assert lead.power == 2 and lead.value == pytest.approx(2 * math.pi * 200.0**2, rel=1e-14)
    assert abs(action_direct(dirac2, SHARP, 200.0) / lead.value - 1) <= 0.02


def test_expansion_labels_and_zero_terms():
    terms = action_expansion(torus_dirac_heat_coefficients(4), EXP, 3.0, 4)
    assert [t.power for t in terms] == [4, 3, 2, 1, 0]
    assert terms[0].label == "f_4 Lambda^4 a_0"
    assert terms[1].value == 0 and terms[2].value == 0
    # a_4 = dim Ker + rank * Z_4(0) = 4 - 4
    assert terms[-1].value == pytest.approx(0.0, abs=1e-15)


def test_exp_expansion_gap_tiny():
    spec = shells_for_tolerance(2, 0.01, dirac=True)
    row = expansion_vs_direct(spec, EXP, [10.0])[0]
    assert row.rel_gap <= 1e-8


def test_sharp_averaged_gap_shrinks(dirac2):
    rows = expansion_vs_direct(dirac2, SHARP, [50.0, 100.0, 200.0])
    avg = [r.averaged_gap_over_leading for r in rows]
    assert avg[0] > avg[1] > avg[2]
    assert all(r.gap_over_leading < 0.05 for r in rows)


def test_residue_coefficients_match_fit_scalar_two_dim():
    res = torus_dirac_heat_coefficients(2, dirac=False)
    fit = fit_heat_coefficients(torus_trace_samples(2, np.linspace(0.005, 0.02, 40)), 2)
    assert abs(res.a0 - fit.a0) <= 1e-6 * res.a0
    assert abs(res.a2 - fit.a2) <= 1e-6 * res.a0


def test_heat_coefficients_from_residues_validation():
    hc = heat_coefficients_from_residues(2, {2: 2 * math.pi}, -1.0, 1)
    assert hc.a0 == pytest.approx(math.pi) and hc.a2 == 0.0
    with pytest.raises(ValueError):
        heat_coefficients_from_residues(2, {3: 1.0}, 0.0, 1)


@settings(max_examples=15, deadline=None)
@given(st.floats(3.0, 30.0), st.sampled_from([2, 3, 4]))
def test_exp_cutoff_expansion_is_exact_on_tori(L, d):
    # theta_1d(t) = sqrt(pi/t) up to e^{-pi^2/t}: the expansion has no corrections
    spec = shells_for_tolerance(d, 1 / L**2, dirac=True)
    direct = action_direct(spec, EXP, L)
    approx = expansion_total(action_expansion(torus_dirac_heat_coefficients(d), EXP, L, d))
    assert abs(direct - approx) <= 1e-11 * direct
