import math

import numpy as np
import pytest

from finitegap.asymptotics import (
    almost_period_scan,
    argmin_agreement,
    build_report,
    closed_form_szego_function,
    frequency_vector,
    nth_root_check,
    point_mass_stability,
    ratio_along_almost_periods,
    sequences_csv,
    szego_function,
    szego_reference_check,
    widom_factors,
)
from finitegap.errors import InsufficientDepthError, PlacementError, UnsupportedError
from finitegap.intervals import CantorSpec, IntervalSet, make_cantor, power_kappas
from finitegap.jacobi import JacobiCoefficients, jacobi_coefficients
from finitegap.measures import arcsine, build_measure, equilibrium_weight, make_sigma0, semicircle
from finitegap.potential import equilibrium

SEG = IntervalSet([(-2.0, 2.0)])
SC = build_measure(SEG, semicircle())
ARC = build_measure(SEG, arcsine())
PREIMAGE = IntervalSet([(-math.sqrt(5.0), -1.0), (1.0, math.sqrt(5.0))])
ASYM = IntervalSet([(-2.0, -1.2), (-0.4, 2.0)])
SYM = IntervalSet([(-2.0, -1.0), (1.0, 2.0)])


@pytest.fixture(scope="module")
def c_sc():
    return jacobi_coefficients(SC, 420)


@pytest.fixture(scope="module")
def c_arc():
    return jacobi_coefficients(ARC, 120)


@pytest.fixture(scope="module")
def eq_seg():
    return equilibrium(SEG)


@pytest.fixture(scope="module")
def preimage_run():
    eq = equilibrium(PREIMAGE)
    c = jacobi_coefficients(build_measure(PREIMAGE, equilibrium_weight()), 150)
    return eq, c


def test_widom_closed_forms(c_sc, c_arc):
    np.testing.assert_allclose(widom_factors(c_sc, 1.0)[:200], 1.0, atol=1e-8)
    W = widom_factors(c_arc, 1.0)
    np.testing.assert_allclose(W[1:100], math.sqrt(2.0), atol=1e-8)


def test_widom_affine_invariance(c_sc):
    m = build_measure(IntervalSet([(0.0, 1.0)]), semicircle())
    c = jacobi_coefficients(m, 60)
    np.testing.assert_allclose(widom_factors(c, 0.25), widom_factors(c_sc, 1.0)[:61], atol=1e-8)


def test_frequency_vector():
    assert frequency_vector(equilibrium(SEG)).omegas == ()
    assert frequency_vector(equilibrium(SYM)).omegas == pytest.approx((0.5,), abs=1e-12)


def test_cantor_generation2_frequency_golden():
    E = make_cantor(CantorSpec(4.0, power_kappas(2), -2.0), 2)
    om = frequency_vector(equilibrium(E)).omegas
    assert om == pytest.approx((0.7015410948919704, 0.5, 0.29845890510802964), abs=1e-10)
    assert om[0] + om[2] == pytest.approx(1.0, abs=1e-12)


def test_single_interval_scan(c_sc):
    diag = almost_period_scan(c_sc, frequency_vector(equilibrium(SEG)), 100, 12)
    assert all(r[1] == 0.0 for r in diag.candidate_periods)
    assert max(r[2] for r in diag.candidate_periods) < 1e-10


def test_preimage_period_two(preimage_run):
    eq, c = preimage_run
    diag = almost_period_scan(c, frequency_vector(eq), 50, 12)
    T2 = diag.candidate_periods[1]
    assert T2[0] == 2 and T2[1] == pytest.approx(0.0, abs=1e-12)
    assert T2[2] < 1e-3 and T2[3] < 1e-3
    assert argmin_agreement(diag)
    # the preimage coefficients alternate between the two roots of a b = 1, a - b = 1
    golden = (math.sqrt(5) - 1) / 2
    assert sorted([c.p[60], c.p[61]]) == pytest.approx([golden, golden + 1], abs=1e-8)


def test_asymmetric_argmin_agreement():
    eq = equilibrium(ASYM)
    c = jacobi_coefficients(build_measure(ASYM, equilibrium_weight()), 150)
    diag = almost_period_scan(c, frequency_vector(eq), 75, 12)
    dists = sorted(r[1] for r in diag.candidate_periods)
    assert dists[1] - dists[0] > 0.05
    assert argmin_agreement(diag)
    assert min(diag.candidate_periods, key=lambda r: r[1])[0] == 11


def test_sigma0_two_interval_period_two_goldens():
    eq = equilibrium(SYM)
    c = jacobi_coefficients(make_sigma0(SYM), 150)
    devs = [almost_period_scan(c, frequency_vector(eq), b, 12).candidate_periods[1][2] for b in (40, 60, 80)]
    # exactly periodic from the start, so there is no decay left to observe
    assert all(d < 1e-12 for d in devs)


def test_scan_needs_depth(c_arc):
    with pytest.raises(InsufficientDepthError):
        almost_period_scan(c_arc, frequency_vector(equilibrium(SEG)), 110, 12)


def test_szego_closed_forms(c_sc, c_arc):
    checks, werr = szego_reference_check(c_sc, SC, [0.5], 30)
    assert checks[0].error < 1e-13
    assert werr < 1e-8
    checks, werr = szego_reference_check(c_arc, ARC, [0.5], 30)
    assert checks[0].error < 1e-13
    assert werr < 1e-8


def test_szego_geometric_decay(c_arc):
    errs = [szego_reference_check(c_arc, ARC, [0.7], n)[0][0].error for n in (10, 15, 20, 25)]
    ratios = [b / a for a, b in zip(errs, errs[1:])]
    assert all(r == pytest.approx(0.7**10, rel=1e-3) for r in ratios)


@pytest.mark.parametrize("kind, measure", [("semicircle", SC), ("arcsine", ARC), ("sigma0", make_sigma0(SEG))])
def test_szego_function_poisson_matches_closed_form(kind, measure):
    for z in [0.0, 0.5, -0.3 + 0.6j]:
        mass = measure.total_mass()
        assert szego_function(measure, z) == pytest.approx(closed_form_szego_function(kind, z, mass), abs=1e-10)


def test_szego_sigma0(c_sc):
    m = make_sigma0(SEG)
    c = jacobi_coefficients(m, 60)
    checks, werr = szego_reference_check(c, m, [0.5, -0.6j], 30)
    assert max(ch.error for ch in checks) < 1e-6
    assert werr < 1e-8


def test_szego_rejects_multiband():
    m = build_measure(SYM, semicircle())
    with pytest.raises(UnsupportedError):
        szego_reference_check(jacobi_coefficients(m, 10), m, [0.5], 5)


def test_nth_root(c_sc, eq_seg):
    assert nth_root_check(c_sc, eq_seg, 3.0, 200) < 0.01
    assert nth_root_check(c_sc, eq_seg, 10.0, 200) < 0.02
    a = math.log((3 + math.sqrt(5)) / 2)
    exact = abs(math.log(abs(math.sinh(201 * a) / math.sinh(a))) / 200 - a)
    assert nth_root_check(c_sc, eq_seg, 3.0, 200) == pytest.approx(exact, abs=1e-10)
    assert nth_root_check(c_sc, eq_seg, 3.0, 400) <= nth_root_check(c_sc, eq_seg, 3.0, 100)


def test_ratio_along_periods(c_sc, eq_seg, preimage_run):
    om = frequency_vector(eq_seg)
    r50 = ratio_along_almost_periods(c_sc, eq_seg, om, 3.0, 50, 3)
    r200 = ratio_along_almost_periods(c_sc, eq_seg, om, 3.0, 200, 3)
    assert r200 < r50 < 1e-10 or r200 <= r50
    eq, c = preimage_run
    assert ratio_along_almost_periods(c, eq, frequency_vector(eq), 3.0, 50, 2) < 1e-2


def test_point_mass_stability():
    dp, dq = point_mass_stability(SC, (3.0, 0.1), 120, 60)
    assert dp < 1e-2 and dq < 1e-2
    assert point_mass_stability(SC, (3.0, 0.0), 120, 60) == (0.0, 0.0)
    with pytest.raises(PlacementError):
        point_mass_stability(SC, (1.0, 0.1), 120, 60)
    tails = [point_mass_stability(SC, (3.0, 0.1), 120, b)[0] for b in (20, 40, 60)]
    assert tails == sorted(tails, reverse=True)


def test_two_interval_gap_mass_golden():
    # the atom moves the coefficients to the other point of the period-2 torus
    s0 = make_sigma0(SYM)
    tails = [point_mass_stability(s0, (0.0, 0.05), 150, b)[0] for b in (40, 60, 80)]
    assert tails == pytest.approx([1.0, 1.0, 1.0], abs=1e-9)
    assert tails == sorted(tails, reverse=True)
    pert = build_measure(SYM, s0.weight, [(0.0, 0.05)])
    c = jacobi_coefficients(pert, 150)
    assert np.max(np.abs(c.p[82:150] - c.p[80:148])) < 1e-10


def test_build_report(c_sc, eq_seg, preimage_run):
    rep = build_report(SC, jacobi_coefficients(SC, 120), eq_seg)
    np.testing.assert_allclose(rep.widom_factors, 1.0, atol=1e-8)
    assert rep.frequency.omegas == ()
    assert max(ch.error for ch in rep.szego_checks) < 1e-10
    eq, c = preimage_run
    rep = build_report(build_measure(PREIMAGE, equilibrium_weight()), c, eq)
    assert rep.frequency.omegas == pytest.approx((0.5,))
    assert rep.diagnostics.candidate_periods[1][0] == 2
    js = rep.to_json()
    assert set(js) == {"widom_factors", "frequency", "diagnostics", "szego_checks", "notes"}


def test_build_report_cantor_smoke():
    E = make_cantor(CantorSpec(4.0, power_kappas(3), -2.0), 3)
    eq = equilibrium(E)
    m = build_measure(E, equilibrium_weight())
    c = jacobi_coefficients(m, 60)
    rep = build_report(m, c, eq)
    assert len(rep.frequency) == 7
    assert rep.diagnostics is not None
    W = rep.widom_factors
    assert np.all(W > 0)


def test_widom_window_bounds():
    eq = equilibrium(ASYM)
    c = jacobi_coefficients(build_measure(ASYM, equilibrium_weight()), 200)
    W = widom_factors(c, eq.capacity)
    window = W[50:201]
    assert window.min() >= 0.2 and window.max() <= 5.0
    spread = [np.ptp(W[s:201]) for s in (50, 100, 150)]
    assert spread == sorted(spread, reverse=True)


def test_sequences_csv(c_arc):
    text = sequences_csv(c_arc, widom_factors(c_arc, 1.0))
    lines = text.strip().split("\n")
    assert lines[0] == "n,p_n,q_n,W_n" and len(lines) == c_arc.p.size + 1
