import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from finitegap.errors import BoundaryValueError, PlacementError, ValidationError
from finitegap.intervals import IntervalSet
from finitegap.measures import (
    StieltjesFunction,
    WeightSpec,
    arcsine,
    build_measure,
    density_csv,
    exp_eval,
    exp_representation,
    make_sigma0,
    mass_balance_residual,
    measure_from_json,
    measure_to_json,
    r0_eval,
    semicircle,
    stieltjes_eval,
    szego_integral,
    tau_transform_measure,
)
from finitegap.potential import equilibrium

SEG = IntervalSet([(-2.0, 2.0)])
SYM = IntervalSet([(-2.0, -1.0), (1.0, 2.0)])


def semicircle_r(z):
    z = complex(z)
    return 1 + (-z + np.sqrt(z - 2) * np.sqrt(z + 2)) / 2


@pytest.fixture(scope="module")
def r_sc():
    return StieltjesFunction(build_measure(SEG, semicircle()))


@pytest.fixture(scope="module")
def r_sc_mass():
    return StieltjesFunction(build_measure(SEG, semicircle(), [(3.0, 0.1)]))


@pytest.fixture(scope="module")
def r_delta():
    return StieltjesFunction(build_measure(None, None, [(0.0, 1.0)]))


def test_total_masses():
    assert build_measure(SEG, semicircle()).total_mass() == pytest.approx(1.0, abs=1e-14)
    assert build_measure(SEG, arcsine()).total_mass() == pytest.approx(1.0, abs=1e-14)
    assert build_measure(SEG, semicircle(), [(3.0, 0.1)]).total_mass() == pytest.approx(1.1, abs=1e-14)


def test_semicircle_density_closed_form():
    xs = np.array([-1.9, -0.3, 0.0, 1.2, 1.99])
    m = build_measure(SEG, semicircle())
    np.testing.assert_allclose(m.density(xs), np.sqrt(4 - xs**2) / (2 * np.pi), rtol=1e-13)
    a = build_measure(SEG, arcsine())
    np.testing.assert_allclose(a.density(xs), 1 / (np.pi * np.sqrt(4 - xs**2)), rtol=1e-13)


def test_stieltjes_closed_forms(r_sc, r_delta):
    assert stieltjes_eval(r_delta, 2.0) == pytest.approx(0.5, abs=1e-15)
    assert r_sc(3.0) == pytest.approx(1 + (-3 + math.sqrt(5)) / 2, abs=1e-14)
    r_arc = StieltjesFunction(build_measure(SEG, arcsine()))
    assert r_arc(3.0) == pytest.approx(1 - 1 / math.sqrt(5), abs=1e-14)
    for z in [0.5 + 0.1j, 2.01, -2.0001, 3 - 4j]:
        assert r_sc(z) == pytest.approx(semicircle_r(z), abs=1e-11)


def test_boundary_value_semicircle(r_sc):
    xs = np.array([-1.5, 0.2, 1.9])
    expected = 1 + (-xs + 1j * np.sqrt(4 - xs**2)) / 2
    np.testing.assert_allclose(r_sc.boundary_value(xs), expected, atol=1e-12)


def test_evaluation_on_support_raises(r_sc, r_delta):
    with pytest.raises(BoundaryValueError):
        r_sc(1.0)
    with pytest.raises(BoundaryValueError):
        r_delta(0.0)


def test_build_measure_errors():
    with pytest.raises(PlacementError):
        build_measure(SEG, semicircle(), [(1.0, 0.1)])
    with pytest.raises(ValidationError):
        build_measure(SEG, semicircle(), [(3.0, -0.1)])
    with pytest.raises(PlacementError):
        build_measure(SEG, semicircle(), [(3.0, 0.1), (3.0, 0.2)])
    with pytest.raises(ValidationError):
        WeightSpec("generalized-jacobi", {"exponents": [0.25, 0.5]})


def test_tau_delta(r_delta):
    tm = tau_transform_measure(r_delta)
    (x, m), = tm.masses
    assert x == pytest.approx(1.0, abs=1e-14)
    assert m == pytest.approx(1.0, abs=1e-12)


def test_tau_semicircle_boundary_zero(r_sc):
    structure = r_sc.real_structure()
    assert [e["boundary"] for e in structure] == [None, 2.0]
    tm = tau_transform_measure(r_sc)
    assert tm.masses == ()
    # -1/r on E is again a measure: density w / |r(x+i0)|^2
    xs = np.array([-1.0, 0.5])
    bv = 1 + (-xs + 1j * np.sqrt(4 - xs**2)) / 2
    np.testing.assert_allclose(tm.density(xs), np.sqrt(4 - xs**2) / (2 * np.pi) / np.abs(bv) ** 2, rtol=1e-11)


def test_tau_with_gap_mass(r_sc_mass):
    zeros = r_sc_mass.zeros()
    assert len(zeros) == 1 and zeros[0] > 3.0
    assert abs(r_sc_mass(zeros[0])) < 1e-13
    rt = r_sc_mass.tau()
    assert rt.constant == -1.0
    (x, m), = rt.measure.masses
    h = 1e-5
    deriv = (r_sc_mass(x + h).real - r_sc_mass(x - h).real) / (2 * h)
    assert m == pytest.approx(1 / deriv, rel=1e-7)
    for z in [0.3 + 1j, 5.0, -4 + 0.5j]:
        assert rt(z) == pytest.approx(-1 / r_sc_mass(z), abs=1e-11)


def test_tau_round_trip(r_sc_mass):
    rtt = r_sc_mass.tau().tau()
    assert rtt.constant == 1.0
    (x, m), = rtt.measure.masses
    assert x == pytest.approx(3.0, abs=1e-12)
    assert m == pytest.approx(0.1, rel=1e-9)
    xs = np.array([-1.7, 0.1, 1.95])
    np.testing.assert_allclose(rtt.measure.density(xs), r_sc_mass.measure.density(xs), rtol=1e-8)


def test_sigma0_single_interval():
    s0 = make_sigma0(SEG)
    xs = np.array([-1.5, 0.0, 1.5])
    np.testing.assert_allclose(s0.density(xs), np.sqrt((2 - xs) / (2 + xs)) / np.pi, rtol=1e-13)
    r = StieltjesFunction(s0)
    assert s0.total_mass() == pytest.approx(2.0, abs=1e-12)
    assert mass_balance_residual(r) < 1e-8
    for z in [3.0, 1 + 1j]:
        assert r(z) == pytest.approx(np.sqrt((z - 2) / (z + 2)), abs=1e-12)


def test_sigma0_two_interval_with_points():
    X, Xt = [0.2], [0.6]
    s0 = make_sigma0(SYM, X, Xt)
    r = StieltjesFunction(s0)
    # p0^2 = sum(x^tau - x) + |E| / 2
    assert s0.total_mass() == pytest.approx(0.4 + 1.0, abs=1e-12)
    assert s0.masses[0][1] > 0
    zs = np.array([3 + 1j, 0.5j, -1.5 + 0.3j, 10.0])
    np.testing.assert_allclose(r(zs), r0_eval(SYM, X, Xt, zs), atol=1e-12)
    assert abs(r(1e10) - 1) < 1e-9


def test_sigma0_no_points_two_interval():
    r = StieltjesFunction(make_sigma0(SYM))
    assert abs(r(1e12) - 1) < 1e-10
    xs = np.linspace(-1.99, -1.01, 7)
    assert np.all(r.measure.density(xs) > 0)


def test_sigma0_interlacing_errors():
    with pytest.raises(PlacementError):
        make_sigma0(SYM, [0.6], [0.2])
    with pytest.raises(PlacementError):
        make_sigma0(SYM, [0.2], [1.5])
    with pytest.raises(PlacementError):
        make_sigma0(SYM, [-3.0], [0.5])
    with pytest.raises(PlacementError):
        make_sigma0(SYM, [0.1, 0.3], [0.5, 0.7])


def test_mass_balance(r_sc, r_sc_mass):
    assert mass_balance_residual(r_sc) < 1e-8
    assert mass_balance_residual(r_sc_mass) < 1e-8


def test_exp_representation_delta(r_delta):
    f = exp_representation(r_delta)
    assert f.pi_intervals == ((0.0, 1.0),)
    assert exp_eval(f, 2.0) == pytest.approx(0.5, abs=1e-15)


def test_exp_representation_sigma0_phase():
    f = exp_representation(StieltjesFunction(make_sigma0(SEG)))
    np.testing.assert_allclose(f(np.array([-1.5, 0.0, 1.7])), np.pi / 2, atol=1e-12)
    np.testing.assert_allclose(f(np.array([-3.0, 3.0])), 0.0)


def test_exp_round_trip(r_sc, r_sc_mass):
    z = 1 + 2j
    assert abs(exp_eval(exp_representation(r_sc), z) / r_sc(z) - 1) < 1e-6
    f = exp_representation(r_sc_mass)
    assert len(f.pi_intervals) == 1 and f.pi_intervals[0][0] == 3.0
    rng = np.random.default_rng(7)
    for _ in range(20):
        z = complex(rng.uniform(-4, 4), rng.choice([-1, 1]) * rng.uniform(0.5, 3))
        assert abs(exp_eval(f, z) - r_sc_mass(z)) / abs(r_sc_mass(z)) < 1e-5


def test_szego_integral():
    eq = equilibrium(SEG)
    # mean of log(2 sin theta) over (0, pi) is zero
    assert szego_integral(build_measure(SEG, semicircle()), eq) == pytest.approx(-math.log(2 * math.pi), abs=1e-10)
    assert szego_integral(build_measure(SEG, arcsine()), eq) == pytest.approx(-math.log(math.pi), abs=1e-10)
    table = WeightSpec("table", {"x": [-2.0, 0.0, 0.5, 2.0], "w": [0.3, 0.0, 0.0, 0.3]})
    assert szego_integral(build_measure(SEG, table), eq) == -math.inf


def test_json_round_trip(r_sc_mass):
    m = r_sc_mass.measure
    back = measure_from_json(measure_to_json(m))
    assert back.masses == m.masses
    xs = np.array([-1.0, 1.0])
    np.testing.assert_allclose(back.density(xs), m.density(xs), rtol=1e-15)
    s0 = measure_from_json({"bands": [[-2, -1], [1, 2]], "weight": {"kind": "sigma0", "X": [0.2], "Xtau": [0.6]}})
    assert s0.masses[0][0] == 0.2
    with pytest.raises(ValidationError):
        measure_from_json({"bands": [[-2, 2]], "weight": {"kind": "semicircle", "bogus": 1}})
    tau_json = measure_to_json(r_sc_mass.tau().measure)
    assert tau_json["weight"]["kind"] == "table"


def test_density_csv():
    text = density_csv(build_measure(SEG, semicircle()), points_per_band=5)
    lines = text.strip().split("\n")
    assert lines[0] == "x,w" and len(lines) == 4


@settings(max_examples=30, deadline=None)
@given(x=st.floats(-6, 6), y=st.floats(0.01, 5))
def test_herglotz_and_symmetry(r_sc_mass, x, y):
    z = complex(x, y)
    v = r_sc_mass(z)
    assert v.imag > 0
    assert abs(r_sc_mass(z.conjugate()) - v.conjugate()) < 1e-12


def test_expansion_tail(r_sc, r_sc_mass):
    z = 1e4 * np.exp(0.3j)
    assert abs(z * (1 - r_sc(z)) - r_sc.total_mass()) < 1e-6
    r_arc = StieltjesFunction(build_measure(SEG, arcsine()))
    assert abs(z * (1 - r_arc(z)) - 1.0) < 1e-6
    # next term is (first moment) / z
    assert abs(z * (z * (1 - r_sc_mass(z)) - 1.1) - 0.3) < 1e-3


@settings(max_examples=10, deadline=None)
@given(
    pole=st.floats(-0.9, 0.5),
    gap=st.floats(0.05, 0.4),
    mass=st.floats(0.01, 2.0),
)
def test_interlacing_two_interval(pole, gap, mass):
    xt = min(pole + gap, 0.95)
    m = make_sigma0(SYM, [pole], [xt])
    extra = build_measure(SYM, m.weight, list(m.masses) + [(2.5, mass)])
    r = StieltjesFunction(extra)
    zeros = r.zeros()
    poles = [x for x, _ in extra.masses]
    merged = sorted([(p, "p") for p in poles] + [(z, "z") for z in zeros])
    kinds = [k for _, k in merged]
    assert all(a != b for a, b in zip(kinds, kinds[1:]))
