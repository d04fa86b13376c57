import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from finitegap.errors import InsufficientDepthError, ValidationError
from finitegap.intervals import (
    CantorSpec,
    HomogeneityGrid,
    IntervalSet,
    cantor_to_json,
    gaps,
    homogeneity_eta,
    local_density,
    make_cantor,
    power_kappas,
    set_from_json,
    sodin_criterion,
    total_length,
)

SEG = IntervalSet([(-2.0, 2.0)])
SYM = IntervalSet([(-2.0, -1.0), (1.0, 2.0)])
QUARTER = CantorSpec(4.0, (0.25, 0.25), -2.0)
POWER = CantorSpec(4.0, power_kappas(8), -2.0)

SODIN_GOLDENS = [
    0.6666666666666666,
    1.5375963529895742,
    2.326759442932467,
    3.0236067125714077,
    3.6186995394342434,
    4.1128694534921495,
    4.514411513107752,
    4.835241554739617,
]


def test_validation():
    with pytest.raises(ValidationError):
        IntervalSet([])
    with pytest.raises(ValidationError):
        IntervalSet([(1.0, 0.0)])
    assert IntervalSet([(0.0, 2.0), (1.0, 3.0)]).bands == ((0.0, 3.0),)
    assert IntervalSet([(0.0, 1.0), (1.0 + 1e-16, 3.0)]).genus == 0
    with pytest.raises(ValidationError):
        CantorSpec(4.0, (1.0,))


def test_cantor_generations():
    assert make_cantor(QUARTER, 0).bands == ((-2.0, 2.0),)
    g1 = make_cantor(QUARTER, 1)
    assert [r - l for l, r in g1.bands] == pytest.approx([1.5, 1.5])
    assert g1.bands[1][0] - g1.bands[0][1] == pytest.approx(1.0)
    g2 = make_cantor(QUARTER, 2)
    assert len(g2.bands) == 4
    assert [r - l for l, r in g2.bands] == pytest.approx([0.5625] * 4)
    with pytest.raises(InsufficientDepthError):
        make_cantor(QUARTER, 3)


def test_total_length():
    assert total_length(SEG) == 4.0
    assert total_length(make_cantor(QUARTER, 1)) == pytest.approx(3.0, abs=1e-15)
    assert total_length(make_cantor(QUARTER, 2)) == pytest.approx(2.25, abs=1e-15)
    for n in range(1, 7):
        expect = 4.0 * math.prod(1 - k for k in POWER.kappas[:n])
        assert total_length(make_cantor(POWER, n)) == pytest.approx(expect, abs=1e-12)


def test_cantor_nesting():
    for n in range(1, 6):
        parent, child = make_cantor(POWER, n - 1), make_cantor(POWER, n)
        for k, (l, r) in enumerate(parent.bands):
            a, b = child.bands[2 * k], child.bands[2 * k + 1]
            assert a[0] == l and b[1] == pytest.approx(r, abs=1e-15)
            assert (a[1] - a[0]) == pytest.approx(0.5 * (1 - POWER.kappas[n - 1]) * (r - l), abs=1e-15)


def test_gaps():
    assert gaps(SEG) == ([], (-2.0, 2.0))
    assert gaps(SYM)[0] == [(-1.0, 1.0)]
    assert len(gaps(make_cantor(QUARTER, 2))[0]) == 3


def test_local_density_examples():
    assert local_density(SEG, 0.0, 1.0) == 2.0
    assert local_density(SEG, 2.0, 1.0) == 1.0
    # window (-1.5, 0.5) holds the band piece [-1.5, -0.5] and the whole gap
    assert local_density(make_cantor(QUARTER, 1), -0.5, 1.0) == pytest.approx(1.0)
    assert local_density(make_cantor(QUARTER, 1), -0.5, 2.0) == pytest.approx(1.25)
    assert local_density(SYM, 1.0, 2.0) == pytest.approx(0.5)
    with pytest.raises(ValidationError):
        local_density(SEG, 0.0, 0.0)


@settings(max_examples=50, deadline=None)
@given(x=st.floats(-3.0, 3.0), rho=st.floats(1e-6, 10.0))
def test_local_density_range(x, rho):
    E = make_cantor(POWER, 3)
    d = local_density(E, x, rho)
    assert 0.0 <= d <= 2.0 + 1e-9
    if E.contains(x - rho) and E.band_index(x - rho) == E.band_index(x + rho) is not None:
        assert d == pytest.approx(2.0)


def test_homogeneity_examples():
    assert homogeneity_eta(SEG).eta_estimate == pytest.approx(1.0)
    # worst window: x = 2, rho = 3 meets E in length 1
    rep = homogeneity_eta(SYM)
    assert rep.eta_estimate == pytest.approx(1 / 3)
    assert abs(rep.worst_x) == 2.0 and rep.worst_rho == pytest.approx(3.0)


@pytest.mark.parametrize("n", range(1, 7))
def test_homogeneity_cantor_bound(n):
    E = make_cantor(POWER, n)
    bound = math.prod(1 - k for k in POWER.kappas[:n]) / 2
    rep = homogeneity_eta(E)
    assert rep.eta_estimate >= bound
    assert 0 < rep.eta_estimate <= 2
    assert rep.sample_grid["n_rho"] == 64


def test_homogeneity_refinement_monotone():
    E = make_cantor(POWER, 3)
    coarse = homogeneity_eta(E, HomogeneityGrid(x_per_band=0, n_rho=16, breakpoints=False))
    fine = homogeneity_eta(E, HomogeneityGrid(x_per_band=8, n_rho=16, breakpoints=False))
    finest = homogeneity_eta(E, HomogeneityGrid(x_per_band=8, n_rho=16, breakpoints=True))
    assert coarse.eta_estimate >= fine.eta_estimate >= finest.eta_estimate


def test_sodin_examples():
    assert sodin_criterion(SEG) == 0.0
    assert sodin_criterion(SYM) == pytest.approx(math.sqrt(2.0))


def test_sodin_cantor_goldens():
    vals = [sodin_criterion(make_cantor(POWER, n)) for n in range(1, 9)]
    assert vals == pytest.approx(SODIN_GOLDENS, rel=1e-12)
    steps = np.diff(vals)
    assert np.all(steps[1:] < steps[:-1])
    assert max(vals) < 8.0


@settings(max_examples=20, deadline=None)
@given(t=st.floats(-100.0, 100.0))
def test_sodin_translation_invariant(t):
    E = make_cantor(POWER, 3)
    assert sodin_criterion(E.affine(1.0, t)) == pytest.approx(sodin_criterion(E), rel=1e-9)


def test_json_round_trip():
    E = make_cantor(POWER, 3)
    text = json.dumps(E.to_json())
    assert set_from_json(text).bands == E.bands
    spec = cantor_to_json(POWER, 3)
    assert set_from_json(spec).bands == E.bands
    assert set_from_json({"bands": [[-2, 2]]}).bands == SEG.bands
    with pytest.raises(ValidationError):
        set_from_json({"bands": [[-2, 2]], "extra": 1})
    with pytest.raises(ValidationError):
        set_from_json({"cantor": {"l0": 4, "kappas": [0.5], "depth": 1}})
