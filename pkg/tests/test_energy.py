import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from cascade_kpz.cascade import CascadeMeasure
from cascade_kpz.dimension import CascadeFamily, CascadeOracle, LebesgueMeasure
from cascade_kpz.dyadic import address_of, dyadic_ball
from cascade_kpz.energy import classify_growth, energy_growth_profile, s_energy, sample_natural_measure
from cascade_kpz.errors import ContractError
from cascade_kpz.sets import AxisSlice, DyadicCantor, FullCube, Singleton
from cascade_kpz.weights import LogNormal

CANTOR = DyadicCantor(2, (0, 3))


def pair_sum(measure, pts, s, max_depth):
    """(1/N^2) sum over ordered pairs, one dyadic ball at a time."""
    n = len(pts)
    total = 0.0
    for i in range(n):
        for j in range(n):
            if i != j:
                ball = dyadic_ball(tuple(pts[i]), tuple(pts[j]), max_depth)
                total += 2.0 ** (-s * measure.log2_mass(ball))
    return total / n**2


def test_sample_full_cube_is_uniform_over_cells():
    pts = sample_natural_measure(FullCube(1), 2, 8000, 5)
    values, counts = np.unique(pts[:, 0], return_counts=True)
    assert list(values) == [0.125, 0.375, 0.625, 0.875]
    assert stats.chisquare(counts).pvalue > 1e-3


def test_sample_singleton_and_cantor():
    pts = sample_natural_measure(Singleton((0.3, 0.7)), 6, 50, 1)
    center = [(c + 0.5) / 64 for c in address_of((0.3, 0.7), 6).coords]
    assert np.all(pts == center)
    pts = sample_natural_measure(CANTOR, 8, 500, 2)
    for p in pts[:100]:
        assert set(address_of(tuple(p), 8).symbols) <= {0, 3}


def test_sample_rejects_unsupported():
    with pytest.raises(ContractError):
        sample_natural_measure(AxisSlice(2, 1, 0.5), 4, 10, 0)
    with pytest.raises(ContractError):
        sample_natural_measure(FullCube(1), 0, 10, 0)


def test_energy_examples():
    leb1 = LebesgueMeasure(1)
    pts = np.array([[0.1], [0.6], [0.8]])
    assert s_energy(leb1, pts, 0.0).value == pytest.approx(6 / 9)
    assert s_energy(leb1, np.array([0.3, 0.4]), 1.0, max_depth=60).value == pytest.approx(2.0)
    same = np.full((5, 2), 0.4)
    est = s_energy(LebesgueMeasure(2), same, 0.5, max_depth=7)
    assert est.value == pytest.approx(20 / 25 * 2.0 ** (7 * 2 * 0.5))
    assert est.pair_count == 20 and est.max_depth == 7


def test_energy_validation():
    with pytest.raises(ContractError):
        s_energy(LebesgueMeasure(1), np.array([[0.1]]), 0.5)
    with pytest.raises(ContractError):
        s_energy(LebesgueMeasure(1), np.array([[0.1], [0.2]]), -0.5)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32), st.integers(2, 40), st.floats(0, 1.5), st.integers(1, 9), st.booleans())
def test_energy_matches_pair_sum(seed, n, s, max_depth, cascade):
    rng = np.random.default_rng(seed)
    pts = rng.random((n, 2))
    pts[: n // 3] = pts[0]  # force coincident points onto the cap
    measure = CascadeOracle(CascadeMeasure(seed, LogNormal(0.5, 2))) if cascade else LebesgueMeasure(2)
    assert s_energy(measure, pts, s, max_depth).value == pytest.approx(pair_sum(measure, pts, s, max_depth), rel=1e-11)


def test_energy_symmetric_and_increasing():
    pts = sample_natural_measure(FullCube(2), 6, 300, 3)
    measure = CascadeOracle(CascadeMeasure(1, LogNormal(0.5, 2)))
    base = s_energy(measure, pts, 0.4, 6).value
    perm = np.random.default_rng(0).permutation(len(pts))
    assert s_energy(measure, pts[perm], 0.4, 6).value == pytest.approx(base, rel=1e-12)
    values = [s_energy(measure, pts, s, 6).value for s in np.linspace(0, 1, 6)]
    assert np.all(np.diff(values) > 0)


def test_classify_growth():
    ratios, eventual, label = classify_growth([1.0, 2.0, 4.0, 8.0])
    assert ratios == (2.0, 2.0, 2.0) and eventual == pytest.approx(2.0) and label == "diverging"
    assert classify_growth([1.0, 1.01, 1.02])[2] == "bounded"


def test_profile_at_zero_is_flat():
    est = energy_growth_profile(LebesgueMeasure(2), CANTOR, 0.0, range(3, 7), 200, 2)
    assert all(v == pytest.approx(199 / 200) for v in est.profile.values())
    assert est.growth == "bounded"
    assert len(est.rows) == 2 * 4 and est.rows[0][:2] == ("cantor(keep=[0,3])", "lebesgue")


def test_profile_dichotomy_small():
    lo = energy_growth_profile(LebesgueMeasure(2), CANTOR, 0.2, range(4, 11), 500, 3)
    hi = energy_growth_profile(LebesgueMeasure(2), CANTOR, 0.8, range(4, 11), 500, 3)
    assert lo.growth == "bounded" and hi.growth == "diverging"
    # level-sum argument: ratio tends to 2^(2t) / 2
    assert hi.eventual_ratio == pytest.approx(2 ** 1.6 / 2, rel=0.1)


def test_profile_deterministic_across_threads():
    family = CascadeFamily(LogNormal(0.5, 2))
    a = energy_growth_profile(family, CANTOR, 0.3, range(3, 6), 100, 3, threads=1)
    b = energy_growth_profile(family, CANTOR, 0.3, range(3, 6), 100, 3, threads=3)
    assert a.rows == b.rows


def test_profile_needs_two_depths():
    with pytest.raises(ContractError):
        energy_growth_profile(LebesgueMeasure(2), CANTOR, 0.3, [5], 10, 1)
