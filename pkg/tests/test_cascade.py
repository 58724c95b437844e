import math
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cascade_kpz.cascade import (
    CascadeMeasure,
    batch_log2_mass,
    mass,
    node_weight,
    parse_tail_rule,
    second_moment_oracle,
    slab_mass,
    tail_rule_name,
    total_mass,
    truncated_log2_moment,
)
from cascade_kpz.dyadic import DyadicAddress, lebesgue
from cascade_kpz.errors import ContractError, DomainError, ResourceError
from cascade_kpz.hashing import address_uniforms, derive_seeds
from cascade_kpz.weights import LogNormal, TwoPoint

LN1 = LogNormal(0.5, 1)
LN2 = LogNormal(0.5, 2)
TP = TwoPoint(0.5, 1.5, 0.5)
ONE2 = TwoPoint(1.0, 1.0, 0.5, 2)


def addr(d, m, coords):
    return DyadicAddress.from_coords(d, m, coords)


def mean_se(x):
    x = np.asarray(x)
    return x.mean(), x.std(ddof=1) / math.sqrt(len(x))


def brute_mass(c, a, n):
    """Sum the weight product over every depth-n descendant, one address at a time."""
    d = c.dim
    total = 0.0
    for tail in product(range(2**d), repeat=n - a.depth):
        leaf = DyadicAddress.from_symbols(d, a.symbols + tail)
        total += 2.0 ** c.prefix_log2_weight(leaf)
    return total * 2.0 ** (-n * d)


def test_node_weight_deterministic_and_positive():
    c = CascadeMeasure(7, LN2)
    a = addr(2, 5, [3, 17])
    assert node_weight(c, a) == node_weight(CascadeMeasure(7, LN2), a) > 0


def test_node_weight_support_twopoint():
    c = CascadeMeasure(1, TP)
    values = {node_weight(c, addr(1, 8, [j])) for j in range(256)}
    assert values == {0.5, 1.5}


def test_node_weight_seed_correlation():
    m = 14
    coords = [np.arange(1 << m, dtype=np.uint64)][:1]
    a = CascadeMeasure(11, LN1).level_log2_weight(m, coords)
    b = CascadeMeasure(12, LN1).level_log2_weight(m, coords)
    assert not np.array_equal(a, b)
    assert abs(np.corrcoef(a[:10_000], b[:10_000])[0, 1]) < 0.05


def test_root_has_no_weight():
    with pytest.raises(ContractError):
        node_weight(CascadeMeasure(0, LN1), DyadicAddress.root(1))
    assert total_mass(CascadeMeasure(0, LN2), 0) == 1.0


def test_axis_refinement_structure():
    # d=2: the cube weight times a weight shared by the two cubes of each axis-1 half-box.
    c = CascadeMeasure(5, LN2)
    m = 3
    i, j = np.meshgrid(np.arange(8, dtype=np.uint64), np.arange(8, dtype=np.uint64), indexing="ij")
    i, j = i.ravel(), j.ravel()
    got = c.level_log2_weight(m, [i, j])
    u0 = address_uniforms(5, 2, m, 0, [i, j])
    u1 = address_uniforms(5, 2, m, 1, [i, j >> np.uint64(1)])
    np.testing.assert_allclose(got, LN2.log2_sample(*u0) + LN2.log2_sample(*u1), rtol=0, atol=1e-12)
    cube = CascadeMeasure(5, LN2, "cube").level_log2_weight(m, [i, j])
    np.testing.assert_allclose(cube, LN2.log2_sample(*u0), rtol=0, atol=1e-12)


def test_refinements_agree_in_one_dimension():
    a, b = CascadeMeasure(3, LN1, "axis"), CascadeMeasure(3, LN1, "cube")
    assert a.mass(addr(1, 2, [1]), 7).log2_mass == b.mass(addr(1, 2, [1]), 7).log2_mass


def test_degenerate_weights_give_lebesgue():
    c = CascadeMeasure(9, ONE2)
    for a in (addr(2, 0, [0, 0]), addr(2, 2, [1, 3]), addr(2, 4, [5, 9])):
        for n in (a.depth, a.depth + 2):
            assert mass(c, a, n).value == lebesgue(a)


def test_mass_at_own_depth_is_weight_product():
    c = CascadeMeasure(4, LN1)
    a = addr(1, 2, [2])
    expected = 0.25 * node_weight(c, a.parent()) * node_weight(c, a)
    assert mass(c, a, 2).value == pytest.approx(expected, rel=1e-13)


def test_mass_rejects_shallow_truncation():
    with pytest.raises(ContractError):
        mass(CascadeMeasure(0, LN1), addr(1, 3, [1]), 2)
    with pytest.raises(DomainError):
        mass(CascadeMeasure(0, LN1), addr(2, 1, [0, 0]), 2)


@pytest.mark.parametrize("refinement", ["axis", "cube"])
@pytest.mark.parametrize("d,a_depth,n", [(1, 2, 7), (2, 1, 4), (3, 0, 2)])
def test_mass_matches_brute_force(refinement, d, a_depth, n):
    c = CascadeMeasure(21, LogNormal(0.5, d), refinement)
    a = addr(d, a_depth, [a_depth % 2] * d)
    assert mass(c, a, n).value == pytest.approx(brute_mass(c, a, n), rel=1e-11)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**64 - 1), st.integers(1, 2), st.data())
def test_additivity(seed, d, data):
    m = data.draw(st.integers(0, 3))
    n = data.draw(st.integers(m + 1, m + 3))
    a = addr(d, m, [data.draw(st.integers(0, 2**m - 1)) for _ in range(d)])
    c = CascadeMeasure(seed, LogNormal(0.8, d))
    whole = mass(c, a, n).value
    parts = sum(mass(c, k, n).value for k in a.children())
    assert parts == pytest.approx(whole, rel=1e-10)


def test_extended_tail_is_deeper_truncation():
    c = CascadeMeasure(2, LN2)
    a = addr(2, 2, [1, 2])
    est = c.mass(a, 3, tail_extra=2)
    assert est.log2_mass == c.mass(a, 5).log2_mass
    assert est.tail_rule == "extended(2)" and est.trunc_depth == 3
    assert parse_tail_rule("extended(3)") == 3 and tail_rule_name(0) == "mean_one"
    with pytest.raises(DomainError):
        parse_tail_rule("extended(-1)")


@pytest.mark.parametrize("refinement", ["axis", "cube"])
def test_batch_matches_single(refinement):
    seeds = derive_seeds(5, 7)
    a = addr(2, 1, [1, 0])
    batch = batch_log2_mass(LN2, seeds, a, 4, refinement, max_cells=512)
    single = [CascadeMeasure(s, LN2, refinement).mass(a, 4).log2_mass for s in seeds]
    np.testing.assert_allclose(batch, single, rtol=0, atol=1e-11)


def test_node_budget():
    with pytest.raises(ResourceError):
        CascadeMeasure(0, LN2).mass(DyadicAddress.root(2), 8, node_budget=1000)


def test_hash_version_pinned():
    with pytest.raises(ContractError):
        CascadeMeasure(0, LN1, hash_version="other")


def test_martingale_mean():
    seeds = derive_seeds(100, 2000)
    child = addr(2, 1, [1, 1])
    for n in (1, 4):
        m, se = mean_se(np.exp2(batch_log2_mass(LN2, seeds, child, n)))
        assert abs(m - 0.25) < 3 * se


@pytest.mark.parametrize("refinement", ["axis", "cube"])
@pytest.mark.parametrize("s", [0.25, 0.5, 0.75, 1.0])
def test_moment_scaling_at_own_depth(refinement, s):
    n = 5
    a = addr(2, n, [3, 8])
    vals = np.exp2(s * batch_log2_mass(LN2, derive_seeds(3, 20_000), a, n, refinement))
    m, se = mean_se(vals)
    expected = 2.0 ** truncated_log2_moment(LN2, n, s, refinement)
    weights = n * (2 if refinement == "axis" else 1)
    assert expected == pytest.approx(2.0 ** (-2 * n * s) * LN2.moment(s) ** weights, rel=1e-12)
    assert abs(m - expected) < 3 * se


def exact_second_moment(model, d, refinement):
    """E[l_1^2] by enumerating every joint outcome of the two-point weights."""
    if refinement == "cube":
        count = 2**d
        def total(w):
            return sum(w) / 2**d
    else:
        # d=2: four cube weights, then one weight per axis-1 half (indexed by axis-0 coordinate)
        count = 6
        def total(w):
            return sum(w[4 + i] * w[2 * i + j] for i in range(2) for j in range(2)) / 4
    out = 0.0
    for pick in product((0, 1), repeat=count):
        w = [model.a if k == 0 else model.b for k in pick]
        prob = math.prod(model.p if k == 0 else 1 - model.p for k in pick)
        out += prob * total(w) ** 2
    return out


@pytest.mark.parametrize("refinement", ["axis", "cube"])
def test_second_moment_recursion_matches_enumeration(refinement):
    model = TwoPoint(0.5, 1.5, 0.5, 2)
    assert second_moment_oracle(model, 1, refinement) == pytest.approx(
        exact_second_moment(model, 2, refinement), rel=1e-14)


def test_second_moment_fixed_point():
    assert second_moment_oracle(TP, None) == pytest.approx(4 / 3, rel=1e-14)
    assert second_moment_oracle(TP, 14) == pytest.approx(1.3328707404064062, rel=1e-14)
    assert second_moment_oracle(LogNormal(1.5), None) == math.inf


def test_slab_mass_lebesgue_cases():
    c = CascadeMeasure(0, ONE2)
    assert slab_mass(c, 1, 3, 5) == 0.25
    assert slab_mass(c, 2, 5, 5) == 2.0 ** -4
    with pytest.raises(ContractError):
        slab_mass(c, 1, 6, 5)
    with pytest.raises(ContractError):
        slab_mass(c, 3, 1, 5)


def test_slab_masses_match_cube_sums():
    c = CascadeMeasure(8, LN2)
    n = 5
    got = c.slab_masses(2, range(1, 6), n)
    for k, value in zip(range(1, 6), got):
        half = 2 ** (k - 1)
        cubes = [addr(2, k, [i, j]) for i in range(2**k) for j in (half - 1, half)]
        assert value == pytest.approx(sum(c.mass(a, n).value for a in cubes), rel=1e-11)
