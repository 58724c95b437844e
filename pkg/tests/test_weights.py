import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, stats

from cascade_kpz.errors import ConfigError, DomainError
from cascade_kpz.weights import (
    LogNormal,
    TwoPoint,
    entropy_mean,
    moment,
    parse_weight,
    sample,
    validate,
)

TP = TwoPoint(0.5, 1.5, 0.5)
DEGENERATE = TwoPoint(1.0, 1.0, 0.5)


def lognormal_moment_quad(sigma2, s):
    sg = math.sqrt(sigma2)
    f = lambda z: math.exp(s * (sg * z - sigma2 / 2)) * stats.norm.pdf(z)
    return integrate.quad(f, -40, 40, epsabs=1e-14, epsrel=1e-13)[0]


@pytest.mark.parametrize("model", [LogNormal(0.5), LogNormal(1.0, 3), TP, DEGENERATE])
def test_moment_at_zero_and_one(model):
    assert moment(model, 0.0) == pytest.approx(1.0, abs=1e-15)
    assert moment(model, 1.0) == pytest.approx(1.0, abs=1e-15)


def test_moment_examples():
    # exp(-1/8), confirmed by quadrature of the density
    assert moment(LogNormal(1.0), 0.5) == pytest.approx(0.8824969025845953, rel=1e-12)
    assert moment(TP, 2.0) == 1.25


@pytest.mark.parametrize("sigma2,s", [(1.0, 0.5), (0.5, 2.0), (0.5, -0.5), (2.0, 0.3)])
def test_lognormal_moment_against_quadrature(sigma2, s):
    assert moment(LogNormal(sigma2), s) == pytest.approx(lognormal_moment_quad(sigma2, s), rel=1e-9)


def test_entropy_mean_examples():
    assert entropy_mean(LogNormal(1.0)) == pytest.approx(0.5, abs=1e-12)
    assert entropy_mean(TP) == pytest.approx(0.13081203594113697, rel=1e-12)
    assert entropy_mean(DEGENERATE) == 0.0


def test_entropy_mean_is_derivative_of_moment():
    h = 1e-6
    for model in (LogNormal(0.7), TP):
        deriv = (moment(model, 1 + h) - moment(model, 1 - h)) / (2 * h)
        assert entropy_mean(model) == pytest.approx(deriv, rel=1e-6)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_valid_lognormal(d):
    assert validate(LogNormal(0.5, d)).ok


def test_invalid_models():
    r = validate(LogNormal(4.0, 1))
    assert not r.nondegenerate and r.diagnostics["E[W log W]"] == 2.0
    r = validate(LogNormal(2.0, 2))
    assert r.nondegenerate and not r.phi_monotone and r.diagnostics["min_phi_step"] < 0
    assert r.failures() == ["phi_monotone"]
    assert validate(DEGENERATE).ok


@given(st.floats(0.05, 3.0), st.integers(1, 3))
def test_validity_flags_match_closed_form_thresholds(sigma2, d):
    r = validate(LogNormal(sigma2, d))
    assert r.nondegenerate == (sigma2 / 2 < d)
    # phi'(1) = 1 - sigma2 / (2 ln 2); grid resolution blurs the exact edge
    if abs(sigma2 - 2 * math.log(2)) > 0.01:
        assert r.phi_monotone == (sigma2 < 2 * math.log(2))
    assert r.mean_ok and r.neg_moments_ok


def test_twopoint_mean_enforced():
    with pytest.raises(DomainError):
        TwoPoint(0.5, 1.5, 0.4)
    with pytest.raises(DomainError):
        TwoPoint(-0.5, 2.5, 0.5)
    with pytest.raises(DomainError):
        LogNormal(0.0)


def test_sample_examples():
    assert sample(TP, (0.2, 0.7)) == 0.5
    assert sample(TP, (0.9, 0.7)) == 1.5
    assert sample(LogNormal(1.0), (0.5, 0.25)) == pytest.approx(0.6065306597126334, rel=1e-12)
    for bad in ((0.0, 0.5), (0.5, 1.0)):
        with pytest.raises(DomainError):
            sample(TP, bad)


@pytest.mark.parametrize("model", [LogNormal(0.5), TP])
def test_sample_moments(model):
    rng = np.random.default_rng(11)
    n = 100_000
    u1, u2 = rng.random(n), rng.random(n)
    u1[u1 == 0] = 0.5
    w = np.exp2(model.log2_sample(u1, u2))
    assert np.all(w > 0)
    assert abs(w.mean() - 1) < 5 * w.std() / math.sqrt(n)
    for s in (-0.5, 0.5, 2.0):
        ws = w**s
        assert abs(ws.mean() - moment(model, s)) < 3.5 * ws.std() / math.sqrt(n)


@pytest.mark.parametrize("model", [LogNormal(0.5), LogNormal(1.2), TP])
def test_log_moment_convex_phi_endpoints(model):
    grid = np.linspace(-1, 3, 401)
    lm = model.log2_moment(grid)
    assert np.all(np.diff(lm, 2) > -1e-12)
    assert 0 - model.log2_moment(0.0) == 0.0
    assert 1 - model.log2_moment(1.0) == pytest.approx(1.0, abs=1e-15)


def test_parse_weight():
    assert parse_weight("lognormal(sigma2=0.5)", 2) == LogNormal(0.5, 2)
    assert parse_weight(" twopoint(a=0.5, b=1.5, p=0.5) ", 1) == TP
    for bad in ("lognormal(0.5)", "gamma(k=2)", "lognormal(sigma2='x')", "twopoint(a=1,b=1)",
                "lognormal(sigma2=-1)", "lognormal(sigma2=0.5"):
        with pytest.raises(ConfigError):
            parse_weight(bad, 1)


@pytest.mark.parametrize("model", [LogNormal(0.25, 2), TP])
def test_spec_round_trip(model):
    assert parse_weight(model.spec(), model.d) == model
