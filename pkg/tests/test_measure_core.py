import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from logspace.forms import Affine, Const, ExpInv, Log1pAbs, Power, Reciprocal
from logspace.measure_core import (
    Bounded,
    ClassificationError,
    Divergent,
    DomainError,
    Finite,
    PiecewiseFn,
    PreconditionError,
    Unbounded,
    atomic,
    ess_sup_classify,
    evaluate,
    integrate,
    integrate_over,
    invert_density,
    lebesgue,
    with_density,
)
from logspace.oracle import exhaustive_match
from logspace.sampling import random_density, random_function

PAPER_H = PiecewiseFn((0.0, 1 / 25, 1.0), (Power(1.0, -0.5), Affine(-25 / 32, 33 / 32)), positive=True)


def test_evaluate_examples():
    assert evaluate(PAPER_H, 1.0) == 0.25
    assert evaluate(PiecewiseFn.constant(1.0), 0.3) == 1.0
    assert evaluate(PAPER_H, 0.01) == pytest.approx(10.0, rel=1e-15)


def test_half_open_breakpoints():
    f = PiecewiseFn((0.0, 0.5, 1.0), (Const(1.0), Const(2.0)))
    assert evaluate(f, 0.5) == 2.0
    assert evaluate(f, 1.0) == 2.0


def test_out_of_domain():
    with pytest.raises(DomainError):
        evaluate(PAPER_H, 1.5)


def test_invalid_construction():
    with pytest.raises(ValueError):
        PiecewiseFn((0.0, 0.0), (Const(1.0),))
    with pytest.raises(ValueError):
        PiecewiseFn((0.0, 1.0), (Const(1.0), Const(2.0)))
    with pytest.raises(ValueError):
        PiecewiseFn((0.0, 1.0), (Affine(1.0, -0.5),), positive=True)


def test_integrate_examples():
    mu = lebesgue()
    r = integrate(PiecewiseFn((0.0, 1.0), (Log1pAbs(Power(1.0, -1.0)),)), mu)
    assert abs(r.value - 2 * math.log(2)) <= 1e-10 and r.err <= 1e-10
    assert integrate(PiecewiseFn.constant(0.0), mu) == Finite(0.0, 0.0)
    r = integrate(PiecewiseFn((0.0, 1.0), (Log1pAbs(ExpInv(1.0)),)), mu)
    assert isinstance(r, Divergent)


def test_paper_density_mass():
    r = integrate(PAPER_H, lebesgue())
    assert abs(r.value - 1.0) <= 1e-8


def test_atomic_integration_is_exact():
    mu = atomic([0.1, 0.2, 0.7])
    assert integrate(np.array([1.0, 1.0, 1.0]), mu).value == math.fsum([0.1, 0.2, 0.7])
    assert integrate(np.array([1.0, 2.0, 3.0]), mu).err == 0.0
    assert isinstance(integrate(np.array([1.0, np.inf, 0.0]), mu), Divergent)


def test_empty_range_is_zero():
    assert integrate_over(PiecewiseFn.constant(1.0), lebesgue(), 0.7, 0.7) == Finite(0.0, 0.0)


def test_ess_sup_examples():
    assert isinstance(ess_sup_classify(PAPER_H), Unbounded)
    assert ess_sup_classify(PAPER_H).segment == 0
    assert ess_sup_classify(PiecewiseFn.constant(1.0)) == Bounded(1.0)
    assert ess_sup_classify(PiecewiseFn((0.0, 1.0), (Affine(1.5, 0.5),))) == Bounded(2.0)
    assert isinstance(ess_sup_classify(PiecewiseFn((0.0, 1.0), (ExpInv(1.0),))), Unbounded)
    assert isinstance(ess_sup_classify(PiecewiseFn((0.0, 1.0), (ExpInv(-1.0),))), Bounded)


def test_ess_sup_refuses_unknown_behaviour():
    from logspace.forms import Lambda

    f = PiecewiseFn((0.0, 1.0), (Lambda(lambda lo, u: u, lambda lo: None, False, "opaque"),))
    with pytest.raises(ClassificationError):
        ess_sup_classify(f)


def test_invert_density_examples():
    inv = invert_density(PiecewiseFn.constant(2.0, positive=True))
    assert inv.forms == (Const(0.5),)
    inv = invert_density(PiecewiseFn((0.0, 1.0), (Power(1.0, -0.5),), positive=True))
    assert isinstance(inv.forms[0], Power) and inv.forms[0].p == 0.5
    x = np.array([0.01, 0.2, 0.4, 0.6, 0.99])
    assert np.allclose(inv(x), np.sqrt(x), rtol=1e-15)
    assert isinstance(invert_density(PAPER_H).forms[1], Reciprocal)
    with pytest.raises(PreconditionError):
        invert_density(PiecewiseFn.constant(2.0, positive=False))


def test_invert_density_involution():
    rng = np.random.default_rng(3)
    for _ in range(20):
        h = random_density(rng)
        x = rng.uniform(0, 1, 100)
        assert np.allclose(invert_density(invert_density(h))(x), h(x), rtol=1e-12, atol=0)


def test_additivity_over_splits():
    rng = np.random.default_rng(11)
    mu = lebesgue()
    for _ in range(200):
        g = random_function(rng).log1p_abs()
        c = float(rng.uniform(0.01, 0.99))
        whole = integrate(g, mu)
        a = integrate_over(g, mu, 0.0, c)
        b = integrate_over(g, mu, c, 1.0)
        assert abs(whole.value - a.value - b.value) <= 2 * (whole.err + a.err + b.err) + 1e-14


def test_monotonicity():
    rng = np.random.default_rng(12)
    mu = lebesgue()
    for _ in range(100):
        f = random_function(rng)
        g1, g2 = f.log1p_abs(), (f * 2.0).log1p_abs()
        r1, r2 = integrate(g1, mu), integrate(g2, mu)
        assert r1.value <= r2.value + r1.err + r2.err


@settings(max_examples=60, deadline=None)
@given(p=st.floats(-3.0, 3.0), c=st.floats(-3.0, 3.0))
def test_divergence_matches_analytic_rules(p, c):
    from logspace.oracle import expinv_integrable, power_integrable

    mu = lebesgue()
    r = integrate(PiecewiseFn((0.0, 1.0), (Power(1.0, p),)), mu)
    assert isinstance(r, Finite) == power_integrable(p)
    r = integrate(PiecewiseFn((0.0, 1.0), (ExpInv(c),)), mu)
    assert isinstance(r, Finite) == expinv_integrable(c)


def test_with_density_atomic():
    nu = with_density(atomic([0.5, 0.5]), np.array([0.6, 1.4]))
    assert nu.weights == (0.3, 0.7)
    assert exhaustive_match(nu.weights, (0.7, 0.3)) == (1, 0)
