import math

import numpy as np
import pytest

from logspace.fnorm import Infinite, axiom_suite, lognorm, lognorm_nu, pnorm
from logspace.forms import Const, ExpInv, Power
from logspace.measure_core import Finite, PiecewiseFn, PreconditionError, atomic, lebesgue
from logspace.sampling import Sampler, random_function

MU = lebesgue()


def test_lognorm_examples():
    assert lognorm(PiecewiseFn.constant(0.0), MU) == Finite(0.0, 0.0)
    r = lognorm(PiecewiseFn((0.0, 1.0), (Power(1.0, -1.0),)), MU)
    assert abs(r.value - 2 * math.log(2)) <= 1e-10
    assert isinstance(lognorm(PiecewiseFn((0.0, 1.0), (ExpInv(1.0),)), MU), Infinite)


def test_lognorm_atomic():
    r = lognorm(np.array([1.0, 3.0]), atomic([0.5, 0.5]))
    assert r.value == pytest.approx(0.5 * math.log(2) + 0.5 * math.log(4), rel=1e-15)


def test_lognorm_nu_examples():
    h = PiecewiseFn((0.0, 1.0), (Power(2.0, 1.0),), positive=True)
    assert lognorm_nu(PiecewiseFn.constant(0.0), MU, h).value == 0.0
    r = lognorm_nu(PiecewiseFn.constant(math.e - 1), MU, h)
    assert abs(r.value - 1.0) <= 1e-10


def test_lognorm_nu_reduces_for_unit_density():
    rng = np.random.default_rng(1)
    one = PiecewiseFn.constant(1.0, positive=True)
    for _ in range(100):
        f = random_function(rng)
        a, b = lognorm_nu(f, MU, one), lognorm(f, MU)
        assert abs(a.value - b.value) <= a.err + b.err + 1e-15


def test_pnorm_examples():
    assert pnorm(PiecewiseFn.constant(0.0), MU, 2.0).value == 0.0
    for p in (1.0, 2.0, 3.5):
        assert pnorm(PiecewiseFn.constant(1.0), MU, p).value == pytest.approx(1.0, abs=1e-12)
    r = pnorm(PiecewiseFn((0.0, 1.0), (Power(1.0, 1.0),)), MU, 2.0)
    assert abs(r.value - 1 / math.sqrt(3)) <= 1e-10


def test_pnorm_rejects_small_p():
    with pytest.raises(PreconditionError):
        pnorm(PiecewiseFn.constant(1.0), MU, 0.5)


def test_pnorm_infinite():
    assert isinstance(pnorm(PiecewiseFn((0.0, 1.0), (Power(1.0, -0.6),)), MU, 2.0), Infinite)


def test_lognorm_below_l1_norm():
    # log(1 + t) <= t, so the log norm never exceeds the L_1 norm
    rng = np.random.default_rng(2)
    for _ in range(50):
        f = random_function(rng)
        a, b = lognorm(f, MU), pnorm(f, MU, 1.0)
        assert a.value <= b.value + a.err + b.err


def test_doubling_at_most_doubles():
    # log(1 + 2t) <= 2 log(1 + t)
    rng = np.random.default_rng(3)
    for _ in range(50):
        f = random_function(rng)
        a, b = lognorm(f * 2.0, MU), lognorm(f, MU)
        assert a.value <= 2 * b.value + a.err + 2 * b.err


def test_axiom_suite_small_run():
    report = axiom_suite(MU, Sampler(seed=42), 60)
    assert report.ok, report.summary()


def test_axiom_suite_atomic():
    report = axiom_suite(atomic([0.2, 0.3, 0.5]), Sampler(seed=5, atoms=3), 100)
    assert report.ok


def test_zero_sampler_is_vacuous_for_definiteness():
    report = axiom_suite(MU, Sampler(seed=1, zero_only=True), 10)
    assert report.ok
    assert report.axioms["i"].vacuous == 10 and report.axioms["i"].passed == 0
    for k in ("ii", "iii", "iv"):
        assert report.axioms[k].passed == 10


def test_triangle_on_opposite_functions():
    f = PiecewiseFn((0.0, 0.5, 1.0), (Const(3.0), Power(2.0, -0.5)))
    zero = lognorm(f + f * -1.0, MU)
    assert zero.value == 0.0 <= 2 * lognorm(f, MU).value


def test_lp_functions_are_log_integrable():
    # the inclusion itself, on unit mass: finite L_p norm implies a finite log norm
    rng = np.random.default_rng(4)
    for p in (1.0, 2.0, 3.0):
        for _ in range(20):
            f = random_function(rng)
            if pnorm(f, MU, p).is_finite:
                assert lognorm(f, MU).is_finite
    # and it is strict: x^-0.6 is log-integrable but not square-integrable
    g = PiecewiseFn((0.0, 1.0), (Power(1.0, -0.6),))
    assert isinstance(pnorm(g, MU, 2.0), Infinite) and lognorm(g, MU).is_finite
