import math

import numpy as np
import pytest

from logspace.fnorm import lognorm
from logspace.forms import Affine, Const, Power
from logspace.isometry import (
    InfiniteMassError,
    MonotoneMap,
    NoAutomorphism,
    NotIsometric,
    Permutation,
    apply_J,
    build_transport,
    check_c1,
    check_equivalences,
    lp_isometry_check,
    region_split,
)
from logspace.measure_core import PiecewiseFn, atomic, lebesgue, with_density
from logspace.oracle import exhaustive_match
from logspace.sampling import normalized, random_density, random_function

MU = lebesgue()
PAPER_H = PiecewiseFn((0.0, 1 / 25, 1.0), (Power(1.0, -0.5), Affine(-25 / 32, 33 / 32)), positive=True)
TWO_X = PiecewiseFn((0.0, 1.0), (Power(2.0, 1.0),), positive=True)
ASYM = PiecewiseFn((0.0, 0.2, 1.0), (Const(2.0), Const(0.75)), positive=True)


def test_region_split_unit_density():
    r = region_split(PiecewiseFn.constant(1.0, positive=True), MU)
    assert (r.mass_gt, r.mass_lt, r.s_gt, r.s_lt) == (0.0, 0.0, 0.0, 0.0)
    assert r.mu_eq == pytest.approx(1.0) and r.mu_gt == r.mu_lt == 0.0


def test_region_split_two_x():
    r = region_split(TWO_X, MU)
    assert r.mu_gt == pytest.approx(0.5, abs=1e-12)
    assert r.mass_gt == pytest.approx(0.25, abs=1e-12) and r.mass_lt == pytest.approx(0.25, abs=1e-12)
    assert r.s_gt == pytest.approx(0.5, abs=1e-12) and r.s_lt == pytest.approx(0.5, abs=1e-12)


def test_region_split_identity_holds_for_random_densities():
    # c1_ratio - 1 = (B_gt - B_lt) / mu(Omega) on every density
    rng = np.random.default_rng(21)
    for _ in range(50):
        r = region_split(random_density(rng), MU)
        assert abs((r.c1_ratio - 1.0) - (r.mass_gt - r.mass_lt) / r.mu_total) <= 1e-9


def test_region_split_atomic():
    r = region_split(np.array([2.0, 0.5, 1.0]), atomic([0.25, 0.5, 0.25]))
    assert r.mass_gt == 0.25 and r.mass_lt == 0.25 and r.mu_eq == 0.25


def test_check_c1_examples():
    r = check_c1(PAPER_H, MU)
    assert r.holds and abs(r.ratio - 1.0) <= 1e-8
    assert check_c1(PiecewiseFn.constant(1.0, positive=True), MU).holds
    r = check_c1(PiecewiseFn((0.0, 1.0), (Power(1.0, 1.0),), positive=True), MU)
    assert not r.holds and r.ratio == pytest.approx(0.5, abs=1e-12)


def test_check_c1_infinite_mass():
    with pytest.raises(InfiniteMassError):
        check_c1(PiecewiseFn((0.0, 1.0), (Power(1.0, -1.5),), positive=True), MU)


def test_equivalences_unit():
    e = check_equivalences(MU, MU)
    assert all((e.ii, e.iii, e.iv, e.v_literal, e.v_corrected, e.vi))


def test_equivalences_two_x():
    e = check_equivalences(MU, with_density(MU, TWO_X))
    assert all((e.ii, e.iii, e.iv, e.v_literal, e.v_corrected, e.vi))


def test_equivalences_asymmetric_flags_literal_form():
    e = check_equivalences(MU, with_density(MU, ASYM))
    assert e.ii and e.iii and e.iv and e.v_corrected and e.vi
    assert not e.v_literal and e.literal_discrepancy
    assert e.values["s_gt"] == pytest.approx(1.0, abs=1e-12)
    assert e.values["s_lt"] == pytest.approx(0.25, abs=1e-12)


def test_equivalences_agree_on_random_densities():
    rng = np.random.default_rng(8)
    for k in range(30):
        h = random_density(rng)
        if k % 2:
            h = normalized(h)
        e = check_equivalences(MU, with_density(MU, h))
        assert e.bundle_agrees and e.ii == e.vi


def test_transport_identity():
    t = build_transport(MU, MU)
    assert isinstance(t, MonotoneMap) and t.identity
    x = np.linspace(0, 1, 7)
    assert np.array_equal(t(x), x)


def test_transport_square_root():
    t = build_transport(MU, with_density(MU, TWO_X))
    x = np.linspace(0.0, 1.0, 100)
    assert np.max(np.abs(t(x) - np.sqrt(x))) <= 1e-10
    assert np.max(np.abs(t.inverse(np.sqrt(x)) - x)) <= 1e-10
    for a, b in [(0.0, 0.3), (0.2, 0.9), (0.5, 0.51)]:
        assert t.measure_residual(a, b) <= 1e-12


def test_transport_atomic_permutation():
    mu, nu = atomic([0.2, 0.3, 0.5]), atomic([0.5, 0.2, 0.3])
    t = build_transport(mu, nu)
    assert isinstance(t, Permutation) and t.sigma == (1, 2, 0)
    assert t.sigma == exhaustive_match(mu.weights, nu.weights)


def test_transport_refusals():
    with pytest.raises(NotIsometric):
        build_transport(MU, with_density(MU, PiecewiseFn.constant(0.5, positive=True)))
    with pytest.raises(NoAutomorphism):
        build_transport(atomic([0.5, 0.5]), atomic([0.3, 0.7]))


def test_apply_J_identity_and_square_root():
    f = random_function(np.random.default_rng(4))
    assert apply_J(build_transport(MU, MU), f) is f
    nu = with_density(MU, TWO_X)
    jf = apply_J(build_transport(MU, nu), PiecewiseFn((0.0, 1.0), (Power(1.0, 1.0),)))
    x = np.linspace(0.01, 1.0, 50)
    assert np.max(np.abs(jf(x) - x**2)) <= 1e-10
    assert abs(lognorm(jf, nu).value - (2 * math.log(2) - 1)) <= 1e-9


def test_apply_J_atomic():
    mu, nu = atomic([0.2, 0.3, 0.5]), atomic([0.5, 0.2, 0.3])
    f = np.array([1.0, 2.0, 3.0])
    jf = apply_J(build_transport(mu, nu), f)
    assert list(jf) == [3.0, 1.0, 2.0]
    assert math.fsum(jf * nu.weights) == math.fsum(f * mu.weights)


def test_apply_J_preserves_norms():
    rng = np.random.default_rng(9)
    for _ in range(5):
        nu = with_density(MU, normalized(random_density(rng)))
        t = build_transport(MU, nu)
        for _ in range(3):
            f = random_function(rng)
            assert abs(lognorm(f, MU).value - lognorm(apply_J(t, f), nu).value) <= 1e-6


def test_lp_isometry():
    rng = np.random.default_rng(10)
    nu = with_density(MU, TWO_X)
    assert lp_isometry_check(MU, nu, 2.0, PiecewiseFn.constant(0.0)).residual == 0.0
    for p in (1.0, 2.0, 3.0):
        f = random_function(rng, exp_range=(0.0, 2.0))
        r = lp_isometry_check(MU, with_density(MU, random_density(rng)), p, f)
        assert r.residual <= 1e-10


def test_apply_J_sign_change_into_steep_singularity():
    # a zero of f lands where the target density blows up like y^-0.87
    nu = with_density(MU, normalized(PiecewiseFn((0.0, 1.0), (Power(1.0, -0.87),), positive=True)))
    f = PiecewiseFn((0.0, 0.6, 1.0), (Affine(5.0, -1.0), Const(30.0)))
    jf = apply_J(build_transport(MU, nu), f)
    assert abs(lognorm(f, MU).value - lognorm(jf, nu).value) <= 1e-8


def test_measure_residual_near_steep_singularity():
    nu = with_density(MU, normalized(PiecewiseFn((0.0, 0.5, 1.0), (Const(1.0), Power(0.1, -0.87)), positive=True)))
    t = build_transport(MU, nu)
    assert t.measure_residual(0.3, 0.6) <= 1e-12
