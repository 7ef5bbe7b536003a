"""Batch property runs over seeded random scenarios."""

from __future__ import annotations

import math

import numpy as np

from .components import classify_pair
from .fnorm import axiom_suite
from .forms import Affine, Log1pAbs, Power
from .isometry import check_equivalences, region_split
from .measure_core import Finite, PiecewiseFn, atomic, integrate, lebesgue, with_density
from .oracle import closed_form_integral, exhaustive_match
from .sampling import Sampler, normalized, random_atomic, random_density
from .weighted import WeightedSpace, weighted_axiom_suite

ORACLE_TOL = 1e-8
IDENTITY_TOL = 1e-9


def catalog_case(rng: np.random.Generator) -> tuple[str, dict, PiecewiseFn]:
    """A random closed-form oracle entry together with the matching integrand."""
    kind = ("log1p_c_over_x", "log1p_cx", "power", "x_log_c", "affine")[int(rng.integers(5))]
    if kind == "log1p_c_over_x":
        c = float(np.exp(rng.uniform(-3, 3)))
        return kind, {"c": c}, PiecewiseFn((0.0, 1.0), (Log1pAbs(Power(c, -1.0)),))
    if kind == "log1p_cx":
        c = float(np.exp(rng.uniform(-3, 3)))
        return kind, {"c": c}, PiecewiseFn((0.0, 1.0), (Log1pAbs(Affine(c, 0.0)),))
    if kind == "power":
        p = float(rng.uniform(-0.95, 3.0))
        return kind, {"p": p}, PiecewiseFn((0.0, 1.0), (Power(1.0, p),))
    if kind == "x_log_c":
        c = float(np.exp(rng.uniform(-3, 3)))
        return kind, {"c": c}, PiecewiseFn((0.0, 1.0), (Affine(math.log(c), 0.0),))
    a, b = (float(v) for v in rng.uniform(-5, 5, 2))
    return kind, {"a": a, "b": b}, PiecewiseFn((0.0, 1.0), (Affine(a, b),))


def run_suite(seed: int = 42, count: int = 200) -> dict:
    """Axiom suites, equivalence-bundle agreement, oracle and atomic cross-checks.

    Every section reports its failures; the run passes when all are zero.
    """
    rng = np.random.default_rng(seed)
    mu = lebesgue()

    plain = axiom_suite(mu, Sampler(seed=seed), count)
    w = WeightedSpace(mu, PiecewiseFn((0.0, 1.0), (Power(2.0, 1.0),), positive=True))
    weighted = weighted_axiom_suite(w, Sampler(seed=seed + 1), count)

    disagree, identity_worst = 0, 0.0
    for i in range(count):
        dens = random_density(rng)
        if i % 2 == 0:
            dens = normalized(dens)
        nu = with_density(mu, dens)
        eq = check_equivalences(mu, nu)
        disagree += not eq.bundle_agrees
        bal = region_split(dens, mu)
        identity_worst = max(identity_worst,
                             abs(bal.c1_ratio - 1.0 - (bal.mass_gt - bal.mass_lt) / bal.mu_total))

    oracle_fail, oracle_worst = 0, 0.0
    for _ in range(count):
        kind, params, g = catalog_case(rng)
        got = integrate(g, mu)
        want = closed_form_integral(kind, params, (0.0, 1.0)).value
        diff = abs(got.value - want) if isinstance(got, Finite) else math.inf
        oracle_worst = max(oracle_worst, diff)
        oracle_fail += diff > ORACLE_TOL

    atomic_fail = 0
    for _ in range(count):
        a = random_atomic(rng)
        b = random_atomic(rng) if rng.random() < 0.5 else _shuffled(rng, a)
        truth = exhaustive_match(a.weights, b.weights) is not None
        atomic_fail += classify_pair(a, b).isometric != truth

    sections = {
        "axioms_plain": plain.summary(),
        "axioms_weighted": weighted.summary(),
        "equivalences": {"scenarios": count, "disagreements": disagree,
                         "identity_worst": identity_worst,
                         "identity_failures": int(identity_worst > IDENTITY_TOL)},
        "oracle": {"cases": count, "failures": oracle_fail, "worst": oracle_worst},
        "atomic": {"instances": count, "failures": atomic_fail},
    }
    failures = {
        "axioms_plain": sum(t.failed for t in plain.axioms.values()),
        "axioms_weighted": sum(t.failed for t in weighted.axioms.values()),
        "equivalences": disagree + sections["equivalences"]["identity_failures"],
        "oracle": oracle_fail,
        "atomic": atomic_fail,
    }
    return {"count": count, "seed": seed, "sections": sections, "failures": failures,
            "passed": all(v == 0 for v in failures.values())}


def _shuffled(rng: np.random.Generator, space):
    order = rng.permutation(space.size)
    return atomic([space.weights[i] for i in order])
