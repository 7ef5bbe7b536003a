"""The log F-norm, its nu-side forms, L_p norms and the F-norm axiom suite."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .measure_core import (
    ABS_TOL,
    Divergent,
    Finite,
    IntegralResult,
    MeasureSpace,
    PiecewiseFn,
    PreconditionError,
    integrate,
)


@dataclass(frozen=True)
class Infinite:
    witness: str
    reason: object = None  # the AnalyticRule or RefinementGrowth behind the verdict

    @property
    def is_finite(self) -> bool:
        return False

    @property
    def value(self) -> float:
        return math.inf


NormValue = Union[Finite, Infinite]


def as_norm(r: IntegralResult) -> NormValue:
    if isinstance(r, Divergent):
        return Infinite(r.witness, r.reason)
    return Finite(max(r.value, 0.0), r.err)


def errs(*norms: NormValue) -> float:
    return math.fsum(n.err for n in norms if isinstance(n, Finite))


# pointwise helpers shared by piecewise and atomic representations


def log1p_abs(f):
    if isinstance(f, PiecewiseFn):
        return f.log1p_abs()
    return np.log1p(np.abs(np.asarray(f, dtype=float)))


def abs_pow(f, q: float):
    if isinstance(f, PiecewiseFn):
        return f.abs_pow(q)
    with np.errstate(divide="ignore"):
        return np.power(np.abs(np.asarray(f, dtype=float)), q)


def mul(f, g):
    if isinstance(f, PiecewiseFn) or isinstance(g, PiecewiseFn):
        if not isinstance(f, PiecewiseFn):
            f, g = g, f
        return f * g
    return np.asarray(f, dtype=float) * np.asarray(g, dtype=float)


def is_zero(f) -> bool:
    if isinstance(f, PiecewiseFn):
        return f.is_zero
    return bool(np.all(np.asarray(f) == 0))


# norms


def lognorm(f, mu: MeasureSpace) -> NormValue:
    """``int log(1 + |f|) d mu``; ``Infinite`` iff ``f`` is not log-integrable."""
    return as_norm(integrate(log1p_abs(f), mu))


def lognorm_nu(f, mu: MeasureSpace, h) -> NormValue:
    """``int log(1 + |f|) d nu`` computed as ``int h log(1 + |f|) d mu``."""
    return as_norm(integrate(mul(h, log1p_abs(f)), mu))


def pnorm(f, mu: MeasureSpace, p: float) -> NormValue:
    if p < 1:
        raise PreconditionError(f"p must be >= 1, got {p}")
    r = integrate(abs_pow(f, p), mu)
    if isinstance(r, Divergent):
        return Infinite(r.witness, r.reason)
    v = max(r.value, 0.0)
    if v == 0.0:
        return Finite(0.0, r.err ** (1.0 / p))
    root = v ** (1.0 / p)
    return Finite(root, root * r.err / (p * v))


# axiom suite


@dataclass
class AxiomTally:
    passed: int = 0
    failed: int = 0
    vacuous: int = 0
    witnesses: list = field(default_factory=list)

    def record(self, ok: bool, witness=None) -> None:
        if ok:
            self.passed += 1
        else:
            self.failed += 1
            if len(self.witnesses) < 5:
                self.witnesses.append(witness)


@dataclass
class AxiomReport:
    trials: int
    axioms: dict[str, AxiomTally]
    max_triangle_excess: float = 0.0  # (lhs - rhs) / combined err, worst case

    @property
    def ok(self) -> bool:
        return all(t.failed == 0 for t in self.axioms.values())

    def summary(self) -> dict:
        return {
            "trials": self.trials,
            "max_triangle_excess": self.max_triangle_excess,
            **{k: {"passed": t.passed, "failed": t.failed, "vacuous": t.vacuous} for k, t in self.axioms.items()},
        }


DYADIC_DEPTH = 40
SMALL = 1e-6


def axiom_suite(mu: MeasureSpace, sampler, trials: int,
                norm: Optional[Callable] = None) -> AxiomReport:
    """Check F-norm axioms (i)-(iv) on ``trials`` seeded draws.

    ``norm(f)`` defaults to :func:`lognorm` on ``mu``; failures are recorded
    with their draws rather than raised.
    """
    if norm is None:
        norm = lambda f: lognorm(f, mu)  # noqa: E731
    tallies = {name: AxiomTally() for name in ("i", "ii", "iii", "iv")}
    worst = 0.0
    for t in range(trials):
        f, g, alpha = sampler.draw()
        nf = norm(f)
        if not nf.is_finite:
            for tally in tallies.values():
                tally.record(False, (t, "infinite norm", nf.witness))
            continue

        # (i) definiteness
        if is_zero(f):
            tallies["i"].vacuous += 1
        else:
            tallies["i"].record(nf.value > nf.err + ABS_TOL, (t, "norm of nonzero f", nf.value))

        # (ii) balance under |alpha| <= 1
        na = norm(mul(f, alpha) if not isinstance(f, PiecewiseFn) else f * alpha)
        tallies["ii"].record(na.is_finite and na.value <= nf.value + errs(na, nf),
                             (t, alpha, na.value, nf.value))

        # (iii) dyadic decay
        prev = nf
        reached = prev.value < SMALL
        monotone = True
        for k in range(1, DYADIC_DEPTH + 1):
            if reached:
                break
            nk = norm(f * 2.0**-k if isinstance(f, PiecewiseFn) else np.asarray(f) * 2.0**-k)
            if not nk.is_finite or nk.value > prev.value + errs(nk, prev):
                monotone = False
                break
            reached = nk.value < SMALL
            prev = nk
        tallies["iii"].record(monotone and reached, (t, k, prev.value))

        # (iv) triangle inequality
        s = f + g if isinstance(f, PiecewiseFn) else np.asarray(f) + np.asarray(g)
        ns, ng = norm(s), norm(g)
        if not (ns.is_finite and ng.is_finite):
            tallies["iv"].record(False, (t, "infinite norm"))
            continue
        slack = errs(ns, nf, ng)
        excess = ns.value - nf.value - ng.value
        if excess > 0:
            worst = max(worst, excess / slack if slack > 0 else math.inf)
        tallies["iv"].record(excess <= slack, (t, ns.value, nf.value, ng.value))
    return AxiomReport(trials, tallies, worst)
