"""The weighted space of ``f`` with ``int log(1 + h|f|) d mu < inf``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .fnorm import AxiomReport, Infinite, NormValue, as_norm, axiom_suite, errs, log1p_abs, lognorm, mul
from .measure_core import (
    AtomicSpace,
    Divergent,
    MeasureSpace,
    PiecewiseFn,
    PreconditionError,
    integrate,
    invert_density,
)
from .quadrature import AnalyticRule


@dataclass(frozen=True)
class WeightedSpace:
    """``base`` is ``mu``; ``weight`` is ``h = d nu / d mu``."""

    base: MeasureSpace
    weight: Union[PiecewiseFn, np.ndarray]

    def __post_init__(self):
        if isinstance(self.base, AtomicSpace):
            w = np.asarray(self.weight, dtype=float)
            if w.shape != (self.base.size,) or np.any(w <= 0):
                raise PreconditionError("atomic weight needs one positive value per atom")
            object.__setattr__(self, "weight", w)
        elif not (isinstance(self.weight, PiecewiseFn) and self.weight.positive):
            raise PreconditionError("weight must be a positive piecewise function")
        nu_mass = integrate(self.weight, self.base)
        if isinstance(nu_mass, Divergent):
            raise PreconditionError(f"int h d mu diverges: {nu_mass.witness}")

    @property
    def inverse_weight(self):
        return invert_density(self.weight)


def weighted_norm(W: WeightedSpace, f) -> NormValue:
    """``int log(1 + h|f|) d mu``."""
    return as_norm(integrate(log1p_abs(mul(W.weight, f)), W.base))


def weighted_axiom_suite(W: WeightedSpace, sampler, trials: int) -> AxiomReport:
    return axiom_suite(W.base, sampler, trials, norm=lambda f: weighted_norm(W, f))


@dataclass(frozen=True)
class Residual:
    residual: float
    lhs: NormValue
    rhs: NormValue

    @property
    def err(self) -> float:
        return errs(self.lhs, self.rhs)

    @property
    def holds(self) -> bool:
        if not (self.lhs.is_finite or self.rhs.is_finite):
            return True
        return self.residual <= self.err + 1e-12

    def as_dict(self) -> dict:
        return {"residual": self.residual, "lhs": self.lhs.value, "rhs": self.rhs.value, "err": self.err}


def _residual(lhs: NormValue, rhs: NormValue) -> Residual:
    if lhs.is_finite and rhs.is_finite:
        return Residual(abs(lhs.value - rhs.value), lhs, rhs)
    return Residual(0.0 if lhs.is_finite == rhs.is_finite else math.inf, lhs, rhs)


def check_weighted_isometry(W: WeightedSpace, f) -> Residual:
    """``|weighted_norm(h^{-1} f) - lognorm(f)|``: ``f -> f/h`` maps L_log onto the weighted space."""
    return _residual(weighted_norm(W, mul(W.inverse_weight, f)), lognorm(f, W.base))


def transfer_residual(W: WeightedSpace, f) -> Residual:
    """``|weighted_norm(f) - lognorm(h f)|``, the same identity read the other way."""
    return _residual(weighted_norm(W, f), lognorm(mul(W.weight, f), W.base))


@dataclass(frozen=True)
class Closedness:
    closed: bool
    witness: NormValue

    def __bool__(self) -> bool:
        return self.closed


def check_algebra_closed(W: WeightedSpace) -> Closedness:
    """The space is closed under products iff ``1/h`` is log-integrable."""
    n = lognorm(W.inverse_weight, W.base)
    return Closedness(n.is_finite, n)


@dataclass(frozen=True)
class ProductBound:
    lhs: NormValue
    rhs: float
    err: float

    @property
    def holds(self) -> bool:
        return math.isinf(self.rhs) or (self.lhs.is_finite and self.lhs.value <= self.rhs + self.err)

    def as_dict(self) -> dict:
        return {"lhs": self.lhs.value, "rhs": self.rhs, "err": self.err, "holds": self.holds}


def product_bound_check(W: WeightedSpace, f, g) -> ProductBound:
    """``weighted_norm(fg) <= lognorm(hf) + lognorm(hg) + lognorm(1/h)``."""
    lhs = weighted_norm(W, mul(f, g))
    parts = [lognorm(mul(W.weight, f), W.base), lognorm(mul(W.weight, g), W.base), lognorm(W.inverse_weight, W.base)]
    rhs = math.fsum(p.value for p in parts) if all(p.is_finite for p in parts) else math.inf
    return ProductBound(lhs, rhs, errs(lhs, *parts))


@dataclass(frozen=True)
class Counterexample:
    f: object
    norm_f: NormValue
    norm_f2: NormValue

    @property
    def certified(self) -> bool:
        """The divergence of ``f**2`` rests on an analytic rule, not a numeric trend."""
        return isinstance(self.norm_f2, Infinite) and isinstance(self.norm_f2.reason, AnalyticRule)


def build_counterexample(W: WeightedSpace) -> Counterexample:
    """``f = 1/h`` lies in the space while ``f**2`` does not."""
    if check_algebra_closed(W):
        raise PreconditionError("1/h is log-integrable, so the space is closed under products")
    f = W.inverse_weight
    return Counterexample(f, weighted_norm(W, f), weighted_norm(W, mul(f, f)))
