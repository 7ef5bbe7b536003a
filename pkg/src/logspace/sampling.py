"""Seeded random draws of piecewise functions, densities and atomic spaces."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .forms import Affine, Const, Power
from .measure_core import AtomicSpace, ContinuumSpace, PiecewiseFn, atomic

COEF_RANGE = (1e-3, 1e3)
EXP_RANGE = (-0.9, 3.0)


def _log_uniform(rng: np.random.Generator, lo: float, hi: float) -> float:
    return float(math.exp(rng.uniform(math.log(lo), math.log(hi))))


def random_breaks(rng: np.random.Generator, lo: float, hi: float, max_segments: int) -> list[float]:
    n = int(rng.integers(1, max_segments + 1))
    inner = sorted(set(np.round(rng.uniform(lo, hi, n - 1), 12)) - {lo, hi})
    return [lo, *inner, hi]


def random_function(
    rng: np.random.Generator,
    lo: float = 0.0,
    hi: float = 1.0,
    max_segments: int = 5,
    kinds: tuple[str, ...] = ("const", "affine", "power"),
    exp_range: tuple[float, float] = EXP_RANGE,
    coef_range: tuple[float, float] = COEF_RANGE,
    positive: bool = False,
) -> PiecewiseFn:
    """Piecewise function with log-uniform coefficients.

    With ``positive=False`` coefficients carry random signs; affine segments
    are drawn through their endpoint values so positivity is easy to honour.
    """
    br = random_breaks(rng, lo, hi, max_segments)
    forms = []
    for a, b in zip(br, br[1:]):
        kind = kinds[int(rng.integers(len(kinds)))]

        def coef():
            c = _log_uniform(rng, *coef_range)
            return c if positive or rng.random() < 0.5 else -c

        if kind == "const":
            forms.append(Const(coef()))
        elif kind == "affine":
            va, vb = coef(), coef()
            slope = (vb - va) / (b - a)
            forms.append(Affine(slope, va - slope * a))
        elif kind == "power":
            forms.append(Power(coef(), float(rng.uniform(*exp_range))))
        else:
            raise ValueError(kind)
    return PiecewiseFn(tuple(br), tuple(forms), positive)


def random_density(rng: np.random.Generator, lo: float = 0.0, hi: float = 1.0, **kw) -> PiecewiseFn:
    kw.setdefault("coef_range", (1e-2, 1e2))
    return random_function(rng, lo, hi, positive=True, **kw)


def normalized(density: PiecewiseFn, mass: float = 1.0) -> PiecewiseFn:
    """Rescale a positive density so that it integrates to ``mass``."""
    current = ContinuumSpace(density).mass
    return density * (mass / current)


def random_atomic(rng: np.random.Generator, max_atoms: int = 8) -> AtomicSpace:
    n = int(rng.integers(1, max_atoms + 1))
    # quantized weights so that exact repeats occur
    w = rng.integers(1, 6, n) / 10.0
    return atomic(list(w))


@dataclass
class Sampler:
    """Deterministic stream of ``(f, g, alpha)`` draws for the axiom suites."""

    seed: int = 42
    lo: float = 0.0
    hi: float = 1.0
    options: dict = field(default_factory=dict)
    zero_only: bool = False
    atoms: Optional[int] = None

    def __post_init__(self):
        self.rng = np.random.default_rng(self.seed)

    def function(self):
        if self.atoms is not None:
            if self.zero_only:
                return np.zeros(self.atoms)
            c = np.exp(self.rng.uniform(math.log(COEF_RANGE[0]), math.log(COEF_RANGE[1]), self.atoms))
            return c * self.rng.choice([-1.0, 1.0], self.atoms)
        if self.zero_only:
            return PiecewiseFn.constant(0.0, self.lo, self.hi)
        return random_function(self.rng, self.lo, self.hi, **self.options)

    def draw(self):
        f = self.function()
        g = self.function()
        alpha = float(self.rng.uniform(-1.0, 1.0))
        return f, g, alpha
