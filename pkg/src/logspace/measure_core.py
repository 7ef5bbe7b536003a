"""Piecewise functions, desk-scale measure spaces and the integration front end."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.optimize import brentq

from .forms import (
    AbsPow,
    Affine,
    Const,
    ExpInv,
    Form,
    Log1pAbs,
    Power,
    Product,
    Reciprocal,
    Sum,
    abs_pow_of,
    is_bounded,
)
from .quadrature import (
    ABS_TOL,
    REL_TOL,
    AnalyticRule,
    Divergent,
    Finite,
    IntegralResult,
    IntegrationError,
    Piece,
    RefinementGrowth,
    integrate_pieces,
)

__all__ = [
    "ABS_TOL", "REL_TOL", "Affine", "AnalyticRule", "AtomicSpace", "Bounded",
    "ClassificationError", "Const", "ContinuumSpace", "Divergent", "DomainError",
    "ExpInv", "Finite", "IntegralResult", "IntegrationError", "Interval",
    "MeasureSpace", "PiecewiseFn", "Power", "PreconditionError",
    "RefinementGrowth", "Unbounded", "atomic", "density_ratio", "ess_sup_classify",
    "evaluate", "integrate", "invert_density", "lebesgue", "with_density",
]


class DomainError(ValueError):
    pass


class PreconditionError(ValueError):
    pass


class ClassificationError(ValueError):
    pass


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo


Scalar = Union[int, float]


@dataclass(frozen=True)
class PiecewiseFn:
    """Function on ``[breaks[0], breaks[-1]]`` given by one form per segment.

    Segments are half-open ``[lo, hi)`` with the last one closed.  With
    ``positive=True`` every form is checked to be positive on its segment.
    """

    breaks: tuple[float, ...]
    forms: tuple[Form, ...]
    positive: bool = False

    def __post_init__(self):
        br = tuple(float(b) for b in self.breaks)
        if len(br) != len(self.forms) + 1 or not self.forms:
            raise ValueError("need len(breaks) == len(forms) + 1 >= 2")
        if any(b <= a for a, b in zip(br, br[1:])):
            raise ValueError(f"breakpoints must be strictly increasing: {br}")
        object.__setattr__(self, "breaks", br)
        object.__setattr__(self, "forms", tuple(f.bind(lo) for f, lo in zip(self.forms, br)))
        if self.positive:
            for lo, hi, f in self.segments:
                if not f.is_positive_on(lo, hi):
                    raise ValueError(f"form {f!r} is not positive on [{lo}, {hi}]")

    # construction ---------------------------------------------------------

    @classmethod
    def from_segments(cls, segments: Sequence[tuple[float, float, Form]], positive: bool = False) -> "PiecewiseFn":
        breaks = [segments[0][0]]
        for lo, hi, _ in segments:
            if lo != breaks[-1]:
                raise ValueError(f"segments must be contiguous; gap at {breaks[-1]} / {lo}")
            breaks.append(hi)
        return cls(tuple(breaks), tuple(f for _, _, f in segments), positive)

    @classmethod
    def constant(cls, c: float, lo: float = 0.0, hi: float = 1.0, positive: Optional[bool] = None) -> "PiecewiseFn":
        return cls((lo, hi), (Const(float(c)),), c > 0 if positive is None else positive)

    @property
    def domain(self) -> Interval:
        return Interval(self.breaks[0], self.breaks[-1])

    @property
    def segments(self) -> list[tuple[float, float, Form]]:
        return [(lo, hi, f) for lo, hi, f in zip(self.breaks, self.breaks[1:], self.forms)]

    # evaluation -------------------------------------------------------------

    def segment_index(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.breaks[0], self.breaks[-1]
        if np.any((x < lo) | (x > hi)) or np.any(np.isnan(x)):
            bad = x[(x < lo) | (x > hi) | np.isnan(x)]
            raise DomainError(f"x={float(np.ravel(bad)[0])!r} outside [{lo}, {hi}]")
        idx = np.searchsorted(self.breaks, x, side="right") - 1
        return np.minimum(idx, len(self.forms) - 1)

    def __call__(self, x):
        xa = np.asarray(x, dtype=float)
        idx = self.segment_index(xa)
        out = np.empty_like(xa)
        for i in np.unique(idx):
            sel = idx == i
            lo = self.breaks[i]
            out[sel] = self.forms[i].value(lo, xa[sel] - lo)
        return out if out.ndim else float(out)

    # algebra ----------------------------------------------------------------

    def refine(self, breaks: Sequence[float]) -> "PiecewiseFn":
        br = sorted(set(self.breaks) | {float(b) for b in breaks if self.breaks[0] < b < self.breaks[-1]})
        if len(br) == len(self.breaks):
            return self
        forms = [self.forms[int(self.segment_index(lo))] for lo in br[:-1]]
        return PiecewiseFn(tuple(br), tuple(forms), self.positive)

    def _combine(self, other: "PiecewiseFn", op: Callable[[Form, Form], Form], positive: bool) -> "PiecewiseFn":
        if not np.isclose(self.breaks[0], other.breaks[0]) or not np.isclose(self.breaks[-1], other.breaks[-1]):
            raise DomainError(f"domains differ: {self.domain} vs {other.domain}")
        a = self.refine(other.breaks)
        b = other.refine(a.breaks)
        return PiecewiseFn(a.breaks, tuple(op(f, g) for f, g in zip(a.forms, b.forms)), positive)

    def map(self, fn: Callable[[Form], Form], positive: bool = False) -> "PiecewiseFn":
        return PiecewiseFn(self.breaks, tuple(fn(f) for f in self.forms), positive)

    def __mul__(self, other):
        if isinstance(other, PiecewiseFn):
            return self._combine(other, lambda f, g: Product.of(f, g), self.positive and other.positive)
        c = float(other)
        return self.map(lambda f: Product.of(Const(c), f), self.positive and c > 0)

    __rmul__ = __mul__

    def __add__(self, other):
        if isinstance(other, PiecewiseFn):
            return self._combine(other, lambda f, g: Sum.of(f, g), self.positive and other.positive)
        c = float(other)
        return self.map(lambda f: Sum.of(f, Const(c)), self.positive and c >= 0)

    __radd__ = __add__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other if isinstance(other, PiecewiseFn) else -float(other))

    def reciprocal(self) -> "PiecewiseFn":
        return self.map(lambda f: f.reciprocal(), self.positive)

    def split_at_sign_changes(self) -> "PiecewiseFn":
        """Add breakpoints where a segment crosses zero, so ``|f|`` has no interior kink."""
        if self.positive:
            return self
        roots = [r for lo, hi, f in self.segments for r in zero_crossings(f, lo, hi)]
        return self.refine(roots) if roots else self

    def abs_pow(self, q: float) -> "PiecewiseFn":
        return self.split_at_sign_changes().map(lambda f: abs_pow_of(f, q), self.positive)

    def log1p_abs(self) -> "PiecewiseFn":
        return self.split_at_sign_changes().map(Log1pAbs)

    @property
    def is_zero(self) -> bool:
        """Structurally zero: every segment form is a zero constant."""
        return all(_is_zero_form(f) for f in self.forms)

    def pieces(self, label: str = "") -> list[Piece]:
        out = []
        for lo, hi, f in self.segments:
            out.append(Piece(lo, hi, _bound_value(f, lo), f.asymptote(lo), label))
        return out

    def to_dict(self) -> dict:
        return {
            "breaks": list(self.breaks),
            "forms": [_unbound_dict(f, lo) for lo, _, f in self.segments],
            "positive": self.positive,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PiecewiseFn":
        from .forms import form_from_dict

        return cls(tuple(d["breaks"]), tuple(form_from_dict(x) for x in d["forms"]), bool(d.get("positive", False)))


def _is_zero_form(f: Form) -> bool:
    if isinstance(f, Const):
        return f.c == 0.0
    if isinstance(f, Power):
        return f.c == 0.0
    if isinstance(f, Affine):
        return f.slope == 0.0 and f.intercept == 0.0
    if isinstance(f, Product):
        return any(_is_zero_form(g) for g in f.factors)
    if isinstance(f, (Log1pAbs, AbsPow)):
        return _is_zero_form(f.inner) and (not isinstance(f, AbsPow) or f.q > 0)
    return False


def _unbound_dict(f: Form, lo: float) -> dict:
    anchor = getattr(f, "anchor", lo)
    if anchor is not None and anchor != lo:
        raise TypeError("only forms anchored at their own segment start serialize")
    return f.to_dict()


def _bound_value(f: Form, lo: float):
    return lambda u: f.value(lo, u)


def level_roots(form: Form, level: float, lo: float, hi: float) -> list[float]:
    """Interior solutions of ``form(x) == level``; closed form for the catalog."""
    if isinstance(form, Const):
        return []
    if isinstance(form, Affine):
        if form.slope == 0:
            return []
        xs = [(level - form.intercept) / form.slope]
    elif isinstance(form, Power):
        if form.p == 0 or form.c <= 0 or level <= 0:
            return []
        log_d = math.log(level / form.c) / form.p
        xs = [form.anchor + math.exp(log_d)] if log_d < math.log(hi - form.anchor) + 1.0 else []
    elif isinstance(form, ExpInv):
        if level <= 0 or level == 1.0 or form.c == 0:
            return []
        d = form.c / math.log(level)
        xs = [form.anchor + d] if d > 0 else []
    elif isinstance(form, Reciprocal):
        return level_roots(form.inner, 1.0 / level, lo, hi) if level > 0 else []
    elif isinstance(form, Product) and len(form.factors) == 2 and isinstance(form.factors[0], Const):
        k = form.factors[0].c
        return level_roots(form.factors[1], level / k, lo, hi) if k else []
    elif isinstance(form, AbsPow) and level > 0:
        return level_roots(form.inner, level ** (1.0 / form.q), lo, hi)
    else:
        return _scan_roots(form, level, lo, hi)
    return [x for x in xs if lo < x < hi]


def _scan_roots(form: Form, level: float, lo: float, hi: float) -> list[float]:
    w = hi - lo
    u = np.unique(np.concatenate([w * np.geomspace(1e-12, 1e-3, 64), np.linspace(0.0, w, 2049)[1:]]))
    v = form.value(lo, u) - level
    roots = []
    for k in np.nonzero(np.sign(v[:-1]) * np.sign(v[1:]) < 0)[0]:
        roots.append(lo + brentq(lambda s: float(form.value(lo, np.array([s]))[0] - level), u[k], u[k + 1], xtol=1e-15))
    return roots


def zero_crossings(form: Form, lo: float, hi: float) -> list[float]:
    """Interior points where ``form`` changes sign (exact for affine pieces)."""
    if isinstance(form, Affine):
        roots = level_roots(form, 0.0, lo, hi)
    elif isinstance(form, Product):
        roots = sorted({r for f in form.factors for r in zero_crossings(f, lo, hi)})
    elif isinstance(form, (AbsPow, Log1pAbs)):
        roots = []
    elif isinstance(form, Sum):
        roots = _scan_roots(form, 0.0, lo, hi)
    else:
        roots = []
    margin = 1e-12 * (hi - lo)
    return [r for r in roots if lo + margin < r < hi - margin]


# ---------------------------------------------------------------------------
# measure spaces


@dataclass(frozen=True)
class AtomicSpace:
    weights: tuple[float, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        if not w or any(not (x > 0 and math.isfinite(x)) for x in w):
            raise ValueError(f"atom weights must be positive and finite: {w}")
        if len(self.labels) != len(w):
            raise ValueError("one label per atom")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "labels", tuple(str(x) for x in self.labels))

    @cached_property
    def mass(self) -> float:
        return math.fsum(self.weights)

    @property
    def size(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class ContinuumSpace:
    density: PiecewiseFn

    def __post_init__(self):
        if not self.density.positive:
            raise ValueError("density must carry the positivity flag")

    @property
    def domain(self) -> Interval:
        return self.density.domain

    @cached_property
    def mass_result(self) -> IntegralResult:
        return integrate(1.0, self)

    @cached_property
    def mass(self) -> float:
        r = self.mass_result
        if not isinstance(r, Finite) or not r.value > 0:
            raise ValueError(f"density does not define a finite positive mass: {r}")
        return r.value


MeasureSpace = Union[AtomicSpace, ContinuumSpace]


def lebesgue(lo: float = 0.0, hi: float = 1.0) -> ContinuumSpace:
    return ContinuumSpace(PiecewiseFn.constant(1.0, lo, hi))


def atomic(weights: Sequence[float], labels: Optional[Sequence[str]] = None) -> AtomicSpace:
    labels = labels if labels is not None else [f"a{i + 1}" for i in range(len(weights))]
    return AtomicSpace(tuple(weights), tuple(labels))


def with_density(space: MeasureSpace, h) -> MeasureSpace:
    """The measure ``nu`` with ``d nu / d mu = h``."""
    if isinstance(space, AtomicSpace):
        h = np.asarray(h, dtype=float)
        return AtomicSpace(tuple(np.asarray(space.weights) * h), space.labels)
    if not h.positive:
        raise PreconditionError("h must carry the positivity flag")
    return ContinuumSpace(space.density * h)


def density_ratio(mu: MeasureSpace, nu: MeasureSpace):
    """``d nu / d mu`` for two equivalent spaces over the same domain/atoms."""
    if isinstance(mu, AtomicSpace):
        if not isinstance(nu, AtomicSpace) or nu.size != mu.size:
            raise DomainError("atomic spaces must share their atoms")
        return np.asarray(nu.weights) / np.asarray(mu.weights)
    if not isinstance(nu, ContinuumSpace):
        raise DomainError("cannot compare a continuum with an atomic space")
    return nu.density * mu.density.reciprocal()


# ---------------------------------------------------------------------------
# operations


def evaluate(f: PiecewiseFn, x: float) -> float:
    return float(f(x))


AtomicFn = Union[Sequence[float], np.ndarray]


def integrate(g, space: MeasureSpace, abs_tol: float = ABS_TOL, rel_tol: float = REL_TOL) -> IntegralResult:
    """``int g d space``; divergence is certified, never guessed from a failed run."""
    if isinstance(space, AtomicSpace):
        vals = np.broadcast_to(np.asarray(g, dtype=float), (space.size,))
        if np.any(np.isnan(vals)):
            raise IntegrationError("atom value is NaN", point=float(np.argmax(np.isnan(vals))))
        if np.any(np.isinf(vals)):
            return Divergent(AnalyticRule("an atom of positive mass carries an infinite value"))
        return Finite(math.fsum(vals * np.asarray(space.weights)), 0.0)
    if not isinstance(g, PiecewiseFn):
        g = PiecewiseFn.constant(float(g), space.domain.lo, space.domain.hi)
    if g.is_zero:
        return Finite(0.0, 0.0)
    integrand = g * space.density
    return integrate_pieces(integrand.pieces(), abs_tol, rel_tol)


def integrate_over(g: PiecewiseFn, space: ContinuumSpace, lo: float, hi: float, **kw) -> IntegralResult:
    """Integral restricted to ``[lo, hi]``; empty ranges give ``Finite(0)``."""
    lo, hi = max(lo, space.domain.lo), min(hi, space.domain.hi)
    if not hi > lo:
        return Finite(0.0, 0.0)
    integrand = (g * space.density).refine([lo, hi])
    pieces = [p for p in integrand.pieces() if p.lo >= lo and p.hi <= hi]
    return integrate_pieces(pieces, kw.get("abs_tol", ABS_TOL), kw.get("rel_tol", REL_TOL))


@dataclass(frozen=True)
class Bounded:
    sup: float


@dataclass(frozen=True)
class Unbounded:
    segment: int
    lo: float
    hi: float


def ess_sup_classify(f) -> Union[Bounded, Unbounded]:
    """Exact boundedness verdict from the segment asymptotics.

    The reported ``sup`` is exact for monotone catalog forms and sampled for
    composite ones; the bounded/unbounded decision never is.
    """
    if not isinstance(f, PiecewiseFn):
        vals = np.abs(np.asarray(f, dtype=float))
        if np.any(~np.isfinite(vals)):
            return Unbounded(int(np.argmax(~np.isfinite(vals))), 0.0, 0.0)
        return Bounded(float(vals.max()))
    best = -math.inf
    for i, (lo, hi, form) in enumerate(f.segments):
        a = form.asymptote(lo)
        if a is None:
            raise ClassificationError(f"no asymptotic description for {form!r} at {lo}")
        if not is_bounded(a):
            if not a.exact:
                raise ClassificationError(f"only an upper bound is known for {form!r} at {lo}")
            return Unbounded(i, lo, hi)
        ext = form.extremes(lo, hi)
        if ext is not None:
            sup = max(abs(ext[0]), abs(ext[1]))
        else:
            sup = _sampled_sup(form, lo, hi)
        best = max(best, sup)
    return Bounded(float(best))


def _sampled_sup(form: Form, lo: float, hi: float) -> float:
    w = hi - lo
    u = w * np.concatenate([np.geomspace(1e-12, 1e-3, 200), np.linspace(1e-3, 1.0, 4097)])
    return float(np.nanmax(np.abs(form.value(lo, u))))


def invert_density(h):
    """Pointwise reciprocal ``d mu / d nu`` of a positive density ratio."""
    if not isinstance(h, PiecewiseFn):
        h = np.asarray(h, dtype=float)
        if np.any(h <= 0):
            raise PreconditionError("density ratio must be positive")
        return 1.0 / h
    if not h.positive:
        raise PreconditionError("invert_density needs a function carrying the positivity flag")
    return h.reciprocal()
