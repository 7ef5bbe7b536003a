"""Closed-form segment forms and their behaviour near the left end of a segment.

Every form is evaluated through ``value(lo, u)`` where ``lo`` is the left end of
the segment being integrated and ``u >= 0`` is the offset from it.  Catalog
forms that depend on a distance (``Power``, ``ExpInv``) carry an explicit
``anchor``; the distance is ``(lo - anchor) + u`` so that it stays exact when
``lo == anchor`` and ``u`` is tiny.

The leading behaviour of a form as ``u -> 0+`` is summarised by an
:class:`Asymptote`.  Asymptotes compose through products, reciprocals, powers,
sums and ``log(1 + |.|)``, which is what lets the integration engine certify
divergence without looking at numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

_POW_EPS = 1e-12


@dataclass(frozen=True)
class Asymptote:
    """``|g(lo + u)| ~ |coef| * u**power * log(1/u)**logpow * exp(rate/u)``.

    ``exact=False`` means the expression is only an upper bound for ``|g|``.
    """

    coef: float
    power: float = 0.0
    rate: float = 0.0
    logpow: float = 0.0
    exact: bool = True

    @property
    def vanishes(self) -> bool:
        return self.coef == 0.0

    def key(self) -> tuple[float, float, float]:
        # larger key = dominant as u -> 0+
        return (self.rate, -self.power, self.logpow)


ZERO = Asymptote(0.0)


def asym_product(parts: list[Optional[Asymptote]]) -> Optional[Asymptote]:
    if any(p is not None and p.exact and p.vanishes for p in parts):
        return ZERO
    if any(p is None for p in parts):
        return None
    coef, power, rate, logpow, exact = 1.0, 0.0, 0.0, 0.0, True
    for p in parts:
        coef *= p.coef
        power += p.power
        rate += p.rate
        logpow += p.logpow
        exact = exact and p.exact
    if coef == 0.0:
        return Asymptote(0.0, exact=exact)
    return Asymptote(coef, power, rate, logpow, exact)


def asym_pow(a: Optional[Asymptote], q: float) -> Optional[Asymptote]:
    if a is None:
        return None
    if a.vanishes:
        if q > 0:
            return a
        return None
    if q < 0 and not a.exact:
        return None
    return Asymptote(abs(a.coef) ** q, a.power * q, a.rate * q, a.logpow * q, a.exact)


def asym_sum(parts: list[Optional[Asymptote]]) -> Optional[Asymptote]:
    if any(p is None for p in parts):
        return None
    live = [p for p in parts if not p.vanishes]
    if not live:
        return Asymptote(0.0, exact=all(p.exact for p in parts))
    top = max(p.key() for p in live)
    group = [p for p in live if _same_key(p.key(), top)]
    lead = group[0]
    total = math.fsum(p.coef for p in group)
    scale = math.fsum(abs(p.coef) for p in group)
    exact = all(p.exact for p in live)
    if abs(total) <= 1e-12 * scale:
        # leading terms cancel; the magnitude bound survives
        return Asymptote(scale, lead.power, lead.rate, lead.logpow, False)
    return Asymptote(total, lead.power, lead.rate, lead.logpow, exact)


def _same_key(a, b) -> bool:
    return all(abs(x - y) <= _POW_EPS * max(1.0, abs(x), abs(y)) for x, y in zip(a, b))


def asym_log1p_abs(a: Optional[Asymptote]) -> Optional[Asymptote]:
    """Leading behaviour of ``log(1 + |g|)`` given that of ``g``."""
    if a is None:
        return None
    if a.vanishes:
        return a
    if a.rate > 0:
        return Asymptote(a.rate, -1.0, 0.0, 0.0, a.exact)
    if a.rate < 0:
        return Asymptote(abs(a.coef), a.power, a.rate, a.logpow, a.exact)
    if a.power < -_POW_EPS:
        return Asymptote(-a.power, 0.0, 0.0, 1.0, a.exact)
    if a.power > _POW_EPS:
        return Asymptote(abs(a.coef), a.power, 0.0, a.logpow, a.exact)
    if a.logpow > 0:
        # log(1 + c log^L(1/u)) grows slower than L log(1/u)
        return Asymptote(a.logpow, 0.0, 0.0, 1.0, False)
    if a.logpow < 0:
        return Asymptote(abs(a.coef), 0.0, 0.0, a.logpow, a.exact)
    return Asymptote(math.log1p(abs(a.coef)), exact=a.exact)


def is_bounded(a: Asymptote) -> bool:
    if a.vanishes or a.rate < 0:
        return True
    if a.rate > 0:
        return False
    if a.power > _POW_EPS:
        return True
    if a.power < -_POW_EPS:
        return False
    return a.logpow <= 0


def integrability(a: Optional[Asymptote]) -> str:
    """``'finite'``, ``'divergent'`` or ``'unknown'`` for ``int_0 |g| du``."""
    if a is None:
        return "unknown"
    if a.vanishes or a.rate < 0:
        return "finite"
    if a.rate > 0:
        return "divergent" if a.exact else "unknown"
    if a.power > -1.0 + _POW_EPS:
        return "finite"
    if a.power < -1.0 - _POW_EPS:
        return "divergent" if a.exact else "unknown"
    if a.logpow < -1.0:
        return "finite"
    return "divergent" if a.exact else "unknown"


def describe(a: Asymptote) -> str:
    parts = [f"{a.coef:.6g}"]
    if a.power:
        parts.append(f"u^{a.power:.6g}")
    if a.logpow:
        parts.append(f"log(1/u)^{a.logpow:.6g}")
    if a.rate:
        parts.append(f"exp({a.rate:.6g}/u)")
    return "*".join(parts)


# ---------------------------------------------------------------------------
# forms


class Form:
    """Base class; subclasses are immutable."""

    has_exp = False

    def value(self, lo: float, u):
        raise NotImplementedError

    def log_abs(self, lo: float, u):
        with np.errstate(divide="ignore"):
            return np.log(np.abs(self.value(lo, u)))

    def asymptote(self, lo: float) -> Optional[Asymptote]:
        raise NotImplementedError

    def extremes(self, lo: float, hi: float) -> Optional[tuple[float, float]]:
        """Exact (inf, sup) of the form on the closed segment, when monotone."""
        return None

    def is_positive_on(self, lo: float, hi: float) -> bool:
        return False

    def bind(self, lo: float) -> "Form":
        return self

    def reciprocal(self) -> "Form":
        return Reciprocal(self)

    def to_dict(self) -> dict:
        raise TypeError(f"{type(self).__name__} is not serializable")


def _arr(u):
    return np.asarray(u, dtype=float)


@dataclass(frozen=True)
class Const(Form):
    c: float

    def value(self, lo, u):
        return np.full_like(_arr(u), self.c)

    def asymptote(self, lo):
        return Asymptote(float(self.c))

    def extremes(self, lo, hi):
        return (self.c, self.c)

    def is_positive_on(self, lo, hi):
        return self.c > 0

    def reciprocal(self):
        return Const(1.0 / self.c)

    def to_dict(self):
        return {"form": "const", "c": self.c}


@dataclass(frozen=True)
class Affine(Form):
    """``slope * x + intercept`` in absolute coordinates."""

    slope: float
    intercept: float

    def at(self, x: float) -> float:
        return self.slope * x + self.intercept

    def value(self, lo, u):
        return self.slope * (lo + _arr(u)) + self.intercept

    def asymptote(self, lo):
        v = self.at(lo)
        if abs(v) > 1e-14 * (abs(self.slope * lo) + abs(self.intercept)):
            return Asymptote(v)
        if self.slope == 0.0:
            return ZERO
        return Asymptote(self.slope, 1.0)

    def extremes(self, lo, hi):
        a, b = self.at(lo), self.at(hi)
        return (min(a, b), max(a, b))

    def is_positive_on(self, lo, hi):
        return self.at(lo) > 0 and self.at(hi) > 0

    def to_dict(self):
        return {"form": "affine", "slope": self.slope, "intercept": self.intercept}


@dataclass(frozen=True)
class Power(Form):
    """``c * (x - anchor)**p``; ``anchor`` defaults to the segment start."""

    c: float
    p: float
    anchor: Optional[float] = None

    def bind(self, lo):
        return self if self.anchor is not None else Power(self.c, self.p, lo)

    def _d(self, lo, u):
        return (lo - self.anchor) + _arr(u)

    def value(self, lo, u):
        with np.errstate(divide="ignore"):
            return self.c * np.power(self._d(lo, u), self.p)

    def log_abs(self, lo, u):
        with np.errstate(divide="ignore"):
            return math.log(abs(self.c)) + self.p * np.log(self._d(lo, u)) if self.c else np.full_like(_arr(u), -np.inf)

    def asymptote(self, lo):
        if self.c == 0.0:
            return ZERO
        d0 = lo - self.anchor
        if d0 > 0:
            return Asymptote(self.c * d0**self.p)
        if self.p == 0.0:
            return Asymptote(self.c)
        return Asymptote(self.c, self.p)

    def extremes(self, lo, hi):
        d0, d1 = lo - self.anchor, hi - self.anchor
        if d0 == 0 and self.p < 0:
            return None
        a = self.c * d0**self.p if d0 > 0 or self.p > 0 else self.c
        b = self.c * d1**self.p
        return (min(a, b), max(a, b))

    def is_positive_on(self, lo, hi):
        return self.c > 0

    def reciprocal(self):
        return Power(1.0 / self.c, -self.p, self.anchor)

    def to_dict(self):
        return {"form": "power", "c": self.c, "p": self.p}


@dataclass(frozen=True)
class ExpInv(Form):
    """``exp(c / (x - anchor))``."""

    c: float
    anchor: Optional[float] = None
    has_exp = True

    def bind(self, lo):
        return self if self.anchor is not None else ExpInv(self.c, lo)

    def _d(self, lo, u):
        return (lo - self.anchor) + _arr(u)

    def value(self, lo, u):
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            return np.exp(self.log_abs(lo, u))

    def log_abs(self, lo, u):
        d = self._d(lo, u)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = self.c / d
        if self.c == 0:
            return np.zeros_like(d)
        return np.where(d == 0, np.inf if self.c > 0 else -np.inf, out)

    def asymptote(self, lo):
        d0 = lo - self.anchor
        if d0 > 0:
            return Asymptote(math.exp(min(self.c / d0, 700.0)))
        return Asymptote(1.0, 0.0, self.c)

    def extremes(self, lo, hi):
        d0, d1 = lo - self.anchor, hi - self.anchor
        b = math.exp(self.c / d1)
        if d0 == 0:
            if self.c > 0:
                return None
            return (0.0, b)
        a = math.exp(self.c / d0)
        return (min(a, b), max(a, b))

    def is_positive_on(self, lo, hi):
        return True

    def to_dict(self):
        return {"form": "expinv", "c": self.c}


@dataclass(frozen=True)
class Reciprocal(Form):
    """Exact ``1 / inner`` kept symbolic."""

    inner: Form

    @property
    def has_exp(self):
        return self.inner.has_exp

    def value(self, lo, u):
        if self.has_exp:
            with np.errstate(over="ignore"):
                return np.sign(self.inner.value(lo, u)) * np.exp(-self.inner.log_abs(lo, u))
        with np.errstate(divide="ignore"):
            return 1.0 / self.inner.value(lo, u)

    def log_abs(self, lo, u):
        return -self.inner.log_abs(lo, u)

    def asymptote(self, lo):
        return asym_pow(self.inner.asymptote(lo), -1.0)

    def extremes(self, lo, hi):
        ext = self.inner.extremes(lo, hi)
        if ext is None:
            # inner has an endpoint singularity; its reciprocal tends to 0 there
            a = self.inner.asymptote(lo)
            if a is None or is_bounded(a):
                return None
            far = float(1.0 / self.inner.value(lo, np.array([hi - lo]))[0])
            return (min(0.0, far), max(0.0, far))
        m, M = ext
        if m > 0 or M < 0:
            return (1.0 / M, 1.0 / m)
        return None

    def is_positive_on(self, lo, hi):
        return self.inner.is_positive_on(lo, hi)

    def reciprocal(self):
        return self.inner

    def bind(self, lo):
        return Reciprocal(self.inner.bind(lo))

    def to_dict(self):
        return {"form": "reciprocal", "of": self.inner.to_dict()}


@dataclass(frozen=True)
class Product(Form):
    factors: tuple[Form, ...]

    @staticmethod
    def of(*forms: Form) -> Form:
        """Flattened, simplified product: constants fold, same-anchor powers and
        exponentials merge, and a form cancels against its reciprocal."""
        scale = 1.0
        powers: dict = {}
        exps: dict = {}
        counts: dict = {}
        order: list = []

        def add(g: Form, n: int) -> None:
            nonlocal scale
            if isinstance(g, Product):
                for x in g.factors:
                    add(x, n)
            elif isinstance(g, Const):
                scale *= g.c**n
            elif isinstance(g, Power) and g.anchor is not None:
                c, p = powers.get(g.anchor, (1.0, 0.0))
                powers[g.anchor] = (c * g.c**n, p + n * g.p)
            elif isinstance(g, ExpInv) and g.anchor is not None:
                exps[g.anchor] = exps.get(g.anchor, 0.0) + n * g.c
            elif isinstance(g, Reciprocal):
                add(g.inner, -n)
            else:
                if g not in counts:
                    order.append(g)
                counts[g] = counts.get(g, 0) + n

        for f in forms:
            add(f, 1)
        flat: list[Form] = []
        for anchor, (c, p) in powers.items():
            scale *= c
            if p != 0.0:
                flat.append(Power(1.0, p, anchor))
        for anchor, c in exps.items():
            if c != 0.0:
                flat.append(ExpInv(c, anchor))
        for g in order:
            n = counts[g]
            flat.extend([g] * n if n > 0 else [Reciprocal(g)] * (-n))
        if scale == 0.0:
            return Const(0.0)
        if not flat:
            return Const(scale)
        if scale != 1.0:
            if len(flat) == 1 and isinstance(flat[0], Power):
                return Power(scale * flat[0].c, flat[0].p, flat[0].anchor)
            flat.insert(0, Const(scale))
        if len(flat) == 1:
            return flat[0]
        return Product(tuple(flat))

    def bind(self, lo):
        return Product(tuple(f.bind(lo) for f in self.factors))

    @property
    def has_exp(self):
        return any(f.has_exp for f in self.factors)

    def value(self, lo, u):
        if self.has_exp:
            sign = np.ones_like(_arr(u))
            for f in self.factors:
                sign = sign * np.sign(f.value(lo, u)) if not f.has_exp else sign
            with np.errstate(over="ignore", invalid="ignore"):
                return sign * np.exp(self.log_abs(lo, u))
        out = np.ones_like(_arr(u))
        with np.errstate(invalid="ignore", over="ignore"):
            for f in self.factors:
                out = out * f.value(lo, u)
        return out

    def log_abs(self, lo, u):
        out = np.zeros_like(_arr(u))
        with np.errstate(invalid="ignore"):
            for f in self.factors:
                out = out + f.log_abs(lo, u)
        return out

    def asymptote(self, lo):
        return asym_product([f.asymptote(lo) for f in self.factors])

    def is_positive_on(self, lo, hi):
        return all(f.is_positive_on(lo, hi) for f in self.factors)

    def reciprocal(self):
        return Product.of(*(f.reciprocal() for f in self.factors))

    def to_dict(self):
        return {"form": "product", "factors": [f.to_dict() for f in self.factors]}


@dataclass(frozen=True)
class Sum(Form):
    terms: tuple[Form, ...]

    @staticmethod
    def of(*forms: Form) -> Form:
        flat: list[Form] = []
        const = 0.0
        for f in forms:
            for g in f.terms if isinstance(f, Sum) else (f,):
                if isinstance(g, Const):
                    const += g.c
                else:
                    flat.append(g)
        if const != 0.0 or not flat:
            flat.append(Const(const))
        return flat[0] if len(flat) == 1 else Sum(tuple(flat))

    @property
    def has_exp(self):
        return any(f.has_exp for f in self.terms)

    def value(self, lo, u):
        out = np.zeros_like(_arr(u))
        with np.errstate(invalid="ignore"):
            for f in self.terms:
                out = out + f.value(lo, u)
        return out

    def asymptote(self, lo):
        return asym_sum([f.asymptote(lo) for f in self.terms])

    def is_positive_on(self, lo, hi):
        return all(f.is_positive_on(lo, hi) for f in self.terms)

    def bind(self, lo):
        return Sum(tuple(f.bind(lo) for f in self.terms))

    def to_dict(self):
        return {"form": "sum", "terms": [f.to_dict() for f in self.terms]}


@dataclass(frozen=True)
class AbsPow(Form):
    """``|inner|**q``."""

    inner: Form
    q: float

    @property
    def has_exp(self):
        return self.inner.has_exp

    def value(self, lo, u):
        if self.has_exp:
            with np.errstate(over="ignore"):
                return np.exp(self.log_abs(lo, u))
        with np.errstate(divide="ignore"):
            return np.power(np.abs(self.inner.value(lo, u)), self.q)

    def log_abs(self, lo, u):
        return self.q * self.inner.log_abs(lo, u)

    def asymptote(self, lo):
        return asym_pow(self.inner.asymptote(lo), self.q)

    def extremes(self, lo, hi):
        ext = self.inner.extremes(lo, hi)
        if ext is None or ext[0] <= 0:
            return None
        a, b = ext[0] ** self.q, ext[1] ** self.q
        return (min(a, b), max(a, b))

    def is_positive_on(self, lo, hi):
        return self.inner.is_positive_on(lo, hi)

    def bind(self, lo):
        return AbsPow(self.inner.bind(lo), self.q)


@dataclass(frozen=True)
class Log1pAbs(Form):
    """``log(1 + |inner|)``."""

    inner: Form

    def value(self, lo, u):
        if self.inner.has_exp:
            return np.logaddexp(0.0, self.inner.log_abs(lo, u))
        return np.log1p(np.abs(self.inner.value(lo, u)))

    def asymptote(self, lo):
        return asym_log1p_abs(self.inner.asymptote(lo))

    def bind(self, lo):
        return Log1pAbs(self.inner.bind(lo))


@dataclass(frozen=True, eq=False)
class Lambda(Form):
    """Opaque pointwise form ``fn(x)`` with an optional asymptote oracle.

    ``fn`` receives ``(lo, u)``; ``asym`` maps a segment start to an
    :class:`Asymptote` or ``None`` when the behaviour there is unknown.
    """

    fn: Callable
    asym: Optional[Callable[[float], Optional[Asymptote]]] = None
    positive: bool = False
    label: str = "lambda"

    def value(self, lo, u):
        return _arr(self.fn(lo, _arr(u)))

    def asymptote(self, lo):
        if self.asym is None:
            return None
        return self.asym(lo)

    def is_positive_on(self, lo, hi):
        return self.positive


def abs_pow_of(f: Form, q: float) -> Form:
    """``|f|**q`` folded into the catalog where possible."""
    if isinstance(f, Const):
        return Const(abs(f.c) ** q)
    if isinstance(f, Power) and f.anchor is not None:
        return Power(abs(f.c) ** q, f.p * q, f.anchor)
    if isinstance(f, ExpInv) and f.anchor is not None:
        return ExpInv(f.c * q, f.anchor)
    if isinstance(f, Reciprocal):
        return abs_pow_of(f.inner, -q)
    if isinstance(f, Product):
        return Product.of(*(abs_pow_of(g, q) for g in f.factors))
    if isinstance(f, AbsPow):
        return abs_pow_of(f.inner, f.q * q)
    return AbsPow(f, q)


def form_from_dict(d: dict) -> Form:
    kind = d.get("form")
    if kind == "const":
        return Const(float(d["c"]))
    if kind == "affine":
        return Affine(float(d["slope"]), float(d["intercept"]))
    if kind == "power":
        return Power(float(d["c"]), float(d["p"]))
    if kind == "expinv":
        return ExpInv(float(d["c"]))
    if kind == "reciprocal":
        return Reciprocal(form_from_dict(d["of"]))
    if kind == "product":
        return Product(tuple(form_from_dict(x) for x in d["factors"]))
    if kind == "sum":
        return Sum(tuple(form_from_dict(x) for x in d["terms"]))
    raise ValueError(f"unknown form {kind!r}")
