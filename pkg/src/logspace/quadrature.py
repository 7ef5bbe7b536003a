"""Adaptive Gauss-Kronrod (G7/K15) integration over piecewise integrands.

An integrand is a list of :class:`Piece` objects.  Each piece is smooth on the
open panel ``(lo, hi)`` and may only misbehave as ``u = x - lo -> 0+``; its
behaviour there is described by an :class:`~logspace.forms.Asymptote`.

* integrable singular pieces are mapped through ``u = w * s**m`` so that the
  transformed integrand vanishes at ``s = 0``;
* pieces whose asymptote is certified non-integrable short-circuit to a
  :class:`Divergent` verdict carrying the comparison rule;
* pieces with unknown behaviour are integrated over dyadic shells toward
  ``lo`` and judged on how fast the shell contributions decay.

All panels of all pieces are refined together against one global tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .forms import Asymptote, describe, integrability, is_bounded

ABS_TOL = 1e-10
REL_TOL = 1e-9

# relative perturbation applied to every finite result; tests use it as a negative control
_FAULT = 0.0

GEOM_LEVELS = 60
GEOM_WINDOW = 10
GEOM_DECAY = 1.05

_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# 15 nodes on [-1, 1]: -x0..-x6, 0, x6..x0
_NODES = np.concatenate([-_XGK[:7], [0.0], _XGK[:7][::-1]])
_KW = np.concatenate([_WGK[:7], [_WGK[7]], _WGK[:7][::-1]])
_GW = np.zeros(15)
for _i, _k in enumerate((1, 3, 5)):
    _GW[_k] = _WG[_i]
    _GW[14 - _k] = _WG[_i]
_GW[7] = _WG[3]


class IntegrationError(RuntimeError):
    def __init__(self, message: str, point: Optional[float] = None):
        super().__init__(message if point is None else f"{message} at x={point!r}")
        self.point = point


@dataclass(frozen=True)
class AnalyticRule:
    text: str


@dataclass(frozen=True)
class RefinementGrowth:
    trace: tuple[float, ...]


@dataclass(frozen=True)
class Finite:
    value: float
    err: float = 0.0

    @property
    def is_finite(self) -> bool:
        return True


@dataclass(frozen=True)
class Divergent:
    reason: Union[AnalyticRule, RefinementGrowth]

    @property
    def is_finite(self) -> bool:
        return False

    @property
    def witness(self) -> str:
        if isinstance(self.reason, AnalyticRule):
            return self.reason.text
        return "shell contributions fail to decay: " + ", ".join(f"{t:.3e}" for t in self.reason.trace)


IntegralResult = Union[Finite, Divergent]


@dataclass(frozen=True)
class Piece:
    lo: float
    hi: float
    fn: Callable[[np.ndarray], np.ndarray]  # values at offsets u from lo
    asym: Optional[Asymptote] = None
    label: str = ""


@dataclass
class _Work:
    piece: Piece
    g: Callable[[np.ndarray], np.ndarray]  # integrand in the panel coordinate
    a: np.ndarray
    b: np.ndarray
    k: np.ndarray = field(default_factory=lambda: np.zeros(0))
    e: np.ndarray = field(default_factory=lambda: np.zeros(0))
    m: np.ndarray = field(default_factory=lambda: np.zeros(0))  # int |g| per panel
    to_x: Callable[[float], float] = lambda s: s


def _gk(g, a, b, to_x):
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    s = c[:, None] + h[:, None] * _NODES[None, :]
    vals = np.asarray(g(s.ravel()), dtype=float).reshape(s.shape)
    if not np.all(np.isfinite(vals)):
        i, j = np.argwhere(~np.isfinite(vals))[0]
        raise IntegrationError("integrand not finite", point=to_x(float(s[i, j])))
    k = h * (vals @ _KW)
    gk = h * (vals @ _GW)
    mass = h * (np.abs(vals) @ _KW)
    floor = 50.0 * np.finfo(float).eps * mass
    return k, np.maximum(np.abs(k - gk), floor), mass


def _substitution(piece: Piece) -> tuple[Callable, float, Callable]:
    """Integrand in the coordinate ``s`` with ``u = w * s**m``, plus the exponent."""
    w = piece.hi - piece.lo
    a = piece.asym
    if a is None or is_bounded(a):
        return (lambda u: piece.fn(u)), 1.0, (lambda s: piece.lo + s)
    m = max(2.0, 2.0 / (a.power + 1.0)) if a.rate == 0 else 2.0

    def g(s):
        u = w * np.power(s, m)
        out = np.zeros_like(u)
        ok = u > 0
        if np.any(ok):
            out[ok] = piece.fn(u[ok]) * m * w * np.power(s[ok], m - 1.0)
        return out

    return g, m, (lambda s: piece.lo + w * s**m)


def _initial(piece: Piece) -> _Work:
    g, m, to_x = _substitution(piece)
    if m == 1.0:
        w = piece.hi - piece.lo
        edges = np.array([0.0, 0.5 * w, w])
    else:
        edges = np.concatenate([[0.0], 2.0 ** -np.arange(8, -1, -1, dtype=float)])
    return _Work(piece, g, edges[:-1].copy(), edges[1:].copy(), to_x=to_x)


def _target(works: list[_Work], total: float, abs_tol: float, rel_tol: float, strict: bool = True) -> float:
    """Error budget, never below what rounding allows when signed parts cancel.

    Refinement aims for both tolerances at once; once it stalls, either one suffices.
    """
    mass = math.fsum(float(np.sum(w.m)) for w in works)
    pick = min if strict else max
    return max(pick(abs_tol, rel_tol * abs(total)), 200.0 * np.finfo(float).eps * mass)


def _refine(works: list[_Work], abs_tol: float, rel_tol: float, max_panels: int) -> tuple[float, float]:
    for w in works:
        w.k, w.e, w.m = _gk(w.g, w.a, w.b, w.to_x)
    for _ in range(200):
        total = math.fsum(float(np.sum(w.k)) for w in works)
        err = math.fsum(float(np.sum(w.e)) for w in works)
        tol = _target(works, total, abs_tol, rel_tol)
        if err <= tol:
            return total, err
        n = sum(len(w.a) for w in works)
        if n > max_panels:
            break
        cut = 0.5 * tol / n
        moved = False
        for w in works:
            # offsets from the piece start are exact, so only relative resolution limits a split
            mask = (w.e > cut) & ((w.b - w.a) > 1e-15 * np.abs(w.b))
            if not np.any(mask):
                continue
            moved = True
            a, b = w.a[mask], w.b[mask]
            mid = 0.5 * (a + b)
            na = np.concatenate([a, mid])
            nb = np.concatenate([mid, b])
            k, e, mass = _gk(w.g, na, nb, w.to_x)
            keep = ~mask
            w.a = np.concatenate([w.a[keep], na])
            w.b = np.concatenate([w.b[keep], nb])
            w.k = np.concatenate([w.k[keep], k])
            w.e = np.concatenate([w.e[keep], e])
            w.m = np.concatenate([w.m[keep], mass])
        if not moved:
            break
    total = math.fsum(float(np.sum(w.k)) for w in works)
    err = math.fsum(float(np.sum(w.e)) for w in works)
    tol = _target(works, total, abs_tol, rel_tol, strict=False)
    if err <= tol:
        return total, err
    raise IntegrationError(f"quadrature did not reach tolerance (err={err:.3e}, tol={tol:.3e})")


def _shells(piece: Piece, abs_tol: float, rel_tol: float, max_panels: int) -> IntegralResult:
    """Integrate over dyadic shells toward ``lo`` and judge their decay."""
    w = piece.hi - piece.lo
    incs, errs = [], []
    for k in range(GEOM_LEVELS):
        lo_u, hi_u = w * 2.0 ** -(k + 1), w * 2.0 ** -k
        shell = Piece(piece.lo + lo_u, piece.lo + hi_u, _shift(piece.fn, lo_u))
        v, e = _refine([_initial(shell)], abs_tol / GEOM_LEVELS, rel_tol, max_panels)
        incs.append(v)
        errs.append(e)
    head = abs(incs[-GEOM_WINDOW - 1])
    tail = abs(incs[-1])
    trace = tuple(abs(x) for x in incs[-GEOM_WINDOW - 1:])
    if tail == 0.0:
        return Finite(math.fsum(incs), math.fsum(errs))
    if head < GEOM_DECAY * tail:
        return Divergent(RefinementGrowth(trace))
    r = (tail / head) ** (1.0 / GEOM_WINDOW)
    rest = incs[-1] * r / (1.0 - r)
    return Finite(math.fsum(incs) + rest, math.fsum(errs) + abs(rest))


def _shift(fn, offset):
    return lambda u: fn(u + offset)


def integrate_pieces(
    pieces: list[Piece],
    abs_tol: float = ABS_TOL,
    rel_tol: float = REL_TOL,
    max_panels: int = 40000,
) -> IntegralResult:
    """Integrate ``sum_i int_{lo_i}^{hi_i} fn_i``; empty input integrates to 0."""
    pieces = [p for p in pieces if p.hi > p.lo]
    regular: list[Piece] = []
    numeric: list[Piece] = []
    for p in pieces:
        verdict = integrability(p.asym)
        if verdict == "divergent":
            return Divergent(AnalyticRule(
                f"integrand ~ {describe(p.asym)} as x -> {p.lo!r}+ is not integrable"
                + (f" ({p.label})" if p.label else "")
            ))
        if p.asym is not None and p.asym.vanishes and p.asym.exact and _identically_zero(p):
            continue
        (regular if verdict == "finite" else numeric).append(p)
    value, err = 0.0, 0.0
    if regular:
        value, err = _refine([_initial(p) for p in regular], abs_tol, rel_tol, max_panels)
    for p in numeric:
        r = _shells(p, abs_tol, rel_tol, max_panels)
        if isinstance(r, Divergent):
            return r
        value += r.value
        err += r.err
    return Finite(value * (1.0 + _FAULT), err)


class inject_fault:
    """Context manager that perturbs every quadrature result (test use only)."""

    def __init__(self, relative: float = 1e-4):
        self.relative = relative

    def __enter__(self):
        global _FAULT
        self._saved, _FAULT = _FAULT, self.relative
        return self

    def __exit__(self, *exc):
        global _FAULT
        _FAULT = self._saved
        return False


def _identically_zero(p: Piece) -> bool:
    probe = (p.hi - p.lo) * np.array([0.1, 0.37, 0.5, 0.81, 1.0])
    return bool(np.all(np.asarray(p.fn(probe)) == 0.0))


class CumulativeIntegral:
    """``u -> int_lo^{lo+u} piece`` from a converged panel mesh.

    The mesh is refined once; each query adds the cumulative panel sum to one
    G7/K15 evaluation over the partial panel, so queries are vectorised.
    """

    def __init__(self, piece: Piece, abs_tol: float = ABS_TOL * 1e-2, rel_tol: float = REL_TOL * 1e-3):
        verdict = integrability(piece.asym)
        if verdict == "divergent":
            raise IntegrationError(f"density not integrable near {piece.lo!r}")
        self.piece = piece
        self.width = piece.hi - piece.lo
        work = _initial(piece)
        _, m, _ = _substitution(piece)
        self.m = m
        self.g = work.g
        _refine([work], abs_tol, rel_tol, 40000)
        order = np.argsort(work.a)
        self.a = work.a[order]
        self.b = work.b[order]
        self.cum = np.concatenate([[0.0], np.cumsum(work.k[order])])
        self.total = float(self.cum[-1])

    def __call__(self, u) -> np.ndarray:
        u = np.clip(np.asarray(u, dtype=float), 0.0, self.width)
        s = u if self.m == 1.0 else np.power(u / self.width, 1.0 / self.m)
        j = np.clip(np.searchsorted(self.a, s, side="right") - 1, 0, len(self.a) - 1)
        a = self.a[j]
        c = 0.5 * (a + s)
        h = 0.5 * (s - a)
        nodes = c[..., None] + h[..., None] * _NODES
        vals = np.asarray(self.g(nodes.ravel()), dtype=float).reshape(nodes.shape)
        return self.cum[j] + h * (vals @ _KW)

    def inverse(self, r, iterations: int = 60) -> np.ndarray:
        """Offsets ``u`` with ``self(u) == r``: panel lookup, then bisection."""
        r = np.clip(np.asarray(r, dtype=float), 0.0, self.total)
        j = np.clip(np.searchsorted(self.cum, r, side="right") - 1, 0, len(self.a) - 1)
        lo = self.a[j].copy()
        hi = self.b[j].copy()
        base = self.cum[j]
        for _ in range(iterations):
            mid = 0.5 * (lo + hi)
            c = 0.5 * (self.a[j] + mid)
            h = 0.5 * (mid - self.a[j])
            nodes = c[..., None] + h[..., None] * _NODES
            vals = np.asarray(self.g(nodes.ravel()), dtype=float).reshape(nodes.shape)
            below = base + h * (vals @ _KW) < r
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            if np.all(hi - lo <= 4e-16 * np.maximum(np.abs(hi), 1e-300)):
                break
        s = 0.5 * (lo + hi)
        return s if self.m == 1.0 else self.width * np.power(s, self.m)
