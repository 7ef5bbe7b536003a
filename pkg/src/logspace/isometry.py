"""Isometry criteria between L_log over two equivalent measures.

Covers the mean-ratio test ``int h d mu / mu(Omega) = 1``, the balance
quantities over ``{h > 1}`` and ``{h < 1}``, measure-preserving transports
and the induced map ``J f = f o t^{-1}``, and the L_p baseline isometry
``f -> h^{-1/p} f``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .fnorm import NormValue, abs_pow, errs, mul, pnorm
from .forms import (
    Asymptote,
    Const,
    Form,
    Lambda,
    Product,
    Sum,
)
from .measure_core import (
    AtomicSpace,
    ContinuumSpace,
    Divergent,
    DomainError,
    Finite,
    MeasureSpace,
    PiecewiseFn,
    density_ratio,
    integrate,
    invert_density,
    level_roots,
)
from .quadrature import CumulativeIntegral, Piece, integrate_pieces

EQ_TOL = 1e-8
ATOM_TOL = 1e-10
# region quantities feed an exact algebraic identity, so they get a tighter budget
SPLIT_ABS_TOL = 1e-13
SPLIT_REL_TOL = 1e-13


class InfiniteMassError(ValueError):
    """``int h d mu`` diverges, so ``nu`` is not a finite measure."""


class NotIsometric(ValueError):
    pass


class NoAutomorphism(ValueError):
    pass


def approx_equal(a: float, b: float, err: float = 0.0) -> bool:
    return abs(a - b) <= EQ_TOL + err


# ---------------------------------------------------------------------------
# regions {h > 1}, {h < 1}, {h = 1}


@dataclass(frozen=True)
class BalanceReport:
    c1_ratio: float
    mass_gt: float  # int_{h>1} (h - 1) d mu
    mass_lt: float  # int_{h<1} (1 - h) d mu
    mu_gt: float
    mu_lt: float
    mu_eq: float
    s_gt: float
    s_lt: float
    mu_total: float
    err: float = 0.0

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _regions(h: PiecewiseFn, mu: ContinuumSpace):
    """Sub-intervals ``(a, b, h_form, density_form, sign)`` with sign in {1, -1, 0}."""
    hh = h.refine(mu.density.breaks)
    dens = mu.density.refine(hh.breaks)
    out = []
    for (lo, hi, hf), (_, _, df) in zip(hh.segments, dens.segments):
        cuts = [lo, *sorted(level_roots(hf, 1.0, lo, hi)), hi]
        for a, b in zip(cuts, cuts[1:]):
            if b <= a:
                continue
            mid = float(hf.value(a, np.array([0.5 * (b - a)]))[0])
            sign = 1 if mid > 1.0 else (-1 if mid < 1.0 else 0)
            out.append((a, b, hf, df, sign))
    return out


def _sum_pieces(pieces: list[Piece]):
    if not pieces:
        return Finite(0.0, 0.0)
    return integrate_pieces(pieces, SPLIT_ABS_TOL, SPLIT_REL_TOL)


def _form_piece(form: Form, a: float, b: float) -> Piece:
    return Piece(a, b, lambda u, f=form, a=a: f.value(a, u), form.asymptote(a))


def region_split(h, mu: MeasureSpace) -> BalanceReport:
    """Split ``Omega`` by the sign of ``h - 1`` and report the balance quantities."""
    if isinstance(mu, AtomicSpace):
        h = np.asarray(h, dtype=float)
        w = np.asarray(mu.weights)
        gt, lt = h > 1.0, h < 1.0
        eq = ~(gt | lt)
        total = mu.mass
        b_gt = math.fsum((h[gt] - 1.0) * w[gt])
        b_lt = math.fsum((1.0 - h[lt]) * w[lt])
        m_gt, m_lt, m_eq = math.fsum(w[gt]), math.fsum(w[lt]), math.fsum(w[eq])
        ratio = math.fsum(h * w) / total
        return BalanceReport(ratio, b_gt, b_lt, m_gt, m_lt, m_eq,
                             b_gt / m_gt if m_gt else 0.0, b_lt / m_lt if m_lt else 0.0, total)
    regions = _regions(h, mu)
    excess = {1: [], -1: []}
    masses = {1: [], -1: [], 0: []}
    for a, b, hf, df, sign in regions:
        masses[sign].append(_form_piece(df, a, b))
        if sign == 1:
            excess[1].append(_form_piece(Product.of(Sum.of(hf, Const(-1.0)), df), a, b))
        elif sign == -1:
            excess[-1].append(_form_piece(Product.of(Sum.of(Const(1.0), Product.of(Const(-1.0), hf)), df), a, b))
    results = [_sum_pieces(p) for p in (excess[1], excess[-1], masses[1], masses[-1], masses[0])]
    for r in results:
        if isinstance(r, Divergent):
            raise InfiniteMassError(f"h is not mu-integrable: {r.witness}")
    b_gt, b_lt, m_gt, m_lt, m_eq = (r.value for r in results)
    ih = integrate(h, mu, SPLIT_ABS_TOL, SPLIT_REL_TOL)
    if isinstance(ih, Divergent):
        raise InfiniteMassError(f"h is not mu-integrable: {ih.witness}")
    total = mu.mass
    err = math.fsum(r.err for r in results) + ih.err + mu.mass_result.err
    return BalanceReport(ih.value / total, b_gt, b_lt, m_gt, m_lt, m_eq,
                         b_gt / m_gt if m_gt > 0 else 0.0, b_lt / m_lt if m_lt > 0 else 0.0, total, err)


@dataclass(frozen=True)
class C1Result:
    holds: bool
    ratio: float
    err: float

    def __bool__(self) -> bool:
        return self.holds


def check_c1(h, mu: MeasureSpace) -> C1Result:
    """Mean-ratio criterion ``int h d mu / mu(Omega) = 1``."""
    r = integrate(h, mu)
    if isinstance(r, Divergent):
        raise InfiniteMassError(f"nu is not finite: {r.witness}")
    total = mu.mass
    mass_err = 0.0 if isinstance(mu, AtomicSpace) else mu.mass_result.err
    ratio = r.value / total
    err = (r.err + abs(ratio) * mass_err) / total
    return C1Result(approx_equal(ratio, 1.0, err), ratio, err)


@dataclass(frozen=True)
class Equivalences:
    ii: bool
    iii: bool
    iv: bool
    v_literal: bool  # S_> == S_< as printed
    v_corrected: bool  # B_> == B_<, the form equivalent to (ii)
    vi: bool  # a measure-preserving automorphism exists
    values: dict

    @property
    def bundle_agrees(self) -> bool:
        return len({self.ii, self.iii, self.iv, self.v_corrected}) == 1

    @property
    def literal_discrepancy(self) -> bool:
        return self.v_literal != self.ii

    def as_dict(self) -> dict:
        return {
            "ii": self.ii, "iii": self.iii, "iv": self.iv,
            "v_literal": self.v_literal, "v_corrected": self.v_corrected, "vi": self.vi,
            "bundle_agrees": self.bundle_agrees, "literal_discrepancy": self.literal_discrepancy,
            "values": self.values,
        }


def check_equivalences(mu: MeasureSpace, nu: MeasureSpace) -> Equivalences:
    h = density_ratio(mu, nu)
    c1 = check_c1(h, mu)
    hinv = invert_density(h)
    r3 = integrate(hinv, nu)
    if isinstance(r3, Divergent):
        raise InfiniteMassError(r3.witness)
    mass_err_mu = 0.0 if isinstance(mu, AtomicSpace) else mu.mass_result.err
    mass_err_nu = 0.0 if isinstance(nu, AtomicSpace) else nu.mass_result.err
    ratio3 = r3.value / nu.mass
    err3 = (r3.err + abs(ratio3) * mass_err_nu) / nu.mass
    bal = region_split(h, mu)
    try:
        build_transport(mu, nu)
        vi = True
    except (NotIsometric, NoAutomorphism):
        vi = False
    return Equivalences(
        ii=c1.holds,
        iii=approx_equal(ratio3, 1.0, err3),
        iv=approx_equal(nu.mass, mu.mass, mass_err_mu + mass_err_nu),
        v_literal=approx_equal(bal.s_gt, bal.s_lt, bal.err / max(min(bal.mu_gt, bal.mu_lt), 1e-300) if bal.mu_gt and bal.mu_lt else bal.err),
        v_corrected=approx_equal(bal.mass_gt, bal.mass_lt, bal.err),
        vi=vi,
        values={
            "c1_ratio": c1.ratio, "inverse_ratio": ratio3, "mu_mass": mu.mass, "nu_mass": nu.mass,
            **{k: v for k, v in bal.as_dict().items() if k != "c1_ratio"},
        },
    )


# ---------------------------------------------------------------------------
# transports


class CDF:
    """Cumulative distribution of a continuum space, tabulated per segment."""

    def __init__(self, space: ContinuumSpace, extra_breaks: Sequence[float] = ()):
        dens = space.density.refine(extra_breaks)
        self.density = dens
        self.breaks = np.asarray(dens.breaks)
        self.tables = [CumulativeIntegral(p) for p in dens.pieces()]
        self.at_breaks = np.concatenate([[0.0], np.cumsum([t.total for t in self.tables])])
        self.total = float(self.at_breaks[-1])

    def segment(self, x):
        return self.density.segment_index(x)

    def at(self, i: np.ndarray, offset: np.ndarray) -> np.ndarray:
        """``F(breaks[i] + offset)`` with the offset kept separate for precision."""
        out = np.empty(np.shape(offset))
        for k in np.unique(i):
            sel = i == k
            out[sel] = self.at_breaks[k] + self.tables[k](offset[sel])
        return out

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        i = np.atleast_1d(self.segment(x))
        xs = np.atleast_1d(x)
        return self.at(i, xs - self.breaks[i]).reshape(x.shape)

    def inverse_split(self, p) -> tuple[np.ndarray, np.ndarray]:
        """Segment index and offset of ``F^{-1}(p)``."""
        p = np.atleast_1d(np.asarray(p, dtype=float))
        i = np.clip(np.searchsorted(self.at_breaks, p, side="right") - 1, 0, len(self.tables) - 1)
        u = np.empty_like(p)
        for k in np.unique(i):
            sel = i == k
            u[sel] = self.tables[k].inverse(p[sel] - self.at_breaks[k])
        return i, u

    def inverse(self, p) -> np.ndarray:
        shape = np.shape(p)
        i, u = self.inverse_split(p)
        return (self.breaks[i] + u).reshape(shape)


@dataclass(frozen=True)
class Permutation:
    """Atom ``i`` of the source goes to atom ``sigma[i]`` of the target."""

    sigma: tuple[int, ...]
    source: AtomicSpace
    target: AtomicSpace

    @property
    def inverse_sigma(self) -> tuple[int, ...]:
        inv = [0] * len(self.sigma)
        for i, j in enumerate(self.sigma):
            inv[j] = i
        return tuple(inv)


class MonotoneMap:
    """``t = F_target^{-1} o F_source``, strictly increasing."""

    def __init__(self, source: ContinuumSpace, target: ContinuumSpace):
        self.source = source
        self.target = target
        self.identity = source == target
        self.cdf_source = CDF(source)
        self.cdf_target = CDF(target)

    def __call__(self, x) -> np.ndarray:
        if self.identity:
            return np.asarray(x, dtype=float)
        return self.cdf_target.inverse(self.cdf_source(x))

    forward = __call__

    def inverse(self, y) -> np.ndarray:
        if self.identity:
            return np.asarray(y, dtype=float)
        return self.cdf_source.inverse(self.cdf_target(y))

    def local_power(self, y0: float, x0: float) -> Optional[tuple[float, float]]:
        """``(k, g)`` with ``t^{-1}(y0 + u) - x0 ~ k u**g`` as ``u -> 0+``."""
        a_t = _asym_at(self.target.density, y0)
        a_s = _asym_at(self.source.density, x0)
        if a_t is None or a_s is None:
            return None
        for a in (a_t, a_s):
            if not a.exact or a.rate != 0 or a.logpow != 0 or a.vanishes:
                return None
        qt, qs = a_t.power + 1.0, a_s.power + 1.0
        k = (qs * a_t.coef / (qt * a_s.coef)) ** (1.0 / qs)
        return k, qt / qs

    def measure_residual(self, a: float, b: float) -> float:
        """``|mu([a, b]) - nu(t([a, b]))|``.

        The images stay in (segment, offset) form: near a steep target
        singularity they can sit closer to a breakpoint than a double resolves.
        """
        fs = self.cdf_source(np.array([a, b]))
        if self.identity:
            return 0.0
        i, u = self.cdf_target.inverse_split(fs)
        ft = self.cdf_target.at(i, u)
        return abs((fs[1] - fs[0]) - (ft[1] - ft[0]))


TransportMap = Union[Permutation, MonotoneMap]


def _asym_at(f: PiecewiseFn, x: float) -> Optional[Asymptote]:
    i = int(f.segment_index(x))
    return f.forms[i].asymptote(x)


def compose_asym(a: Optional[Asymptote], local: Optional[tuple[float, float]]) -> Optional[Asymptote]:
    """Leading behaviour of ``g(x0 + k u**gamma)`` from that of ``g`` at ``x0``."""
    if a is None:
        return None
    if a.vanishes:
        return a
    bounded = a.rate < 0 or (a.rate == 0 and a.power >= 0 and a.logpow <= 0)
    if local is None or a.rate != 0:
        return Asymptote(max(abs(a.coef), 1.0), exact=False) if bounded else None
    k, gamma = local
    return Asymptote(a.coef * k**a.power * gamma**a.logpow, a.power * gamma, 0.0, a.logpow, a.exact)


def build_transport(mu: MeasureSpace, nu: MeasureSpace) -> TransportMap:
    """A measure-preserving map from ``mu`` onto ``nu``."""
    if isinstance(mu, AtomicSpace) or isinstance(nu, AtomicSpace):
        if not (isinstance(mu, AtomicSpace) and isinstance(nu, AtomicSpace)):
            raise DomainError("cannot transport between atomic and continuum spaces")
        if not approx_equal(mu.mass, nu.mass):
            raise NotIsometric(f"total masses differ: {mu.mass!r} vs {nu.mass!r}")
        sigma = match_atoms(mu.weights, nu.weights)
        if sigma is None:
            raise NoAutomorphism("atom weight multisets differ")
        return Permutation(sigma, mu, nu)
    if mu.domain != nu.domain:
        raise DomainError("spaces must share their domain")
    err = mu.mass_result.err + nu.mass_result.err
    if not approx_equal(mu.mass, nu.mass, err):
        raise NotIsometric(f"total masses differ: {mu.mass!r} vs {nu.mass!r}")
    return MonotoneMap(mu, nu)


def match_atoms(a: Sequence[float], b: Sequence[float], tol: float = ATOM_TOL) -> Optional[tuple[int, ...]]:
    """Pair atoms of equal weight by sorting; ``None`` when the multisets differ."""
    if len(a) != len(b):
        return None
    ia = sorted(range(len(a)), key=lambda i: (a[i], i))
    ib = sorted(range(len(b)), key=lambda i: (b[i], i))
    sigma = [0] * len(a)
    for i, j in zip(ia, ib):
        if abs(a[i] - b[j]) > tol:
            return None
        sigma[i] = j
    return tuple(sigma)


def apply_J(tmap: TransportMap, f):
    """``J f = f o t^{-1}`` (or ``f o sigma^{-1}`` on atoms), a function on the target."""
    if isinstance(tmap, Permutation):
        f = np.asarray(f, dtype=float)
        out = np.empty_like(f)
        out[list(tmap.sigma)] = f
        return out
    if tmap.identity:
        return f
    return pull_through(tmap, f, positive=f.positive)


def _image_breaks(tmap: MonotoneMap, xs: Sequence[float]) -> tuple[list[float], dict]:
    """Target breakpoints plus images of ``xs``, with exact preimages where known."""
    dom_s, dom_t = tmap.source.domain, tmap.target.domain
    pre = {dom_t.lo: dom_s.lo, dom_t.hi: dom_s.hi}
    inner = [x for x in xs if dom_s.lo < x < dom_s.hi]
    if inner:
        for x, y in zip(inner, np.atleast_1d(tmap(np.array(inner)))):
            pre[float(y)] = float(x)
    tb = list(tmap.target.density.breaks)
    merged = sorted(set(tb) | set(pre))
    out: list[float] = []
    for y in merged:
        if out and y - out[-1] <= 1e-13 * abs(y):
            # keep the exact target breakpoint, carry over the known preimage
            keep = out[-1] if out[-1] in tb else y
            drop = y if keep == out[-1] else out[-1]
            if drop in pre and keep not in pre:
                pre[keep] = pre[drop]
            out[-1] = keep
            continue
        out.append(y)
    return out, pre


def pull_through(tmap: MonotoneMap, f: PiecewiseFn, positive: bool = False) -> PiecewiseFn:
    """``f o t^{-1}`` as a piecewise function on the target domain."""
    # the image forms cannot locate their own zeros, so |f o t^{-1}| kinks must be breaks already
    f = f.split_at_sign_changes()
    cdf_s = CDF(tmap.source, extra_breaks=f.breaks)
    f_ref = f.refine(cdf_s.breaks)
    cdf_t = tmap.cdf_target
    breaks, pre = _image_breaks(tmap, list(f.breaks) + list(tmap.source.density.breaks))

    # Source segments each target segment may draw on, from the preimages of
    # its ends. Clamping to them keeps a jump of f from leaking across a target
    # break that was rounded to the nearest double.
    sb = cdf_s.breaks
    allowed = {}
    for y0, y1 in zip(breaks, breaks[1:]):
        x0, x1 = pre.get(y0), pre.get(y1)
        if x0 is None:
            x0 = float(tmap.inverse(np.array([y0]))[0])
        if x1 is None:
            x1 = float(tmap.inverse(np.array([y1]))[0])
        first = int(np.clip(np.searchsorted(sb, x0, side="right") - 1, 0, len(sb) - 2))
        last = int(np.clip(np.searchsorted(sb, x1, side="left") - 1, first, len(sb) - 2))
        allowed[y0] = (first, last)

    def value(lo, u):
        i = int(cdf_t.segment(lo))
        offs = (lo - cdf_t.breaks[i]) + np.asarray(u, dtype=float)
        p = cdf_t.at(np.full(offs.shape, i), offs).ravel()
        j, v = cdf_s.inverse_split(p)
        first, last = allowed.get(lo, (0, len(sb) - 2))
        jc = np.clip(j, first, last)
        out = np.empty(v.shape)
        for k in np.unique(jc):
            sel = jc == k
            vk = v[sel]
            moved = j[sel] != k
            if np.any(moved):
                vk = np.where(moved, cdf_s.tables[k].inverse(p[sel] - cdf_s.at_breaks[k]), vk)
            out[sel] = f_ref.forms[k].value(sb[k], vk)
        return out.reshape(offs.shape)

    def asym(lo):
        x0 = pre.get(lo)
        if x0 is None:
            x0 = float(tmap.inverse(np.array([lo]))[0])
        return compose_asym(_asym_at(f, x0), tmap.local_power(lo, x0))

    forms = tuple(Lambda(value, asym, positive, "pullback") for _ in breaks[:-1])
    return PiecewiseFn(tuple(breaks), forms, positive)


# ---------------------------------------------------------------------------
# L_p baseline


@dataclass(frozen=True)
class LpResidual:
    residual: float
    lhs: NormValue
    rhs: NormValue

    @property
    def err(self) -> float:
        return errs(self.lhs, self.rhs)


def lp_isometry_check(mu: MeasureSpace, nu: MeasureSpace, p: float, f) -> LpResidual:
    """``|‖h^{-1/p} f‖_{p,nu} - ‖f‖_{p,mu}|`` for ``h = d nu / d mu``."""
    h = density_ratio(mu, nu)
    uf = mul(abs_pow(h, -1.0 / p), f)
    lhs = pnorm(uf, nu, p)
    rhs = pnorm(f, mu, p)
    if not (lhs.is_finite and rhs.is_finite):
        return LpResidual(math.inf, lhs, rhs)
    return LpResidual(abs(lhs.value - rhs.value), lhs, rhs)
