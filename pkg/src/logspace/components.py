"""Decomposed spaces, coincidence, and the four-way isometry/coincidence classifier."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

from .isometry import (
    ATOM_TOL,
    Permutation,
    TransportMap,
    pull_through,
    approx_equal,
    check_c1,
    match_atoms,
    region_split,
)
from .measure_core import (
    AtomicSpace,
    Bounded,
    ContinuumSpace,
    DomainError,
    MeasureSpace,
    density_ratio,
    ess_sup_classify,
    invert_density,
)

MODES = ("all", "some")


class IncomparableError(ValueError):
    """Two decompositions do not describe the same underlying algebra."""


@dataclass(frozen=True)
class Atom:
    pass


@dataclass(frozen=True)
class Homogeneous:
    weight_label: Union[int, float, str]


Kind = Union[Atom, Homogeneous]


@dataclass(frozen=True)
class Component:
    label: str
    part: MeasureSpace
    kind: Kind

    def __post_init__(self):
        if isinstance(self.kind, Atom) and not isinstance(self.part, AtomicSpace):
            raise ValueError(f"component {self.label!r}: atom components need an atomic part")
        if isinstance(self.kind, Homogeneous) and not isinstance(self.part, ContinuumSpace):
            raise ValueError(f"component {self.label!r}: homogeneous components need a continuum part")

    @property
    def mass(self) -> float:
        return self.part.mass


@dataclass(frozen=True)
class DecomposedSpace:
    components: tuple[Component, ...]

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        labels = [c.kind.weight_label for c in self.homogeneous]
        if any(not a < b for a, b in zip(labels, labels[1:])):
            raise ValueError(f"homogeneous weight labels must be strictly increasing: {labels}")
        for c in self.components:
            if not c.mass > 0:
                raise ValueError(f"component {c.label!r} has non-positive mass")

    @classmethod
    def of(cls, space: MeasureSpace, label: str = "omega") -> "DecomposedSpace":
        """A plain space viewed as one component (atomic spaces become atom components)."""
        if isinstance(space, AtomicSpace):
            return cls(tuple(
                Component(name, AtomicSpace((w,), (name,)), Atom())
                for w, name in zip(space.weights, space.labels)
            ))
        return cls((Component(label, space, Homogeneous(0)),))

    @property
    def homogeneous(self) -> list[Component]:
        return [c for c in self.components if isinstance(c.kind, Homogeneous)]

    @property
    def atom_weights(self) -> list[float]:
        return [w for c in self.components if isinstance(c.kind, Atom) for w in c.part.weights]

    @property
    def mass(self) -> float:
        return math.fsum(c.mass for c in self.components)


def as_decomposed(space: Union[MeasureSpace, DecomposedSpace]) -> DecomposedSpace:
    return space if isinstance(space, DecomposedSpace) else DecomposedSpace.of(space)


def check_coincide(h) -> bool:
    """``h`` and ``1/h`` both essentially bounded."""
    return isinstance(ess_sup_classify(h), Bounded) and isinstance(ess_sup_classify(invert_density(h)), Bounded)


@dataclass(frozen=True)
class ComponentResult:
    label: str
    c1: bool
    ratio: float
    mu_mass: float
    nu_mass: float
    balance_literal: Optional[bool] = None
    balance_corrected: Optional[bool] = None

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(frozen=True)
class DecomposedResult:
    isometric: bool
    mode: str
    per_component: tuple[ComponentResult, ...]
    atoms_match: Optional[bool]

    def __bool__(self) -> bool:
        return self.isometric


def _pair_homogeneous(mu_d: DecomposedSpace, nu_d: DecomposedSpace):
    hm, hn = mu_d.homogeneous, nu_d.homogeneous
    if [c.kind for c in hm] != [c.kind for c in hn]:
        raise IncomparableError("homogeneous components differ in count or weight label")
    if bool(mu_d.atom_weights) != bool(nu_d.atom_weights):
        raise IncomparableError("only one side has an atomic part")
    for a, b in zip(hm, hn):
        if a.part.domain != b.part.domain:
            raise IncomparableError(f"component {a.label!r} lives on different domains")
    return list(zip(hm, hn))


def check_isometric_decomposed(mu_d: DecomposedSpace, nu_d: DecomposedSpace,
                               mode: str = "all") -> DecomposedResult:
    """Componentwise isometry test.

    Homogeneous components must carry equal mass (per-component mean ratio 1);
    the atomic parts must have the same weight multiset. ``mode="some"``
    accepts when any single component passes.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    mu_d, nu_d = as_decomposed(mu_d), as_decomposed(nu_d)
    rows = []
    for a, b in _pair_homogeneous(mu_d, nu_d):
        h = density_ratio(a.part, b.part)
        c1 = check_c1(h, a.part)
        bal = region_split(h, a.part)
        rows.append(ComponentResult(
            a.label, c1.holds, c1.ratio, a.mass, b.mass,
            approx_equal(bal.s_gt, bal.s_lt, bal.err), approx_equal(bal.mass_gt, bal.mass_lt, bal.err),
        ))
    verdicts = [r.c1 for r in rows]
    atoms_match = None
    if mu_d.atom_weights:
        atoms_match = match_atoms(mu_d.atom_weights, nu_d.atom_weights, ATOM_TOL) is not None
        verdicts.append(atoms_match)
    isometric = all(verdicts) if mode == "all" else any(verdicts)
    return DecomposedResult(isometric, mode, tuple(rows), atoms_match)


def global_c1_ratio(mu_d: DecomposedSpace, nu_d: DecomposedSpace) -> float:
    return nu_d.mass / mu_d.mass


# ---------------------------------------------------------------------------
# intermediate measure m = mu o alpha^{-1}


def pushforward(rho: MeasureSpace, tmap: TransportMap) -> MeasureSpace:
    """Image of ``rho`` under the transport, on the transport's target side.

    For a monotone map ``t`` from ``mu`` to ``nu`` the image density is
    ``nu * (d rho / d mu) o t^{-1}``, evaluated pointwise.
    """
    if isinstance(tmap, Permutation):
        if not isinstance(rho, AtomicSpace) or rho.size != len(tmap.sigma):
            raise DomainError("permutation and space disagree on the atoms")
        w = [0.0] * rho.size
        for i, j in enumerate(tmap.sigma):
            w[j] = rho.weights[i]
        return AtomicSpace(tuple(w), tmap.target.labels)
    if not isinstance(rho, ContinuumSpace) or rho.domain != tmap.source.domain:
        raise DomainError("space is not on the map's source domain")
    if rho == tmap.source:
        return tmap.target
    ratio = density_ratio(tmap.source, rho)
    if tmap.identity:
        return ContinuumSpace(tmap.target.density * ratio)
    return ContinuumSpace(tmap.target.density * pull_through(tmap, ratio, positive=True))


@dataclass(frozen=True)
class IntermediateCheck:
    isometric: bool
    isomorphic: bool
    ratio: float

    def as_dict(self) -> dict:
        return {"isometric": self.isometric, "isomorphic": self.isomorphic, "ratio": self.ratio}


def check_via_intermediate(mu: MeasureSpace, nu: MeasureSpace, alpha: TransportMap) -> IntermediateCheck:
    """Mean-ratio test on ``dm/dmu`` and coincidence of ``d nu / dm`` for ``m = mu o alpha^{-1}``."""
    m = pushforward(mu, alpha)
    c1 = check_c1(density_ratio(mu, m), mu)
    iso = c1.holds and check_coincide(density_ratio(m, nu))
    return IntermediateCheck(c1.holds, iso, c1.ratio)


# ---------------------------------------------------------------------------
# four-way classification

CASES = {(True, True): "I", (True, False): "II", (False, True): "III", (False, False): "IV"}


@dataclass(frozen=True)
class ClassificationReport:
    per_component: tuple[ComponentResult, ...]
    c2: bool
    isometric: bool
    coincident: bool
    case: str
    mode: str = "all"
    atoms_match: Optional[bool] = None
    mode_disagreement: bool = False

    def as_dict(self) -> dict:
        return {
            "per_component": [r.as_dict() for r in self.per_component],
            "c2": self.c2,
            "isometric": self.isometric,
            "coincident": self.coincident,
            "case": self.case,
            "mode": self.mode,
            "atoms_match": self.atoms_match,
            "mode_disagreement": self.mode_disagreement,
        }


def _coincident(mu_d: DecomposedSpace, nu_d: DecomposedSpace) -> bool:
    for a, b in _pair_homogeneous(mu_d, nu_d):
        if not check_coincide(density_ratio(a.part, b.part)):
            return False
    # finitely many atoms of positive weight: the ratio is always bounded both ways
    return True


def classify_pair(mu, nu, mode: str = "all") -> ClassificationReport:
    """Place ``(mu, nu)`` in one of the four isometric/coincident cells I-IV."""
    mu_d, nu_d = as_decomposed(mu), as_decomposed(nu)
    if isinstance(mu, AtomicSpace) and isinstance(nu, AtomicSpace) and mu.size != nu.size:
        # different atom sets: no shared algebra, so neither isometric nor coincident
        res = check_isometric_decomposed(mu_d, nu_d, mode)
        return ClassificationReport(res.per_component, False, False, False, CASES[False, False], mode,
                                    res.atoms_match)
    res = check_isometric_decomposed(mu_d, nu_d, mode)
    other = check_isometric_decomposed(mu_d, nu_d, "some" if mode == "all" else "all")
    coincident = _coincident(mu_d, nu_d)
    return ClassificationReport(
        res.per_component, coincident, res.isometric, coincident, CASES[res.isometric, coincident],
        mode, res.atoms_match, other.isometric != res.isometric,
    )
