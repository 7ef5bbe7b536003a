"""Strict, versioned scenario files.

A scenario is a JSON object::

    {
      "version": 1,
      "name": "density_2x",
      "space": {"kind": "lebesgue", "domain": [0, 1]},
      "nu_density": {"breaks": [0, 1], "forms": [{"form": "power", "c": 2, "p": 1}]},
      "test_functions": {"one": {"breaks": [0, 1], "forms": [{"form": "const", "c": 1}]}},
      "options": {"mode": "all", "seed": 42}
    }

``space.kind`` is ``lebesgue``, ``continuum`` (with a ``density``) or
``atomic`` (with ``weights`` and optional ``labels``). Exactly one of ``h``
and ``nu_density`` is given; on atomic spaces they are plain lists. Unknown
fields anywhere are errors.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np

from .components import Atom, Component, DecomposedSpace, Homogeneous
from .forms import Const, form_from_dict
from .measure_core import (
    AtomicSpace,
    ContinuumSpace,
    MeasureSpace,
    PiecewiseFn,
    atomic,
    density_ratio,
    lebesgue,
    with_density,
)

VERSION = 1
CATALOG = ("paper_example", "identity", "density_2x", "asymmetric_balance", "counterexample_expinv", "atomic_trio")


class ScenarioError(ValueError):
    def __init__(self, path: str, message: str, line: Optional[int] = None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{path or '<root>'}: {message}")
        self.path = path
        self.line = line


_FORM_FIELDS = {
    "const": {"c"},
    "affine": {"slope", "intercept"},
    "power": {"c", "p"},
    "expinv": {"c"},
    "reciprocal": {"of"},
    "product": {"factors"},
    "sum": {"terms"},
}
_OPTION_FIELDS = {"mode", "seed", "abs_tol", "rel_tol", "samples"}


def _fields(obj: Any, path: str, required: set, optional: set = frozenset()) -> dict:
    if not isinstance(obj, dict):
        raise ScenarioError(path, f"expected an object, got {type(obj).__name__}")
    missing = required - obj.keys()
    if missing:
        raise ScenarioError(path, f"missing field(s) {sorted(missing)}")
    extra = obj.keys() - required - set(optional)
    if extra:
        raise ScenarioError(path, f"unknown field(s) {sorted(extra)}")
    return obj


def _number(x: Any, path: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
        raise ScenarioError(path, f"expected a finite number, got {x!r}")
    return float(x)


def _list(x: Any, path: str) -> list:
    if not isinstance(x, list):
        raise ScenarioError(path, f"expected a list, got {type(x).__name__}")
    return x


def _check_form(d: Any, path: str) -> None:
    if not isinstance(d, dict) or d.get("form") not in _FORM_FIELDS:
        raise ScenarioError(path, f"unknown form {d.get('form') if isinstance(d, dict) else d!r}")
    kind = d["form"]
    _fields(d, path, {"form"} | _FORM_FIELDS[kind])
    if kind == "reciprocal":
        _check_form(d["of"], f"{path}.of")
    elif kind in ("product", "sum"):
        key = "factors" if kind == "product" else "terms"
        for i, x in enumerate(_list(d[key], f"{path}.{key}")):
            _check_form(x, f"{path}.{key}[{i}]")
    else:
        for k in _FORM_FIELDS[kind]:
            _number(d[k], f"{path}.{k}")


def _piecewise(d: Any, path: str, positive: bool = False) -> PiecewiseFn:
    _fields(d, path, {"breaks", "forms"}, {"positive"})
    breaks = [_number(b, f"{path}.breaks[{i}]") for i, b in enumerate(_list(d["breaks"], f"{path}.breaks"))]
    forms = _list(d["forms"], f"{path}.forms")
    for i, f in enumerate(forms):
        _check_form(f, f"{path}.forms[{i}]")
    try:
        return PiecewiseFn(tuple(breaks), tuple(form_from_dict(f) for f in forms),
                           positive or bool(d.get("positive", False)))
    except ValueError as e:
        raise ScenarioError(path, str(e)) from None


@dataclass(frozen=True)
class Options:
    mode: str = "all"
    seed: int = 42
    abs_tol: Optional[float] = None
    rel_tol: Optional[float] = None
    samples: int = 101


@dataclass(frozen=True)
class Scenario:
    name: str
    space: MeasureSpace
    h: Optional[Union[PiecewiseFn, tuple]] = None
    nu_density: Optional[Union[PiecewiseFn, tuple]] = None
    decomposition: Optional[tuple] = None
    test_functions: dict = field(default_factory=dict)
    options: Options = Options()

    @property
    def mu(self) -> MeasureSpace:
        return self.space

    @property
    def nu(self) -> MeasureSpace:
        if self.h is not None:
            return with_density(self.space, np.asarray(self.h) if isinstance(self.space, AtomicSpace) else self.h)
        if isinstance(self.space, AtomicSpace):
            return atomic(list(self.nu_density), list(self.space.labels))
        return ContinuumSpace(self.nu_density)

    @property
    def ratio(self):
        """``h = d nu / d mu``."""
        if self.h is not None:
            return np.asarray(self.h, dtype=float) if isinstance(self.space, AtomicSpace) else self.h
        return density_ratio(self.mu, self.nu)

    def decomposed(self) -> tuple[DecomposedSpace, DecomposedSpace]:
        """``(mu, nu)`` split along the scenario's components."""
        mu, nu = self.mu, self.nu
        if self.decomposition is None:
            return DecomposedSpace.of(mu), DecomposedSpace.of(nu)
        sides = []
        for space in (mu, nu):
            comps = []
            for c in self.decomposition:
                if c["kind"] == "atom":
                    idx = c["atoms"]
                    part = AtomicSpace(tuple(space.weights[i] for i in idx), tuple(space.labels[i] for i in idx))
                    comps.append(Component(c["label"], part, Atom()))
                else:
                    lo, hi = c["interval"]
                    comps.append(Component(c["label"], ContinuumSpace(_restrict(space.density, lo, hi)),
                                           Homogeneous(c["weight_label"])))
            sides.append(DecomposedSpace(tuple(comps)))
        return sides[0], sides[1]

    def to_dict(self) -> dict:
        atomic_space = isinstance(self.space, AtomicSpace)

        def fn(f):
            return [float(v) for v in f] if atomic_space else f.to_dict()

        out: dict = {"version": VERSION, "name": self.name, "space": _space_dict(self.space)}
        if self.h is not None:
            out["h"] = fn(self.h)
        else:
            out["nu_density"] = fn(self.nu_density)
        if self.decomposition is not None:
            out["decomposition"] = [dict(c) for c in self.decomposition]
        if self.test_functions:
            out["test_functions"] = {k: fn(v) for k, v in self.test_functions.items()}
        opts = {k: v for k, v in vars(self.options).items() if v is not None}
        out["options"] = opts
        return out


def _space_dict(space: MeasureSpace) -> dict:
    if isinstance(space, AtomicSpace):
        return {"kind": "atomic", "weights": list(space.weights), "labels": list(space.labels)}
    d = space.density
    if len(d.forms) == 1 and d.forms[0] == Const(1.0):
        return {"kind": "lebesgue", "domain": [d.domain.lo, d.domain.hi]}
    return {"kind": "continuum", "density": d.to_dict()}


def _restrict(f: PiecewiseFn, lo: float, hi: float) -> PiecewiseFn:
    g = f.refine([lo, hi])
    segs = [(a, b, form) for a, b, form in g.segments if a >= lo and b <= hi]
    return PiecewiseFn.from_segments(segs, f.positive)


def _space(d: Any, path: str) -> MeasureSpace:
    if not isinstance(d, dict) or d.get("kind") not in ("lebesgue", "continuum", "atomic"):
        raise ScenarioError(path + ".kind", "expected one of lebesgue, continuum, atomic")
    kind = d["kind"]
    if kind == "lebesgue":
        _fields(d, path, {"kind", "domain"})
        dom = _list(d["domain"], path + ".domain")
        if len(dom) != 2:
            raise ScenarioError(path + ".domain", "expected [lo, hi]")
        lo, hi = (_number(x, f"{path}.domain[{i}]") for i, x in enumerate(dom))
        if not hi > lo:
            raise ScenarioError(path + ".domain", "empty interval")
        return lebesgue(lo, hi)
    if kind == "continuum":
        _fields(d, path, {"kind", "density"})
        return ContinuumSpace(_piecewise(d["density"], path + ".density", positive=True))
    _fields(d, path, {"kind", "weights"}, {"labels"})
    w = [_number(x, f"{path}.weights[{i}]") for i, x in enumerate(_list(d["weights"], path + ".weights"))]
    labels = d.get("labels")
    if labels is not None and (not isinstance(labels, list) or len(labels) != len(w)):
        raise ScenarioError(path + ".labels", "expected one label per weight")
    try:
        return atomic(w, labels)
    except ValueError as e:
        raise ScenarioError(path, str(e)) from None


def _atomic_values(x: Any, path: str, n: int) -> tuple:
    vals = [_number(v, f"{path}[{i}]") for i, v in enumerate(_list(x, path))]
    if len(vals) != n:
        raise ScenarioError(path, f"expected {n} values, got {len(vals)}")
    if any(v <= 0 for v in vals):
        raise ScenarioError(path, "values must be positive")
    return tuple(vals)


def _decomposition(x: Any, path: str, space: MeasureSpace) -> tuple:
    out = []
    for i, c in enumerate(_list(x, path)):
        p = f"{path}[{i}]"
        if not isinstance(c, dict) or c.get("kind") not in ("atom", "homogeneous"):
            raise ScenarioError(p + ".kind", "expected atom or homogeneous")
        if c["kind"] == "atom":
            _fields(c, p, {"label", "kind", "atoms"})
            if not isinstance(space, AtomicSpace):
                raise ScenarioError(p, "atom components need an atomic space")
            idx = _list(c["atoms"], p + ".atoms")
            if not all(isinstance(j, int) and 0 <= j < space.size for j in idx):
                raise ScenarioError(p + ".atoms", "atom indices out of range")
        else:
            _fields(c, p, {"label", "kind", "weight_label", "interval"})
            if not isinstance(space, ContinuumSpace):
                raise ScenarioError(p, "homogeneous components need a continuum space")
            iv = [_number(v, f"{p}.interval[{k}]") for k, v in enumerate(_list(c["interval"], p + ".interval"))]
            if len(iv) != 2 or not (space.domain.lo <= iv[0] < iv[1] <= space.domain.hi):
                raise ScenarioError(p + ".interval", "expected [lo, hi] inside the space domain")
        out.append(dict(c))
    return tuple(out)


def _options(d: Any, path: str) -> Options:
    _fields(d, path, set(), _OPTION_FIELDS)
    mode = d.get("mode", "all")
    if mode not in ("all", "some"):
        raise ScenarioError(path + ".mode", "expected all or some")
    seed = d.get("seed", 42)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ScenarioError(path + ".seed", "expected an integer")
    samples = d.get("samples", 101)
    if isinstance(samples, bool) or not isinstance(samples, int) or samples < 2:
        raise ScenarioError(path + ".samples", "expected an integer >= 2")
    tols = {k: _number(d[k], f"{path}.{k}") for k in ("abs_tol", "rel_tol") if k in d}
    return Options(mode, seed, samples=samples, **tols)


def parse(obj: Any) -> Scenario:
    d = _fields(obj, "", {"version", "name", "space"},
                {"h", "nu_density", "decomposition", "test_functions", "options"})
    if d["version"] != VERSION:
        raise ScenarioError("version", f"unsupported version {d['version']!r}, expected {VERSION}")
    if not isinstance(d["name"], str) or not d["name"]:
        raise ScenarioError("name", "expected a non-empty string")
    space = _space(d["space"], "space")
    if ("h" in d) == ("nu_density" in d):
        raise ScenarioError("", "exactly one of h and nu_density is required")
    key = "h" if "h" in d else "nu_density"
    if isinstance(space, AtomicSpace):
        rel = _atomic_values(d[key], key, space.size)
    else:
        rel = _piecewise(d[key], key, positive=True)
        if rel.domain != space.domain:
            raise ScenarioError(key + ".breaks", "domain differs from the space domain")
    tests = {}
    tf = d.get("test_functions", {})
    if not isinstance(tf, dict):
        raise ScenarioError("test_functions", "expected an object")
    for name, f in tf.items():
        p = f"test_functions.{name}"
        if isinstance(space, AtomicSpace):
            vals = [_number(v, f"{p}[{i}]") for i, v in enumerate(_list(f, p))]
            if len(vals) != space.size:
                raise ScenarioError(p, f"expected {space.size} values")
            tests[name] = np.asarray(vals)
        else:
            tests[name] = _piecewise(f, p)
            if tests[name].domain != space.domain:
                raise ScenarioError(p + ".breaks", "domain differs from the space domain")
    deco = _decomposition(d["decomposition"], "decomposition", space) if "decomposition" in d else None
    opts = _options(d.get("options", {}), "options")
    return Scenario(d["name"], space, **{key: rel}, decomposition=deco, test_functions=tests,
                    options=opts)


def loads(text: str) -> Scenario:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError("", e.msg, e.lineno) from None
    return parse(obj)


def dumps(scenario: Scenario) -> str:
    return json.dumps(scenario.to_dict(), indent=2, sort_keys=True) + "\n"


def load(path: Union[str, Path]) -> Scenario:
    """Load a scenario file, or a catalog entry by bare name."""
    p = Path(path)
    if not p.exists() and str(path) in CATALOG:
        return loads(catalog_text(str(path)))
    try:
        text = p.read_text()
    except OSError as e:
        raise ScenarioError("", f"cannot read {path}: {e.strerror}") from None
    return loads(text)


def catalog_text(name: str) -> str:
    return resources.files("logspace").joinpath("scenarios", f"{name}.json").read_text()


def catalog() -> dict[str, Scenario]:
    return {name: loads(catalog_text(name)) for name in CATALOG}
