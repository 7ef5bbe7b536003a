"""Independent reference values for the test surface.

Nothing here touches :mod:`logspace.quadrature`: closed forms are evaluated
from their antiderivatives, the Riemann rule is a plain midpoint sum, and
atomic matching is brute force over permutations.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np


@dataclass(frozen=True)
class ClosedForm:
    formula: str


@dataclass(frozen=True)
class Riemann:
    n: int


@dataclass(frozen=True)
class Exhaustive:
    size: int


@dataclass(frozen=True)
class OracleResult:
    value: float
    method: Union[ClosedForm, Riemann, Exhaustive]


class UnsupportedForm(ValueError):
    pass


def _xlog1p_c_over_x(x: float, c: float) -> float:
    # x*log(1 + c/x) + c*log(x + c), continuous at x = 0
    head = 0.0 if x == 0 else x * math.log1p(c / x)
    return head + c * math.log(x + c)


def _log1p_cx(x: float, c: float) -> float:
    return (1 + c * x) * math.log1p(c * x) / c - x


# formula id -> (antiderivative(x, **params), parameter names)
CATALOG: dict[str, tuple[Callable[..., float], tuple[str, ...]]] = {
    "log1p_c_over_x": (lambda x, c: _xlog1p_c_over_x(x, c), ("c",)),
    "log1p_cx": (lambda x, c: _log1p_cx(x, c), ("c",)),
    "power": (lambda x, p: x ** (p + 1) / (p + 1), ("p",)),
    "x_log_c": (lambda x, c: math.log(c) * x * x / 2, ("c",)),
    "affine": (lambda x, a, b: a * x * x / 2 + b * x, ("a", "b")),
    "zero": (lambda x: 0.0, ()),
}


def closed_form_integral(form: str, params: dict, interval: tuple[float, float]) -> OracleResult:
    """``int_a^b`` of a catalog integrand via its antiderivative."""
    if form not in CATALOG:
        raise UnsupportedForm(form)
    F, names = CATALOG[form]
    if set(params) != set(names):
        raise UnsupportedForm(f"{form} takes {names}, got {sorted(params)}")
    if form == "power" and params["p"] <= -1:
        raise UnsupportedForm("power rule needs p > -1")
    a, b = interval
    return OracleResult(F(b, **params) - F(a, **params), ClosedForm(form))


def catalog_integrand(form: str, params: dict) -> Callable[[np.ndarray], np.ndarray]:
    """Pointwise integrand matching a catalog id, for cross-checks."""
    if form == "log1p_c_over_x":
        return lambda x: np.log1p(params["c"] / x)
    if form == "log1p_cx":
        return lambda x: np.log1p(params["c"] * x)
    if form == "power":
        return lambda x: np.power(x, params["p"])
    if form == "x_log_c":
        return lambda x: x * math.log(params["c"])
    if form == "affine":
        return lambda x: params["a"] * x + params["b"]
    if form == "zero":
        return lambda x: np.zeros_like(x)
    raise UnsupportedForm(form)


def riemann(g: Callable[[np.ndarray], np.ndarray], lo: float, hi: float,
            density: Optional[Callable[[np.ndarray], np.ndarray]] = None,
            n: int = 2**20, delta: float = 0.0) -> OracleResult:
    """Midpoint rule for ``int_{lo+delta}^{hi} g * density`` with ``n`` panels."""
    if n < 2**20:
        raise ValueError("the Riemann oracle uses at least 2**20 panels")
    a = lo + delta
    dx = (hi - a) / n
    total = 0.0
    chunk = 2**18
    for start in range(0, n, chunk):
        idx = np.arange(start, min(n, start + chunk), dtype=float)
        x = a + (idx + 0.5) * dx
        v = np.asarray(g(x), dtype=float)
        if density is not None:
            v = v * np.asarray(density(x), dtype=float)
        total += math.fsum(v) * dx
    return OracleResult(total, Riemann(n))


def exhaustive_match(weights_a: Sequence[float], weights_b: Sequence[float],
                     tol: float = 1e-10) -> Optional[tuple[int, ...]]:
    """A permutation ``sigma`` with ``weights_a[i] == weights_b[sigma[i]]``, or None."""
    n = len(weights_a)
    if n > 10 or len(weights_b) > 10:
        raise ValueError("exhaustive matching is limited to 10 atoms")
    if len(weights_b) != n:
        return None
    for sigma in itertools.permutations(range(n)):
        if all(abs(weights_a[i] - weights_b[sigma[i]]) <= tol for i in range(n)):
            return sigma
    return None


def exhaustive_result(weights_a, weights_b) -> OracleResult:
    found = exhaustive_match(weights_a, weights_b)
    return OracleResult(float(found is not None), Exhaustive(math.factorial(len(weights_a))))


# -- analytic integrability rules near a segment start (u -> 0+) -------------


def power_integrable(p: float) -> bool:
    """``int_0 c*u**p du`` converges."""
    return p > -1


def log1p_power_integrable(c: float, p: float) -> bool:
    """``int_0 log(1 + |c| u**p) du``: at worst a logarithmic singularity."""
    return True


def expinv_integrable(c: float) -> bool:
    """``int_0 exp(c/u) du``."""
    return c <= 0


def log1p_expinv_integrable(c: float) -> bool:
    """``int_0 log(1 + exp(c/u)) du``; ``>= c/u`` when ``c > 0``."""
    return c <= 0


def reciprocal_log_integrable(segment_forms: Sequence[tuple[str, dict]]) -> bool:
    """Whether ``log(1 + 1/h)`` is integrable for a positive catalog density ``h``.

    ``segment_forms`` lists ``(kind, params)`` per segment, with kind one of
    ``const``, ``affine``, ``power``, ``expinv``.
    """
    for kind, params in segment_forms:
        if kind in ("const", "affine"):
            continue
        if kind == "power":
            # 1/h = u**(-p)/c: logarithmic singularity at worst
            continue
        if kind == "expinv":
            # 1/h = exp(-c/u)
            if not log1p_expinv_integrable(-params["c"]):
                return False
            continue
        raise UnsupportedForm(kind)
    return True
