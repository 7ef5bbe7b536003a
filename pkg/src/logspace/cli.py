"""Command-line runner for scenario files.

Reports are JSON with sorted keys, so identical inputs give identical bytes.
Exit codes: 0 pass, 1 property failure, 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .components import IncomparableError, classify_pair, check_coincide
from .fnorm import Infinite, lognorm, lognorm_nu, pnorm
from .isometry import (
    NoAutomorphism,
    NotIsometric,
    Permutation,
    apply_J,
    build_transport,
    check_c1,
    check_equivalences,
    region_split,
)
from .measure_core import (
    ABS_TOL,
    REL_TOL,
    AtomicSpace,
    ClassificationError,
    DomainError,
    PreconditionError,
)
from .quadrature import IntegrationError, inject_fault
from .scenario import Scenario, ScenarioError, load
from .weighted import WeightedSpace, weighted_norm

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
TRANSPORT_TOL = 1e-8
J_TOL = 1e-6


def norm_dict(n) -> dict:
    if isinstance(n, Infinite):
        return {"verdict": "divergent", "witness": n.witness}
    return {"verdict": "finite", "value": n.value, "err": n.err}


def _report(command: str, scenario: Optional[Scenario], results: dict, seed: Optional[int]) -> dict:
    return {
        "command": command,
        "scenario": scenario.name if scenario is not None else None,
        "results": results,
        "provenance": {
            "version": __version__,
            "seed": seed,
            "tolerances": {"abs": ABS_TOL, "rel": REL_TOL, "equality": 1e-8},
        },
    }


def _sanitize(x):
    """Plain JSON types; non-finite floats become strings."""
    if isinstance(x, dict):
        return {str(k): _sanitize(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_sanitize(v) for v in x]
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else repr(v)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def render(report: dict) -> str:
    return json.dumps(_sanitize(report), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _write_csv(path: str, rows: Sequence[tuple[float, float]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "value"])
        for x, v in rows:
            w.writerow([repr(float(x)), repr(float(v))])


def _samples(scenario: Scenario, n: int) -> np.ndarray:
    d = scenario.mu.domain
    return np.linspace(d.lo, d.hi, n)


def _plot_dir(args) -> Optional[Path]:
    return Path(args.plot) if args.plot else None


# -- commands -----------------------------------------------------------------


def cmd_norm(scenario: Scenario, args) -> tuple[dict, int]:
    mu = scenario.mu
    names = [args.function] if args.function else sorted(scenario.test_functions)
    if not names:
        raise ScenarioError("test_functions", "scenario defines no test functions")
    out = {}
    for name in names:
        if name not in scenario.test_functions:
            raise ScenarioError(f"test_functions.{name}", "no such test function")
        f = scenario.test_functions[name]
        if args.kind == "log":
            n = lognorm(f, mu)
        elif args.kind == "log_nu":
            n = lognorm_nu(f, mu, scenario.ratio)
        elif args.kind == "weighted":
            n = weighted_norm(WeightedSpace(mu, scenario.ratio), f)
        else:
            n = pnorm(f, mu, args.p)
        out[name] = norm_dict(n)
    results = {"kind": args.kind, "norms": out}
    if args.kind == "p":
        results["p"] = args.p
    first = scenario.test_functions[names[0]]
    if args.emit_csv:
        if isinstance(mu, AtomicSpace):
            _write_csv(args.emit_csv, list(enumerate(np.asarray(first, dtype=float))))
        else:
            x = _samples(scenario, scenario.options.samples)
            _write_csv(args.emit_csv, zip(x, first(x)))
    plots = _plot_dir(args)
    if plots is not None and not isinstance(mu, AtomicSpace):
        from .plotting import plot_function

        results["figures"] = [plot_function(first.log1p_abs(), plots / f"{scenario.name}_norm.png",
                                             f"log(1+|{names[0]}|)")]
    return results, EXIT_PASS


def cmd_check(scenario: Scenario, args) -> tuple[dict, int]:
    mu, nu, h = scenario.mu, scenario.nu, scenario.ratio
    c1 = check_c1(h, mu)
    eq = check_equivalences(mu, nu)
    bal = region_split(h, mu)
    try:
        c2 = check_coincide(h)
    except ClassificationError as e:
        c2 = f"undetermined: {e}"
    results = {
        "c1": {"holds": c1.holds, "ratio": c1.ratio, "err": c1.err},
        "c2": c2,
        "balance": bal.as_dict(),
        "equivalences": eq.as_dict(),
    }
    if eq.literal_discrepancy:
        results["note"] = ("normalized balance S_gt = S_lt disagrees with the mean-ratio test; "
                           "the unnormalized balance B_gt = B_lt agrees with it")
    plots = _plot_dir(args)
    if plots is not None:
        from .plotting import plot_ratio

        results["figures"] = [plot_ratio(h, plots / f"{scenario.name}_ratio.png", f"{scenario.name}: h = dnu/dmu")]
    return results, EXIT_PASS if eq.bundle_agrees else EXIT_FAIL


def cmd_classify(scenario: Scenario, args) -> tuple[dict, int]:
    mode = args.mode or scenario.options.mode
    mu_d, nu_d = scenario.decomposed()
    rep = classify_pair(mu_d, nu_d, mode)
    results = rep.as_dict()
    status = EXIT_PASS
    if scenario.decomposition is None:
        try:
            build_transport(scenario.mu, scenario.nu)
            transports = True
        except (NotIsometric, NoAutomorphism):
            transports = False
        results["transport_exists"] = transports
        if transports != rep.isometric:
            status = EXIT_FAIL
    plots = _plot_dir(args)
    if plots is not None:
        from .plotting import plot_ratio, plot_weights

        path = plots / f"{scenario.name}_classify.png"
        if isinstance(scenario.mu, AtomicSpace):
            fig = plot_weights(scenario.mu.weights, scenario.nu.weights, path, f"{scenario.name}: case {rep.case}")
        else:
            fig = plot_ratio(scenario.ratio, path, f"{scenario.name}: case {rep.case}")
        results["figures"] = [fig]
    return results, status


def cmd_transport(scenario: Scenario, args) -> tuple[dict, int]:
    mu, nu = scenario.mu, scenario.nu
    try:
        t = build_transport(mu, nu)
    except NotIsometric as e:
        c1 = check_c1(scenario.ratio, mu)
        return {"error": "not isometric", "detail": str(e),
                "criterion": {"c1_holds": c1.holds, "c1_ratio": c1.ratio}}, EXIT_FAIL
    except NoAutomorphism as e:
        return {"error": "no automorphism", "detail": str(e)}, EXIT_FAIL
    seed = args.seed if args.seed is not None else scenario.options.seed
    rng = np.random.default_rng(seed)
    j_res = {}
    for name in sorted(scenario.test_functions):
        f = scenario.test_functions[name]
        a, b = lognorm(f, mu), lognorm(apply_J(t, f), nu)
        j_res[name] = abs(a.value - b.value) if a.is_finite and b.is_finite else (
            0.0 if a.is_finite == b.is_finite else math.inf)
    if isinstance(t, Permutation):
        table = {mu.labels[i]: nu.labels[j] for i, j in enumerate(t.sigma)}
        residual = max(abs(mu.weights[i] - nu.weights[j]) for i, j in enumerate(t.sigma))
        results = {"kind": "permutation", "permutation": table, "measure_residual": residual,
                   "isometry_residuals": j_res}
        rows = list(enumerate(t.sigma))
    else:
        x = _samples(scenario, scenario.options.samples)
        tx = t(x)
        lo, hi = mu.domain.lo, mu.domain.hi
        ends = np.sort(rng.uniform(lo, hi, (100, 2)), axis=1)
        residual = max(t.measure_residual(a, b) for a, b in ends)
        results = {"kind": "monotone", "identity": t.identity, "samples": len(x),
                   "measure_residual": residual, "isometry_residuals": j_res,
                   "strictly_increasing": bool(np.all(np.diff(tx) > 0))}
        rows = list(zip(x, tx))
        plots = _plot_dir(args)
        if plots is not None:
            from .plotting import plot_curve

            results["figures"] = [plot_curve(x, tx, plots / f"{scenario.name}_transport.png",
                                             f"{scenario.name}: t = F_nu^-1 o F_mu", "t(x)", reference=x)]
    if args.emit_csv:
        _write_csv(args.emit_csv, rows)
    ok = residual <= TRANSPORT_TOL and all(v <= J_TOL for v in j_res.values())
    results["passed"] = ok
    return results, EXIT_PASS if ok else EXIT_FAIL


def cmd_suite(args) -> tuple[dict, int]:
    from .suite import run_suite

    seed = args.seed if args.seed is not None else 42
    if args.inject_fault:
        with inject_fault():
            res = run_suite(seed, args.count)
    else:
        res = run_suite(seed, args.count)
    plots = _plot_dir(args)
    if plots is not None:
        from .plotting import plot_tally

        axioms = [(f"{kind}:{ax}", v) for kind in ("axioms_plain", "axioms_weighted")
                  for ax, v in res["sections"][kind].items() if isinstance(v, dict)]
        res["figures"] = [plot_tally([n for n, _ in axioms], [v["passed"] for _, v in axioms],
                                     [v["failed"] for _, v in axioms], plots / "suite_axioms.png",
                                     f"axiom tallies (seed {seed})")]
    return res, EXIT_PASS if res["passed"] else EXIT_FAIL


# -- entry point --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", help="scenario file, or a catalog name such as density_2x")
    common.add_argument("--mode", choices=("all", "some"), default=None,
                        help="componentwise isometry test: every component (default) or any one")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--emit-csv", metavar="PATH", help="write x,value samples")
    common.add_argument("--json", metavar="PATH", help="write the report here instead of stdout")
    common.add_argument("--plot", metavar="DIR", help="render figures into DIR")

    p = argparse.ArgumentParser(prog="logspace", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"logspace {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    n = sub.add_parser("norm", parents=[common], help="norms of the scenario's test functions")
    n.add_argument("--function", help="test function id (default: all)")
    n.add_argument("--kind", choices=("log", "log_nu", "weighted", "p"), default="log")
    n.add_argument("--p", type=float, default=2.0)
    sub.add_parser("check", parents=[common], help="isometry criteria and balance quantities")
    sub.add_parser("classify", parents=[common], help="isometric/coincident case I-IV")
    sub.add_parser("transport", parents=[common], help="measure-preserving map and residuals")
    s = sub.add_parser("suite", parents=[common], help="seeded batch property run")
    s.add_argument("--count", type=int, default=200)
    s.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    return p


COMMANDS = {"norm": cmd_norm, "check": cmd_check, "classify": cmd_classify, "transport": cmd_transport}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_PASS
    scenario = None
    try:
        if args.command == "suite":
            if args.count < 0:
                raise ScenarioError("count", "must be >= 0")
            results, status = cmd_suite(args)
            seed = results["seed"]
        else:
            if not args.scenario:
                parser.error(f"{args.command} needs --scenario")
            scenario = load(args.scenario)
            results, status = COMMANDS[args.command](scenario, args)
            seed = args.seed if args.seed is not None else scenario.options.seed
    except ScenarioError as e:
        print(f"logspace: scenario error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_PASS
    except (DomainError, PreconditionError, IncomparableError, IntegrationError, ClassificationError) as e:
        print(f"logspace: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAIL
    text = render(_report(args.command, scenario, results, seed))
    if args.json:
        out = Path(args.json)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
