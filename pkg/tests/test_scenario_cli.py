import csv
import json
import math

import pytest

from logspace import cli
from logspace.scenario import CATALOG, ScenarioError, catalog, dumps, load, loads

MINIMAL = {
    "version": 1,
    "name": "flat",
    "space": {"kind": "lebesgue", "domain": [0, 1]},
    "h": {"breaks": [0, 1], "forms": [{"form": "const", "c": 1}]},
}


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, (json.loads(out.out) if out.out.strip() else None), out.err


@pytest.mark.parametrize("name", CATALOG)
def test_catalog_round_trip(name):
    s = load(name)
    again = loads(dumps(s))
    assert dumps(again) == dumps(s)


def test_loads_rejects_unknown_fields():
    with pytest.raises(ScenarioError):
        loads(json.dumps({**MINIMAL, "extra": 1}))
    bad = json.loads(json.dumps(MINIMAL))
    bad["h"]["forms"][0]["slope"] = 2
    with pytest.raises(ScenarioError):
        loads(json.dumps(bad))


def test_loads_reports_json_line():
    with pytest.raises(ScenarioError) as e:
        loads('{\n "version": 1,\n "name": \n}')
    assert e.value.line == 4 or e.value.line == 3


def test_loads_requires_one_density():
    both = {**MINIMAL, "nu_density": MINIMAL["h"]}
    with pytest.raises(ScenarioError):
        loads(json.dumps(both))
    with pytest.raises(ScenarioError):
        loads(json.dumps({**MINIMAL, "version": 2}))


def test_catalog_loads_all():
    assert set(catalog()) == set(CATALOG)


def test_cli_norm(capsys):
    code, rep, _ = run(capsys, "norm", "--scenario", "paper_example", "--function", "one")
    assert code == 0
    assert abs(rep["results"]["norms"]["one"]["value"] - math.log(2)) <= 1e-10
    code, rep, _ = run(capsys, "norm", "--scenario", "paper_example", "--function", "zero")
    assert rep["results"]["norms"]["zero"]["value"] == 0.0
    code, rep, _ = run(capsys, "norm", "--scenario", "counterexample_expinv", "--kind", "weighted",
                       "--function", "inverse_weight_squared")
    assert rep["results"]["norms"]["inverse_weight_squared"]["verdict"] == "divergent"


def test_cli_check(capsys):
    code, rep, _ = run(capsys, "check", "--scenario", "paper_example")
    assert code == 0 and rep["results"]["c1"]["holds"] and rep["results"]["c2"] is False
    code, rep, _ = run(capsys, "check", "--scenario", "identity")
    eq = rep["results"]["equivalences"]
    assert all(eq[k] for k in ("ii", "iii", "iv", "v_literal", "v_corrected", "vi"))
    code, rep, _ = run(capsys, "check", "--scenario", "asymmetric_balance")
    eq = rep["results"]["equivalences"]
    assert eq["v_literal"] is False and eq["v_corrected"] is True and "note" in rep["results"]


@pytest.mark.parametrize("name, case", [("paper_example", "II"), ("identity", "I")])
def test_cli_classify(capsys, name, case):
    code, rep, _ = run(capsys, "classify", "--scenario", name)
    assert code == 0 and rep["results"]["case"] == case


def test_cli_classify_half_density(capsys, tmp_path):
    half = {**MINIMAL, "h": {"breaks": [0, 1], "forms": [{"form": "const", "c": 0.5}]}}
    path = tmp_path / "half.json"
    path.write_text(json.dumps(half))
    code, rep, _ = run(capsys, "classify", "--scenario", str(path))
    assert rep["results"]["case"] == "III"


def test_cli_transport(capsys, tmp_path):
    out = tmp_path / "t.csv"
    code, rep, _ = run(capsys, "transport", "--scenario", "density_2x", "--emit-csv", str(out))
    assert code == 0 and rep["results"]["passed"]
    with open(out) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["x", "value"]
    assert max(abs(float(v) - math.sqrt(float(x))) for x, v in rows[1:]) <= 1e-10
    code, rep, _ = run(capsys, "transport", "--scenario", "identity")
    assert rep["results"]["measure_residual"] == 0.0
    assert all(v == 0.0 for v in rep["results"]["isometry_residuals"].values())
    code, rep, _ = run(capsys, "transport", "--scenario", "atomic_trio")
    assert rep["results"]["permutation"] == {"a1": "a2", "a2": "a3", "a3": "a1"}


def test_cli_suite(capsys):
    code, rep, _ = run(capsys, "suite", "--count", "0")
    assert code == 0 and rep["results"]["passed"] and rep["results"]["count"] == 0
    code, rep, _ = run(capsys, "suite", "--count", "5", "--seed", "3")
    assert code == 0


def test_cli_fault_injection_fails(capsys):
    code, rep, _ = run(capsys, "suite", "--count", "5", "--inject-fault")
    assert code == 1 and not rep["results"]["passed"]


def test_cli_is_deterministic(capsys):
    first = run(capsys, "suite", "--count", "4", "--seed", "42")
    second = run(capsys, "suite", "--count", "4", "--seed", "42")
    assert first == second


def test_cli_usage_errors(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({**MINIMAL, "bogus": 1}))
    code, _, err = run(capsys, "check", "--scenario", str(path))
    assert code == 2 and "bogus" in err
    code, _, _ = run(capsys, "check", "--scenario", "no_such_scenario")
    assert code == 2
    assert cli.main(["frobnicate"]) == 2
    assert cli.main(["suite", "--count", "-1"]) == 2


def test_cli_json_and_plots(capsys, tmp_path):
    report = tmp_path / "out" / "check.json"
    figs = tmp_path / "figs"
    code, rep, _ = run(capsys, "check", "--scenario", "paper_example", "--json", str(report), "--plot", str(figs))
    assert code == 0 and rep is None
    data = json.loads(report.read_text())
    assert data["command"] == "check"
    assert any(p.suffix == ".png" for p in figs.iterdir())
