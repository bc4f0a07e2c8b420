from __future__ import annotations

import csv
import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from incq import ast as A
from incq.bench import Measurement, bench, exponents, fit_exponent, measure, scenario_for
from incq.cli import main
from incq.differential import canonical_set, run_differential
from incq.lowering import lower_query
from incq.parser import format_program
from incq.runtime import Runtime
from incq.scenarios import (
    CelebParams, V, aliasing_script, celeb_query, gen_jql, gen_random_trace, gen_running_example,
    jql_query,
)


def test_scenarios_are_deterministic():
    a = gen_running_example(CelebParams(n_users=300, seed=7))
    b = gen_running_example(CelebParams(n_users=300, seed=7))
    c = gen_running_example(CelebParams(n_users=300, seed=8))
    assert a.text() == b.text() != c.text()
    assert gen_jql(2, n=50, seed=3).text() == gen_jql(2, n=50, seed=3).text()
    assert format_program(gen_random_trace(5, 200)) == format_program(gen_random_trace(5, 200))


def test_scenario_text_parses_back(tmp_path):
    sc = gen_jql(3, n=20, n_ops=10)
    path = tmp_path / "j3.oq"
    path.write_text(sc.text())
    assert main(["run", str(path), "--mode", "fil", "--check-against", "orig"]) == 0


def test_setup_and_workload_split():
    sc = gen_running_example(n_users=200, n_ops=30)
    assert len(sc.setup) + len(sc.workload) == len(sc.script.trace)
    assert all(isinstance(op, (A.Ask, A.FieldAssign)) for op in sc.workload)
    assert sc.notes["n_groups"] == 2


def test_no_demand_means_not_demanded():
    sc = gen_running_example(n_users=200, n_ops=5, demand_size=0)
    assert not any(isinstance(op, A.Ask) for op in sc.workload)
    rt = Runtime(sc.script, "inc")
    rt.run()
    assert rt.queries["Q"].result.size() == 0


def test_jql1_plan_has_no_joins():
    from incq.planner import plan_incremental

    plan = plan_incremental(lower_query(jql_query(1)))
    assert all(d.role != "index" for d in plan.stores.values())


def test_demand_only_trace_tracks_u():
    ops = [A.NewObject("c"), A.NewSet("g"), A.NewSet("fs"), A.FieldAssign(V("c"), "followers", V("fs"))]
    for _ in range(3):
        ops += [A.DemandAdd("Q", (V("c"), V("g"))), A.Ask("Q", (V("c"), V("g"))),
                A.DemandDel("Q", (V("c"), V("g"))), A.DemandAdd("Q", (V("c"), V("fs"))),
                A.Ask("Q", (V("c"), V("fs")))]
    rep = run_differential(A.Script([celeb_query()], ops), invariants=True)
    assert rep.ok and rep.asks == 6


def test_aliasing_scenario_differential():
    rep = run_differential(aliasing_script(), invariants=True)
    assert rep.ok and rep.asks == 4


def test_differential_reports_first_mismatch(monkeypatch):
    from incq.runtime import QueryRuntime

    # a maintained view that forgets everything must be caught at the first non-empty ask
    monkeypatch.setattr(QueryRuntime, "lookup", lambda self, args: frozenset())
    rep = run_differential(aliasing_script(), ("orig", "inc"))
    assert not rep.ok
    assert rep.first.mode == "inc" and rep.first.what == "result"
    assert rep.first.position == 11
    assert canonical_set([1]) == frozenset({1})


def test_fit_exponent():
    xs = [100, 200, 400, 800]
    assert fit_exponent(xs, [3 * x * x for x in xs]) == pytest.approx(2.0)
    assert fit_exponent(xs, [5, 5, 5, 5]) == pytest.approx(0.0)
    assert math.isnan(fit_exponent(xs, [0, 1, 2, 3]))


def test_measure_reports_per_op_costs():
    sc = scenario_for("jql2", 50, 1, n_ops=40)
    m = measure(sc, "inc", 50, 1)
    assert isinstance(m, Measurement)
    assert m.ask_ops > 0 and m.update_ops > 0 and m.aux_space > 0


def test_updates_only_orig_cheapest():
    costs = {mode: measure(scenario_for("jql2", 100, 1, ask_ratio=0.0, n_ops=50), mode, 100, 1).total_ops
             for mode in ("orig", "inc", "fil")}
    assert costs["orig"] < costs["inc"] and costs["orig"] < costs["fil"]


def test_bench_rows_and_fits():
    rows = bench("jql2", [50, 100, 200], [1], ["orig", "inc"], n_ops=60)
    assert len(rows) == 6
    fits = exponents(rows)
    assert fits[("orig", "ask_ops")] > 0.8
    assert abs(fits[("inc", "ask_ops")]) < 0.2


def test_cli_bench_writes_csv(tmp_path, capsys):
    out = tmp_path / "b.csv"
    rc = main(["bench", "jql1", "--sizes", "20,40", "--seeds", "1", "--modes", "orig,inc", "--out", str(out)])
    assert rc == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 4 and {"scenario", "mode", "size", "seed", "total_ops"} <= set(rows[0])
    fits = list(csv.reader(open(str(out) + ".fits.csv")))
    assert fits[0][0] == "scenario" and len(fits) > 1
    assert "exponent" in capsys.readouterr().err


@pytest.fixture
def program(tmp_path):
    sc = gen_running_example(n_users=60, n_ops=10)
    path = tmp_path / "celeb.oq"
    path.write_text(sc.text())
    return path


def test_cli_compile_dumps(program, tmp_path, capsys):
    plan, obj = tmp_path / "plan.json", tmp_path / "obj.json"
    rc = main(["compile", str(program), "--mode", "fil", "--dump-relational",
               "--dump-plan", str(plan), "--dump-objplan", str(obj)])
    assert rc == 0
    rel = json.loads(capsys.readouterr().out)
    assert rel[0]["name"] == "Q" and len(rel[0]["clauses"]) == 6
    assert json.loads(plan.read_text())[0]["mode"] == "fil"
    assert json.loads(obj.read_text())[0]["counted_result"] is True


def test_cli_compile_with_hints(program, tmp_path, capsys):
    hints = tmp_path / "h.txt"
    hints.write_text("F_followers.1/2 = 1\nU.2/1 = 1\n")
    plan = tmp_path / "plan.json"
    assert main(["compile", str(program), "--mode", "inc", "--hints", str(hints), "--dump-plan", str(plan)]) == 0
    blocks = {b["id"]: b for h in json.loads(plan.read_text())[0]["handlers"] for b in h["blocks"]}
    assert blocks["r<-F_loc:add"]["order"] == [
        "#M⁻¹{user}", "#F_followers⁻¹{celeb__followers__1}", "#U.2{1=celeb}"]


def test_cli_run_stats(program, tmp_path, capsys):
    stats = tmp_path / "s.json"
    assert main(["run", str(program), "--mode", "inc", "--check-against", "orig", "--stats", str(stats)]) == 0
    assert "Q(" in capsys.readouterr().out
    assert json.loads(stats.read_text())["mode"] == "inc"


def test_cli_parse_error(tmp_path, capsys):
    bad = tmp_path / "bad.oq"
    bad.write_text("x = new obj\nx.f = \n")
    assert main(["run", str(bad)]) == 2
    assert f"{bad}:2:" in capsys.readouterr().err


def test_cli_not_demanded(tmp_path, capsys):
    path = tmp_path / "nd.oq"
    path.write_text(aliasing_script_text())
    assert main(["run", str(path), "--mode", "inc"]) == 1
    assert main(["run", str(path), "--mode", "inc", "--auto-demand"]) == 0


def aliasing_script_text() -> str:
    script = aliasing_script()
    ops = [op for op in script.trace if not isinstance(op, A.DemandAdd)]
    return format_program(A.Script(script.queries, ops))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.booleans())
def test_random_traces_agree(seed, weird):
    rep = run_differential(gen_random_trace(seed, n_ops=150, weird=weird), invariants=True)
    assert rep.ok, rep.first
