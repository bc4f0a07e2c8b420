from __future__ import annotations

import pytest

from incq import ast as A
from incq.demand import (
    build_demand_dag, fil_rel, find_demand_subgraph, plan_filtered, tag_rel, tag_set_def,
)
from incq.dump import render_instr
from incq.lowering import MEMBER, RelId, field_rel, lower_query
from incq.planner import build_query_graph
from incq.runtime import Runtime
from incq.scenarios import C, V, celeb_query, jql_query

DEMAND = RelId("demand", "", "Q")


@pytest.fixture(scope="module")
def rq():
    return lower_query(celeb_query())


@pytest.fixture(scope="module")
def graph(rq):
    return build_query_graph(rq)


@pytest.fixture(scope="module")
def plan(rq):
    return plan_filtered(rq)


def test_demand_subgraphs(graph, rq):
    assert find_demand_subgraph(graph, rq, "group").vertices == ("group",)
    assert find_demand_subgraph(graph, rq, "celeb").vertices == ("celeb",)
    sub = find_demand_subgraph(graph, rq, "user")
    assert set(sub.vertices) == {"celeb", "group", "celeb__followers__1", "user"}
    assert [graph.edges[i].label for i in sub.edges] == ["F_followers", "M_1", "M_2"]


def test_demand_dag_roots(graph, rq):
    dag = build_demand_dag(graph, rq)
    assert dag.roots == ("celeb", "group")
    assert dag.parents(graph, "user") == ["celeb__followers__1", "group"]


def test_tag_and_filter_definitions(plan):
    defs = {str(i.store): i.describe() for i in plan.aux_invariants()}
    assert defs["T_group"] == "T_group = {group : (celeb,group) in U}"
    assert defs["T_celeb"] == "T_celeb = {celeb : (celeb,group) in U}"
    assert defs["fil_M_2"] == "fil_M_2 = {(group,user) : (group,user) in M, group in T_group}"
    assert defs["T_user"] == "T_user = {user : (celeb__followers__1,user) in fil_M_1, (group,user) in fil_M_2}"
    counted = {str(i.store): i.counted for i in plan.aux_invariants()}
    assert counted["T_user"] and not counted["fil_M_2"]


def test_filtered_f_loc_handler(plan):
    (block,) = plan.handlers[(field_rel("loc"), "add")]
    lines = [render_instr(i) for i in block.instrs]
    assert lines[0] == "if (user) in T_user:"
    assert lines[3] == "for (group) in img fil_M_2{2=user}:  # #fil_M_2⁻¹{user}"


def test_forward_only_query_gets_only_tag_test():
    rq = lower_query(jql_query(1))
    fplan = plan_filtered(rq)
    for block in fplan.handlers[(field_rel("course"), "add")]:
        lines = [render_instr(i) for i in block.instrs]
        assert lines[0] == "if (a) in T_a:"
        assert not any("fil_" in ln for ln in lines[1:])


def test_handler_ordering(plan):
    u_add = [b.role for b in plan.handlers[(DEMAND, "add")]]
    assert u_add.index("result") > max(i for i, r in enumerate(u_add) if r == "tag")
    m_del = [b.role for b in plan.handlers[(MEMBER, "del")]]
    assert m_del[:2] == ["result", "result"] and set(m_del[2:]) == {"filtered"}


def test_propagation_chain(plan):
    ids = [b.id for b in plan.handlers[(tag_rel("Q", "group"), "add")]]
    assert ids == ["fil_M_2<-T_group:add"]
    ids = [b.id for b in plan.handlers[(fil_rel("Q", "M_2"), "add")]]
    assert ids == ["T_user<-fil_M_2:add"]


def test_osq_uses_one_path(graph, rq):
    dag = build_demand_dag(graph, rq)
    assert len(tag_set_def(graph, rq, dag, "user", "ours").incoming) == 2
    assert len(tag_set_def(graph, rq, dag, "user", "osq").incoming) == 1


def test_single_path_osq_identical():
    rq = lower_query(jql_query(1))
    a, b = plan_filtered(rq), plan_filtered(rq, strategy="osq")
    assert [i.describe() for i in a.invariants] == [i.describe() for i in b.invariants]


def _script(n_followers: int, n_group: int):
    ops = [A.NewObject("c"), A.NewSet("fs"), A.NewSet("g"), A.FieldAssign(V("c"), "followers", V("fs"))]
    for i in range(n_followers):
        ops += [A.NewObject(f"u{i}"), A.SetAdd(V("fs"), V(f"u{i}"))]
        ops.append(A.FieldAssign(V(f"u{i}"), "loc", C("NYC")))
        ops.append(A.FieldAssign(V(f"u{i}"), "email", C(f"e{i}")))
        if i < n_group:
            ops.append(A.SetAdd(V("g"), V(f"u{i}")))
    ops.append(A.DemandAdd("Q", (V("c"), V("g"))))
    return A.Script([celeb_query()], ops)


def test_tag_sets_after_demand_add():
    rt = Runtime(_script(10, 3), "fil")
    rt.run()
    stores = rt.queries["Q"].stores
    assert len(stores[tag_rel("Q", "user")]) == 3
    assert len(stores[fil_rel("Q", "M_1")]) == 10
    assert len(stores[fil_rel("Q", "M_2")]) == 3
    assert len(rt.ask("Q", (rt.env["c"], rt.env["g"]))) == 3


def test_osq_tag_set_strictly_larger():
    rt = Runtime(_script(10, 3), "fil-osq")
    rt.run()
    assert len(rt.queries["Q"].stores[tag_rel("Q", "user")]) == 10


def test_demand_del_drains():
    rt = Runtime(_script(6, 2), "fil")
    rt.run()
    rt.demand_del("Q", (rt.env["c"], rt.env["g"]))
    qr = rt.queries["Q"]
    for rel, desc in qr.plan.stores.items():
        if desc.role != "index":
            assert len(qr.stores[rel]) == 0, rel
