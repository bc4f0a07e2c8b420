from __future__ import annotations

from fractions import Fraction

import pytest

from incq.dump import render_instr
from incq.lowering import RelId, field_rel, lower_query
from incq.parser import parse_program
from incq.planner import (
    DEMAND_IMAGE, FULL_SCAN, REL_IMAGE, UNIT, IfNotEqual, build_query_graph, cost_of_step,
    parse_hints, plan_incremental, search_access_order,
)
from incq.scenarios import celeb_query, jql_query

F_LOC_ADD = [
    'if user__loc__2 == "NYC":',
    "for (user__email__3) in img F_email{1=user}:  # 1",
    "for (group) in img M_2{2=user}:  # #M⁻¹{user}",
    "for (celeb) in img U{2=group}:  # #U.1{2=group}",
    "for (celeb__followers__1) in img F_followers{1=celeb}:  # 1",
    "if (celeb__followers__1,user) in M_1:",
    "r.cadd((celeb, group, user__email__3))",
]


@pytest.fixture(scope="module")
def rq():
    return lower_query(celeb_query())


@pytest.fixture(scope="module")
def graph(rq):
    return build_query_graph(rq)


def edge(g, label):
    return next(e for e in g.edges if e.label == label)


def test_query_graph(graph):
    assert [e.label for e in graph.edges] == ["U", "F_followers", "M_1", "M_2", "F_loc", "F_email"]
    verts = {v for e in graph.edges for v in e.vars}
    assert len(verts) == 6


def test_single_clause_graph():
    g = build_query_graph(lower_query(parse_program("query P(p): { p : }").queries[0]))
    assert [(e.label, e.vars) for e in g.edges] == [("U", ("p",))]


def test_cost_factors(graph):
    f = cost_of_step(edge(graph, "F_email"), {"user"})
    assert (f.rank, str(f)) == (UNIT, "1")
    m = cost_of_step(edge(graph, "M_2"), {"user"})
    assert (m.rank, str(m)) == (REL_IMAGE, "#M⁻¹{user}")
    u = cost_of_step(edge(graph, "U"), {"group"})
    assert (u.rank, str(u), u.hint_key) == (DEMAND_IMAGE, "#U.1{2=group}", "U.1/2")
    assert cost_of_step(edge(graph, "U"), set()).rank == FULL_SCAN


def test_hint_makes_factor_unit(graph):
    hints = parse_hints("F_followers.1/2 = 1  # one celeb per followers set\n\nU.2/1 = 1/2")
    assert hints == {"F_followers.1/2": Fraction(1), "U.2/1": Fraction(1, 2)}
    f = cost_of_step(edge(graph, "F_followers"), {"celeb__followers__1"}, hints)
    assert f.effective_rank == UNIT and f.rank == REL_IMAGE


def test_bad_hints_line():
    with pytest.raises(ValueError):
        parse_hints("F_followers.1/2")


def test_trigger_u_is_from_scratch(graph):
    res = search_access_order(graph, edge(graph, "U").id)
    labels = [graph.edges[s.edge_id].label for s in res.best.steps]
    assert labels[0] == "F_followers"
    assert {s.edge_id for s in res.best.steps} == set(range(1, 6))


def test_f_loc_add_block(rq):
    plan = plan_incremental(rq)
    (block,) = plan.handlers[(field_rel("loc"), "add")]
    assert [render_instr(i) for i in block.instrs] == F_LOC_ADD
    (dblock,) = plan.handlers[(field_rel("loc"), "del")]
    assert render_instr(dblock.instrs[-1]) == "r.cdel((celeb, group, user__email__3))"
    assert [render_instr(i) for i in dblock.instrs[:-1]] == F_LOC_ADD[:-1]


def test_inverse_indices(rq):
    plan = plan_incremental(rq)
    roles = {str(r): d.role for r, d in plan.stores.items()}
    assert roles == {"r": "result", "U": "demand", "F_followers": "index", "M": "index"}
    assert plan.stores[RelId("member")].keys == [(1,)]
    ids = [b.id for b in plan.handlers[(RelId("member"), "add")]]
    assert ids == ["M.index:add", "r<-M_1:add", "r<-M_2:add"]
    ids = [b.id for b in plan.handlers[(RelId("member"), "del")]]
    assert ids == ["r<-M_1:del", "r<-M_2:del", "M.index:del"]


def test_self_join_augmentation(rq):
    plan = plan_incremental(rq)
    m1, m2 = plan.handlers[(RelId("member"), "add")][1:]
    assert not any(isinstance(i, IfNotEqual) for i in m1.instrs)
    (neq,) = [i for i in m2.instrs if isinstance(i, IfNotEqual)]
    assert render_instr(neq) == "if (celeb__followers__1,user) != (group,user):"


def test_no_reverse_accesses():
    plan = plan_incremental(lower_query(jql_query(1)))
    assert all(d.role != "index" for d in plan.stores.values())
    assert plan.aux_invariants() == []
