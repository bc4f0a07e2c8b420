from __future__ import annotations

import pytest

from incq import ast as A
from incq.heap import Obj, SetObj
from incq.lowering import MEMBER, RelId, field_rel, format_relational, lower_query, lower_update
from incq.parser import parse_program
from incq.scenarios import celeb_query, jql_query

RUNNING_RELATIONAL = (
    "Q(celeb, group) demand(celeb, group): { user__email__3 : (celeb,group) in U, "
    "(celeb,celeb__followers__1) in F_followers, (celeb__followers__1,user) in M, (group,user) in M, "
    "(user,user__loc__2) in F_loc, (user,user__email__3) in F_email, user__loc__2 == \"NYC\" }"
)


def query(text: str):
    return parse_program(text).queries[0]


def test_running_example_golden():
    rq = lower_query(celeb_query())
    assert format_relational(rq) == RUNNING_RELATIONAL
    assert len(rq.clauses) == 6
    assert [rq.label(c) for c in rq.clauses] == ["U", "F_followers", "M_1", "M_2", "F_loc", "F_email"]


def test_parameter_only_query():
    rq = lower_query(query("query P(p): { p : }"))
    assert [str(c) for c in rq.clauses] == ["p in U"]
    assert rq.result == A.Var("p")


def test_field_chain():
    rq = lower_query(query("query P(s): { x.a.b : x in s }"))
    rels = [(str(c.rel), c.vars) for c in rq.clauses]
    t, u = rels[2][1][1], rels[3][1][1]
    assert rels == [("U", ("s",)), ("M", ("s", "x")), ("F_a", ("x", t)), ("F_b", (t, u))]
    assert rq.result == A.Var(u)


def test_equality_folding_jql():
    rq = lower_query(jql_query(3))
    assert format_relational(rq).endswith(
        "{ (a, s, comp101) : (attends,students,courses,comp101) in U, (attends,a) in M, "
        "(students,s) in M, (courses,comp101) in M, (a,comp101) in F_course, (a,s) in F_student }")
    assert rq.conditions == ()


def test_parameter_equality_stays_a_test():
    rq = lower_query(query("query P(s, t): { x : x in s, s == t }"))
    assert rq.conditions == (A.Compare("==", A.Var("s"), A.Var("t")),)


@pytest.fixture
def heap():
    u1, g1 = Obj("u1"), SetObj("g1")
    return {"u1": u1, "g1": g1}


def test_first_assignment(heap):
    op = A.FieldAssign(A.Var("u1"), "loc", A.Const("NYC"))
    ups = lower_update(op, heap)
    assert [(u.kind, u.rel, u.tuple) for u in ups] == [("add", field_rel("loc"), (heap["u1"], "NYC"))]


def test_reassignment(heap):
    heap["u1"].fields["loc"] = "NYC"
    ups = lower_update(A.FieldAssign(A.Var("u1"), "loc", A.Const("LA")), heap)
    assert [(u.kind, u.tuple[1]) for u in ups] == [("del", "NYC"), ("add", "LA")]


def test_set_guards(heap):
    add = A.SetAdd(A.Var("g1"), A.Var("u1"))
    assert [(u.kind, u.rel) for u in lower_update(add, heap)] == [("add", MEMBER)]
    heap["g1"].elems[heap["u1"]] = None
    assert lower_update(add, heap) == []
    assert lower_update(A.SetDel(A.Var("g1"), A.Const(3)), heap) == []


def test_demand_updates(heap):
    op = A.DemandAdd("Q", (A.Var("u1"), A.Var("g1")))
    (up,) = lower_update(op, heap)
    assert up.rel == RelId("demand", "", "Q")
    assert lower_update(op, heap, {"Q": {(heap["u1"], heap["g1"])}}) == []
    assert lower_update(A.DemandDel("Q", op.args), heap) == []
