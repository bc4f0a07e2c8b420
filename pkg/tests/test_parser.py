from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from incq import ast as A
from incq.parser import ParseError, format_expr, format_program, parse_expr, parse_program
from incq.scenarios import CELEB_QUERY, JQL_QUERIES

RUNNING = 'query Q(c, g) demand(c, g): { u.email : u in c.followers, u in g, u.loc == "NYC" }\n'


def test_running_example_query():
    script = parse_program(RUNNING)
    (q,) = script.queries
    assert q.params == ("c", "g")
    assert q.demand_params == ("c", "g")
    assert len(q.clauses) == 3
    assert q.clauses[0] == A.Membership("u", A.Field(A.Var("c"), "followers"))
    assert q.clauses[1] == A.Membership("u", A.Var("g"))
    assert isinstance(q.clauses[2], A.Condition)
    assert q.result == A.Field(A.Var("u"), "email")
    assert script.trace == []


def test_demand_defaults_to_params():
    q = parse_program("query P(s): { x : x in s }").queries[0]
    assert q.demand_params == ("s",)
    assert not q.explicit_demand


def test_field_chain_assignment():
    (op,) = parse_program("x = new obj\ny = new obj\nx.f = y.g.h\n").trace[2:]
    assert op == A.FieldAssign(A.Var("x"), "f", A.Field(A.Field(A.Var("y"), "g"), "h"))


def test_trace_operations():
    src = RUNNING + "\n".join([
        "c = new obj", "g = new set", "c.followers = g", "g.add(c)", "g.del(c)",
        "demand Q(c, g)", "ask Q(c, g)", "undemand Q(c, g)", 'assert Q(c, g) == {"a"}',
        "# a comment line",
    ])
    kinds = [type(op).__name__ for op in parse_program(src).trace]
    assert kinds == ["NewObject", "NewSet", "FieldAssign", "SetAdd", "SetDel",
                     "DemandAdd", "Ask", "DemandDel", "AssertResult"]


def test_parenthesized_in_is_a_condition():
    q = parse_program("query P(s, t): { x : x in s, (x in t) }").queries[0]
    assert isinstance(q.clauses[1], A.Condition)
    assert q.clauses[1].expr == A.Compare("in", A.Var("x"), A.Var("t"))


def test_newlines_inside_braces():
    q = parse_program("query P(s): {\n  x :\n  x in s,\n  x.a == 1\n}\n").queries[0]
    assert len(q.clauses) == 2


def test_errors_carry_positions():
    with pytest.raises(ParseError) as info:
        parse_program("x = new obj\nx.f = \ny.add(\n")
    lines = [e.line for e in info.value.errors]
    assert lines == sorted(lines) and lines[0] == 2
    assert all(e.col >= 1 and e.message for e in info.value.errors)


def test_unterminated_string():
    with pytest.raises(ParseError):
        parse_program('x = new obj\nx.f = "abc\n')


@pytest.mark.parametrize("text", ["a and b or c", "not (a == 1)", "-(x - 1)", "(a, b.c, 3)",
                                  "x not in s.f", "a + b - c", '"q\\"uote"', "true or false"])
def test_expr_round_trip(text):
    e = parse_expr(text)
    assert parse_expr(format_expr(e)) == e


def test_builtin_programs_round_trip():
    for text in [CELEB_QUERY, *JQL_QUERIES.values()]:
        script = parse_program(text)
        assert parse_program(format_program(script)) == script


names = st.sampled_from(["a", "b", "x", "user", "s1"])
leaves = st.one_of(
    names.map(A.Var),
    st.integers(0, 99).map(A.Const),
    st.text(alphabet="abc \"\\", max_size=4).map(A.Const),
    st.booleans().map(A.Const),
)


def _extend(sub):
    return st.one_of(
        st.tuples(sub, st.sampled_from(["f", "loc"])).map(lambda t: A.Field(*t) if isinstance(t[0], (A.Var, A.Field)) else t[0]),
        st.tuples(st.sampled_from(A.COMPARE_OPS), sub, sub).map(lambda t: A.Compare(*t)),
        st.tuples(st.sampled_from(["and", "or"]), sub, sub).map(lambda t: A.BoolOp(*t)),
        st.tuples(st.sampled_from(["+", "-"]), sub, sub).map(lambda t: A.Arith(*t)),
        sub.map(A.Not),
        sub.map(A.Neg),
        st.lists(sub, min_size=2, max_size=3).map(lambda xs: A.TupleExpr(tuple(xs))),
    )


exprs = st.recursive(leaves, _extend, max_leaves=8)


@settings(max_examples=300, deadline=None)
@given(exprs)
def test_format_parse_round_trip(e):
    assert parse_expr(format_expr(e)) == e
