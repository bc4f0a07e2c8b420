from __future__ import annotations

import pytest

from incq.errors import IllFormedQuery, InsufficientDemandParams
from incq.parser import parse_program
from incq.scenarios import celeb_query
from incq.wellformed import check_query, check_script, check_well_formed, validate_demand_params


def query(text: str):
    return parse_program(text).queries[0]


def test_running_example_is_well_formed():
    assert check_well_formed(celeb_query()) == []
    check_query(celeb_query())


def test_russell_style_query_rejected():
    q = query("query P(s): { x : not x in x }")
    assert check_well_formed(q) == ["x"]
    with pytest.raises(IllFormedQuery) as info:
        check_query(q)
    assert info.value.unreachable == ["x"]


def test_parameter_only_query():
    q = query("query P(p): { p : }")
    assert check_well_formed(q) == []
    check_query(q)


def test_demand_params_for_running_example():
    validate_demand_params(celeb_query())


def test_group_alone_suffices_with_extra_clause():
    q = query("query Q(celeb, group) demand(group): "
              "{ user.email : celeb in group, user in celeb.followers, user in group }")
    validate_demand_params(q)


def test_group_alone_is_insufficient():
    q = query("query Q(celeb, group) demand(group): "
              '{ user.email : user in celeb.followers, user in group, user.loc == "NYC" }')
    with pytest.raises(InsufficientDemandParams) as info:
        validate_demand_params(q)
    assert info.value.unreachable == ["celeb", "celeb__followers__1"]


def test_demand_param_must_be_a_param():
    q = query("query P(s) demand(t): { x : x in s }")
    with pytest.raises(InsufficientDemandParams):
        validate_demand_params(q)


def test_check_script_diagnostics():
    script = parse_program(
        "query P(s): { x : x in s }\n"
        "s = new set\n"
        "s.add(y)\n"
        "ask P(s, s)\n"
        "ask R(s)\n"
    )
    problems = check_script(script)
    assert len(problems) == 3
    assert "y used before new" in problems[0]
    assert "expects 1 arguments" in problems[1]
    assert "unknown query R" in problems[2]
