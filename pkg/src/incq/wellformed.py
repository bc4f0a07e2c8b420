"""Reachability checks for queries and scripts."""

from __future__ import annotations

from . import ast as A
from .errors import IllFormedQuery, InsufficientDemandParams


def reachable_vars(clauses, roots) -> set[str]:
    """Least fixed point of reachability through membership clauses."""
    reach = set(roots)
    changed = True
    while changed:
        changed = False
        for c in clauses:
            if isinstance(c, A.Membership) and c.var not in reach:
                if A.selector_root(c.selector) in reach:
                    reach.add(c.var)
                    changed = True
    return reach


def check_well_formed(q: A.QuerySpec) -> list[str]:
    """Return unreachable variables in first-occurrence order (empty means ok)."""
    reach = reachable_vars(q.clauses, q.params)
    return [v for v in q.variables() if v not in reach]


def _relational_unreachable(rq) -> list[str]:
    reach = set(rq.demand_params)
    changed = True
    while changed:
        changed = False
        for c in rq.clauses:
            if c.rel.kind in ("field", "member"):
                src, dst = c.vars
                if src in reach and dst not in reach:
                    reach.add(dst)
                    changed = True
    return [v for v in rq.variables() if v not in reach]


def validate_demand_params(q: A.QuerySpec) -> None:
    """Raise ``InsufficientDemandParams`` unless demand params alone reach every variable.

    The check runs on the lowered form so that fresh variables introduced for
    field selections are reported as well.
    """
    from .lowering import lower_query

    extra = [d for d in q.demand_params if d not in q.params]
    if extra:
        raise InsufficientDemandParams(q.name, extra)
    missing = _relational_unreachable(lower_query(q))
    if missing:
        raise InsufficientDemandParams(q.name, missing)


def check_query(q: A.QuerySpec) -> None:
    if not q.params:
        raise IllFormedQuery(q.name, ["<no parameters>"])
    bad = check_well_formed(q)
    if bad:
        raise IllFormedQuery(q.name, bad)
    validate_demand_params(q)


def check_script(script: A.Script) -> list[str]:
    """Static trace diagnostics: unbound variables, unknown queries, arity."""
    problems: list[str] = []
    names = {q.name: q for q in script.queries}
    bound: set[str] = set()

    def need(e: A.Expr, where: A.Pos) -> None:
        for v in A.free_vars(e):
            if v not in bound:
                problems.append(f"{where}: variable {v} used before new")

    for op in script.trace:
        if isinstance(op, (A.NewObject, A.NewSet)):
            bound.add(op.var)
        elif isinstance(op, A.FieldAssign):
            need(op.target, op.pos)
            need(op.value, op.pos)
        elif isinstance(op, (A.SetAdd, A.SetDel)):
            need(op.target, op.pos)
            need(op.elem, op.pos)
        else:
            q = names.get(op.query)
            if q is None:
                problems.append(f"{op.pos}: unknown query {op.query}")
                continue
            want = len(q.demand_params) if isinstance(op, (A.DemandAdd, A.DemandDel)) else len(q.params)
            if len(op.args) != want:
                problems.append(f"{op.pos}: {op.query} expects {want} arguments, got {len(op.args)}")
            for a in op.args:
                need(a, op.pos)
            if isinstance(op, A.AssertResult):
                for e in op.expected:
                    need(e, op.pos)
    return problems
