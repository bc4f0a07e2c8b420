"""Object queries and heap updates to relational form over heap and demand relations."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from . import ast as A
from .errors import EvalError, TraceError, UnboundVariable
from .evaluate import eval_expr
from .heap import Obj, SetObj


@dataclass(frozen=True)
class RelId:
    """Relation identity.

    ``kind`` is one of field, member, demand, result, tag, filtered. Per-query
    relations (everything except field and member) carry the query name.
    """

    kind: str
    name: str = ""
    query: str = ""

    def __str__(self) -> str:
        if self.kind == "field":
            return f"F_{self.name}"
        if self.kind == "member":
            return "M"
        if self.kind == "demand":
            return "U"
        if self.kind == "result":
            return "r"
        if self.kind == "tag":
            return f"T_{self.name}"
        return f"fil_{self.name}"

    @property
    def is_base(self) -> bool:
        return self.kind in ("field", "member", "demand")


MEMBER = RelId("member")


def field_rel(f: str) -> RelId:
    return RelId("field", f)


@dataclass(frozen=True)
class RelClause:
    vars: tuple[str, ...]
    rel: RelId
    occurrence: int = 0  # 1-based among clauses over the same relation

    def __str__(self) -> str:
        lhs = self.vars[0] if len(self.vars) == 1 else "(" + ",".join(self.vars) + ")"
        return f"{lhs} in {self.rel}"


@dataclass(frozen=True)
class RelationalQuery:
    name: str
    params: tuple[str, ...]
    demand_params: tuple[str, ...]
    clauses: tuple[RelClause, ...]
    conditions: tuple[A.Expr, ...]
    result: A.Expr
    fresh_vars: dict = field(default_factory=dict, compare=False, hash=False)

    def variables(self) -> list[str]:
        seen: dict[str, None] = {}
        for v in A.free_vars(self.result):
            seen.setdefault(v, None)
        for c in self.clauses:
            for v in c.vars:
                seen.setdefault(v, None)
        for e in self.conditions:
            for v in A.free_vars(e):
                seen.setdefault(v, None)
        return list(seen)

    def occurrences(self, rel: RelId) -> list[RelClause]:
        return [c for c in self.clauses if c.rel == rel]

    def label(self, c: RelClause) -> str:
        """Relation name with an occurrence suffix when the relation repeats."""
        if len(self.occurrences(c.rel)) > 1:
            return f"{c.rel}_{c.occurrence}"
        return str(c.rel)


class _Lowerer:
    def __init__(self, q: A.QuerySpec):
        self.q = q
        self.counter = 0
        self.fresh: dict[tuple[str, str], str] = {}
        self.clauses: list[RelClause] = []

    def new_var(self, base: str, f: str) -> str:
        key = (base, f)
        if key not in self.fresh:
            self.counter += 1
            name = f"{base}__{f}__{self.counter}"
            self.fresh[key] = name
            self.clauses.append(RelClause((base, name), field_rel(f)))
        return self.fresh[key]

    def expr(self, e: A.Expr) -> A.Expr:
        """Replace field selections by fresh variables, innermost first."""
        if isinstance(e, A.Field):
            base = self.expr(e.base)
            if isinstance(base, A.Var):
                return A.Var(self.new_var(base.name, e.name))
            # field of a non-variable value can never succeed; keep for skip semantics
            return A.Field(base, e.name)
        if isinstance(e, A.Compare):
            return A.Compare(e.op, self.expr(e.left), self.expr(e.right))
        if isinstance(e, A.BoolOp):
            return A.BoolOp(e.op, self.expr(e.left), self.expr(e.right))
        if isinstance(e, A.Arith):
            return A.Arith(e.op, self.expr(e.left), self.expr(e.right))
        if isinstance(e, A.Not):
            return A.Not(self.expr(e.operand))
        if isinstance(e, A.Neg):
            return A.Neg(self.expr(e.operand))
        if isinstance(e, A.TupleExpr):
            return A.TupleExpr(tuple(self.expr(i) for i in e.items))
        return e


def _fold_equalities(params, clauses, conditions, result, fresh):
    """Substitute variables away using top-level ``x == y`` conditions.

    The removed variable is a fresh one when possible (the later one if both
    are fresh), otherwise a non-parameter; conditions between two parameters
    stay as tests.
    """
    fresh_set = set(fresh.values())
    order = {}
    for c in clauses:
        for v in c.vars:
            order.setdefault(v, len(order))
    conditions = list(conditions)
    changed = True
    while changed:
        changed = False
        for i, e in enumerate(conditions):
            if not (isinstance(e, A.Compare) and e.op == "==" and isinstance(e.left, A.Var)
                    and isinstance(e.right, A.Var)):
                continue
            a, b = e.left.name, e.right.name
            if a == b:
                del conditions[i]
                changed = True
                break
            cands = [v for v in (a, b) if v in fresh_set]
            if not cands:
                cands = [v for v in (a, b) if v not in params]
            if not cands:
                continue
            victim = max(cands, key=lambda v: order.get(v, len(order)))
            keeper = b if victim == a else a
            sub = {victim: A.Var(keeper)}
            del conditions[i]
            clauses = [RelClause(tuple(keeper if v == victim else v for v in c.vars), c.rel)
                       for c in clauses]
            conditions = [A.substitute(c, sub) for c in conditions]
            result = A.substitute(result, sub)
            for k, v in list(fresh.items()):
                if v == victim:
                    fresh[k] = keeper
            fresh_set.discard(victim)
            changed = True
            break
    unique: list[RelClause] = []
    for c in clauses:
        if c not in unique:
            unique.append(c)
    return unique, conditions, result


def _number(clauses: list[RelClause]) -> tuple[RelClause, ...]:
    seen: dict[RelId, int] = {}
    out = []
    for c in clauses:
        seen[c.rel] = seen.get(c.rel, 0) + 1
        out.append(RelClause(c.vars, c.rel, seen[c.rel]))
    return tuple(out)


def lower_query(q: Union[A.QuerySpec, RelationalQuery], fold: bool = True) -> RelationalQuery:
    """Lower an object query; relational input is returned unchanged."""
    if isinstance(q, RelationalQuery):
        return q
    lw = _Lowerer(q)
    if q.demand_params:
        lw.clauses.append(RelClause(tuple(q.demand_params), RelId("demand", "", q.name)))
    conditions: list[A.Expr] = []
    for c in q.clauses:
        if isinstance(c, A.Membership):
            sel = lw.expr(c.selector)
            assert isinstance(sel, A.Var)
            lw.clauses.append(RelClause((sel.name, c.var), MEMBER))
        else:
            conditions.append(lw.expr(c.expr))
    result = lw.expr(q.result)
    fresh = dict(lw.fresh)
    clauses = lw.clauses
    if fold:
        clauses, conditions, result = _fold_equalities(set(q.params), clauses, conditions, result, fresh)
    return RelationalQuery(q.name, tuple(q.params), tuple(q.demand_params), _number(clauses),
                           tuple(conditions), result, fresh)


def format_relational(rq: RelationalQuery) -> str:
    from .parser import format_expr

    parts = [str(c) for c in rq.clauses] + [format_expr(e) for e in rq.conditions]
    head = f"{rq.name}({', '.join(rq.params)}) demand({', '.join(rq.demand_params)})"
    return f"{head}: {{ {format_expr(rq.result)} : {', '.join(parts)} }}"


# ------------------------------------------------------------------
# Updates
# ------------------------------------------------------------------


@dataclass(frozen=True)
class RelUpdate:
    kind: str  # add | del
    rel: RelId
    tuple: tuple

    def __str__(self) -> str:
        sign = "+=" if self.kind == "add" else "-="
        return f"{self.rel} {sign} {{{self.tuple!r}}}"


def _value(e: A.Expr, env: dict) -> object:
    for v in A.free_vars(e):
        if v not in env:
            raise UnboundVariable(f"variable {v} is not bound")
    try:
        return eval_expr(e, env)
    except EvalError as err:
        raise TraceError(str(err)) from None


def lower_update(op: A.TraceOp, env: dict, demand: Optional[dict[str, set]] = None) -> list[RelUpdate]:
    """Relational updates for one trace op, including the membership guards."""
    if isinstance(op, A.FieldAssign):
        o = _value(op.target, env)
        if not isinstance(o, Obj):
            raise TraceError(f"assignment to field {op.field} of non-object")
        x = _value(op.value, env)
        rel = field_rel(op.field)
        out = []
        if op.field in o.fields:
            out.append(RelUpdate("del", rel, (o, o.fields[op.field])))
        out.append(RelUpdate("add", rel, (o, x)))
        return out
    if isinstance(op, (A.SetAdd, A.SetDel)):
        s = _value(op.target, env)
        if not isinstance(s, SetObj):
            raise TraceError("set update on non-set")
        x = _value(op.elem, env)
        present = x in s.elems
        if isinstance(op, A.SetAdd):
            return [] if present else [RelUpdate("add", MEMBER, (s, x))]
        return [RelUpdate("del", MEMBER, (s, x))] if present else []
    if isinstance(op, (A.DemandAdd, A.DemandDel)):
        t = tuple(_value(a, env) for a in op.args)
        rel = RelId("demand", "", op.query)
        current = (demand or {}).get(op.query, set())
        if isinstance(op, A.DemandAdd):
            return [] if t in current else [RelUpdate("add", rel, t)]
        return [RelUpdate("del", rel, t)] if t in current else []
    raise TypeError(f"not an update: {op!r}")
