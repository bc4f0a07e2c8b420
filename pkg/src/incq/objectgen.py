"""Lowering of relational maintenance blocks to guarded heap and map operations.

F_f and M are never materialized: forward reads become guarded field reads
and set iteration, reverse reads go to the inverse maps kept by the plan, and
every other relation is a keyed map read under a domain guard.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

from . import ast as A
from .lowering import MEMBER, RelId, RelationalQuery, field_rel
from .parser import format_expr
from .planner import (
    ForImage, IfMember, IfNotEqual, IfTest, MaintBlock, MaintenancePlan, StoreDesc, StoreUpdate,
)


@dataclass(frozen=True)
class ObjInstr:
    """One guarded object-level operation.

    kinds: hasfield (bind ``out_vars[0] = key_vars[0].field``), hasfield_eq,
    isset_for, isset_in, dom_for, dom_in, tag_test, in_demand, forall, test,
    noteq, update.
    """

    kind: str
    store: Optional[RelId] = None
    field: str = ""
    key_comps: tuple[int, ...] = ()
    key_vars: tuple[str, ...] = ()
    out_vars: tuple[str, ...] = ()
    expr: Optional[A.Expr] = None
    items: tuple = ()
    op: str = ""
    guarded: bool = False
    note: str = ""

    def render(self) -> str:
        kv = ", ".join(self.key_vars)
        ov = ", ".join(self.out_vars)
        if self.kind == "hasfield":
            return f"if {kv} hasfield {self.field}: {ov} = {kv}.{self.field}"
        if self.kind == "hasfield_eq":
            o, x = self.key_vars
            return f"if {o} hasfield {self.field} and {o}.{self.field} == {x}"
        if self.kind == "isset_for":
            return f"if isset({kv}): for {ov} in {kv}"
        if self.kind == "isset_in":
            s, x = self.key_vars
            return f"if isset({s}) and {x} in {s}"
        if self.kind == "dom_for":
            return f"if ({kv}) in dom({self.store}.{_layout(self.key_comps)}): for ({ov}) in {self.store}{{{kv}}}"
        if self.kind in ("dom_in", "tag_test", "in_demand"):
            return f"if ({kv}) in {self.store}"
        if self.kind == "forall":
            return f"for ({ov}) in {self.store}"
        if self.kind == "test":
            return f"if {format_expr(self.expr)}"
        if self.kind == "noteq":
            return f"if ({kv}) != ({ov})"
        if self.kind == "update":
            args = ", ".join(format_expr(i) for i in self.items)
            guard = "guarded " if self.guarded else ""
            return f"{self.store}.{guard}{self.op}(({args}))"
        return self.kind  # pragma: no cover


def _layout(key: tuple[int, ...]) -> str:
    return "I" + "".join(str(k + 1) for k in key) if key else "all"


@dataclass(frozen=True)
class ObjBlock:
    id: str
    trigger_rel: RelId
    kind: str
    trigger_vars: tuple[str, ...]
    target: RelId
    role: str
    instrs: tuple[ObjInstr, ...]
    order: tuple[str, ...] = ()


@dataclass
class ObjPlan:
    query: str
    mode: str
    strategy: str
    params: tuple[str, ...]
    demand_params: tuple[str, ...]
    handlers: dict[tuple[RelId, str], list[ObjBlock]]
    stores: dict[RelId, StoreDesc]
    counted_result: bool = True
    notes: list[str] = field(default_factory=list)
    source: Optional[MaintenancePlan] = None

    @property
    def result_rel(self) -> RelId:
        return RelId("result", "", self.query)

    @property
    def demand_rel(self) -> RelId:
        return RelId("demand", "", self.query)

    def blocks(self) -> Iterable[ObjBlock]:
        for bs in self.handlers.values():
            yield from bs


def lower_instr(ins) -> ObjInstr:
    """One row of the relational-to-object translation table."""
    if isinstance(ins, ForImage):
        kind = ins.rel.kind
        note = ins.cost.symbol
        if kind == "field" and ins.key_comps == (0,):
            return ObjInstr("hasfield", field=ins.rel.name, key_vars=ins.key_vars, out_vars=ins.out_vars, note=note)
        if kind == "member" and ins.key_comps == (0,):
            return ObjInstr("isset_for", key_vars=ins.key_vars, out_vars=ins.out_vars, note=note)
        if not ins.key_comps:
            return ObjInstr("forall", store=ins.rel, out_vars=ins.out_vars, note=note)
        return ObjInstr("dom_for", store=ins.rel, key_comps=ins.key_comps, key_vars=ins.key_vars,
                        out_vars=ins.out_vars, note=note)
    if isinstance(ins, IfMember):
        kind = ins.rel.kind
        if kind == "field":
            return ObjInstr("hasfield_eq", field=ins.rel.name, key_vars=ins.vars)
        if kind == "member":
            return ObjInstr("isset_in", key_vars=ins.vars)
        name = {"tag": "tag_test", "demand": "in_demand"}.get(kind, "dom_in")
        return ObjInstr(name, store=ins.rel, key_vars=ins.vars)
    if isinstance(ins, IfTest):
        return ObjInstr("test", expr=ins.expr)
    if isinstance(ins, IfNotEqual):
        return ObjInstr("noteq", key_vars=ins.left, out_vars=ins.right)
    if isinstance(ins, StoreUpdate):
        return ObjInstr("update", store=ins.rel, items=ins.items, op=ins.op, guarded=ins.guarded)
    raise TypeError(ins)  # pragma: no cover


def lower_block(b: MaintBlock) -> ObjBlock:
    return ObjBlock(b.id, b.trigger_rel, b.kind, b.trigger_vars, b.target, b.role,
                    tuple(lower_instr(i) for i in b.instrs), b.order)


def lower_plan(plan: MaintenancePlan) -> ObjPlan:
    handlers = {k: [lower_block(b) for b in bs] for k, bs in plan.handlers.items()}
    stores = {k: replace(v, keys=list(v.keys)) for k, v in plan.stores.items()}
    return ObjPlan(plan.query, plan.mode, plan.strategy, plan.rq.params, plan.rq.demand_params,
                   handlers, stores, stores[plan.result_rel].counted, list(plan.notes), plan)


# ------------------------------------------------------------------
# Counting elimination
# ------------------------------------------------------------------


def deletion_kinds(trace: Iterable[A.TraceOp]) -> set[RelId]:
    """Relations a trace may delete from (conservative)."""
    out: set[RelId] = set()
    epoch: dict[str, int] = {}
    assigned: set[tuple] = set()
    for op in trace:
        if isinstance(op, (A.NewObject, A.NewSet)):
            epoch[op.var] = epoch.get(op.var, 0) + 1
        elif isinstance(op, A.SetDel):
            out.add(MEMBER)
        elif isinstance(op, A.DemandDel):
            out.add(RelId("demand", "", op.query))
        elif isinstance(op, A.FieldAssign):
            if isinstance(op.target, A.Var):
                key = (op.target.name, epoch.get(op.target.name, 0), op.field)
                if key in assigned:
                    out.add(field_rel(op.field))
                assigned.add(key)
            else:
                out.add(field_rel(op.field))
    return out


def additions_only(rq: RelationalQuery, trace: Optional[Iterable[A.TraceOp]]) -> bool:
    if trace is None:
        return False
    dels = deletion_kinds(trace)
    rels = {c.rel for c in rq.clauses}
    return not (dels & rels)


def unique_derivations(rq: RelationalQuery) -> bool:
    """Every variable is fixed by the parameters and an injective result."""
    res = rq.result
    if isinstance(res, A.Var):
        rvars = [res.name]
    elif isinstance(res, A.TupleExpr) and all(isinstance(i, A.Var) for i in res.items):
        rvars = [i.name for i in res.items]
        if len(set(rvars)) != len(rvars):
            return False
    else:
        return False
    known = set(rq.params) | set(rvars)
    changed = True
    while changed:
        changed = False
        for c in rq.clauses:
            if c.rel.kind == "field" and c.vars[0] in known and c.vars[1] not in known:
                known.add(c.vars[1])
                changed = True
    return set(rq.variables()) <= known


def eliminate_counts(plan: ObjPlan, rq: RelationalQuery, trace: Optional[Iterable[A.TraceOp]] = None) -> ObjPlan:
    """Switch the result store to plain guarded add/del when counts are redundant."""
    trace = list(trace) if trace is not None else None
    reason = None
    if additions_only(rq, trace):
        reason = "additions only"
    elif unique_derivations(rq):
        reason = "unique derivations"
    if reason is None:
        return plan
    r = plan.result_rel
    plan.stores[r].counted = False
    new_handlers = {}
    for key, blocks in plan.handlers.items():
        nb = []
        for b in blocks:
            instrs = tuple(
                replace(i, op={"cadd": "add", "cdel": "del"}[i.op], guarded=True)
                if i.kind == "update" and i.store == r and i.op in ("cadd", "cdel") else i
                for i in b.instrs)
            nb.append(replace(b, instrs=instrs))
        new_handlers[key] = nb
    plan.handlers = new_handlers
    plan.counted_result = False
    plan.notes.append(f"counting eliminated for {r}: {reason}")
    return plan
