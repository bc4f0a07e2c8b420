"""JSON renderings of relational queries, maintenance plans and object plans."""

from __future__ import annotations

from .lowering import RelationalQuery, format_relational
from .objectgen import ObjInstr, ObjPlan
from .parser import format_expr
from .planner import (
    ForImage, IfMember, IfNotEqual, IfTest, MaintenancePlan, SearchResult, StoreUpdate,
)


def relational_to_json(rq: RelationalQuery) -> dict:
    return {
        "name": rq.name,
        "params": list(rq.params),
        "demand_params": list(rq.demand_params),
        "clauses": [{"rel": str(c.rel), "vars": list(c.vars), "label": rq.label(c)} for c in rq.clauses],
        "conditions": [format_expr(e) for e in rq.conditions],
        "result": format_expr(rq.result),
        "text": format_relational(rq),
    }


def render_instr(ins) -> str:
    """One line of relational maintenance code."""
    if isinstance(ins, ForImage):
        outs = ",".join(ins.out_vars)
        if not ins.key_comps:
            return f"for ({outs}) in {ins.label}:  # {ins.cost}"
        keys = ",".join(f"{k + 1}={ins.vars[k]}" for k in ins.key_comps)
        return f"for ({outs}) in img {ins.label}{{{keys}}}:  # {ins.cost}"
    if isinstance(ins, IfMember):
        return f"if ({','.join(ins.vars)}) in {ins.label}:"
    if isinstance(ins, IfTest):
        return f"if {format_expr(ins.expr)}:"
    if isinstance(ins, IfNotEqual):
        return f"if ({','.join(ins.left)}) != ({','.join(ins.right)}):"
    if isinstance(ins, StoreUpdate):
        items = ", ".join(format_expr(i) for i in ins.items)
        return f"{ins.rel}.{ins.op}(({items}))" + ("  # guarded" if ins.guarded else "")
    raise TypeError(ins)  # pragma: no cover


def search_to_json(res: SearchResult, labels) -> dict:
    def order(o):
        return {"edges": [labels[s.edge_id] for s in o.steps], "cost": [str(f) for f in o.factors()]}

    return {
        "best": order(res.best),
        "candidates": [order(o) for o in res.candidates],
        "rank_tie_broken": res.rank_tie_broken,
        "expansions": res.expansions,
        "capped": res.capped,
    }


def plan_to_json(plan: MaintenancePlan) -> dict:
    from .planner import build_query_graph

    labels = [e.label for e in build_query_graph(plan.rq).edges]
    return {
        "query": plan.query,
        "mode": plan.mode,
        "strategy": plan.strategy,
        "relational": relational_to_json(plan.rq),
        "invariants": [inv.describe() for inv in plan.invariants],
        "stores": [{"rel": str(d.rel), "arity": d.arity, "counted": d.counted,
                    "keys": [list(k) for k in d.keys], "role": d.role} for d in plan.stores.values()],
        "handlers": [
            {"trigger": str(rel), "kind": kind,
             "blocks": [{"id": b.id, "role": b.role, "order": list(b.order),
                         "body": [render_instr(i) for i in b.instrs]} for b in blocks]}
            for (rel, kind), blocks in plan.handlers.items()
        ],
        "searches": {k: search_to_json(v, labels) for k, v in plan.searches.items()
                     if k.startswith(str(plan.result_rel) + "<-")},
        "notes": list(plan.notes),
    }


def objinstr_to_json(ins: ObjInstr) -> list:
    """``[kind, {non-default fields}, text]``."""
    fields = {}
    if ins.store is not None:
        fields["store"] = str(ins.store)
    for name in ("field", "op", "note"):
        if getattr(ins, name):
            fields[name] = getattr(ins, name)
    for name in ("key_comps", "key_vars", "out_vars"):
        if getattr(ins, name):
            fields[name] = list(getattr(ins, name))
    if ins.expr is not None:
        fields["expr"] = format_expr(ins.expr)
    if ins.items:
        fields["items"] = [format_expr(i) for i in ins.items]
    if ins.guarded:
        fields["guarded"] = True
    return [ins.kind, fields, ins.render()]


def objplan_to_json(plan: ObjPlan) -> dict:
    return {
        "query": plan.query,
        "mode": plan.mode,
        "strategy": plan.strategy,
        "params": list(plan.params),
        "demand_params": list(plan.demand_params),
        "counted_result": plan.counted_result,
        "stores": [[str(d.rel), d.role, d.counted, [list(k) for k in d.keys]] for d in plan.stores.values()],
        "handlers": [
            [str(rel), kind, [[b.id, b.role, [objinstr_to_json(i) for i in b.instrs]] for b in blocks]]
            for (rel, kind), blocks in plan.handlers.items()
        ],
        "notes": list(plan.notes),
    }


def results_to_json(values) -> list:
    from .heap import show_value

    return sorted(show_value(v) for v in values)


__all__ = ["relational_to_json", "plan_to_json", "objplan_to_json", "render_instr"]
