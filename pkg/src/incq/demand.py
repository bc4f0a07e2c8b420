"""Demand filtering: tag sets, filtered relations, and the filtered-mode plan.

Tag set ``T_v`` holds the values variable ``v`` can take in bindings that
start from the demand set ``U``; filtered relation ``fil_e`` keeps the tuples
of edge ``e`` whose source lies in the source's tag set. Both are ordinary
invariants, so their maintenance is planned exactly like the query result.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

from .lowering import RelClause, RelId, RelationalQuery
from .planner import (
    FILTERED_IMAGE, UNIT, CostFactor, Edge, ForImage, IfMember, InvariantDef, MaintBlock,
    MaintenancePlan, QueryGraph, StoreDesc, install_invariant_plan, build_query_graph, derive_auxiliary_relations,
    new_plan, order_all_maintenance, plan_invariant, result_invariant,
)


@dataclass(frozen=True)
class DemandDag:
    """Greedy maximal DAG over forward F_f/M edges rooted at the demand parameters."""

    roots: tuple[str, ...]
    edges: tuple[int, ...]
    incoming: dict

    def parents(self, g: QueryGraph, v: str) -> list[str]:
        return [g.edges[i].vars[0] for i in self.incoming.get(v, ())]


@dataclass(frozen=True)
class DemandSubgraph:
    target: str
    vertices: tuple[str, ...]
    edges: tuple[int, ...]


@dataclass(frozen=True)
class TagSetDef:
    var: str
    incoming: tuple[int, ...]  # filtered-edge ids; empty for a demand parameter


@dataclass(frozen=True)
class FilteredRelDef:
    edge: int
    base: RelId
    source_tag: str


def _has_path(adj: dict, a: str, b: str) -> bool:
    stack, seen = [a], {a}
    while stack:
        x = stack.pop()
        if x == b:
            return True
        for y in adj.get(x, ()):
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return False


def build_demand_dag(g: QueryGraph, rq: RelationalQuery) -> DemandDag:
    """BFS-tree edges from the roots first, then any other edge (by id) that keeps it acyclic."""
    roots = tuple(rq.demand_params)
    cand = [e for e in g.edges
            if e.rel.kind in ("field", "member") and e.vars[0] != e.vars[1] and e.vars[1] not in roots]
    reached = set(roots)
    queue = list(roots)
    chosen: list[int] = []
    while queue:
        v = queue.pop(0)
        for e in cand:
            if e.vars[0] == v and e.vars[1] not in reached:
                reached.add(e.vars[1])
                chosen.append(e.id)
                queue.append(e.vars[1])
    adj: dict[str, list[str]] = {}
    for i in chosen:
        s, d = g.edges[i].vars
        adj.setdefault(s, []).append(d)
    for e in cand:
        if e.id in chosen or e.vars[0] not in reached:
            continue
        s, d = e.vars
        if not _has_path(adj, d, s):
            chosen.append(e.id)
            adj.setdefault(s, []).append(d)
    chosen.sort()
    incoming: dict[str, tuple[int, ...]] = {}
    for i in chosen:
        d = g.edges[i].vars[1]
        incoming[d] = incoming.get(d, ()) + (i,)
    return DemandDag(roots, tuple(chosen), incoming)


def find_demand_subgraph(g: QueryGraph, rq: RelationalQuery, var: str,
                         dag: Optional[DemandDag] = None) -> DemandSubgraph:
    """The part of the demand DAG from which ``var`` is reached."""
    dag = dag or build_demand_dag(g, rq)
    verts = {var}
    edges: set[int] = set()
    stack = [var]
    while stack:
        v = stack.pop()
        for i in dag.incoming.get(v, ()):
            edges.add(i)
            s = g.edges[i].vars[0]
            if s not in verts:
                verts.add(s)
                stack.append(s)
    order = [v for v in g.vertices if v in verts]
    return DemandSubgraph(var, tuple(order), tuple(sorted(edges)))


def tag_rel(q: str, v: str) -> RelId:
    return RelId("tag", v, q)


def fil_rel(q: str, label: str) -> RelId:
    return RelId("filtered", label, q)


def tag_set_def(g: QueryGraph, rq: RelationalQuery, dag: DemandDag, var: str, strategy: str) -> TagSetDef:
    if var in dag.roots:
        return TagSetDef(var, ())
    inc = dag.incoming.get(var, ())
    if strategy == "osq":
        inc = inc[:1]
    return TagSetDef(var, tuple(inc))


def define_filter_invariants(g: QueryGraph, rq: RelationalQuery, dag: DemandDag, tags, fils):
    """Invariant definitions for the requested tag sets and filtered relations."""
    q = rq.name
    out: list[InvariantDef] = []
    for t in tags:
        store = tag_rel(q, t.var)
        if not t.incoming:
            u = RelId("demand", "", q)
            out.append(InvariantDef(store, (RelClause(tuple(rq.demand_params), u, 1),), (), (t.var,),
                                    None, True, "tag"))
            continue
        clauses = []
        used: set[str] = {t.var}
        for n, i in enumerate(t.incoming, 1):
            e = g.edges[i]
            src = e.vars[0]
            if src in used:
                src = f"{src}__{n}"
            used.add(src)
            clauses.append(RelClause((src, t.var), fil_rel(q, e.label), 1))
        out.append(InvariantDef(store, tuple(clauses), (), (t.var,), None, True, "tag"))
    for f in fils:
        e = g.edges[f.edge]
        u, v = e.vars
        clauses = (RelClause((u, v), f.base, 1), RelClause((u,), tag_rel(q, u), 1))
        out.append(InvariantDef(fil_rel(q, e.label), clauses, (), (u, v), None, False, "filtered"))
    return out


def _implied_tests(g: QueryGraph, dag: DemandDag, tagdefs: dict, trig: Edge) -> list[str]:
    """Trigger variables that still need a tag-membership test."""
    if trig.rel.kind == "demand":
        return []
    tests: list[str] = []
    covered: set[str] = set()
    for v in dict.fromkeys(trig.vars):
        if v not in dag.roots and v not in dag.incoming:
            continue
        inc = tagdefs[v].incoming if v in tagdefs else dag.incoming.get(v, ())
        if v not in dag.roots and tuple(inc) == (trig.id,) and trig.vars[0] in covered:
            covered.add(v)
            continue
        tests.append(v)
        covered.add(v)
    return tests


def rewrite_with_filters(block: MaintBlock, g: QueryGraph, dag: DemandDag, q: str, tagdefs: dict) -> MaintBlock:
    """Redirect reverse reads along demand edges to filtered relations and add tag tests."""
    trig = next(e for e in g.edges if e.label == block.trigger_label)
    instrs = []
    for v in _implied_tests(g, dag, tagdefs, trig):
        instrs.append(IfMember(-1, tag_rel(q, v), f"T_{v}", (v,)))
    for ins in block.instrs:
        if (isinstance(ins, ForImage) and ins.rel.kind in ("field", "member")
                and ins.key_comps == (1,) and ins.edge_id in dag.edges):
            rel = fil_rel(q, ins.label)
            cost = CostFactor(FILTERED_IMAGE, f"#fil_{ins.label}⁻¹{{{ins.vars[1]}}}")
            ins = replace(ins, rel=rel, label=f"fil_{ins.label}", cost=cost)
        instrs.append(ins)
    order = tuple(str(i.cost) for i in instrs if isinstance(i, ForImage) and i.cost.rank != UNIT)
    return replace(block, instrs=tuple(instrs), order=order)


def plan_filtered(rq: RelationalQuery, hints: Optional[dict] = None, counted: bool = True,
                  strategy: str = "ours") -> MaintenancePlan:
    """Whole-query plan for filtered mode (``strategy`` is ``ours`` or ``osq``)."""
    plan = new_plan(rq, "fil", strategy, counted)
    inv = result_invariant(rq, counted)
    plan.invariants.append(inv)
    ip = plan_invariant(inv, hints)
    g = ip.graph
    dag = build_demand_dag(g, rq)
    tagdefs = {v: tag_set_def(g, rq, dag, v, strategy)
               for v in g.vertices if v in dag.roots or v in dag.incoming}
    ip.blocks = [rewrite_with_filters(b, g, dag, rq.name, tagdefs) for b in ip.blocks]
    install_invariant_plan(plan, ip)
    plan.notes.append("demand DAG edges: " + ", ".join(g.edges[i].label for i in dag.edges))
    by_label = {e.label: e for e in g.edges}

    def referenced(blocks):
        for b in blocks:
            rels = [b.trigger_rel] + [rel for rel, _ in b.accesses()]
            for rel in rels:
                if rel.kind in ("tag", "filtered") and rel not in plan.stores:
                    yield rel

    work = list(dict.fromkeys(referenced(ip.blocks)))
    while work:
        rel = work.pop(0)
        if rel in plan.stores:
            continue
        if rel.kind == "tag":
            (d,) = define_filter_invariants(g, rq, dag, [tagdefs[rel.name]], [])
            plan.stores[rel] = StoreDesc(rel, 1, True, [()], "tag")
        else:
            e = by_label[rel.name]
            (d,) = define_filter_invariants(g, rq, dag, [], [FilteredRelDef(e.id, e.rel, e.vars[0])])
            plan.stores[rel] = StoreDesc(rel, 2, False, [(1,)], "filtered")
        plan.invariants.append(d)
        dip = plan_invariant(d, hints)
        install_invariant_plan(plan, dip)
        work.extend(r for r in referenced(dip.blocks) if r not in work)
    derive_auxiliary_relations(plan)
    return order_all_maintenance(plan)


def osq_strategy_filters(g: QueryGraph, rq: RelationalQuery):
    """Tag and filtered definitions when tags follow only the first incoming edge."""
    return all_filter_defs(g, rq, "osq")


def all_filter_defs(g: QueryGraph, rq: RelationalQuery, strategy: str = "ours"):
    dag = build_demand_dag(g, rq)
    tags = [tag_set_def(g, rq, dag, v, strategy) for v in g.vertices if v in dag.roots or v in dag.incoming]
    fils = [FilteredRelDef(i, g.edges[i].rel, g.edges[i].vars[0]) for i in dag.edges]
    return tags, fils


__all__ = [
    "DemandDag", "DemandSubgraph", "TagSetDef", "FilteredRelDef", "build_demand_dag",
    "find_demand_subgraph", "define_filter_invariants", "rewrite_with_filters", "plan_filtered",
    "osq_strategy_filters", "all_filter_defs", "tag_rel", "fil_rel", "build_query_graph",
]
