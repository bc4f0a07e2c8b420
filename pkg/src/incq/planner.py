"""Incremental maintenance planning: query graphs, access orders, maintenance blocks.

Every materialized relation (the query result, and in filtered mode the tag
sets and filtered relations) is described by an ``InvariantDef``: a
comprehension over other relations. Planning an invariant means, for each of
its clauses taken as the trigger of an update, choosing an access order for
the remaining clauses and emitting a block of nested loops and tests that
ends in an update of the defined relation.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

from . import ast as A
from .errors import PlanningError
from .lowering import RelClause, RelId, RelationalQuery

UNIT, DEMAND_IMAGE, FILTERED_IMAGE, REL_IMAGE, FULL_SCAN = range(5)
RANK_NAMES = ("Unit", "DemandImage", "FilteredImage", "RelImage", "FullScan")
SEARCH_CAP = 10_000

# ------------------------------------------------------------------
# Query graph
# ------------------------------------------------------------------


@dataclass(frozen=True)
class Edge:
    id: int
    rel: RelId
    label: str
    vars: tuple[str, ...]

    @property
    def src(self) -> tuple[str, ...]:
        return self.vars[:1] if len(self.vars) > 1 else ()

    @property
    def dst(self) -> tuple[str, ...]:
        return self.vars[1:] if len(self.vars) > 1 else self.vars


@dataclass(frozen=True)
class QueryGraph:
    vertices: tuple[str, ...]
    edges: tuple[Edge, ...]

    def occurrences(self, rel: RelId) -> list[Edge]:
        return [e for e in self.edges if e.rel == rel]


def _labels(clauses) -> list[str]:
    counts = Counter(c.rel for c in clauses)
    seen: Counter = Counter()
    out = []
    for c in clauses:
        seen[c.rel] += 1
        out.append(f"{c.rel}_{seen[c.rel]}" if counts[c.rel] > 1 else str(c.rel))
    return out


def build_query_graph(q: Union[RelationalQuery, "InvariantDef"]) -> QueryGraph:
    """One edge per relational clause, ids in clause order."""
    clauses = q.clauses
    verts: dict[str, None] = {}
    for c in clauses:
        for v in c.vars:
            verts.setdefault(v, None)
    edges = tuple(Edge(i, c.rel, lab, c.vars) for i, (c, lab) in enumerate(zip(clauses, _labels(clauses))))
    return QueryGraph(tuple(verts), edges)


# ------------------------------------------------------------------
# Costs
# ------------------------------------------------------------------


@dataclass(frozen=True)
class CostFactor:
    rank: int
    symbol: str
    hint_key: str = ""
    hint: Optional[Fraction] = None

    @property
    def effective_rank(self) -> int:
        if self.rank != UNIT and self.hint is not None and self.hint <= 1:
            return UNIT
        return self.rank

    def __str__(self) -> str:
        return self.symbol


def _comps(cs) -> str:
    return ",".join(str(c + 1) for c in cs)


def _symbol(rel: RelId, label: str, vars_, key: tuple[int, ...], out: tuple[int, ...]) -> str:
    name = label
    if not key:
        return f"#{name}"
    if len(vars_) == 2 and rel.kind in ("field", "member", "filtered"):
        if key == (0,):
            return f"#{name}{{{vars_[0]}}}"
        return f"#{name}⁻¹{{{vars_[1]}}}"
    binds = ",".join(f"{k + 1}={vars_[k]}" for k in key)
    outs = _comps(out)
    if len(out) > 1:
        outs = f"({outs})"
    return f"#{name}.{outs}{{{binds}}}"


def _hint_name(rel: RelId) -> str:
    return str(rel)


def cost_of_step(edge: Edge, bound, hints: Optional[dict] = None) -> CostFactor:
    """Cost of covering ``edge`` when the variables in ``bound`` are known."""
    key = tuple(i for i, v in enumerate(edge.vars) if v in bound)
    out = tuple(i for i, v in enumerate(edge.vars) if v not in bound)
    if not out:
        return CostFactor(UNIT, "1")
    kind = edge.rel.kind
    # symbols use the bare relation name; occurrence suffixes only label edges
    name = str(edge.rel) if kind in ("field", "member", "demand") else edge.label
    symbol = _symbol(edge.rel, name, edge.vars, key, out)
    if kind == "field" and 0 in key:
        return CostFactor(UNIT, "1")
    if not key:
        return CostFactor(FULL_SCAN, symbol)
    hint_key = f"{_hint_name(edge.rel)}.{_comps(out)}/{_comps(key)}"
    hint = (hints or {}).get(hint_key)
    if kind == "demand":
        rank = DEMAND_IMAGE
    elif kind in ("filtered", "tag"):
        rank = FILTERED_IMAGE
    else:
        rank = REL_IMAGE
    return CostFactor(rank, symbol, hint_key, hint)


# ------------------------------------------------------------------
# Access orders
# ------------------------------------------------------------------


@dataclass(frozen=True)
class Access:
    edge_id: int
    key_comps: tuple[int, ...]
    out_comps: tuple[int, ...]
    cost: CostFactor


@dataclass(frozen=True)
class AccessOrder:
    trigger: int
    bound_before: tuple[str, ...]
    steps: tuple[Access, ...]

    def factors(self) -> list[CostFactor]:
        return [s.cost for s in self.steps if s.cost.rank != UNIT]

    def symbol_multiset(self) -> Counter:
        return Counter(f.symbol for f in self.factors())

    def edge_sequence(self) -> tuple[int, ...]:
        return tuple(s.edge_id for s in self.steps)

    def sort_key(self):
        unhinted = sorted((f.rank for f in self.factors() if f.hint is None), reverse=True)
        prod = Fraction(1)
        for f in self.factors():
            if f.hint is not None:
                prod *= f.hint
        return (tuple(unhinted), prod, self.edge_sequence())


@dataclass
class SearchResult:
    best: AccessOrder
    candidates: list[AccessOrder]
    rank_tie_broken: bool
    expansions: int
    capped: bool = False


def _dominated(a: Counter, b: Counter) -> bool:
    """True when multiset ``a`` properly contains multiset ``b``."""
    return a != b and all(a[k] >= n for k, n in b.items())


def search_access_order(g: QueryGraph, trigger: int, hints: Optional[dict] = None,
                        cap: int = SEARCH_CAP) -> SearchResult:
    """Best-first enumeration of growing edge covers starting from ``trigger``.

    Only minimum-rank eligible edges are expanded; when a constant-cost edge is
    available the smallest-id one is taken alone.
    """
    trig = g.edges[trigger]
    bound0 = frozenset(trig.vars)
    complete: list[AccessOrder] = []
    expansions = 0
    capped = False

    def options(covered, bound):
        opts = []
        for e in g.edges:
            if e.id in covered:
                continue
            opts.append((cost_of_step(e, bound, hints), e))
        if not opts:
            return []
        m = min(c.effective_rank for c, _ in opts)
        if m == FULL_SCAN:
            allowed = [(c, e) for c, e in opts if e.rel.kind not in ("field", "member")]
            if not allowed:
                names = ", ".join(e.label for _, e in opts)
                raise PlanningError(f"no bounded access to {names} from trigger {trig.label}")
            return allowed[:1]
        chosen = [(c, e) for c, e in opts if c.effective_rank == m]
        return chosen[:1] if m == UNIT else chosen

    def rec(covered: frozenset, bound: frozenset, steps: tuple):
        nonlocal expansions, capped
        if len(covered) == len(g.edges):
            complete.append(AccessOrder(trigger, tuple(trig.vars), steps))
            return
        opts = options(covered, bound)
        if expansions >= cap:
            capped = True
            opts = opts[:1]
        for cost, e in opts:
            expansions += 1
            key = tuple(i for i, v in enumerate(e.vars) if v in bound)
            out = tuple(i for i, v in enumerate(e.vars) if v not in bound)
            rec(covered | {e.id}, bound | set(e.vars), steps + (Access(e.id, key, out, cost),))

    rec(frozenset([trigger]), bound0, ())

    uniq: list[AccessOrder] = []
    for o in complete:
        if all(o.symbol_multiset() != u.symbol_multiset() for u in uniq):
            uniq.append(o)
    cands = [o for o in uniq
             if not any(_dominated(o.symbol_multiset(), p.symbol_multiset()) for p in uniq)]
    ranked = sorted(cands, key=AccessOrder.sort_key)
    tie = len(ranked) > 1 and ranked[0].sort_key()[:2] == ranked[1].sort_key()[:2]
    return SearchResult(ranked[0], cands, tie, expansions, capped)


# ------------------------------------------------------------------
# Invariants and maintenance instructions
# ------------------------------------------------------------------


@dataclass(frozen=True)
class InvariantDef:
    """``store = {head + (value,) : clauses, conditions}``."""

    store: RelId
    clauses: tuple[RelClause, ...]
    conditions: tuple[A.Expr, ...]
    head: tuple[str, ...]
    value: Optional[A.Expr]
    counted: bool
    role: str  # result | tag | filtered

    @property
    def arity(self) -> int:
        return len(self.head) + (1 if self.value is not None else 0)

    def describe(self) -> str:
        from .parser import format_expr

        items = list(self.head) + ([format_expr(self.value)] if self.value is not None else [])
        head = items[0] if len(items) == 1 else "(" + ",".join(items) + ")"
        body = [str(c) for c in self.clauses] + [format_expr(e) for e in self.conditions]
        return f"{self.store} = {{{head} : {', '.join(body)}}}"


def result_invariant(rq: RelationalQuery, counted: bool = True) -> InvariantDef:
    return InvariantDef(RelId("result", "", rq.name), rq.clauses, rq.conditions, rq.params,
                        rq.result, counted, "result")


@dataclass(frozen=True)
class ForImage:
    edge_id: int
    rel: RelId
    label: str
    vars: tuple[str, ...]
    key_comps: tuple[int, ...]
    out_comps: tuple[int, ...]
    cost: CostFactor

    @property
    def key_vars(self) -> tuple[str, ...]:
        return tuple(self.vars[i] for i in self.key_comps)

    @property
    def out_vars(self) -> tuple[str, ...]:
        return tuple(self.vars[i] for i in self.out_comps)


@dataclass(frozen=True)
class IfMember:
    edge_id: int
    rel: RelId
    label: str
    vars: tuple[str, ...]


@dataclass(frozen=True)
class IfTest:
    expr: A.Expr


@dataclass(frozen=True)
class IfNotEqual:
    left: tuple[str, ...]
    right: tuple[str, ...]


@dataclass(frozen=True)
class StoreUpdate:
    rel: RelId
    items: tuple[A.Expr, ...]
    op: str  # add | del | cadd | cdel
    guarded: bool = False  # set semantics: skip when already present/absent


MaintInstr = Union[ForImage, IfMember, IfTest, IfNotEqual, StoreUpdate]


@dataclass(frozen=True)
class MaintBlock:
    id: str
    trigger_rel: RelId
    kind: str  # add | del
    trigger_label: str
    trigger_vars: tuple[str, ...]
    target: RelId
    role: str  # result | tag | filtered | index
    instrs: tuple
    order: tuple[str, ...] = ()

    def accesses(self):
        for ins in self.instrs:
            if isinstance(ins, ForImage):
                yield ins.rel, ins.key_comps
            elif isinstance(ins, IfMember):
                yield ins.rel, None


def update_op(counted: bool, kind: str) -> tuple[str, bool]:
    if counted:
        return ("cadd" if kind == "add" else "cdel"), False
    return kind, True


def generate_maintenance(order: AccessOrder, inv: InvariantDef, g: QueryGraph, kind: str,
                         prefix: tuple = ()) -> MaintBlock:
    """Nested loops and tests for one trigger occurrence, ending in a store update.

    Conditions go at the earliest point where all their variables are bound;
    for a relation occurring several times, occurrence n excludes the updated
    tuple from every earlier occurrence m < n.
    """
    trig = g.edges[order.trigger]
    bound = set(trig.vars)
    instrs: list = list(prefix)
    pending_conds = list(inv.conditions)
    pending_neq = [e.vars for e in g.occurrences(trig.rel) if e.id < trig.id]

    def flush():
        for c in list(pending_conds):
            if set(A.free_vars(c)) <= bound:
                instrs.append(IfTest(c))
                pending_conds.remove(c)
        for vs in list(pending_neq):
            if set(vs) <= bound:
                instrs.append(IfNotEqual(vs, trig.vars))
                pending_neq.remove(vs)

    flush()
    for acc in order.steps:
        e = g.edges[acc.edge_id]
        if not acc.out_comps:
            instrs.append(IfMember(e.id, e.rel, e.label, e.vars))
        else:
            instrs.append(ForImage(e.id, e.rel, e.label, e.vars, acc.key_comps, acc.out_comps, acc.cost))
            bound |= set(e.vars)
        flush()
    if pending_conds or pending_neq:
        raise PlanningError(f"unbound variables left in block for {trig.label}")
    op, guarded = update_op(inv.counted, kind)
    items = tuple(A.Var(v) for v in inv.head) + ((inv.value,) if inv.value is not None else ())
    instrs.append(StoreUpdate(inv.store, items, op, guarded))
    bid = f"{inv.store}<-{trig.label}:{kind}"
    return MaintBlock(bid, trig.rel, kind, trig.label, trig.vars, inv.store, inv.role,
                      tuple(instrs), tuple(str(f) for f in order.factors()))


@dataclass
class InvariantPlan:
    inv: InvariantDef
    graph: QueryGraph
    searches: dict[int, SearchResult]
    blocks: list[MaintBlock]


def plan_invariant(inv: InvariantDef, hints: Optional[dict] = None) -> InvariantPlan:
    g = build_query_graph(inv)
    searches = {}
    blocks = []
    for e in g.edges:
        res = search_access_order(g, e.id, hints)
        searches[e.id] = res
        for kind in ("add", "del"):
            blocks.append(generate_maintenance(res.best, inv, g, kind))
    return InvariantPlan(inv, g, searches, blocks)


# ------------------------------------------------------------------
# Stores, auxiliary indices, whole-query plans
# ------------------------------------------------------------------


@dataclass
class StoreDesc:
    rel: RelId
    arity: int
    counted: bool
    keys: list[tuple[int, ...]]  # first entry is the primary layout
    role: str  # result | tag | filtered | demand | index

    def add_key(self, key: tuple[int, ...]) -> None:
        if key not in self.keys:
            self.keys.append(key)


@dataclass
class MaintenancePlan:
    query: str
    mode: str  # inc | fil
    strategy: str
    rq: RelationalQuery
    invariants: list[InvariantDef]
    handlers: dict[tuple[RelId, str], list[MaintBlock]]
    stores: dict[RelId, StoreDesc]
    searches: dict[str, SearchResult] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def result_rel(self) -> RelId:
        return RelId("result", "", self.query)

    def blocks(self):
        for bs in self.handlers.values():
            yield from bs

    def aux_invariants(self) -> list[InvariantDef]:
        return [i for i in self.invariants if i.role != "result"]


def _index_block(rel: RelId, arity: int, kind: str) -> MaintBlock:
    vs = tuple(f"_{i + 1}" for i in range(arity))
    upd = StoreUpdate(rel, tuple(A.Var(v) for v in vs), kind, False)
    return MaintBlock(f"{rel}.index:{kind}", rel, kind, str(rel), vs, rel, "index", (upd,))


def derive_auxiliary_relations(plan: MaintenancePlan) -> MaintenancePlan:
    """Materialize the indices that handlers read and add their maintenance.

    Forward reads of F_f and M go straight to the heap and need no index;
    reverse reads need an inverse map. Every image read on a derived relation
    adds a keyed layout to its store. Unreferenced auxiliaries never appear.
    """
    for blk in list(plan.blocks()):
        for rel, key in blk.accesses():
            if rel.kind in ("field", "member"):
                if key is None or 0 in key:
                    continue
                if not key:
                    raise PlanningError(f"full scan of {rel} in {blk.id}")
                desc = plan.stores.setdefault(rel, StoreDesc(rel, 2, False, [], "index"))
                desc.add_key(key)
            elif rel in plan.stores:
                if key is not None:
                    plan.stores[rel].add_key(key)
            else:
                raise PlanningError(f"{blk.id} reads unknown relation {rel}")
    for rel, desc in plan.stores.items():
        if desc.role in ("index", "demand"):
            for kind in ("add", "del"):
                plan.handlers.setdefault((rel, kind), []).append(_index_block(rel, desc.arity, kind))
    return plan


_ROLE_RANK = {"index": 0, "tag": 1, "filtered": 1, "result": 2}


def order_all_maintenance(plan: MaintenancePlan) -> MaintenancePlan:
    """Additions: indices, then auxiliaries, then the result. Deletions reverse it."""
    for (rel, kind), blocks in plan.handlers.items():
        sign = 1 if kind == "add" else -1
        # sorted() is stable, so definition order survives within a role
        plan.handlers[(rel, kind)] = sorted(blocks, key=lambda b: sign * _ROLE_RANK[b.role])
    return plan


def install_invariant_plan(plan: MaintenancePlan, ip: InvariantPlan) -> None:
    for b in ip.blocks:
        plan.handlers.setdefault((b.trigger_rel, b.kind), []).append(b)
    for eid, res in ip.searches.items():
        plan.searches[f"{ip.inv.store}<-{ip.graph.edges[eid].label}"] = res
        if res.rank_tie_broken:
            plan.notes.append(f"rank tie broken by edge order for {ip.inv.store}<-{ip.graph.edges[eid].label}")


def new_plan(rq: RelationalQuery, mode: str, strategy: str, counted: bool) -> MaintenancePlan:
    r = RelId("result", "", rq.name)
    u = RelId("demand", "", rq.name)
    k = len(rq.params)
    stores = {
        r: StoreDesc(r, k + 1, counted, [tuple(range(k))], "result"),
        u: StoreDesc(u, len(rq.demand_params), False, [()], "demand"),
    }
    return MaintenancePlan(rq.name, mode, strategy, rq, [], {}, stores)


def plan_incremental(rq: RelationalQuery, hints: Optional[dict] = None, counted: bool = True) -> MaintenancePlan:
    """Whole-query plan for incremental mode."""
    plan = new_plan(rq, "inc", "ours", counted)
    inv = result_invariant(rq, counted)
    plan.invariants.append(inv)
    install_invariant_plan(plan, plan_invariant(inv, hints))
    derive_auxiliary_relations(plan)
    return order_all_maintenance(plan)


def fundamental_update_kinds(rq: RelationalQuery) -> int:
    """Demand add/del, add/del per membership clause, one per distinct field."""
    members = sum(1 for c in rq.clauses if c.rel.kind == "member")
    fields = {c.rel for c in rq.clauses if c.rel.kind == "field"}
    return 2 + 2 * members + len(fields)


def parse_hints(text: str) -> dict[str, Fraction]:
    """Lines ``rel.out/key = estimate``; ``#`` comments and blank lines ignored."""
    hints: dict[str, Fraction] = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"hints line {n}: expected 'rel.out/key = estimate'")
        k, v = (s.strip() for s in line.split("=", 1))
        hints[k.replace(" ", "")] = Fraction(v)
    return hints
