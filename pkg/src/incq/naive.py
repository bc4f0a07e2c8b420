"""Reference evaluators: object queries over the heap, relational comprehensions
over explicit relation contents, and from-scratch invariant contents.

These are deliberately simple and share no code with the planner, so they can
serve as oracles for the maintained stores.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

from . import ast as A
from .errors import EvalError, IllFormedQuery
from .evaluate import eval_expr, eval_test
from .heap import OpCounters, SetObj, field_pairs, member_pairs
from .lowering import RelId, RelationalQuery
from .planner import InvariantDef, result_invariant

# ------------------------------------------------------------------
# Object-level evaluation
# ------------------------------------------------------------------


@dataclass(frozen=True)
class NaiveStep:
    kind: str  # iter | test | eqbind | cond
    var: str = ""
    selector: Optional[A.Expr] = None
    expr: Optional[A.Expr] = None


def _eq_source(c: A.Expr, var: str, bound: set[str]) -> Optional[A.Expr]:
    if not (isinstance(c, A.Compare) and c.op == "=="):
        return None
    for mine, other in ((c.left, c.right), (c.right, c.left)):
        if mine == A.Var(var) and set(A.free_vars(other)) <= bound:
            return other
    return None


def naive_order(q: A.QuerySpec) -> list[NaiveStep]:
    """Static evaluation order: a membership clause is taken as soon as its set is known.

    A clause whose variable is pinned by a pending ``var == expr`` condition is
    turned into a single membership test instead of a loop.
    """
    bound = set(q.params)
    members = [c for c in q.clauses if isinstance(c, A.Membership)]
    conds = [c.expr for c in q.clauses if isinstance(c, A.Condition)]
    steps: list[NaiveStep] = []

    def flush():
        for c in list(conds):
            if set(A.free_vars(c)) <= bound:
                steps.append(NaiveStep("cond", expr=c))
                conds.remove(c)

    flush()
    while members:
        m = next((m for m in members if A.selector_root(m.selector) in bound), None)
        if m is None:
            raise IllFormedQuery(q.name, sorted({c.var for c in members}))
        members.remove(m)
        if m.var in bound:
            steps.append(NaiveStep("test", m.var, m.selector))
        else:
            src = None
            for c in conds:
                src = _eq_source(c, m.var, bound)
                if src is not None:
                    conds.remove(c)
                    break
            if src is not None:
                steps.append(NaiveStep("eqbind", m.var, m.selector, src))
            else:
                steps.append(NaiveStep("iter", m.var, m.selector))
            bound.add(m.var)
        flush()
    if conds:
        raise IllFormedQuery(q.name, sorted({v for c in conds for v in A.free_vars(c)} - bound))
    return steps


def eval_naive(q: A.QuerySpec, args: tuple, counters: Optional[OpCounters] = None,
               steps: Optional[list[NaiveStep]] = None) -> set:
    """All result values over every binding; failing bindings are skipped."""
    steps = steps if steps is not None else naive_order(q)
    env = dict(zip(q.params, args))
    out: set = set()
    c = counters

    def go(i: int) -> None:
        if i == len(steps):
            try:
                out.add(eval_expr(q.result, env, c))
            except EvalError:
                pass
            return
        st = steps[i]
        if st.kind == "cond":
            if c is not None:
                c.guard_tests += 1
            try:
                ok = eval_test(st.expr, env, c)
            except EvalError:
                return
            if ok:
                go(i + 1)
            return
        try:
            s = eval_expr(st.selector, env, c)
        except EvalError:
            return
        if not isinstance(s, SetObj):
            return
        if st.kind == "iter":
            for x in list(s.elems):
                if c is not None:
                    c.map_iters += 1
                env[st.var] = x
                go(i + 1)
            return
        if st.kind == "eqbind":
            try:
                env[st.var] = eval_expr(st.expr, env, c)
            except EvalError:
                return
        if c is not None:
            c.heap_reads += 1
        if env[st.var] in s.elems:
            go(i + 1)

    go(0)
    return out


# ------------------------------------------------------------------
# Relational evaluation
# ------------------------------------------------------------------


def heap_relations(objects: Iterable, fields: Iterable[str]) -> dict[RelId, list[tuple]]:
    """F_f for the requested fields and M, as induced by ``objects``."""
    objs = list(objects)
    rels = {RelId("field", f): list(field_pairs(objs, f)) for f in fields}
    rels[RelId("member")] = list(member_pairs(objs))
    return rels


def join(clauses, conditions, rels: dict, env: dict) -> Iterator[dict]:
    """Every extension of ``env`` satisfying all clauses and conditions.

    Clauses are taken most-bound first; relations are scanned in full.
    """
    pending = list(clauses)
    conds = list(conditions)

    def go():
        if not pending:
            yield dict(env)
            return
        cl = max(pending, key=lambda c: sum(v in env for v in c.vars))
        pending.remove(cl)
        for t in rels.get(cl.rel, ()):
            added = []
            ok = True
            for v, x in zip(cl.vars, t):
                if v in env:
                    if env[v] != x:
                        ok = False
                        break
                else:
                    env[v] = x
                    added.append(v)
            if ok and _conds_hold(conds, env, added):
                yield from go()
            for v in added:
                del env[v]
        pending.append(cl)
        pending.sort(key=clauses.index)

    if _conds_hold(conds, env, None):
        yield from go()


def _conds_hold(conds, env: dict, added) -> bool:
    """Check conditions that became fully bound with ``added`` (all bound ones if None)."""
    for c in conds:
        fv = A.free_vars(c)
        if not set(fv) <= env.keys():
            continue
        if added is not None and not any(v in added for v in fv):
            continue
        try:
            if not eval_test(c, env):
                return False
        except EvalError:
            return False
    return True


def eval_relational(rq: RelationalQuery, args: tuple, objects: Iterable,
                    demand: Optional[set] = None) -> set:
    """Lowered query over heap-induced relations; U defaults to the demanded projection of ``args``."""
    fields = {c.rel.name for c in rq.clauses if c.rel.kind == "field"}
    rels = heap_relations(objects, fields)
    env = dict(zip(rq.params, args))
    if demand is None:
        demand = {tuple(env[d] for d in rq.demand_params)}
    rels[RelId("demand", "", rq.name)] = list(demand)
    out: set = set()
    clauses = list(rq.clauses)
    for b in join(clauses, rq.conditions, rels, env):
        try:
            out.add(eval_expr(rq.result, b))
        except EvalError:
            pass
    return out


def invariant_counts(inv: InvariantDef, rels: dict) -> Counter:
    """Derivation count of every tuple of an invariant (bindings of all its variables)."""
    out: Counter = Counter()
    clauses = list(inv.clauses)
    for b in join(clauses, inv.conditions, rels, {}):
        try:
            t = tuple(b[v] for v in inv.head)
            if inv.value is not None:
                t += (eval_expr(inv.value, b),)
        except EvalError:
            continue
        out[t] += 1
    return out


def scratch_contents(invariants: list[InvariantDef], objects: Iterable, demand: dict[str, set],
                     query: str) -> dict[RelId, Counter]:
    """From-scratch contents of every invariant, in dependency order."""
    fields = {c.rel.name for inv in invariants for c in inv.clauses if c.rel.kind == "field"}
    rels: dict = heap_relations(objects, fields)
    rels[RelId("demand", "", query)] = list(demand.get(query, ()))
    out: dict[RelId, Counter] = {}
    todo = list(invariants)
    while todo:
        for inv in todo:
            deps = {c.rel for c in inv.clauses if c.rel.kind in ("tag", "filtered", "result")}
            if deps <= out.keys():
                cnt = invariant_counts(inv, rels)
                out[inv.store] = cnt
                rels[inv.store] = list(cnt)
                todo.remove(inv)
                break
        else:
            raise ValueError("cyclic invariant definitions")
    return out


def scratch_result(rq: RelationalQuery, objects: Iterable, demand: set) -> Counter:
    inv = result_invariant(rq)
    return scratch_contents([inv], objects, {rq.name: demand}, rq.name)[inv.store]


__all__ = [
    "NaiveStep", "naive_order", "eval_naive", "heap_relations", "join", "eval_relational",
    "invariant_counts", "scratch_contents", "scratch_result",
]
