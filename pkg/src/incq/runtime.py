"""Script execution: heap, demand sets, materialized stores and plan interpretation.

Modes: ``orig`` recomputes each query naively at every ask; ``inc`` and
``fil`` (with strategy ``ours`` or ``osq``) run the lowered maintenance plan
after every fundamental update and answer asks by one image lookup.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from . import ast as A
from .demand import plan_filtered
from .errors import AssertionFailed, Divergence, EvalError, NotDemanded, PlanningError, TraceError
from .evaluate import compile_expr, eval_expr, eval_test
from .heap import Obj, OpCounters, SetObj, show_value
from .lowering import RelId, RelUpdate, RelationalQuery, lower_query, lower_update
from .naive import eval_naive, naive_order
from .objectgen import ObjBlock, ObjInstr, ObjPlan, eliminate_counts, lower_plan
from .planner import plan_incremental
from .stores import RelStore
from .wellformed import check_query

MODES = ("orig", "inc", "fil", "fil-osq")
DERIVED_KINDS = ("tag", "filtered")


def split_mode(mode: str) -> tuple[str, str]:
    """``fil-osq`` is filtered mode with the OSQ strategy."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "fil-osq":
        return "fil", "osq"
    return mode, "ours"


def compile_query(q: A.QuerySpec, mode: str, strategy: str = "ours", hints: Optional[dict] = None,
                  trace: Optional[Iterable[A.TraceOp]] = None, count_elim: bool = True):
    """Front to back: check, lower, plan, lower to objects, eliminate counts."""
    check_query(q)
    rq = lower_query(q)
    for c in rq.conditions:
        if any(isinstance(n, A.Compare) and n.op in ("in", "not in") for n in A.walk(c)):
            raise PlanningError(f"query {q.name}: set-membership conditions are not maintained; "
                                "write them as membership clauses")
    if mode == "inc":
        plan = plan_incremental(rq, hints)
    elif mode == "fil":
        plan = plan_filtered(rq, hints, strategy=strategy)
    else:
        raise ValueError(f"no plan for mode {mode!r}")
    obj = lower_plan(plan)
    if count_elim:
        obj = eliminate_counts(obj, rq, trace)
    return rq, plan, obj


@dataclass
class BlockStats:
    runs: int = 0
    productive: int = 0
    updates: int = 0


@dataclass
class AskRecord:
    position: int
    query: str
    args: tuple
    result: frozenset


class QueryRuntime:
    """Stores and compiled handlers of one query."""

    def __init__(self, rt: "Runtime", q: A.QuerySpec, rq: RelationalQuery, plan: ObjPlan):
        self.rt = rt
        self.spec = q
        self.rq = rq
        self.plan = plan
        self.stores: dict[RelId, RelStore] = {
            rel: RelStore(str(rel), d.arity, d.counted, list(d.keys)) for rel, d in plan.stores.items()
        }
        self.result = self.stores[plan.result_rel]
        self.demand_store = self.stores[plan.demand_rel]
        self.handlers: dict[tuple[RelId, str], list[Callable[[tuple], None]]] = {}
        for key, blocks in plan.handlers.items():
            self.handlers[key] = [self._compile_block(b) for b in blocks]
        k = len(rq.params)
        self.result_key = tuple(range(k))
        self.demand_index = tuple(rq.params.index(d) for d in rq.demand_params)

    # -- dispatch ------------------------------------------------------
    def dispatch(self, rel: RelId, kind: str, t: tuple) -> None:
        for run in self.handlers.get((rel, kind), ()):
            run(t)

    def apply(self, rel: RelId, store: RelStore, op: str, guarded: bool, t: tuple) -> None:
        """Change a store; derived stores notify their readers only on 0/1 transitions."""
        derived = rel.kind in DERIVED_KINDS
        if op in ("add", "cadd"):
            if guarded and store.contains(t):
                return
            if store.insert(t) and derived:
                self.dispatch(rel, "add", t)
        else:
            if guarded and not store.contains(t):
                return
            if derived and (not store.counted or store.will_vanish(t)):
                self.dispatch(rel, "del", t)
            store.delete(t)

    # -- compilation ---------------------------------------------------
    def _compile_block(self, b: ObjBlock) -> Callable[[tuple], None]:
        stats = self.rt.block_stats.setdefault(b.id, BlockStats())
        body: Optional[Callable[[dict], None]] = None
        for ins in reversed(b.instrs):
            body = self._compile_instr(ins, body, stats)
        tv = b.trigger_vars
        log = self.rt.trace_log
        bid = b.id

        def run(t: tuple) -> None:
            env: dict = {}
            for v, x in zip(tv, t):
                if v in env and env[v] != x:
                    return
                env[v] = x
            if log is not None:
                log.append(bid)
            stats.runs += 1
            before = stats.updates
            body(env)
            if stats.updates != before:
                stats.productive += 1

        return run

    def _compile_instr(self, ins: ObjInstr, nxt, stats: BlockStats):
        c = self.rt.counters
        kind = ins.kind
        kv = ins.key_vars
        ov = ins.out_vars

        if kind == "hasfield":
            (o_name,), (x_name,), f = kv, ov, ins.field

            def hasfield(env):
                o = env[o_name]
                c.guard_tests += 1
                if type(o) is not Obj or f not in o.fields:
                    return
                c.heap_reads += 1
                env[x_name] = o.fields[f]
                nxt(env)
            return hasfield

        if kind == "hasfield_eq":
            (o_name, x_name), f = kv, ins.field

            def hasfield_eq(env):
                o = env[o_name]
                c.guard_tests += 1
                if type(o) is not Obj or f not in o.fields:
                    return
                c.heap_reads += 1
                if o.fields[f] == env[x_name]:
                    nxt(env)
            return hasfield_eq

        if kind == "isset_for":
            (s_name,), (x_name,) = kv, ov

            def isset_for(env):
                s = env[s_name]
                c.guard_tests += 1
                if type(s) is not SetObj:
                    return
                for x in list(s.elems):
                    c.map_iters += 1
                    env[x_name] = x
                    nxt(env)
            return isset_for

        if kind == "isset_in":
            s_name, x_name = kv

            def isset_in(env):
                s = env[s_name]
                c.guard_tests += 1
                if type(s) is not SetObj:
                    return
                c.heap_reads += 1
                if env[x_name] in s.elems:
                    nxt(env)
            return isset_in

        if kind == "dom_for":
            m = self.stores[ins.store].layout(ins.key_comps)
            bind = _binder(ov)

            def dom_for(env):
                c.map_lookups += 1
                img = m.image(tuple([env[v] for v in kv]))
                if not img:
                    return
                for val in list(img):
                    c.map_iters += 1
                    if bind(env, val):
                        nxt(env)
            return dom_for

        if kind in ("dom_in", "tag_test", "in_demand"):
            store = self.stores[ins.store]

            def dom_in(env):
                c.map_lookups += 1
                if store.contains(tuple([env[v] for v in kv])):
                    nxt(env)
            return dom_in

        if kind == "forall":
            store = self.stores[ins.store]
            bind = _binder(ov)

            def forall(env):
                for t in list(store.tuples()):
                    c.map_iters += 1
                    if bind(env, t if len(t) > 1 else t[0]):
                        nxt(env)
            return forall

        if kind == "test":
            expr = ins.expr

            def test(env):
                c.guard_tests += 1
                try:
                    ok = eval_test(expr, env, c)
                except EvalError:
                    return
                if ok:
                    nxt(env)
            return test

        if kind == "noteq":
            def noteq(env):
                c.guard_tests += 1
                if tuple([env[v] for v in kv]) != tuple([env[v] for v in ov]):
                    nxt(env)
            return noteq

        if kind == "update":
            rel = ins.store
            store = self.stores[rel]
            getters = [compile_expr(i, c) for i in ins.items]
            op, guarded = ins.op, ins.guarded

            def update(env):
                try:
                    t = tuple([g(env) for g in getters])
                except EvalError:
                    return
                c.counted_ops += 1
                stats.updates += 1
                self.apply(rel, store, op, guarded, t)
            return update

        raise TypeError(kind)  # pragma: no cover

    # -- answers -------------------------------------------------------
    def lookup(self, args: tuple):
        c = self.rt.counters
        c.map_lookups += 1
        return self.result.image(self.result_key, args)

    def is_demanded(self, args: tuple) -> bool:
        self.rt.counters.map_lookups += 1
        return self.demand_store.contains(tuple(args[i] for i in self.demand_index))

    def sizes(self) -> dict[str, int]:
        return {str(rel): s.size() for rel, s in self.stores.items()}

    def aux_space(self) -> int:
        return sum(s.size() for rel, s in self.stores.items() if rel != self.plan.result_rel)


def _binder(names: tuple[str, ...]):
    """Bind image values to variables; a repeated variable must see equal values."""
    if len(names) == 1:
        (n,) = names

        def bind1(env, v):
            env[n] = v
            return True
        return bind1
    repeated = len(set(names)) != len(names)

    def bind(env, v):
        if repeated:
            seen: dict = {}
            for n, x in zip(names, v):
                if n in seen and seen[n] != x:
                    return False
                seen[n] = x
        for n, x in zip(names, v):
            env[n] = x
        return True
    return bind


class Runtime:
    """Executes a script in one mode and keeps counters and ask results."""

    def __init__(self, script: A.Script, mode: str = "orig", *, auto_demand: bool = False,
                 check_against: Optional[str] = None, copy_results: bool = False,
                 count_elim: bool = True, hints: Optional[dict] = None, trace_log: bool = False,
                 record: bool = True, per_op_stats: bool = False):
        self.script = script
        self.mode = mode
        self.base_mode, self.strategy = split_mode(mode)
        self.auto_demand = auto_demand
        self.check_against = check_against
        self.copy_results = copy_results
        self.record = record
        self.counters = OpCounters()
        self.phase: dict[str, OpCounters] = {}
        self.block_stats: dict[str, BlockStats] = {}
        self.trace_log: Optional[list[str]] = [] if trace_log else None
        self.per_op: Optional[list[dict]] = [] if per_op_stats else None
        self.env: dict[str, object] = {}
        self.objects: list = []
        self.demand: dict[str, set] = {q.name: set() for q in script.queries}
        self.asks: list[AskRecord] = []
        self.position = 0
        self.specs = {q.name: q for q in script.queries}
        self.naive_steps = {}
        self.queries: dict[str, QueryRuntime] = {}
        for q in script.queries:
            check_query(q)
            self.naive_steps[q.name] = naive_order(q)
            if self.base_mode != "orig":
                rq, _, obj = compile_query(q, self.base_mode, self.strategy, hints, script.trace, count_elim)
                self.queries[q.name] = QueryRuntime(self, q, rq, obj)

    # -- heap updates --------------------------------------------------
    def _dispatch(self, upd: RelUpdate) -> None:
        for qr in self.queries.values():
            qr.dispatch(upd.rel, upd.kind, upd.tuple)

    def _mutate(self, upd: RelUpdate) -> None:
        self.counters.heap_writes += 1
        rel, t = upd.rel, upd.tuple
        if rel.kind == "field":
            o, x = t
            if upd.kind == "add":
                o.fields[rel.name] = x
            else:
                del o.fields[rel.name]
        elif rel.kind == "member":
            s, x = t
            if upd.kind == "add":
                s.elems[x] = None
            else:
                del s.elems[x]
        else:
            d = self.demand[rel.query]
            if upd.kind == "add":
                d.add(t)
            else:
                d.discard(t)

    def apply_update(self, upd: RelUpdate) -> None:
        """Additions change the heap first; deletions run handlers first."""
        if upd.kind == "add":
            self._mutate(upd)
            self._dispatch(upd)
        else:
            self._dispatch(upd)
            self._mutate(upd)

    def _value(self, e: A.Expr):
        try:
            return eval_expr(e, self.env)
        except EvalError as err:
            raise TraceError(f"op {self.position}: {err}") from None

    # -- trace ops -----------------------------------------------------
    def step(self, op: A.TraceOp) -> None:
        before = self.counters.snapshot()
        self._step(op)
        delta = self.counters - before
        ph = _phase(op)
        self.phase.setdefault(ph, OpCounters()).add(delta)
        if self.per_op is not None:
            self.per_op.append({"position": self.position, "op": type(op).__name__, **delta.as_dict()})
        self.position += 1

    def _step(self, op: A.TraceOp) -> None:
        if isinstance(op, (A.NewObject, A.NewSet)):
            o = Obj(op.var) if isinstance(op, A.NewObject) else SetObj(op.var)
            self.counters.heap_writes += 1
            self.env[op.var] = o
            self.objects.append(o)
        elif isinstance(op, (A.FieldAssign, A.SetAdd, A.SetDel, A.DemandAdd, A.DemandDel)):
            if isinstance(op, (A.DemandAdd, A.DemandDel)) and op.query not in self.specs:
                raise TraceError(f"op {self.position}: unknown query {op.query}")
            for upd in lower_update(op, self.env, self.demand):
                self.apply_update(upd)
        elif isinstance(op, A.Ask):
            self.ask(op.query, tuple(self._value(a) for a in op.args))
        elif isinstance(op, A.AssertResult):
            got = self.ask(op.query, tuple(self._value(a) for a in op.args))
            want = {self._value(e) for e in op.expected}
            if set(got) != want:
                shown = ", ".join(sorted(show_value(v) for v in got))
                raise AssertionFailed(f"op {self.position}: {op.query} returned {{{shown}}}")
        else:  # pragma: no cover
            raise TypeError(op)

    def run(self, ops: Optional[Iterable[A.TraceOp]] = None) -> list[AskRecord]:
        for op in (self.script.trace if ops is None else ops):
            self.step(op)
        return self.asks

    # -- queries -------------------------------------------------------
    def demand_add(self, query: str, args: tuple) -> None:
        t = tuple(args)
        if t not in self.demand[query]:
            self.apply_update(RelUpdate("add", RelId("demand", "", query), t))

    def demand_del(self, query: str, args: tuple) -> None:
        t = tuple(args)
        if t in self.demand[query]:
            self.apply_update(RelUpdate("del", RelId("demand", "", query), t))

    def ask(self, query: str, args: tuple):
        """Result set of ``query`` at ``args``; a live view unless ``copy_results``."""
        spec = self.specs.get(query)
        if spec is None:
            raise TraceError(f"op {self.position}: unknown query {query}")
        if self.base_mode == "orig":
            res = eval_naive(spec, args, self.counters, self.naive_steps[query])
        else:
            qr = self.queries[query]
            if not qr.is_demanded(args):
                if not self.auto_demand:
                    raise NotDemanded(query, args)
                self.demand_add(query, tuple(args[i] for i in qr.demand_index))
            res = qr.lookup(args)
            if self.copy_results:
                res = set(res)
                self.counters.map_iters += len(res)
        if self.check_against == "orig" and self.base_mode != "orig":
            expected = eval_naive(spec, args, None, self.naive_steps[query])
            if set(res) != expected:
                raise Divergence(self.position, query, args, set(res), expected)
        if self.record:
            self.asks.append(AskRecord(self.position, query, tuple(args), frozenset(res)))
        return res

    # -- reporting -----------------------------------------------------
    def store_sizes(self) -> dict[str, dict[str, int]]:
        return {name: qr.sizes() for name, qr in self.queries.items()}

    def aux_space(self) -> int:
        return sum(qr.aux_space() for qr in self.queries.values())

    def reset_counters(self) -> None:
        self.counters.reset()
        self.phase.clear()

    def stats(self) -> dict:
        out = {
            "mode": self.mode,
            "counters": self.counters.as_dict(),
            "phases": {k: v.as_dict() for k, v in self.phase.items()},
            "blocks": {k: vars(v) for k, v in self.block_stats.items()},
            "stores": self.store_sizes(),
        }
        if self.per_op is not None:
            out["ops"] = self.per_op
        return out


def _phase(op: A.TraceOp) -> str:
    if isinstance(op, (A.Ask, A.AssertResult)):
        return "ask"
    if isinstance(op, (A.DemandAdd, A.DemandDel)):
        return "demand"
    return "update"
