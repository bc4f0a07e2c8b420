"""Lockstep differential execution of one script in several modes."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional

from . import ast as A
from .errors import NotDemanded
from .heap import canonical
from .naive import scratch_contents
from .runtime import Runtime

ALL_MODES = ("orig", "inc", "fil", "fil-osq")


@dataclass
class Mismatch:
    position: int
    mode: str
    what: str
    detail: str = ""


@dataclass
class DiffReport:
    asks: int = 0
    ops: int = 0
    mismatches: list[Mismatch] = field(default_factory=list)
    coverage: set[str] = field(default_factory=set)
    invariant_checks: int = 0

    @property
    def ok(self) -> bool:
        return not self.mismatches

    @property
    def first(self) -> Optional[Mismatch]:
        return self.mismatches[0] if self.mismatches else None


def canonical_set(values: Iterable) -> frozenset:
    return frozenset(canonical(v) for v in values)


def update_kinds(rt: Runtime, query: str = "Q") -> set[str]:
    """Fundamental update kinds that produced at least one result change."""
    out = set()
    qr = rt.queries.get(query)
    if qr is None:
        return out
    result_rel = str(qr.plan.result_rel)
    for bid, st in rt.block_stats.items():
        if not bid.startswith(result_rel + "<-") or st.productive == 0:
            continue
        label, kind = bid[len(result_rel) + 2:].rsplit(":", 1)
        out.add(label if label.startswith("F_") else f"{label}:{kind}")
    return out


def check_invariants(rt: Runtime) -> list[str]:
    """Compare every maintained derived store with its from-scratch contents."""
    problems = []
    for name, qr in rt.queries.items():
        want = scratch_contents(qr.plan.source.invariants, rt.objects, rt.demand, name)
        for rel, cnt in want.items():
            store = qr.stores[rel]
            if store.counted:
                have = Counter({canonical(t): c for t, c in store.counts().items()})
                expect = Counter({canonical(t): c for t, c in cnt.items()})
            else:
                have = Counter({canonical(t): 1 for t in store.tuples()})
                expect = Counter({canonical(t): 1 for t in cnt})
            if have != expect:
                problems.append(f"{name}.{rel}: {len(have)} tuples maintained, {len(expect)} expected")
    return problems


def run_differential(script: A.Script, modes: Iterable[str] = ALL_MODES, *, invariants: bool = False,
                     stop_at_first: bool = True) -> DiffReport:
    """Run ``script`` in every mode side by side and compare each ask with orig."""
    modes = [m for m in modes if m != "orig"]
    ref = Runtime(script, "orig")
    others = {m: Runtime(script, m) for m in modes}
    rep = DiffReport()
    for pos, op in enumerate(script.trace):
        ref.step(op)
        expected = canonical_set(ref.asks[-1].result) if isinstance(op, (A.Ask, A.AssertResult)) else None
        for m, rt in others.items():
            try:
                rt.step(op)
            except NotDemanded as err:
                rep.mismatches.append(Mismatch(pos, m, "not demanded", str(err)))
                continue
            if expected is not None:
                got = canonical_set(rt.asks[-1].result)
                if got != expected:
                    rep.mismatches.append(Mismatch(pos, m, "result",
                                                   f"{len(got)} values, expected {len(expected)}"))
            if invariants:
                rep.invariant_checks += 1
                for p in check_invariants(rt):
                    rep.mismatches.append(Mismatch(pos, m, "invariant", p))
        if expected is not None:
            rep.asks += 1
        rep.ops += 1
        if stop_at_first and rep.mismatches:
            break
    if "inc" in others:
        rep.coverage = update_kinds(others["inc"])
    return rep


RUNNING_EXAMPLE_KINDS = frozenset({
    "U:add", "U:del", "M_1:add", "M_1:del", "M_2:add", "M_2:del", "F_followers", "F_loc", "F_email",
})
