"""Object heap with reference semantics, plus the operation counters."""

from __future__ import annotations

import itertools
from dataclasses import dataclass


@dataclass
class OpCounters:
    """Primitive-operation tallies; each runtime primitive bumps exactly one field."""

    heap_reads: int = 0
    heap_writes: int = 0
    map_lookups: int = 0
    map_iters: int = 0
    counted_ops: int = 0
    guard_tests: int = 0

    FIELDS = ("heap_reads", "heap_writes", "map_lookups", "map_iters", "counted_ops", "guard_tests")

    def values(self) -> tuple[int, ...]:
        return (self.heap_reads, self.heap_writes, self.map_lookups, self.map_iters,
                self.counted_ops, self.guard_tests)

    def total(self) -> int:
        return sum(self.values())

    def snapshot(self) -> "OpCounters":
        return OpCounters(*self.values())

    def reset(self) -> None:
        for k in self.FIELDS:
            setattr(self, k, 0)

    def as_dict(self) -> dict[str, int]:
        return dict(zip(self.FIELDS, self.values()))

    def add(self, other: "OpCounters") -> None:
        for k, v in zip(self.FIELDS, other.values()):
            setattr(self, k, getattr(self, k) + v)

    def __sub__(self, other: "OpCounters") -> "OpCounters":
        return OpCounters(*(a - b for a, b in zip(self.values(), other.values())))


_ids = itertools.count(1)


class Obj:
    """Plain object: a partial map from field names to values. Equality is identity."""

    __slots__ = ("oid", "fields", "label")

    def __init__(self, label: str = ""):
        self.oid = next(_ids)
        self.fields: dict[str, object] = {}
        self.label = label

    def __repr__(self) -> str:
        return f"<{self.label or 'obj'}#{self.oid}>"


class SetObj:
    """Set object; elements kept in insertion order for deterministic iteration."""

    __slots__ = ("oid", "elems", "label")

    def __init__(self, label: str = ""):
        self.oid = next(_ids)
        self.elems: dict[object, None] = {}
        self.label = label

    def __repr__(self) -> str:
        return f"<{self.label or 'set'}#{self.oid}>"


def is_ref(v: object) -> bool:
    return isinstance(v, (Obj, SetObj))


def show_value(v: object) -> str:
    """Stable textual rendering used in diagnostics and assertions."""
    if isinstance(v, (Obj, SetObj)):
        return v.label or repr(v)
    if isinstance(v, tuple):
        return "(" + ", ".join(show_value(x) for x in v) + ")"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return '"' + v + '"'
    return str(v)


def field_pairs(objects, field: str):
    """All (o, o.f) pairs, i.e. the relation F_f induced by a heap."""
    for o in objects:
        if isinstance(o, Obj) and field in o.fields:
            yield (o, o.fields[field])


def member_pairs(objects):
    """All (s, x) with x in s, i.e. the relation M induced by a heap."""
    for s in objects:
        if isinstance(s, SetObj):
            for x in s.elems:
                yield (s, x)


def canonical(v: object) -> object:
    """Run-independent form of a value: references become their labels."""
    if isinstance(v, Obj):
        return ("obj", v.label)
    if isinstance(v, SetObj):
        return ("set", v.label)
    if isinstance(v, tuple):
        return tuple(canonical(x) for x in v)
    return v
