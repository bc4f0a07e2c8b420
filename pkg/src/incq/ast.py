"""Syntax trees for incq programs: expressions, query comprehensions, trace ops."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Union

# ------------------------------------------------------------------
# Expressions
# ------------------------------------------------------------------


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Field:
    """Field selection ``base.name``; ``base`` is a Var or another Field."""

    base: "Expr"
    name: str


@dataclass(frozen=True)
class Const:
    value: Union[int, str, bool]


@dataclass(frozen=True)
class Compare:
    op: str  # ==, !=, <, <=, >, >=, in, not in
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class BoolOp:
    op: str  # and, or
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Not:
    operand: "Expr"


@dataclass(frozen=True)
class Arith:
    op: str  # +, -
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class TupleExpr:
    items: tuple["Expr", ...]


Expr = Union[Var, Field, Const, Compare, BoolOp, Not, Arith, Neg, TupleExpr]

COMPARE_OPS = ("==", "!=", "<", "<=", ">", ">=", "in", "not in")


def children(e: Expr) -> tuple[Expr, ...]:
    if isinstance(e, Field):
        return (e.base,)
    if isinstance(e, (Compare, BoolOp, Arith)):
        return (e.left, e.right)
    if isinstance(e, (Not, Neg)):
        return (e.operand,)
    if isinstance(e, TupleExpr):
        return e.items
    return ()


def walk(e: Expr) -> Iterator[Expr]:
    """Pre-order traversal."""
    yield e
    for c in children(e):
        yield from walk(c)


def free_vars(e: Expr) -> list[str]:
    """Variable names in first-occurrence order, without duplicates."""
    seen: dict[str, None] = {}
    for node in walk(e):
        if isinstance(node, Var):
            seen.setdefault(node.name, None)
    return list(seen)


def is_selector(e: Expr) -> bool:
    while isinstance(e, Field):
        e = e.base
    return isinstance(e, Var)


def selector_root(e: Expr) -> str:
    while isinstance(e, Field):
        e = e.base
    assert isinstance(e, Var)
    return e.name


def substitute(e: Expr, mapping: dict[str, Expr]) -> Expr:
    """Replace variables by expressions."""
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, Field):
        return Field(substitute(e.base, mapping), e.name)
    if isinstance(e, Compare):
        return Compare(e.op, substitute(e.left, mapping), substitute(e.right, mapping))
    if isinstance(e, BoolOp):
        return BoolOp(e.op, substitute(e.left, mapping), substitute(e.right, mapping))
    if isinstance(e, Arith):
        return Arith(e.op, substitute(e.left, mapping), substitute(e.right, mapping))
    if isinstance(e, Not):
        return Not(substitute(e.operand, mapping))
    if isinstance(e, Neg):
        return Neg(substitute(e.operand, mapping))
    if isinstance(e, TupleExpr):
        return TupleExpr(tuple(substitute(i, mapping) for i in e.items))
    return e


# ------------------------------------------------------------------
# Queries
# ------------------------------------------------------------------


@dataclass(frozen=True)
class Pos:
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


NOPOS = Pos(0, 0)


@dataclass(frozen=True)
class Membership:
    var: str
    selector: Expr
    pos: Pos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class Condition:
    expr: Expr
    pos: Pos = field(default=NOPOS, compare=False)


Clause = Union[Membership, Condition]


def clause_vars(c: Clause) -> list[str]:
    if isinstance(c, Membership):
        out = [c.var]
        for v in free_vars(c.selector):
            if v not in out:
                out.append(v)
        return out
    return free_vars(c.expr)


@dataclass(frozen=True)
class QuerySpec:
    name: str
    params: tuple[str, ...]
    demand_params: tuple[str, ...]
    clauses: tuple[Clause, ...]
    result: Expr
    explicit_demand: bool = False
    pos: Pos = field(default=NOPOS, compare=False)

    def variables(self) -> list[str]:
        """All variables, first-occurrence order (result first, as written)."""
        seen: dict[str, None] = {}
        for v in free_vars(self.result):
            seen.setdefault(v, None)
        for c in self.clauses:
            for v in clause_vars(c):
                seen.setdefault(v, None)
        return list(seen)


# ------------------------------------------------------------------
# Trace operations
# ------------------------------------------------------------------


@dataclass(frozen=True)
class NewObject:
    var: str
    pos: Pos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class NewSet:
    var: str
    pos: Pos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class FieldAssign:
    target: Expr  # selector naming the object
    field: str
    value: Expr
    pos: Pos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class SetAdd:
    target: Expr
    elem: Expr
    pos: Pos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class SetDel:
    target: Expr
    elem: Expr
    pos: Pos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class DemandAdd:
    query: str
    args: tuple[Expr, ...]
    pos: Pos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class DemandDel:
    query: str
    args: tuple[Expr, ...]
    pos: Pos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class Ask:
    query: str
    args: tuple[Expr, ...]
    pos: Pos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class AssertResult:
    query: str
    args: tuple[Expr, ...]
    expected: tuple[Expr, ...]
    pos: Pos = field(default=NOPOS, compare=False)


TraceOp = Union[NewObject, NewSet, FieldAssign, SetAdd, SetDel, DemandAdd, DemandDel, Ask, AssertResult]


@dataclass
class Script:
    queries: list[QuerySpec] = field(default_factory=list)
    trace: list[TraceOp] = field(default_factory=list)

    def query(self, name: str) -> QuerySpec:
        for q in self.queries:
            if q.name == name:
                return q
        raise KeyError(name)
