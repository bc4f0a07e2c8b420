"""Strict expression evaluation with skip-on-error semantics."""

from __future__ import annotations

from typing import Callable, Optional

from . import ast as A
from .errors import EvalError
from .heap import Obj, OpCounters, SetObj

_ORDER = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def _is_int(v: object) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def read_field(v: object, name: str, counters: Optional[OpCounters] = None) -> object:
    if counters is not None:
        counters.heap_reads += 1
    if not isinstance(v, Obj):
        raise EvalError(f"field {name} of non-object {v!r}")
    try:
        return v.fields[name]
    except KeyError:
        raise EvalError(f"missing field {name}") from None


def eval_expr(e: A.Expr, env: dict, counters: Optional[OpCounters] = None) -> object:
    """Evaluate ``e`` under ``env``; raise ``EvalError`` on any type or field failure.

    Boolean connectives evaluate both operands, so a failing operand always
    fails the whole expression.
    """
    if isinstance(e, A.Var):
        try:
            return env[e.name]
        except KeyError:
            raise EvalError(f"unbound variable {e.name}") from None
    if isinstance(e, A.Const):
        return e.value
    if isinstance(e, A.Field):
        return read_field(eval_expr(e.base, env, counters), e.name, counters)
    if isinstance(e, A.TupleExpr):
        return tuple(eval_expr(i, env, counters) for i in e.items)
    if isinstance(e, A.Compare):
        a = eval_expr(e.left, env, counters)
        b = eval_expr(e.right, env, counters)
        if e.op == "==":
            return a == b
        if e.op == "!=":
            return a != b
        if e.op in ("in", "not in"):
            if not isinstance(b, SetObj):
                raise EvalError("membership test on non-set")
            if counters is not None:
                counters.heap_reads += 1
            found = a in b.elems
            return found if e.op == "in" else not found
        if (_is_int(a) and _is_int(b)) or (isinstance(a, str) and isinstance(b, str)):
            return _ORDER[e.op](a, b)
        raise EvalError(f"cannot order {type(a).__name__} and {type(b).__name__}")
    if isinstance(e, A.BoolOp):
        a = eval_expr(e.left, env, counters)
        b = eval_expr(e.right, env, counters)
        if not (isinstance(a, bool) and isinstance(b, bool)):
            raise EvalError(f"{e.op} on non-boolean")
        return (a and b) if e.op == "and" else (a or b)
    if isinstance(e, A.Not):
        a = eval_expr(e.operand, env, counters)
        if not isinstance(a, bool):
            raise EvalError("not on non-boolean")
        return not a
    if isinstance(e, A.Arith):
        a = eval_expr(e.left, env, counters)
        b = eval_expr(e.right, env, counters)
        if _is_int(a) and _is_int(b):
            return a + b if e.op == "+" else a - b
        if e.op == "+" and isinstance(a, str) and isinstance(b, str):
            return a + b
        raise EvalError(f"bad operands for {e.op}")
    if isinstance(e, A.Neg):
        a = eval_expr(e.operand, env, counters)
        if not _is_int(a):
            raise EvalError("negation of non-integer")
        return -a
    raise TypeError(f"not an expression: {e!r}")  # pragma: no cover


def eval_test(e: A.Expr, env: dict, counters: Optional[OpCounters] = None) -> bool:
    """Condition semantics: true only for a boolean ``True`` result."""
    v = eval_expr(e, env, counters)
    if not isinstance(v, bool):
        raise EvalError("condition is not boolean")
    return v


def compile_expr(e: A.Expr, counters: Optional[OpCounters] = None) -> Callable[[dict], object]:
    """Closure form of ``eval_expr`` for hot loops (same semantics)."""
    if isinstance(e, A.Var):
        name = e.name
        return lambda env: env[name]
    if isinstance(e, A.Const):
        value = e.value
        return lambda env: value
    if isinstance(e, A.TupleExpr) and all(isinstance(i, A.Var) for i in e.items):
        names = tuple(i.name for i in e.items)
        return lambda env: tuple(env[n] for n in names)
    return lambda env: eval_expr(e, env, counters)
