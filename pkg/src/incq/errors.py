"""Exception types shared across the compiler and runtime."""

from __future__ import annotations


class IncqError(Exception):
    """Base class for incq diagnostics."""


class IllFormedQuery(IncqError):
    def __init__(self, query: str, unreachable: list[str]):
        self.query = query
        self.unreachable = unreachable
        super().__init__(f"query {query}: unreachable variables {', '.join(unreachable)}")


class InsufficientDemandParams(IncqError):
    def __init__(self, query: str, unreachable: list[str]):
        self.query = query
        self.unreachable = unreachable
        super().__init__(
            f"query {query}: demand parameters do not reach {', '.join(unreachable)}"
        )


class EvalError(IncqError):
    """A per-binding evaluation failure; callers skip the binding."""


class TraceError(IncqError):
    """A trace operation that cannot be executed (halts the run)."""


class UnboundVariable(TraceError):
    pass


class DelOnMissingField(TraceError):
    pass


class NotDemanded(IncqError):
    def __init__(self, query: str, args: tuple):
        self.query = query
        self.args = args
        super().__init__(f"{query}{args!r} is not in the demand set")


class AssertionFailed(IncqError):
    pass


class PlanningError(IncqError):
    pass


class Divergence(IncqError):
    """A maintained result differs from naive evaluation at the same trace position."""

    def __init__(self, position: int, query: str, args: tuple, got, expected):
        self.position = position
        self.query = query
        self.args = args
        self.got = got
        self.expected = expected
        super().__init__(f"op {position}: {query}{args!r} gave {len(got)} values, expected {len(expected)}")
