"""Demand-driven incremental maintenance of object queries.

Queries over objects and sets are lowered to relational comprehensions over
flat heap relations plus a demand relation, planned into maintenance handlers for
every fundamental update, optionally filtered by demand, lowered back to
guarded object operations and interpreted with exact operation counts.
"""

from __future__ import annotations

from .ast import QuerySpec, Script
from .errors import (
    AssertionFailed, Divergence, EvalError, IllFormedQuery, IncqError, InsufficientDemandParams,
    NotDemanded, PlanningError, TraceError, UnboundVariable,
)
from .demand import plan_filtered
from .heap import Obj, OpCounters, SetObj
from .lowering import RelationalQuery, lower_query, lower_update
from .naive import eval_naive, eval_relational
from .objectgen import eliminate_counts, lower_plan
from .parser import ParseError, format_program, parse_program
from .planner import plan_incremental, search_access_order
from .runtime import Runtime, compile_query
from .stores import CountedMap, RelStore
from .wellformed import check_query, validate_demand_params

__version__ = "0.1.0"

__all__ = [
    "QuerySpec", "Script", "AssertionFailed", "Divergence", "EvalError", "IllFormedQuery", "IncqError",
    "InsufficientDemandParams", "NotDemanded", "PlanningError", "TraceError", "UnboundVariable",
    "plan_filtered", "Obj", "OpCounters", "SetObj", "RelationalQuery", "lower_query", "lower_update",
    "eval_naive", "eval_relational", "eliminate_counts", "lower_plan", "ParseError", "format_program",
    "parse_program", "plan_incremental", "search_access_order", "Runtime", "compile_query",
    "CountedMap", "RelStore", "check_query", "validate_demand_params",
]
