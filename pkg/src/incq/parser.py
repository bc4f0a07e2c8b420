"""Tokenizer, recursive-descent parser and pretty-printer for ``.oq`` programs.

Grammar (informal)::

    program   := { stmt NEWLINE }
    stmt      := query | IDENT '=' 'new' ('obj'|'set')
               | selector '.' IDENT '=' expr
               | selector '.' ('add'|'del') '(' expr ')'
               | ('demand'|'undemand'|'ask') IDENT '(' args ')'
               | 'assert' IDENT '(' args ')' '==' '{' args '}'
    query     := 'query' IDENT '(' idents ')' ['demand' '(' idents ')'] ':'
                 '{' expr ':' [clause {',' clause}] '}'
    clause    := IDENT 'in' selector      (membership, only when unparenthesized)
               | expr                     (condition)

Newlines inside brackets are ignored, ``#`` starts a comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import ast as A

KEYWORDS = {
    "query", "demand", "undemand", "ask", "assert", "in", "not", "and", "or",
    "true", "false", "new",
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<nl>\n)
  | (?P<int>\d+)
  | (?P<str>"(?:[^"\\\n]|\\.)*")
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>==|!=|<=|>=|[<>=+\-(){},:.])
    """,
    re.VERBOSE,
)

_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


@dataclass(frozen=True)
class Token:
    kind: str  # ident, kw, int, str, op, nl, eof
    text: str
    line: int
    col: int
    value: object = None


@dataclass(frozen=True)
class SyntaxIssue:
    line: int
    col: int
    message: str

    def __str__(self) -> str:
        return f"{self.line}:{self.col}: {self.message}"


class ParseError(Exception):
    """Raised with every syntax error collected from one source text."""

    def __init__(self, errors: list[SyntaxIssue]):
        self.errors = errors
        super().__init__("\n".join(str(e) for e in errors))


def _unescape(body: str) -> str:
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\" and i + 1 < len(body):
            out.append(_ESCAPES.get(body[i + 1], body[i + 1]))
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def tokenize(source: str) -> tuple[list[Token], list[SyntaxIssue]]:
    tokens: list[Token] = []
    errors: list[SyntaxIssue] = []
    line, line_start, depth, pos = 1, 0, 0, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        col = pos - line_start + 1
        if m is None:
            errors.append(SyntaxIssue(line, col, f"unexpected character {source[pos]!r}"))
            pos += 1
            continue
        kind = m.lastgroup
        text = m.group()
        if kind == "nl":
            if depth == 0:
                tokens.append(Token("nl", text, line, col))
            line += 1
            line_start = m.end()
        elif kind == "int":
            tokens.append(Token("int", text, line, col, int(text)))
        elif kind == "str":
            tokens.append(Token("str", text, line, col, _unescape(text[1:-1])))
        elif kind == "ident":
            tokens.append(Token("kw" if text in KEYWORDS else "ident", text, line, col))
        elif kind == "op":
            if text in "({":
                depth += 1
            elif text in ")}":
                depth = max(0, depth - 1)
            tokens.append(Token("op", text, line, col))
        pos = m.end()
    tokens.append(Token("nl", "", line, pos - line_start + 1))
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens, errors


class _Fail(Exception):
    def __init__(self, tok: Token, msg: str):
        self.issue = SyntaxIssue(tok.line, tok.col, msg)


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.i = 0

    # -- token helpers -------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("op", "kw") and t.text == text

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise _Fail(self.tok, f"expected {text!r}, found {self.tok.text or self.tok.kind!r}")
        return self.advance()

    def ident(self) -> Token:
        if self.tok.kind != "ident":
            raise _Fail(self.tok, f"expected identifier, found {self.tok.text or self.tok.kind!r}")
        return self.advance()

    def pos(self, t: Token | None = None) -> A.Pos:
        t = t or self.tok
        return A.Pos(t.line, t.col)

    # -- program -------------------------------------------------------
    def program(self) -> tuple[A.Script, list[SyntaxIssue]]:
        script = A.Script()
        errors: list[SyntaxIssue] = []
        while self.tok.kind != "eof":
            if self.tok.kind == "nl":
                self.advance()
                continue
            try:
                item = self.statement()
                if self.tok.kind != "nl":
                    raise _Fail(self.tok, f"unexpected {self.tok.text!r} after statement")
                if isinstance(item, A.QuerySpec):
                    script.queries.append(item)
                else:
                    script.trace.append(item)
            except _Fail as f:
                errors.append(f.issue)
                while self.tok.kind not in ("nl", "eof"):
                    self.advance()
        return script, errors

    def statement(self):
        t = self.tok
        if self.at("query"):
            return self.query()
        if self.at("demand") or self.at("undemand") or self.at("ask"):
            kw = self.advance().text
            name, args = self.call()
            cls = {"demand": A.DemandAdd, "undemand": A.DemandDel, "ask": A.Ask}[kw]
            return cls(name, args, self.pos(t))
        if self.at("assert"):
            self.advance()
            name, args = self.call()
            self.expect("==")
            self.expect("{")
            expected = self.expr_list("}")
            self.expect("}")
            return A.AssertResult(name, args, expected, self.pos(t))
        if t.kind == "ident" and self.peek().text == "=" and self.peek().kind == "op":
            var = self.advance().text
            self.expect("=")
            self.expect("new")
            kind = self.ident().text
            if kind == "obj":
                return A.NewObject(var, self.pos(t))
            if kind == "set":
                return A.NewSet(var, self.pos(t))
            raise _Fail(t, f"expected 'obj' or 'set' after 'new', found {kind!r}")
        if t.kind == "ident":
            sel: A.Expr = A.Var(self.advance().text)
            while self.at("."):
                self.advance()
                name = self.ident()
                if name.text in ("add", "del") and self.at("("):
                    self.advance()
                    elem = self.expr()
                    self.expect(")")
                    cls = A.SetAdd if name.text == "add" else A.SetDel
                    return cls(sel, elem, self.pos(t))
                if self.at("="):
                    self.advance()
                    return A.FieldAssign(sel, name.text, self.expr(), self.pos(t))
                sel = A.Field(sel, name.text)
            raise _Fail(self.tok, "expected field assignment or set update")
        raise _Fail(t, f"unexpected {t.text or t.kind!r} at start of statement")

    def call(self) -> tuple[str, tuple[A.Expr, ...]]:
        name = self.ident().text
        self.expect("(")
        args = self.expr_list(")")
        self.expect(")")
        return name, args

    def idents(self, close: str) -> tuple[str, ...]:
        out: list[str] = []
        if not self.at(close):
            out.append(self.ident().text)
            while self.at(","):
                self.advance()
                out.append(self.ident().text)
        return tuple(out)

    def expr_list(self, close: str) -> tuple[A.Expr, ...]:
        out: list[A.Expr] = []
        if not self.at(close):
            out.append(self.expr())
            while self.at(","):
                self.advance()
                out.append(self.expr())
        return tuple(out)

    def query(self) -> A.QuerySpec:
        start = self.expect("query")
        name = self.ident().text
        self.expect("(")
        params = self.idents(")")
        self.expect(")")
        explicit = False
        demand = params
        if self.at("demand"):
            self.advance()
            self.expect("(")
            demand = self.idents(")")
            self.expect(")")
            explicit = True
        self.expect(":")
        self.expect("{")
        result = self.expr()
        self.expect(":")
        clauses: list[A.Clause] = []
        if not self.at("}"):
            clauses.append(self.clause())
            while self.at(","):
                self.advance()
                clauses.append(self.clause())
        self.expect("}")
        return A.QuerySpec(name, params, demand, tuple(clauses), result, explicit, self.pos(start))

    def clause(self) -> A.Clause:
        start = self.tok
        save = self.i
        if start.kind == "ident" and self.peek().kind == "kw" and self.peek().text == "in":
            self.advance()
            self.advance()
            if self.tok.kind == "ident":
                sel: A.Expr = A.Var(self.advance().text)
                while self.at(".") and self.peek().kind == "ident":
                    self.advance()
                    sel = A.Field(sel, self.advance().text)
                if self.at(",") or self.at("}"):
                    return A.Membership(start.text, sel, self.pos(start))
            self.i = save
        return A.Condition(self.expr(), self.pos(start))

    # -- expressions ---------------------------------------------------
    def expr(self) -> A.Expr:
        left = self.and_expr()
        while self.at("or"):
            self.advance()
            left = A.BoolOp("or", left, self.and_expr())
        return left

    def and_expr(self) -> A.Expr:
        left = self.not_expr()
        while self.at("and"):
            self.advance()
            left = A.BoolOp("and", left, self.not_expr())
        return left

    def not_expr(self) -> A.Expr:
        if self.at("not"):
            self.advance()
            return A.Not(self.not_expr())
        return self.comparison()

    def comparison(self) -> A.Expr:
        left = self.additive()
        t = self.tok
        if t.kind == "op" and t.text in ("==", "!=", "<", "<=", ">", ">="):
            self.advance()
            return A.Compare(t.text, left, self.additive())
        if self.at("in"):
            self.advance()
            return A.Compare("in", left, self.additive())
        if self.at("not") and self.peek().kind == "kw" and self.peek().text == "in":
            self.advance()
            self.advance()
            return A.Compare("not in", left, self.additive())
        return left

    def additive(self) -> A.Expr:
        left = self.unary()
        while self.tok.kind == "op" and self.tok.text in ("+", "-"):
            op = self.advance().text
            left = A.Arith(op, left, self.unary())
        return left

    def unary(self) -> A.Expr:
        if self.at("-"):
            self.advance()
            return A.Neg(self.unary())
        return self.primary()

    def primary(self) -> A.Expr:
        t = self.tok
        if t.kind == "int":
            self.advance()
            return A.Const(t.value)
        if t.kind == "str":
            self.advance()
            return A.Const(t.value)
        if self.at("true") or self.at("false"):
            self.advance()
            return A.Const(t.text == "true")
        if t.kind == "ident":
            e: A.Expr = A.Var(self.advance().text)
            while self.at("."):
                self.advance()
                e = A.Field(e, self.ident().text)
            return e
        if self.at("("):
            self.advance()
            if self.at(")"):
                self.advance()
                return A.TupleExpr(())
            first = self.expr()
            if self.at(")"):
                self.advance()
                return first
            items = [first]
            while self.at(","):
                self.advance()
                if self.at(")"):
                    break
                items.append(self.expr())
            self.expect(")")
            return A.TupleExpr(tuple(items))
        raise _Fail(t, f"expected expression, found {t.text or t.kind!r}")


def parse_program(source: str) -> A.Script:
    """Parse a whole program, raising ``ParseError`` with every issue found."""
    tokens, errors = tokenize(source)
    script, perrors = _Parser(tokens).program()
    errors = sorted(errors + perrors, key=lambda e: (e.line, e.col))
    if errors:
        raise ParseError(errors)
    return script


def parse_expr(source: str) -> A.Expr:
    tokens, errors = tokenize(source)
    if errors:
        raise ParseError(errors)
    p = _Parser(tokens)
    try:
        e = p.expr()
        if p.tok.kind != "nl":
            raise _Fail(p.tok, f"unexpected {p.tok.text!r}")
    except _Fail as f:
        raise ParseError([f.issue]) from None
    return e


# ------------------------------------------------------------------
# Pretty-printer
# ------------------------------------------------------------------

_PREC = {"or": 1, "and": 2}


def _prec(e: A.Expr) -> int:
    if isinstance(e, A.BoolOp):
        return _PREC[e.op]
    if isinstance(e, A.Not):
        return 3
    if isinstance(e, A.Compare):
        return 4
    if isinstance(e, A.Arith):
        return 5
    if isinstance(e, A.Neg):
        return 6
    return 7


def _quote(s: str) -> str:
    body = s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")
    return f'"{body}"'


def format_expr(e: A.Expr, min_prec: int = 0) -> str:
    p = _prec(e)
    if isinstance(e, A.Var):
        s = e.name
    elif isinstance(e, A.Field):
        s = f"{format_expr(e.base, 7)}.{e.name}"
    elif isinstance(e, A.Const):
        if isinstance(e.value, bool):
            s = "true" if e.value else "false"
        elif isinstance(e.value, str):
            s = _quote(e.value)
        else:
            s = str(e.value)
    elif isinstance(e, A.TupleExpr):
        if len(e.items) == 1:
            s = f"({format_expr(e.items[0])},)"
        else:
            s = "(" + ", ".join(format_expr(i) for i in e.items) + ")"
    elif isinstance(e, A.BoolOp):
        s = f"{format_expr(e.left, p)} {e.op} {format_expr(e.right, p + 1)}"
    elif isinstance(e, A.Not):
        s = f"not {format_expr(e.operand, p)}"
    elif isinstance(e, A.Compare):
        s = f"{format_expr(e.left, p + 1)} {e.op} {format_expr(e.right, p + 1)}"
    elif isinstance(e, A.Arith):
        s = f"{format_expr(e.left, p)} {e.op} {format_expr(e.right, p + 1)}"
    elif isinstance(e, A.Neg):
        s = f"-{format_expr(e.operand, p)}"
    else:  # pragma: no cover
        raise TypeError(e)
    return f"({s})" if p < min_prec else s


def format_clause(c: A.Clause) -> str:
    if isinstance(c, A.Membership):
        return f"{c.var} in {format_expr(c.selector)}"
    e = c.expr
    # a bare `x in sel` condition would read back as a membership clause
    if isinstance(e, A.Compare) and e.op == "in" and isinstance(e.left, A.Var) and A.is_selector(e.right):
        return f"({format_expr(e)})"
    return format_expr(e)


def format_query(q: A.QuerySpec) -> str:
    head = f"query {q.name}({', '.join(q.params)})"
    if q.explicit_demand:
        head += f" demand({', '.join(q.demand_params)})"
    body = ", ".join(format_clause(c) for c in q.clauses)
    return f"{head}: {{ {format_expr(q.result)} : {body} }}"


def _args(args) -> str:
    return ", ".join(format_expr(a) for a in args)


def format_op(op: A.TraceOp) -> str:
    if isinstance(op, A.NewObject):
        return f"{op.var} = new obj"
    if isinstance(op, A.NewSet):
        return f"{op.var} = new set"
    if isinstance(op, A.FieldAssign):
        return f"{format_expr(op.target, 7)}.{op.field} = {format_expr(op.value)}"
    if isinstance(op, A.SetAdd):
        return f"{format_expr(op.target, 7)}.add({format_expr(op.elem)})"
    if isinstance(op, A.SetDel):
        return f"{format_expr(op.target, 7)}.del({format_expr(op.elem)})"
    if isinstance(op, A.DemandAdd):
        return f"demand {op.query}({_args(op.args)})"
    if isinstance(op, A.DemandDel):
        return f"undemand {op.query}({_args(op.args)})"
    if isinstance(op, A.Ask):
        return f"ask {op.query}({_args(op.args)})"
    if isinstance(op, A.AssertResult):
        return f"assert {op.query}({_args(op.args)}) == {{{_args(op.expected)}}}"
    raise TypeError(op)  # pragma: no cover


def format_program(script: A.Script) -> str:
    lines = [format_query(q) for q in script.queries]
    lines += [format_op(op) for op in script.trace]
    return "\n".join(lines) + "\n"
