"""Prolog-subset programs: AST, parser, and renderer.

The dialect is the one used by rule-induction output rather than ISO Prolog:

* a token in functor position is a predicate name regardless of
  capitalization, so ``A(X) :- integer(X).`` defines predicate ``A/1``
  while the ``X`` stays a variable;
* comments start with ``#`` or ``%`` and run to end of line; they are kept
  on the program object for faithful re-rendering but carry no meaning;
* the operator inventory is exactly what the supported corpus needs:
  conjunction, the comparisons ``> >= < <= = @> \\==``, ``is`` with
  ``+ - * / mod``, ``( Cond -> Then ; Else )``, negation ``\\+``/``not``,
  cut, and lists.  Anything else is a parse error, never a silent misparse.

Rendering has two modes.  ``canonical`` emits one clause per line with a
single space after every comma and no comments; the output is a pure
function of the AST, which makes it usable as a snapshot/byte-stability
surface.  ``faithful`` emits the same clause text but re-interleaves the
retained comments.  In both modes ``parse(render(p))`` is structurally
equal to ``p``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Optional, Union

from .errors import PrednamerError


class LogicSyntaxError(PrednamerError):
    """Parse failure, carrying the source position and the offending token."""

    def __init__(self, message: str, line: int, column: int, token: str = ""):
        self.line = line
        self.column = column
        self.token = token
        at = f" (at {token!r})" if token else ""
        super().__init__(f"line {line}, column {column}: {message}{at}")


class UnterminatedClauseError(LogicSyntaxError):
    """A clause ran into end of input without its terminating '.'."""


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


class PredicateSymbol(NamedTuple):
    name: str
    arity: int

    def __str__(self) -> str:
        return f"{self.name}/{self.arity}"

    @classmethod
    def parse(cls, text: str) -> "PredicateSymbol":
        name, _, arity = text.rpartition("/")
        return cls(name, int(arity))


@dataclass(frozen=True)
class Variable:
    name: str


@dataclass(frozen=True)
class Atom:
    name: str


@dataclass(frozen=True)
class Number:
    value: Union[int, float]


@dataclass(frozen=True)
class Compound:
    """A functional term.  ``infix=True`` marks terms written with operator
    syntax (``X + Y`` rather than ``+(X, Y)``) so rendering keeps the
    author's spelling."""

    functor: str
    args: tuple
    infix: bool = False

    @property
    def symbol(self) -> PredicateSymbol:
        return PredicateSymbol(self.functor, len(self.args))


@dataclass(frozen=True)
class ListTerm:
    items: tuple
    tail: Optional["Term"] = None


Term = Union[Variable, Atom, Number, Compound, ListTerm]


@dataclass(frozen=True)
class Literal:
    """A goal: a predicate applied to argument terms."""

    functor: str
    args: tuple = ()

    @property
    def symbol(self) -> PredicateSymbol:
        return PredicateSymbol(self.functor, len(self.args))


@dataclass(frozen=True)
class Comparison:
    op: str
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class ArithmeticEval:
    """``Target is Expression``."""

    target: Term
    expression: Term


@dataclass(frozen=True)
class Negation:
    element: "BodyElement"
    spelling: str = "\\+"  # "\\+" or "not"


@dataclass(frozen=True)
class Cut:
    pass


@dataclass(frozen=True)
class IfThenElse:
    cond: tuple
    then: tuple
    els: tuple


BodyElement = Union[Literal, Comparison, ArithmeticEval, Negation, Cut, IfThenElse]


@dataclass(frozen=True)
class Rule:
    head: Literal
    body: tuple = ()
    start_line: int = field(default=0, compare=False)
    end_line: int = field(default=0, compare=False)

    @property
    def is_fact(self) -> bool:
        return not self.body


@dataclass(frozen=True)
class LogicProgram:
    rules: tuple = ()
    source_comments: tuple = field(default=(), compare=False)


def iter_body_literals(body: tuple) -> Iterator[Literal]:
    """Yield every goal literal in a body, descending into negation and
    if-then-else branches.  Comparison/``is`` operands are terms, not goals,
    and are not visited."""
    for element in body:
        if isinstance(element, Literal):
            yield element
        elif isinstance(element, Negation):
            yield from iter_body_literals((element.element,))
        elif isinstance(element, IfThenElse):
            yield from iter_body_literals(element.cond)
            yield from iter_body_literals(element.then)
            yield from iter_body_literals(element.els)


# ---------------------------------------------------------------------------
# Tokenizer
# ---------------------------------------------------------------------------

_PUNCT = (
    ":-", "\\==", "\\+", "@>", ">=", "<=", "->",
    ">", "<", "=", "(", ")", "[", "]", "|", ",", ";", "!", ".", "+", "-", "*", "/",
)
_NAME_RE = re.compile(r"[a-z][A-Za-z0-9_]*")
_VAR_RE = re.compile(r"[A-Z_][A-Za-z0-9_]*")
_NUMBER_RE = re.compile(r"\d+\.\d+|\d+")
_COMPARE_OPS = frozenset({">", ">=", "<", "<=", "=", "@>", "\\=="})
_ADD_OPS = frozenset({"+", "-"})
_MUL_OPS = frozenset({"*", "/"})


class _Token(NamedTuple):
    kind: str  # "name" | "var" | "number" | "punct" | "eof"
    value: str
    line: int
    col: int

    @property
    def end_col(self) -> int:
        return self.col + len(self.value)


def _tokenize(text: str) -> tuple[list[_Token], list[tuple[int, str]]]:
    tokens: list[_Token] = []
    comments: list[tuple[int, str]] = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch in "#%":
            end = text.find("\n", i)
            if end == -1:
                end = n
            comments.append((line, text[i:end].rstrip()))
            col += end - i
            i = end
            continue
        if ch.isdigit():
            m = _NUMBER_RE.match(text, i)
            tokens.append(_Token("number", m.group(), line, col))
            col += len(m.group())
            i = m.end()
            continue
        m = _NAME_RE.match(text, i)
        if m:
            tokens.append(_Token("name", m.group(), line, col))
            col += len(m.group())
            i = m.end()
            continue
        m = _VAR_RE.match(text, i)
        if m:
            tokens.append(_Token("var", m.group(), line, col))
            col += len(m.group())
            i = m.end()
            continue
        for punct in _PUNCT:
            if text.startswith(punct, i):
                tokens.append(_Token("punct", punct, line, col))
                col += len(punct)
                i += len(punct)
                break
        else:
            raise LogicSyntaxError("unexpected character", line, col, ch)
    tokens.append(_Token("eof", "", line, col))
    return tokens, comments


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self, ahead: int = 0) -> _Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> _Token:
        tok = self.peek()
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def at_punct(self, value: str) -> bool:
        tok = self.peek()
        return tok.kind == "punct" and tok.value == value

    def expect_punct(self, value: str, context: str) -> _Token:
        if not self.at_punct(value):
            tok = self.peek()
            raise LogicSyntaxError(
                f"expected {value!r} {context}", tok.line, tok.col, tok.value
            )
        return self.next()

    def fail(self, message: str) -> LogicSyntaxError:
        tok = self.peek()
        return LogicSyntaxError(message, tok.line, tok.col, tok.value)

    # -- clauses ----------------------------------------------------------

    def parse_program(self, comments: list[tuple[int, str]]) -> LogicProgram:
        rules = []
        while self.peek().kind != "eof":
            rules.append(self.parse_clause())
        return LogicProgram(tuple(rules), tuple(comments))

    def parse_clause(self) -> Rule:
        start = self.peek()
        head = self.parse_head()
        body: tuple = ()
        if self.at_punct(":-"):
            self.next()
            body = self.parse_conjunction(stop={"."})
        if not self.at_punct("."):
            tok = self.peek()
            if tok.kind == "eof":
                raise UnterminatedClauseError(
                    "clause is missing its terminating '.'", start.line, start.col
                )
            raise self.fail("expected '.' at end of clause")
        end = self.next()
        return Rule(head, body, start_line=start.line, end_line=end.line)

    def parse_head(self) -> Literal:
        term = self.parse_term()
        literal = _as_literal(term)
        if literal is None:
            raise self.fail("clause head must be a predicate")
        return literal

    # -- bodies -----------------------------------------------------------

    def parse_conjunction(self, stop: set) -> tuple:
        elements = [self.parse_body_element()]
        while self.at_punct(","):
            self.next()
            elements.append(self.parse_body_element())
        tok = self.peek()
        if not (tok.kind == "punct" and tok.value in stop):
            if tok.kind == "eof" and "." in stop:
                raise UnterminatedClauseError(
                    "clause is missing its terminating '.'", tok.line, tok.col
                )
            expected = " or ".join(sorted(repr(s) for s in stop))
            raise self.fail(f"expected {expected} after goal")
        return tuple(elements)

    def parse_body_element(self) -> BodyElement:
        tok = self.peek()
        if self.at_punct("!"):
            self.next()
            return Cut()
        if self.at_punct("\\+"):
            self.next()
            return Negation(self.parse_body_element(), "\\+")
        if tok.kind == "name" and tok.value == "not" and not self._call_follows(tok):
            self.next()
            return Negation(self.parse_body_element(), "not")
        if self.at_punct("("):
            return self.parse_if_then_else()
        term = self.parse_term()
        nxt = self.peek()
        if nxt.kind == "punct" and nxt.value in _COMPARE_OPS:
            self.next()
            return Comparison(nxt.value, term, self.parse_term())
        if nxt.kind == "name" and nxt.value == "is":
            self.next()
            return ArithmeticEval(term, self.parse_term())
        literal = _as_literal(term)
        if literal is None:
            raise self.fail("expected a callable goal")
        return literal

    def parse_if_then_else(self) -> IfThenElse:
        self.expect_punct("(", "to open if-then-else")
        cond = self.parse_conjunction(stop={"->"})
        self.expect_punct("->", "after if-then-else condition")
        then = self.parse_conjunction(stop={";"})
        self.expect_punct(";", "after if-then-else 'then' branch")
        els = self.parse_conjunction(stop={")"})
        self.expect_punct(")", "to close if-then-else")
        return IfThenElse(cond, then, els)

    # -- terms ------------------------------------------------------------

    def _call_follows(self, tok: _Token) -> bool:
        nxt = self.peek(1)
        return (
            nxt.kind == "punct"
            and nxt.value == "("
            and nxt.line == tok.line
            and nxt.col == tok.end_col
        )

    def parse_term(self) -> Term:
        return self.parse_additive()

    def parse_additive(self) -> Term:
        left = self.parse_multiplicative()
        while self.peek().kind == "punct" and self.peek().value in _ADD_OPS:
            op = self.next().value
            left = Compound(op, (left, self.parse_multiplicative()), infix=True)
        return left

    def parse_multiplicative(self) -> Term:
        left = self.parse_unary()
        while True:
            tok = self.peek()
            if tok.kind == "punct" and tok.value in _MUL_OPS:
                self.next()
                left = Compound(tok.value, (left, self.parse_unary()), infix=True)
            elif tok.kind == "name" and tok.value == "mod" and not self._call_follows(tok):
                self.next()
                left = Compound("mod", (left, self.parse_unary()), infix=True)
            else:
                return left

    def parse_unary(self) -> Term:
        if self.at_punct("-"):
            self.next()
            operand = self.parse_unary()
            if isinstance(operand, Number):
                return Number(-operand.value)
            return Compound("-", (operand,), infix=True)
        return self.parse_primary()

    def parse_primary(self) -> Term:
        tok = self.peek()
        if tok.kind == "number":
            self.next()
            value = float(tok.value) if "." in tok.value else int(tok.value)
            return Number(value)
        if tok.kind in ("name", "var"):
            if self._call_follows(tok):
                self.next()
                return Compound(tok.value, self.parse_arguments())
            self.next()
            if tok.kind == "var":
                return Variable(tok.value)
            return Atom(tok.value)
        if self.at_punct("("):
            self.next()
            inner = self.parse_term()
            self.expect_punct(")", "to close parenthesized term")
            return inner
        if self.at_punct("["):
            return self.parse_list()
        raise self.fail("expected a term")

    def parse_arguments(self) -> tuple:
        self.expect_punct("(", "to open argument list")
        if self.at_punct(")"):
            self.next()
            return ()
        args = [self.parse_term()]
        while self.at_punct(","):
            self.next()
            args.append(self.parse_term())
        self.expect_punct(")", "to close argument list")
        return tuple(args)

    def parse_list(self) -> ListTerm:
        self.expect_punct("[", "to open list")
        if self.at_punct("]"):
            self.next()
            return ListTerm(())
        items = [self.parse_term()]
        while self.at_punct(","):
            self.next()
            items.append(self.parse_term())
        tail = None
        if self.at_punct("|"):
            self.next()
            tail = self.parse_term()
        self.expect_punct("]", "to close list")
        return ListTerm(tuple(items), tail)


def _as_literal(term: Term) -> Optional[Literal]:
    if isinstance(term, Compound) and not term.infix:
        return Literal(term.functor, term.args)
    if isinstance(term, Atom):
        return Literal(term.name, ())
    return None


def parse_program(text: str) -> LogicProgram:
    """Parse a sequence of '.'-terminated clauses into a LogicProgram."""
    tokens, comments = _tokenize(text)
    return _Parser(tokens).parse_program(comments)


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

_OP_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2, "mod": 2}


def _render_term(term: Term, parent_prec: int = 0) -> str:
    if isinstance(term, Variable):
        return term.name
    if isinstance(term, Atom):
        return term.name
    if isinstance(term, Number):
        return str(term.value)
    if isinstance(term, ListTerm):
        inner = ", ".join(_render_term(item) for item in term.items)
        if term.tail is not None:
            inner += f"|{_render_term(term.tail)}"
        return f"[{inner}]"
    if isinstance(term, Compound):
        if term.infix and len(term.args) == 1 and term.functor == "-":
            inner = _render_term(term.args[0], parent_prec=3)
            return f"-{inner}"
        if term.infix and len(term.args) == 2 and term.functor in _OP_PRECEDENCE:
            prec = _OP_PRECEDENCE[term.functor]
            left = _render_term(term.args[0], parent_prec=prec)
            # right operand of a left-associative operator needs parens at
            # equal precedence to keep the tree shape
            right = _render_term(term.args[1], parent_prec=prec + 1)
            text = f"{left} {term.functor} {right}"
            if prec < parent_prec:
                return f"({text})"
            return text
        args = ", ".join(_render_term(arg) for arg in term.args)
        return f"{term.functor}({args})"
    raise TypeError(f"not a term: {term!r}")


def _render_literal(literal: Literal) -> str:
    if not literal.args:
        return literal.functor
    args = ", ".join(_render_term(arg) for arg in literal.args)
    return f"{literal.functor}({args})"


def _render_element(element: BodyElement) -> str:
    if isinstance(element, Literal):
        return _render_literal(element)
    if isinstance(element, Comparison):
        return f"{_render_term(element.lhs)} {element.op} {_render_term(element.rhs)}"
    if isinstance(element, ArithmeticEval):
        return f"{_render_term(element.target)} is {_render_term(element.expression)}"
    if isinstance(element, Negation):
        return f"{element.spelling} {_render_element(element.element)}"
    if isinstance(element, Cut):
        return "!"
    if isinstance(element, IfThenElse):
        cond = ", ".join(_render_element(e) for e in element.cond)
        then = ", ".join(_render_element(e) for e in element.then)
        els = ", ".join(_render_element(e) for e in element.els)
        return f"( {cond} -> {then} ; {els} )"
    raise TypeError(f"not a body element: {element!r}")


def render_rule(rule: Rule) -> str:
    head = _render_literal(rule.head)
    if rule.is_fact:
        return f"{head}."
    body = ", ".join(_render_element(e) for e in rule.body)
    return f"{head} :- {body}."


def render_program(program: LogicProgram, mode: str = "canonical") -> str:
    """Render a program; ``canonical`` drops comments, ``faithful`` keeps them."""
    if mode == "canonical":
        lines = [render_rule(rule) for rule in program.rules]
    elif mode == "faithful":
        lines = _render_faithful(program)
    else:
        raise ValueError(f"unknown render mode: {mode!r}")
    if not lines:
        return ""
    return "\n".join(lines) + "\n"


def _render_faithful(program: LogicProgram) -> list[str]:
    lines: list[str] = []
    comments = list(program.source_comments)
    ci = 0
    for rule in program.rules:
        while ci < len(comments) and comments[ci][0] < rule.start_line:
            lines.append(comments[ci][1])
            ci += 1
        text = render_rule(rule)
        # first comment inside the clause's line span rides inline, the rest
        # get their own line so each stays a separate comment when re-parsed
        if ci < len(comments) and comments[ci][0] <= rule.end_line:
            text += f" {comments[ci][1]}"
            ci += 1
        lines.append(text)
        while ci < len(comments) and comments[ci][0] <= rule.end_line:
            lines.append(comments[ci][1])
            ci += 1
    lines.extend(text for _, text in comments[ci:])
    return lines


def program_predicates(program: LogicProgram) -> list[PredicateSymbol]:
    """All predicate symbols in head or goal position, in first-occurrence order."""
    seen: dict[PredicateSymbol, None] = {}
    for rule in program.rules:
        seen.setdefault(rule.head.symbol)
        for literal in iter_body_literals(rule.body):
            seen.setdefault(literal.symbol)
    return list(seen)
