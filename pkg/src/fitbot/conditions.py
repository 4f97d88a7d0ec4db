"""Dialog node condition language.

Grammar (|| lowest precedence, && tighter, ! tightest):

    expr  := and ("||" and)*
    and   := unary ("&&" unary)*
    unary := "!" unary | atom
    atom  := "(" expr ")" | "#"IDENT | "@"IDENT(":"VALUE)? | "$"IDENT (CMP literal)?
           | "true" | "anything_else"

A bare ``$var`` means "defined and neither null nor false". Literals are
numbers, quoted strings, true/false/null. Entity values after ":" are bare
words or quoted strings.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

IDENT_RE = re.compile(r"[a-z][a-z0-9_]*")
_BARE_VALUE_RE = re.compile(r"[A-Za-z0-9_.\-]+")
_NUMBER_RE = re.compile(r"-?\d+(\.\d+)?")

COMPARE_OPS = ("==", "!=", "<=", ">=", "<", ">")


class ConditionSyntaxError(ValueError):
    """Raised on malformed condition text; carries the character position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


@dataclass(frozen=True)
class IntentIs:
    name: str


@dataclass(frozen=True)
class EntityPresent:
    name: str
    value: str | None = None


@dataclass(frozen=True)
class VarCompare:
    name: str
    op: str  # "defined" or one of COMPARE_OPS
    literal: object = None


@dataclass(frozen=True)
class TrueCond:
    pass


@dataclass(frozen=True)
class AnythingElse:
    pass


@dataclass(frozen=True)
class And:
    operands: tuple


@dataclass(frozen=True)
class Or:
    operands: tuple


@dataclass(frozen=True)
class Not:
    operand: object


ConditionAst = object  # any of the node classes above


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, message: str) -> ConditionSyntaxError:
        return ConditionSyntaxError(message, self.pos)

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def accept(self, literal: str) -> bool:
        self.skip_ws()
        if self.text.startswith(literal, self.pos):
            self.pos += len(literal)
            return True
        return False

    def expect(self, literal: str) -> None:
        if not self.accept(literal):
            raise self.error(f"expected {literal!r}")

    def ident(self) -> str:
        m = IDENT_RE.match(self.text, self.pos)
        if not m:
            raise self.error("expected identifier")
        self.pos = m.end()
        return m.group()

    def parse(self):
        ast = self.expr()
        self.skip_ws()
        if self.pos != len(self.text):
            raise self.error("unexpected trailing input")
        return ast

    def expr(self):
        operands = [self.and_expr()]
        while self.accept("||"):
            operands.append(self.and_expr())
        return operands[0] if len(operands) == 1 else Or(tuple(operands))

    def and_expr(self):
        operands = [self.unary()]
        while self.accept("&&"):
            operands.append(self.unary())
        return operands[0] if len(operands) == 1 else And(tuple(operands))

    def unary(self):
        if self.accept("!"):
            return Not(self.unary())
        return self.atom()

    def atom(self):
        self.skip_ws()
        if self.accept("("):
            inner = self.expr()
            self.expect(")")
            return inner
        ch = self.peek()
        if ch == "#":
            self.pos += 1
            return IntentIs(self.ident())
        if ch == "@":
            self.pos += 1
            name = self.ident()
            if self.pos < len(self.text) and self.text[self.pos] == ":":
                self.pos += 1
                return EntityPresent(name, self.entity_value())
            return EntityPresent(name)
        if ch == "$":
            self.pos += 1
            name = self.ident()
            save = self.pos
            self.skip_ws()
            for op in COMPARE_OPS:
                if self.text.startswith(op, self.pos):
                    self.pos += len(op)
                    return VarCompare(name, op, self.literal())
            self.pos = save
            return VarCompare(name, "defined")
        # keyword atoms; check the longer one first
        if self.accept("anything_else"):
            return AnythingElse()
        if self.accept("true"):
            return TrueCond()
        raise self.error("expected condition atom")

    def entity_value(self) -> str:
        if self.peek() in "\"'":
            return self.quoted_string()
        m = _BARE_VALUE_RE.match(self.text, self.pos)
        if not m:
            raise self.error("expected entity value")
        self.pos = m.end()
        return m.group()

    def quoted_string(self) -> str:
        quote = self.peek()
        end = self.text.find(quote, self.pos + 1)
        if end < 0:
            raise self.error("unterminated string")
        value = self.text[self.pos + 1 : end]
        self.pos = end + 1
        return value

    def literal(self):
        self.skip_ws()
        if self.peek() in "\"'":
            return self.quoted_string()
        m = _NUMBER_RE.match(self.text, self.pos)
        if m:
            self.pos = m.end()
            text = m.group()
            return float(text) if "." in text else int(text)
        for word, value in (("true", True), ("false", False), ("null", None)):
            if self.accept(word):
                return value
        raise self.error("expected literal")


def parse_condition(text: str) -> ConditionAst:
    """Parse condition text into an AST. Raises ConditionSyntaxError."""
    if not text or not text.strip():
        raise ConditionSyntaxError("empty condition", 0)
    return _Parser(text).parse()


def _format_literal(value) -> str:
    if value is None:
        return "null"
    if value is True:
        return "true"
    if value is False:
        return "false"
    if isinstance(value, str):
        return '"' + value + '"'
    return repr(value)


def _format(ast, parent: str) -> str:
    # parent is the binding context: "or" < "and" < "not"
    if isinstance(ast, IntentIs):
        return "#" + ast.name
    if isinstance(ast, EntityPresent):
        if ast.value is None:
            return "@" + ast.name
        value = ast.value
        if not _BARE_VALUE_RE.fullmatch(value):
            value = '"' + value + '"'
        return f"@{ast.name}:{value}"
    if isinstance(ast, VarCompare):
        if ast.op == "defined":
            return "$" + ast.name
        return f"${ast.name} {ast.op} {_format_literal(ast.literal)}"
    if isinstance(ast, TrueCond):
        return "true"
    if isinstance(ast, AnythingElse):
        return "anything_else"
    if isinstance(ast, Not):
        return "!" + _format(ast.operand, "not")
    if isinstance(ast, And):
        text = " && ".join(_format(op, "and") for op in ast.operands)
        # parenthesize under ! and under another && so nesting survives reparsing
        return "(" + text + ")" if parent in ("and", "not") else text
    if isinstance(ast, Or):
        text = " || ".join(_format(op, "or") for op in ast.operands)
        return "(" + text + ")" if parent in ("and", "not", "or") else text
    raise TypeError(f"not a condition node: {ast!r}")


def format_condition(ast: ConditionAst) -> str:
    """Render an AST back to source text with minimal parentheses.

    parse(format(ast)) == ast, and format is byte-stable under reparsing.
    """
    return _format(ast, "or")
