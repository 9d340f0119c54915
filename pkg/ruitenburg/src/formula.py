from __future__ import annotations

import re
import zlib
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Mapping

Substitution = Mapping[str, "Formula"]

PREC_IFF, PREC_IMP, PREC_OR, PREC_AND, PREC_UNARY = range(5)

TOKEN_RE = re.compile(r"(?P<bot>_\|_)|(?P<var>[a-z][a-zA-Z0-9_]*)|(?P<op><->|->|[~&|()])")


class FormulaSyntaxError(ValueError):
    """Malformed formula text; ``position`` is the 0-based offset of the problem."""

    def __init__(self, message: str, position: int):
        super().__init__(f"syntax error at offset {position}: {message}")
        self.position = position


class PositivityError(ValueError):
    pass


class Formula:
    """
    Base of the five-constructor propositional language.

    Hashes are computed once at construction from CRC32 of variable names,
    so they do not depend on PYTHONHASHSEED and set iteration order over
    formulas is reproducible between processes.
    """

    __slots__ = ()

    def _children(self) -> tuple:
        return ()

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if type(self) is not type(other) or self._hash != other._hash:
            return False
        return self._children() == other._children()

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True, eq=False)
class Bottom(Formula):
    _hash: int = field(init=False, repr=False, default=0x5EED)

    def __repr__(self) -> str:
        return "Bottom()"


@dataclass(frozen=True, eq=False)
class Var(Formula):
    name: str
    _hash: int = field(init=False, repr=False, default=0)

    def __post_init__(self):
        if not self.name:
            raise ValueError("Variable names must be nonempty")
        object.__setattr__(self, "_hash", zlib.crc32(self.name.encode("utf-8")))

    def _children(self) -> tuple:
        return (self.name,)


@dataclass(frozen=True, eq=False)
class _Binary(Formula):
    left: Formula
    right: Formula
    _hash: int = field(init=False, repr=False, default=0)

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash((self._tag, self.left._hash, self.right._hash)))

    def _children(self) -> tuple:
        return (self.left, self.right)


class And(_Binary):
    _tag = 1


class Or(_Binary):
    _tag = 2


class Implies(_Binary):
    _tag = 3


BOTTOM = Bottom()


def neg(a: Formula) -> Formula:
    return Implies(a, BOTTOM)


def top() -> Formula:
    return Implies(BOTTOM, BOTTOM)


def iff(a: Formula, b: Formula) -> Formula:
    return And(Implies(a, b), Implies(b, a))


# parsing


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = self._tokenize(text)
        self.index = 0

    @staticmethod
    def _tokenize(text: str) -> list[tuple[str, str, int]]:
        tokens = []
        pos = 0
        while pos < len(text):
            if text[pos].isspace():
                pos += 1
                continue
            match = TOKEN_RE.match(text, pos)
            if match is None:
                raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", pos)
            kind = match.lastgroup
            tokens.append((kind, match.group(kind), pos))
            pos = match.end()
        return tokens

    def _peek(self) -> tuple[str, str, int] | None:
        return self.tokens[self.index] if self.index < len(self.tokens) else None

    def _at(self, op: str) -> bool:
        token = self._peek()
        return token is not None and token[0] == "op" and token[1] == op

    def _expect(self, op: str) -> None:
        token = self._peek()
        if token is None:
            raise FormulaSyntaxError(f"expected {op!r}, found end of input", len(self.text))
        if token[1] != op:
            raise FormulaSyntaxError(f"expected {op!r}, found {token[1]!r}", token[2])
        self.index += 1

    def parse(self) -> Formula:
        result = self._iff()
        token = self._peek()
        if token is not None:
            raise FormulaSyntaxError(f"unexpected {token[1]!r}", token[2])
        return result

    def _iff(self) -> Formula:
        left = self._imp()
        if self._at("<->"):
            self.index += 1
            return iff(left, self._iff())
        return left

    def _imp(self) -> Formula:
        left = self._disj()
        if self._at("->"):
            self.index += 1
            return Implies(left, self._imp())
        return left

    def _disj(self) -> Formula:
        result = self._conj()
        while self._at("|"):
            self.index += 1
            result = Or(result, self._conj())
        return result

    def _conj(self) -> Formula:
        result = self._unary()
        while self._at("&"):
            self.index += 1
            result = And(result, self._unary())
        return result

    def _unary(self) -> Formula:
        if self._at("~"):
            self.index += 1
            return neg(self._unary())
        return self._atom()

    def _atom(self) -> Formula:
        token = self._peek()
        if token is None:
            raise FormulaSyntaxError("unexpected end of input", len(self.text))
        kind, value, pos = token
        if kind == "var":
            self.index += 1
            return Var(value)
        if kind == "bot":
            self.index += 1
            return BOTTOM
        if value == "(":
            self.index += 1
            inner = self._iff()
            self._expect(")")
            return inner
        raise FormulaSyntaxError(f"unexpected {value!r}", pos)


def parse(text: str) -> Formula:
    """
    Parse ASCII formula text.

    ``~A`` becomes ``A -> _|_`` and ``A <-> B`` becomes
    ``(A -> B) & (B -> A)``; ``->`` and ``<->`` associate to the right,
    ``&`` and ``|`` to the left.
    """
    return _Parser(text).parse()


def _iff_parts(a: Formula) -> tuple[Formula, Formula] | None:
    if isinstance(a, And) and isinstance(a.left, Implies) and isinstance(a.right, Implies):
        p, q = a.left.left, a.left.right
        if a.right.left == q and a.right.right == p:
            return p, q
    return None


def to_text(a: Formula, context: int = PREC_IFF) -> str:
    """Print with the fewest parentheses that parse back to the same tree."""
    if isinstance(a, Bottom):
        return "_|_"
    if isinstance(a, Var):
        return a.name
    parts = _iff_parts(a)
    if parts is not None:
        text, prec = f"{to_text(parts[0], PREC_IMP)} <-> {to_text(parts[1], PREC_IMP)}", PREC_IFF
    elif isinstance(a, Implies) and isinstance(a.right, Bottom):
        text, prec = "~" + to_text(a.left, PREC_UNARY), PREC_UNARY
    elif isinstance(a, Implies):
        text, prec = f"{to_text(a.left, PREC_OR)} -> {to_text(a.right, PREC_IMP)}", PREC_IMP
    elif isinstance(a, Or):
        text, prec = f"{to_text(a.left, PREC_OR)} | {to_text(a.right, PREC_AND)}", PREC_OR
    else:
        text, prec = f"{to_text(a.left, PREC_AND)} & {to_text(a.right, PREC_UNARY)}", PREC_AND
    return f"({text})" if prec < context else text


# structural operations


def substitute(a: Formula, s: Substitution) -> Formula:
    """
    Simultaneous substitution; unmapped variables are fixed.

    Shared subterms stay shared, so iterated substitution builds a DAG
    whose node count grows linearly even when the printed text does not.
    """
    if not s:
        return a
    memo: dict[int, Formula] = {}

    def go(f: Formula) -> Formula:
        key = id(f)
        if key in memo:
            return memo[key]
        if isinstance(f, Var):
            result = s.get(f.name, f)
        elif isinstance(f, _Binary):
            left, right = go(f.left), go(f.right)
            result = f if left is f.left and right is f.right else type(f)(left, right)
        else:
            result = f
        memo[key] = result
        return result

    return go(a)


def iterates(a: Formula, x: str) -> Iterator[Formula]:
    """Yield A^1, A^2, ... with A^{i+1} = A(A^i/x)."""
    current = a
    while True:
        yield current
        current = substitute(a, {x: current})


def iterate_formula(a: Formula, x: str, i: int) -> Formula:
    if i < 1:
        raise ValueError(f"Iteration count must be positive, got {i}")
    current = a
    for _ in range(i - 1):
        current = substitute(a, {x: current})
    return current


@lru_cache(maxsize=1 << 16)
def degree(a: Formula) -> int:
    if isinstance(a, Implies):
        return max(degree(a.left), degree(a.right)) + 1
    if isinstance(a, _Binary):
        return max(degree(a.left), degree(a.right))
    return 0


@lru_cache(maxsize=1 << 16)
def connectives(a: Formula) -> int:
    """Number of binary constructors in the tree (shared nodes counted per occurrence)."""
    if isinstance(a, _Binary):
        return 1 + connectives(a.left) + connectives(a.right)
    return 0


@lru_cache(maxsize=1 << 16)
def variables(a: Formula) -> frozenset[str]:
    if isinstance(a, Var):
        return frozenset((a.name,))
    if isinstance(a, _Binary):
        return variables(a.left) | variables(a.right)
    return frozenset()


def nodes(a: Formula) -> list[Formula]:
    """Distinct subformulas, children before parents."""
    order: list[Formula] = []
    seen: set[int] = set()
    stack: list[tuple[Formula, bool]] = [(a, False)]
    while stack:
        f, expanded = stack.pop()
        if id(f) in seen:
            continue
        if expanded or not isinstance(f, _Binary):
            seen.add(id(f))
            order.append(f)
            continue
        stack.append((f, True))
        stack.append((f.right, False))
        stack.append((f.left, False))
    return order


def occurs_only_positively(a: Formula, x: str) -> bool:
    """True iff every occurrence of ``x`` sits in an even number of implication antecedents."""

    @lru_cache(maxsize=None)
    def check(f: Formula, positive: bool) -> bool:
        if isinstance(f, Var):
            return positive or f.name != x
        if isinstance(f, Implies):
            return check(f.left, not positive) and check(f.right, positive)
        if isinstance(f, _Binary):
            return check(f.left, positive) and check(f.right, positive)
        return True

    return check(a, True)
