"""A small regular-expression subset: parser, printer, sampler, enumerator.

Supported syntax: literal characters; escapes \\d \\w \\s \\\\ \\. ;
character classes with ranges (no negation); groups; alternation;
quantifiers ? * + {m} {m,n}. Semantics agree with Python's re on this
subset, so re.fullmatch can serve as an independent matcher in tests.
"""

import random
from dataclasses import dataclass
from typing import FrozenSet, Optional, Tuple

DEFAULT_MAX_REPEAT = 8

_DIGITS = frozenset("0123456789")
_WORD = frozenset("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_")
_SPACE = frozenset(" \t\n\r\f\v")

_ESCAPES = {"d": _DIGITS, "w": _WORD, "s": _SPACE, "\\": frozenset("\\"), ".": frozenset(".")}

# Characters that must be escaped when printing a literal outside a class.
_META = set("\\.[](){}|?*+")
_CLASS_META = set("\\]^-[")


class PatternParseError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class CapacityError(ValueError):
    pass


@dataclass(frozen=True)
class Literal:
    char: str

    def __post_init__(self):
        if len(self.char) != 1:
            raise ValueError("literal must be a single character")


@dataclass(frozen=True)
class CharClass:
    chars: FrozenSet[str]

    def __post_init__(self):
        if not self.chars:
            raise ValueError("character class must be non-empty")
        object.__setattr__(self, "chars", frozenset(self.chars))


@dataclass(frozen=True)
class Concat:
    children: Tuple

    def __post_init__(self):
        if not self.children:
            raise ValueError("concat needs at least one child")
        object.__setattr__(self, "children", tuple(self.children))


@dataclass(frozen=True)
class Alternation:
    children: Tuple

    def __post_init__(self):
        if not self.children:
            raise ValueError("alternation needs at least one child")
        object.__setattr__(self, "children", tuple(self.children))


@dataclass(frozen=True)
class Group:
    child: object


@dataclass(frozen=True)
class Repeat:
    child: object
    min: int
    max: Optional[int]  # None = unbounded

    def __post_init__(self):
        if self.min < 0:
            raise ValueError("repeat min must be >= 0")
        if self.max is not None and self.max < self.min:
            raise ValueError("repeat max must be >= min")


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.pos = 0

    def error(self, message: str, offset: Optional[int] = None):
        raise PatternParseError(message, self.pos if offset is None else offset)

    def peek(self) -> Optional[str]:
        return self.src[self.pos] if self.pos < len(self.src) else None

    def take(self) -> str:
        ch = self.src[self.pos]
        self.pos += 1
        return ch

    def parse(self):
        if not self.src:
            self.error("empty pattern")
        ast = self.alternation()
        if self.pos != len(self.src):
            self.error(f"unexpected {self.src[self.pos]!r}")
        return ast

    def alternation(self):
        branches = [self.concat()]
        while self.peek() == "|":
            self.take()
            branches.append(self.concat())
        if len(branches) == 1:
            return branches[0]
        return Alternation(tuple(branches))

    def concat(self):
        parts = []
        while self.peek() not in (None, "|", ")"):
            parts.append(self.repeatable())
        if not parts:
            self.error("empty branch")
        if len(parts) == 1:
            return parts[0]
        return Concat(tuple(parts))

    def repeatable(self):
        atom = self.atom()
        ch = self.peek()
        if ch == "?":
            self.take()
            return Repeat(atom, 0, 1)
        if ch == "*":
            self.take()
            return Repeat(atom, 0, None)
        if ch == "+":
            self.take()
            return Repeat(atom, 1, None)
        if ch == "{":
            return self.bounded_repeat(atom)
        return atom

    def bounded_repeat(self, atom):
        start = self.pos
        self.take()  # "{"
        lo = self.integer(start)
        if self.peek() == "}":
            self.take()
            return Repeat(atom, lo, lo)
        if self.peek() != ",":
            self.error("malformed quantifier", start)
        self.take()
        if self.peek() == "}":
            self.take()
            return Repeat(atom, lo, None)
        hi = self.integer(start)
        if self.peek() != "}":
            self.error("malformed quantifier", start)
        self.take()
        if hi < lo:
            self.error(f"reversed repeat bounds {{{lo},{hi}}}", start)
        return Repeat(atom, lo, hi)

    def integer(self, start: int) -> int:
        digits = ""
        while self.peek() is not None and self.peek().isdigit():
            digits += self.take()
        if not digits:
            self.error("malformed quantifier", start)
        return int(digits)

    def atom(self):
        ch = self.peek()
        if ch == "(":
            return self.group()
        if ch == "[":
            return self.char_class()
        if ch == "\\":
            return self.escape(in_class=False)
        if ch in "?*+{":
            self.error(f"quantifier {ch!r} with nothing to repeat")
        if ch in ".^$":
            self.error(f"unsupported construct {ch!r}")
        self.take()
        return Literal(ch)

    def group(self):
        start = self.pos
        self.take()  # "("
        if self.peek() is None:
            self.error("unbalanced parenthesis", start)
        child = self.alternation()
        if self.peek() != ")":
            self.error("unbalanced parenthesis", start)
        self.take()
        return Group(child)

    def escape(self, in_class: bool):
        start = self.pos
        self.take()  # backslash
        ch = self.peek()
        if ch is None:
            self.error("dangling escape", start)
        self.take()
        if ch in _ESCAPES:
            charset = _ESCAPES[ch]
            if len(charset) == 1:
                return Literal(next(iter(charset)))
            return CharClass(charset)
        # Escaped punctuation is always the literal character, as in re.
        if in_class and ch in "]^-[":
            return Literal(ch)
        if not in_class and ch in "[](){}|?*+^$-":
            return Literal(ch)
        self.error(f"unsupported escape \\{ch}", start)

    def char_class(self):
        start = self.pos
        self.take()  # "["
        if self.peek() == "^":
            self.error("negated classes are unsupported", self.pos)
        chars = set()
        while True:
            ch = self.peek()
            if ch is None:
                self.error("unbalanced bracket", start)
            if ch == "]":
                self.take()
                break
            chars |= self.class_item()
        if not chars:
            self.error("empty character class", start)
        return CharClass(frozenset(chars))

    def class_item(self):
        item_start = self.pos
        if self.peek() == "\\":
            node = self.escape(in_class=True)
            first = node.chars if isinstance(node, CharClass) else {node.char}
            if len(first) > 1:
                return set(first)
            lo = next(iter(first))
        else:
            lo = self.take()
        if self.peek() == "-" and self.pos + 1 < len(self.src) and self.src[self.pos + 1] != "]":
            self.take()  # "-"
            if self.peek() == "\\":
                node = self.escape(in_class=True)
                if isinstance(node, CharClass):
                    self.error("range endpoint cannot be a character set", item_start)
                hi = node.char
            else:
                hi = self.take()
            if ord(hi) < ord(lo):
                self.error(f"reversed range {lo}-{hi}", item_start)
            return {chr(c) for c in range(ord(lo), ord(hi) + 1)}
        return {lo}


def parse_pattern(src: str):
    return _Parser(src).parse()


def _print_literal(char: str, in_class: bool = False) -> str:
    meta = _CLASS_META if in_class else _META
    if char in meta:
        return "\\" + char
    return char


def to_pattern(ast) -> str:
    """Print an AST back to source; parse(to_pattern(ast)) is equivalent."""
    if isinstance(ast, Literal):
        return _print_literal(ast.char)
    if isinstance(ast, CharClass):
        body = "".join(_print_literal(c, in_class=True) for c in sorted(ast.chars))
        return f"[{body}]"
    if isinstance(ast, Concat):
        return "".join(_grouped(c) if isinstance(c, Alternation) else to_pattern(c)
                       for c in ast.children)
    if isinstance(ast, Alternation):
        # A nested alternation must stay grouped or its branches would be
        # absorbed into the parent, changing the choice structure.
        return "|".join(_grouped(c) if isinstance(c, Alternation) else to_pattern(c)
                        for c in ast.children)
    if isinstance(ast, Group):
        return f"({to_pattern(ast.child)})"
    if isinstance(ast, Repeat):
        if ast.min == 0 and ast.max == 1:
            suffix = "?"
        elif ast.min == 0 and ast.max is None:
            suffix = "*"
        elif ast.min == 1 and ast.max is None:
            suffix = "+"
        elif ast.max is None:
            suffix = f"{{{ast.min},}}"
        elif ast.max == ast.min:
            suffix = f"{{{ast.min}}}"
        else:
            suffix = f"{{{ast.min},{ast.max}}}"
        if isinstance(ast.child, (Alternation, Concat, Repeat)):
            return _grouped(ast.child) + suffix
        return to_pattern(ast.child) + suffix
    raise TypeError(f"not an AST node: {ast!r}")


def _grouped(node) -> str:
    return f"({to_pattern(node)})"


def sample(ast, rng: random.Random, max_repeat: int = DEFAULT_MAX_REPEAT) -> str:
    if isinstance(ast, Literal):
        return ast.char
    if isinstance(ast, CharClass):
        return rng.choice(sorted(ast.chars))
    if isinstance(ast, Concat):
        return "".join(sample(child, rng, max_repeat) for child in ast.children)
    if isinstance(ast, Alternation):
        if len(ast.children) == 1:
            return sample(ast.children[0], rng, max_repeat)
        branch = ast.children[rng.randrange(len(ast.children))]
        return sample(branch, rng, max_repeat)
    if isinstance(ast, Group):
        return sample(ast.child, rng, max_repeat)
    if isinstance(ast, Repeat):
        hi = ast.max if ast.max is not None else max(ast.min, max_repeat)
        n = rng.randint(ast.min, hi)
        return "".join(sample(ast.child, rng, max_repeat) for _ in range(n))
    raise TypeError(f"not an AST node: {ast!r}")


def enumerate_matches(ast, limit: int, max_repeat: int = DEFAULT_MAX_REPEAT) -> set:
    """The exact match set, unbounded repeats capped at max_repeat."""
    result = _enumerate(ast, limit, max_repeat)
    if len(result) > limit:
        raise CapacityError(f"match set exceeds limit {limit}")
    return result


def _enumerate(ast, limit, max_repeat) -> set:
    if isinstance(ast, Literal):
        return {ast.char}
    if isinstance(ast, CharClass):
        _check(len(ast.chars), limit)
        return set(ast.chars)
    if isinstance(ast, Group):
        return _enumerate(ast.child, limit, max_repeat)
    if isinstance(ast, Alternation):
        out = set()
        for child in ast.children:
            out |= _enumerate(child, limit, max_repeat)
            _check(len(out), limit)
        return out
    if isinstance(ast, Concat):
        out = {""}
        for child in ast.children:
            part = _enumerate(child, limit, max_repeat)
            out = _product(out, part, limit)
        return out
    if isinstance(ast, Repeat):
        hi = ast.max if ast.max is not None else max(ast.min, max_repeat)
        part = _enumerate(ast.child, limit, max_repeat)
        powers = {0: {""}}
        for k in range(1, hi + 1):
            powers[k] = _product(powers[k - 1], part, limit)
        out = set()
        for n in range(ast.min, hi + 1):
            out |= powers[n]
            _check(len(out), limit)
        return out
    raise TypeError(f"not an AST node: {ast!r}")


def _product(lhs: set, rhs: set, limit: int) -> set:
    # The pairwise work bound also caps runaway products whose deduplicated
    # size would still exceed the limit.
    _check(len(lhs) * len(rhs), max(limit * 64, 1 << 20))
    out = {a + b for a in lhs for b in rhs}
    _check(len(out), limit)
    return out


def _check(size: int, limit: int):
    if size > limit:
        raise CapacityError(f"match set exceeds limit {limit}")
