"""Input language frontend: typed formulas, parsing, normalization, classification.

Accepts an SMT-LIB 2.6 subset (strings theory restricted to regular membership,
concatenation, length, plus a binary ``numstr`` relation between an integer term
and a binary word) and produces immutable formula trees.  Everything here is a
pure function over immutable values and safe to share between threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional
from typing import Union as TUnion

# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------


class FrontendError(Exception):
    """Base class for all input-language errors."""


class SmtSyntaxError(FrontendError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


class SortError(FrontendError):
    pass


class UnknownSymbolError(FrontendError):
    pass


# ---------------------------------------------------------------------------
# Regular expressions (ground; complement marks the extended dialect)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Regex:
    pass


@dataclass(frozen=True)
class Empty(Regex):
    pass


@dataclass(frozen=True)
class Epsilon(Regex):
    pass


@dataclass(frozen=True)
class Lit(Regex):
    symbol: str


@dataclass(frozen=True)
class Concat(Regex):
    left: Regex
    right: Regex


@dataclass(frozen=True)
class Union(Regex):
    left: Regex
    right: Regex


@dataclass(frozen=True)
class Star(Regex):
    inner: Regex


@dataclass(frozen=True)
class Complement(Regex):
    inner: Regex


def regex_literal(word: str) -> Regex:
    """Regex accepting exactly ``word`` (epsilon for the empty word)."""
    if not word:
        return Epsilon()
    node: Regex = Lit(word[0])
    for ch in word[1:]:
        node = Concat(node, Lit(ch))
    return node


def regex_union(parts: list[Regex]) -> Regex:
    if not parts:
        return Empty()
    node = parts[0]
    for p in parts[1:]:
        node = Union(node, p)
    return node


def regex_concat(parts: list[Regex]) -> Regex:
    if not parts:
        return Epsilon()
    node = parts[0]
    for p in parts[1:]:
        node = Concat(node, p)
    return node


def cdepth(r: Regex) -> int:
    """Complement-nesting measure: sums across concat/union, +1 per complement."""
    if isinstance(r, (Empty, Epsilon, Lit)):
        return 0
    if isinstance(r, (Concat, Union)):
        return cdepth(r.left) + cdepth(r.right)
    if isinstance(r, Star):
        return cdepth(r.inner)
    if isinstance(r, Complement):
        return 1 + cdepth(r.inner)
    raise TypeError(f"not a regex node: {r!r}")


def regex_has_complement(r: Regex) -> bool:
    return cdepth(r) > 0


def regex_alphabet(r: Regex) -> set[str]:
    if isinstance(r, Lit):
        return {r.symbol}
    if isinstance(r, (Concat, Union)):
        return regex_alphabet(r.left) | regex_alphabet(r.right)
    if isinstance(r, (Star, Complement)):
        return regex_alphabet(r.inner)
    return set()


def regex_size(r: Regex) -> int:
    if isinstance(r, (Empty, Epsilon, Lit)):
        return 1
    if isinstance(r, (Concat, Union)):
        return 1 + regex_size(r.left) + regex_size(r.right)
    return 1 + regex_size(r.inner)  # type: ignore[union-attr]


# ---------------------------------------------------------------------------
# Patterns and linear terms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StrVar:
    name: str


PatternItem = TUnion[StrVar, str]  # a variable or a constant word


@dataclass(frozen=True)
class Pattern:
    """Sequence of string variables and constant words, adjacent constants merged."""

    items: tuple[PatternItem, ...]

    @staticmethod
    def of(*items: PatternItem) -> "Pattern":
        merged: list[PatternItem] = []
        for it in items:
            if isinstance(it, str):
                if not it:
                    continue
                if merged and isinstance(merged[-1], str):
                    merged[-1] = merged[-1] + it
                    continue
            merged.append(it)
        return Pattern(tuple(merged))

    def variables(self) -> list[str]:
        """Variable names in occurrence order (with repeats)."""
        return [it.name for it in self.items if isinstance(it, StrVar)]

    def is_constant(self) -> bool:
        return all(isinstance(it, str) for it in self.items)

    def constant_word(self) -> str:
        assert self.is_constant()
        return "".join(self.items)  # type: ignore[arg-type]

    def has_concat(self) -> bool:
        return len(self.items) >= 2

    def concat(self, other: "Pattern") -> "Pattern":
        return Pattern.of(*(self.items + other.items))

    def __str__(self) -> str:
        parts = []
        for it in self.items:
            parts.append(it.name if isinstance(it, StrVar) else f'"{it}"')
        return "·".join(parts) if parts else "ε"


# Linear integer terms: sum of coefficient * key plus a constant.  Keys are
# ("int", name) for integer variables and ("len", name) for string lengths.
LinKey = tuple[str, str]


@dataclass(frozen=True)
class LinTerm:
    coeffs: tuple[tuple[LinKey, int], ...]  # sorted, nonzero coefficients
    const: int = 0

    @staticmethod
    def make(coeffs: Mapping[LinKey, int], const: int = 0) -> "LinTerm":
        items = tuple(sorted((k, c) for k, c in coeffs.items() if c != 0))
        return LinTerm(items, const)

    @staticmethod
    def constant(n: int) -> "LinTerm":
        return LinTerm((), n)

    @staticmethod
    def var(key: LinKey) -> "LinTerm":
        return LinTerm(((key, 1),), 0)

    def add(self, other: "LinTerm") -> "LinTerm":
        acc = dict(self.coeffs)
        for k, c in other.coeffs:
            acc[k] = acc.get(k, 0) + c
        return LinTerm.make(acc, self.const + other.const)

    def scale(self, factor: int) -> "LinTerm":
        return LinTerm.make({k: c * factor for k, c in self.coeffs}, self.const * factor)

    def sub(self, other: "LinTerm") -> "LinTerm":
        return self.add(other.scale(-1))

    def single_var(self) -> Optional[LinKey]:
        """The key if this term is exactly one variable with coefficient 1."""
        if self.const == 0 and len(self.coeffs) == 1 and self.coeffs[0][1] == 1:
            return self.coeffs[0][0]
        return None

    def is_constant(self) -> bool:
        return not self.coeffs

    def keys(self) -> list[LinKey]:
        return [k for k, _ in self.coeffs]


# ---------------------------------------------------------------------------
# Atoms and formula trees
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Membership:
    pattern: Pattern
    regex: Regex
    positive: bool = True

    def negate(self) -> "Membership":
        return Membership(self.pattern, self.regex, not self.positive)


@dataclass(frozen=True)
class LinCmp:
    """Normalized comparison: sum(term) rel const, rel in {"<=", ">=", "="}."""

    term: LinTerm
    rel: str
    const: int

    @staticmethod
    def true_atom() -> "LinCmp":
        return LinCmp(LinTerm.constant(0), "=", 0)

    @staticmethod
    def false_atom() -> "LinCmp":
        return LinCmp(LinTerm.constant(0), "=", 1)


@dataclass(frozen=True)
class NumStr:
    value: LinTerm
    pattern: Pattern
    positive: bool = True

    def negate(self) -> "NumStr":
        return NumStr(self.value, self.pattern, not self.positive)


@dataclass(frozen=True)
class WordEq:
    left: Pattern
    right: Pattern
    positive: bool = True

    def negate(self) -> "WordEq":
        return WordEq(self.left, self.right, not self.positive)


Atom = TUnion[Membership, LinCmp, NumStr, WordEq]


@dataclass(frozen=True)
class And:
    children: tuple["Node", ...]


@dataclass(frozen=True)
class Or:
    children: tuple["Node", ...]


@dataclass(frozen=True)
class Not:
    child: "Node"


Node = TUnion[And, Or, Not, Membership, LinCmp, NumStr, WordEq]


def make_and(children: list[Node]) -> Node:
    if not children:
        return LinCmp.true_atom()
    if len(children) == 1:
        return children[0]
    return And(tuple(children))


def make_or(children: list[Node]) -> Node:
    if not children:
        return LinCmp.false_atom()
    if len(children) == 1:
        return children[0]
    return Or(tuple(children))


@dataclass
class Formula:
    """A parsed script: declarations plus one Boolean constraint tree."""

    root: Node
    alphabet: tuple[str, ...]
    str_vars: tuple[str, ...]
    int_vars: tuple[str, ...]
    strict_numstr: bool = False

    def atoms(self) -> Iterator[Atom]:
        yield from iter_atoms(self.root)

    def with_root(self, root: Node) -> "Formula":
        return Formula(root, self.alphabet, self.str_vars, self.int_vars, self.strict_numstr)


def iter_atoms(node: Node) -> Iterator[Atom]:
    if isinstance(node, (And, Or)):
        for c in node.children:
            yield from iter_atoms(c)
    elif isinstance(node, Not):
        yield from iter_atoms(node.child)
    else:
        yield node


# ---------------------------------------------------------------------------
# Tokenizer / s-expression reader
# ---------------------------------------------------------------------------


@dataclass
class _Tok:
    kind: str  # "(", ")", "atom", "string"
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i, line, col = i + 1, line + 1, 1
        elif ch in " \t\r":
            i, col = i + 1, col + 1
        elif ch == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif ch in "()":
            toks.append(_Tok(ch, ch, line, col))
            i, col = i + 1, col + 1
        elif ch == '"':
            start_line, start_col = line, col
            i, col = i + 1, col + 1
            buf = []
            while True:
                if i >= n:
                    raise SmtSyntaxError("unterminated string literal", start_line, start_col)
                if text[i] == '"':
                    if i + 1 < n and text[i + 1] == '"':  # doubled quote escape
                        buf.append('"')
                        i, col = i + 2, col + 2
                        continue
                    i, col = i + 1, col + 1
                    break
                if text[i] == "\n":
                    line, col = line + 1, 0
                buf.append(text[i])
                i, col = i + 1, col + 1
            toks.append(_Tok("string", "".join(buf), start_line, start_col))
        else:
            start_line, start_col = line, col
            j = i
            while j < n and text[j] not in ' \t\r\n();"':
                j += 1
            toks.append(_Tok("atom", text[i:j], start_line, start_col))
            col += j - i
            i = j
    return toks


SExpr = TUnion[_Tok, list]


def _read_sexprs(toks: list[_Tok]) -> list[SExpr]:
    exprs: list[SExpr] = []
    stack: list[list[SExpr]] = []
    for t in toks:
        if t.kind == "(":
            stack.append([])
        elif t.kind == ")":
            if not stack:
                raise SmtSyntaxError("unbalanced ')'", t.line, t.col)
            done = stack.pop()
            (stack[-1] if stack else exprs).append(done)
        else:
            (stack[-1] if stack else exprs).append(t)
    if stack:
        raise SmtSyntaxError("unbalanced '(' at end of input", toks[-1].line if toks else 0, 0)
    return exprs


def _pos(e: SExpr) -> tuple[int, int]:
    while isinstance(e, list):
        if not e:
            return (0, 0)
        e = e[0]
    return (e.line, e.col)


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

_IGNORED_COMMANDS = {
    "set-logic",
    "check-sat",
    "exit",
    "get-model",
    "get-value",
    "set-option",
    "echo",
}


class _Parser:
    def __init__(self, strict_numstr: bool = False):
        self.sorts: dict[str, str] = {}
        self.str_order: list[str] = []
        self.int_order: list[str] = []
        self.asserts: list[Node] = []
        self.declared_alphabet: Optional[str] = None
        self.literal_chars: list[str] = []
        self.saw_numstr = False
        self.strict_numstr = strict_numstr
        self.allchar_uses: list[list[Regex]] = []  # patched once alphabet is known

    # -- commands ----------------------------------------------------------

    def run(self, exprs: list[SExpr]) -> Formula:
        for e in exprs:
            self.command(e)
        alphabet = self.final_alphabet()
        alpha_set = set(alphabet)
        for hole in self.allchar_uses:
            hole.extend(Lit(c) for c in alphabet)
        root = make_and(self.asserts)
        f = Formula(
            root=root,
            alphabet=alphabet,
            str_vars=tuple(self.str_order),
            int_vars=tuple(self.int_order),
            strict_numstr=self.strict_numstr,
        )
        self.check_symbols(f, alpha_set)
        return f

    def final_alphabet(self) -> tuple[str, ...]:
        if self.declared_alphabet is not None:
            seen: list[str] = []
            for ch in self.declared_alphabet:
                if ch not in seen:
                    seen.append(ch)
            return tuple(seen)
        chars = set(self.literal_chars)
        if self.saw_numstr:
            chars |= {"0", "1"}
        return tuple(sorted(chars))

    def check_symbols(self, f: Formula, alpha: set[str]) -> None:
        for atom in f.atoms():
            pats: list[Pattern] = []
            if isinstance(atom, Membership):
                pats.append(atom.pattern)
                bad = regex_alphabet(atom.regex) - alpha
                if bad:
                    raise SortError(f"regex symbol(s) {sorted(bad)} outside declared alphabet")
            elif isinstance(atom, NumStr):
                pats.append(atom.pattern)
            elif isinstance(atom, WordEq):
                pats.extend([atom.left, atom.right])
            for p in pats:
                for it in p.items:
                    if isinstance(it, str) and (set(it) - alpha):
                        raise SortError(f"constant {it!r} uses symbols outside the alphabet")

    def command(self, e: SExpr) -> None:
        if not isinstance(e, list) or not e or not isinstance(e[0], _Tok):
            ln, co = _pos(e)
            raise SmtSyntaxError("expected a command", ln, co)
        head = e[0].text
        if head in _IGNORED_COMMANDS:
            return
        if head == "set-info":
            if len(e) == 3 and isinstance(e[1], _Tok) and e[1].text == ":alphabet":
                if not isinstance(e[2], _Tok) or e[2].kind != "string":
                    raise SmtSyntaxError("alphabet must be a string literal", *_pos(e[2]))
                self.declared_alphabet = e[2].text
            return
        if head in ("declare-fun", "declare-const"):
            self.declare(e)
            return
        if head == "assert":
            if len(e) != 2:
                raise SmtSyntaxError("assert takes exactly one argument", e[0].line, e[0].col)
            node = self.boolean(e[1])
            self.asserts.append(node)
            return
        raise UnknownSymbolError(f"unsupported command {head!r}")

    def declare(self, e: SExpr) -> None:
        head = e[0]
        if head.text == "declare-fun":
            if len(e) != 4 or not isinstance(e[1], _Tok) or not isinstance(e[2], list):
                raise SmtSyntaxError("malformed declare-fun", head.line, head.col)
            if e[2]:
                raise SortError("only zero-arity declarations are supported")
            name, sort_e = e[1].text, e[3]
        else:
            if len(e) != 3 or not isinstance(e[1], _Tok):
                raise SmtSyntaxError("malformed declare-const", head.line, head.col)
            name, sort_e = e[1].text, e[2]
        if not isinstance(sort_e, _Tok) or sort_e.text not in ("String", "Int"):
            raise SortError(f"unsupported sort for {name!r} (want String or Int)")
        if name in self.sorts:
            raise SortError(f"duplicate declaration of {name!r}")
        self.sorts[name] = sort_e.text
        (self.str_order if sort_e.text == "String" else self.int_order).append(name)

    # -- terms --------------------------------------------------------------

    def boolean(self, e: SExpr) -> Node:
        if isinstance(e, _Tok):
            if e.text == "true":
                return LinCmp.true_atom()
            if e.text == "false":
                return LinCmp.false_atom()
            raise SortError(f"expected a Boolean term, got {e.text!r}")
        if not e or not isinstance(e[0], _Tok):
            raise SmtSyntaxError("expected an application", *_pos(e))
        op = e[0].text
        args = e[1:]
        if op == "and":
            return make_and([self.boolean(a) for a in args])
        if op == "or":
            return make_or([self.boolean(a) for a in args])
        if op == "not":
            if len(args) != 1:
                raise SmtSyntaxError("not takes one argument", e[0].line, e[0].col)
            return Not(self.boolean(args[0]))
        if op == "str.in_re":
            if len(args) != 2:
                raise SmtSyntaxError("str.in_re takes two arguments", e[0].line, e[0].col)
            return Membership(self.pattern(args[0]), self.regex(args[1]))
        if op == "numstr":
            if len(args) != 2:
                raise SmtSyntaxError("numstr takes two arguments", e[0].line, e[0].col)
            self.saw_numstr = True
            return NumStr(self.int_term(args[0]), self.pattern(args[1]))
        if op in ("<=", "<", ">=", ">"):
            if len(args) != 2:
                raise SmtSyntaxError(f"{op} takes two arguments", e[0].line, e[0].col)
            return self.compare(op, self.int_term(args[0]), self.int_term(args[1]))
        if op == "=":
            if len(args) != 2:
                raise SmtSyntaxError("= takes two arguments", e[0].line, e[0].col)
            return self.equality(args[0], args[1])
        raise UnknownSymbolError(f"unknown Boolean operator {op!r}")

    def equality(self, a: SExpr, b: SExpr) -> Node:
        ka = self.term_sort(a)
        kb = self.term_sort(b)
        if ka != kb:
            raise SortError(f"= between different sorts ({ka} vs {kb})")
        if ka == "String":
            return WordEq(self.pattern(a), self.pattern(b))
        return self.compare("=", self.int_term(a), self.int_term(b))

    def term_sort(self, e: SExpr) -> str:
        if isinstance(e, _Tok):
            if e.kind == "string":
                return "String"
            if e.text.lstrip("-").isdigit():
                return "Int"
            sort = self.sorts.get(e.text)
            if sort is None:
                raise UnknownSymbolError(f"undeclared symbol {e.text!r}")
            return sort
        if e and isinstance(e[0], _Tok):
            if e[0].text in ("str.++",):
                return "String"
            if e[0].text in ("+", "-", "*", "str.len"):
                return "Int"
        raise SortError("cannot infer sort of term")

    def compare(self, op: str, lhs: LinTerm, rhs: LinTerm) -> LinCmp:
        # Normalize to (lhs - rhs) rel const over integers; strict forms shift by 1.
        diff = lhs.sub(rhs)
        const = -diff.const
        term = LinTerm(diff.coeffs, 0)
        if op == "<=":
            return LinCmp(term, "<=", const)
        if op == ">=":
            return LinCmp(term, ">=", const)
        if op == "<":
            return LinCmp(term, "<=", const - 1)
        if op == ">":
            return LinCmp(term, ">=", const + 1)
        return LinCmp(term, "=", const)

    def pattern(self, e: SExpr) -> Pattern:
        if isinstance(e, _Tok):
            if e.kind == "string":
                self.literal_chars.extend(e.text)
                return Pattern.of(e.text)
            sort = self.sorts.get(e.text)
            if sort is None:
                raise UnknownSymbolError(f"undeclared symbol {e.text!r}")
            if sort != "String":
                raise SortError(f"{e.text!r} is not a string variable")
            return Pattern.of(StrVar(e.text))
        if e and isinstance(e[0], _Tok) and e[0].text == "str.++":
            if len(e) < 3:
                raise SmtSyntaxError("str.++ takes at least two arguments", e[0].line, e[0].col)
            parts = [self.pattern(a) for a in e[1:]]
            out = parts[0]
            for p in parts[1:]:
                out = out.concat(p)
            return out
        raise SortError("expected a string term")

    def int_term(self, e: SExpr) -> LinTerm:
        if isinstance(e, _Tok):
            if e.text.lstrip("-").isdigit() and e.text.lstrip("-"):
                return LinTerm.constant(int(e.text))
            sort = self.sorts.get(e.text)
            if sort is None:
                raise UnknownSymbolError(f"undeclared symbol {e.text!r}")
            if sort != "Int":
                raise SortError(f"{e.text!r} is not an integer variable")
            return LinTerm.var(("int", e.text))
        if not e or not isinstance(e[0], _Tok):
            raise SmtSyntaxError("expected an integer term", *_pos(e))
        op = e[0].text
        args = e[1:]
        if op == "+":
            out = LinTerm.constant(0)
            for a in args:
                out = out.add(self.int_term(a))
            return out
        if op == "-":
            if len(args) == 1:
                return self.int_term(args[0]).scale(-1)
            out = self.int_term(args[0])
            for a in args[1:]:
                out = out.sub(self.int_term(a))
            return out
        if op == "*":
            if len(args) != 2:
                raise SmtSyntaxError("* takes two arguments", e[0].line, e[0].col)
            lhs, rhs = self.int_term(args[0]), self.int_term(args[1])
            if lhs.is_constant():
                return rhs.scale(lhs.const)
            if rhs.is_constant():
                return lhs.scale(rhs.const)
            raise SortError("nonlinear multiplication is not supported")
        if op == "str.len":
            if len(args) != 1:
                raise SmtSyntaxError("str.len takes one argument", e[0].line, e[0].col)
            pat = self.pattern(args[0])
            coeffs: dict[LinKey, int] = {}
            const = 0
            for it in pat.items:
                if isinstance(it, StrVar):
                    key = ("len", it.name)
                    coeffs[key] = coeffs.get(key, 0) + 1
                else:
                    const += len(it)
            return LinTerm.make(coeffs, const)
        raise UnknownSymbolError(f"unknown integer operator {op!r}")

    def regex(self, e: SExpr) -> Regex:
        if isinstance(e, _Tok):
            if e.text == "re.none":
                return Empty()
            if e.text == "re.allchar":
                # Expanded to a union over the alphabet once declarations settle.
                hole: list[Regex] = []
                self.allchar_uses.append(hole)
                return _AllCharHole(tuple(), hole)
            raise UnknownSymbolError(f"unknown regex constant {e.text!r}")
        if not e or not isinstance(e[0], _Tok):
            raise SmtSyntaxError("expected a regex term", *_pos(e))
        op = e[0].text
        args = e[1:]
        if op == "str.to_re":
            if len(args) != 1 or not isinstance(args[0], _Tok) or args[0].kind != "string":
                raise SmtSyntaxError("str.to_re takes one string literal", e[0].line, e[0].col)
            self.literal_chars.extend(args[0].text)
            return regex_literal(args[0].text)
        if op == "re.++":
            if len(args) < 2:
                raise SmtSyntaxError("re.++ takes at least two arguments", e[0].line, e[0].col)
            return regex_concat([self.regex(a) for a in args])
        if op == "re.union":
            if len(args) < 2:
                raise SmtSyntaxError("re.union takes at least two arguments", e[0].line, e[0].col)
            return regex_union([self.regex(a) for a in args])
        if op == "re.*":
            if len(args) != 1:
                raise SmtSyntaxError("re.* takes one argument", e[0].line, e[0].col)
            return Star(self.regex(args[0]))
        if op == "re.comp":
            if len(args) != 1:
                raise SmtSyntaxError("re.comp takes one argument", e[0].line, e[0].col)
            return Complement(self.regex(args[0]))
        raise UnknownSymbolError(f"unknown regex operator {op!r}")


@dataclass(frozen=True)
class _AllCharHole(Regex):
    """Placeholder for ``re.allchar``; resolved into a literal union after parsing."""

    _tag: tuple
    hole: list = field(compare=False, hash=False)


def _resolve_holes(r: Regex) -> Regex:
    if isinstance(r, _AllCharHole):
        return regex_union(list(r.hole))
    if isinstance(r, Concat):
        return Concat(_resolve_holes(r.left), _resolve_holes(r.right))
    if isinstance(r, Union):
        return Union(_resolve_holes(r.left), _resolve_holes(r.right))
    if isinstance(r, Star):
        return Star(_resolve_holes(r.inner))
    if isinstance(r, Complement):
        return Complement(_resolve_holes(r.inner))
    return r


def _resolve_node(n: Node) -> Node:
    if isinstance(n, And):
        return And(tuple(_resolve_node(c) for c in n.children))
    if isinstance(n, Or):
        return Or(tuple(_resolve_node(c) for c in n.children))
    if isinstance(n, Not):
        return Not(_resolve_node(n.child))
    if isinstance(n, Membership):
        return Membership(n.pattern, _resolve_holes(n.regex), n.positive)
    return n


def parse_script(text: str, strict_numstr: bool = False) -> Formula:
    """Parse a UTF-8 script in the input grammar into a typed formula.

    Raises SmtSyntaxError / SortError / UnknownSymbolError on malformed input.
    """
    parser = _Parser(strict_numstr=strict_numstr)
    f = parser.run(_read_sexprs(_tokenize(text)))
    return f.with_root(_resolve_node(f.root))


# ---------------------------------------------------------------------------
# Negation normal form
# ---------------------------------------------------------------------------


def to_nnf(f: Formula) -> Formula:
    return f.with_root(_nnf(f.root, False))


def _nnf(node: Node, negate: bool) -> Node:
    if isinstance(node, Not):
        return _nnf(node.child, not negate)
    if isinstance(node, And):
        kids = tuple(_nnf(c, negate) for c in node.children)
        return Or(kids) if negate else And(kids)
    if isinstance(node, Or):
        kids = tuple(_nnf(c, negate) for c in node.children)
        return And(kids) if negate else Or(kids)
    if not negate:
        return node
    if isinstance(node, (Membership, NumStr, WordEq)):
        return node.negate()
    if isinstance(node, LinCmp):
        return negate_lincmp(node)
    raise TypeError(f"unexpected node {node!r}")


def negate_lincmp(a: LinCmp) -> Node:
    if a.rel == "<=":
        return LinCmp(a.term, ">=", a.const + 1)
    if a.rel == ">=":
        return LinCmp(a.term, "<=", a.const - 1)
    return Or((LinCmp(a.term, "<=", a.const - 1), LinCmp(a.term, ">=", a.const + 1)))


# ---------------------------------------------------------------------------
# Theory classification
# ---------------------------------------------------------------------------

PSPACE_COMPLETE = "PSpaceComplete"
DECIDABLE = "Decidable"
UNDECIDABLE = "Undecidable"
OPEN = "Open"


@dataclass(frozen=True)
class TheoryTag:
    base: str  # "s" or "e"
    length: bool
    numstr: bool
    concat: bool
    word_equations: bool
    complement_depth: int
    decidability: str

    @property
    def name(self) -> str:
        flags = ("l" if self.length else "") + ("n" if self.numstr else "") + (
            "c" if self.concat else ""
        )
        prefix = "A_weq_" if self.word_equations else "A_"
        return f"{prefix}{self.base}{flags}"

    def flag_list(self) -> list[str]:
        out = []
        if self.length:
            out.append("length")
        if self.numstr:
            out.append("numstr")
        if self.concat:
            out.append("concat")
        if self.word_equations:
            out.append("word_equations")
        return out


def _plain_decidability(base: str, length: bool, numstr: bool, concat: bool) -> str:
    if base == "s":
        if length and numstr and concat:
            return UNDECIDABLE  # slnc
        if numstr and concat:
            return OPEN  # snc: expressible length comparisons, status left open
        return PSPACE_COMPLETE  # s, sl, sn, sc, slc, sln
    # base == "e": the complement blow-up rules out a polynomial space bound
    if length and numstr and concat:
        return UNDECIDABLE  # elnc
    if (numstr and concat) or (length and numstr):
        return OPEN  # enc, eln
    return DECIDABLE  # e, el, en, ec, elc


def _weq_decidability(length: bool, numstr: bool, concat: bool) -> str:
    # Equations plus plain regular constraints stay decidable; adding both the
    # length function and the string-number relation crosses into undecidable;
    # every other combination (notably equations with length) is open.
    if length and numstr:
        return UNDECIDABLE
    if not length and not numstr:
        return DECIDABLE
    return OPEN


def classify_theory(f: Formula) -> TheoryTag:
    length = numstr = concat = weq = False
    base_e = False
    depth = 0
    for atom in f.atoms():
        if isinstance(atom, Membership):
            depth = max(depth, cdepth(atom.regex))
            if regex_has_complement(atom.regex):
                base_e = True
            if atom.pattern.has_concat():
                concat = True
        elif isinstance(atom, LinCmp):
            if any(k[0] == "len" for k in atom.term.keys()):
                length = True
        elif isinstance(atom, NumStr):
            numstr = True
            if atom.pattern.has_concat():
                concat = True
            if any(k[0] == "len" for k in atom.value.keys()):
                length = True
        elif isinstance(atom, WordEq):
            weq = True
    base = "e" if base_e else "s"
    if weq:
        dec = _weq_decidability(length, numstr, concat)
    else:
        dec = _plain_decidability(base, length, numstr, concat)
    return TheoryTag(base, length, numstr, concat, weq, depth, dec)


def classification_json(f: Formula, filename: str) -> str:
    tag = classify_theory(f)
    payload = {
        "file": filename,
        "base": tag.base,
        "flags": tag.flag_list(),
        "cdepth": tag.complement_depth,
        "theory_name": tag.name,
        "decidability": tag.decidability,
    }
    return json.dumps(payload, separators=(", ", ": "))


# ---------------------------------------------------------------------------
# Direct evaluation semantics (shared by model checking and the brute-force
# reference engine; keeps clear of all automata machinery on purpose)
# ---------------------------------------------------------------------------


def regex_matches(r: Regex, w: str) -> bool:
    """Recursive-descent matcher over word spans, memoized."""
    memo: dict[tuple[int, int, int], bool] = {}
    ids: dict[int, Regex] = {}

    def m(node: Regex, i: int, j: int) -> bool:
        key = (id(node), i, j)
        ids[id(node)] = node  # keep alive for id() stability
        hit = memo.get(key)
        if hit is not None:
            return hit
        if isinstance(node, Empty):
            res = False
        elif isinstance(node, Epsilon):
            res = i == j
        elif isinstance(node, Lit):
            res = j == i + 1 and w[i] == node.symbol
        elif isinstance(node, Concat):
            res = any(m(node.left, i, k) and m(node.right, k, j) for k in range(i, j + 1))
        elif isinstance(node, Union):
            res = m(node.left, i, j) or m(node.right, i, j)
        elif isinstance(node, Star):
            if i == j:
                res = True
            else:
                res = any(m(node.inner, i, k) and m(node, k, j) for k in range(i + 1, j + 1))
        elif isinstance(node, Complement):
            res = not m(node.inner, i, j)
        else:
            raise TypeError(f"not a regex node: {node!r}")
        memo[key] = res
        return res

    return m(r, 0, len(w))


def eval_pattern(p: Pattern, assignment: Mapping[str, str]) -> str:
    out = []
    for it in p.items:
        out.append(assignment[it.name] if isinstance(it, StrVar) else it)
    return "".join(out)


def eval_linterm(t: LinTerm, str_assign: Mapping[str, str], int_assign: Mapping[str, int]) -> int:
    total = t.const
    for (kind, name), coeff in t.coeffs:
        total += coeff * (len(str_assign[name]) if kind == "len" else int_assign[name])
    return total


def numstr_holds(value: int, word: str, strict: bool = False) -> bool:
    if any(c not in "01" for c in word):
        return False
    if strict and not word:
        return False
    if value < 0:
        return False
    return value == (int(word, 2) if word else 0)


def evaluate(
    f: Formula,
    str_assign: Mapping[str, str],
    int_assign: Mapping[str, int],
) -> bool:
    """Truth of the formula under a total assignment; foreign symbols make it false."""
    alpha = set(f.alphabet)
    for name in f.str_vars:
        if set(str_assign[name]) - alpha:
            return False

    def ev(node: Node) -> bool:
        if isinstance(node, And):
            return all(ev(c) for c in node.children)
        if isinstance(node, Or):
            return any(ev(c) for c in node.children)
        if isinstance(node, Not):
            return not ev(node.child)
        if isinstance(node, Membership):
            res = regex_matches(node.regex, eval_pattern(node.pattern, str_assign))
            return res if node.positive else not res
        if isinstance(node, LinCmp):
            val = eval_linterm(node.term, str_assign, int_assign)
            if node.rel == "<=":
                return val <= node.const
            if node.rel == ">=":
                return val >= node.const
            return val == node.const
        if isinstance(node, NumStr):
            val = eval_linterm(node.value, str_assign, int_assign)
            word = eval_pattern(node.pattern, str_assign)
            res = numstr_holds(val, word, f.strict_numstr)
            return res if node.positive else not res
        if isinstance(node, WordEq):
            res = eval_pattern(node.left, str_assign) == eval_pattern(node.right, str_assign)
            return res if node.positive else not res
        raise TypeError(f"unexpected node {node!r}")

    return ev(f.root)
