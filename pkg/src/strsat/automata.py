"""Epsilon-free automata: regex compilation, determinization, lazy products.

Nfa values are immutable once built and safe to share.  A LazyProduct owns a
single-writer cache of discovered tuple states; concurrent solves must use
distinct product instances.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union as TUnion

from .frontend import (
    Complement,
    Concat,
    Empty,
    Epsilon,
    Lit,
    Regex,
    Star,
    Union,
    regex_has_complement,
)

DEFAULT_STATE_BUDGET = 1 << 18


class BlowupLimitExceeded(Exception):
    """Determinization or product exploration crossed the configured state budget."""

    def __init__(self, states: int):
        super().__init__(f"state budget exceeded at {states} states")
        self.states = states


class ForeignSymbolError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Explicit NFAs
# ---------------------------------------------------------------------------


class Nfa:
    """One initial state, no epsilon transitions, label-indexed successor sets."""

    __slots__ = ("alphabet", "n", "delta", "initial", "finals")

    def __init__(
        self,
        alphabet: tuple[str, ...],
        n: int,
        delta: list[dict[str, frozenset[int]]],
        initial: int,
        finals: frozenset[int],
    ):
        assert len(delta) == n and 0 <= initial < n
        assert all(0 <= q < n for targets in delta for s in targets.values() for q in s)
        self.alphabet = alphabet
        self.n = n
        self.delta = delta
        self.initial = initial
        self.finals = finals

    # Uniform exploration protocol shared with SubsetView and LazyProduct.
    def start_state(self):
        return self.initial

    def step_state(self, q: int, a: str) -> frozenset[int]:
        return self.delta[q].get(a, frozenset())

    def is_final_state(self, q: int) -> bool:
        return q in self.finals

    def is_deterministic(self) -> bool:
        return all(
            len(self.delta[q].get(a, frozenset())) == 1 for q in range(self.n) for a in self.alphabet
        )

    def __repr__(self) -> str:
        return f"Nfa(states={self.n}, finals={sorted(self.finals)})"


def universal_nfa(alphabet: tuple[str, ...]) -> Nfa:
    """Single-state automaton accepting every word over the alphabet."""
    delta = [{a: frozenset({0}) for a in alphabet}]
    return Nfa(alphabet, 1, delta, 0, frozenset({0}))


def empty_nfa(alphabet: tuple[str, ...]) -> Nfa:
    return Nfa(alphabet, 1, [{}], 0, frozenset())


# ---------------------------------------------------------------------------
# Regex compilation
# ---------------------------------------------------------------------------


def _glushkov(r: Regex, alphabet: tuple[str, ...]) -> Nfa:
    """Position construction: one state per literal occurrence plus the start."""
    symbols: list[str] = []  # symbol of position i (1-based state i)
    follow: dict[int, set[int]] = {}

    def fresh(symbol: str) -> int:
        symbols.append(symbol)
        p = len(symbols)
        follow[p] = set()
        return p

    def analyze(node: Regex) -> tuple[bool, set[int], set[int]]:
        if isinstance(node, Empty):
            return False, set(), set()
        if isinstance(node, Epsilon):
            return True, set(), set()
        if isinstance(node, Lit):
            p = fresh(node.symbol)
            return False, {p}, {p}
        if isinstance(node, Concat):
            n1, f1, l1 = analyze(node.left)
            n2, f2, l2 = analyze(node.right)
            for p in l1:
                follow[p] |= f2
            first = f1 | f2 if n1 else f1
            last = l2 | l1 if n2 else l2
            return n1 and n2, first, last
        if isinstance(node, Union):
            n1, f1, l1 = analyze(node.left)
            n2, f2, l2 = analyze(node.right)
            return n1 or n2, f1 | f2, l1 | l2
        if isinstance(node, Star):
            _, f1, l1 = analyze(node.inner)
            for p in l1:
                follow[p] |= f1
            return True, f1, l1
        raise TypeError(f"complement inside position construction: {node!r}")

    nullable, first, last = analyze(r)
    n = len(symbols) + 1
    delta: list[dict[str, frozenset[int]]] = [dict() for _ in range(n)]

    def attach(q: int, targets: set[int]) -> None:
        by_symbol: dict[str, set[int]] = {}
        for p in targets:
            by_symbol.setdefault(symbols[p - 1], set()).add(p)
        for a, ps in by_symbol.items():
            delta[q][a] = frozenset(ps)

    attach(0, first)
    for p, targets in follow.items():
        attach(p, targets)
    finals = set(last)
    if nullable:
        finals.add(0)
    return Nfa(alphabet, n, delta, 0, frozenset(finals))


def _offset(delta: list[dict[str, frozenset[int]]], k: int) -> list[dict[str, frozenset[int]]]:
    return [{a: frozenset(q + k for q in s) for a, s in d.items()} for d in delta]


def _merge_into(dst: dict[str, frozenset[int]], src: dict[str, frozenset[int]]) -> None:
    for a, s in src.items():
        dst[a] = dst.get(a, frozenset()) | s


def nfa_concat(a: Nfa, b: Nfa) -> Nfa:
    k = a.n
    delta = [dict(d) for d in a.delta] + _offset(b.delta, k)
    b_init_out = delta[b.initial + k]
    for f in a.finals:
        _merge_into(delta[f], b_init_out)
    finals = {q + k for q in b.finals}
    if b.initial in b.finals:
        finals |= set(a.finals)
    return Nfa(a.alphabet, a.n + b.n, delta, a.initial, frozenset(finals))


def nfa_union(a: Nfa, b: Nfa) -> Nfa:
    # Fresh initial state with the out-edges of both old initials.
    k, k2 = 1, 1 + a.n
    delta: list[dict[str, frozenset[int]]] = [dict()]
    delta += _offset(a.delta, k)
    delta += _offset(b.delta, k2)
    _merge_into(delta[0], delta[a.initial + k])
    _merge_into(delta[0], delta[b.initial + k2])
    finals = {q + k for q in a.finals} | {q + k2 for q in b.finals}
    if a.initial in a.finals or b.initial in b.finals:
        finals.add(0)
    return Nfa(a.alphabet, 1 + a.n + b.n, delta, 0, frozenset(finals))


def nfa_star(a: Nfa) -> Nfa:
    k = 1
    delta: list[dict[str, frozenset[int]]] = [dict()]
    delta += _offset(a.delta, k)
    init_out = delta[a.initial + k]
    _merge_into(delta[0], init_out)
    for f in a.finals:
        _merge_into(delta[f + k], init_out)
    finals = {q + k for q in a.finals} | {0}
    return Nfa(a.alphabet, 1 + a.n, delta, 0, frozenset(finals))


def compile_regex(
    r: Regex,
    alphabet: tuple[str, ...],
    state_budget: int = DEFAULT_STATE_BUDGET,
) -> Nfa:
    """Compile a ground regex; complement nodes determinize their sub-automaton.

    Raises BlowupLimitExceeded if a determinization crosses the state budget.
    """
    if not regex_has_complement(r):
        return _glushkov(r, alphabet)
    if isinstance(r, Complement):
        return determinize_complement(compile_regex(r.inner, alphabet, state_budget), state_budget)
    if isinstance(r, Concat):
        return nfa_concat(
            compile_regex(r.left, alphabet, state_budget),
            compile_regex(r.right, alphabet, state_budget),
        )
    if isinstance(r, Union):
        return nfa_union(
            compile_regex(r.left, alphabet, state_budget),
            compile_regex(r.right, alphabet, state_budget),
        )
    if isinstance(r, Star):
        return nfa_star(compile_regex(r.inner, alphabet, state_budget))
    raise TypeError(f"not a regex node: {r!r}")


# ---------------------------------------------------------------------------
# Determinization and complement
# ---------------------------------------------------------------------------


def determinize(m: Nfa, state_budget: int = DEFAULT_STATE_BUDGET) -> Nfa:
    """Reachable subset construction; the result is deterministic and complete."""
    start = frozenset({m.initial})
    index: dict[frozenset[int], int] = {start: 0}
    order: list[frozenset[int]] = [start]
    delta: list[dict[str, frozenset[int]]] = []
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        row: dict[str, frozenset[int]] = {}
        for a in m.alphabet:
            image = frozenset().union(*(m.delta[q].get(a, frozenset()) for q in cur)) if cur else frozenset()
            if image not in index:
                if len(index) >= state_budget:
                    raise BlowupLimitExceeded(len(index))
                index[image] = len(order)
                order.append(image)
                queue.append(image)
            row[a] = frozenset({index[image]})
        delta.append(row)
    finals = frozenset(i for i, s in enumerate(order) if s & m.finals)
    return Nfa(m.alphabet, len(order), delta, 0, finals)


def determinize_complement(m: Nfa, state_budget: int = DEFAULT_STATE_BUDGET) -> Nfa:
    """Deterministic complete automaton for the complement language over m's alphabet."""
    d = determinize(m, state_budget)
    return Nfa(d.alphabet, d.n, d.delta, d.initial, frozenset(range(d.n)) - d.finals)


def nfa_membership(m: Nfa, w: str) -> bool:
    alpha = set(m.alphabet)
    for c in w:
        if c not in alpha:
            raise ForeignSymbolError(f"symbol {c!r} not in automaton alphabet")
    current = {m.initial}
    for c in w:
        current = set().union(*(m.delta[q].get(c, frozenset()) for q in current)) if current else set()
        if not current:
            return False
    return bool(current & m.finals)


# ---------------------------------------------------------------------------
# Lazily determinized views and lazy products
# ---------------------------------------------------------------------------


class SubsetView:
    """On-the-fly subset construction over an Nfa, optionally complemented.

    States are frozensets of the underlying states; nothing is materialized
    beyond what callers actually step through.
    """

    __slots__ = ("nfa", "complemented", "alphabet")

    def __init__(self, nfa: Nfa, complemented: bool):
        self.nfa = nfa
        self.complemented = complemented
        self.alphabet = nfa.alphabet

    def start_state(self) -> frozenset[int]:
        return frozenset({self.nfa.initial})

    def step_state(self, c: frozenset[int], a: str) -> frozenset:
        image = (
            frozenset().union(*(self.nfa.delta[q].get(a, frozenset()) for q in c))
            if c
            else frozenset()
        )
        return frozenset({image})

    def is_final_state(self, c: frozenset[int]) -> bool:
        hit = bool(c & self.nfa.finals)
        return not hit if self.complemented else hit


AutomatonLike = TUnion[Nfa, SubsetView, "LazyProduct"]


@dataclass(frozen=True)
class Member:
    """A product component with optional start/end state overrides.

    With an end override, the component accepts exactly the labels of paths
    from its (overridden) start to that specific state, which is how variable
    occurrences are pinned to path segments of a shared automaton.
    """

    view: TUnion[Nfa, SubsetView]
    start: object = None
    end: object = None

    def initial(self):
        return self.view.start_state() if self.start is None else self.start

    def step(self, c, a):
        return self.view.step_state(c, a)

    def is_final(self, c) -> bool:
        if self.end is not None:
            return c == self.end
        return self.view.is_final_state(c)


def make_member(
    nfa: Nfa,
    mode: str = "nfa",
    start: object = None,
    end: object = None,
) -> Member:
    """Wrap an Nfa per mode: "nfa" as-is, "det" or "det-comp" via subset views."""
    if mode == "nfa":
        return Member(nfa, start, end)
    if mode in ("det", "det-comp"):
        return Member(SubsetView(nfa, complemented=(mode == "det-comp")), start, end)
    raise ValueError(f"unknown member mode {mode!r}")


class LazyProduct:
    """Intersection of member automata, tuple states expanded on demand only."""

    def __init__(self, members: list[Member], alphabet: tuple[str, ...]):
        if not members:
            raise ValueError("a product needs at least one member")
        for mb in members:
            if mb.view.alphabet != alphabet:
                raise ValueError("product members must share the common alphabet")
        self.members = members
        self.alphabet = alphabet
        self._discovered: set = set()
        self._start = tuple(mb.initial() for mb in members)
        self._discovered.add(self._start)

    @property
    def expansions(self) -> int:
        """Number of distinct tuple states materialized so far."""
        return len(self._discovered)

    def start_state(self) -> tuple:
        return self._start

    def step_state(self, state: tuple, a: str) -> frozenset:
        options = []
        for mb, c in zip(self.members, state):
            succ = mb.step(c, a)
            if not succ:
                return frozenset()
            options.append(sorted(succ, key=_state_key))
        out = []
        idx = [0] * len(options)
        while True:
            tup = tuple(opt[i] for opt, i in zip(options, idx))
            self._discovered.add(tup)
            out.append(tup)
            j = len(idx) - 1
            while j >= 0:
                idx[j] += 1
                if idx[j] < len(options[j]):
                    break
                idx[j] = 0
                j -= 1
            if j < 0:
                break
        return frozenset(out)

    def is_final_state(self, state: tuple) -> bool:
        return all(mb.is_final(c) for mb, c in zip(self.members, state))


def lazy_product(
    members: list[tuple],
    alphabet: tuple[str, ...],
) -> LazyProduct:
    """Build a product from (nfa, mode, start?, end?) tuples (see make_member)."""
    built = []
    for spec in members:
        nfa, mode = spec[0], spec[1]
        start = spec[2] if len(spec) > 2 else None
        end = spec[3] if len(spec) > 3 else None
        built.append(make_member(nfa, mode, start, end))
    return LazyProduct(built, alphabet)


# ---------------------------------------------------------------------------
# Emptiness and exploration
# ---------------------------------------------------------------------------


def is_empty(
    view: AutomatonLike,
    state_budget: int = DEFAULT_STATE_BUDGET,
) -> tuple[bool, Optional[str]]:
    """BFS emptiness check; returns (empty?, shortest witness or None).

    Witness ties are broken by alphabet order, so results are reproducible.
    """
    start = view.start_state()
    if view.is_final_state(start):
        return False, ""
    seen = {start}
    queue = deque([(start, "")])
    while queue:
        state, word = queue.popleft()
        for a in view.alphabet:
            for nxt in _sorted_states(view.step_state(state, a)):
                if nxt in seen:
                    continue
                if view.is_final_state(nxt):
                    return False, word + a
                if len(seen) >= state_budget:
                    raise BlowupLimitExceeded(len(seen))
                seen.add(nxt)
                queue.append((nxt, word + a))
    return True, None


def _state_key(s):
    if isinstance(s, int):
        return (0, s)
    if isinstance(s, frozenset):
        return (1, tuple(sorted(s)))
    if isinstance(s, tuple):
        return (2, tuple(_state_key(c) for c in s))
    return (3, repr(s))


def _sorted_states(states: Iterable) -> list:
    return sorted(states, key=_state_key)


@dataclass
class Exploration:
    """Materialized reachable fragment of an automaton view."""

    states: list
    index: dict
    successors: list[set[int]]  # unlabeled successor indices
    by_symbol: list[dict[str, tuple[int, ...]]]
    finals: set[int]
    initial: int = 0


def explore(view: AutomatonLike, state_budget: int = DEFAULT_STATE_BUDGET) -> Exploration:
    start = view.start_state()
    index = {start: 0}
    states = [start]
    successors: list[set[int]] = []
    by_symbol: list[dict[str, tuple[int, ...]]] = []
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        succ: set[int] = set()
        row: dict[str, tuple[int, ...]] = {}
        for a in view.alphabet:
            targets = []
            for nxt in _sorted_states(view.step_state(cur, a)):
                if nxt not in index:
                    if len(index) >= state_budget:
                        raise BlowupLimitExceeded(len(index))
                    index[nxt] = len(states)
                    states.append(nxt)
                    queue.append(nxt)
                targets.append(index[nxt])
            if targets:
                row[a] = tuple(targets)
                succ.update(targets)
        successors.append(succ)
        by_symbol.append(row)
    finals = {i for i, s in enumerate(states) if view.is_final_state(s)}
    return Exploration(states, index, successors, by_symbol, finals)


def word_image(view: AutomatonLike, states: Iterable, word: str) -> set:
    """All states reachable from any of ``states`` along ``word``."""
    current = set(states)
    for a in word:
        nxt: set = set()
        for q in current:
            nxt |= set(view.step_state(q, a))
        current = nxt
        if not current:
            break
    return current


# ---------------------------------------------------------------------------
# Graphviz export (debug surface behind a CLI flag)
# ---------------------------------------------------------------------------


def to_dot(view: AutomatonLike, name: str = "automaton", state_budget: int = 4096) -> str:
    ex = explore(view, state_budget)
    lines = [f"digraph {name} {{", "  rankdir=LR;", '  hidden [shape=point, label=""];']
    for i, _ in enumerate(ex.states):
        shape = "doublecircle" if i in ex.finals else "circle"
        lines.append(f'  q{i} [shape={shape}, label="q{i}"];')
    lines.append(f"  hidden -> q{ex.initial};")
    for i, row in enumerate(ex.by_symbol):
        grouped: dict[int, list[str]] = {}
        for a, targets in row.items():
            for t in targets:
                grouped.setdefault(t, []).append(a)
        for t, labels in sorted(grouped.items()):
            lab = ",".join(sorted(labels))
            lines.append(f'  q{i} -> q{t} [label="{lab}"];')
    lines.append("}")
    return "\n".join(lines)
