"""Semilinear abstraction of accepting-path lengths of an automaton.

The per-state summary (shortest accepting path through q, shortest cycle
through q) is complete only in the eventual regime, and only once offsets are
saturated across residues: with cycles of length 2 and 3 hanging off the start
state, length 5 = 2 + 3 is accepted but is not  shortest-path + k * shortest-cycle
for any single state.  The construction below therefore works in two phases:

1. an exact prefix: accepting lengths below a threshold T = m^2 + 2m become
   singletons, computed from the layer sequence of reachable state sets (the
   layer sequence is eventually periodic, so it is never materialized past its
   first repeat);
2. saturated per-state progressions: for every state q on a cycle, one
   progression per realized residue of through-q path lengths modulo the
   shortest cycle length at q, with offsets lifted into [T, T + c).

A final compaction extends progressions downward through the exact prefix and
drops covered singletons.  Every result is verified against the layer-orbit
set; if that proof window cannot be closed the result is flagged unverified
and callers must not conclude unsatisfiability from it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from math import gcd
from typing import Optional

from .automata import AutomatonLike, Exploration, explore

_VERIFY_WINDOW_CAP = 1 << 18


@dataclass(frozen=True)
class ProgressionSet:
    """Finite union of arithmetic progressions; period 0 marks a singleton."""

    entries: tuple[tuple[int, int], ...]
    threshold: int
    verified: bool = True

    def __contains__(self, n: int) -> bool:
        return progression_member(self, n)

    def is_empty(self) -> bool:
        return not self.entries

    def min_value(self) -> Optional[int]:
        return min(p for p, _ in self.entries) if self.entries else None

    def members_up_to(self, bound: int) -> list[int]:
        out = sorted({n for n in range(bound + 1) if progression_member(self, n)})
        return out

    def to_json(self) -> str:
        return json.dumps(
            {"entries": [list(e) for e in self.entries], "threshold": self.threshold,
             "verified": self.verified},
            separators=(",", ":"),
        )


def progression_member(s: ProgressionSet, n: int) -> bool:
    if n < 0:
        return False
    for p, c in s.entries:
        if c == 0:
            if n == p:
                return True
        elif n >= p and (n - p) % c == 0:
            return True
    return False


# ---------------------------------------------------------------------------
# Layer orbits: the sequence of exact-distance state sets, as bitmasks
# ---------------------------------------------------------------------------


@dataclass
class _Orbit:
    layers: list[int]          # layers[n] = bitmask of states at distance exactly n
    preperiod: int             # valid once a repeat was found
    period: int                # 0 = no repeat found within the cap
    accept_mask: int

    def accepted(self, n: int) -> bool:
        if n < len(self.layers):
            return bool(self.layers[n] & self.accept_mask)
        if self.period:
            k = self.preperiod + (n - self.preperiod) % self.period
            return bool(self.layers[k] & self.accept_mask)
        raise IndexError(f"layer {n} beyond computed window")

    def state_layers(self, q: int, cap: int) -> list[int]:
        """Lengths n < min(cap, known window) at which q is in the layer."""
        bit = 1 << q
        return [n for n in range(min(cap, len(self.layers))) if self.layers[n] & bit]

    def covers(self, n: int) -> bool:
        return n < len(self.layers) or bool(self.period)


def _layer_orbit(succ_masks: list[int], start_mask: int, accept_mask: int, cap: int) -> _Orbit:
    layers = [start_mask]
    seen = {start_mask: 0}
    cur = start_mask
    for _ in range(cap):
        nxt = 0
        probe = cur
        while probe:
            low = probe & -probe
            nxt |= succ_masks[low.bit_length() - 1]
            probe ^= low
        if nxt in seen:
            return _Orbit(layers, seen[nxt], len(layers) - seen[nxt], accept_mask)
        seen[nxt] = len(layers)
        layers.append(nxt)
        cur = nxt
    return _Orbit(layers, 0, 0, accept_mask)


def _successor_masks(ex: Exploration) -> list[int]:
    masks = []
    for succ in ex.successors:
        m = 0
        for t in succ:
            m |= 1 << t
        masks.append(m)
    return masks


def _predecessor_masks(ex: Exploration) -> list[int]:
    masks = [0] * len(ex.states)
    for q, succ in enumerate(ex.successors):
        for t in succ:
            masks[t] |= 1 << q
    return masks


def _shortest_cycles(ex: Exploration) -> dict[int, int]:
    """Shortest cycle length through each state that lies on one (BFS per state)."""
    out: dict[int, int] = {}
    n = len(ex.states)
    for q in range(n):
        dist = {q: 0}
        frontier = [q]
        best = None
        d = 0
        while frontier and best is None:
            d += 1
            nxt = []
            for u in frontier:
                for v in ex.successors[u]:
                    if v == q:
                        best = d
                        break
                    if v not in dist:
                        dist[v] = d
                        nxt.append(v)
                if best is not None:
                    break
            frontier = nxt
        if best is not None:
            out[q] = best
    return out


def _residue_witnesses(explicit: list[int], preperiod: int, period: int, c: int,
                       window: int) -> dict[int, int]:
    """Map residue mod c -> smallest witnessed length, folding in the periodic tail."""
    res: dict[int, int] = {}
    for n in explicit:
        r = n % c
        if r not in res or n < res[r]:
            res[r] = n
    if period:
        # lengths preperiod+k+j*period keep recurring; their residues mod c cycle
        # with step period, closing after c // gcd(period, c) steps.
        reps = c // gcd(period, c)
        base = [n for n in explicit if n >= preperiod and n < preperiod + period]
        for n0 in base:
            if n0 >= window:
                continue
            for j in range(reps):
                n = n0 + j * period
                r = n % c
                if r not in res or n < res[r]:
                    res[r] = n
    return res


# ---------------------------------------------------------------------------
# The abstraction itself
# ---------------------------------------------------------------------------


def length_abstraction(view: AutomatonLike, state_budget: int = 1 << 18) -> ProgressionSet:
    """Exact set of word lengths accepted by the automaton, as progressions."""
    ex = explore(view, state_budget)
    m = len(ex.states)
    threshold = m * m + 2 * m
    accept_mask = 0
    for f in ex.finals:
        accept_mask |= 1 << f
    if not ex.finals:
        return ProgressionSet((), threshold)

    succ_masks = _successor_masks(ex)
    pred_masks = _predecessor_masks(ex)
    cap = threshold + max(64, threshold)
    fwd = _layer_orbit(succ_masks, 1 << ex.initial, accept_mask, cap)
    bwd = _layer_orbit(pred_masks, accept_mask, 1 << ex.initial, cap)

    # Tail completeness can only be proven once the layer orbit closes.
    verified = bool(fwd.period)

    # Exact prefix.
    prefix_bound = threshold if fwd.period else min(threshold, len(fwd.layers))
    singles = [n for n in range(prefix_bound) if fwd.accepted(n)]

    # Saturated per-state progressions for the tail.
    cycles = _shortest_cycles(ex)
    tail: set[tuple[int, int]] = set()
    for q, c in sorted(cycles.items()):
        fwd_explicit = fwd.state_layers(q, threshold)
        bwd_explicit = bwd.state_layers(q, threshold)
        if not fwd_explicit or not bwd_explicit:
            continue
        fres = _residue_witnesses(fwd_explicit, fwd.preperiod, fwd.period, c, threshold)
        bres = _residue_witnesses(bwd_explicit, bwd.preperiod, bwd.period, c, threshold)
        for la in fres.values():
            for lb in bres.values():
                base = la + lb
                if base < threshold:
                    base += (threshold - base + c - 1) // c * c  # smallest member >= threshold
                tail.add((base, c))

    entries = _compact(singles, tail, fwd, threshold)
    result = ProgressionSet(entries, threshold, verified)
    if verified:
        ok = _verify(result, fwd, threshold)
        if not ok:
            result = _rebuild_from_orbit(fwd, threshold)
    return result


def _compact(singles: list[int], tail: set[tuple[int, int]], orbit: _Orbit,
             threshold: int) -> tuple[tuple[int, int], ...]:
    # Extend each progression downward while every step stays in the exact set.
    extended: set[tuple[int, int]] = set()
    for p, c in sorted(tail):
        while p - c >= 0 and orbit.covers(p - c) and orbit.accepted(p - c):
            p -= c
        extended.add((p, c))
    progs = _prune_subsumed(sorted(extended))
    covered = set()
    for p, c in progs:
        covered.update(range(p, max(threshold, p), c) if c else [p])
    out = [(n, 0) for n in singles if n not in covered]
    out.extend(progs)
    return tuple(sorted(out))


def _entry_subset(e1: tuple[int, int], e2: tuple[int, int]) -> bool:
    """Whether every member of e1 is a member of e2."""
    p1, c1 = e1
    p2, c2 = e2
    if c1 == 0:
        return (p1 == p2 and c2 == 0) or (c2 > 0 and p1 >= p2 and (p1 - p2) % c2 == 0)
    return c2 > 0 and c1 % c2 == 0 and p1 >= p2 and (p1 - p2) % c2 == 0


def _prune_subsumed(progs: list[tuple[int, int]]) -> list[tuple[int, int]]:
    uniq = sorted(set(progs))
    return [e for e in uniq if not any(e != o and _entry_subset(e, o) for o in uniq)]


def _verify(result: ProgressionSet, orbit: _Orbit, threshold: int) -> bool:
    """Prove the emitted set equals the orbit set, or report failure."""
    periods = [c for _, c in result.entries if c]
    lcm = 1
    for c in periods:
        lcm = lcm * c // gcd(lcm, c)
    if orbit.period:
        lcm = lcm * orbit.period // gcd(lcm, orbit.period)
        window = max(threshold, orbit.preperiod) + lcm + 1
    else:
        window = len(orbit.layers)
    if window > _VERIFY_WINDOW_CAP:
        window = _VERIFY_WINDOW_CAP
    for n in range(window):
        if not orbit.covers(n):
            break
        if progression_member(result, n) != orbit.accepted(n):
            return False
    return True


def _rebuild_from_orbit(orbit: _Orbit, threshold: int) -> ProgressionSet:
    """Fallback: emit the orbit-periodic structure directly (always exact)."""
    t0, d = orbit.preperiod, orbit.period
    singles = [(n, 0) for n in range(t0) if orbit.accepted(n)]
    progs = [(t0 + k, d) for k in range(d) if orbit.accepted(t0 + k)]
    return ProgressionSet(tuple(sorted(singles + progs)), threshold, True)
