"""Exact integer feasibility for the collected length/arithmetic constraints.

All arithmetic is exact (Python integers and fractions); no floating point is
used anywhere.  The solver branches over one progression per string variable,
substitutes len(x) = p + c*r with a fresh r >= 0, and decides the remaining
pure system by branch-and-bound over a Fourier-Motzkin rational relaxation
with integer bound tightening.  The search space is cut off at a ball radius
derived from the total coefficient bit-length, which is sound: feasible
systems have witnesses inside that ball.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Mapping, Optional

from .frontend import LinKey
from .lengths import ProgressionSet

_COEFF_LIMIT = 1 << 63
_RADIUS_EXP_CAP = 2048


class CoefficientOverflow(Exception):
    """A coefficient or constant does not fit in a signed 64-bit word."""


class ArithBudgetExceeded(Exception):
    pass


@dataclass
class Constraint:
    coeffs: dict[LinKey, int]
    rel: str  # "<=", ">=", "="
    const: int


@dataclass
class LinearSystem:
    """Constraints plus per-string-variable length progressions.

    Variables are identified by keys ("int", name) / ("len", name); every len
    key is implicitly nonnegative, as are the fresh progression counters.
    """

    variables: list[LinKey] = field(default_factory=list)
    constraints: list[Constraint] = field(default_factory=list)
    progressions: dict[str, ProgressionSet] = field(default_factory=dict)

    def declare(self, key: LinKey) -> None:
        if key not in self.variables:
            self.variables.append(key)

    def add(self, coeffs: Mapping[LinKey, int], rel: str, const: int) -> None:
        cleaned = {k: c for k, c in coeffs.items() if c != 0}
        for k in cleaned:
            self.declare(k)
        self.constraints.append(Constraint(cleaned, rel, const))

    def attach_progressions(self, by_var: Mapping[str, ProgressionSet]) -> None:
        for name, s in by_var.items():
            self.progressions[name] = s
            self.declare(("len", name))


@dataclass
class ArithConfig:
    node_budget: int = 200_000
    row_budget: int = 4000
    branch_budget: int = 100_000
    lex_minimize: bool = True


def solve_linear_system(
    sys: LinearSystem,
    config: Optional[ArithConfig] = None,
) -> Optional[dict[LinKey, int]]:
    """A total integer assignment satisfying every constraint and progression,
    or None when no such assignment exists (complete within the radius bound).
    """
    cfg = config or ArithConfig()
    _validate(sys)
    for name, s in sys.progressions.items():
        if s.is_empty():
            return None

    prog_vars = sorted(sys.progressions)
    budget = [cfg.branch_budget]
    assignment = _branch_progressions(sys, cfg, prog_vars, 0, {}, budget)
    if assignment is None:
        return None
    for key in sys.variables:
        assignment.setdefault(key, 0)
    return assignment


def _validate(sys: LinearSystem) -> None:
    for con in sys.constraints:
        if abs(con.const) >= _COEFF_LIMIT:
            raise CoefficientOverflow(f"constant {con.const} exceeds 64-bit range")
        for c in con.coeffs.values():
            if abs(c) >= _COEFF_LIMIT:
                raise CoefficientOverflow(f"coefficient {c} exceeds 64-bit range")


def _branch_progressions(
    sys: LinearSystem,
    cfg: ArithConfig,
    prog_vars: list[str],
    i: int,
    chosen: dict[str, tuple[int, int]],
    budget: list[int],
) -> Optional[dict[LinKey, int]]:
    if i == len(prog_vars):
        return _solve_branch(sys, cfg, chosen)
    name = prog_vars[i]
    for entry in sys.progressions[name].entries:
        budget[0] -= 1
        if budget[0] < 0:
            raise ArithBudgetExceeded("progression branch budget exhausted")
        chosen[name] = entry
        result = _branch_progressions(sys, cfg, prog_vars, i + 1, chosen, budget)
        if result is not None:
            return result
    chosen.pop(prog_vars[i], None)
    return None


def _solve_branch(
    sys: LinearSystem,
    cfg: ArithConfig,
    chosen: dict[str, tuple[int, int]],
) -> Optional[dict[LinKey, int]]:
    # Substitute len(x) = p + c*r (fresh r >= 0 per variable with a period).
    rows: list[Constraint] = []
    subs: dict[LinKey, tuple[int, Optional[LinKey]]] = {}  # len-key -> (p, c-key or None)
    order: list[LinKey] = []
    nonneg: set[LinKey] = set()

    for name, (p, c) in chosen.items():
        key = ("len", name)
        if c == 0:
            subs[key] = (p, None)
        else:
            aux = ("aux", f"r:{name}")
            subs[key] = (p, aux)

    def map_coeffs(con: Constraint) -> Constraint:
        coeffs: dict[LinKey, int] = {}
        const = con.const
        for k, a in con.coeffs.items():
            if k in subs:
                p, aux = subs[k]
                const -= a * p
                if aux is not None:
                    c = chosen[k[1]][1]
                    coeffs[aux] = coeffs.get(aux, 0) + a * c
            else:
                coeffs[k] = coeffs.get(k, 0) + a
        return Constraint(coeffs, con.rel, const)

    for con in sys.constraints:
        rows.append(map_coeffs(con))

    for key in sys.variables:
        if key in subs:
            _, aux = subs[key]
            if aux is not None and aux not in order:
                order.append(aux)
                nonneg.add(aux)
        else:
            if key not in order:
                order.append(key)
            if key[0] == "len":
                nonneg.add(key)

    core = _solve_pure(rows, order, nonneg, cfg)
    if core is None:
        return None

    out: dict[LinKey, int] = {}
    for key in sys.variables:
        if key in subs:
            p, aux = subs[key]
            out[key] = p if aux is None else p + chosen[key[1]][1] * core[aux]
        else:
            out[key] = core.get(key, 0)
    return out


# ---------------------------------------------------------------------------
# Pure integer linear feasibility: tightening + Fourier-Motzkin guided search
# ---------------------------------------------------------------------------


def _radius(rows: list[Constraint], nvars: int) -> int:
    bits = 0
    for con in rows:
        bits += abs(con.const).bit_length() + 1
        for c in con.coeffs.values():
            bits += abs(c).bit_length() + 1
    exp = min((len(rows) + nvars + 1) * max(bits, 1), _RADIUS_EXP_CAP)
    return 1 << exp


def _as_le_rows(rows: list[Constraint], order: list[LinKey]) -> list[tuple[list[int], int]]:
    """Normalize to sum(a_i x_i) <= b over the given variable order."""
    idx = {k: i for i, k in enumerate(order)}
    out: list[tuple[list[int], int]] = []

    def push(coeffs: Mapping[LinKey, int], b: int, flip: bool) -> None:
        vec = [0] * len(order)
        for k, a in coeffs.items():
            vec[idx[k]] = -a if flip else a
        out.append((vec, -b if flip else b))

    for con in rows:
        if con.rel in ("<=", "="):
            push(con.coeffs, con.const, False)
        if con.rel in (">=", "="):
            push(con.coeffs, con.const, True)
    return out


def _gcd_reduce(vec: list[int], b: int) -> Optional[tuple[list[int], int]]:
    g = 0
    for a in vec:
        g = gcd(g, a)
    if g == 0:
        return None if b < 0 else ([0] * len(vec), 0)  # constant row
    nb = b // g if b >= 0 else -((-b + g - 1) // g)  # floor(b / g)
    return ([a // g for a in vec], nb)


def _tighten(
    le_rows: list[tuple[list[int], int]],
    lo: list[Optional[int]],
    hi: list[Optional[int]],
    passes: int = 40,
) -> bool:
    """Interval propagation with integer rounding; False on contradiction."""
    n = len(lo)
    for _ in range(passes):
        changed = False
        for vec, b in le_rows:
            # sum a_i x_i <= b
            for i in range(n):
                a = vec[i]
                if a == 0:
                    continue
                rest_min = 0
                unbounded = False
                for j in range(n):
                    if j == i or vec[j] == 0:
                        continue
                    if vec[j] > 0:
                        if lo[j] is None:
                            unbounded = True
                            break
                        rest_min += vec[j] * lo[j]
                    else:
                        if hi[j] is None:
                            unbounded = True
                            break
                        rest_min += vec[j] * hi[j]
                if unbounded:
                    continue
                room = b - rest_min
                if a > 0:
                    bound = room // a  # x_i <= floor(room / a)
                    if hi[i] is None or bound < hi[i]:
                        hi[i] = bound
                        changed = True
                else:
                    bound = -(room // -a)  # x_i >= ceil(room / a)
                    if lo[i] is None or bound > lo[i]:
                        lo[i] = bound
                        changed = True
        for i in range(n):
            if lo[i] is not None and hi[i] is not None and lo[i] > hi[i]:
                return False
        if not changed:
            break
    return True


def _fm_sample(
    le_rows: list[tuple[list[int], int]],
    lo: list[int],
    hi: list[int],
    row_budget: int,
) -> Optional[list[Fraction]]:
    """Rational feasibility over a box via Fourier-Motzkin; returns a sample
    point choosing integer values whenever the back-substituted interval
    allows one (so integral systems usually come back integral).
    """
    n = len(lo)
    rows: list[tuple[list[Fraction], Fraction]] = []
    for vec, b in le_rows:
        rows.append(([Fraction(a) for a in vec], Fraction(b)))
    for i in range(n):
        e = [Fraction(0)] * n
        e[i] = Fraction(1)
        rows.append((e[:], Fraction(hi[i])))
        e[i] = Fraction(-1)
        rows.append((e, Fraction(-lo[i])))

    eliminated: list[tuple[int, list, list]] = []  # (var, uppers, lowers)
    remaining = list(range(n))
    while remaining:
        # pick the variable minimizing pos*neg fill-in
        best, best_cost = None, None
        for i in remaining:
            pos = sum(1 for vec, _ in rows if vec[i] > 0)
            neg = sum(1 for vec, _ in rows if vec[i] < 0)
            cost = pos * neg - pos - neg
            if best_cost is None or cost < best_cost:
                best, best_cost = i, cost
        i = best
        uppers = []  # x_i <= expr
        lowers = []  # x_i >= expr
        keep = []
        for vec, b in rows:
            if vec[i] > 0:
                uppers.append(([-(v / vec[i]) for v in vec], b / vec[i]))
            elif vec[i] < 0:
                lowers.append(([-(v / vec[i]) for v in vec], b / vec[i]))
            else:
                keep.append((vec, b))
        new_rows = keep
        for (uv, ub) in uppers:
            for (lv, lb) in lowers:
                # lower expr <= x_i <= upper expr  ->  lower - upper <= 0
                vec = [lv[j] - uv[j] for j in range(n)]
                vec[i] = Fraction(0)
                bb = ub - lb
                if all(v == 0 for v in vec):
                    if bb < 0:
                        return None
                    continue
                new_rows.append((vec, bb))
                if len(new_rows) > row_budget:
                    raise ArithBudgetExceeded("relaxation row budget exhausted")
        rows = new_rows
        eliminated.append((i, uppers, lowers))
        remaining.remove(i)

    for vec, b in rows:
        if b < 0:
            return None

    # Back-substitute in reverse elimination order.
    val: list[Optional[Fraction]] = [None] * n
    for i, uppers, lowers in reversed(eliminated):
        ub: Optional[Fraction] = None
        lb: Optional[Fraction] = None
        for (uv, b) in uppers:
            cur = b + sum(uv[j] * val[j] for j in range(n) if val[j] is not None and j != i)
            if ub is None or cur < ub:
                ub = cur
        for (lv, b) in lowers:
            cur = b + sum(lv[j] * val[j] for j in range(n) if val[j] is not None and j != i)
            if lb is None or cur > lb:
                lb = cur
        assert lb is not None and ub is not None and lb <= ub
        low_int = lb if lb.denominator == 1 else Fraction(lb.numerator // lb.denominator + 1)
        if low_int <= ub:
            # pick the integer of smallest magnitude so witnesses stay small
            if lb <= 0 <= ub:
                val[i] = Fraction(0)
            elif low_int > 0:
                val[i] = low_int
            else:
                val[i] = Fraction(ub.numerator // ub.denominator)  # floor(ub) <= 0
        else:
            val[i] = lb  # no integer here; give the fractional corner to B&B
    return [v if v is not None else Fraction(0) for v in val]


def _solve_pure(
    rows: list[Constraint],
    order: list[LinKey],
    nonneg: set[LinKey],
    cfg: ArithConfig,
) -> Optional[dict[LinKey, int]]:
    n = len(order)
    le_rows_all = _as_le_rows(rows, order)
    le_rows = []
    for vec, b in le_rows_all:
        red = _gcd_reduce(vec, b)
        if red is None:
            return None
        if any(red[0]):
            le_rows.append(red)
    # equality gcd check on the original equality rows
    for con in rows:
        if con.rel == "=" and con.coeffs:
            g = 0
            for c in con.coeffs.values():
                g = gcd(g, c)
            if g and con.const % g != 0:
                return None

    radius = _radius(rows, n)
    lo: list[Optional[int]] = [0 if k in nonneg else None for k in order]
    hi: list[Optional[int]] = [None] * n
    if not _tighten(le_rows, lo, hi):
        return None
    lo_f = [x if x is not None else -radius for x in lo]
    hi_f = [x if x is not None else radius for x in hi]
    if any(l > h for l, h in zip(lo_f, hi_f)):
        return None

    nodes = [cfg.node_budget]
    sol = _bb(le_rows, lo_f, hi_f, nodes, cfg)
    if sol is None:
        return None
    assignment = {k: sol[i] for i, k in enumerate(order)}
    if cfg.lex_minimize:
        assignment = _lex_minimize(le_rows, order, lo_f, hi_f, assignment, nodes, cfg)
    return assignment


def _bb(
    le_rows: list[tuple[list[int], int]],
    lo: list[int],
    hi: list[int],
    nodes: list[int],
    cfg: ArithConfig,
) -> Optional[list[int]]:
    nodes[0] -= 1
    if nodes[0] < 0:
        raise ArithBudgetExceeded("branch-and-bound node budget exhausted")
    work_lo, work_hi = lo[:], hi[:]
    if not _tighten(le_rows, work_lo, work_hi):  # type: ignore[arg-type]
        return None
    sample = _fm_sample(le_rows, work_lo, work_hi, cfg.row_budget)  # type: ignore[arg-type]
    if sample is None:
        return None
    frac_at = next((i for i, v in enumerate(sample) if v.denominator != 1), None)
    if frac_at is None:
        return [int(v) for v in sample]
    v = sample[frac_at]
    floor_v = v.numerator // v.denominator
    for new_lo, new_hi in (
        (work_lo[:], _replace(work_hi, frac_at, floor_v)),
        (_replace(work_lo, frac_at, floor_v + 1), work_hi[:]),
    ):
        if new_lo[frac_at] > new_hi[frac_at]:
            continue
        sol = _bb(le_rows, new_lo, new_hi, nodes, cfg)
        if sol is not None:
            return sol
    return None


def _replace(xs: list[int], i: int, v: int) -> list[int]:
    ys = xs[:]
    ys[i] = v
    return ys


def _feasible_with(
    le_rows: list[tuple[list[int], int]],
    lo: list[int],
    hi: list[int],
    nodes: list[int],
    cfg: ArithConfig,
) -> Optional[list[int]]:
    if any(l > h for l, h in zip(lo, hi)):
        return None
    return _bb(le_rows, lo, hi, nodes, cfg)


def _lex_minimize(
    le_rows: list[tuple[list[int], int]],
    order: list[LinKey],
    lo: list[int],
    hi: list[int],
    current: Mapping[LinKey, int],
    nodes: list[int],
    cfg: ArithConfig,
) -> dict[LinKey, int]:
    """Per-variable minimization in declaration order (plain minimum over
    nonnegative ranges, smallest absolute value for free integers), re-fixing
    each variable before moving to the next for a reproducible witness."""
    box_lo, box_hi = lo[:], hi[:]
    out: dict[LinKey, int] = dict(current)
    for i, key in enumerate(order):
        witness = _feasible_with(le_rows, box_lo, box_hi, nodes, cfg)
        assert witness is not None  # earlier fixes came from feasible points
        best = _min_value(le_rows, box_lo, box_hi, i, witness[i], nodes, cfg)
        out[key] = best
        box_lo = _replace(box_lo, i, best)
        box_hi = _replace(box_hi, i, best)
    return out


def _min_value(le_rows, lo, hi, i, witness_value: int, nodes, cfg) -> int:
    def feasible(bound_lo: int, bound_hi: int) -> bool:
        if bound_lo > bound_hi:
            return False
        return (
            _feasible_with(le_rows, _replace(lo, i, bound_lo), _replace(hi, i, bound_hi), nodes, cfg)
            is not None
        )

    if lo[i] >= 0:
        return _binary_min(lambda m: feasible(lo[i], m), lo[i], witness_value)
    if witness_value >= 0:
        pos = _binary_min(lambda m: feasible(0, m), 0, witness_value) if feasible(0, witness_value) else None
        if pos == 0:
            return 0
        neg = None
        if feasible(lo[i], -1):
            neg = -_binary_min(lambda m: feasible(-m, -1), 1, -lo[i])
        candidates = [v for v in (pos, neg) if v is not None]
        return min(candidates, key=lambda v: (abs(v), v < 0))
    neg = -_binary_min(lambda m: feasible(-m, -1), 1, -witness_value)
    pos = None
    if hi[i] >= 0 and feasible(0, min(hi[i], -neg)):
        pos = _binary_min(lambda m: feasible(0, m), 0, min(hi[i], -neg))
    candidates = [v for v in (pos, neg) if v is not None]
    return min(candidates, key=lambda v: (abs(v), v < 0))


def _binary_min(pred, lo: int, hi: int) -> int:
    """Smallest v in [lo, hi] with pred(v); pred must be monotone and hold at hi."""
    while lo < hi:
        mid = (lo + hi) // 2
        if pred(mid):
            hi = mid
        else:
            lo = mid + 1
    return lo
