"""(C,F)-cocycles: per-level tables alpha_n : C_n -> K, their conditions,
evaluation on tail-equivalent digit words and the commuting map S_z."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .abelian import Element, FiniteAbelianGroup, GroupAutomorphism, GroupData
from .cftower import LevelSpec, TowerSchedule, digits, DigitWord
from .exactnum import ExactReal, ZERO, compare, to_text


class NotTailEquivalent(ValueError):
    pass


class FractionBoundViolated(AssertionError):
    pass


class OutsideDomain(ValueError):
    pass


@dataclass
class CocycleTable:
    group: FiniteAbelianGroup
    v: GroupAutomorphism
    alpha: list[dict]  # alpha[n][c] for n >= 1; alpha[0] unused
    marked: dict[int, list[frozenset]] = field(default_factory=dict)

    def value(self, n: int, c: ExactReal) -> Element:
        return self.alpha[n][c]

    def dump(self) -> list[dict]:
        out = []
        for n in range(1, len(self.alpha)):
            row = {
                "index": n,
                "alpha": [[to_text(c), list(k)] for c, k in self.alpha[n].items()],
            }
            if n in self.marked:
                row["marked"] = [[to_text(c) for c in sorted(sub, key=float)] for sub in self.marked[n]]
            out.append(row)
        return out

    def copy(self) -> "CocycleTable":
        return CocycleTable(self.group, self.v, [dict(a) for a in self.alpha],
                            {k: list(v) for k, v in self.marked.items()})


def _beta(K: FiniteAbelianGroup, v: GroupAutomorphism, a: Element, length: int, n: int) -> list[Element]:
    """beta(0) = 0, beta(r) = beta(r-1) + v^floor((r-1)/n)(a)."""
    out = [K.zero]
    powers = [a]
    for r in range(1, length):
        p = (r - 1) // n
        while len(powers) <= p:
            powers.append(v(powers[-1]))
        out.append(K.add(out[-1], powers[p]))
    return out


def _vpow(v: GroupAutomorphism, x: Element, q: int, m: int) -> Element:
    # v^q on an element of period dividing m... the element's own period governs
    for _ in range(q):
        x = v(x)
    return x


def build_alpha(level: LevelSpec, a: Element, gd: GroupData, h_prev: ExactReal):
    """Table slice and marked subsets for an N(a) or M(a,i) level."""
    K, v = gd.group, gd.v
    n = level.step
    m = gd.period(a)
    block = m * n
    beta = _beta(K, v, a, block, n)
    powers = [a]
    for _ in range(1, m):
        powers.append(v(powers[-1]))
    table: dict = {}
    marked: list[set] = [set() for _ in range(m)]
    twisted = {}

    def twist(x: Element, q: int) -> Element:
        key = (x, q % _orbit_len(v, x))
        if key not in twisted:
            twisted[key] = _vpow(v, x, key[1], m)
        return twisted[key]

    if level.label.kind == "N":
        for j, c in enumerate(level.C):
            q, r = divmod(j, block)
            table[c] = twist(beta[r], q)
            if r >= 1:
                marked[(q + (r - 1) // n) % m].add(c)
    else:
        per_block = len(level.D1) + len(level.D2)
        for idx, c in enumerate(level.C):
            J, pos = divmod(idx, per_block)
            if pos < len(level.D1):
                table[c] = twist(beta[pos], J)
            else:
                table[c] = K.zero
        for r in range(1, len(level.D1)):
            marked[((r - 1) // n) % m].add(level.D1[r])
    marks = [frozenset(s) for s in marked]
    _check_fraction_bound(level, marks, m)
    return table, marks


_orbit_cache: dict = {}


def _orbit_len(v: GroupAutomorphism, x: Element) -> int:
    key = (v, x)
    if key not in _orbit_cache:
        y = v(x)
        k = 1
        while y != x:
            y = v(y)
            k += 1
        _orbit_cache[key] = k
    return _orbit_cache[key]


def _fraction_ok(count: int, total: int, m: int, n: int) -> bool:
    return abs(Fraction(count, total) - Fraction(1, m)) < Fraction(2, n * m)


def _check_fraction_bound(level: LevelSpec, marks, m: int):
    total = len(level.C) if level.label.kind == "N" else len(level.D1)
    for i, s in enumerate(marks):
        if not _fraction_ok(len(s), total, m, level.step):
            raise FractionBoundViolated(
                f"level {level.index}: marked subset {i} has {len(s)}/{total}, m_a={m}"
            )


def build_table(schedule: TowerSchedule, gd: GroupData) -> CocycleTable:
    K = gd.group
    alpha: list[dict] = [{}]
    marked = {}
    for n in range(1, schedule.depth + 1):
        lv = schedule.levels[n]
        if lv.label.kind in ("N", "M"):
            tab, marks = build_alpha(lv, lv.label.a, gd, schedule.h(n - 1))
            alpha.append(tab)
            marked[n] = marks
        else:
            alpha.append({c: K.zero for c in lv.C})
    return CocycleTable(K, gd.v, alpha, marked)


# condition checks ----------------------------------------------------------

@dataclass
class LevelConditions:
    index: int
    label: str
    checks: dict[str, bool]
    counts: dict = field(default_factory=dict)
    offenders: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())


@dataclass
class ConditionReport:
    levels: list[LevelConditions]
    defect_sum: Fraction
    shift_sum: Fraction
    shift_closed_form: Fraction
    overlap_defect_sum: Fraction = Fraction(0)  # sum (#(C cap (C - z)) - #C_circ) / #C

    @property
    def ok(self) -> bool:
        return all(lc.ok for lc in self.levels)

    def failures(self) -> list[tuple[int, str]]:
        return [(lc.index, k) for lc in self.levels for k, v in lc.checks.items() if not v]

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "defect_sum": str(self.defect_sum),
            "shift_sum": str(self.shift_sum),
            "shift_closed_form": str(self.shift_closed_form),
            "overlap_defect_sum": str(self.overlap_defect_sum),
            "levels": [
                {"index": lc.index, "label": lc.label, "checks": lc.checks,
                 "counts": {k: str(v) for k, v in lc.counts.items()}, "offenders": lc.offenders}
                for lc in self.levels
            ],
        }


def check_conditions(table: CocycleTable, schedule: TowerSchedule, gd: Optional[GroupData] = None) -> ConditionReport:
    K, v = table.group, table.v
    out = []
    defect_sum = Fraction(0)
    shift_sum = Fraction(0)
    closed = Fraction(0)
    overlap_defect = Fraction(0)
    for n in range(1, schedule.depth + 1):
        lv = schedule.levels[n]
        alpha = table.alpha[n]
        checks = {"domain": set(alpha) == set(lv.C)}
        counts = {}
        offenders = []
        kind = lv.label.kind
        if kind in ("B", "W"):
            checks["neutral"] = all(x == K.zero for x in alpha.values())
        if kind in ("N", "M"):
            h_prev = schedule.h(n - 1)
            z = lv.z
            overlap = [c for c in lv.C if (c + z) in lv]
            bad = [c for c in overlap if alpha.get(c + z) != v(alpha.get(c, K.zero))]
            name = "A1" if kind == "N" else "B1"
            checks[name] = not bad
            offenders += [f"{name}: c={to_text(c)}" for c in bad[:5]]
            c_circ = len(overlap) - len(bad)
            counts["C_circ"] = c_circ
            counts["C_cap_C_minus_z"] = len(overlap)
            defect = 1 - Fraction(c_circ, len(lv.C))
            overlap_defect += Fraction(len(bad), len(lv.C))
            defect_sum += defect
            sym = Fraction(2 * (len(lv.C) - len(overlap)), len(lv.C))
            counts["shift_ratio"] = sym
            shift_sum += sym
            closed += Fraction(2, lv.step ** 2)
            checks["zero_defect"] = c_circ == len(overlap)

            a = lv.label.a
            m = gd.period(a) if gd is not None else _orbit_len(v, a)
            powers = [a]
            for _ in range(1, m):
                powers.append(v(powers[-1]))
            domain = lv.C if kind == "N" else lv.D1
            dom_set = set(domain)
            total = len(domain)
            marks = table.marked.get(n)
            name = "A2" if kind == "N" else "B2"
            ok2 = True
            for i in range(m):
                if marks is not None and i < len(marks):
                    subset = marks[i]
                    for c in subset:
                        prev = c - h_prev
                        if prev not in dom_set or c not in dom_set:
                            ok2 = False
                            offenders.append(f"{name}[{i}]: {to_text(c)} - h not in domain")
                        elif K.sub(alpha[c], alpha[prev]) != powers[i]:
                            ok2 = False
                            offenders.append(f"{name}[{i}]: increment at {to_text(c)}")
                    count = len(subset)
                else:
                    # no recorded marks: use the largest admissible subset
                    count = sum(
                        1 for c in domain
                        if (c - h_prev) in dom_set and K.sub(alpha[c], alpha[c - h_prev]) == powers[i]
                    )
                counts[f"{name}[{i}]"] = Fraction(count, total)
                if not _fraction_ok(count, total, m, lv.step):
                    ok2 = False
                    offenders.append(f"{name}[{i}]: density {count}/{total} outside bound")
            checks[name] = ok2
            if kind == "M":
                d2 = set(lv.D2)
                checks["B3"] = all(alpha[c] == K.zero for c in d2)
        out.append(LevelConditions(n, str(lv.label), checks, counts, offenders))
    return ConditionReport(out, defect_sum, shift_sum, closed, overlap_defect)


# evaluation ----------------------------------------------------------------

def alpha_between(x: DigitWord, y: DigitWord, table: CocycleTable) -> Element:
    """sum_n alpha_n(c_n(x)) - alpha_n(c_n(y)) over levels 1..top."""
    if x.top != y.top:
        raise NotTailEquivalent(f"words truncated at different levels {x.top} != {y.top}")
    K = table.group
    acc = K.zero
    for n in range(1, x.top + 1):
        cx, cy = x.digit(n), y.digit(n)
        if cx == cy:
            continue
        acc = K.add(acc, K.sub(table.alpha[n][cx], table.alpha[n][cy]))
    return acc


def alpha_points(f: ExactReal, g: ExactReal, N: int, schedule: TowerSchedule, table: CocycleTable) -> Element:
    return alpha_between(digits(f, N, schedule), digits(g, N, schedule), table)


@dataclass(frozen=True)
class TowerPoint:
    """(f_m, c_{m+1}, ..., c_top) in X_m, truncated at ``top``."""

    level: int
    offset: ExactReal
    digits: tuple[ExactReal, ...]

    @property
    def top(self) -> int:
        return self.level + len(self.digits)

    def position(self) -> ExactReal:
        s = self.offset
        for c in self.digits:
            s = s + c
        return s


def s_zbar(point: TowerPoint, m: int, schedule: TowerSchedule) -> TowerPoint:
    if point.level != m:
        raise OutsideDomain(f"point is given at level {point.level}, expected {m}")
    Z = schedule.z_sum(m)
    if compare(point.offset, ZERO) < 0 or compare(point.offset + Z, schedule.h(m)) >= 0:
        raise OutsideDomain("offset not in [0, h_m - z_1 - ... - z_m)")
    new = []
    for k, c in enumerate(point.digits, start=m + 1):
        lv = schedule.levels[k]
        c2 = c + lv.z
        if c not in lv or c2 not in lv:
            raise OutsideDomain(f"digit {to_text(c)} at level {k} not in C cap (C - z)")
        new.append(c2)
    return TowerPoint(m, point.offset + Z, tuple(new))


def s_zbar_inverse(point: TowerPoint, m: int, schedule: TowerSchedule) -> TowerPoint:
    Z = schedule.z_sum(m)
    if compare(point.offset, Z) < 0 or compare(point.offset, schedule.h(m)) >= 0:
        raise OutsideDomain("offset not in [z_1 + ... + z_m, h_m)")
    new = []
    for k, c in enumerate(point.digits, start=m + 1):
        lv = schedule.levels[k]
        c2 = c - lv.z
        if c not in lv or c2 not in lv:
            raise OutsideDomain(f"digit {to_text(c)} at level {k} not in C cap (C + z)")
        new.append(c2)
    return TowerPoint(m, point.offset - Z, tuple(new))
