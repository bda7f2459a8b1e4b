"""(C,F) tower schedules: level data, validation, digit decomposition, masses.

Level 0 is F_0 = [0, 1).  Level 1 is a fixed bootstrap (C_1 = {0, 1},
h_1 = 3).  From index 2 on, level ``n + 1`` is built from level ``n`` according
to its label:

* ``W(i)``  C = {j h | j < n} u {j (h + xi_i) + n h | j < n},  h' = 2 n h + n xi_i
* ``N(a)``  C = h {0..r-1}, r = n^3 m_a,  z = m_a n h,  h' = r h + 1
  (in the squared-construction variant h' = r h, optionally repaired by +1)
* ``M(a,i)`` blocks j z + (D1 u D2), j < n^2, with D1 = h {0..m_a n - 1},
  D2 = {j (h + xi_i) + m_a n h}, z = m_a n (2 h + xi_i), h' = m_a n^3 (2 h + xi_i)
"""
from __future__ import annotations

import bisect
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from mpmath import iv

from .abelian import Element, GroupData
from .exactnum import ExactReal, ONE, XI1, XI2, ZERO, compare, enclosure, ivprec, parse, to_text


class ScheduleError(ValueError):
    pass


class AssignmentGap(ScheduleError):
    pass


class DegenerateLevel(ScheduleError):
    pass


class OutOfRange(ValueError):
    pass


@dataclass(frozen=True)
class Label:
    kind: str  # "B", "W", "N", "M"
    a: Optional[Element] = None
    i: Optional[int] = None

    def __str__(self):
        if self.kind == "B":
            return "Bootstrap"
        if self.kind == "W":
            return f"W{self.i}"
        a = ",".join(str(x) for x in self.a)
        if self.kind == "N":
            return f"N({a})"
        return f"M({a};{self.i})"

    @classmethod
    def parse(cls, text: str) -> "Label":
        text = text.replace(" ", "")
        if text == "Bootstrap":
            return cls("B")
        m = re.fullmatch(r"W([12])", text)
        if m:
            return cls("W", None, int(m.group(1)))
        m = re.fullmatch(r"N\(([\d,]+)\)", text)
        if m:
            return cls("N", tuple(int(x) for x in m.group(1).split(",")))
        m = re.fullmatch(r"M\(([\d,]+);([123])\)", text)
        if m:
            return cls("M", tuple(int(x) for x in m.group(1).split(",")), int(m.group(2)))
        raise ValueError(f"bad label {text!r}")


BOOTSTRAP = Label("B")


@dataclass
class LevelSpec:
    index: int
    C: tuple[ExactReal, ...]
    h: ExactReal
    label: Label
    z: ExactReal = ZERO
    D1: tuple[ExactReal, ...] = ()
    D2: tuple[ExactReal, ...] = ()
    m_a: int = 1
    step: int = 0  # the construction step n (level index - 1)
    repaired: bool = False

    def __post_init__(self):
        self._floats = [float(c) for c in self.C]
        self._set = frozenset(self.C)

    def __contains__(self, c: ExactReal) -> bool:
        return c in self._set

    def locate(self, x: ExactReal, width: ExactReal) -> Optional[ExactReal]:
        """The c in C with c <= x < c + width, if any."""
        k = bisect.bisect_right(self._floats, float(x))
        for j in (k - 1, k, k - 2, k + 1):
            if 0 <= j < len(self.C):
                c = self.C[j]
                if compare(c, x) <= 0 and compare(x, c + width) < 0:
                    return c
        return None


@dataclass
class TowerSchedule:
    xi1: ExactReal
    xi2: ExactReal
    levels: list[LevelSpec]
    variant: str
    strict: bool = True
    repairs: list[int] = field(default_factory=list)

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def h(self, n: int) -> ExactReal:
        return self.levels[n].h

    def xi(self, i: int) -> ExactReal:
        if i == 1:
            return self.xi1
        if i == 2:
            return self.xi2
        if i == 3:
            return self.xi2 - self.xi1
        raise ValueError(i)

    def z(self, n: int) -> ExactReal:
        return self.levels[n].z

    def z_sum(self, m: int) -> ExactReal:
        s = ZERO
        for n in range(1, m + 1):
            s = s + self.levels[n].z
        return s

    def label_levels(self, pred) -> list[int]:
        return [lv.index for lv in self.levels[1:] if pred(lv.label)]

    def truncate(self, depth: int) -> "TowerSchedule":
        return TowerSchedule(self.xi1, self.xi2, self.levels[: depth + 1], self.variant,
                             self.strict, [r for r in self.repairs if r <= depth])

    def dump(self) -> list[dict]:
        out = []
        for lv in self.levels:
            out.append({
                "index": lv.index,
                "label": str(lv.label) if lv.index else "Base",
                "h": to_text(lv.h),
                "z": to_text(lv.z),
                "C": [to_text(c) for c in lv.C],
                "repaired": lv.repaired,
            })
        return out


# construction --------------------------------------------------------------

def default_labels(variant: str, group_data: GroupData) -> list[Label]:
    reps = group_data.orbit_reps()
    if variant == "sec4":
        return [Label("W", None, 1), Label("W", None, 2)] + [Label("N", a) for a in reps]
    zero = group_data.group.zero
    labels = [Label("M", zero, i) for i in (1, 2, 3)]
    for a in reps:
        labels.append(Label("N", a))
        labels.extend(Label("M", a, i) for i in (1, 2, 3))
    return labels


def round_robin(labels: Sequence[Label], depth: int) -> list[Label]:
    return [labels[(k - 2) % len(labels)] for k in range(2, depth + 1)]


def _base_levels() -> list[LevelSpec]:
    base = LevelSpec(0, (), ONE, Label("B"))
    boot = LevelSpec(1, (ZERO, ONE), ExactReal(3), BOOTSTRAP, step=0)
    return [base, boot]


def _check_xi(xs: Sequence[ExactReal]):
    for x in xs:
        if compare(x, ONE) < 0:
            raise ScheduleError(f"spacer parameter {to_text(x)} must be >= 1")


def _resolve_assignment(variant, group_data, depth, assignment) -> list[Label]:
    if depth < 2:
        raise ScheduleError("depth must be >= 2")
    if assignment is None:
        assignment = round_robin(default_labels(variant, group_data), depth)
    assignment = [Label.parse(x) if isinstance(x, str) else x for x in assignment]
    if len(assignment) < depth - 1:
        raise AssignmentGap(f"no label for index {len(assignment) + 2}")
    return list(assignment[: depth - 1])


def _level_N(n: int, prev: LevelSpec, label: Label, m: int, spacer: bool) -> LevelSpec:
    h = prev.h
    r = n ** 3 * m
    if r <= 1:
        raise DegenerateLevel(f"index {n + 1}: label {label} gives #C = {r}")
    C = tuple(h * j for j in range(r))
    hn = h * r + (1 if spacer else 0)
    return LevelSpec(n + 1, C, hn, label, z=h * (m * n), m_a=m, step=n)


def _level_W(n: int, prev: LevelSpec, label: Label, xi: ExactReal) -> LevelSpec:
    h = prev.h
    C = tuple(h * j for j in range(n)) + tuple((h + xi) * j + h * n for j in range(n))
    if len(C) <= 1:
        raise DegenerateLevel(f"index {n + 1}: label {label} gives #C = {len(C)}")
    return LevelSpec(n + 1, C, h * (2 * n) + xi * n, label, z=ZERO, step=n)


def _level_M(n: int, prev: LevelSpec, label: Label, m: int, xi: ExactReal) -> LevelSpec:
    h = prev.h
    period = h * 2 + xi
    z = period * (m * n)
    D1 = tuple(h * j for j in range(m * n))
    D2 = tuple((h + xi) * j + h * (m * n) for j in range(m * n))
    block = D1 + D2
    C = tuple(z * J + d for J in range(n * n) for d in block)
    if len(C) <= 1:
        raise DegenerateLevel(f"index {n + 1}: label {label} gives #C = {len(C)}")
    return LevelSpec(n + 1, C, period * (m * n ** 3), label, z=z, D1=D1, D2=D2, m_a=m, step=n)


def build_schedule_sec4(group_data: GroupData, depth: int, assignment=None,
                        xi1: ExactReal = XI1, xi2: ExactReal = XI2) -> TowerSchedule:
    labels = _resolve_assignment("sec4", group_data, depth, assignment)
    _check_xi([xi1, xi2])
    levels = _base_levels()
    for n, label in enumerate(labels, start=1):
        prev = levels[n]
        if label.kind == "W" and label.i in (1, 2):
            levels.append(_level_W(n, prev, label, xi1 if label.i == 1 else xi2))
        elif label.kind == "N":
            levels.append(_level_N(n, prev, label, group_data.period(label.a), spacer=True))
        else:
            raise ScheduleError(f"label {label} not allowed in the sec4 schedule")
    return TowerSchedule(xi1, xi2, levels, "sec4", strict=True)


# xi2 - xi1 must also be >= 1 for the spacer condition at M(a,3) levels
SEC5_XI2 = ExactReal(1, 0, 1)


def build_schedule_sec5(group_data: GroupData, depth: int, assignment=None,
                        xi1: ExactReal = XI1, xi2: ExactReal = SEC5_XI2,
                        strict: bool = False) -> TowerSchedule:
    labels = _resolve_assignment("sec5", group_data, depth, assignment)
    if compare(xi2, xi1) <= 0:
        raise ScheduleError("the squared construction needs xi2 > xi1")
    _check_xi([xi1, xi2, xi2 - xi1])
    levels = _base_levels()
    repairs = []
    for n, label in enumerate(labels, start=1):
        prev = levels[n]
        if label.kind == "N":
            lv = _level_N(n, prev, label, group_data.period(label.a), spacer=not strict)
            lv.repaired = not strict
            if not strict:
                repairs.append(n + 1)
            levels.append(lv)
        elif label.kind == "M":
            xi = {1: xi1, 2: xi2, 3: xi2 - xi1}[label.i]
            levels.append(_level_M(n, prev, label, group_data.period(label.a), xi))
        else:
            raise ScheduleError(f"label {label} not allowed in the sec5 schedule")
    return TowerSchedule(xi1, xi2, levels, "sec5", strict=strict, repairs=repairs)


# validation ----------------------------------------------------------------

@dataclass
class LevelCheck:
    index: int
    label: str
    checks: dict[str, bool]
    notes: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())


@dataclass
class ValidationReport:
    levels: list[LevelCheck]
    ratio: list[float]
    repairs: list[int]

    @property
    def ok(self) -> bool:
        return all(lc.ok for lc in self.levels)

    def failures(self) -> list[tuple[int, str]]:
        return [(lc.index, k) for lc in self.levels for k, v in lc.checks.items() if not v]

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "repairs": self.repairs,
            "ratio_h_over_prodC": self.ratio,
            "levels": [
                {"index": lc.index, "label": lc.label, "checks": lc.checks, "notes": lc.notes}
                for lc in self.levels
            ],
        }


def symmetric_difference_ratio(lv: LevelSpec) -> Fraction:
    """#(C triangle (C - z)) / #C, exact."""
    if lv.z == ZERO:
        return Fraction(0)
    shifted = {c - lv.z for c in lv.C}
    return Fraction(len(lv._set ^ shifted), len(lv.C))


def validate_schedule(schedule: TowerSchedule) -> ValidationReport:
    report = []
    ratios = []
    prod = 1
    for n in range(1, schedule.depth + 1):
        lv = schedule.levels[n]
        prev = schedule.levels[n - 1]
        checks = {}
        notes = []
        checks["min_C_zero"] = bool(lv.C) and lv.C[0] == ZERO and all(compare(c, ZERO) >= 0 for c in lv.C)
        checks["size_gt_1"] = len(lv.C) > 1
        sorted_ok = all(compare(a, b) < 0 for a, b in zip(lv.C, lv.C[1:]))
        checks["disjoint"] = sorted_ok and all(
            compare(b - a, prev.h) >= 0 for a, b in zip(lv.C, lv.C[1:])
        )
        top = lv.C[-1] + prev.h
        strict_ok = compare(top, lv.h - 1) <= 0
        relaxed_ok = compare(top, lv.h) <= 0
        if strict_ok:
            checks["spacer"] = True
            if lv.repaired:
                notes.append("spacer +1 repair applied")
        elif lv.repaired:
            checks["spacer"] = True
            notes.append("spacer +1 repair applied")
        elif not schedule.strict and relaxed_ok:
            checks["spacer"] = True
            notes.append("spacer condition relaxed to [0, h)")
        else:
            checks["spacer"] = False
            notes.append(f"sup(F + C) = {to_text(top)} exceeds h - 1 = {to_text(lv.h - 1)}")
        if lv.label.kind in ("N", "M"):
            target = Fraction(2, lv.step ** 2)
            checks["shift_defect_2_over_n2"] = symmetric_difference_ratio(lv) == target
        prod *= len(lv.C)
        ratios.append(float(lv.h) / prod)
        if n >= 2:
            # h_n / prod #C_k is non-decreasing: each level only adds spacer
            checks["ratio_monotone"] = compare(lv.h, prev.h * len(lv.C)) >= 0
        report.append(LevelCheck(n, str(lv.label), checks, notes))
    return ValidationReport(report, ratios, list(schedule.repairs))


# digits --------------------------------------------------------------------

@dataclass(frozen=True)
class DigitWord:
    top: int
    digits: tuple[ExactReal, ...]  # c_top, c_{top-1}, ..., c_{pad+1}
    pad: int
    offset: ExactReal

    def digit(self, level: int) -> ExactReal:
        """Digit at ``level``; levels at or below the pad are zero."""
        if level <= self.pad:
            return ZERO
        return self.digits[self.top - level]

    def reconstruct(self) -> ExactReal:
        s = self.offset
        for c in self.digits:
            s = s + c
        return s


def digits(f: ExactReal, N: int, schedule: TowerSchedule) -> DigitWord:
    if compare(f, ZERO) < 0 or compare(f, schedule.h(N)) >= 0:
        raise OutOfRange(f"{to_text(f)} not in [0, h_{N})")
    out = []
    x = f
    for k in range(N, 0, -1):
        lv = schedule.levels[k]
        c = lv.locate(x, schedule.h(k - 1))
        if c is None:
            return DigitWord(N, tuple(out), k, x)
        out.append(c)
        x = x - c
    return DigitWord(N, tuple(out), 0, x)


# measures ------------------------------------------------------------------

def _iv(x: ExactReal):
    lo, hi = enclosure(x, 128)
    return iv.mpf([lo, hi])


def level_mass(n: int, depth: int, schedule: TowerSchedule) -> tuple[float, float]:
    """Enclosure of mu(X_n).

    mu(X_n) = prod_{k>n} #C_k h_{k-1} / h_k.  Factors up to ``depth`` are
    exact; the tail is bounded assuming the construction continues (each
    later factor is >= 1 / (1 + xi_max / (2 h_{k-1})) and heights at least
    double per level).
    """
    if n > depth:
        raise ValueError("n must be <= depth")
    with ivprec(128):
        log_mass = iv.mpf(0)
        for k in range(n + 1, depth + 1):
            lv = schedule.levels[k]
            log_mass += iv.log(iv.mpf(len(lv.C)) * _iv(schedule.h(k - 1)) / _iv(lv.h))
        cmax = max(float(schedule.xi2), float(schedule.xi1), float(schedule.xi2 - schedule.xi1), 1.0)
        tail = iv.mpf(cmax) / _iv(schedule.h(depth))
        lo = iv.exp(log_mass - tail)
        hi = iv.exp(log_mass)
        return float(lo.a), min(1.0, float(hi.b))


def relative_mass(n: int, schedule: TowerSchedule) -> Fraction | float:
    """mu(X_{n-1}) / mu(X_n) = #C_n h_{n-1} / h_n."""
    lv = schedule.levels[n]
    return len(lv.C) * float(schedule.h(n - 1)) / float(lv.h)


def cylinder_measure(length: ExactReal, n: int, depth: int, schedule: TowerSchedule) -> tuple[float, float]:
    """Enclosure of mu([A]_n) for lambda(A) = length."""
    lo, hi = level_mass(n, depth, schedule)
    r = float(length) / float(schedule.h(n))
    return lo * r, hi * r


def schedule_from_dump(records: list[dict], xi1="xi1", xi2="xi2", variant="sec4") -> TowerSchedule:
    levels = []
    for r in records:
        C = tuple(parse(c) for c in r["C"])
        lab = Label("B") if r["index"] <= 1 else Label.parse(r["label"])
        lv = LevelSpec(r["index"], C, parse(r["h"]), lab, z=parse(r["z"]),
                       step=max(r["index"] - 1, 0), repaired=r.get("repaired", False))
        levels.append(lv)
    return TowerSchedule(parse(xi1), parse(xi2), levels, variant)
