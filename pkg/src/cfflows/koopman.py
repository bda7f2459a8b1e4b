"""Finite-window correlation engine for the sector representations

    (U_chi(t) f)(x) = chi(alpha(T_{-t} x, x)) f(T_{-t} x)

and the probes built on it (weak-limit residuals, rigidity, sector
separation, eigenvalue absence, cyclicity).

Correlations <U_chi(t) f, g> for level-k step functions are computed on the
window F_D = [0, h_D) by the level recursion

    Phi_n(s) = sum_{c, c' in C_n} chi(alpha_n(c) - alpha_n(c')) Phi_{n-1}(s + c - c')

where Phi_n(s) integrates chi(alpha(u, u + s)) f(u) conj(g(u + s)) over
u, u + s in F_n.  The recursion is linear, so a whole test family is carried
at once as an (F x F) matrix per (level, shift).  The base level is cut into
cells on which every family member and the partial cocycle are constant.
"""
from __future__ import annotations

import bisect
import cmath
import math
from fractions import Fraction
from dataclasses import dataclass, field
from functools import cmp_to_key
from typing import Optional, Sequence

import numpy as np

from .abelian import Character, Element, GroupData, l_value, dual_orbit, orbit_representatives
from .cftower import TowerSchedule, level_mass
from .cocycle import CocycleTable
from .exactnum import ExactReal, ZERO, compare, to_text


class TimeTooLarge(ValueError):
    pass


class NoSeparatingElement(ValueError):
    pass


class SameOrbit(ValueError):
    pass


@dataclass(frozen=True)
class StepFunction:
    """sum of weight * 1_{[lo, hi)} on F_level, read as cylinders [A]_level."""

    level: int
    pieces: tuple  # ((lo, hi, weight), ...)
    name: str = ""

    def sup(self) -> float:
        return max((abs(w) for _, _, w in self.pieces), default=0.0)


def indicator(level: int, lo: ExactReal, hi: ExactReal, name: str = "", weight: complex = 1.0) -> StepFunction:
    return StepFunction(level, ((lo, hi, weight),), name)


def column_indicator(schedule: TowerSchedule, k: int, c: ExactReal) -> StepFunction:
    """1 on the copy F_{k-1} + c inside F_k."""
    return indicator(k, c, c + schedule.h(k - 1), f"col[{k}]({to_text(c)})")


def full_column(schedule: TowerSchedule, k: int) -> StepFunction:
    return indicator(k, ZERO, schedule.h(k), f"full[{k}]")


def default_family(schedule: TowerSchedule, levels=(1, 2, 3)) -> list[StepFunction]:
    """Level-k full-column indicators and the indicators of their columns."""
    fam = []
    for k in levels:
        if k > schedule.depth:
            continue
        fam.append(full_column(schedule, k))
        for c in schedule.levels[k].C:
            fam.append(column_indicator(schedule, k, c))
    return fam


def mean_zero_family(schedule: TowerSchedule, levels=(1, 2, 3)) -> list[StepFunction]:
    """Differences of adjacent column indicators (integral zero)."""
    fam = []
    for k in levels:
        if k > schedule.depth:
            continue
        C = schedule.levels[k].C
        hp = schedule.h(k - 1)
        for c1, c2 in zip(C, C[1:]):
            fam.append(StepFunction(k, ((c1, c1 + hp, 1.0), (c2, c2 + hp, -1.0)),
                                    f"diff[{k}]({to_text(c1)},{to_text(c2)})"))
    return fam


# cells ---------------------------------------------------------------------

@dataclass
class _Cell:
    lo: ExactReal
    hi: ExactReal
    alpha: Element


def _level_cells(schedule: TowerSchedule, table: CocycleTable, k: int) -> list[_Cell]:
    """Partition of F_k into level-0 copies and spacers with the partial cocycle sum."""
    K = table.group
    cells = [_Cell(ZERO, schedule.h(0), K.zero)]
    padded = K.zero
    for n in range(1, k + 1):
        lv = schedule.levels[n]
        hp = schedule.h(n - 1)
        alpha = table.alpha[n]
        padded_n = K.add(padded, alpha.get(ZERO, K.zero))
        new = []
        cursor = ZERO
        for c in lv.C:
            if compare(cursor, c) < 0:
                new.append(_Cell(cursor, c, padded_n))
            a = alpha[c]
            for cell in cells:
                new.append(_Cell(cell.lo + c, cell.hi + c, K.add(cell.alpha, a)))
            cursor = c + hp
        if compare(cursor, lv.h) < 0:
            new.append(_Cell(cursor, lv.h, padded_n))
        cells = new
        padded = padded_n
    return cells


def _lift_pieces(schedule: TowerSchedule, f: StepFunction, k: int) -> list:
    pieces = list(f.pieces)
    for n in range(f.level + 1, k + 1):
        new = []
        for c in schedule.levels[n].C:
            new.extend((lo + c, hi + c, w) for lo, hi, w in pieces)
        pieces = new
    return pieces


def _exact_sorted(xs: list[ExactReal]) -> list[ExactReal]:
    xs = sorted(set(xs), key=float)
    if any(compare(a, b) >= 0 for a, b in zip(xs, xs[1:])):
        xs = sorted(xs, key=cmp_to_key(compare))
    return xs


# the engine ----------------------------------------------------------------

@dataclass
class CorrelationReport:
    chi: str
    t: str
    depth: int
    value: complex
    deficiency: float

    def to_dict(self) -> dict:
        return {"chi": self.chi, "t": self.t, "depth": self.depth,
                "re": self.value.real, "im": self.value.imag, "deficiency": self.deficiency}


class FamilyCorrelator:
    """Gram-type correlation matrices <U_chi(t) f_i, f_j> for a fixed family."""

    def __init__(self, schedule: TowerSchedule, table: CocycleTable, family: Sequence[StepFunction],
                 chi: Optional[Character] = None, depth: Optional[int] = None, weighted: bool = True):
        self.schedule = schedule
        self.table = table
        self.family = list(family)
        self.depth = schedule.depth if depth is None else depth
        self.chi = chi
        self.weighted = weighted and chi is not None and not chi.is_trivial()
        self.k0 = max(1, max(f.level for f in self.family))
        if self.k0 > self.depth:
            raise ValueError("test functions live above the truncation depth")
        self._phase_cache: dict = {}
        self._build_cells()
        self._diffs: dict[int, tuple] = {}
        self._memo: dict = {}
        lo, hi = level_mass(self.depth, self.depth, schedule)
        self.mass = (lo, hi)
        self.mass_mid = 0.5 * (lo + hi)
        self.hD = float(schedule.h(self.depth))
        self.sups = np.array([f.sup() for f in self.family])

    # character weights
    def weight(self, x: Element) -> complex:
        if not self.weighted:
            return 1.0
        w = self._phase_cache.get(x)
        if w is None:
            w = self.chi(x)
            self._phase_cache[x] = w
        return w

    def _build_cells(self):
        k0 = self.k0
        base = _level_cells(self.schedule, self.table, k0)
        lifted = [_lift_pieces(self.schedule, f, k0) for f in self.family]
        points = [c.lo for c in base] + [c.hi for c in base]
        for pieces in lifted:
            for lo, hi, _ in pieces:
                points += [lo, hi]
        points = _exact_sorted(points)
        cells = []
        bi = 0
        for a, b in zip(points, points[1:]):
            while compare(base[bi].hi, a) <= 0:
                bi += 1
            cells.append((a, b, base[bi].alpha))
        nf = len(self.family)
        vals = np.zeros((len(cells), nf), dtype=complex)
        lows = [float(a) for a, _, _ in cells]
        for j, pieces in enumerate(lifted):
            for lo, hi, w in pieces:
                i = bisect.bisect_left(lows, float(lo) - 1e-9)
                while i < len(cells) and compare(cells[i][0], lo) < 0:
                    i += 1
                while i < len(cells) and compare(cells[i][1], hi) <= 0:
                    vals[i, j] += w
                    i += 1
        keep = np.flatnonzero(np.abs(vals).sum(axis=1) > 0)
        self.cells = [cells[i] for i in keep]
        self.vals = vals[keep]
        self._lo_f = np.array([float(c[0]) for c in self.cells])
        self._hi_f = np.array([float(c[1]) for c in self.cells])

    def _base(self, s: ExactReal) -> np.ndarray:
        """Phi_{k0}(s) as a family matrix."""
        sf = float(s)
        nc = len(self.cells)
        M = np.zeros((nc, nc), dtype=complex)
        # P = [a, b) meets Q - s = [c - s, d - s)
        lo_q = self._lo_f - sf
        hi_q = self._hi_f - sf
        for p, (a, b, ap) in enumerate(self.cells):
            cand = np.flatnonzero((lo_q < self._hi_f[p] + 1e-9) & (hi_q > self._lo_f[p] - 1e-9))
            for q in cand:
                c, d, aq = self.cells[q]
                lo = a if compare(a, c - s) >= 0 else c - s
                hi = b if compare(b, d - s) <= 0 else d - s
                if compare(lo, hi) >= 0:
                    continue
                length = float(hi - lo)
                M[p, q] = length * self.weight(self.table.group.sub(ap, aq))
        return self.vals.T @ M @ self.vals.conj()

    def _differences(self, n: int):
        """Sorted distinct d = c' - c at level n with summed weights chi(alpha(c) - alpha(c'))."""
        if n in self._diffs:
            return self._diffs[n]
        keys, elems, counts = pair_counts(self.schedule, self.table, n)
        acc: dict = {}
        for key, x, cnt in zip(keys, elems, counts):
            acc[key] = acc.get(key, 0) + cnt * self.weight(x)
        ds = [ExactReal._from(k) for k, w in acc.items() if abs(w) > 0]
        ds = _exact_sorted(ds)
        weights = [acc[d.q] for d in ds]
        floats = [float(d) for d in ds]
        self._diffs[n] = (ds, weights, floats)
        return self._diffs[n]

    def phi(self, n: int, s: ExactReal) -> np.ndarray:
        key = (n, s)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        h = self.schedule.h(n)
        if compare(abs_exact(s), h) >= 0:
            out = np.zeros((len(self.family),) * 2, dtype=complex)
        elif n == self.k0:
            out = self._base(s)
        else:
            hp = self.schedule.h(n - 1)
            ds, weights, floats = self._differences(n)
            sf, hf = float(s), float(hp)
            i = bisect.bisect_left(floats, sf - hf - 1e-9 * (1 + abs(sf)))
            j = bisect.bisect_right(floats, sf + hf + 1e-9 * (1 + abs(sf)))
            out = np.zeros((len(self.family),) * 2, dtype=complex)
            for idx in range(i, j):
                sub = s - ds[idx]
                if compare(abs_exact(sub), hp) >= 0:
                    continue
                out = out + weights[idx] * self.phi(n - 1, sub)
        self._memo[key] = out
        return out

    def matrix(self, t: ExactReal) -> tuple[np.ndarray, np.ndarray]:
        """(<U(t) f_i, f_j>, deficiency bound) for t >= 0."""
        if compare(t, ZERO) < 0:
            val, dfc = self.matrix(-t)
            return val.conj().T, dfc.T
        if compare(t, self.schedule.h(self.depth)) >= 0:
            raise TimeTooLarge(f"t = {to_text(t)} >= h_{self.depth}")
        phi = self.phi(self.depth, t)
        val = phi * (self.mass_mid / self.hD)
        escape = float(t) / self.hD * self.mass[1]
        width = (self.mass[1] - self.mass[0]) / self.hD
        dfc = escape * np.outer(self.sups, self.sups) + np.abs(phi) * width
        return val, dfc

    def inner(self) -> np.ndarray:
        return self.matrix(ZERO)[0]

    def norms(self) -> np.ndarray:
        return np.sqrt(np.maximum(np.real(np.diag(self.inner())), 0.0))


def pair_counts(schedule: TowerSchedule, table: CocycleTable, n: int):
    """Multiplicities of (c' - c, alpha_n(c) - alpha_n(c')) over C_n x C_n.

    Character independent, so cached on the table and shared by every sector.
    """
    cache = table.__dict__.setdefault("_pair_cache", {})
    key = (id(schedule), n)
    if key in cache:
        return cache[key]
    lv = schedule.levels[n]
    alpha = table.alpha[n]
    K = table.group
    elements = list(K.elements)
    index = {x: i for i, x in enumerate(elements)}
    coef = [c.q for c in lv.C]
    if all(f.denominator == 1 for q in coef for f in q):
        Q = np.array([[int(f) for f in q] for q in coef], dtype=np.int64)
        A = np.array([index[alpha[c]] for c in lv.C], dtype=np.int64)
        sub = np.array([[index[K.sub(x, y)] for y in elements] for x in elements], dtype=np.int64)
        D = (Q[None, :, :] - Q[:, None, :]).reshape(-1, 3)
        E = sub[A[:, None], A[None, :]].reshape(-1)
        rows, cnt = np.unique(np.column_stack([D, E]), axis=0, return_counts=True)
        keys = [tuple(Fraction(int(v)) for v in r[:3]) for r in rows]
        elems = [elements[int(r[3])] for r in rows]
        out = (keys, elems, [int(c) for c in cnt])
    else:
        acc: dict = {}
        for c in lv.C:
            for d in lv.C:
                k = ((d - c).q, K.sub(alpha[c], alpha[d]))
                acc[k] = acc.get(k, 0) + 1
        out = ([k[0] for k in acc], [k[1] for k in acc], list(acc.values()))
    cache[key] = out
    return out


def abs_exact(x: ExactReal) -> ExactReal:
    return -x if compare(x, ZERO) < 0 else x


# single correlations -------------------------------------------------------

def correlation(f: StepFunction, g: StepFunction, chi: Optional[Character], t: ExactReal,
                depth: int, schedule: TowerSchedule, table: CocycleTable) -> CorrelationReport:
    fc = FamilyCorrelator(schedule, table, [f, g], chi, depth)
    val, dfc = fc.matrix(t)
    return CorrelationReport(str(chi) if chi else "trivial", to_text(t), fc.depth,
                             complex(val[0, 1]), float(dfc[0, 1]))


def norm_squared(f: StepFunction, schedule: TowerSchedule, depth: int) -> float:
    """||f||^2 straight from the cylinder measures (independent of the engine)."""
    lo, hi = level_mass(f.level, depth, schedule)
    total = sum(abs(w) ** 2 * float(b - a) for a, b, w in f.pieces)
    return 0.5 * (lo + hi) * total / float(schedule.h(f.level))


# residuals -----------------------------------------------------------------

Combo = Sequence[tuple[complex, ExactReal]]


@dataclass
class Residual:
    value: float
    error: float
    per_function: list[float] = field(default_factory=list)


def _mat(fc: FamilyCorrelator, t: ExactReal):
    return fc.matrix(t)


def weak_residual(fc: FamilyCorrelator, time: ExactReal, combo: Combo, rows=None) -> Residual:
    """max_j |<(U(time) - sum c_k U(t_k)) f_i, f_j>| / ||f_j||, per i (max over i reported)."""
    val, dfc = _mat(fc, time)
    target = np.zeros_like(val)
    err = dfc.copy()
    for coef, t in combo:
        v, d = _mat(fc, t)
        target = target + coef * v
        err = err + abs(coef) * d
    norms = fc.norms()
    rows = range(len(fc.family)) if rows is None else rows
    per = []
    per_err = []
    for i in rows:
        cols = [j for j in range(len(fc.family)) if norms[j] > 0]
        r = [abs(val[i, j] - target[i, j]) / norms[j] for j in cols]
        e = [err[i, j] / norms[j] for j in cols]
        k = int(np.argmax(r))
        per.append(r[k] / norms[i] if norms[i] > 0 else 0.0)
        per_err.append(e[k] / norms[i] if norms[i] > 0 else 0.0)
    k = int(np.argmax(per))
    return Residual(per[k], per_err[k], per)


def strong_residual(fc: FamilyCorrelator, time: ExactReal, combo: Combo, i: int) -> Residual:
    """|| U(time) f - sum c_k U(t_k) f || via <U(a) f, U(b) f> = <U(a - b) f, f>."""
    terms = [(1.0, time)] + [(-coef, t) for coef, t in combo]
    total = 0.0
    err = 0.0
    for ca, ta in terms:
        for cb, tb in terms:
            v, d = fc.matrix(ta - tb)
            total += (ca * np.conj(cb) * v[i, i]).real
            err += abs(ca * cb) * d[i, i]
    return Residual(math.sqrt(max(total, 0.0)), math.sqrt(err), [])


# probes --------------------------------------------------------------------

def label_times(schedule: TowerSchedule, pred) -> list[int]:
    """n with level n + 1 satisfying ``pred`` (times h_n) and n + 1 <= depth."""
    return [idx - 1 for idx in schedule.label_levels(pred) if idx >= 2]


@dataclass
class WeakLimitRow:
    n: int
    time: str
    target: str
    residual: float
    error: float

    def to_dict(self):
        return self.__dict__.copy()


def weak_limit_table(schedule: TowerSchedule, table: CocycleTable, gd: GroupData, chi: Character,
                     label_pred, target_fn, family=None, depth=None, multiple: int = 1) -> list[WeakLimitRow]:
    """Residual of U(multiple * h_n) toward ``target_fn(label) -> combo`` along labelled levels."""
    family = family if family is not None else default_family(schedule)
    fc = FamilyCorrelator(schedule, table, family, chi, depth)
    rows = []
    for n in label_times(schedule, label_pred):
        if n + 1 > fc.depth:
            continue
        label = schedule.levels[n + 1].label
        time = schedule.h(n) * multiple
        combo, desc = target_fn(label)
        res = weak_residual(fc, time, combo)
        rows.append(WeakLimitRow(n, to_text(time), desc, res.value, res.error))
    return rows


def target_scalar(gd: GroupData, chi: Character):
    """Limit along N(a) levels: the orbit average of chi(-v^i(a))."""
    def fn(label):
        l = l_value(chi.conj(), label.a, gd.v)
        return [(l, ZERO)], f"{l.real:+.6f}{l.imag:+.6f}i * I"
    return fn


def target_half(schedule: TowerSchedule, gd: GroupData, chi: Character, j: int = 1):
    """0.5 (l I + U(-j xi_i)) along W(i) levels (l = 1) and M(a, i) levels."""
    def fn(label):
        if label.kind == "W":
            l = 1.0
        else:
            a = gd.group.mul(j, label.a)
            l = l_value(chi.conj(), a, gd.v)
        xi = schedule.xi(label.i)
        return [(0.5 * l, ZERO), (0.5, -(xi * j))], f"0.5({complex(l):.6f} I + U(-{j}*xi{label.i}))"
    return fn


def residual(schedule: TowerSchedule, table: CocycleTable, f: StepFunction, chi: Optional[Character],
             n: int, combo: Combo, depth: Optional[int] = None, mode: str = "strong",
             family: Optional[Sequence[StepFunction]] = None, multiple: int = 1) -> Residual:
    """||U(multiple * h_n) f - sum c_k U(t_k) f|| (mode "strong"), or the weak form
    max_g |<(U(multiple * h_n) - sum c_k U(t_k)) f, g>| / (||f|| ||g||) over ``family``."""
    fam = [f] + [g for g in (family or []) if g is not f]
    fc = FamilyCorrelator(schedule, table, fam, chi, depth)
    time = schedule.h(n) * multiple
    if mode == "strong":
        return strong_residual(fc, time, combo, 0)
    return weak_residual(fc, time, combo, rows=[0])


@dataclass
class MultiplicityEvidence:
    chi: str
    eta: str
    a: list
    l_chi: complex
    l_eta: complex
    target_gap: float
    rows: list = field(default_factory=list)  # (n, gap, residual_chi, residual_eta, deficiency)

    def to_dict(self):
        return {
            "chi": self.chi, "eta": self.eta, "a": self.a,
            "l_chi": [self.l_chi.real, self.l_chi.imag], "l_eta": [self.l_eta.real, self.l_eta.imag],
            "target_gap": self.target_gap,
            "rows": [dict(zip(("n", "gap", "residual_chi", "residual_eta", "deficiency"), r)) for r in self.rows],
        }


def singularity_probe(chi: Character, eta: Character, schedule: TowerSchedule, table: CocycleTable,
                      gd: GroupData, depth: Optional[int] = None, family=None) -> MultiplicityEvidence:
    if chi.y in {c.y for c in dual_orbit(gd.v, eta)}:
        raise SameOrbit(f"{chi} and {eta} lie on one v-hat orbit")
    labelled = [lv.label.a for lv in schedule.levels[2:] if lv.label.kind == "N"]
    sep = None
    for a in dict.fromkeys(labelled):
        if abs(l_value(chi, a, gd.v) - l_value(eta, a, gd.v)) > 1e-9:
            sep = a
            break
    if sep is None:
        raise NoSeparatingElement(f"no N-labelled a separates {chi} and {eta}")
    family = family if family is not None else default_family(schedule)
    fcs = [FamilyCorrelator(schedule, table, family, c, depth) for c in (chi, eta)]
    lc, le = l_value(chi.conj(), sep, gd.v), l_value(eta.conj(), sep, gd.v)
    ev = MultiplicityEvidence(str(chi), str(eta), list(sep), lc, le, abs(lc - le))
    norms = fcs[0].norms()
    i = int(np.argmax(norms))
    for n in label_times(schedule, lambda L: L.kind == "N" and L.a == sep):
        if n + 1 > fcs[0].depth:
            continue
        t = schedule.h(n)
        (vc, dc), (ve, de) = fcs[0].matrix(t), fcs[1].matrix(t)
        nn = norms[i] ** 2
        gap = abs(vc[i, i] - ve[i, i]) / nn
        rc = abs(vc[i, i] / nn - lc)
        re_ = abs(ve[i, i] / nn - le)
        ev.rows.append((n, float(gap), float(rc), float(re_), float((dc[i, i] + de[i, i]) / nn)))
    return ev


@dataclass
class EigenProbe:
    lambdas: np.ndarray
    lower_bounds: np.ndarray
    levels: list

    def to_dict(self):
        return {"levels": self.levels, "min_lower_bound": float(self.lower_bounds.min()),
                "argmin": float(self.lambdas[int(np.argmin(self.lower_bounds))])}


def eigenvalue_absence_probe(lambdas: Sequence[float], schedule: TowerSchedule, table: CocycleTable,
                             gd: GroupData, depth: Optional[int] = None, family=None,
                             chis: Optional[Sequence[Character]] = None, label_pred=None) -> EigenProbe:
    """Lower bounds on min_f ||U(h_n) f - e^{i lambda h_n} f|| / ||f||, maximized over the
    deepest W1 and W2 levels (or over the levels picked by ``label_pred``).

    ||U(h) f - e^{i l h} f||^2 = 2||f||^2 - 2 Re(e^{-i l h} <U(h) f, f>).
    """
    lambdas = np.asarray(lambdas, dtype=float)
    family = family if family is not None else mean_zero_family(schedule)
    chis = chis if chis is not None else gd.sector_characters()
    top = depth or schedule.depth
    if label_pred is None:
        # deepest level of each W class
        ns = []
        for i in (1, 2):
            hits = [n for n in label_times(schedule, lambda L, i=i: L.kind == "W" and L.i == i) if n + 1 <= top]
            ns += hits[-1:]
        ns.sort()
    else:
        ns = [n for n in label_times(schedule, label_pred) if n + 1 <= top]
    best = np.zeros_like(lambdas)
    per_sector = []
    for chi in chis:
        fc = FamilyCorrelator(schedule, table, family, chi, depth)
        norms2 = np.real(np.diag(fc.inner()))
        sector_best = np.zeros_like(lambdas)
        for n in ns:
            h = schedule.h(n)
            val, dfc = fc.matrix(h)
            hf = float(h)
            phase = np.exp(-1j * np.outer(lambdas, [hf]))[:, 0]
            lb_n = np.full_like(lambdas, np.inf)
            for i in range(len(family)):
                # only functions measurable at the tower level of h_n
                if norms2[i] <= 0 or family[i].level > n:
                    continue
                r2 = 2 * norms2[i] - 2 * np.real(phase * val[i, i]) - 2 * dfc[i, i]
                lb = np.sqrt(np.maximum(r2, 0.0)) / math.sqrt(norms2[i])
                lb_n = np.minimum(lb_n, lb)
            sector_best = np.maximum(sector_best, lb_n)
        per_sector.append(sector_best)
    best = np.min(np.vstack(per_sector), axis=0)
    return EigenProbe(lambdas, best, ns)


def rigidity_residual(m: int, schedule: TowerSchedule, table: CocycleTable, depth: Optional[int] = None,
                      family=None) -> Residual:
    """max_f || U(z_1 + ... + z_m) f - f o S^{-1} || / ||f||, S taken at the truncation depth.

    On the window, f o S^{-1} agrees with U(z_1 + ... + z_D) f (the digit shift of S
    moves every level-D point by exactly that amount), so the residual is
    ||f - U(z_{m+1} + ... + z_D) f||.
    """
    depth = schedule.depth if depth is None else depth
    family = family if family is not None else default_family(schedule)
    fc = FamilyCorrelator(schedule, table, family, None, depth)
    shift = schedule.z_sum(depth) - schedule.z_sum(m)
    val, dfc = fc.matrix(shift)
    norms2 = np.real(np.diag(fc.inner()))
    per = []
    errs = []
    for i in range(len(family)):
        # S acts on X_m: only functions measurable at level <= m are meaningful
        if norms2[i] <= 0 or family[i].level > max(m, 1):
            continue
        r2 = 2 * norms2[i] - 2 * val[i, i].real
        per.append(math.sqrt(max(r2, 0.0) / norms2[i]))
        errs.append(math.sqrt(2 * dfc[i, i] / norms2[i]))
    if not per:
        return Residual(0.0, 0.0, [])
    k = int(np.argmax(per))
    return Residual(per[k], errs[k], per)


@dataclass
class RankReport:
    rank: int
    dimension: int
    singular_values: list
    margin: float
    label: str = "EVIDENCE"

    def to_dict(self):
        return self.__dict__.copy()


def _numerical_rank(G: np.ndarray, rtol: float = 1e-9) -> tuple[int, list, float]:
    s = np.linalg.svd(G, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0, [], 0.0
    tol = rtol * s[0]
    r = int((s > tol).sum())
    margin = float(s[r - 1] / tol) if r else 0.0
    return r, [float(x) for x in s], margin


def cyclicity_probe(f: StepFunction, chi: Optional[Character], t_grid: Sequence[ExactReal],
                    schedule: TowerSchedule, table: CocycleTable, depth: Optional[int] = None,
                    dimension: Optional[int] = None) -> RankReport:
    """Gram rank of {U(t) f : t in grid} via <U(a) f, U(b) f> = <U(a - b) f, f>."""
    fc = FamilyCorrelator(schedule, table, [f], chi, depth)
    n = len(t_grid)
    G = np.zeros((n, n), dtype=complex)
    for i, a in enumerate(t_grid):
        for j, b in enumerate(t_grid):
            G[i, j] = fc.matrix(a - b)[0][0, 0]
    r, s, margin = _numerical_rank(G)
    dim = dimension if dimension is not None else reference_dimension(f, t_grid, schedule, table)
    return RankReport(r, dim, s, margin)


def reference_dimension(f: StepFunction, t_grid: Sequence[ExactReal], schedule: TowerSchedule,
                        table: CocycleTable) -> int:
    """Pieces of the partition of F_K cut by the level-0 cells and their grid translates,
    K the first level whose window holds every translate of the support of f."""
    reach = max((abs(float(t)) for t in t_grid), default=0.0) + float(schedule.h(f.level))
    K = f.level
    while K < schedule.depth and float(schedule.h(K)) <= reach:
        K += 1
    cells = _level_cells(schedule, table, K)
    edges = {c.lo for c in cells} | {c.hi for c in cells}
    hK = schedule.h(K)
    pts = set(edges)
    for t in t_grid:
        for e in edges:
            x = e + t
            if compare(x, ZERO) > 0 and compare(x, hK) < 0:
                pts.add(x)
    return len(pts) - 1


def tensor_cyclicity_probe(f: StepFunction, g: StepFunction, chi: Optional[Character], eta: Optional[Character],
                           t_grid: Sequence[ExactReal], schedule: TowerSchedule, table: CocycleTable,
                           depth: Optional[int] = None) -> RankReport:
    """Gram rank of {U_chi(t) f (x) U_eta(t) g}: entries multiply."""
    f1 = FamilyCorrelator(schedule, table, [f], chi, depth)
    f2 = FamilyCorrelator(schedule, table, [g], eta, depth)
    n = len(t_grid)
    G = np.zeros((n, n), dtype=complex)
    for i, a in enumerate(t_grid):
        for j, b in enumerate(t_grid):
            G[i, j] = f1.matrix(a - b)[0][0, 0] * f2.matrix(a - b)[0][0, 0]
    r, s, margin = _numerical_rank(G)
    return RankReport(r, len(f1.cells) * len(f2.cells), s, margin)


# emission ------------------------------------------------------------------

CSV_COLUMNS = ("chi", "t", "level", "re", "im", "deficiency")


def correlation_rows(schedule: TowerSchedule, table: CocycleTable, f: StepFunction, chis: Sequence[Character],
                     times: Sequence[ExactReal], depth: Optional[int] = None) -> list[dict]:
    rows = []
    for chi in chis:
        fc = FamilyCorrelator(schedule, table, [f], chi, depth)
        for t in times:
            v, d = fc.matrix(t)
            rows.append({"chi": str(chi), "t": to_text(t), "level": fc.depth,
                         "re": float(v[0, 0].real), "im": float(v[0, 0].imag), "deficiency": float(d[0, 0])})
    return rows


def periodogram(values: Sequence[complex], step: float, freqs: Sequence[float]) -> list[float]:
    """|sum_k rho(k step) e^{-i w k step}| * step on an arithmetic time grid."""
    vals = np.asarray(values, dtype=complex)
    k = np.arange(len(vals))
    return [float(abs(np.sum(vals * np.exp(-1j * w * k * step))) * step) for w in freqs]
