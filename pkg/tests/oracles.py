"""Independent reference computations used by the test suite."""
from __future__ import annotations

from functools import cmp_to_key

from cfflows.cftower import digits, level_mass
from cfflows.cocycle import alpha_between
from cfflows.exactnum import ZERO, compare


def _lifted_value(f, x, schedule, N):
    """f evaluated at a point x of F_N via its digit word (f lives on F_{f.level})."""
    w = digits(x, N, schedule)
    if w.pad > f.level:
        return 0.0
    y = x
    for lev in range(N, f.level, -1):
        y = y - w.digit(lev)
    for lo, hi, val in f.pieces:
        if compare(lo, y) <= 0 and compare(y, hi) < 0:
            return val
    return 0.0


def _level0_edges(schedule, N):
    edges = [ZERO, schedule.h(0)]
    for n in range(1, N + 1):
        lv = schedule.levels[n]
        hp = schedule.h(n - 1)
        new = []
        for c in lv.C:
            new += [e + c for e in edges]
            new += [c, c + hp]
        new += [ZERO, lv.h]
        edges = new
    return edges


def brute_correlation(f, g, chi, t, N, schedule, table, weight=None):
    """<U_chi(t) f, g> on the window F_N by splitting [0, h_N - t) at every edge.

    ``weight`` (a function of the cocycle value) replaces chi when given.
    """
    if weight is None and chi is not None:
        weight = chi
    edges = _level0_edges(schedule, N)
    for fn in (f, g):
        for lo, hi, _ in fn.pieces:
            edges += [lo, hi]
    pts = set()
    for e in edges:
        pts.add(e)
        pts.add(e - t)
    end = schedule.h(N) - t
    pts = [p for p in pts if compare(p, ZERO) >= 0 and compare(p, end) <= 0]
    pts = sorted(set(pts) | {ZERO, end}, key=cmp_to_key(compare))
    total = 0j
    for a, b in zip(pts, pts[1:]):
        mid = (a + b) / 2
        fv = _lifted_value(f, mid, schedule, N)
        if fv == 0:
            continue
        gv = _lifted_value(g, mid + t, schedule, N)
        if gv == 0:
            continue
        w = 1.0
        if weight is not None:
            w = weight(alpha_between(digits(mid, N, schedule), digits(mid + t, N, schedule), table))
        total += w * fv * complex(gv).conjugate() * float(b - a)
    lo, hi = level_mass(N, N, schedule)
    return total * 0.5 * (lo + hi) / float(schedule.h(N))
