import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cfflows.abelian import characters, l_value, z3_witness
from cfflows.cftower import build_schedule_sec4, build_schedule_sec5, level_mass
from cfflows.cocycle import build_table
from cfflows.exactnum import ExactReal, ONE, ZERO, XI1
from cfflows.koopman import (
    CSV_COLUMNS, FamilyCorrelator, NoSeparatingElement, SameOrbit, StepFunction, TimeTooLarge,
    column_indicator, correlation, correlation_rows, cyclicity_probe, default_family,
    eigenvalue_absence_probe, full_column, indicator, label_times, mean_zero_family, norm_squared,
    periodogram, residual, rigidity_residual, singularity_probe, target_half, target_scalar,
    weak_limit_table,
)
from oracles import brute_correlation

GD = z3_witness()
K = GD.group
CHI0, CHI1, CHI2 = characters(K)
S3 = build_schedule_sec4(GD, 3, ["W1", "N(1)"])
T3 = build_table(S3, GD)
S5 = build_schedule_sec4(GD, 5, ["W1", "W2", "N(1)", "N(1)", "N(1)"])
T5 = build_table(S5, GD)


def _times(sch, N):
    h = [sch.h(k) for k in range(N)]
    return [ZERO, ONE, h[1], h[2] - 1, h[1] + XI1, sch.h(N) - h[2] - ONE]


@pytest.mark.parametrize("chi", [None, CHI1], ids=["trivial", "chi1"])
def test_engine_matches_brute_oracle(chi):
    f = column_indicator(S3, 2, S3.levels[2].C[1])
    g = StepFunction(1, ((ZERO, ONE, 1.0), (ONE, ExactReal(3), -0.5j)), "g")
    for t in _times(S3, 3):
        for a, b in ((f, g), (g, f), (f, f)):
            rep = correlation(a, b, chi, t, 3, S3, T3)
            ref = brute_correlation(a, b, chi, t, 3, S3, T3)
            assert abs(rep.value - ref) < 1e-9, (t, a.name, b.name)


def test_sec5_engine_matches_brute_oracle():
    sch = build_schedule_sec5(GD, 3)
    tab = build_table(sch, GD)
    f = full_column(sch, 2)
    g = column_indicator(sch, 3, sch.levels[3].C[3])
    for t in (ONE, sch.h(1), sch.h(2) + sch.xi(1)):
        assert abs(correlation(g, f, CHI2, t, 3, sch, tab).value - brute_correlation(g, f, CHI2, t, 3, sch, tab)) < 1e-9


def test_bootstrap_only_system():
    sch = build_schedule_sec4(GD, 2)
    tab = build_table(sch, GD)
    f = indicator(1, ZERO, ONE)
    rep = correlation(f, f, None, ONE, 1, sch, tab)
    # [0,1) moves onto [1,2), disjoint from [0,1)
    assert rep.value == pytest.approx(0.0)
    g = indicator(1, ONE, ExactReal(2))
    rep = correlation(f, g, None, ONE, 1, sch, tab)
    assert rep.value == pytest.approx(brute_correlation(f, g, None, ONE, 1, sch, tab))
    lo, hi = level_mass(1, 1, sch)
    assert rep.value.real == pytest.approx(0.5 * (lo + hi) / 3)


def test_time_zero_is_identity():
    for f in default_family(S5, (1, 2)):
        rep = correlation(f, f, CHI1, ZERO, 5, S5, T5)
        assert rep.value.real == pytest.approx(norm_squared(f, S5, 5), rel=1e-12)
        assert rep.value.imag == pytest.approx(0.0, abs=1e-15)
        # deficiency is only the enclosure width
        lo, hi = level_mass(5, 5, S5)
        assert rep.deficiency <= abs(rep.value) * (hi - lo) / (0.5 * (lo + hi)) + 1e-15


def test_trivial_character_matches_unweighted_path():
    fam = default_family(S5, (2,))
    a = FamilyCorrelator(S5, T5, fam, CHI0, 5)
    b = FamilyCorrelator(S5, T5, fam, None, 5)
    t = S5.h(3) + S5.xi(2)
    assert np.array_equal(a.matrix(t)[0], b.matrix(t)[0])


def test_sector_additivity():
    # sum over sectors = |K| times the alpha = 0 part of the skew product
    f = column_indicator(S3, 2, S3.levels[2].C[0])
    g = full_column(S3, 2)
    for t in (S3.h(1), S3.h(2), ExactReal(5)):
        total = sum(correlation(f, g, chi, t, 3, S3, T3).value for chi in characters(K))
        ref = brute_correlation(f, g, None, t, 3, S3, T3, weight=lambda x: 1.0 if x == K.zero else 0.0)
        assert abs(total - len(K.elements) * ref) < 1e-9


@settings(max_examples=40)
@given(st.integers(0, 10**6), st.integers(1, 2), st.sampled_from([0, 1, 2]))
def test_correlation_bounded_by_norms(t_num, lev, ci):
    t = ExactReal(t_num % 9000) + XI1 * (t_num % 3)
    fam = default_family(S5, (lev,))
    fc = FamilyCorrelator(S5, T5, fam, characters(K)[ci], 5)
    val, dfc = fc.matrix(t)
    norms = fc.norms()
    assert np.all(np.abs(val) <= np.outer(norms, norms) + dfc + 1e-12)
    assert np.all(dfc >= 0)


def test_negative_time_is_adjoint():
    fc = FamilyCorrelator(S5, T5, default_family(S5, (1,)), CHI1, 5)
    t = S5.h(2) + S5.xi(1)
    assert np.allclose(fc.matrix(-t)[0], fc.matrix(t)[0].conj().T)


def test_time_too_large():
    with pytest.raises(TimeTooLarge):
        correlation(full_column(S3, 1), full_column(S3, 1), None, S3.h(3), 3, S3, T3)


def test_residual_examples():
    f = full_column(S5, 2)
    # U(h_n) f compared with itself
    assert residual(S5, T5, f, CHI1, 3, [(1.0, S5.h(3))]).value == pytest.approx(0.0, abs=1e-6)
    # rank-one rigidity along N levels for the trivial sector
    r = [residual(S5, T5, f, None, n, [(1.0, ZERO)], mode="weak").value for n in label_times(S5, lambda L: L.kind == "N")]
    assert max(r) < 0.03
    # nontrivial sector, target -1/2 I
    assert l_value(CHI1.conj(), (1,), GD.v) == pytest.approx(-0.5)
    fam = default_family(S5)
    r = [residual(S5, T5, f, CHI1, n, [(-0.5, ZERO)], mode="weak", family=fam).value
         for n in label_times(S5, lambda L: L.kind == "N")]
    assert r == sorted(r, reverse=True) and r[-1] < 0.05


def test_w1_weak_limit_decreases():
    sch = build_schedule_sec4(GD, 6, ["W2", "W1", "W1", "W1", "W2"])
    tab = build_table(sch, GD)
    rows = weak_limit_table(sch, tab, GD, CHI1, lambda L: L.kind == "W" and L.i == 1, target_half(sch, GD, CHI1))
    vals = [r.residual for r in rows][-3:]
    assert len(vals) == 3 and vals == sorted(vals, reverse=True)
    assert vals[-1] < 0.05


def test_n_weak_limit_table():
    rows = weak_limit_table(S5, T5, GD, CHI1, lambda L: L.kind == "N", target_scalar(GD, CHI1))
    assert [r.n for r in rows] == [3, 4]
    assert rows[-1].residual < rows[0].residual


def test_singularity_probe():
    with pytest.raises(SameOrbit):
        singularity_probe(CHI1, CHI1, S5, T5, GD)
    with pytest.raises(SameOrbit):
        singularity_probe(CHI1, CHI2, S5, T5, GD)
    ev = singularity_probe(CHI0, CHI1, S5, T5, GD)
    assert ev.a == [1]
    assert ev.target_gap == pytest.approx(1.5)
    assert abs(ev.rows[-1][1] - 1.5) < 0.1
    w = build_schedule_sec4(GD, 4, ["W1", "W2", "W1"])
    with pytest.raises(NoSeparatingElement):
        singularity_probe(CHI0, CHI1, w, build_table(w, GD), GD)


def test_eigen_probe():
    p = eigenvalue_absence_probe([1.0, -2.5], S5, T5, GD)
    assert np.all(p.lower_bounds > 0.1)
    # scalar obstruction at lambda = 1
    assert 1 - abs(0.5 * (1 + cmath.exp(-1j * float(S5.xi(1))))) > 0


def test_rigidity():
    w = build_schedule_sec4(GD, 4, ["W1", "W2", "W1"])
    assert rigidity_residual(2, w, build_table(w, GD)).value == 0.0
    sch = build_schedule_sec4(GD, 5, ["W1", "N(1)", "N(1)", "W2"])
    tab = build_table(sch, GD)
    r = [rigidity_residual(m, sch, tab).value for m in (2, 3, 4)]
    assert r[0] > r[1] > r[2]
    # norm bound: never above twice the function norm
    assert all(x <= 2.0 for x in r)


def test_marked_subset_averaging():
    N = 5
    lv = S5.levels[N]
    f = full_column(S5, 2)
    base = norm_squared(f, S5, N)
    from cfflows.koopman import _lift_pieces
    pieces = _lift_pieces(S5, f, N - 1)
    for sub in T5.marked[N]:
        F = StepFunction(N, tuple((lo + c, hi + c, w) for c in sorted(sub, key=float) for lo, hi, w in pieces))
        d = len(sub) / len(lv.C)
        assert norm_squared(F, S5, N) == pytest.approx(d * base, rel=1e-9)
        assert abs(d - 1 / 2) < 2 / lv.step


def test_cyclicity():
    f = full_column(S5, 1)
    assert cyclicity_probe(f, CHI1, [ZERO], S5, T5).rank == 1
    sch = build_schedule_sec4(GD, 2)
    tab = build_table(sch, GD)
    base = indicator(2, ZERO, ONE)
    grid = [ExactReal(k) for k in range(int(float(sch.h(2))) - 1)]
    rep = cyclicity_probe(base, None, grid, sch, tab, depth=2)
    assert rep.rank == len(grid)
    assert rep.label == "EVIDENCE"


def test_emission():
    rows = correlation_rows(S3, T3, full_column(S3, 1), [CHI0, CHI1], [ZERO, ONE])
    assert len(rows) == 4 and all(tuple(sorted(r)) == tuple(sorted(CSV_COLUMNS)) for r in rows)
    pg = periodogram([1.0] * 8, 0.5, [0.0, math.pi])
    assert pg[0] == pytest.approx(4.0) and pg[1] == pytest.approx(0.0, abs=1e-12)
    assert len(mean_zero_family(S3, (1,))) == 1
