import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from cfflows.abelian import z3_witness
from cfflows.cftower import DigitWord, Label, build_schedule_sec4, build_schedule_sec5, digits
from cfflows.cocycle import (
    NotTailEquivalent, OutsideDomain, TowerPoint, alpha_between, alpha_points, build_alpha, build_table,
    check_conditions, s_zbar, s_zbar_inverse,
)
from cfflows.exactnum import ExactReal, ZERO, compare

GD = z3_witness()
K = GD.group
SEC4 = build_schedule_sec4(GD, 6)
SEC5 = build_schedule_sec5(GD, 6)
T4 = build_table(SEC4, GD)
T5 = build_table(SEC5, GD)


def test_n2_block_values_and_marks():
    sch = build_schedule_sec4(GD, 3, ["W1", "N(1)"])
    lv = sch.levels[3]
    table, marks = build_alpha(lv, (1,), GD, sch.h(2))
    vals = [table[c][0] for c in lv.C]
    assert vals[:4] == [0, 1, 2, 1]
    # block q is twisted by v^q (v = multiplication by 2)
    assert vals[4:8] == [0, 2, 1, 2]
    assert len(lv.C) == 16
    assert [len(m) for m in marks] == [6, 6]


def test_bootstrap_and_w_levels_neutral():
    for n, lv in enumerate(SEC4.levels[1:], start=1):
        if lv.label.kind in ("B", "W"):
            assert set(T4.alpha[n].values()) == {K.zero}


def test_built_tables_pass_all_conditions():
    for sch, tab in ((SEC4, T4), (SEC5, T5)):
        rep = check_conditions(tab, sch, GD)
        assert rep.ok, rep.failures()
        assert rep.overlap_defect_sum == 0
        assert rep.shift_sum == rep.shift_closed_form
    assert check_conditions(T4, SEC4, GD).defect_sum == Fraction(1, 9)


def test_marked_densities_within_bound():
    for sch, tab in ((SEC4, T4), (SEC5, T5)):
        for n, marks in tab.marked.items():
            lv = sch.levels[n]
            m = GD.period(lv.label.a)
            total = len(lv.C) if lv.label.kind == "N" else len(lv.D1)
            for s in marks:
                assert abs(Fraction(len(s), total) - Fraction(1, m)) < Fraction(2, lv.step * m)


def test_corrupted_entry_flags_a1():
    bad = T4.copy()
    lv = SEC4.levels[4]
    c = lv.C[10]
    bad.alpha[4][c] = K.add(bad.alpha[4][c], (1,))
    rep = check_conditions(bad, SEC4, GD)
    assert (4, "A1") in rep.failures()
    assert any("A1" in o for lc in rep.levels for o in lc.offenders)


def test_neutral_table_on_n_level_fails_a2():
    bad = T4.copy()
    bad.alpha[4] = {c: K.zero for c in SEC4.levels[4].C}
    bad.marked = {}
    assert (4, "A2") in check_conditions(bad, SEC4, GD).failures()


def test_alpha_between_examples():
    w = digits(ExactReal(5, 1, 0), 6, SEC4)
    assert alpha_between(w, w, T4) == K.zero
    with pytest.raises(NotTailEquivalent):
        alpha_between(digits(ZERO, 5, SEC4), digits(ZERO, 6, SEC4), T4)
    # one differing digit at level 4
    lv = SEC4.levels[4]
    x = lv.C[1]
    y = lv.C[2]
    assert alpha_points(x, y, 4, SEC4, T4) == K.sub(T4.alpha[4][x], T4.alpha[4][y])


def _random_point(rng, sch, N):
    x = ZERO
    for n in range(N, 0, -1):
        x = x + rng.choice(sch.levels[n].C)
    return x + ExactReal(Fraction(rng.randrange(8), 8))


@pytest.mark.parametrize("sch,tab", [(SEC4, T4), (SEC5, T5)], ids=["sec4", "sec5"])
def test_cocycle_identity_on_random_triples(sch, tab):
    rng = random.Random(7)
    for _ in range(1000):
        x, y, z = (digits(_random_point(rng, sch, 6), 6, sch) for _ in range(3))
        assert K.add(alpha_between(x, y, tab), alpha_between(y, z, tab)) == alpha_between(x, z, tab)


def _word(p: TowerPoint) -> DigitWord:
    return DigitWord(p.top, tuple(reversed(p.digits)), p.level, p.offset)


def _good_digits(rng, sch, m, top):
    out = []
    for n in range(m + 1, top + 1):
        lv = sch.levels[n]
        out.append(rng.choice([c for c in lv.C if (c + lv.z) in lv]))
    return tuple(out)


def test_s_zbar_examples():
    rng = random.Random(3)
    sch = build_schedule_sec4(GD, 5, ["W1", "N(1)", "N(1)", "W2"])
    p = TowerPoint(2, ZERO, _good_digits(rng, sch, 2, 5))
    q = s_zbar(p, 2, sch)
    for k, c in enumerate(q.digits, start=3):
        assert c in sch.levels[k]
    assert s_zbar_inverse(q, 2, sch) == p
    with pytest.raises(OutsideDomain):
        s_zbar(TowerPoint(2, ZERO, (sch.levels[3].C[-1],)), 2, sch)
    # all z = 0: identity
    w = build_schedule_sec4(GD, 4, ["W1", "W2", "W1"])
    p = TowerPoint(1, ExactReal(1), (w.levels[2].C[1], w.levels[3].C[0], w.levels[4].C[2]))
    assert s_zbar(p, 1, w) == p


@given(st.integers(0, 10**6))
def test_s_zbar_intertwines_cocycle_with_v(seed):
    rng = random.Random(seed)
    sch = build_schedule_sec4(GD, 5, ["W1", "N(1)", "W2", "N(1)"])
    tab = build_table(sch, GD)
    m = 2
    p = TowerPoint(m, ZERO, _good_digits(rng, sch, m, 5))
    q = TowerPoint(m, ZERO, _good_digits(rng, sch, m, 5))
    a = alpha_between(_word(p), _word(q), tab)
    b = alpha_between(_word(s_zbar(p, m, sch)), _word(s_zbar(q, m, sch)), tab)
    assert b == GD.v(a)
