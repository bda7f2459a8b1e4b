from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from cfflows.abelian import GroupData, realize, z3_witness
from cfflows.cftower import (
    AssignmentGap, DegenerateLevel, Label, OutOfRange, ScheduleError, build_schedule_sec4, build_schedule_sec5,
    digits, level_mass, relative_mass, schedule_from_dump, symmetric_difference_ratio, validate_schedule,
)
from cfflows.exactnum import ExactReal, ONE, XI1, XI2, ZERO, compare, to_text

GD = z3_witness()
SEC4 = build_schedule_sec4(GD, 6)
SEC5 = build_schedule_sec5(GD, 6)


def test_sec4_frozen_heights():
    assert [str(lv.label) for lv in SEC4.levels[1:]] == ["Bootstrap", "W1", "W2", "N(1)", "W1", "W2"]
    assert [to_text(SEC4.h(n)) for n in range(7)] == [
        "1", "3", "6 + xi1", "24 + 4*xi1 + 2*xi2", "1297 + 216*xi1 + 108*xi2",
        "10376 + 1732*xi1 + 864*xi2", "103760 + 17320*xi1 + 8645*xi2",
    ]
    assert [len(lv.C) for lv in SEC4.levels[1:]] == [2, 2, 4, 54, 8, 10]


def test_sec5_frozen_heights():
    assert [str(lv.label) for lv in SEC5.levels[1:]] == ["Bootstrap", "M(0;1)", "M(0;2)", "M(0;3)", "N(1)", "M(1;1)"]
    assert to_text(SEC5.h(6)) == "361152500 + 53568250*xi1 + 29376000*xi2"
    assert [len(lv.C) for lv in SEC5.levels[1:]] == [2, 2, 16, 54, 128, 500]
    assert SEC5.repairs == [5]


def test_label_text_roundtrip():
    for text in ("W1", "W2", "N(1)", "M(0;2)", "M(1,0;3)"):
        assert str(Label.parse(text)) == text
    with pytest.raises(ValueError):
        Label.parse("Q(1)")


def test_sec4_validates_strictly():
    rep = validate_schedule(SEC4)
    assert rep.ok
    assert not any(note for lc in rep.levels for note in lc.notes)


def test_sec5_needs_only_the_case1_repair():
    rep = validate_schedule(SEC5)
    assert rep.ok
    notes = {lc.index: lc.notes for lc in rep.levels if lc.notes}
    assert notes == {5: ["spacer +1 repair applied"]}
    strict = validate_schedule(build_schedule_sec5(GD, 6, strict=True))
    assert strict.failures() == [(5, "spacer")]


def test_shift_identity_two_over_n_squared():
    for sch in (SEC4, SEC5):
        for lv in sch.levels[2:]:
            if lv.label.kind in ("N", "M"):
                assert symmetric_difference_ratio(lv) == Fraction(2, lv.step ** 2)


def test_ratio_bounded_and_non_decreasing():
    for sch in (SEC4, SEC5):
        ratios = validate_schedule(sch).ratio
        assert all(b >= a for a, b in zip(ratios, ratios[1:]))
        assert ratios[-1] < 3


def test_errors():
    with pytest.raises(ScheduleError):
        build_schedule_sec4(GD, 1)
    with pytest.raises(AssignmentGap):
        build_schedule_sec4(GD, 5, ["W1"])
    with pytest.raises(ScheduleError):
        build_schedule_sec4(GD, 3, ["M(0;1)"] * 2)
    with pytest.raises(ScheduleError):
        build_schedule_sec5(GD, 3, xi1=XI2, xi2=XI1)
    with pytest.raises(ScheduleError):
        build_schedule_sec4(GD, 3, xi1=XI1 / 2)
    with pytest.raises(DegenerateLevel):
        # N level at step 1 with a fixed point: one copy only
        gd = GroupData.from_witness(realize({1}))
        build_schedule_sec4(gd, 2, ["N(1)"])
    with pytest.raises(OutOfRange):
        digits(SEC4.h(3), 3, SEC4)


def test_dump_roundtrip():
    back = schedule_from_dump(SEC4.dump())
    assert [to_text(back.h(n)) for n in range(7)] == [to_text(SEC4.h(n)) for n in range(7)]
    assert all(a.C == b.C for a, b in zip(back.levels, SEC4.levels))


def test_level_mass_enclosures():
    lo, hi = level_mass(6, 6, SEC4)
    assert 0.99 < lo <= hi <= 1.0
    lo1, hi1 = level_mass(1, 6, SEC4)
    assert lo1 <= 0.72388 and hi1 >= 0.72387
    # relative masses multiply out
    prod = 1.0
    for n in range(2, 7):
        prod *= relative_mass(n, SEC4)
    assert lo1 / lo - 1e-9 <= prod <= hi1 / hi + 1e-9 or abs(prod * lo - lo1) < 1e-3


points = st.builds(lambda a, b, c: (a, b, c), st.integers(0, 10**5), st.integers(0, 50), st.integers(0, 50))


@given(points, st.integers(2, 6))
def test_digits_reconstruct(p, N):
    x = ExactReal(p[0] % 97, p[1] % 5, p[2] % 5)
    if compare(x, SEC4.h(N)) >= 0:
        return
    w = digits(x, N, SEC4)
    assert w.reconstruct() == x
    for lev in range(w.pad + 1, N + 1):
        assert w.digit(lev) in SEC4.levels[lev]
    # the remainder lies in F_pad, and if pad > 0 it misses every copy at level pad
    assert compare(w.offset, ZERO) >= 0 and compare(w.offset, SEC4.h(w.pad)) < 0
    if w.pad > 0:
        assert SEC4.levels[w.pad].locate(w.offset, SEC4.h(w.pad - 1)) is None


@given(st.lists(st.sampled_from(["W1", "W2", "N(1)"]), min_size=4, max_size=4))
def test_random_sec4_assignments_validate(asg):
    sch = build_schedule_sec4(GD, 5, asg)
    assert validate_schedule(sch).ok


@given(st.lists(st.sampled_from(["M(0;1)", "M(0;2)", "M(0;3)", "M(1;1)", "M(1;2)", "N(1)"]), min_size=3, max_size=3))
def test_random_sec5_assignments_validate(asg):
    sch = build_schedule_sec5(GD, 4, asg)
    rep = validate_schedule(sch)
    assert rep.ok
    assert {lc.index for lc in rep.levels if lc.notes} == set(sch.repairs)
