import pytest

from dropmix.core import ONE, ZERO, ConcentrationError, all_targets, gamma, parse_target as c
from dropmix.gadgets import BASE_SET, converter_waste
from dropmix.graph import validate
from dropmix.rpris import initial_shift, rpr, rpris, run_rpris, select_interval, waste_bound


@pytest.mark.parametrize("t,sigma,g,t0,mirrored", [
    ("7/32", 1, 2, "7/16", False),
    ("3/32", 0, 3, "3/4", False),
    ("29/32", 0, 3, "3/4", True),
    ("7/16", 1, 1, "7/16", False),
])
def test_initial_shift(t, sigma, g, t0, mirrored):
    plan = initial_shift(c(t))
    assert (plan.sigma, plan.gamma, plan.t0, plan.mirrored) == (sigma, g, c(t0), mirrored)


def test_shift_plan_invariants():
    for d in range(2, 11):
        for t in all_targets(d):
            p = initial_shift(t)
            assert c("1/4") <= p.t0 <= c("3/4")
            if p.gamma >= 2:
                assert p.t0.exp == d - p.gamma + p.sigma


@pytest.mark.parametrize("t,k", [("7/16", 2), ("19/32", 4), ("9/32", 1), ("5/16", 1), ("11/16", 4)])
def test_select_interval(t, k):
    got, l, r = select_interval(c(t))
    assert got == k and l == c(f"{k}/8") and r == c(f"{k + 2}/8")


def test_select_interval_range():
    with pytest.raises(ConcentrationError):
        select_interval(c("1/8"))


def test_rpr_7_16():
    g, trace = rpr(c("7/16"))
    assert [(s.k, s.i, s.j) for s in trace[:-1]] == [(2, 1, 2)]
    assert trace[-1].base == c("3/4")
    assert len(g.sinks) == 4
    assert len(rpris(c("7/16")).discarded) == 3


def test_rpr_149_256_ladder():
    g, trace = rpr(c("149/256"))
    # 149/256 -> 21/64 -> 5/16, and 5/16 is already a base value
    assert len(trace) == 3 and trace[-1].base == c("5/16")
    assert [s.t.exp for s in trace] == [8, 6, 4]


def test_trace_invariants():
    for d in range(1, 11):
        for t in all_targets(d):
            res = run_rpris(t)
            steps = res.trace
            for a, b in zip(steps, steps[1:]):
                assert b.t.exp == a.t.exp - 2
                assert c("1/4") <= a.t <= c("3/4")
            assert steps[-1].base in BASE_SET


@pytest.mark.parametrize("t,bound,most", [("1/2", 2, 1), ("7/16", 4, 3), ("7/32", 5, 5), ("11/256", 8, 8), ("15/16", 5, 5)])
def test_examples_and_bounds(t, bound, most):
    t = c(t)
    g = rpris(t)
    assert waste_bound(t) == bound
    assert validate(g).ok
    assert g.label(g.target) == t
    assert gamma(t) + 1 <= len(g.discarded) <= most


def test_half():
    g = rpris(c("1/2"))
    assert len(g.sources) == 2 and len(g.mixers) == 1


@pytest.mark.parametrize("bad", ["0", "1"])
def test_rejects_pure(bad):
    with pytest.raises(ConcentrationError):
        rpris(c(bad))


def test_all_sinks_but_target_are_waste():
    for t in all_targets(9):
        g = rpris(t)
        assert set(g.sinks) - g.discarded == {g.target}
        assert set(g.source_config().labels()) <= {ZERO, ONE}


def test_shift_converter_waste_accounting():
    # waste = base + one per converter step (two for exceptional ones) + shift discards
    res = run_rpris(c("11/256"))
    base = len([s for s in res.trace if s.is_base])
    conv = sum(converter_waste(*k) for k in res.converters())
    assert base == 1 and conv == 0
    assert res.shift == (1, 2, 4)


def test_deep_target():
    t = c("123456789:40")
    g = rpris(t)
    assert validate(g).ok and g.label(g.target) == t
    assert len(g.discarded) <= waste_bound(t)
