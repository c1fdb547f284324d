"""Recursive precision reduction with initial shifting.

For a target in [1/4, 3/4] each step picks an interval ``S_k = [k/8, k/8 + 1/4]``
whose middle half contains the current value, maps it onto [0, 1] (which
lowers the precision by two) and recurses.  The graph for the reduced value
is relabelled back into ``S_k`` and fed from a converter.  Targets below 1/4
are first scaled up by ``2^p``; targets above 3/4 are mirrored.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .core import (
    ONE,
    ZERO,
    Concentration,
    ConcentrationError,
    conc,
    gamma,
    mirror_value,
    normalize,
    side,
)
from .gadgets import BASE_SET, base_graph, converter, is_converter
from .graph import MixingGraph, couple, mirror_graph, relabel_affine


@dataclass(frozen=True)
class ShiftPlan:
    t0: Concentration
    sigma: int
    gamma: int
    mirrored: bool

    @property
    def p(self) -> int:
        """Scaling exponent: the recursion runs on ``2^p`` times the (mirrored) target."""
        return self.gamma - self.sigma


def initial_shift(t) -> ShiftPlan:
    t = conc(t)
    g = gamma(t)
    where = side(t)
    if where == "middle":
        return ShiftPlan(t, g, g, False)
    u = mirror_value(t) if where == "high" else t
    x = Concentration(u.num, u.exp - g + 1)  # 2^(g-1) u, still odd numerator
    if 3 << x.exp < x.num << 3 < 4 << x.exp:
        return ShiftPlan(x, 1, g, where == "high")
    return ShiftPlan(Concentration(u.num, u.exp - g), 0, g, where == "high")


def select_interval(t) -> tuple[int, Concentration, Concentration]:
    """Smallest ``k`` with ``t`` in ``[k/8 + 1/16, k/8 + 3/16]``."""
    t = conc(t)
    if side(t) != "middle":
        raise ConcentrationError(f"{t} is outside [1/4, 3/4]")
    # 2k + 1 <= 16 t <= 2k + 3
    v16 = t.num << 4
    for k in range(1, 6):
        if (2 * k + 1) << t.exp <= v16 <= (2 * k + 3) << t.exp:
            return k, normalize(k, 3), normalize(k + 2, 3)
    raise AssertionError("unreachable")  # pragma: no cover


@dataclass(frozen=True)
class RprStep:
    t: Concentration
    k: int | None = None
    l: Concentration | None = None
    r: Concentration | None = None
    i: int | None = None
    j: int | None = None
    base: Concentration | None = None

    @property
    def is_base(self) -> bool:
        return self.base is not None

    def __str__(self):
        if self.is_base:
            return f"{self.t}: base graph"
        return f"{self.t}: k={self.k} [{self.l}, {self.r}] C{self.k}[{self.i},{self.j}]"


def _count_pure(g: MixingGraph) -> tuple[int, int]:
    src = g.source_config()
    return src.count(ZERO), src.count(ONE)


@lru_cache(maxsize=4096)
def _rpr_cached(t0: Concentration):
    return _rpr(t0)


def _rpr(t0):
    if t0 in BASE_SET:
        return base_graph(t0), (RprStep(t0, base=t0),)
    k, l, r = select_interval(t0)
    t1 = normalize(4 * t0.num - (k << (t0.exp - 1)), t0.exp)  # 4 (t0 - k/8)
    g1, steps = rpr_cached(t1)
    i, j = _count_pure(g1)
    g = couple(relabel_affine(g1, 2, 1, l), converter(k, i, j))
    return g, (RprStep(t0, k, l, r, i, j),) + steps


def rpr_cached(t0: Concentration):
    # short targets recur constantly in sweeps; long ones are unique
    if t0.exp <= 12:
        return _rpr_cached(t0)
    return _rpr(t0)


def rpr(t0) -> tuple[MixingGraph, tuple[RprStep, ...]]:
    """Graph for ``t0`` in [1/4, 3/4] with pure sources, plus its step trace."""
    t0 = conc(t0)
    if side(t0) != "middle":
        raise ConcentrationError(f"{t0} is outside [1/4, 3/4]")
    return rpr_cached(t0)


@dataclass(frozen=True)
class RprisResult:
    graph: MixingGraph
    plan: ShiftPlan
    trace: tuple[RprStep, ...]
    shift: tuple[int, int, int] | None  # (i, j, p) of the initial-shift converter

    def converters(self):
        """``(k, i, j)`` of every converter used in the recursion."""
        return [(s.k, s.i, s.j) for s in self.trace if not s.is_base]


def run_rpris(t) -> RprisResult:
    t = conc(t)
    if t.exp == 0:
        raise ConcentrationError("target must be strictly between 0 and 1")
    plan = initial_shift(t)
    g, trace = rpr_cached(plan.t0)
    shift = None
    if plan.p > 0:
        i, j = _count_pure(g)
        shift = (i, j, plan.p)
        g = couple(relabel_affine(g, plan.p, 1, ZERO), is_converter(i, j, plan.p))
    if plan.mirrored:
        g = mirror_graph(g)
    return RprisResult(_finalize(g, t), plan, trace, shift)


def _finalize(g: MixingGraph, t: Concentration) -> MixingGraph:
    # The base graph's target survives every relabel and coupling untouched
    # and keeps the smallest id among sinks labelled t.
    target = g.target
    if target is None:  # pragma: no cover
        labels = g.labels
        target = min(s for s in g.sinks if labels[s] == t)
    return g.with_target(target).with_discarded(s for s in g.sinks if s != target)


def rpris(t) -> MixingGraph:
    """Mixing graph for target ``t`` whose waste is at most :func:`waste_bound`."""
    return run_rpris(t).graph


def waste_bound(t) -> int:
    t = conc(t)
    return (t.exp + gamma(t)) // 2 + 2
