"""Reference constructions: bit-serial Min-Mix, binary-search DMRW and exact search."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .core import ONE, ZERO, Concentration, ConcentrationError, conc, gamma, mix_value
from .graph import Configuration, GraphBuilder, MixingGraph
from .synth import DEFAULT_MAX_DROPLETS, GadgetContract, synthesize_gadget


def _check_target(t) -> Concentration:
    t = conc(t)
    if t.exp == 0:
        raise ConcentrationError("target must be strictly between 0 and 1")
    return t


def minmix(t) -> MixingGraph:
    """Mix the bits of ``t`` from least to most significant into a buffer droplet.

    Each of the ``d`` mixers leaves one droplet behind, so waste is exactly ``d``.
    """
    t = _check_target(t)
    b = GraphBuilder()
    tau = b.add_source(ZERO)
    discard = []
    for bit in reversed(t.bits()):
        tau, spare = b.add_mixer(tau, b.add_source(ONE if bit == "1" else ZERO))
        discard.append(spare)
    return b.seal(target=tau, discard=discard)


def dmrw_pivots(t) -> list[tuple[Concentration, Concentration, Concentration]]:
    """Binary-search pivots ``(m, a, b)`` with ``m = (a + b) / 2``, ending at ``t``."""
    t = _check_target(t)
    lo, hi = ZERO, ONE
    out = []
    while True:
        m = mix_value(lo, hi)
        out.append((m, lo, hi))
        if m == t:
            return out
        if t < m:
            hi = m
        else:
            lo = m


def dmrw(t) -> MixingGraph:
    """Demand-driven binary-search mixing.

    Demand for each pivot is propagated from the target towards the pure
    endpoints; a pivot needed ``n`` times is mixed ``ceil(n/2)`` times and
    the odd droplet left over is waste.
    """
    t = _check_target(t)
    pivots = dmrw_pivots(t)
    need = {t: 1}
    mixes = {}
    for m, a, b in reversed(pivots):  # precision decreases along this order
        n = need.get(m, 0)
        c = -(-n // 2)
        mixes[m] = c
        if c:
            need[a] = need.get(a, 0) + c
            need[b] = need.get(b, 0) + c
    bld = GraphBuilder()
    pool: dict[Concentration, deque] = {
        ZERO: deque(bld.add_source(ZERO) for _ in range(need.get(ZERO, 0))),
        ONE: deque(bld.add_source(ONE) for _ in range(need.get(ONE, 0))),
    }
    for m, a, b in pivots:
        q = pool.setdefault(m, deque())
        for _ in range(mixes[m]):
            q.extend(bld.add_mixer(pool[a].popleft(), pool[b].popleft()))
    target = pool[t].popleft()
    discard = [ref for q in pool.values() for ref in q]
    return bld.seal(target=target, discard=discard)


@dataclass(frozen=True)
class OptimalResult:
    waste: int | None
    graph: MixingGraph | None
    max_droplets: int

    @property
    def feasible(self) -> bool:
        return self.graph is not None


def optimal_waste(t, max_droplets: int = DEFAULT_MAX_DROPLETS,
                  max_precision: int | None = None) -> OptimalResult:
    """Least waste of any graph for ``t`` using at most ``max_droplets`` droplets.

    Intermediate values are limited to precision ``prec(t) + 1`` unless
    ``max_precision`` says otherwise.  Waste below ``gamma(t) + 1`` is
    impossible, so the search starts there.
    """
    t = _check_target(t)
    produced = Configuration([t])
    for w in range(gamma(t) + 1, max_droplets):
        g = synthesize_gadget(GadgetContract(Configuration(), produced, w,
                                             max_droplets=max_droplets,
                                             max_precision=max_precision))
        if g is not None:
            target = min(s for s in g.sinks if g.label(s) == t)
            g = g.with_target(target).with_discarded(s for s in g.sinks if s != target)
            return OptimalResult(len(g.sinks) - 1, g, max_droplets)
    return OptimalResult(None, None, max_droplets)
