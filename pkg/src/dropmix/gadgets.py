"""Building blocks for recursive precision reduction.

Converters ``C[k](i, j)`` take pure buffer/reactant and produce ``i`` droplets
of the left endpoint ``l = k/8`` and ``j`` droplets of the right endpoint
``r = l + 1/4`` of interval ``S_k``, plus a little waste.  Small converters,
extenders and base graphs are obtained from the multiset search in
:mod:`dropmix.synth` against their I/O contracts; everything larger is
assembled by coupling.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .core import ONE, ZERO, Concentration, ConcentrationError, conc, mirror_value
from .graph import (
    Configuration,
    GraphBuilder,
    MixingGraph,
    couple,
    designate_waste,
    mirror_graph,
)
from .synth import GadgetContract, synthesize_gadget


class GadgetError(ValueError):
    pass


def endpoints(k: int) -> tuple[Concentration, Concentration]:
    if not 1 <= k <= 5:
        raise GadgetError(f"interval index {k} not in 1..5")
    return conc(f"{k}/8"), conc(f"{k + 2}/8")


@dataclass(frozen=True)
class ConverterId:
    k: int
    i: int
    j: int

    @property
    def l(self):
        return endpoints(self.k)[0]

    @property
    def r(self):
        return endpoints(self.k)[1]

    def __str__(self):
        return f"C{self.k}[{self.i},{self.j}]"


# Initial index sets J_init^k.
J_INIT = {
    2: frozenset((i, j) for i in (1, 2) for j in (1, 2)),
    3: frozenset({(i, 1) for i in range(1, 10)} | {(2, 2)}),
    1: frozenset({(i, j) for i in (1, 2, 3) for j in (1, 2, 3)} | {(4, 2), (2, 5)}),
}

# Converters that unavoidably waste two droplets (k = 4, 5 are mirrors of 2, 1).
EXCEPTIONAL = frozenset({
    (3, 1, 1),
    (1, 1, 1), (1, 1, 3), (1, 3, 2), (1, 6, 1),
    (5, 1, 1), (5, 3, 1), (5, 2, 3), (5, 1, 6),
})

# Step vectors of the two extenders per interval.
EXTENDER_STEPS = {
    2: {1: (0, 2), 2: (2, -1)},
    3: {1: (1, 1), 2: (8, 0)},
    1: {1: (3, -1), 2: (-1, 3)},
}

BASE_SET = tuple(conc(x) for x in ("1/2", "1/4", "3/4", "3/8", "5/8", "5/16", "11/16"))
_BASE_PRIMARY = tuple(conc(x) for x in ("1/2", "1/4", "3/8", "5/16"))


def _profile(k, i, j) -> Configuration:
    l, r = endpoints(k)
    return Configuration({l: i, r: j})


# --- base graphs ---------------------------------------------------------------

@lru_cache(maxsize=None)
def base_graph(t_b: Concentration) -> MixingGraph:
    """Least-waste graph for a base concentration, its first ``t_b`` sink as target."""
    t_b = conc(t_b)
    if t_b not in BASE_SET:
        raise GadgetError(f"{t_b} is not a base concentration")
    if t_b not in _BASE_PRIMARY:
        g = mirror_graph(base_graph(mirror_value(t_b)))
    else:
        g = None
        for w in range(0, 3):
            g = synthesize_gadget(GadgetContract(Configuration(), Configuration([t_b]), w,
                                                 max_droplets=3))
            if g is not None:
                break
        if g is None:
            raise GadgetError(f"no base graph for {t_b} within 3 droplets")
    target = min(s for s in g.sinks if g.label(s) == t_b)
    return g.with_target(target).with_discarded(s for s in g.sinks if s != target)


# --- extenders ---------------------------------------------------------------------

@dataclass(frozen=True)
class Extender:
    k: int
    idx: int
    graph: MixingGraph
    consumed: Configuration
    step: tuple[int, int]

    def net_effect(self) -> tuple[int, int]:
        l, r = endpoints(self.k)
        out = self.graph.output_config()
        return (out.count(l) - self.consumed.count(l), out.count(r) - self.consumed.count(r))


@lru_cache(maxsize=None)
def extender(k: int, idx: int) -> Extender:
    """Zero-waste gadget shifting an ``(i, j)`` output profile by a fixed step.

    Among all ways of consuming up to two droplets of each endpoint, the
    witness with the fewest mixers wins; ties prefer consuming less.
    """
    if k not in EXTENDER_STEPS or idx not in (1, 2):
        raise GadgetError(f"no extender X{k}_{idx}")
    di, dj = EXTENDER_STEPS[k][idx]
    l, r = endpoints(k)
    best = None
    for cl in range(3):
        for cr in range(3):
            pi, pj = cl + di, cr + dj
            if pi < 0 or pj < 0:
                continue
            consumed = Configuration({l: cl, r: cr})
            g = synthesize_gadget(GadgetContract(consumed, Configuration({l: pi, r: pj}), 0,
                                                 max_mixers=12))
            if g is None:
                continue
            key = (len(g.mixers), cl + cr, cl, cr)
            if best is None or key < best[0]:
                best = (key, g, consumed)
    if best is None:
        raise GadgetError(f"extender X{k}_{idx} not found within bounds")
    return Extender(k, idx, best[1], best[2], (di, dj))


# --- initial converters ----------------------------------------------------------------

# (k, i, j) -> waste of the directly synthesized initial converters
_SYNTHESIZED = {
    (2, 2, 1): 0, (2, 1, 2): 1,
    (3, 2, 2): 0, (3, 3, 1): 1, (3, 4, 1): 1, (3, 5, 1): 1, (3, 6, 1): 1, (3, 7, 1): 1,
    (3, 9, 1): 0,
    (1, 2, 2): 0, (1, 2, 3): 1, (1, 2, 5): 1, (1, 3, 1): 1, (1, 3, 3): 1, (1, 4, 2): 1,
}

# (k, i, j) -> (source converter, number of l outputs and r outputs to discard)
_DESIGNATED = {
    (2, 1, 1): ((2, 2, 1), 1, 0),
    (3, 1, 1): ((3, 2, 2), 1, 1),
    (3, 2, 1): ((3, 2, 2), 0, 1),
    (3, 8, 1): ((3, 9, 1), 1, 0),
    (1, 1, 1): ((1, 2, 2), 1, 1),
    (1, 1, 2): ((1, 2, 2), 1, 0),
    (1, 2, 1): ((1, 2, 2), 0, 1),
    (1, 1, 3): ((1, 2, 3), 1, 0),
    (1, 3, 2): ((1, 4, 2), 1, 0),
}


@lru_cache(maxsize=None)
def initial_converter(k: int, i: int, j: int) -> MixingGraph:
    if k not in J_INIT or (i, j) not in J_INIT[k]:
        raise GadgetError(f"({i}, {j}) is not an initial index pair for k={k}")
    key = (k, i, j)
    l, r = endpoints(k)
    if key in _SYNTHESIZED:
        g = synthesize_gadget(GadgetContract(Configuration(), _profile(k, i, j), _SYNTHESIZED[key]))
        if g is None:
            raise GadgetError(f"initial converter {ConverterId(*key)} not found within bounds")
        return g
    if key in _DESIGNATED:
        (k0, i0, j0), wl, wr = _DESIGNATED[key]
        g = initial_converter(k0, i0, j0)
        if wl:
            g = designate_waste(g, l, wl)
        if wr:
            g = designate_waste(g, r, wr)
        return g
    # C2[2,2]: X2_1 next to C2[2,1], one 1/2 designated as waste
    g = couple(extender(2, 1).graph, initial_converter(2, 2, 1))
    return designate_waste(g, r, 1)


# --- decomposition ---------------------------------------------------------------------

@dataclass(frozen=True)
class Decomposition:
    base: tuple[int, int]
    phi: int
    psi: int
    coupling_order: tuple[int, ...]


def _ceil_half(x):
    return -(-x // 2)


_K1_BASES = ((1, 2), (2, 1), (2, 2), (2, 3), (3, 1), (3, 3), (4, 2), (2, 5))


def decompose(k: int, i: int, j: int) -> Decomposition:
    """Express ``(i, j)`` as an initial pair plus extender steps.

    k=2: ``phi`` counts X_1 = (0, 2), ``psi`` counts X_2 = (2, -1).
    k=3: ``phi`` counts X_1 = (1, 1), ``psi`` counts X_2 = (8, 0).
    k=1: ``phi`` counts X_2 = (-1, 3), ``psi`` counts X_1 = (3, -1).
    """
    if i < 1 or j < 1:
        raise GadgetError("converter indices must be >= 1")
    if k not in J_INIT:
        raise GadgetError(f"decomposition is defined for k in 1..3, got {k}")
    if (i, j) in J_INIT[k]:
        raise GadgetError(f"({i}, {j}) is an initial pair for k={k}")
    if k == 2:
        psi = _ceil_half(i) - 1
        phi = _ceil_half(j + psi) - 1
        base = (i - 2 * psi, j - 2 * phi + psi)
        return Decomposition(base, phi, psi, (1,) * phi + (2,) * psi)
    if k == 3:
        if i < j:
            raise GadgetError("k=3 decomposition needs i >= j")
        if i == j:
            return Decomposition((2, 2), i - 2, 0, (1,) * (i - 2))
        i0 = (i - j - 1) % 8 + 2
        psi = (i - j + 1 - i0) // 8
        phi = j - 1
        return Decomposition((i0, 1), phi, psi, (1,) * phi + (2,) * psi)
    if (i, j) == (6, 1):
        raise GadgetError("C1[6,1] has no decomposition; it is X1_1 . C1[3,2]")
    for bi, bj in _K1_BASES:
        di, dj = i - bi, j - bj
        phi8, psi8 = di + 3 * dj, 3 * di + dj
        if phi8 % 8 or psi8 % 8 or phi8 < 0 or psi8 < 0:
            continue
        phi, psi = phi8 // 8, psi8 // 8
        return Decomposition((bi, bj), phi, psi, _k1_order(bi, bj, phi, psi))
    raise GadgetError(f"no decomposition for C1[{i},{j}]")  # pragma: no cover


def _k1_order(i, j, n_x2, n_x1):
    # X1_1 = (+3, -1) needs j >= 2, X1_2 = (-1, +3) needs i >= 2
    order = []
    while n_x1 or n_x2:
        if n_x1 and j >= 2:
            order.append(1)
            i, j, n_x1 = i + 3, j - 1, n_x1 - 1
        elif n_x2 and i >= 2:
            order.append(2)
            i, j, n_x2 = i - 1, j + 3, n_x2 - 1
        else:  # pragma: no cover - unreachable from an admissible base
            raise GadgetError("no admissible coupling order")
    return tuple(order)


# --- converters ------------------------------------------------------------------------

@lru_cache(maxsize=None)
def converter(k: int, i: int, j: int) -> MixingGraph:
    """An ``(i:l, j:r)``-converter for interval ``S_k`` with pure sources."""
    if i < 1 or j < 1:
        raise GadgetError("converter indices must be >= 1")
    if k == 4:
        return mirror_graph(converter(2, j, i))
    if k == 5:
        return mirror_graph(converter(1, j, i))
    if k == 3 and i < j:
        return mirror_graph(converter(3, j, i))
    if k not in J_INIT:
        raise GadgetError(f"interval index {k} not in 1..5")
    if (i, j) in J_INIT[k]:
        return initial_converter(k, i, j)
    if k == 1 and (i, j) == (6, 1):
        return couple(extender(1, 1).graph, converter(1, 3, 2))
    dec = decompose(k, i, j)
    g = initial_converter(k, *dec.base)
    for idx in dec.coupling_order:
        g = couple(extender(k, idx).graph, g)
    return g


def converter_waste(k: int, i: int, j: int) -> int:
    g = converter(k, i, j)
    return len(g.sinks) - i - j


def is_exceptional(k: int, i: int, j: int) -> bool:
    return (k, i, j) in EXCEPTIONAL


# --- initial-shift converter --------------------------------------------------------------

def is_converter(i: int, j: int, p: int) -> MixingGraph:
    """``(i:0, j:1/2^p)``-converter: halve reactant against buffer ``p`` times.

    After ``z`` rounds ``ceil(j / 2**(p - z))`` droplets of ``1/2^z`` are
    kept; each round discards at most one droplet.
    """
    if i < 0 or j < 1 or p < 1:
        raise GadgetError("is_converter needs i >= 0, j >= 1, p >= 1")
    b = GraphBuilder()
    for _ in range(i):
        b.add_source(ZERO)
    cur = [b.add_source(ONE) for _ in range(-(-j >> p))]
    discard = []
    for z in range(p):
        nxt = []
        for ref in cur:
            nxt.extend(b.add_mixer(ref, b.add_source(ZERO)))
        keep = -(-j >> (p - z - 1))
        discard.extend(nxt[keep:])
        cur = nxt[:keep]
    return b.seal(discard=discard)


def is_schedule(j: int, p: int) -> list[int]:
    """Kept droplet counts ``j_0 .. j_p`` of :func:`is_converter`."""
    return [-(-j >> (p - z)) for z in range(p + 1)]


def check_profile(g: MixingGraph, k: int, i: int, j: int) -> bool:
    """True iff the non-waste sinks of ``g`` are exactly ``{i:l, j:r}``."""
    try:
        return g.output_config() == _profile(k, i, j)
    except ConcentrationError:
        return False
