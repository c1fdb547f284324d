"""Breadth-first search over droplet multisets.

A state is the multiset of droplets currently in flight, encoded as a sorted
tuple of integer numerators over a fixed denominator ``2**D``.  A move mixes
two droplets of different concentration.  The search starts from every
admissible combination of consumed droplets plus pure buffer/reactant and
stops at the first layer (fewest mixers) containing a goal state.

Search is bounded by droplet count, mixer count and the precision ``D``; an
empty answer means "nothing within bounds", not impossibility.
"""
from __future__ import annotations

import logging
import os
from collections import deque
from dataclasses import dataclass

from .core import Concentration, normalize
from .graph import Configuration, GraphBuilder, MixingGraph

log = logging.getLogger(__name__)

DEFAULT_MAX_DROPLETS = int(os.environ.get("DROPMIX_MAX_DROPLETS", "12"))


@dataclass(frozen=True)
class GadgetContract:
    """I/O contract for a gadget.

    ``consumed`` are non-pure sources the gadget couples onto; ``produced``
    are the required non-waste sinks.  At most ``waste_budget`` further sinks
    are allowed.
    """

    consumed: Configuration
    produced: Configuration
    waste_budget: int = 0
    max_droplets: int = DEFAULT_MAX_DROPLETS
    max_mixers: int = 40
    max_precision: int | None = None

    def precision(self) -> int:
        if self.max_precision is not None:
            return self.max_precision
        labels = self.consumed.labels() + self.produced.labels()
        return max((c.exp for c in labels), default=0) + 1

    def initial_states(self, D: int):
        """Yield ``(state, zeros, ones)`` for every admissible source multiset."""
        S = 1 << D
        cons = [c.num << (D - c.exp) for c in self.consumed]
        prod_mass = sum(c.num << (D - c.exp) for c in self.produced)
        n_prod = len(self.produced)
        lo = max(n_prod, len(cons))
        hi = min(n_prod + self.waste_budget, self.max_droplets)
        for n in range(lo, hi + 1):
            pure = n - len(cons)
            waste_room = (n - n_prod) * S
            for ones in range(pure + 1):
                waste_mass = sum(cons) + ones * S - prod_mass
                if 0 <= waste_mass <= waste_room:
                    zeros = pure - ones
                    yield tuple(sorted(cons + [0] * zeros + [S] * ones)), zeros, ones


def _moves(state):
    seen = set()
    n = len(state)
    for x in range(n):
        a = state[x]
        if a in seen:
            continue
        seen.add(a)
        prev = None
        for y in range(x + 1, n):
            b = state[y]
            if b == a or b == prev:
                continue
            prev = b
            if (a + b) & 1:
                continue
            yield x, y, a, b


def _apply(state, x, y, m):
    rest = list(state[:x] + state[x + 1:y] + state[y + 1:])
    rest.append(m)
    rest.append(m)
    rest.sort()
    return tuple(rest)


def _is_goal(state, need):
    return all(state.count(v) >= f for v, f in need)


def search(contract: GadgetContract):
    """Return ``(initial_state, moves, D)`` for a min-mixer witness, or None."""
    D = contract.precision()
    need = [(c.num << (D - c.exp), f) for c, f in contract.produced.items()]
    parent: dict[tuple, tuple | None] = {}
    frontier = []
    for state, _, _ in contract.initial_states(D):
        if state not in parent:
            parent[state] = None
            frontier.append(state)
    for layer in range(contract.max_mixers + 1):
        for state in frontier:
            if _is_goal(state, need):
                return _trace(parent, state), D
        if layer == contract.max_mixers:
            break
        nxt = []
        for state in frontier:
            for x, y, a, b in _moves(state):
                new = _apply(state, x, y, (a + b) >> 1)
                if new not in parent:
                    parent[new] = (state, a, b)
                    nxt.append(new)
        if not nxt:
            break
        frontier = nxt
    log.debug("no witness within bounds (%d states explored)", len(parent))
    return None


def _trace(parent, state):
    moves = []
    while parent[state] is not None:
        prev, a, b = parent[state]
        moves.append((a, b))
        state = prev
    moves.reverse()
    return state, moves


def synthesize_gadget(contract: GadgetContract) -> MixingGraph | None:
    """Min-mixer graph meeting ``contract``, or None if none exists within bounds.

    Sinks beyond ``produced`` are marked as discarded.
    """
    found = search(contract)
    if found is None:
        return None
    (initial, moves), D = found
    return replay(initial, moves, D, contract.produced)


def replay(initial, moves, D: int, produced: Configuration) -> MixingGraph:
    b = GraphBuilder()
    pools: dict[int, deque] = {}
    for v in initial:
        pools.setdefault(v, deque()).append(b.add_source(normalize(v, D)))
    for x, y in moves:
        o1, o2 = b.add_mixer(pools[x].popleft(), pools[y].popleft())
        m = (x + y) >> 1
        pools.setdefault(m, deque()).extend((o1, o2))
    need = produced.as_dict()
    discard = []
    for ref in b.open_outlets():
        c = b.label(ref)
        if need.get(c, 0) > 0:
            need[c] -= 1
        else:
            discard.append(ref)
    assert not any(need.values())
    return b.seal(discard=discard)


def is_feasible(contract: GadgetContract) -> bool:
    return search(contract) is not None
