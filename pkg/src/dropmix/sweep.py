"""Exhaustive per-precision comparison of dilution algorithms."""
from __future__ import annotations

import io
from concurrent.futures import ProcessPoolExecutor
from itertools import combinations
from typing import Callable, Iterable, NamedTuple

from .baselines import dmrw, minmix, optimal_waste
from .core import Concentration, all_targets, gamma
from .graph import GraphError, MixingGraph, summary
from .rpris import rpris


def _optimal(t: Concentration) -> MixingGraph:
    res = optimal_waste(t)
    if res.graph is None:
        raise GraphError(f"no graph for {t} within {res.max_droplets} droplets")
    return res.graph


ALGORITHMS: dict[str, Callable[[Concentration], MixingGraph]] = {
    "dmrw": dmrw,
    "minmix": minmix,
    "optimal": _optimal,
    "rpris": rpris,
}

FIELDS = ("numerator", "precision", "gamma", "algorithm", "waste", "reactant", "buffer", "mixers", "depth")


class SweepRecord(NamedTuple):
    numerator: int
    precision: int
    gamma: int
    algorithm: str
    waste: int
    reactant: int
    buffer: int
    mixers: int
    depth: int

    def csv(self) -> str:
        return ",".join(str(v) for v in self)


def record(t: Concentration, algo: str, g: MixingGraph | None = None) -> SweepRecord:
    if g is None:
        g = ALGORITHMS[algo](t)
    s = summary(g)
    return SweepRecord(t.num, t.exp, gamma(t), algo, s.waste, s.reactant, s.buffer, s.mixers, s.depth)


def _rows_for(args):
    num, d, algos = args
    t = Concentration(num, d)
    return [record(t, a) for a in algos]


def _check_algos(algos: Iterable[str]) -> list[str]:
    algos = sorted(set(algos))
    unknown = [a for a in algos if a not in ALGORITHMS]
    if unknown:
        raise ValueError(f"unknown algorithm(s): {', '.join(unknown)}")
    if not algos:
        raise ValueError("no algorithms selected")
    return algos


def sweep(d: int, algos: Iterable[str], jobs: int = 1) -> list[SweepRecord]:
    """All records for precision ``d``, ordered by numerator then algorithm."""
    if d < 1:
        raise ValueError("precision must be >= 1")
    algos = _check_algos(algos)
    work = [(t.num, d, algos) for t in all_targets(d)]
    if jobs <= 1:
        chunks = map(_rows_for, work)
        return [r for rows in chunks for r in rows]
    with ProcessPoolExecutor(jobs) as pool:
        # map() yields in submission order, so the output stays canonical
        chunks = pool.map(_rows_for, work, chunksize=max(1, len(work) // (jobs * 16)))
        return [r for rows in chunks for r in rows]


class Comparison(NamedTuple):
    a: str
    b: str
    wins: int  # a strictly less waste than b
    losses: int
    ties: int

    @property
    def loss_fraction(self) -> float:
        n = self.wins + self.losses + self.ties
        return self.losses / n if n else 0.0


def mean_waste(records: list[SweepRecord]) -> dict[str, float]:
    tot: dict[str, list[int]] = {}
    for r in records:
        acc = tot.setdefault(r.algorithm, [0, 0])
        acc[0] += r.waste
        acc[1] += 1
    return {a: s / n for a, (s, n) in sorted(tot.items())}


def compare(records: list[SweepRecord]) -> list[Comparison]:
    by_target: dict[int, dict[str, int]] = {}
    for r in records:
        by_target.setdefault(r.numerator, {})[r.algorithm] = r.waste
    algos = sorted({r.algorithm for r in records})
    out = []
    for a, b in combinations(algos, 2):
        w = l = t = 0
        for wastes in by_target.values():
            x, y = wastes[a], wastes[b]
            if x < y:
                w += 1
            elif x > y:
                l += 1
            else:
                t += 1
        out.append(Comparison(a, b, w, l, t))
    return out


def render_csv(records: list[SweepRecord]) -> str:
    """CSV body plus ``#``-prefixed footer lines; LF line endings throughout."""
    buf = io.StringIO()
    buf.write(",".join(FIELDS) + "\n")
    for r in records:
        buf.write(r.csv() + "\n")
    for a, m in mean_waste(records).items():
        buf.write(f"# mean_waste,{a},{m:.6f}\n")
    for c in compare(records):
        buf.write(f"# compare,{c.a},{c.b},wins={c.wins},losses={c.losses},ties={c.ties}\n")
    return buf.getvalue()


def parse_csv(text: str) -> list[SweepRecord]:
    lines = [ln for ln in text.split("\n") if ln and not ln.startswith("#")]
    if not lines or lines[0] != ",".join(FIELDS):
        raise ValueError("missing or unexpected CSV header")
    out = []
    for ln in lines[1:]:
        v = ln.split(",")
        out.append(SweepRecord(int(v[0]), int(v[1]), int(v[2]), v[3], *map(int, v[4:])))
    return out
