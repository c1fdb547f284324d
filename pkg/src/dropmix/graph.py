"""Droplet-level mixing graphs.

Nodes are sources (dispensers), 1-1 mixers and sinks (collectors).  A graph
stores its structure and its source labels; every other label is obtained by
simulation, so a graph can never carry stale concentrations.  Graphs are
immutable once sealed and may share internal tables with graphs derived from
them.
"""
from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple

from .core import (
    ONE,
    ZERO,
    Concentration,
    ConcentrationError,
    affine,
    mix_value,
    normalize,
)

SOURCE = "source"
MIXER = "mixer"
SINK = "sink"


class GraphError(ValueError):
    """Structural misuse of a builder or a malformed graph description."""


class Configuration:
    """Immutable multiset of concentrations."""

    __slots__ = ("_items", "_hash")

    def __init__(self, entries=()):
        counts: dict[Concentration, int] = {}
        if isinstance(entries, Configuration):
            counts = dict(entries._items)
        elif isinstance(entries, dict):
            for c, f in entries.items():
                if f < 0:
                    raise ValueError(f"negative multiplicity for {c}")
                if f:
                    counts[c] = counts.get(c, 0) + f
        else:
            for c in entries:
                counts[c] = counts.get(c, 0) + 1
        self._items = tuple(sorted(counts.items()))
        self._hash = None

    @classmethod
    def of(cls, *pairs) -> "Configuration":
        """``Configuration.of((2, c1), (1, c2))``, i.e. ``{2:c1, c2}``."""
        return cls({c: f for f, c in pairs})

    def items(self):
        return self._items

    def count(self, c: Concentration) -> int:
        for k, f in self._items:
            if k == c:
                return f
        return 0

    def __getitem__(self, c):
        return self.count(c)

    def __iter__(self) -> Iterator[Concentration]:
        for c, f in self._items:
            for _ in range(f):
                yield c

    def __len__(self):
        return sum(f for _, f in self._items)

    @property
    def total(self) -> int:
        return len(self)

    def labels(self):
        return [c for c, _ in self._items]

    def mass(self):
        """Sum of concentrations as an exact Fraction."""
        return sum((c.to_fraction() * f for c, f in self._items), start=0)

    def as_dict(self) -> dict[Concentration, int]:
        return dict(self._items)

    def __add__(self, other: "Configuration") -> "Configuration":
        d = self.as_dict()
        for c, f in other._items:
            d[c] = d.get(c, 0) + f
        return Configuration(d)

    def __sub__(self, other: "Configuration") -> "Configuration":
        d = self.as_dict()
        for c, f in other._items:
            left = d.get(c, 0) - f
            if left < 0:
                raise ValueError(f"cannot remove {f} x {c}")
            d[c] = left
        return Configuration(d)

    def contains(self, other: "Configuration") -> bool:
        mine = dict(self._items)
        return all(mine.get(c, 0) >= f for c, f in other._items)

    def __eq__(self, other):
        if isinstance(other, Configuration):
            return self._items == other._items
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self._items)
        return self._hash

    def __str__(self):
        parts = [str(c) if f == 1 else f"{f}:{c}" for c, f in self._items]
        return "{" + ", ".join(parts) + "}"

    __repr__ = __str__


class MixingGraph:
    """A sealed mixing graph.

    ``target`` is an optional sink id; ``discarded`` holds sinks explicitly
    designated as waste (used by gadgets to mark non-output sinks).
    ``claimed`` optionally records labels asserted by an external description
    (e.g. a JSON file) so that :func:`validate` can compare them with the
    simulated ones.
    """

    __slots__ = ("_kind", "_preds", "_succs", "_src", "target", "discarded", "claimed", "_labels")

    def __init__(self, kind, preds, succs, src, target=None, discarded=frozenset(), claimed=None, labels=None):
        self._kind: dict[int, str] = kind
        self._preds: dict[int, tuple[int, ...]] = preds
        self._succs: dict[int, tuple[int, ...]] = succs
        self._src: dict[int, Concentration] = src
        self.target: int | None = target
        self.discarded: frozenset[int] = frozenset(discarded)
        self.claimed: dict[int, Concentration] | None = claimed
        self._labels: dict[int, Concentration] | None = labels

    # --- structure -------------------------------------------------------
    @property
    def nodes(self) -> list[int]:
        return sorted(self._kind)

    def __len__(self):
        return len(self._kind)

    def kind(self, n: int) -> str:
        return self._kind[n]

    def preds(self, n: int) -> tuple[int, ...]:
        return self._preds[n]

    def succs(self, n: int) -> tuple[int, ...]:
        return self._succs[n]

    def _of_kind(self, k):
        return sorted(n for n, kk in self._kind.items() if kk == k)

    @property
    def sources(self) -> list[int]:
        return sorted(self._src)

    @property
    def mixers(self) -> list[int]:
        return self._of_kind(MIXER)

    @property
    def sinks(self) -> list[int]:
        return self._of_kind(SINK)

    @property
    def outputs(self) -> list[int]:
        """Sinks that are not designated waste."""
        return [s for s in self.sinks if s not in self.discarded]

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for v in self.nodes for u in self._preds[v]]

    def source_label(self, n: int) -> Concentration:
        return self._src[n]

    # --- labels ----------------------------------------------------------
    @property
    def labels(self) -> dict[int, Concentration]:
        if self._labels is None:
            self._labels = simulate(self)
        return self._labels

    def label(self, n: int) -> Concentration:
        return self.labels[n]

    def source_config(self) -> Configuration:
        return Configuration(self._src.values())

    def sink_config(self) -> Configuration:
        lab = self.labels
        return Configuration(lab[s] for s in self.sinks)

    def output_config(self) -> Configuration:
        lab = self.labels
        return Configuration(lab[s] for s in self.outputs)

    def waste_config(self) -> Configuration:
        lab = self.labels
        return Configuration(lab[s] for s in self.sinks if s != self.target)

    # --- derived graphs --------------------------------------------------
    def with_target(self, target: int | None) -> "MixingGraph":
        return MixingGraph(self._kind, self._preds, self._succs, self._src, target,
                           self.discarded - {target}, self.claimed, self._labels)

    def with_discarded(self, discarded: Iterable[int]) -> "MixingGraph":
        return MixingGraph(self._kind, self._preds, self._succs, self._src, self.target,
                           frozenset(discarded), self.claimed, self._labels)

    def __eq__(self, other):
        if not isinstance(other, MixingGraph):
            return NotImplemented
        return (self._kind == other._kind and self._preds == other._preds
                and self._src == other._src and self.target == other.target
                and self.discarded == other.discarded)

    __hash__ = None

    def __repr__(self):
        return (f"MixingGraph(sources={len(self._src)}, mixers={len(self.mixers)}, "
                f"sinks={len(self.sinks)}, target={self.target})")


def simulate(g: MixingGraph) -> dict[int, Concentration]:
    """Propagate source labels through the graph (ignores any claimed labels)."""
    labels: dict[int, Concentration] = dict(g._src)
    kind, preds, succs = g._kind, g._preds, g._succs
    waiting = {n: len(p) for n, p in preds.items()}
    ready = list(g._src)
    while ready:
        n = ready.pop()
        for v in succs[n]:
            waiting[v] -= 1
            if waiting[v] == 0:
                p = preds[v]
                if kind[v] == MIXER:
                    labels[v] = mix_value(labels[p[0]], labels[p[1]])
                else:
                    labels[v] = labels[p[0]]
                ready.append(v)
    if len(labels) != len(kind):
        raise GraphError("graph has a cycle or unreachable nodes")
    return labels


class GraphBuilder:
    """Incremental construction of a mixing graph.

    Outlets are ``(node, port)`` pairs; sources have port 0 only, mixers ports
    0 and 1.  Each outlet is consumed at most once; whatever is left open when
    :meth:`seal` is called becomes a sink.
    """

    def __init__(self, sources: Iterable[Concentration] | Configuration = ()):
        self._kind: dict[int, str] = {}
        self._preds: dict[int, tuple[int, ...]] = {}
        self._src: dict[int, Concentration] = {}
        self._label: dict[int, Concentration] = {}
        self._open: dict[tuple[int, int], None] = {}
        self._consumer: dict[tuple[int, int], int] = {}
        self.sink_of: dict[tuple[int, int], int] = {}
        self._sealed = False
        for c in sources:
            self.add_source(c)

    def _new(self, kind, preds, label):
        n = len(self._kind)
        self._kind[n] = kind
        self._preds[n] = preds
        self._label[n] = label
        return n

    def add_source(self, label: Concentration) -> tuple[int, int]:
        n = self._new(SOURCE, (), label)
        self._src[n] = label
        self._open[(n, 0)] = None
        return (n, 0)

    def label(self, ref: tuple[int, int]) -> Concentration:
        return self._label[ref[0]]

    def open_outlets(self) -> list[tuple[int, int]]:
        return list(self._open)

    def add_mixer(self, in1: tuple[int, int], in2: tuple[int, int]):
        if self._sealed:
            raise GraphError("builder already sealed")
        if in1 == in2:
            raise GraphError(f"outlet {in1} used for both inlets")
        for ref in (in1, in2):
            if ref not in self._open:
                if ref in self._consumer:
                    raise GraphError(f"outlet {ref} consumed twice")
                raise GraphError(f"unknown outlet {ref}")
        del self._open[in1], self._open[in2]
        m = self._new(MIXER, (in1[0], in2[0]), mix_value(self._label[in1[0]], self._label[in2[0]]))
        self._consumer[in1] = m
        self._consumer[in2] = m
        self._open[(m, 0)] = None
        self._open[(m, 1)] = None
        return (m, 0), (m, 1)

    def seal(self, target=None, discard=()) -> MixingGraph:
        """Turn open outlets into sinks.  ``target``/``discard`` name outlets."""
        if self._sealed:
            raise GraphError("builder already sealed")
        if not self._src:
            raise GraphError("a mixing graph needs at least one source")
        self._sealed = True
        for ref in list(self._open):
            s = self._new(SINK, (ref[0],), self._label[ref[0]])
            self.sink_of[ref] = s
        succs: dict[int, list[int]] = {n: [] for n in self._kind}
        for v, p in self._preds.items():
            for u in p:
                succs[u].append(v)
        tgt = self.sink_of[target] if target is not None else None
        disc = frozenset(self.sink_of[r] for r in discard)
        return MixingGraph(self._kind, self._preds, {n: tuple(s) for n, s in succs.items()},
                           self._src, tgt, disc, None, dict(self._label))


def build(sources) -> GraphBuilder:
    return GraphBuilder(sources)


def pure_sources(zeros: int, ones: int) -> list[Concentration]:
    return [ZERO] * zeros + [ONE] * ones


# --- coupling ----------------------------------------------------------------

def couple(g2: MixingGraph, g1: MixingGraph) -> MixingGraph:
    """``g2 . g1``: feed sinks of ``g1`` into equally labelled sources of ``g2``.

    Per label, ``min`` of the two multiplicities is matched.  Non-discarded
    sinks of ``g1`` are matched before discarded ones; ties go to the smallest
    node id.  ``g2`` keeps its node ids, ``g1`` is shifted past them.
    """
    lab1 = g1.labels
    by_label_sinks: dict[Concentration, list[int]] = defaultdict(list)
    for s in sorted(g1.sinks, key=lambda s: (s in g1.discarded, s)):
        by_label_sinks[lab1[s]].append(s)
    by_label_srcs: dict[Concentration, list[int]] = defaultdict(list)
    for s in sorted(g2._src):
        by_label_srcs[g2._src[s]].append(s)

    off = (max(g2._kind) + 1) if g2._kind else 0
    kind = dict(g2._kind)
    preds = dict(g2._preds)
    succs = dict(g2._succs)
    src = dict(g2._src)
    for n, k in g1._kind.items():
        kind[n + off] = k
        preds[n + off] = tuple(u + off for u in g1._preds[n])
        succs[n + off] = tuple(v + off for v in g1._succs[n])
    for n, c in g1._src.items():
        src[n + off] = c

    discarded = set(g2.discarded)
    discarded.update(s + off for s in g1.discarded)
    for a in sorted(by_label_sinks.keys() & by_label_srcs.keys()):
        for t1, s2 in zip(by_label_sinks[a], by_label_srcs[a]):
            t1o = t1 + off
            (u1,) = preds[t1o]
            (v2,) = succs[s2]
            del kind[t1o], preds[t1o], succs[t1o], kind[s2], preds[s2], succs[s2], src[s2]
            discarded.discard(t1o)
            preds[v2] = _replace_one(preds[v2], s2, u1)
            succs[u1] = _replace_one(succs[u1], t1o, v2)

    target = g2.target
    if target is None and g1.target is not None and g1.target + off in kind:
        target = g1.target + off
    return MixingGraph(kind, preds, succs, src, target, frozenset(discarded))


def _replace_one(seq, old, new):
    i = seq.index(old)
    return seq[:i] + (new,) + seq[i + 1:]


def relabel_affine(g: MixingGraph, beta_exp: int, beta_sign: int, alpha: Concentration) -> MixingGraph:
    """Apply ``c -> alpha + beta_sign * c / 2**beta_exp`` to every label.

    Labels are convex combinations of source labels and the map is affine, so
    checking the sources suffices for the [0, 1] range check.
    """
    if beta_sign not in (1, -1):
        raise ValueError("beta_sign must be +1 or -1")
    try:
        src = {n: affine(c, beta_exp, beta_sign, alpha) for n, c in g._src.items()}
        claimed = None if g.claimed is None else {
            n: affine(c, beta_exp, beta_sign, alpha) for n, c in g.claimed.items()}
    except ConcentrationError as exc:
        raise ConcentrationError(f"relabel image leaves [0, 1]: {exc}") from None
    return MixingGraph(g._kind, g._preds, g._succs, src, g.target, g.discarded, claimed)


def mirror_graph(g: MixingGraph) -> MixingGraph:
    return relabel_affine(g, 0, -1, ONE)


def designate_waste(g: MixingGraph, label: Concentration, count: int = 1) -> MixingGraph:
    """Mark the ``count`` highest-id outputs labelled ``label`` as waste."""
    lab = g.labels
    cands = [s for s in g.outputs if lab[s] == label]
    if len(cands) < count:
        raise GraphError(f"only {len(cands)} outputs labelled {label}")
    return g.with_discarded(g.discarded | set(cands[len(cands) - count:]))


# --- validation ----------------------------------------------------------------

@dataclass
class ValidationReport:
    ok: bool
    violations: list[str] = field(default_factory=list)

    @property
    def first(self) -> str | None:
        return self.violations[0] if self.violations else None

    def __bool__(self):
        return self.ok


def validate(g: MixingGraph) -> ValidationReport:
    """Re-simulate labels and check every structural invariant."""
    v: list[str] = []
    kind, preds, succs = g._kind, g._preds, g._succs
    if not kind:
        return ValidationReport(False, ["empty graph"])
    for n, k in kind.items():
        p, s = preds.get(n, ()), succs.get(n, ())
        for u in p:
            if u not in kind or n not in succs.get(u, ()):
                v.append(f"edge mismatch: {u}->{n}")
        for w in s:
            if w not in kind or n not in preds.get(w, ()):
                v.append(f"edge mismatch: {n}->{w}")
        if k == SOURCE:
            if p or len(s) != 1 or n not in g._src:
                v.append(f"degree: source {n} has in={len(p)} out={len(s)}")
        elif k == MIXER:
            if len(p) != 2 or len(s) != 2:
                v.append(f"degree: mixer {n} has in={len(p)} out={len(s)}")
        elif k == SINK:
            if len(p) != 1 or s:
                v.append(f"degree: sink {n} has in={len(p)} out={len(s)}")
        else:
            v.append(f"unknown node kind {k!r} at {n}")
    if v:
        return ValidationReport(False, v)
    for n, c in g._src.items():
        if not (0 <= c.num <= 1 << c.exp):
            v.append(f"source {n} label {c} outside [0, 1]")
    try:
        labels = simulate(g)
    except GraphError:
        return ValidationReport(False, v + ["cycle: graph is not acyclic"])
    if g.claimed:
        for n, c in sorted(g.claimed.items()):
            if n in labels and labels[n] != c:
                v.append(f"label mismatch at node {n}: claimed {c}, simulated {labels[n]}")
    sinks = [n for n, k in kind.items() if k == SINK]
    if len(sinks) != len(g._src):
        v.append(f"droplet conservation: {len(g._src)} sources vs {len(sinks)} sinks")
    else:
        src_mass = sum(c.to_fraction() for c in g._src.values())
        sink_mass = sum(labels[s].to_fraction() for s in sinks)
        if src_mass != sink_mass:
            v.append(f"mass conservation: sources {src_mass} vs sinks {sink_mass}")
    if g.target is not None and kind.get(g.target) != SINK:
        v.append(f"target {g.target} is not a sink")
    if g.target is not None and g.target in g.discarded:
        v.append("target is designated waste")
    for s in g.discarded:
        if kind.get(s) != SINK:
            v.append(f"discarded node {s} is not a sink")
    if not v and g._labels is None:
        g._labels = labels
    return ValidationReport(not v, v)


# --- statistics ----------------------------------------------------------------

@dataclass(frozen=True)
class GraphStats:
    sources: Configuration
    sinks: Configuration
    waste_count: int
    reactant_count: int
    buffer_count: int
    mixer_count: int
    depth: int
    node_count: int


def depth(g: MixingGraph) -> int:
    """Longest source-to-sink path, counted in mixers."""
    kind, preds, succs = g._kind, g._preds, g._succs
    level = dict.fromkeys(g._src, 0)
    waiting = {n: len(p) for n, p in preds.items()}
    ready = list(g._src)
    best = 0
    while ready:
        for v in succs[ready.pop()]:
            w = waiting[v] - 1
            waiting[v] = w
            if w:
                continue
            p = preds[v]
            if kind[v] == MIXER:
                a, b = level[p[0]], level[p[1]]
                level[v] = (a if a > b else b) + 1
                ready.append(v)
            elif level[p[0]] > best:
                best = level[p[0]]
    return best


class GraphSummary(NamedTuple):
    """Label-free counts, cheap enough for exhaustive sweeps."""

    waste: int
    reactant: int
    buffer: int
    mixers: int
    depth: int
    nodes: int


def summary(g: MixingGraph) -> GraphSummary:
    src = list(g._src.values())
    kinds = list(g._kind.values())
    return GraphSummary(
        kinds.count(SINK) - (g.target is not None),
        src.count(ONE),
        src.count(ZERO),
        kinds.count(MIXER),
        depth(g),
        len(kinds),
    )


def stats(g: MixingGraph, check: bool = True) -> GraphStats:
    if check:
        rep = validate(g)
        if not rep:
            raise GraphError(f"invalid graph: {rep.first}")
    src = g._src.values()
    reactant = sum(1 for c in src if c == ONE)
    buffer = sum(1 for c in src if c == ZERO)
    kinds = list(g._kind.values())
    n_sinks = kinds.count(SINK)
    return GraphStats(
        sources=g.source_config(),
        sinks=g.sink_config(),
        waste_count=n_sinks - (1 if g.target is not None else 0),
        reactant_count=reactant,
        buffer_count=buffer,
        mixer_count=kinds.count(MIXER),
        depth=depth(g),
        node_count=len(kinds),
    )


# --- serialization ----------------------------------------------------------------

def to_json(g: MixingGraph, indent: int | None = 1) -> str:
    lab = g.labels
    doc = {
        "sources": [{"id": n, "num": c.num, "exp": c.exp} for n, c in sorted(g._src.items())],
        "mixers": [{"id": n, "in": list(g._preds[n]), "num": lab[n].num, "exp": lab[n].exp}
                   for n in g.mixers],
        "sinks": [{"id": n, "in": g._preds[n][0], "waste": n in g.discarded,
                   "num": lab[n].num, "exp": lab[n].exp} for n in g.sinks],
        "target": g.target,
    }
    return json.dumps(doc, indent=indent)


def from_json(text: str) -> MixingGraph:
    """Parse the JSON form.  Stored mixer/sink labels become ``claimed`` only."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphError(f"malformed JSON: {exc}") from None
    if not isinstance(doc, dict) or not {"sources", "mixers", "sinks"} <= doc.keys():
        raise GraphError("schema mismatch: expected sources, mixers and sinks")
    kind: dict[int, str] = {}
    preds: dict[int, tuple[int, ...]] = {}
    src: dict[int, Concentration] = {}
    claimed: dict[int, Concentration] = {}
    discarded = set()
    try:
        for s in doc["sources"]:
            n = int(s["id"])
            _fresh(kind, n)
            kind[n], preds[n] = SOURCE, ()
            src[n] = normalize(int(s["num"]), int(s["exp"]))
        for m in doc["mixers"]:
            n = int(m["id"])
            _fresh(kind, n)
            ins = m["in"]
            if not isinstance(ins, list) or len(ins) != 2:
                raise GraphError(f"mixer {n} needs exactly two inlets")
            kind[n], preds[n] = MIXER, (int(ins[0]), int(ins[1]))
            if "num" in m:
                claimed[n] = normalize(int(m["num"]), int(m["exp"]))
        for s in doc["sinks"]:
            n = int(s["id"])
            _fresh(kind, n)
            kind[n], preds[n] = SINK, (int(s["in"]),)
            if s.get("waste"):
                discarded.add(n)
            if "num" in s:
                claimed[n] = normalize(int(s["num"]), int(s["exp"]))
        target = doc.get("target")
        target = None if target is None else int(target)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, GraphError):
            raise
        raise GraphError(f"schema mismatch: {exc}") from None
    succs: dict[int, list[int]] = {n: [] for n in kind}
    for v, p in preds.items():
        for u in p:
            if u not in succs:
                raise GraphError(f"schema mismatch: node {v} references unknown node {u}")
            succs[u].append(v)
    return MixingGraph(kind, preds, {n: tuple(s) for n, s in succs.items()}, src,
                       target, frozenset(discarded), claimed or None)


def _fresh(kind, n):
    if n in kind:
        raise GraphError(f"schema mismatch: duplicate node id {n}")


def to_dot(g: MixingGraph, name: str = "mixing") -> str:
    lab = g.labels
    lines = [f"digraph {name} {{", "  rankdir=TB;"]
    for n in g.nodes:
        k = g._kind[n]
        text = str(lab[n])
        if k == SOURCE:
            attrs = f'shape=box, label="{text}"'
        elif k == MIXER:
            attrs = f'shape=circle, label="{text}"'
        elif n == g.target:
            attrs = f'shape=doublecircle, label="{text}"'
        elif g.target is not None or n in g.discarded:
            attrs = f'shape=point, xlabel="w {text}"'
        else:
            attrs = f'shape=invtriangle, label="{text}"'
        lines.append(f"  n{n} [{attrs}];")
    for u, v in g.edges:
        lines.append(f"  n{u} -> n{v};")
    lines.append("}")
    return "\n".join(lines) + "\n"
