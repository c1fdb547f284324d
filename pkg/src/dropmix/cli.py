"""``dropmix`` command line.

Exit codes: 0 success, 1 I/O error, 2 bad input or validation failure,
3 malformed graph file (``verify``), 4 no witness within search bounds.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import sweep as sw
from .baselines import optimal_waste
from .core import ConcentrationError, conc, parse_target
from .graph import Configuration, GraphError, from_json, stats, to_dot, to_json, validate
from .rpris import run_rpris
from .synth import DEFAULT_MAX_DROPLETS, GadgetContract, synthesize_gadget

EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_SCHEMA, EXIT_INFEASIBLE = 0, 1, 2, 3, 4

log = logging.getLogger("dropmix")


class _Fail(Exception):
    def __init__(self, code, msg):
        super().__init__(msg)
        self.code = code


def _write(path: str, text: str):
    try:
        if path == "-":
            sys.stdout.write(text)
        else:
            Path(path).write_text(text, encoding="utf-8", newline="\n")
    except OSError as exc:
        raise _Fail(EXIT_IO, f"cannot write {path}: {exc}") from None


def _emit_graph(g, args):
    if args.dot:
        _write(args.dot, to_dot(g))
    if args.json:
        _write(args.json, to_json(g) + "\n")


def cmd_synth(args) -> int:
    try:
        t = parse_target(args.target)
        if t.exp == 0:
            raise ConcentrationError("target must be strictly between 0 and 1")
    except ConcentrationError as exc:
        raise _Fail(EXIT_INVALID, str(exc)) from None
    trace = None
    if args.algo == "rpris":
        res = run_rpris(t)
        g, trace = res.graph, res
    elif args.algo == "optimal":
        res = optimal_waste(t, args.max_droplets)
        if not res.feasible:
            raise _Fail(EXIT_INFEASIBLE, f"no graph for {t} within {args.max_droplets} droplets")
        g = res.graph
    else:
        g = sw.ALGORITHMS[args.algo](t)
    rep = validate(g)
    if not rep:
        raise _Fail(EXIT_INVALID, f"internal error, graph invalid: {rep.first}")
    _emit_graph(g, args)
    if args.trace and trace is not None:
        plan = trace.plan
        print(f"# shift t0={plan.t0} gamma={plan.gamma} sigma={plan.sigma} mirrored={plan.mirrored}")
        for s in trace.trace:
            if s.is_base:
                print(f"{s.t} base")
            else:
                print(f"{s.t} {s.k} {s.i} {s.j}")
        if trace.shift:
            i, j, p = trace.shift
            print(f"# initial-shift converter i={i} j={j} p={p}")
    rec = sw.record(t, args.algo, g)
    print(" ".join(f"{k}={v}" for k, v in rec._asdict().items()))
    return EXIT_OK


def cmd_sweep(args) -> int:
    try:
        records = sw.sweep(args.precision, args.algos.split(","), jobs=args.jobs)
    except ValueError as exc:
        raise _Fail(EXIT_INVALID, str(exc)) from None
    _write(args.out, sw.render_csv(records))
    if args.out != "-":
        for a, m in sw.mean_waste(records).items():
            log.info("%s mean waste %.4f", a, m)
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        text = Path(args.path).read_text(encoding="utf-8")
    except OSError as exc:
        raise _Fail(EXIT_IO, f"cannot read {args.path}: {exc}") from None
    try:
        g = from_json(text)
    except GraphError as exc:
        raise _Fail(EXIT_SCHEMA, str(exc)) from None
    rep = validate(g)
    if not rep:
        for v in rep.violations:
            print(v, file=sys.stderr)
        raise _Fail(EXIT_INVALID, rep.first)
    s = stats(g, check=False)
    print(f"valid: sources={s.sources} sinks={s.sinks} waste={s.waste_count} "
          f"mixers={s.mixer_count} depth={s.depth}")
    return EXIT_OK


def _config(obj, what) -> Configuration:
    # ["3/8", "3/8"] or {"3/8": 2}
    if isinstance(obj, dict):
        return Configuration({conc(str(k)): int(v) for k, v in obj.items()})
    if isinstance(obj, list):
        return Configuration(conc(str(x)) for x in obj)
    raise ValueError(f"{what} must be a list or an object")


def load_contract(text: str, max_droplets: int | None = None) -> GadgetContract:
    doc = json.loads(text)
    if not isinstance(doc, dict) or "produced" not in doc:
        raise ValueError("contract needs at least 'produced'")
    return GadgetContract(
        consumed=_config(doc.get("consumed", []), "consumed"),
        produced=_config(doc["produced"], "produced"),
        waste_budget=int(doc.get("waste_budget", 0)),
        max_droplets=int(doc.get("max_droplets", max_droplets or DEFAULT_MAX_DROPLETS)),
    )


def cmd_gadget(args) -> int:
    text = args.contract
    if text.startswith("@"):
        try:
            text = Path(text[1:]).read_text(encoding="utf-8")
        except OSError as exc:
            raise _Fail(EXIT_IO, f"cannot read {text[1:]}: {exc}") from None
    try:
        contract = load_contract(text, args.max_droplets)
    except (ValueError, TypeError) as exc:
        raise _Fail(EXIT_INVALID, f"bad contract: {exc}") from None
    g = synthesize_gadget(contract)
    if g is None:
        raise _Fail(EXIT_INFEASIBLE, "no gadget within bounds")
    if not (args.dot or args.json):
        args.json = "-"
    _emit_graph(g, args)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dropmix", description="Droplet mixing graphs for single-target dilution.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="build a mixing graph for one target")
    s.add_argument("--target", required=True, help="a/2^d, a/b, a:d or binary .bbbb")
    s.add_argument("--algo", choices=sorted(sw.ALGORITHMS), default="rpris")
    s.add_argument("--dot", metavar="PATH")
    s.add_argument("--json", metavar="PATH")
    s.add_argument("--trace", action="store_true", help="print recursion steps (rpris)")
    s.add_argument("--max-droplets", type=int, default=DEFAULT_MAX_DROPLETS)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("sweep", help="run algorithms over every target of one precision")
    s.add_argument("-d", "--precision", type=int, required=True)
    s.add_argument("--algos", default="dmrw,minmix,rpris", help="comma-separated")
    s.add_argument("--out", default="-", metavar="PATH")
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("verify", help="validate a graph stored as JSON")
    s.add_argument("path")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("gadget", help="search for a gadget meeting an I/O contract")
    s.add_argument("--contract", required=True, help="JSON text or @file")
    s.add_argument("--dot", metavar="PATH")
    s.add_argument("--json", metavar="PATH")
    s.add_argument("--max-droplets", type=int, default=None)
    s.set_defaults(func=cmd_gadget)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except _Fail as exc:
        print(f"dropmix: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
