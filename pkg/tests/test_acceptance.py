"""End-to-end acceptance criteria; each test records one PASS/FAIL line."""
import random
import time
from functools import cache
from statistics import mean

from dropmix.baselines import dmrw, minmix, optimal_waste
from dropmix.core import ONE, ZERO, all_targets, gamma, parse_target as c
from dropmix.gadgets import EXCEPTIONAL, EXTENDER_STEPS, check_profile, converter, converter_waste, endpoints, extender
from dropmix.graph import Configuration, couple, validate
from dropmix.rpris import rpris, run_rpris, waste_bound
from dropmix.sweep import compare, mean_waste, sweep
from dropmix.synth import GadgetContract, is_feasible, synthesize_gadget

SMALL = [t for d in range(1, 13) for t in all_targets(d)]


@cache
def small_runs():
    start = time.perf_counter()
    runs = [run_rpris(t) for t in SMALL]
    return runs, time.perf_counter() - start


@cache
def timed_sweep(d, algos):
    start = time.perf_counter()
    recs = sweep(d, algos)
    return recs, time.perf_counter() - start


def wastes(recs, algo):
    return [r.waste for r in recs if r.algorithm == algo]


def test_01_validity(acceptance):
    runs, elapsed = small_runs()
    bad = []
    for t, res in zip(SMALL, runs):
        g = res.graph
        targets = [s for s in g.outputs if g.label(s) == t]
        if not validate(g).ok or g.target is None or targets != [g.target] \
                or not set(g.source_config().labels()) <= {ZERO, ONE}:
            bad.append(t)
    ok = not bad and elapsed < 60
    assert acceptance(1, ok, f"{len(SMALL)} targets, {len(bad)} invalid, {elapsed:.1f} s (limit 60 s)")


def test_02_theorem_bound(acceptance):
    runs, _ = small_runs()
    over2 = [(t, len(r.graph.discarded)) for t, r in zip(SMALL, runs) if len(r.graph.discarded) > waste_bound(t)]
    detail = f"{len(over2)} violations of +2 over {len(SMALL)} targets"
    if over2:
        over4 = [t for t, w in over2 if w > waste_bound(t) + 2]
        detail += f"; {len(over4)} violations of +4 (first: {over2[0]})"
    slack = min(waste_bound(t) - len(r.graph.discarded) for t, r in zip(SMALL, runs))
    assert acceptance(2, not over2, detail + f"; tightest slack {slack}")


def test_03_lower_bound(acceptance):
    runs, _ = small_runs()
    viol = {"rpris": 0, "minmix": 0, "dmrw": 0}
    for t, res in zip(SMALL, runs):
        lb = gamma(t) + 1
        viol["rpris"] += len(res.graph.discarded) < lb
        viol["minmix"] += len(minmix(t).discarded) < lb
        viol["dmrw"] += len(dmrw(t).discarded) < lb
    opt = {x: optimal_waste(c(x)).waste for x in ("1/2", "1/4", "3/4")}
    opt_ok = all(w == gamma(c(x)) + 1 for x, w in opt.items())
    ok = not any(viol.values()) and opt_ok
    assert acceptance(3, ok, f"violations {viol}; optimal_waste {opt}")


def test_04_minmix_exact(acceptance):
    off = [(d, t) for d in (7, 8, 12) for t in all_targets(d) if len(minmix(t).discarded) != d]
    assert acceptance(4, not off, f"{len(off)} targets with waste != d at d in (7, 8, 12)")


def test_05_dominance(acceptance):
    ts = all_targets(7) + all_targets(8)
    worse = [t for t in ts if len(rpris(t).discarded) > len(minmix(t).discarded)]
    assert acceptance(5, not worse and len(ts) == 192, f"{len(worse)} of {len(ts)} targets worse than Min-Mix")


def test_06_mean_ratios(acceptance):
    r8, _ = timed_sweep(8, ("minmix", "rpris"))
    m8 = mean_waste(r8)
    q8 = m8["rpris"] / m8["minmix"]
    r15, t15 = timed_sweep(15, ("dmrw", "rpris"))
    m15 = mean_waste(r15)
    q15 = m15["rpris"] / m15["dmrw"]
    ok = 0.40 <= q8 <= 0.62 and 0.70 <= q15 <= 0.85 and t15 < 120
    assert acceptance(6, ok, f"d=8 rpris/minmix {q8:.4f} in [0.40, 0.62]; "
                             f"d=15 rpris/dmrw {q15:.4f} in [0.70, 0.85]; d=15 sweep {t15:.1f} s (limit 120 s)")


def test_07_loss_fraction(acceptance):
    r15, _ = timed_sweep(15, ("dmrw", "rpris"))
    (c15,) = compare(r15)  # a=dmrw, b=rpris: dmrw "wins" when rpris is worse
    f15 = c15.wins / len(all_targets(15))
    r20, t20 = timed_sweep(20, ("dmrw", "rpris"))
    (c20,) = compare(r20)
    f20 = c20.wins / len(all_targets(20))
    ok = f15 <= 0.04 and f20 <= 0.06 and t20 < 900 and len(wastes(r20, "rpris")) == 524288
    assert acceptance(7, ok, f"d=15 loss {f15:.4%} ({c15.wins}/16384, limit 4%); "
                             f"d=20 loss {f20:.4%} ({c20.wins}/524288, limit 6%); d=20 sweep {t20:.0f} s (limit 900 s)")


def _cfg(d):
    return Configuration({c(k): v for k, v in d.items()})


def test_08_gadget_contracts(acceptance):
    notes, ok = [], True
    g = synthesize_gadget(GadgetContract(Configuration(), _cfg({"1/4": 2, "1/2": 1}), 0))
    good = g is not None and len(g.sources) == 3 and len(g.sinks) == 3 and validate(g).ok
    ok &= good
    notes.append(f"C2[2,1] waste 0 with 3 sources: {good}")

    prof = _cfg({"1/4": 1, "1/2": 2})
    no0 = not is_feasible(GadgetContract(Configuration(), prof, 0, max_droplets=10))
    g = synthesize_gadget(GadgetContract(Configuration(), prof, 1))
    good = no0 and g is not None and len(g.sinks) - 3 == 1
    ok &= good
    notes.append(f"C2[1,2] waste 1: {good}")

    g = synthesize_gadget(GadgetContract(Configuration(), _cfg({"3/8": 3, "1/4": 1}), 1))
    good = g is not None and g.sink_config() == _cfg({"1/4": 1, "3/8": 3, "5/8": 1})
    ok &= good
    notes.append(f"C3[3,1] sinks {{1/4, 3:3/8, 5/8}}: {good}")

    for name, k, i, j in (("C3[1,1]", 3, 1, 1), ("C1[1,3]", 1, 1, 3)):
        l, r = endpoints(k)
        prof = Configuration({l: i, r: j})
        w1 = is_feasible(GadgetContract(Configuration(), prof, 1, max_droplets=10, max_precision=6))
        w2 = is_feasible(GadgetContract(Configuration(), prof, 2, max_droplets=10))
        good = not w1 and w2
        ok &= good
        notes.append(f"{name} min waste 2 within 10 droplets: {good}")
    assert acceptance(8, ok, "; ".join(notes))


def test_09_composition(acceptance):
    checked, bad = 0, []
    for k in (1, 2, 3):
        l, r = endpoints(k)
        for idx in (1, 2):
            x = extender(k, idx)
            di, dj = EXTENDER_STEPS[k][idx]
            need_l, need_r = x.consumed.count(l), x.consumed.count(r)
            for i in range(1, 9):
                for j in range(1, 9):
                    if i < need_l or j < need_r or i + di < 1 or j + dj < 1:
                        continue
                    g = couple(x.graph, converter(k, i, j))
                    checked += 1
                    waste = len(g.sinks) - (i + di) - (j + dj)
                    if not (validate(g).ok and check_profile(g, k, i + di, j + dj)
                            and waste == converter_waste(k, i, j)):
                        bad.append((k, idx, i, j))
    assert acceptance(9, checked and not bad, f"{checked} couplings checked, {len(bad)} mismatches {bad[:5]}")


def test_10_size_law(acceptance):
    rng = random.Random(20)
    worst = {}
    for d in (10, 15, 20):
        ts = [c(f"{2 * rng.randrange(1 << (d - 1)) + 1}:{d}") for _ in range(200)]
        worst[d] = max(len(rpris(t)) for t in ts)
    within = all(worst[d] <= 8 * d * d for d in worst)
    growth = (worst[20] / 400) / (worst[10] / 100)
    ratios = ", ".join(f"d={d}: {n} nodes ({n / d / d:.2f} d^2)" for d, n in worst.items())
    assert acceptance(10, within and growth <= 3, f"{ratios}; growth {growth:.2f}x (limit 3x)")


def test_11_exceptional_budget(acceptance):
    runs, _ = small_runs()
    forbidden = {(1, 3, 2), (5, 2, 3), (1, 6, 1), (5, 1, 6)}
    banned, multi = [], []
    for t, res in zip(SMALL, runs):
        used = res.converters()
        if any((i, j) == (1, 1) or (k, i, j) in forbidden for k, i, j in used):
            banned.append(t)
        if sum(u in EXCEPTIONAL for u in used) > 1:
            multi.append(t)
    n_exc = sum(any(u in EXCEPTIONAL for u in r.converters()) for r in runs)
    assert acceptance(11, not banned and not multi,
                      f"{len(banned)} runs with forbidden converters, {len(multi)} with two waste-2 converters; "
                      f"{n_exc} runs use one")
