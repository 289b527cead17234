"""Acceptance criteria, each at its stated tolerance.

Every test records a one-line verdict that is printed in the terminal summary
(section "acceptance criteria") and then asserts it.
"""
import itertools
import json
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from amenlab import boundsver as B
from amenlab import cli
from amenlab import entropy as E
from amenlab import exactcomb as EC
from amenlab import groups as G
from amenlab import orlicz as O
from amenlab import supopt as S
from amenlab.randmat import SeededRng, haar_unitary

SEED = 20240611
SAMPLES = 400
ANGLES = 512


def fmt(values):
    return ", ".join(f"{v:.4g}" for v in values)


# 1 ------------------------------------------------------------------------


def test_criterion_1_exact_combinatorics(acceptance):
    start = time.perf_counter()
    problems = []
    for n in range(0, 9):
        brute = sum(1 for p in itertools.permutations(range(n)) if all(i != j for i, j in enumerate(p)))
        series = math.factorial(n) * sum(Fraction((-1) ** i, math.factorial(i)) for i in range(n + 1))
        if not (EC.derangements(n) == EC.derangements_alternating(n) == series == brute):
            problems.append(f"D({n})")
    for d in range(1, 13):
        xs = [EC.fixed_point_count(d, j) for j in range(d + 1)]
        if sum(xs) != math.factorial(d):
            problems.append(f"sum X_j d={d}")
        if any(Fraction(x, math.factorial(d)) > Fraction(1, math.factorial(j)) for j, x in enumerate(xs)):
            problems.append(f"X_j/d! <= 1/j! d={d}")
        lower = Fraction(1, math.factorial(d) * 2**d)
        for k in range(d):
            t = EC.char_tail_hyperoct(d, k)
            # upper side compared exactly against a rational enclosure of e (e/(k+1))^(k+1)
            upper = math.e * (math.e / (k + 1)) ** (k + 1)
            if not (lower <= t and Fraction(t) <= Fraction(upper) * (1 - Fraction(1, 10**12))):
                problems.append(f"sandwich d={d} k={k}")
    spec = G.HyperOct(2)
    enum = {}
    for g in spec.elements():
        tr = int(spec.character(g).real)
        enum[tr] = enum.get(tr, 0) + Fraction(1, 8)
    if EC.char_dist_hyperoct(2).as_dict() != enum:
        problems.append("d=2 distribution")
    elapsed = time.perf_counter() - start
    ok = not problems and elapsed < 10
    acceptance(1, ok, f"exact identities, {len(problems)} mismatches, {elapsed:.2f}s (limit 10s)")
    assert ok, problems


# 2 ------------------------------------------------------------------------


def test_criterion_2_supremum_oracle(acceptance):
    start = time.perf_counter()
    worst = 0.0
    for d in (2, 3, 4, 5):
        spec = G.HyperOct(d)
        mats = np.stack([spec.matrix(g) for g in spec.elements()])
        for i in range(100):
            u = np.asarray(haar_unitary(d, SeededRng(SEED, 1000 * d + i)))
            fast = S.sup_abs_trace(u, spec)
            slow = float(np.max(np.abs(np.einsum("ij,nji->n", u, mats))))
            worst = max(worst, abs(fast.value - slow) - fast.rigorous_error)
    lap_bad = 0
    rng = np.random.default_rng(SEED)
    for d in range(1, 8):
        for _ in range(200):
            cost = rng.normal(size=(d, d))
            if S.lap_max(cost).value != pytest.approx(S.lap_max_bruteforce(cost).value, abs=1e-12):
                lap_bad += 1
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-9 and lap_bad == 0 and elapsed < 120
    acceptance(2, ok, f"max(|sweep - exhaustive| - rigorous_error) = {worst:.3g}, LAP mismatches {lap_bad}/1400, {elapsed:.1f}s (limit 120s)")
    assert ok


# 3 ------------------------------------------------------------------------

GROWTH_DIMS = (8, 16, 32, 64)


def test_criterion_3_growth_rates(acceptance):
    start = time.perf_counter()
    ez_hyper, ez_sym, c2 = [], [], []
    for d in GROWTH_DIMS:
        scale = math.sqrt(d * math.log(d))
        est = S.estimate_EZ(G.HyperOct(d), "gaussian", SAMPLES, ANGLES, SeededRng(SEED, d))
        ez_hyper.append(est.mean / scale)
        est = S.estimate_EZ(G.SymmetricAsUnitary(d), "gaussian", SAMPLES, ANGLES, SeededRng(SEED, 100 + d))
        ez_sym.append(est.mean / scale)
        c2.append(O.c2_constant(G.HyperOct(d)).norm / math.sqrt(d / math.log(d)))
    spreads = [max(r) / min(r) for r in (ez_hyper, ez_sym, c2)]
    elapsed = time.perf_counter() - start
    ok = all(s <= 2 for s in spreads) and elapsed < 600
    acceptance(
        3,
        ok,
        f"spread EZ/sqrt(d ln d) signed {spreads[0]:.3f} [{fmt(ez_hyper)}], plain {spreads[1]:.3f} [{fmt(ez_sym)}], "
        f"C2/sqrt(d/ln d) {spreads[2]:.3f} [{fmt(c2)}]; limit 2; {elapsed:.0f}s (limit 600s)",
    )
    assert ok


# 4 ------------------------------------------------------------------------


def test_criterion_4_gaussian_dominance(acceptance):
    rows, ok = [], True
    for d in (8, 16, 32):
        est = S.estimate_EZ(G.HyperOct(d), "gaussian", SAMPLES, ANGLES, SeededRng(SEED, 200 + d))
        bound = math.sqrt(2 * math.log(math.factorial(d))) + math.sqrt(d)
        hit = est.mean + 4 * est.sem <= bound
        ok &= hit
        rows.append(f"signed d={d}: {est.mean:.3f}+4*{est.sem:.3f} <= {bound:.3f}")
        est = S.estimate_EZ(G.DiagSign(d), "gaussian", SAMPLES, ANGLES, SeededRng(SEED, 300 + d))
        lo, hi = 0.5 * math.sqrt(d), 1.5 * math.sqrt(d)
        hit = lo <= est.mean - 4 * est.sem and est.mean + 4 * est.sem <= hi
        ok &= hit
        rows.append(f"diag d={d}: {est.mean / math.sqrt(d):.3f} sqrt(d) in [0.5, 1.5]")
    acceptance(4, ok, "; ".join(rows))
    assert ok


# 5 ------------------------------------------------------------------------

ENUMERATED = ["q8", "trivial:3", "hyperoct:2", "hyperoct:3", "hyperoct:4", "hyperoct:5", "sym:4", "sym:5", "sym:6",
              "sym:7", "diag-sign:6", "diag-sign:10", "diag-roots:3:4", "diag-roots:2:7"]


def test_criterion_5_entropy_chain(acceptance):
    grid = {"points": 24}
    chain = B.run_verification({"name": "a5-chain", "checks": ["pe29", "sudakov"], "groups": ENUMERATED, "eps": grid})
    el1 = B.run_verification({"name": "a5-el1", "checks": ["el1"], "groups": ["hyperoct:{d}"], "dims": list(range(2, 17))})
    pe32 = B.run_verification({"name": "a5-pe32", "checks": ["pe32"], "groups": ["hyperoct:{d}"], "dims": [8, 12, 16, 24]})
    big = B.run_verification({"name": "a5-big", "checks": ["pe29", "sudakov"], "groups": ["hyperoct:{d}"], "dims": [8, 12, 16, 24]})
    reports = [chain, el1, pe32, big]
    n = sum(len(r.checks) for r in reports)
    failed = [f"{c.name}@{c.group}" for r in reports for c in r.checks if not c.passed]
    ok = not failed and len(pe32.checks) == 3 and all(not c.error for r in reports for c in r.checks)
    margins = ", ".join(f"d={c.d}: {c.lhs:.2f} >= {c.rhs:.2f}" for c in pe32.checks)
    acceptance(5, ok, f"{n} checks (pe29 chain on {len(ENUMERATED)} enumerated groups, el1 d<=16, Sudakov<=Dudley), pe32 {margins}; failed {failed}")
    assert ok


# 6 ------------------------------------------------------------------------


def test_criterion_6_psi2(acceptance):
    errs = []
    point = O.psi2_weighted([2.5], [1]).norm - 2.5
    rad = O.psi2_exact(EC.ExactDist.from_mapping({-1: Fraction(1, 2), 1: Fraction(1, 2)})).norm - 1
    zero_two = O.psi2_exact(EC.ExactDist.from_mapping({0: Fraction(1, 2), 2: Fraction(1, 2)})).norm - 2 / math.sqrt(
        math.log(2 * math.e - 1)
    )
    errs = [abs(point), abs(rad), abs(zero_two)]
    rel = []
    for d in (4, 8):
        spec = G.HyperOct(d)
        gen = SeededRng(SEED, 600 + d).generator()
        chars = [spec.character(spec.sample(gen)).real for _ in range(100_000)]
        rel.append(abs(O.psi2_empirical(chars).norm / O.c2_constant(spec).norm - 1))
    specs = [G.HyperOct(d) for d in (2, 4, 8, 12, 16, 32, 64)] + [G.SymmetricAsUnitary(d) for d in (4, 8, 16)]
    specs += [G.DiagSign(d) for d in (4, 16, 64)] + [G.quaternion_group(), G.DiagRoots(4, 3), G.DiagRoots(8, 3)]
    ratios = [O.c2_moment_ratio(s) / O.c2_constant(s).norm for s in specs]
    ok = max(errs) <= 1e-9 and max(rel) <= 0.10 and all(0.25 <= r <= 4 for r in ratios)
    acceptance(
        6,
        ok,
        f"closed forms max err {max(errs):.2g} (tol 1e-9); empirical rel err {fmt(rel)} (tol 0.1); "
        f"moment/psi2 in [{min(ratios):.3f}, {max(ratios):.3f}] over {len(specs)} laws (band [0.25, 4])",
    )
    assert ok


# 7 ------------------------------------------------------------------------

FAMILY = [G.HyperOct(d) for d in (4, 8, 16)] + [G.SymmetricAsUnitary(d) for d in (4, 8, 16)]
FAMILY += [G.quaternion_group()] + [G.DiagRoots(d, 3) for d in (2, 4, 8)]


def test_criterion_7_constant_equivalence(acceptance):
    worst_band, c3_ok, rows = 0.0, True, []
    for i, spec in enumerate(FAMILY):
        c2 = O.c2_constant(spec).norm
        c3 = S.c3_constant(spec, SAMPLES, ANGLES, SeededRng(SEED, 700 + i), require_irreducible=False)
        lo, hi = c3.mean - 4 * c3.sem, c3.mean + 4 * c3.sem
        band = max(c2 / lo, hi / c2)
        worst_band = max(worst_band, band)
        c3_ok &= hi <= spec.d
        rows.append(f"{spec.key()} {c2:.2f}/{c3.mean:.2f}")
    ok = worst_band <= 8 and c3_ok
    acceptance(7, ok, f"worst max(C2/C3, C3/C2) at 4 sem = {worst_band:.3f} (limit 8); C3 <= d: {c3_ok}; C2/C3: {'; '.join(rows)}")
    assert ok


# 8 ------------------------------------------------------------------------


def test_criterion_8_reproducibility(acceptance, tmp_path, capsys):
    matrix = tmp_path / "u.json"
    G.save_matrix(matrix, np.asarray(haar_unitary(4, SeededRng(SEED))))
    gens = tmp_path / "q8.json"
    G.save_generators(gens, G.quaternion_generators())
    suite = tmp_path / "suite.json"
    suite.write_text(json.dumps({"name": "r", "checks": ["tb2", "pe31"], "groups": ["hyperoct:{d}"], "dims": [4, 5],
                                 "samples": 30, "angles": 64, "seed": 5}))
    invocations = [
        ["char-dist", "--group", "hyperoct:6"],
        ["ez", "--group", "diag-sign:64", "--samples", "400", "--seed", "7"],
        ["ez", "--group", "hyperoct:6", "--samples", "60", "--angles", "128", "--randomization", "haar", "--format", "csv"],
        ["entropy", "--group", "sym:5", "--eps-points", "16", "--format", "csv"],
        ["psi2", "--group", "hyperoct:8", "--samples", "500", "--seed", "3"],
        ["sup", "--group", "hyperoct:4", "--matrix", str(matrix), "--exhaustive"],
        ["verify", "--suite", str(suite)],
        ["jordan", "--matrix", str(gens)],
    ]
    differing = []
    for args in invocations:
        outs = []
        for threads in ("1", "1", "2"):
            cli.main(args + ["--threads", threads])
            outs.append(capsys.readouterr().out)
        if not (outs[0] == outs[1] == outs[2]) or not outs[0]:
            differing.append(args[0])
    ok = not differing
    acceptance(8, ok, f"{len(invocations)} invocations x (run, rerun, --threads 2) byte-identical; differing: {differing}")
    assert ok
