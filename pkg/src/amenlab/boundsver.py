"""Closed-form bounds and a verification engine that checks them against
computed quantities.

A suite is a JSON-able dict::

    {"name": ..., "checks": [...], "groups": ["hyperoct:{d}", "q8", ...],
     "dims": [...], "samples": 400, "angles": 512, "seed": 7, "constants": {...}}

Group templates containing ``{d}`` are expanded over ``dims``.  Each check
family picks the groups it applies to.  Unspecified absolute constants are
fitted at the smallest dimension of the suite, frozen, and verified at the
larger ones.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

from . import entropy as EN
from . import exactcomb as EC
from . import groups as G
from . import orlicz as OR
from . import supopt as SO
from .errors import AmenlabError, DomainError
from .randmat import SeededRng

MC_SEMS = 4.0


# --------------------------------------------------------------------------
# formulas


@dataclass(frozen=True)
class BoundFormula:
    name: str
    params: dict
    value: object
    log_scale: bool = False


def jordan_bound(d: int) -> BoundFormula:
    """(d+1)!; the bound is only asserted for d >= 71."""
    if d < 1:
        raise DomainError("d must be positive")
    return BoundFormula("jordan", {"d": d, "asserted": d >= 71}, math.factorial(d + 1))


def blichfeldt_log_bound(d, c) -> float:
    """c d^2 / ln d, the log of an index bound of order d^{c (d / log d)^2}."""
    if d < 2:
        raise DomainError("d must be at least 2")
    if c <= 0:
        raise DomainError("c must be positive")
    return c * d * d / math.log(d)


def _log_factorial(n):
    return math.lgamma(n + 1)


def _ln(k):
    # works for exact big integers as well as floats
    return math.log(k)


def formula_bank(name, **params) -> BoundFormula:
    """Evaluate a named right-hand side."""
    p = params
    if name == "el1_cover":
        k, d, eps = p["k"], p["d"], p["eps"]
        return BoundFormula(name, p, _ln(k) + d * math.log(2 * math.pi / eps), log_scale=True)
    if name == "tb2":
        k, d = p["k"], p["d"]
        return BoundFormula(name, p, math.sqrt(2 * _ln(k)) + math.sqrt(d))
    if name == "lp2":
        k, d, c = p["k"], p["d"], p["c"]
        lk = _ln(k)
        val = c * (math.sqrt(d) if lk == 0 else min(math.sqrt(d), d / math.sqrt(lk)))
        return BoundFormula(name, p, val)
    if name == "t10_upper":
        d, c = p["d"], p["c"]
        return BoundFormula(name, p, c * math.sqrt(d * math.log(d)))
    if name == "t10_lower":
        d, c = p["d"], p["c"]
        return BoundFormula(name, p, c * math.sqrt(d / math.log(d)))
    if name == "pe31":
        d, k = p["d"], p["k"]
        lower = Fraction(1, math.factorial(d) * 2**d)
        upper = math.e * (math.e / (k + 1)) ** (k + 1)
        return BoundFormula(name, p, (lower, upper))
    if name == "pe32":
        d, eps, c = p["d"], p["eps"], p["c"]
        return BoundFormula(name, p, (1 - eps * eps / 2) * d * math.log(d / math.e) - c, log_scale=True)
    if name == "solvable":
        d, c = p["d"], p["C"]
        return BoundFormula(name, p, c * math.sqrt(d))
    raise DomainError(f"unknown formula {name!r}")


# --------------------------------------------------------------------------
# reports


@dataclass
class Check:
    name: str
    group: str
    d: int
    lhs: float
    relation: str
    rhs: float
    slack: float
    confidence: str  # exact | 4-sem | fitted-constant | informational
    passed: bool
    note: str = ""
    error: str | None = None

    def as_dict(self):
        out = asdict(self)
        out["pass"] = out.pop("passed")
        return out


@dataclass
class VerificationReport:
    suite: str
    seed: int
    config: dict
    checks: list = field(default_factory=list)

    @property
    def all_pass(self):
        return all(c.passed for c in self.checks if c.confidence != "informational")

    def as_dict(self):
        return {
            "suite": self.suite,
            "seed": self.seed,
            "config": self.config,
            "all_pass": self.all_pass,
            "checks": [c.as_dict() for c in self.checks],
        }

    def to_csv(self):
        buf = io.StringIO()
        cols = ["name", "group", "d", "lhs", "relation", "rhs", "slack", "confidence", "pass", "note", "error"]
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for c in self.checks:
            row = c.as_dict()
            w.writerow([_fmt(row[k]) for k in cols])
        return buf.getvalue()


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _num(x):
    """Plain float for reports (exact values are compared before conversion)."""
    if isinstance(x, Fraction):
        return float(x)
    return float(x)


def _check(name, group, d, lhs, relation, rhs, confidence, note="", margin=0.0):
    """Decide lhs <relation> rhs; ``margin`` widens lhs against the claim (MC sems)."""
    # margin 0 keeps Fraction operands exact
    if relation == "<=":
        worst = lhs + margin if margin else lhs
        ok = worst <= rhs
        slack = rhs - worst
    elif relation == ">=":
        worst = lhs - margin if margin else lhs
        ok = worst >= rhs
        slack = worst - rhs
    else:
        raise DomainError(f"bad relation {relation}")
    return Check(name, group, d, _num(lhs), relation, _num(rhs), _num(slack), confidence, bool(ok), note)


# --------------------------------------------------------------------------
# check families


def _expand_groups(cfg):
    out = []
    for tmpl in cfg.get("groups", []):
        if "{d}" in tmpl:
            for d in cfg.get("dims", []):
                text = tmpl.format(d=d)
                out.append((text, G.parse_group_spec(text)))
        else:
            spec = G.parse_group_spec(tmpl)
            out.append((tmpl if tmpl != "q8" else "q8", spec))
    return out


def _of(groups, *types):
    return [(t, s) for t, s in groups if isinstance(s, types)]


def family_pe31(cfg, groups, rng):
    checks = []
    for text, spec in _of(groups, G.HyperOct):
        d = spec.d
        tails = [EC.char_tail_hyperoct(d, k) for k in range(d)]
        lower = Fraction(1, math.factorial(d) * 2**d)
        checks.append(_check("pe31-lower", text, d, lower, "<=", min(tails), "exact", "min over 0<=k<d of P(tr>k)"))
        ratios = [float(t) / formula_bank("pe31", d=d, k=k).value[1] for k, t in enumerate(tails)]
        checks.append(_check("pe31-upper", text, d, max(ratios), "<=", 1.0, "exact", "max_k P(tr>k) / e(e/(k+1))^(k+1)"))
    return checks


def _grid(cfg):
    e = cfg.get("eps", {})
    return EN.default_eps_grid(e.get("points", 16), e.get("min", 2.0**-6), e.get("max", 2.0))


def family_pe29(cfg, groups, rng):
    """1/m(B(eps)) <= N'(eps) <= 1/m(B(eps/2)), checked through everything computable."""
    checks = []
    grid = _grid(cfg)
    budget = cfg.get("budget", EN.DEFAULT_BUDGET)
    for text, spec in groups:
        d = spec.d
        if spec.order <= budget:
            group = G.materialize(spec)
            radii, _ = EN.farthest_point_radii(group, stop_below=grid[0] / 2)
            worst = -math.inf
            for eps in grid:
                inv_m = 1 / EN.ball_measure(group, eps)
                inv_half = 1 / EN.ball_measure(group, eps / 2)
                cover = EN.greedy_cover_size(radii, eps)
                pack = EN.packing_size(radii, 2 * eps)
                # greedy centres are pairwise >= eps apart; a 2eps-packing has disjoint eps-balls
                worst = max(worst, float(inv_m - cover), float(cover - inv_half), float(pack - inv_m))
            checks.append(_check("pe29-chain", text, d, worst, "<=", 0.0, "exact", "max violation over grid (greedy cover, packing)"))
        else:
            worst = -math.inf
            half = [e / 2 for e in grid]
            curve = EN.covering_curve(spec, half, budget=budget)
            for eps, up in zip(grid, curve.n_upper):
                inv_m = 1 / EN.ball_measure(spec, eps)
                worst = max(worst, float(inv_m) / up)
            checks.append(_check("pe29-measure", text, d, worst, "<=", 1.0, "exact", "max over grid of (1/m(eps)) / n_upper(eps/2)"))
    return checks


def family_el1(cfg, groups, rng):
    checks = []
    budget = cfg.get("budget", EN.DEFAULT_BUDGET)
    for text, spec in groups:
        k = EN.known_abelian_index(spec)
        if k is None:
            continue
        d = spec.d
        eps_list = cfg.get("el1_eps", [0.25, 0.5, 1.0])
        curve = EN.covering_curve(spec, sorted(eps_list), budget=budget, abelian_index=False)
        worst = -math.inf
        for eps, up in zip(curve.eps_grid, curve.n_upper):
            worst = max(worst, math.log(up) - formula_bank("el1_cover", k=k, d=d, eps=eps).value)
        checks.append(_check("el1", text, d, worst, "<=", 0.0, "exact", "max over eps of log n_upper - log(k (2pi/eps)^d)"))
    return checks


def _log_inv_measure(spec, eps):
    m = EN.ball_measure(spec, eps)
    return math.log(m.denominator) - math.log(m.numerator)


def family_pe32(cfg, groups, rng):
    """log 1/m(B(eps)) >= (1 - eps^2/2) d log(d/e) - c3, c3 fitted at the smallest d."""
    hyper = sorted(_of(groups, G.HyperOct), key=lambda t: t[1].d)
    if not hyper:
        return []
    eps = Fraction(cfg.get("pe32_eps", "1/2"))
    base_text, base = hyper[0]
    c3 = formula_bank("pe32", d=base.d, eps=float(eps), c=0.0).value - _log_inv_measure(base, eps)
    c3 = cfg.get("constants", {}).get("c3", c3)
    checks = []
    for text, spec in hyper[1:]:
        rhs = formula_bank("pe32", d=spec.d, eps=float(eps), c=c3).value
        checks.append(
            _check("pe32", text, spec.d, _log_inv_measure(spec, eps), ">=", rhs, "fitted-constant", f"c3={c3!r} fitted at d={base.d}")
        )
    return checks


def family_sudakov(cfg, groups, rng):
    checks = []
    grid = _grid(cfg)
    budget = cfg.get("budget", EN.DEFAULT_BUDGET)
    for text, spec in groups:
        rep = EN.dudley_sudakov(EN.covering_curve(spec, grid, budget=budget))
        checks.append(_check("sudakov-dudley", text, spec.d, rep.sudakov, "<=", rep.dudley_upper, "exact"))
        checks.append(_check("dudley-bracket", text, spec.d, rep.dudley_lower, "<=", rep.dudley_upper, "exact"))
    return checks


def _ez(spec, cfg, rng, randomization="gaussian"):
    return SO.estimate_EZ(
        spec, randomization, cfg.get("samples", 400), cfg.get("angles"), rng, threads=cfg.get("threads", 1)
    )


def _rng_for(cfg, text, salt):
    # one substream per (group, purpose), independent of suite order
    h = 0
    for ch in f"{salt}|{text}":
        h = (h * 131 + ord(ch)) % (1 << 61)
    return SeededRng(cfg.get("seed", 0)).child(h)


def family_tb2(cfg, groups, rng):
    checks = []
    for text, spec in _of(groups, G.HyperOct):
        ez = _ez(spec, cfg, _rng_for(cfg, text, "ez-gaussian"))
        rhs = formula_bank("tb2", k=math.factorial(spec.d), d=spec.d).value
        checks.append(_check("tb2", text, spec.d, ez.mean, "<=", rhs, "4-sem", f"sem={ez.sem!r}", margin=MC_SEMS * ez.sem))
    return checks


def family_solvable_band(cfg, groups, rng):
    consts = cfg.get("constants", {})
    lo_c, hi_c = consts.get("solvable_lo", 0.5), consts.get("solvable_hi", 1.5)
    checks = []
    for text, spec in _of(groups, G.DiagSign):
        ez = _ez(spec, cfg, _rng_for(cfg, text, "ez-gaussian"))
        d = spec.d
        m = MC_SEMS * ez.sem
        checks.append(_check("solvable-upper", text, d, ez.mean, "<=", formula_bank("solvable", d=d, C=hi_c).value, "4-sem", f"sem={ez.sem!r}", margin=m))
        checks.append(_check("solvable-lower", text, d, ez.mean, ">=", formula_bank("solvable", d=d, C=lo_c).value, "4-sem", f"sem={ez.sem!r}", margin=m))
    return checks


def _stability(name, text, rows, confidence="fitted-constant", band=2.0):
    ratios = [r for _, r in rows]
    return _check(name, text, max(d for d, _ in rows), max(ratios) / min(ratios), "<=", band, confidence,
                  "ratios " + ", ".join(f"d={d}:{r!r}" for d, r in rows))


def family_t10_growth(cfg, groups, rng):
    """Growth rates: E Z / sqrt(d ln d) for signed and plain permutations, C2 / sqrt(d / ln d)."""
    checks = []
    band = cfg.get("constants", {}).get("growth_band", 2.0)
    for cls, label in ((G.HyperOct, "hyperoct"), (G.SymmetricAsUnitary, "sym")):
        items = sorted(_of(groups, cls), key=lambda t: t[1].d)
        if len(items) < 2:
            continue
        rows = []
        for text, spec in items:
            ez = _ez(spec, cfg, _rng_for(cfg, text, "ez-gaussian"))
            rows.append((spec.d, ez.mean / math.sqrt(spec.d * math.log(spec.d))))
        checks.append(_stability("t10-ez-ratio", label, rows, band=band))
        c1 = band * rows[0][1]
        for (d, r), (text, spec) in zip(rows[1:], items[1:]):
            checks.append(_check("t10-upper", text, d, r * math.sqrt(d * math.log(d)), "<=",
                                 formula_bank("t10_upper", d=d, c=c1).value, "fitted-constant", f"c1={c1!r} fitted at d={rows[0][0]}"))
    items = sorted(_of(groups, G.HyperOct), key=lambda t: t[1].d)
    if len(items) >= 2:
        rows = [(s.d, OR.c2_constant(s).norm / math.sqrt(s.d / math.log(s.d))) for _, s in items]
        checks.append(_stability("t10-c2-ratio", "hyperoct", rows, band=band))
        c2 = rows[0][1] / band
        for (d, r), (text, spec) in zip(rows[1:], items[1:]):
            checks.append(_check("t10-lower", text, d, r * math.sqrt(d / math.log(d)), ">=",
                                 formula_bank("t10_lower", d=d, c=c2).value, "fitted-constant", f"c2={c2!r} fitted at d={rows[0][0]}"))
    return checks


def family_lp2(cfg, groups, rng):
    items = sorted(_of(groups, G.HyperOct), key=lambda t: t[1].d)
    if not items:
        return []
    c2 = {s.d: OR.c2_constant(s).norm for _, s in items}
    base = items[0][1]
    unit = formula_bank("lp2", k=math.factorial(base.d), d=base.d, c=1.0).value
    cprime = cfg.get("constants", {}).get("c_prime", c2[base.d] / unit)
    checks = []
    for text, spec in items[1:]:
        rhs = formula_bank("lp2", k=math.factorial(spec.d), d=spec.d, c=cprime).value
        checks.append(_check("lp2", text, spec.d, c2[spec.d], ">=", rhs, "fitted-constant", f"c'={cprime!r} fitted at d={base.d}"))
    return checks


def family_fl1(cfg, groups, rng):
    """C2 and C3 equivalent within a fixed band K; C3 <= d."""
    k_band = cfg.get("constants", {}).get("K", 8.0)
    checks = []
    for text, spec in groups:
        irreducible = G.is_irreducible(spec)
        c2 = OR.c2_constant(spec).norm
        c3 = SO.c3_constant(spec, cfg.get("samples", 400), cfg.get("angles"), _rng_for(cfg, text, "ez-haar"),
                            threads=cfg.get("threads", 1), require_irreducible=False)
        lo, hi = c3.mean - MC_SEMS * c3.sem, c3.mean + MC_SEMS * c3.sem
        worst = max(c2 / lo, hi / c2) if lo > 0 else math.inf
        note = f"C2={c2!r} C3={c3.mean!r} sem={c3.sem!r}" + ("" if irreducible else " (reducible)")
        checks.append(_check("fl1-band", text, spec.d, worst, "<=", k_band, "4-sem", note))
        checks.append(_check("fl1-c3-le-d", text, spec.d, c3.mean, "<=", spec.d, "4-sem", note, margin=MC_SEMS * c3.sem))
    return checks


def family_jordan(cfg, groups, rng):
    checks = []
    for text, spec in groups:
        if spec.order > cfg.get("budget", EN.DEFAULT_BUDGET):
            continue
        res = G.abelian_index_upper(G.materialize(spec), cfg.get("exhaustive_cap", 200))
        jb = jordan_bound(spec.d)
        conf = "exact" if jb.params["asserted"] else "informational"
        checks.append(_check("jordan", text, spec.d, res.index, "<=", jb.value, conf,
                             f"exact_search={res.exact} normal={res.normal}"))
    return checks


FAMILIES = {
    "pe31": family_pe31,
    "pe29": family_pe29,
    "el1": family_el1,
    "pe32": family_pe32,
    "sudakov": family_sudakov,
    "tb2": family_tb2,
    "solvable-band": family_solvable_band,
    "t10-growth": family_t10_growth,
    "lp2": family_lp2,
    "fl1": family_fl1,
    "jordan": family_jordan,
}


SUITES = {
    "empty": {"name": "empty", "checks": [], "groups": [], "dims": []},
    "hyperoct-core": {
        "name": "hyperoct-core",
        "checks": ["pe31", "pe29", "el1"],
        "groups": ["hyperoct:{d}"],
        "dims": [8, 16, 32],
    },
    "entropy": {
        "name": "entropy",
        "checks": ["pe29", "sudakov", "el1", "jordan"],
        "groups": ["q8", "hyperoct:3", "hyperoct:4", "hyperoct:5", "sym:6", "sym:7", "diag-sign:8",
                   "diag-roots:3:4", "hyperoct:8", "hyperoct:12", "hyperoct:16"],
        "dims": [],
    },
    "pe32": {"name": "pe32", "checks": ["pe32"], "groups": ["hyperoct:{d}"], "dims": [8, 12, 16, 24]},
    "tb2": {
        "name": "tb2",
        "checks": ["tb2", "solvable-band"],
        "groups": ["hyperoct:{d}", "diag-sign:{d}"],
        "dims": [8, 16, 32],
        "samples": 400,
        "angles": 512,
    },
    "growth": {
        "name": "growth",
        "checks": ["t10-growth", "lp2"],
        "groups": ["hyperoct:{d}", "sym:{d}"],
        "dims": [8, 16, 32, 64],
        "samples": 400,
        "angles": 512,
    },
    "fl1": {
        "name": "fl1",
        "checks": ["fl1"],
        "groups": ["hyperoct:{d}", "sym:{d}", "q8", "diag-roots:{d}:3"],
        "dims": [4, 8, 16],
        "samples": 400,
        "angles": 512,
    },
}


def load_suite(name_or_path):
    if name_or_path in SUITES:
        return dict(SUITES[name_or_path])
    import json

    try:
        with open(name_or_path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise DomainError(f"unknown suite {name_or_path!r} (built-in: {', '.join(sorted(SUITES))})") from exc


def run_verification(config) -> VerificationReport:
    """Run every check family named in the config; errors become failed checks."""
    cfg = dict(config)
    cfg.setdefault("seed", 0)
    name = cfg.get("name", "custom")
    report = VerificationReport(name, int(cfg["seed"]), {k: cfg[k] for k in sorted(cfg)})
    try:
        groups = _expand_groups(cfg)
    except AmenlabError as exc:
        report.checks.append(Check("config", "-", 0, math.nan, "<=", math.nan, math.nan, "exact", False, error=str(exc)))
        return report
    rng = SeededRng(cfg["seed"])
    checks = []
    for fam in cfg.get("checks", []):
        fn = FAMILIES.get(fam)
        if fn is None:
            checks.append(Check(fam, "-", 0, math.nan, "<=", math.nan, math.nan, "exact", False, error="unknown check family"))
            continue
        try:
            checks.extend(fn(cfg, groups, rng))
        except (AmenlabError, ArithmeticError, ValueError) as exc:
            checks.append(Check(fam, "-", 0, math.nan, "<=", math.nan, math.nan, "exact", False, error=f"{type(exc).__name__}: {exc}"))
    checks.sort(key=lambda c: (c.name, c.d, c.group))
    report.checks = checks
    return report
