"""Command-line front end.

Every subcommand writes one document: a header (package version, the echoed
configuration, the seed), a summary and a long-format table.  JSON output is
``{"header", "summary", "rows"}``; CSV output carries the header and summary
as two ``#`` comment lines followed by the table.  Floats are written with
``repr`` (shortest round-trip form), so reruns are byte-identical.  Wall time
is never written to the document; ``--timing`` prints it on stderr.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from fractions import Fraction

import numpy as np

from . import __version__
from . import boundsver as BV
from . import entropy as EN
from . import exactcomb as EC
from . import groups as G
from . import orlicz as OR
from . import supopt as SO
from .errors import AmenlabError, DomainError, UnsupportedSpecError
from .randmat import SeededRng, summarize

# fields that never change the result, so they stay out of the echoed config
_NOT_ECHOED = {"out", "threads", "timing", "func"}


def _jsonable(x):
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, dict)):
        return json.dumps(v, separators=(",", ":"))
    return str(v)


def render(header, summary, rows, fmt):
    header, summary, rows = _jsonable(header), _jsonable(summary), _jsonable(rows)
    if fmt == "json":
        return json.dumps({"header": header, "summary": summary, "rows": rows}, indent=2) + "\n"
    buf = io.StringIO()
    buf.write("# header: " + json.dumps(header, separators=(",", ":")) + "\n")
    buf.write("# summary: " + json.dumps(summary, separators=(",", ":")) + "\n")
    if rows:
        cols = list(rows[0])
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_cell(r.get(c)) for c in cols])
    return buf.getvalue()


def parse_csv_document(text):
    """Inverse of :func:`render` for CSV; cells come back as strings."""
    lines = text.splitlines()
    header = json.loads(lines[0].removeprefix("# header: "))
    summary = json.loads(lines[1].removeprefix("# summary: "))
    rows = list(csv.DictReader(io.StringIO("\n".join(lines[2:]))))
    return header, summary, rows


# --------------------------------------------------------------------------
# subcommands; each returns (summary, rows, exit_code)


def _group(args):
    return G.parse_group_spec(args.group)


def cmd_char_dist(args):
    spec = _group(args)
    law = OR.character_law(spec)
    if not isinstance(law, EC.ExactDist):
        values, probs = law
        vals = [complex(v) for v in values]
        if any(abs(v.imag) > 1e-9 or abs(v.real - round(v.real)) > 1e-9 for v in vals):
            raise UnsupportedSpecError(f"{args.group}: character is not integer valued")
        acc = {}
        for v, p in zip(vals, probs):
            k = int(round(v.real))
            acc[k] = acc.get(k, 0) + Fraction(p)
        law = EC.ExactDist.from_mapping(acc)
    rows = []
    cdf = Fraction(0)
    for k, p in zip(law.support, law.probs):
        cdf += p
        rows.append({"value": k, "prob": p, "prob_float": float(p), "cdf": cdf, "tail": 1 - cdf})
    summary = {"group": args.group, "order": spec.order, "support_size": len(law)}
    if args.tail is not None:
        t = law.tail(args.tail)
        summary["tail_at"] = args.tail
        summary["tail"] = t
        summary["tail_float"] = float(t)
    return summary, rows, 0


def cmd_ez(args):
    spec = _group(args)
    rng = SeededRng(args.seed)
    vals = SO.sample_Z(spec, args.randomization, args.samples, args.angles, rng, args.threads)
    est = summarize(vals, args.seed)
    d = spec.d
    summary = {"group": args.group, "randomization": args.randomization, "angles": args.angles or SO.default_angles(d)}
    summary.update(est.as_dict())
    if d > 1:
        summary["ratio_sqrt_d_log_d"] = est.mean / math.sqrt(d * math.log(d))
    summary["ratio_sqrt_d"] = est.mean / math.sqrt(d)
    rows = [{"sample": i, "z": float(v)} for i, v in enumerate(vals)]
    return summary, rows, 0


def _eps_grid(args):
    return EN.default_eps_grid(args.eps_points, args.eps_min, args.eps_max)


def cmd_entropy(args):
    spec = _group(args)
    curve = EN.covering_curve(spec, _eps_grid(args), args.metric)
    rep = EN.dudley_sudakov(curve)
    summary = {"group": args.group, "order": spec.order, "metric": args.metric}
    summary.update(rep.as_dict())
    return summary, curve.as_rows(), 0


def cmd_psi2(args):
    spec = _group(args)
    rows = []
    exact = OR.c2_constant(spec)
    rows.append({"method": "exact", "value": exact.norm, "lo": exact.bracket[0], "hi": exact.bracket[1]})
    rows.append({"method": "moment-ratio", "value": OR.c2_moment_ratio(spec), "lo": None, "hi": None})
    if args.samples:
        gen = SeededRng(args.seed).generator()
        chars = [G.character(spec, spec.sample(gen)) for _ in range(args.samples)]
        emp = OR.psi2_empirical(chars)
        rows.append({"method": "empirical", "value": emp.norm, "lo": emp.bracket[0], "hi": emp.bracket[1]})
    summary = {"group": args.group, "c2": exact.norm}
    if spec.d > 1:
        summary["ratio_sqrt_d_over_log_d"] = exact.norm / math.sqrt(spec.d / math.log(spec.d))
    return summary, rows, 0


def cmd_sup(args):
    spec = _group(args)
    if not args.matrix:
        raise DomainError("sup needs --matrix FILE")
    u = G.load_matrix(args.matrix)
    res = SO.sup_abs_trace(u, spec, args.angles)
    defect = SO.density_defect(u, spec, args.angles)
    summary = {"group": args.group, "sup": res.as_dict(), "defect": defect.as_dict()}
    rows = [{"method": "sweep", "value": res.value, "rigorous_error": res.rigorous_error}]
    if args.exhaustive:
        ex = SO.sup_abs_trace_exhaustive(u, spec)
        summary["exhaustive"] = ex.as_dict()
        summary["agree"] = abs(ex.value - res.value) <= res.rigorous_error + 1e-9
        rows.append({"method": "exhaustive", "value": ex.value, "rigorous_error": 0.0})
    return summary, rows, 0


def cmd_verify(args):
    cfg = BV.load_suite(args.suite)
    for key in ("samples", "angles", "seed"):
        val = getattr(args, key)
        if val is not None:
            cfg[key] = val
    cfg["threads"] = args.threads
    report = BV.run_verification(cfg)
    out = report.as_dict()
    out["config"].pop("threads", None)
    summary = {k: out[k] for k in ("suite", "seed", "config", "all_pass")}
    summary["n_checks"] = len(report.checks)
    summary["n_failed"] = sum(1 for c in report.checks if not c.passed and c.confidence != "informational")
    return summary, out["checks"], 0 if report.all_pass else 1


def cmd_jordan(args):
    if args.matrix:
        _, tol, gens = G.load_generators(args.matrix)
        group = G.enumerate_closure(gens, tol=tol, name="enum")
    else:
        group = G.materialize(_group(args))
    res = G.abelian_index_upper(group)
    jb = BV.jordan_bound(group.d)
    summary = {
        "d": group.d,
        "order": group.order,
        "abelian_index_upper": res.index,
        "exact_search": res.exact,
        "normal": res.normal,
        "max_commutator": res.max_commutator,
        "irreducible": G.is_irreducible(group),
        "jordan_bound": jb.value,
        "jordan_asserted": jb.params["asserted"],
        "within_jordan": res.index <= jb.value,
    }
    rows = [{"element": int(i)} for i in res.witness]
    return summary, rows, 0


COMMANDS = {
    "char-dist": cmd_char_dist,
    "ez": cmd_ez,
    "entropy": cmd_entropy,
    "psi2": cmd_psi2,
    "sup": cmd_sup,
    "verify": cmd_verify,
    "jordan": cmd_jordan,
}


def _positive(kind):
    def parse(text):
        v = kind(text)
        if v <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return v

    return parse


def build_parser():
    p = argparse.ArgumentParser(prog="amenlab", description="Character laws, metric entropy and trace suprema over finite matrix groups.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, group=True):
        if group:
            sp.add_argument("--group", required=True, help="hyperoct:N, sym:N, diag-sign:N, diag-roots:N:M, q8, trivial:N, enum:FILE")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        sp.add_argument("--out", help="output path (default stdout)")
        sp.add_argument("--threads", type=_positive(int), default=1, help="worker cap; never changes results")
        sp.add_argument("--timing", action="store_true", help="print wall time on stderr")
        return sp

    sp = common(sub.add_parser("char-dist", help="exact character distribution"))
    sp.add_argument("--tail", type=int, help="also report P(chi > K)")

    sp = common(sub.add_parser("ez", help="Monte Carlo E sup_g |tr(x g)|"))
    sp.add_argument("--samples", type=_positive(int), default=400)
    sp.add_argument("--angles", type=_positive(int))
    sp.add_argument("--randomization", choices=("gaussian", "haar"), default="gaussian")

    sp = common(sub.add_parser("entropy", help="covering curve and Dudley/Sudakov functionals"))
    sp.add_argument("--eps-min", type=_positive(float), default=2.0**-6)
    sp.add_argument("--eps-max", type=_positive(float), default=2.0)
    sp.add_argument("--eps-points", type=_positive(int), default=64)
    sp.add_argument("--metric", choices=[k.value for k in EN.MetricKind], default=EN.MetricKind.DELTA2.value)

    sp = common(sub.add_parser("psi2", help="psi_2 norm of the character"))
    sp.add_argument("--samples", type=int, default=0, help="also estimate from this many uniform samples")

    sp = common(sub.add_parser("sup", help="supremum of |tr(u g)| for a given matrix"))
    sp.add_argument("--matrix", required=True, help='JSON {"d", "matrix"}')
    sp.add_argument("--angles", type=_positive(int))
    sp.add_argument("--exhaustive", action="store_true", help="also enumerate every element")

    sp = common(sub.add_parser("verify", help="run a verification suite"), group=False)
    sp.add_argument("--suite", required=True, help=f"built-in ({', '.join(sorted(BV.SUITES))}) or a JSON file")
    sp.add_argument("--samples", type=_positive(int))
    sp.add_argument("--angles", type=_positive(int))
    # a suite carries its own seed unless one is given here
    sp.set_defaults(seed=None)

    sp = sub.add_parser("jordan", help="abelian-subgroup index of a finite group")
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--group")
    src.add_argument("--matrix", help="generators JSON file")
    common(sp, group=False)
    return p


def _config_echo(args):
    return {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_ECHOED}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    try:
        summary, rows, code = COMMANDS[args.command](args)
    except AmenlabError as exc:
        sys.stderr.write(json.dumps(_jsonable(exc.to_dict())) + "\n")
        return exc.exit_code
    except OSError as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 2
    seed = summary.get("seed", args.seed) if args.command == "verify" else args.seed
    header = {"version": __version__, "config": _config_echo(args), "seed": seed}
    text = render(header, summary, rows, args.format)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.timing:
        sys.stderr.write(json.dumps({"wall_time_s": time.perf_counter() - start}) + "\n")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
