"""Command-line interface.

    syncrate bounds    --channel bdc --curve d2_iud --pgrid 0:0.5:0.01
    syncrate sir       --pd 0.05 --pr 0.05 --m 1..8 --n 500000 --seed 7
    syncrate optimize  --pgrid 0.1,0.2 --m 1,2 --n 100000
    syncrate simulate  --pd 0.1 --pr 0.1 --n 32 --count 4
    syncrate oracle    --variant star --n 1..8 --m 1..3 --pd 0.1 --pr 0.1
    syncrate verify
    syncrate constants

Every CSV starts with '#' lines holding the tool version and the full
configuration, so a file can be regenerated from its own header. Values
from a ``--config`` file (flat key=value lines) are overridden by flags.
Exit codes: 0 ok, 1 verification failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable

import numpy as np

from . import __version__
from . import bounds as B
from .channel import make_params, make_rng, sample_trace
from .core_math import DomainError, SizeError, ValidityError
from .inputs import MarkovInputMu
from .oracle import exact_mi_csv, exact_mi_dagger, exact_mi_star, exact_mi_true
from .optim import gbaa_optimize
from .rates import DEFAULT_CHUNKS, rate_csv_rows, sir_estimate

EXIT_OK, EXIT_VERIFY, EXIT_USAGE = 0, 1, 2
GRID_EPS = 1e-12


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- parsing

class Grid(list):
    """A parsed list that remembers the text it came from (for the header echo)."""

    def __init__(self, values: Iterable, text: str):
        super().__init__(values)
        self.text = text

    def __str__(self) -> str:
        return self.text


def float_grid(text: str) -> Grid:
    """``start:stop:step`` (endpoints inclusive within 1e-12), ``a,b,c`` or ``a``."""
    text = text.strip()
    try:
        if ":" in text:
            parts = [float(v) for v in text.split(":")]
            if len(parts) != 3:
                raise ValueError
            start, stop, step = parts
            if step <= 0 or stop < start:
                raise ValueError
            count = int(math.floor((stop - start) / step + GRID_EPS / step)) + 1
            vals = [round(start + k * step, 12) for k in range(count)]
            return Grid(vals, text)
        return Grid([float(v) for v in text.split(",") if v.strip()], text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid grid {text!r}") from None


def int_list(text: str) -> Grid:
    """``1..8``, ``1,2,4`` or ``3``."""
    text = text.strip()
    try:
        if ".." in text:
            lo, hi = (int(v) for v in text.split(".."))
            if hi < lo:
                raise ValueError
            return Grid(range(lo, hi + 1), text)
        vals = [int(v) for v in text.split(",") if v.strip()]
        if not vals:
            raise ValueError
        return Grid(vals, text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer list {text!r}") from None


def read_config(path: str) -> list[str]:
    """Flat key=value lines to flag tokens; '#' starts a comment line."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            out += ["--" + key.replace("_", "-"), value]
    return out


# ---------------------------------------------------------------- output

def config_echo(args: argparse.Namespace) -> dict:
    skip = {"func", "out", "jobs", "command"}
    return {k: str(v) for k, v in sorted(vars(args).items())
            if k not in skip and v is not None}


def emit(text: str, out: str | None) -> None:
    """Write to stdout, or atomically replace `out`."""
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    folder = os.path.dirname(os.path.abspath(out))
    os.makedirs(folder, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".syncrate-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, out)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def header(command: str, meta: dict) -> str:
    lines = [f"# syncrate {__version__}", f"# command={command}"]
    lines += [f"# {k}={v}" for k, v in meta.items()]
    return "\n".join(lines) + "\n"


def run_tasks(fn: Callable, tasks: list, jobs: int) -> list:
    """Map over tasks, in a process pool when jobs > 1; order is preserved."""
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks))


def param_points(args) -> list[tuple[float, float]]:
    if getattr(args, "pgrid", None) is not None:
        return [(p, p) for p in args.pgrid]
    return [(pd, pr) for pd in args.pd for pr in args.pr]


# ---------------------------------------------------------------- bounds

def _simple(which: int):
    return lambda pd, pr, a: B.drc_simple_bounds(make_params(pd, pr))[which]


CURVES: dict[str, dict[str, Callable]] = {
    "bdc": {
        "simple_lower": _simple(0),
        "upper": _simple(1),
        "d2_iud": lambda pd, pr, a: B.d2_iud(pd, a.mmax or 400),
        "d2_iud_closed": lambda pd, pr, a: B.d2_iud_closed(pd),
        "small_p_sir": lambda pd, pr, a: B.bdc_small_p_sir(pd),
        "sir_partial": lambda pd, pr, a: B.bdc_sir_partial(a.i, a.jmax, pd),
        "markov1_d2": lambda pd, pr, a: B.bdc_markov1_d2(pd, a.mmax or 64),
        "markov1_d1": lambda pd, pr, a: B.bdc_markov1_frak_d1(pd),
    },
    "brc": {
        "simple_lower": _simple(0),
        "upper": _simple(1),
        "markov1": lambda pd, pr, a: B.brc_markov1_max(pr, a.kmax or 400),
        "sir": lambda pd, pr, a: B.brc_markov1_rate(pr, 0.5, a.kmax or 400),
        "r2": lambda pd, pr, a: B.brc_r2_closed(pr),
        "small_p_sir": lambda pd, pr, a: B.brc_small_p_sir(pr),
    },
    "drc": {"simple_lower": _simple(0), "upper": _simple(1)},
    "sdrc": {"simple_lower": _simple(0), "upper": _simple(1)},
}

BOUND_COLUMNS = ("p", "p_d", "p_r", "value", "kind", "argmax", "validity", "truncation", "note")


def _bound_point(task):
    channel, curve, p, fixed_pr, ns = task
    args = argparse.Namespace(**ns)
    pd, pr = {"bdc": (p, 0.0), "brc": (0.0, p), "drc": (p, fixed_pr), "sdrc": (p, p)}[channel]
    try:
        bv = CURVES[channel][curve](pd, pr, args)
    except ValidityError as exc:
        return (p, pd, pr, "", "", "", "", "", str(exc))
    trunc = json.dumps(bv.truncation_report, sort_keys=True) if bv.truncation_report else ""
    arg = "" if bv.argmax is None else repr(float(bv.argmax))
    return (p, pd, pr, repr(float(bv.value)), bv.kind, arg, bv.validity, trunc, "")


def _bounds_csv(args, curve: str) -> str:
    ns = {"mmax": args.mmax, "kmax": args.kmax, "i": args.i, "jmax": args.jmax}
    fixed_pr = args.pr[0] if args.pr else 0.0
    tasks = [(args.channel, curve, p, fixed_pr, ns) for p in args.pgrid]
    rows = run_tasks(_bound_point, tasks, args.jobs)
    buf = io.StringIO()
    meta = config_echo(args)
    meta["curve"] = curve
    buf.write(header("bounds", meta))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BOUND_COLUMNS)
    w.writerows(rows)
    return buf.getvalue()


def cmd_bounds(args) -> int:
    curves = CURVES[args.channel]
    if args.curve == "all":
        if not args.out or args.out == "-":
            raise UsageError("--curve all writes one file per curve; give --out DIR")
        os.makedirs(args.out, exist_ok=True)
        for name in curves:
            emit(_bounds_csv(args, name), os.path.join(args.out, f"{args.channel}_{name}.csv"))
        return EXIT_OK
    if args.curve not in curves:
        raise UsageError(f"curve {args.curve!r} not available for {args.channel}; "
                         f"choose from {', '.join(curves)} or all")
    emit(_bounds_csv(args, args.curve), args.out)
    return EXIT_OK


# ---------------------------------------------------------------- sir

def _sir_task(task):
    pd, pr, m, n, seed, chunks = task
    return sir_estimate(make_params(pd, pr), m, n, seed, chunks=chunks)


def cmd_sir(args) -> int:
    tasks = [(pd, pr, m, args.n, s, args.chunks)
             for pd, pr in param_points(args) for m in args.m for s in args.seed]
    rows = run_tasks(_sir_task, tasks, args.jobs)
    meta = config_echo(args)
    text = rate_csv_rows(rows, meta)
    emit(text.replace(f"# syncrate {__version__}\n", header("sir", {}), 1), args.out)
    return EXIT_OK


# ---------------------------------------------------------------- optimize

OPT_COLUMNS = ("p_d", "p_r", "m", "mu", "n", "seed", "iteration", "value", "stderr",
               "H_Y_hat", "H_XY_hat", "best", "converged", "p_one_given_context")


def _opt_task(task):
    pd, pr, m, mu, n, seed, max_iter = task
    res = gbaa_optimize(make_params(pd, pr), m, mu, n, max_iter, seed)
    rows = []
    for k, (r, law) in enumerate(zip(res.rate_trace, res.inputs_trace)):
        table = ";".join(f"{v:.10g}" for v in law.transition[:, 1])
        rows.append((pd, pr, m, mu, n, seed, k, repr(r.value), repr(r.stderr),
                     repr(r.H_Y_hat), repr(r.H_XY_hat), int(k == res.best_index),
                     int(res.converged), table))
    return rows


def cmd_optimize(args) -> int:
    tasks = []
    for pd, pr in param_points(args):
        for m in args.m:
            mus = args.mu if args.mu is not None else [2 * m]
            for mu in mus:
                for s in args.seed:
                    tasks.append((pd, pr, m, mu, args.n, s, args.max_iter))
    results = run_tasks(_opt_task, tasks, args.jobs)
    buf = io.StringIO()
    buf.write(header("optimize", config_echo(args)))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(OPT_COLUMNS)
    for rows in results:
        w.writerows(rows)
    emit(buf.getvalue(), args.out)
    return EXIT_OK


# ---------------------------------------------------------------- simulate

def cmd_simulate(args) -> int:
    params = make_params(args.pd[0], args.pr[0])
    base = args.seed[0]
    lines = []
    for k in range(args.count):
        if args.x is not None:
            x = np.array([int(c) for c in args.x], dtype=np.int8)
        else:
            x = MarkovInputMu.iud().sample(args.n, make_rng([base, k]))
        lines.append(sample_trace(params, x, base + k).to_json())
    emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


# ---------------------------------------------------------------- oracle

def _oracle_task(task):
    variant, pd, pr, n, m = task
    params = make_params(pd, pr)
    if variant == "true":
        return exact_mi_true(params, n)
    if variant == "dagger":
        return exact_mi_dagger(params, n, m)
    return exact_mi_star(params, n, m)


def cmd_oracle(args) -> int:
    ms = [None] if args.variant == "true" else list(args.m)
    tasks = [(args.variant, pd, pr, n, m)
             for pd, pr in param_points(args) for n in args.n for m in ms]
    rows = run_tasks(_oracle_task, tasks, args.jobs)
    text = exact_mi_csv(rows, config_echo(args))
    emit(text.replace(f"# syncrate {__version__}\n", header("oracle", {}), 1), args.out)
    return EXIT_OK


# ---------------------------------------------------------------- verify

def cmd_verify(args) -> int:
    from .verify import run_all

    results = run_all()
    lines = []
    hard_fail = 0
    for r in results:
        tag = "PASS" if r.ok else ("FAIL" if r.hard else "WARN")
        hard_fail += int(r.hard and not r.ok)
        lines.append(f"{tag}  {r.name}: {r.detail}")
    lines.append(f"{len(results)} checks, {hard_fail} hard failure(s)")
    emit("\n".join(lines) + "\n", args.out)
    return EXIT_VERIFY if hard_fail else EXIT_OK


# ---------------------------------------------------------------- constants

def cmd_constants(args) -> int:
    psi = B.psi_1()
    d = B.constant_d()
    lines = [
        f"psi_1 = {psi:.12f}   psi_{{i,1}} summed in closed form at i = {B.PSI_I}",
        f"d     = {d:.12f}   log2(2e) - psi_1",
        f"r     = {B.constant_r():.12f}   2 - d",
        f"p*    = {B.P_STAR:.12f}   exp(-(1 + ln 2) / (2 ln 2))",
        f"p_*   = {B.p_sub_star():.12f}   bisection root of (1 - p)(2^(2p) + 1) = 1",
    ]
    emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


# ---------------------------------------------------------------- parser

def _common(p: argparse.ArgumentParser, n_default=None, seed_default="0",
            m_default="1", n_type=int) -> None:
    p.add_argument("--pd", type=float_grid, default=float_grid("0"),
                   help="deletion probability (grid syntax allowed)")
    p.add_argument("--pr", type=float_grid, default=float_grid("0"),
                   help="replication probability (grid syntax allowed)")
    p.add_argument("--pgrid", type=float_grid, default=None,
                   help="symmetric grid p_d = p_r = p; overrides --pd/--pr")
    p.add_argument("--m", type=int_list, default=int_list(m_default), help="clip widths")
    p.add_argument("--mu", type=int_list, default=None, help="Markov input order(s)")
    p.add_argument("--n", type=n_type, default=n_default)
    p.add_argument("--seed", type=int_list, default=int_list(seed_default))
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--out", default=None, help="output path (default stdout)")
    p.add_argument("--config", default=None, help="key=value file; flags override it")
    p.add_argument("--kmax", type=int, default=None, help="BRC series truncation")
    p.add_argument("--mmax", type=int, default=None, help="BDC series truncation")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="syncrate", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"syncrate {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bounds", help="analytic bound curves as CSV")
    _common(p)
    p.add_argument("--channel", choices=sorted(CURVES), default="bdc")
    p.add_argument("--curve", default="all")
    p.set_defaults(pgrid=float_grid("0:0.5:0.01"))
    p.add_argument("--i", type=int, default=2, help="i for sir_partial")
    p.add_argument("--jmax", type=int, default=6, help="j for sir_partial")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("sir", help="Monte Carlo SIR of the star channel")
    _common(p, n_default=500_000)
    p.add_argument("--chunks", type=int, default=DEFAULT_CHUNKS)
    p.set_defaults(func=cmd_sir)

    p = sub.add_parser("optimize", help="Markov input optimisation (GBAA)")
    _common(p, n_default=100_000)
    p.add_argument("--max-iter", type=int, default=20)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("simulate", help="dump channel traces as JSON lines")
    _common(p, n_default=32)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--x", default=None, help="explicit input bit string")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("oracle", help="exact small-n mutual information")
    _common(p, n_default=int_list("1..4"), n_type=int_list)
    p.add_argument("--variant", choices=("true", "dagger", "star"), default="star")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("verify", help="run the invariant suite")
    p.add_argument("--out", default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("constants", help="print derived constants")
    p.add_argument("--out", default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_constants)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    try:
        if known.config:
            extra = read_config(known.config)
            # file values go right after the subcommand so later flags win
            cut = 1 if argv and not argv[0].startswith("-") else 0
            argv = argv[:cut] + extra + argv[cut:]
    except (OSError, UsageError) as exc:
        print(f"syncrate: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UsageError, DomainError, SizeError, ValidityError) as exc:
        print(f"syncrate: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
