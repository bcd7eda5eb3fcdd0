"""Command-line entry point: simulate, features, stats, power, train-eval, report.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

from . import __version__
from .classify import DEFAULT_C, DEFAULT_SPLITS, evaluate_modes
from .errors import InvalidParams, PursuitError, Unattainable, ZeroEffect
from .features import extract_row, features_csv_text, read_features_csv, usable_triples
from .preprocess import DEFAULT_PAD
from .report import build_report
from .stats import mc_power, required_n, stats_markdown, stats_table, stats_tsv
from .synth import CohortSpec, with_overrides, write_cohort
from .trace import StimulusSpec, atomic_write_text, find_runs, iter_runs, read_run

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2
DEFAULT_SEED = 42
SEED_ENV = "PURSUIT_SEED"

log = logging.getLogger("pursuitlab")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return DEFAULT_SEED
    try:
        seed = int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an unsigned integer, got {raw!r}") from None
    if seed < 0:
        raise UsageError(f"{SEED_ENV} must be an unsigned integer")
    return seed


def _seed(args) -> int:
    if args.seed is not None:
        if args.seed < 0:
            raise UsageError("--seed must be an unsigned integer")
        return args.seed
    return default_seed()


def _overrides(pairs: list[str]) -> dict[str, float]:
    out = {}
    for item in pairs or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        try:
            out[key.strip()] = float(value)
        except ValueError:
            raise UsageError(f"--set {key}: {value!r} is not a number") from None
    return out


# --------------------------------------------------------------------------
# commands

def cmd_simulate(args) -> int:
    try:
        stimulus = StimulusSpec(frequency_hz=args.frequency, radius_deg=args.radius,
                                duration_s=args.duration, sample_rate_hz=args.sample_rate)
        cohort = CohortSpec(seed=_seed(args), n_subjects=args.subjects, runs_per_session=args.runs)
        cohort = with_overrides(cohort, _overrides(args.set))
    except KeyError as exc:
        raise UsageError(f"unknown generator parameter {exc.args[0]!r} "
                         "(use sober.<name>, shift.<name> or sd.<name>)") from None
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = Path(args.out)
    try:
        result = write_cohort(out, cohort, stimulus)
    except OSError as exc:
        print(f"error: cannot write to {out}: {exc}", file=sys.stderr)
        return EXIT_DATA
    print(f"wrote {len(result.runs)} runs for {len(result.subjects)} subjects to {out}")
    return EXIT_OK


def cmd_features(args) -> int:
    root = Path(args.input)
    paths = find_runs(root) if root.is_dir() else []
    if not paths:
        print(f"error: no runs found under {root}", file=sys.stderr)
        return EXIT_DATA
    rows = [extract_row(read_run(p), args.pad) for p in paths]
    atomic_write_text(Path(args.out), features_csv_text(rows))
    failed = sum(r.metrics is None for r in rows)
    print(f"wrote {len(rows)} feature rows to {args.out}" + (f" ({failed} degenerate)" if failed else ""))
    return EXIT_OK


def _load_triples(path: str):
    try:
        rows = read_features_csv(path)
    except FileNotFoundError:
        raise PursuitError(f"{path}: features file not found") from None
    except ValueError as exc:
        raise PursuitError(str(exc)) from None
    triples = usable_triples(rows)
    if not triples:
        raise PursuitError(f"{path}: no usable feature rows")
    return rows, triples


def cmd_stats(args) -> int:
    _, triples = _load_triples(args.features)
    rows = stats_table(triples)
    md = stats_markdown(rows)
    if args.out:
        atomic_write_text(Path(args.out), stats_tsv(rows))
    if args.markdown:
        atomic_write_text(Path(args.markdown), md)
    sys.stdout.write(md)
    return EXIT_OK


def cmd_power(args) -> int:
    try:
        n = required_n(args.d, args.alpha, args.power, args.sided)
    except (ZeroEffect, InvalidParams, Unattainable) as exc:
        raise UsageError(f"{type(exc).__name__}: {exc}") from None
    print(f"required_n = {n:.4f} (d={args.d}, alpha={args.alpha}, power={args.power}, {args.sided}-sided)")
    if args.verify:
        n_int = math.ceil(n)
        observed = mc_power(args.d, n_int, args.alpha, args.sided, args.sims, _seed(args))
        se = math.sqrt(max(observed * (1 - observed), 1e-12) / args.sims)
        verdict = "agrees" if observed >= args.power - 0.02 else "DISAGREES"
        print(f"mc_power at n={n_int}: {observed:.4f} (se {se:.4f}, {args.sims} sims) {verdict} with target {args.power}")
    return EXIT_OK


def cmd_train_eval(args) -> int:
    if args.splits < 1:
        raise UsageError("--splits must be >= 1")
    if not args.c > 0:
        raise UsageError("--c must be > 0")
    _, triples = _load_triples(args.features)
    reports = evaluate_modes(triples, args.splits, args.c, _seed(args))
    out = Path(args.out)
    for mode, rep in reports.items():
        atomic_write_text(out / f"{mode}.json", json.dumps(rep.to_dict(), indent=2) + "\n")
        print(f"{mode}: median AUC {rep.median_auc:.3f}, best AUC {rep.best_auc:.3f}, "
              f"median accuracy {rep.median_accuracy:.3f} over {rep.n_splits} splits")
    return EXIT_OK


def cmd_report(args) -> int:
    rows, _ = _load_triples(args.features)
    runs = list(iter_runs(Path(args.traces)))
    if not runs:
        raise PursuitError(f"no runs found under {args.traces}")
    written = build_report(runs, rows, args.subject, Path(args.out))
    print(f"wrote {len(written)} files to {args.out}")
    return EXIT_OK


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pursuitlab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    seed_help = f"RNG seed (default: ${SEED_ENV} or {DEFAULT_SEED})"

    s = sub.add_parser("simulate", help="generate a synthetic cohort of trace files")
    s.add_argument("--subjects", type=int, default=19)
    s.add_argument("--runs", type=int, default=3, help="runs per session (1-3)")
    s.add_argument("--seed", type=int, help=seed_help)
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--duration", type=float, default=30.0, help="run length in seconds")
    s.add_argument("--sample-rate", type=float, default=60.0)
    s.add_argument("--radius", type=float, default=10.0, help="stimulus radius in degrees")
    s.add_argument("--frequency", type=float, default=0.4)
    s.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a generator parameter, e.g. shift.blink_rate_hz=0 or sd.pursuit_gain=0.05")
    s.set_defaults(func=cmd_simulate)

    f = sub.add_parser("features", help="extract per-run metrics into a CSV")
    f.add_argument("--input", required=True, help="trace directory")
    f.add_argument("--out", required=True, help="features CSV path")
    f.add_argument("--pad", type=int, default=DEFAULT_PAD, help="blink padding in samples")
    f.set_defaults(func=cmd_features)

    st = sub.add_parser("stats", help="paired statistics table")
    st.add_argument("--features", required=True)
    st.add_argument("--out", help="TSV output path")
    st.add_argument("--markdown", help="markdown output path")
    st.set_defaults(func=cmd_stats)

    pw = sub.add_parser("power", help="observations needed for a paired t-test")
    pw.add_argument("--d", type=float, required=True, help="effect size")
    pw.add_argument("--alpha", type=float, default=0.05)
    pw.add_argument("--power", type=float, default=0.8)
    pw.add_argument("--sided", choices=("one", "two"), default="one")
    pw.add_argument("--verify", action="store_true", help="cross-check with Monte Carlo")
    pw.add_argument("--sims", type=int, default=100_000)
    pw.add_argument("--seed", type=int, help=seed_help)
    pw.set_defaults(func=cmd_power)

    te = sub.add_parser("train-eval", help="linear SVM over randomized 50/50 splits, raw and normalized")
    te.add_argument("--features", required=True)
    te.add_argument("--splits", type=int, default=DEFAULT_SPLITS)
    te.add_argument("--c", type=float, default=DEFAULT_C, help="SVM regularization C")
    te.add_argument("--seed", type=int, help=seed_help)
    te.add_argument("--out", required=True, help="directory for raw.json and normalized.json")
    te.set_defaults(func=cmd_train_eval)

    r = sub.add_parser("report", help="SVG figures and markdown index")
    r.add_argument("--traces", required=True)
    r.add_argument("--features", required=True)
    r.add_argument("--subject", required=True)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"pursuitlab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PursuitError as exc:
        print(f"pursuitlab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"pursuitlab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
