"""Command-line entry point.

    arpdp synth    --synth-n 95 --t 30 --synth-base-rate 0.25 --out run/
    arpdp release  --input events.csv --mechanism naive --epsilon 5 --t 30 --seed 7 --out run/
    arpdp detect   --series run/released.csv --out run/
    arpdp evaluate --input events.csv --mechanism histogram-delta --epsilon 4 --t 30 --out run/
    arpdp sweep    --synth-n 95 --t 30 --epsilons 1-12 --out sweep/

``--config FILE`` loads a flat JSON object whose keys are flag names (``epsilon``,
``delta-prime`` or ``delta_prime``, ...); flags given on the command line win.

Exit status: 0 on success, 2 on invalid parameters, 3 on I/O problems.
"""

from __future__ import annotations

import argparse
import contextlib
import hashlib
import json
import logging
import os
import shutil
import sys
import tempfile
import warnings
from typing import Dict, List, Optional

from . import __version__
from .degree import BinSpec
from .detect import DetectorParams, ewma_detect
from .dp_core import PrivacyParamError
from .evaluate import Evaluator, plot_data_csv, reports_to_csv, reports_to_json, sweep
from .ingest import (
    ABORT,
    SKIP,
    WEEK_SECONDS,
    CaptureConfig,
    bucket_intervals,
    events_to_csv,
    graphs_to_events,
    read_events,
    synth_scenario,
    user_count,
)
from .mechanisms import MECHANISMS, NAIVE_NODE, SCALAR, ReleaseRequest, make_params, read_series_csv, release
from .plots import plot_sweep

logger = logging.getLogger("arpdp")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3

LOCK_NAME = ".arpdp.lock"


class ValidationError(Exception):
    pass


# --- argument parsing -------------------------------------------------------


def _mechanism(text):
    m = text.replace("-", "_")
    if m not in MECHANISMS + (NAIVE_NODE,):
        raise argparse.ArgumentTypeError(f"unknown mechanism {text!r}")
    return m


def _float_list(text):
    """``"1,2,4"`` or an inclusive integer range ``"1-12"``."""
    text = str(text).strip()
    if "-" in text and "," not in text and "e-" not in text.lower():
        lo, hi = text.split("-", 1)
        return [float(v) for v in range(int(lo), int(hi) + 1)]
    return [float(v) for v in text.split(",") if v.strip()]


def _anomalies(text):
    out = []
    for part in str(text).split(","):
        if not part.strip():
            continue
        j, mag = part.split(":")
        out.append((int(j), int(mag)))
    return out


def _add_input(p):
    g = p.add_argument_group("input")
    g.add_argument("--input", help="CSV of timestamp,source,destination ARP requests")
    g.add_argument("--synth-n", type=int, help="generate a synthetic LAN with this many users instead of --input")
    g.add_argument("--synth-base-rate", type=float, default=0.25, help="mean out-degree per user per interval")
    g.add_argument("--synth-anomalies", type=_anomalies, default=[], help="interval:magnitude,... degree spikes")
    g.add_argument("--synth-spread", type=int, default=1, help="users affected by each spike")
    g.add_argument("--synth-seed", type=int, default=0)
    g.add_argument("--t", type=int, help="number of intervals")
    g.add_argument("--interval-length", type=int, default=WEEK_SECONDS, help="seconds per interval")
    g.add_argument("--origin", type=int, default=0, help="timestamp at which interval 1 starts")
    g.add_argument("--n", type=int, help="user count for delta derivation (default: users observed)")
    g.add_argument("--pseudonymize-key", help="replace ids by a keyed hash at parse time")
    g.add_argument("--on-malformed", choices=(ABORT, SKIP), default=ABORT)


def _add_privacy(p, single=True):
    g = p.add_argument_group("privacy")
    if single:
        g.add_argument("--mechanism", type=_mechanism, default="naive",
                       help="naive | histogram | naive-delta | histogram-delta")
        g.add_argument("--epsilon", type=float)
        g.add_argument("--delta-prime", type=float, default=0.01)
    g.add_argument("--bins", type=BinSpec.parse, default=BinSpec(), help='degree bins, e.g. "1,2,3+"')
    g.add_argument("--allow-infeasible", action="store_true",
                   help="permit the naive-node mechanism (Laplace(t*n/eps) noise)")


def _add_detector(p):
    g = p.add_argument_group("detector")
    g.add_argument("--lambda", dest="lam", type=float, default=0.25)
    g.add_argument("--k", type=float, default=3.0)
    g.add_argument("--warmup", type=int, default=4)


def build_parser():
    parser = argparse.ArgumentParser(prog="arpdp", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="flat JSON object of flag values")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("release", help="privatize interval degree data")
    _add_input(p)
    _add_privacy(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output directory")
    p.add_argument("--new-budget-acknowledged", action="store_true",
                   help="allow replacing an existing release in --out (spends a new budget)")

    p = sub.add_parser("detect", help="label a series with the EWMA detector")
    p.add_argument("--series", help="released or raw series CSV")
    _add_input(p)
    p.add_argument("--kind", choices=("scalar", "histogram"), default="scalar",
                   help="raw statistic to use when reading --input/--synth-*")
    p.add_argument("--bins", type=BinSpec.parse, default=BinSpec())
    _add_detector(p)
    p.add_argument("--out", help="output directory")

    p = sub.add_parser("evaluate", help="utility of one mechanism configuration over several seeds")
    _add_input(p)
    _add_privacy(p)
    _add_detector(p)
    p.add_argument("--seed", type=int, default=0, help="first seed")
    p.add_argument("--seeds", type=int, default=20, help="number of seeds")
    p.add_argument("--plot-data", action="store_true", help="also write tidy long-format CSV")
    p.add_argument("--out", help="output directory")

    p = sub.add_parser("sweep", help="utility over a grid of epsilon, delta' and mechanisms")
    _add_input(p)
    _add_privacy(p, single=False)
    _add_detector(p)
    p.add_argument("--epsilons", type=_float_list, default=_float_list("1-12"))
    p.add_argument("--delta-primes", type=_float_list, default=[0.01])
    p.add_argument("--mechanisms", default=",".join(MECHANISMS))
    p.add_argument("--seed", type=int, default=0, help="first seed")
    p.add_argument("--seeds", type=int, default=20, help="number of seeds")
    p.add_argument("--plot-data", action="store_true", help="also write tidy long-format CSV")
    p.add_argument("--no-plots", action="store_true")
    p.add_argument("--out", help="output directory")

    p = sub.add_parser("synth", help="write a synthetic ARP event CSV")
    _add_input(p)
    p.add_argument("--out", help="output directory")
    return parser, sub


def _apply_config(parser, subparsers, argv):
    pre, _ = parser.parse_known_args(argv)
    if not pre.config:
        return
    try:
        with open(pre.config, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config {pre.config}: {exc}") from None
    if not isinstance(cfg, dict) or any(isinstance(v, (dict, list)) for v in cfg.values()):
        raise ValidationError("config must be a flat JSON object")
    sp = subparsers.choices[pre.command]
    actions = {a.dest: a for a in sp._actions}
    for opt, a in list(sp._option_string_actions.items()):
        actions.setdefault(opt.lstrip("-").replace("-", "_"), a)
    defaults = {}
    for key, value in cfg.items():
        a = actions.get(key.replace("-", "_"))
        if a is None or a.dest == "help":
            raise ValidationError(f"config key {key!r} is not a {pre.command} option")
        if a.type is not None and value is not None and not isinstance(value, bool):
            try:
                value = a.type(value if isinstance(value, str) or a.type in (int, float) else str(value))
            except (ValueError, TypeError, argparse.ArgumentTypeError) as exc:
                raise ValidationError(f"config key {key!r}: {exc}") from None
        defaults[a.dest] = value
    sp.set_defaults(**defaults)


# --- shared helpers ---------------------------------------------------------


def _load_graphs(args):
    if args.t is None:
        raise ValidationError("--t is required")
    if args.t < 1:
        raise ValidationError(f"--t must be >= 1, got {args.t}")
    if args.input and args.synth_n:
        raise ValidationError("use either --input or --synth-n, not both")
    if args.synth_n:
        try:
            graphs = synth_scenario(args.synth_n, args.t, args.synth_base_rate, args.synth_anomalies,
                                    seed=args.synth_seed, spread=args.synth_spread)
        except ValueError as exc:
            raise ValidationError(str(exc)) from None
        n = args.n or args.synth_n
        source = {"synth_n": args.synth_n, "synth_base_rate": args.synth_base_rate,
                  "synth_anomalies": ",".join(f"{j}:{m}" for j, m in args.synth_anomalies),
                  "synth_spread": args.synth_spread, "synth_seed": args.synth_seed}
        return graphs, n, source
    if not args.input:
        raise ValidationError("an input is required: --input CSV or --synth-n N")
    key = args.pseudonymize_key.encode() if args.pseudonymize_key else None
    try:
        cfg = CaptureConfig(t=args.t, interval_length=args.interval_length, pseudonymize=key is not None,
                            pseudonym_key=key or b"", origin=args.origin)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            events = read_events(args.input, on_error=args.on_malformed, pseudonym_key=key)
            graphs = bucket_intervals(events, cfg)
        for w in caught:
            logger.warning("%s", w.message)
    except ValueError as exc:
        raise ValidationError(f"{args.input}: {exc}") from None
    with open(args.input, "rb") as fh:
        digest = hashlib.sha256(fh.read()).hexdigest()
    n = args.n or max(user_count(graphs), 1)
    source = {"input": os.path.abspath(args.input), "input_file_sha256": digest,
              "interval_length": args.interval_length, "origin": args.origin,
              "pseudonymized": key is not None, "on_malformed": args.on_malformed}
    return graphs, n, source


def _detector(args):
    try:
        return DetectorParams(lam=args.lam, k=args.k, warmup=args.warmup)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


@contextlib.contextmanager
def _output_dir(path):
    """Stage artifacts in a temp dir under ``path``; publish on success only.

    Holds a lock file for the duration so two runs cannot share ``path``.
    """
    if not path:
        raise ValidationError("--out is required")
    os.makedirs(path, exist_ok=True)
    lock = os.path.join(path, LOCK_NAME)
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise OSError(f"{path} is locked by another run (remove {lock} if stale)") from None
    os.close(fd)
    stage = tempfile.mkdtemp(prefix=".stage-", dir=path)
    try:
        yield stage
        for root, _, files in os.walk(stage):
            rel = os.path.relpath(root, stage)
            dest_dir = os.path.normpath(os.path.join(path, rel))
            os.makedirs(dest_dir, exist_ok=True)
            for name in sorted(files):
                os.replace(os.path.join(root, name), os.path.join(dest_dir, name))
    finally:
        shutil.rmtree(stage, ignore_errors=True)
        os.remove(lock)


def _write(stage, name, text):
    full = os.path.join(stage, name)
    os.makedirs(os.path.dirname(full), exist_ok=True)
    with open(full, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return full


# --- subcommands ------------------------------------------------------------


def cmd_release(args):
    if not args.out:
        raise ValidationError("--out is required")
    if args.epsilon is None:
        raise ValidationError("--epsilon is required")
    if os.path.exists(os.path.join(args.out, "released.csv")) and not args.new_budget_acknowledged:
        raise ValidationError(
            f"{args.out} already holds a release; a second release spends a new privacy budget on the same "
            "users. Pass --new-budget-acknowledged to proceed")
    graphs, n, source = _load_graphs(args)
    try:
        params = make_params(args.mechanism, args.epsilon, args.t, n, args.delta_prime)
        req = ReleaseRequest(graphs, params, args.mechanism, args.bins, args.seed,
                             allow_infeasible=args.allow_infeasible)
        out = release(req)
    except (PrivacyParamError, ValueError) as exc:
        raise ValidationError(str(exc)) from None
    echo = dict(out.params_echo, source=source)
    with _output_dir(args.out) as stage:
        _write(stage, "released.csv", out.to_csv())
        _write(stage, "params.json", _dump(echo))
    logger.info("released %d intervals (%s) to %s", len(out.values), args.mechanism, args.out)


def cmd_detect(args):
    det = _detector(args)
    if args.series:
        with open(args.series, "r", encoding="utf-8") as fh:
            text = fh.read()
        try:
            kind, values = read_series_csv(text)
        except ValueError as exc:
            raise ValidationError(f"{args.series}: {exc}") from None
        source = {"series": os.path.abspath(args.series),
                  "series_sha256": hashlib.sha256(text.encode()).hexdigest()}
    else:
        from .mechanisms import statistic

        graphs, _, source = _load_graphs(args)
        kind = args.kind
        values = statistic(graphs, kind, args.bins).tolist()
    from .evaluate import detection_series

    try:
        labels = ewma_detect(detection_series(values, kind), det)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    meta = {"version": __version__, "kind": kind, "lambda": det.lam, "k": det.k, "warmup": det.warmup,
            "var_floor": det.var_floor, "source": source,
            "note": "histogram series are reduced to L1 distances between consecutive rows" if kind != SCALAR else None}
    with _output_dir(args.out) as stage:
        _write(stage, "labels.csv", labels.to_csv())
        _write(stage, "detect.json", _dump(meta))


def _seeds(args):
    if args.seeds < 1:
        raise ValidationError("--seeds must be >= 1")
    if args.seed < 0:
        raise ValidationError("--seed must be >= 0")
    return list(range(args.seed, args.seed + args.seeds))


def cmd_evaluate(args):
    if args.epsilon is None:
        raise ValidationError("--epsilon is required")
    graphs, n, source = _load_graphs(args)
    det = _detector(args)
    seeds = _seeds(args)
    try:
        make_params(args.mechanism, args.epsilon, args.t, n, args.delta_prime)
    except PrivacyParamError as exc:
        raise ValidationError(str(exc)) from None
    rep = Evaluator(graphs, n, args.bins, det).report(args.mechanism, args.epsilon, args.delta_prime, seeds)
    if rep.error:
        raise ValidationError(rep.error)
    meta = _meta(args, n, seeds, det, source)
    with _output_dir(args.out) as stage:
        _write(stage, "utility.csv", reports_to_csv([rep]))
        _write(stage, "utility.json", reports_to_json([rep], meta))
        if args.plot_data:
            _write(stage, "plot_data.csv", plot_data_csv([rep]))


def _meta(args, n, seeds, det, source):
    return {"version": __version__, "t": args.t, "n": n, "seeds": [seeds[0], seeds[-1]],
            "bins": ",".join(args.bins.labels), "detector": {"lambda": det.lam, "k": det.k, "warmup": det.warmup,
                                                              "var_floor": det.var_floor},
            "source": source}


def cmd_sweep(args):
    graphs, n, source = _load_graphs(args)
    det = _detector(args)
    seeds = _seeds(args)
    mechs = [_mechanism(m.strip()) for m in args.mechanisms.split(",") if m.strip()]
    if NAIVE_NODE in mechs:
        raise ValidationError("naive-node is not part of sweeps")
    try:
        reports = sweep(graphs, args.epsilons, seeds, mechs, args.delta_primes, n=n, bin_spec=args.bins, detector=det)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    meta = dict(_meta(args, n, seeds, det, source), epsilons=args.epsilons, delta_primes=args.delta_primes,
                mechanisms=mechs)
    with _output_dir(args.out) as stage:
        _write(stage, "sweep.csv", reports_to_csv(reports))
        _write(stage, "sweep.json", reports_to_json(reports, meta))
        if args.plot_data:
            _write(stage, "plot_data.csv", plot_data_csv(reports))
        if not args.no_plots:
            plot_sweep(reports, os.path.join(stage, "figures"))
    bad = [r for r in reports if r.error]
    if bad:
        logger.warning("%d of %d cells were invalid", len(bad), len(reports))


def cmd_synth(args):
    if not args.synth_n:
        raise ValidationError("--synth-n is required")
    args.input = None
    graphs, n, source = _load_graphs(args)
    events = graphs_to_events(graphs, args.interval_length, args.origin, seed=args.synth_seed)
    meta = dict(source, version=__version__, t=args.t, n=n, interval_length=args.interval_length,
                origin=args.origin, events=len(events))
    with _output_dir(args.out) as stage:
        _write(stage, "events.csv", events_to_csv(events))
        _write(stage, "synth.json", _dump(meta))


COMMANDS = {
    "release": cmd_release,
    "detect": cmd_detect,
    "evaluate": cmd_evaluate,
    "sweep": cmd_sweep,
    "synth": cmd_synth,
}


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, sub = build_parser()
    try:
        _apply_config(parser, sub, argv)
        args = parser.parse_args(argv)
    except ValidationError as exc:
        print(f"arpdp: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"arpdp: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"arpdp: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"arpdp: error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
