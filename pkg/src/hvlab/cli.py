"""Command-line experiment harness.

Subcommands: ``simulate``, ``compare``, ``sweep``, ``check-lemma`` and
``scan``.  Every option can also come from a JSON file given with
``--config``; flags on the command line win.  Exit codes: 0 ok, 2 usage
error, 3 starvation, 4 verdict fails (or a lemma counterexample),
5 inconclusive (or a failed lemma premise).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import circuits, metrics, samplers
from .distribution import OutcomeDistribution
from .metrics import Verdict
from .qsim import outcome_distribution

EXIT_OK, EXIT_USAGE, EXIT_STARVED, EXIT_FAILS, EXIT_INCONCLUSIVE = 0, 2, 3, 4, 5
VARIANTS = ("t_c", "t_nl", "t_es_limit")
VERDICT_EXIT = {
    Verdict.HOLDS: EXIT_OK,
    Verdict.FAILS: EXIT_FAILS,
    Verdict.INCONCLUSIVE: EXIT_INCONCLUSIVE,
    Verdict.PREMISE_FAILED: EXIT_INCONCLUSIVE,
}

DEFAULTS = {
    "circuit": "malus",
    "variant": "t_nl",
    "x": 0,
    "theta1": 0.0,
    "theta2": 0.0,
    "theta3": 0.0,
    "theta4": 0.0,
    "deltas": [1e-3],
    "seed": 0,
    "accepted": 100_000,
    "samples": None,
    "max_trials": None,
    "workers": 1,
    "method": "auto",
    "kicks": 2,
    "extra_kick": False,
    "epsilon": 0.05,
    "out": None,
    "dist_out": None,
}


class UsageError(ValueError):
    pass


def _angle(text: str) -> float:
    """Float, or a simple ``pi`` expression such as ``pi/8`` or ``3*pi/4``."""
    t = text.strip().lower().replace(" ", "")
    if "pi" not in t:
        return float(t)
    num, _, den = t.partition("/")
    coef = num.replace("pi", "").rstrip("*") or "1"
    coef = "-1" if coef == "-" else coef
    return float(coef) * math.pi / (float(den) if den else 1.0)


def _count(text: str) -> int:
    """Integer flag that also accepts scientific notation such as ``1e15``."""
    value = float(text)
    if not value.is_integer():
        raise argparse.ArgumentTypeError(f"{text!r} is not a whole number")
    return int(value)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with option values; flags override it")
    p.add_argument("--circuit", choices=sorted(circuits.BUILDERS))
    p.add_argument("--variant", choices=VARIANTS)
    p.add_argument("--x", type=int, choices=(0, 1), help="malus input bit")
    for i in range(1, 5):
        p.add_argument(f"--theta{i}", type=_angle, help="analyzer angle (radians, pi/8 style allowed)")
    p.add_argument("--deltas", type=float, nargs="+", metavar="D",
                   help="one value for all three, or delta_phi_L delta_phi_M delta_alpha")
    p.add_argument("--seed", type=int)
    p.add_argument("--accepted", type=_count, help="accepted samples (t_nl) or samples (t_c)")
    p.add_argument("--samples", type=_count, help="samples for t_c; defaults to --accepted")
    p.add_argument("--max-trials", dest="max_trials", type=_count)
    p.add_argument("--workers", type=int)
    p.add_argument("--method", choices=("auto", "brute", "conditional"))
    p.add_argument("--kicks", type=int, choices=(1, 2), help="EPR: wires that get a kick")
    p.add_argument("--extra-kick", dest="extra_kick", action="store_const", const=True,
                   help="malus: add a second kick layer")
    p.add_argument("--out", help="report path (default stdout)")


def _resolve(args: argparse.Namespace, keys) -> dict:
    cfg = {}
    if getattr(args, "config", None):
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"config: cannot read {args.config}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise UsageError("config: top level must be a JSON object")
        unknown = set(cfg) - set(DEFAULTS) - set(keys)
        if unknown:
            raise UsageError(f"config: unknown fields {sorted(unknown)}")
    out = {}
    for k in keys:
        flag = getattr(args, k, None)
        out[k] = flag if flag is not None else cfg.get(k, DEFAULTS.get(k))
    return out


RUN_KEYS = list(DEFAULTS)


def _deltas(cfg: dict) -> tuple[float, float, float]:
    d = cfg["deltas"]
    d = [d] if isinstance(d, (int, float)) else list(d)
    if len(d) not in (1, 3):
        raise UsageError("deltas: give one value or three")
    try:
        return circuits.as_deltas(d[0] if len(d) == 1 else d)
    except ValueError as exc:
        raise UsageError(f"deltas: {exc}") from exc


def _validate(cfg: dict) -> None:
    if cfg["variant"] not in VARIANTS:
        raise UsageError(f"variant: must be one of {VARIANTS}")
    if cfg["circuit"] not in circuits.BUILDERS:
        raise UsageError(f"circuit: unknown id {cfg['circuit']!r}")
    d = _deltas(cfg)
    if cfg["variant"] == "t_nl" and not all(x > 0 for x in d):
        raise UsageError("deltas: t_nl needs all three deltas > 0")
    if cfg["variant"] == "t_c" and d[0] <= 0:
        raise UsageError("deltas: t_c needs a positive kick width")
    for key in ("accepted", "workers"):
        if cfg[key] is None or int(cfg[key]) < 1:
            raise UsageError(f"{key}: must be a positive integer")
    if cfg["samples"] is not None and int(cfg["samples"]) < 1:
        raise UsageError("samples: must be a positive integer")
    if cfg["max_trials"] is not None and int(cfg["max_trials"]) < 1:
        raise UsageError("max_trials: must be a positive integer")


def _pair(cfg: dict, deltas=None) -> circuits.CircuitPair:
    d = deltas if deltas is not None else _deltas(cfg)
    cid = cfg["circuit"]
    if cid == "malus":
        return circuits.build_malus(int(cfg["x"]), float(cfg["theta2"]), d, bool(cfg["extra_kick"]))
    if cid == "epr":
        return circuits.build_epr(float(cfg["theta1"]), float(cfg["theta2"]), d, int(cfg["kicks"]))
    return circuits.build_double_bell_cnot([float(cfg[f"theta{i}"]) for i in range(1, 5)], d)


def _run(cfg: dict, pair: circuits.CircuitPair) -> samplers.RunReport:
    variant = cfg["variant"]
    if variant == "t_es_limit":
        dist = outcome_distribution(pair.quantum, pair.input_bits)
        return samplers.RunReport(0, 0, dist, int(cfg["seed"]), int(cfg["workers"]), "limit")
    if variant == "t_c":
        n = int(cfg["samples"] or cfg["accepted"])
        return samplers.run_sequential(pair.causal(), int(cfg["seed"]), n, int(cfg["workers"]))
    return samplers.run_rejection(pair.hv, int(cfg["seed"]), int(cfg["accepted"]), cfg["max_trials"],
                                  workers=int(cfg["workers"]), method=cfg["method"])


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _dump(obj: dict) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _provenance(cfg: dict) -> dict:
    keep = {k: v for k, v in cfg.items() if k not in ("out", "dist_out", "config")}
    keep["deltas"] = list(_deltas(cfg))
    return keep


# ---------------------------------------------------------------- commands


def cmd_simulate(args) -> int:
    cfg = _resolve(args, RUN_KEYS)
    _validate(cfg)
    pair = _pair(cfg)
    try:
        report = _run(cfg, pair)
    except samplers.StarvationError as exc:
        exc.report.extra["config"] = _provenance(cfg)
        exc.report.extra["status"] = "starved"
        _emit(exc.report.to_json(), cfg["out"])
        print(f"starvation: {exc}", file=sys.stderr)
        return EXIT_STARVED
    report.extra["config"] = _provenance(cfg)
    short = cfg["variant"] == "t_nl" and report.accepted < int(cfg["accepted"])
    report.extra["status"] = "short" if short else "ok"
    if short:
        print(f"trial budget ran out after {report.accepted} accepted samples", file=sys.stderr)
    _emit(report.to_json(), cfg["out"])
    if cfg["dist_out"]:
        report.distribution.save(cfg["dist_out"])
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _resolve(args, RUN_KEYS)
    eps = float(cfg["epsilon"])
    if not 0 <= eps:
        raise UsageError("epsilon: must be non-negative")
    if args.dist_c or args.dist_d:
        if not (args.dist_c and args.dist_d):
            raise UsageError("dist-c/dist-d: give both files")
        c, d = _load_dist(args.dist_c), _load_dist(args.dist_d)
        provenance = {"dist_c": args.dist_c, "dist_d": args.dist_d, "epsilon": eps}
        report = None
    else:
        _validate(cfg)
        pair = _pair(cfg)
        try:
            report = _run(cfg, pair)
        except samplers.StarvationError as exc:
            print(f"starvation: {exc}", file=sys.stderr)
            return EXIT_STARVED
        c = report.distribution
        d = outcome_distribution(pair.quantum, pair.input_bits)
        provenance = _provenance(cfg)
    err = metrics.ErrorReport.compare(c, d)
    v = err.additive_verdict(eps)
    out = {
        "schema_version": samplers.SCHEMA_VERSION,
        "config": provenance,
        "errors": err.to_dict(),
        "epsilon": eps,
        "verdict": v.value,
    }
    if report is not None:
        out["run"] = report.to_dict()
    _emit(_dump(out), cfg["out"])
    print(f"additive error {err.additive:.6g} +/- {err.additive_ci95:.3g}: {v.value}", file=sys.stderr)
    return VERDICT_EXIT[v]


def _parse_schedule(args, cfg: dict) -> list[tuple[float, float, float]]:
    raw = None
    if args.schedule_file:
        try:
            raw = json.loads(Path(args.schedule_file).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"schedule: cannot read {args.schedule_file}: {exc}") from exc
    elif args.schedule is not None:
        raw = [float(s) for s in args.schedule.split(",") if s.strip()]
    else:
        raw = cfg.get("schedule")
    if not raw:
        raise UsageError("schedule: empty delta schedule")
    try:
        sched = [circuits.as_deltas(p) for p in raw]
        samplers._check_schedule(sched)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"schedule: {exc}") from exc
    return sched


def cmd_sweep(args) -> int:
    cfg = _resolve(args, RUN_KEYS + ["schedule"])
    cfg["variant"] = "t_nl"
    schedule = _parse_schedule(args, cfg)
    _validate({**cfg, "deltas": list(schedule[-1])})
    rows = samplers.convergence_sweep(
        lambda d: _pair(cfg, d), schedule, int(cfg["seed"]), int(cfg["accepted"]),
        max_trials=cfg["max_trials"], workers=int(cfg["workers"]), method=cfg["method"],
    )
    _emit(samplers.sweep_csv(rows), cfg["out"])
    fit = [r for r in rows if r.accepted > 0]
    if len(fit) >= 2:
        print(f"acceptance slope vs delta_phi_M (last {min(3, len(fit))} points): "
              f"{samplers.acceptance_slope(rows):.3f}", file=sys.stderr)
    return EXIT_STARVED if all(r.status == "starved" for r in rows) else EXIT_OK


def _load_dist(path: str) -> OutcomeDistribution:
    try:
        return OutcomeDistribution.load(path)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"distribution file {path}: {exc}") from exc


def cmd_check_lemma(args) -> int:
    d = _load_dist(args.file_d)
    if args.condition:
        k, b, y_prime = args.condition
        try:
            value = metrics.conditioned_probability(d, int(k), int(b), y_prime)
        except ValueError as exc:
            raise UsageError(f"condition: {exc}") from exc
        _emit(_dump({"schema_version": samplers.SCHEMA_VERSION, "conditioned_probability": value,
                     "k": int(k), "b": int(b), "y_prime": y_prime}), args.out)
        return EXIT_OK
    if not args.file_c:
        raise UsageError("file_c: needed unless --condition is given")
    c = _load_dist(args.file_c)
    if args.epsilon is None or not 0 <= args.epsilon < 1:
        raise UsageError("epsilon: must lie in [0, 1)")
    try:
        res = metrics.check_lemma_instance(d, c, args.epsilon)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out = {"schema_version": samplers.SCHEMA_VERSION, "epsilon": args.epsilon, **res.to_dict()}
    _emit(_dump(out), args.out)
    print(f"{res.verdict.value}: worst {res.worst} margin {res.margin:.6g}", file=sys.stderr)
    return VERDICT_EXIT[res.verdict]


DEFAULT_SCAN_GRID = [
    [0.0, 0.0, 0.0, 0.0],
    [0.0, math.pi / 8, 0.0, 0.0],
    [0.0, 0.0, math.pi / 8, 0.0],
    [math.pi / 8, 0.0, 0.0, math.pi / 8],
    [0.0, math.pi / 4, math.pi / 4, 0.0],
]


def cmd_scan(args) -> int:
    cfg = _resolve(args, RUN_KEYS)
    cfg["circuit"], cfg["variant"] = "double_bell_cnot", "t_nl"
    _validate(cfg)
    grid = DEFAULT_SCAN_GRID
    if args.grid:
        try:
            grid = json.loads(Path(args.grid).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"grid: cannot read {args.grid}: {exc}") from exc
        if not grid or any(len(g) != 4 for g in grid):
            raise UsageError("grid: need a non-empty list of four-angle settings")
    text = samplers.divergence_scan(grid, _deltas(cfg), int(cfg["seed"]), int(cfg["accepted"]),
                                    max_trials=cfg["max_trials"], workers=int(cfg["workers"]))
    _emit(text, cfg["out"])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hvlab", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one variant on one circuit and write a report")
    _add_common(p)
    p.add_argument("--dist-out", dest="dist_out", help="also write the distribution JSON here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="score a run (or two distribution files) against the quantum oracle")
    _add_common(p)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--dist-c", dest="dist_c", help="sampled distribution file (skips the run)")
    p.add_argument("--dist-d", dest="dist_d", help="reference distribution file")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="rejection runs along a shrinking delta schedule, as CSV")
    _add_common(p)
    p.add_argument("--schedule", help="comma-separated equal-delta values, e.g. 1e-1,3e-2,1e-2")
    p.add_argument("--schedule-file", dest="schedule_file", help="JSON list of [L, M, alpha] triples")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("check-lemma", help="check the conditional-probability lemma on two distributions")
    p.add_argument("file_d", help="reference distribution D (JSON)")
    p.add_argument("file_c", nargs="?", help="candidate distribution C (JSON)")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--condition", nargs=3, metavar=("K", "B", "Y_PRIME"),
                   help="print the conditioned probability of bit K = B given the other bits")
    p.add_argument("--out")
    p.set_defaults(func=cmd_check_lemma)

    p = sub.add_parser("scan", help="angle-grid agreement scan of the CNOT-trick model, as CSV")
    _add_common(p)
    p.add_argument("--grid", help="JSON list of four-angle settings")
    p.set_defaults(func=cmd_scan)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"hvlab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
