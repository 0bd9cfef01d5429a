"""Command-line entry point.

Subcommands: simulate, map, coupling, spectral, oracle, transience, theta,
cutoff, mixing, negdep. Every run writes its outputs into the --out directory
next to a manifest recording the subcommand, parameters, master seed, package
version and timestamps. CSV is the default table format; report subcommands
also render a PNG figure unless --no-plot is given.

Site indices on the command line are 1-based (the usual convention for ring
sites); all serialized site lists are plain order-of-sites text.

Exit codes: 0 success, 1 assertion failure, 2 usage error, 3 resource cap.
"""
from __future__ import annotations

import argparse
import csv
import datetime
import json
import math
import sys
from pathlib import Path

from . import __version__
from .configs import (ConfigError, FepConfig, FzrConfig, SwtConfig,
                      classify, config_to_json, parse_config, process_name,
                      serialize_config)
from .dynamics import rules
from .dynamics.clocks import ClockStream
from .dynamics.engines import (make_labelled, simulate, simulate_labelled_swt)
from .oracle import CapExceeded

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_USAGE = 2
EXIT_CAP = 3


class AssertionFailed(RuntimeError):
    pass


def _common_flags(parser: argparse.ArgumentParser, plot_default=None,
                  params_file=False):
    parser.add_argument("--seed", type=int, default=0, help="master seed")
    parser.add_argument("--workers", type=int, default=None,
                        help="worker processes (default: RINGTRAP_WORKERS or 1)")
    parser.add_argument("--out", type=Path, default=Path("ringtrap-out"),
                        help="output directory")
    parser.add_argument("--format", choices=("csv", "json"), default="csv",
                        help="table format for the main output")
    parser.add_argument("--assert", dest="assert_mode", action="store_true",
                        help="turn check failures into a nonzero exit")
    if params_file:
        parser.add_argument("--params", type=Path, default=None,
                            help="JSON file of parameter values; explicit "
                                 "flags take precedence")
    if plot_default is not None:
        parser.add_argument("--plot", dest="plot", action="store_true",
                            default=plot_default)
        parser.add_argument("--no-plot", dest="plot", action="store_false")


def _apply_params_file(args, argv):
    """Fill argument values from the JSON --params file; anything spelled out
    on the command line wins."""
    if getattr(args, "params", None) is None:
        return
    try:
        payload = json.loads(Path(args.params).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read params file: {exc}") from exc
    if not isinstance(payload, dict):
        raise ConfigError("params file must hold a JSON object")
    explicit = set()
    for token in argv:
        if token.startswith("--"):
            explicit.add(token[2:].split("=", 1)[0].replace("-", "_"))
    for key, value in payload.items():
        dest = key.replace("-", "_")
        if not hasattr(args, dest):
            raise ConfigError(f"unknown parameter {key!r} in params file")
        if dest in explicit:
            continue
        setattr(args, dest, value)


def _outdir(args) -> Path:
    args.out.mkdir(parents=True, exist_ok=True)
    return args.out


def _write_manifest(args, name: str, outputs: list[str], started: str):
    params = {k: (str(v) if isinstance(v, Path) else v)
              for k, v in vars(args).items() if k != "func"}
    manifest = {
        "subcommand": name,
        "params": params,
        "master_seed": args.seed,
        "version": __version__,
        "outputs": outputs,
        "started": started,
        "finished": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    path = _outdir(args) / f"{name}.manifest.json"
    path.write_text(json.dumps(manifest, indent=2))
    return path


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _write_table(args, name: str, header: list[str], rows: list[list]):
    out = _outdir(args)
    if args.format == "csv":
        path = out / f"{name}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
    else:
        path = out / f"{name}.json"
        path.write_text(json.dumps(
            [dict(zip(header, row)) for row in rows], indent=2))
    return str(path)


def _resolve_config(args):
    if getattr(args, "config", None):
        return parse_config(args.config)
    if getattr(args, "family", None):
        from .experiments import worst_config
        kwargs = {}
        if getattr(args, "traps", None) is not None:
            kwargs["m"] = args.traps
        if args.family == "RandomCritical":
            kwargs["seed"] = args.seed
        return worst_config(args.family, args.size, **kwargs)
    raise ConfigError("provide --config or --family/--size")


# ---------------------------------------------------------------------------
# observables for the oracle subcommand (1-based sites)
# ---------------------------------------------------------------------------

def parse_observable(spec: str, initial):
    """Product of indicator terms joined by '*'.

    Terms: ``occupied:k`` (site k holds a live particle), ``filled:k``
    (site k exceeds its initial value), ``anyfilled:k1,k2,...``,
    ``transient``. Sites are 1-based.
    """
    from .dynamics.trajectory import is_transient
    init = tuple(initial.sites)
    proc = process_name(initial)
    terms = []
    for raw in spec.split("*"):
        raw = raw.strip()
        if raw == "transient":
            terms.append(lambda st, p=proc: 1 if is_transient(p, list(st)) else 0)
            continue
        head, _, body = raw.partition(":")
        if head == "occupied":
            k = int(body) - 1
            terms.append(lambda st, k=k: 1 if st[k] == 1 else 0)
        elif head == "filled":
            k = int(body) - 1
            terms.append(lambda st, k=k: 1 if st[k] > init[k] else 0)
        elif head == "anyfilled":
            ks = [int(b) - 1 for b in body.split(",")]
            terms.append(lambda st, ks=tuple(ks):
                         1 if any(st[k] > init[k] for k in ks) else 0)
        else:
            raise ConfigError(f"unknown observable term {raw!r}")

    def product(state):
        val = 1
        for term in terms:
            val *= term(state)
            if val == 0:
                return 0
        return val

    return product


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------

_PROCESS_TAGS = {"swt": SwtConfig, "labelled": SwtConfig, "fep": FepConfig,
                 "fzr": FzrConfig}


def cmd_simulate(args) -> int:
    started = _now()
    cfg = _resolve_config(args)
    expected = _PROCESS_TAGS.get(args.process)
    if expected is not None and not isinstance(cfg, expected):
        raise ConfigError(
            f"--process {args.process} does not match the config tag")
    out = _outdir(args)
    outputs = []
    if args.engine == "clock":
        n_clocks = rules.clock_count(process_name(cfg), len(cfg.sites))
        clocks = ClockStream(n_clocks, args.seed, (args.trajectory_index,))
        if args.process == "labelled":
            traj = simulate_labelled_swt(make_labelled(cfg), clocks,
                                         args.horizon, log_noop=args.log_noop)
        else:
            traj = simulate(cfg, clocks, args.horizon, log_noop=args.log_noop)
        path = out / "simulate.trajectory.ndjson"
        traj.to_ndjson(path)
        outputs.append(str(path))
        summary = {
            "process": traj.process,
            "events": len(traj.events),
            "final": serialize_config(traj.final),
            "first_exit_time": (None if math.isinf(traj.first_exit_time)
                                else traj.first_exit_time),
        }
    else:
        from .dynamics import fast
        exits = fast.sample_exit_times(cfg, args.samples, args.seed,
                                       args.horizon)
        rows = [[i, ("" if math.isinf(t) else t)] for i, t in enumerate(exits)]
        outputs.append(_write_table(args, "simulate.exits",
                                    ["trajectory", "exit_time"], rows))
        finite = [t for t in exits if math.isfinite(t)]
        summary = {"process": process_name(cfg), "samples": args.samples,
                   "censored": len(exits) - len(finite),
                   "mean_exit": (sum(finite) / len(finite)) if finite else None}
    spath = out / "simulate.summary.json"
    spath.write_text(json.dumps(summary, indent=2))
    outputs.append(str(spath))
    _write_manifest(args, "simulate", outputs, started)
    return EXIT_OK


def cmd_map(args) -> int:
    from . import mappings
    started = _now()
    out = _outdir(args)
    outputs = []
    if args.trajectory:
        from .dynamics.trajectory import Trajectory
        traj = Trajectory.from_ndjson(args.trajectory)
        if args.direction != "fep2swt":
            raise ConfigError("trajectory mapping supports fep2swt only")
        mapped, telemetry = mappings.fep_to_swt_dynamic(
            traj, args.tag0, with_telemetry=True)
        path = out / "map.trajectory.ndjson"
        mapped.to_ndjson(path)
        outputs.append(str(path))
        summary = {"direction": args.direction,
                   "events": len(mapped.events),
                   "tag_displacement": telemetry.displacement,
                   "winding": telemetry.winding(len(mapped.initial))}
    else:
        cfg = parse_config(args.config)
        if args.direction == "fep2swt":
            mapped, tag = mappings.fep_to_swt_static(cfg, args.tag0)
            extra = {"tag": tag + 1}
        elif args.direction == "swt2fep":
            if args.ring_size is None:
                raise ConfigError("swt2fep needs --ring-size")
            mapped = mappings.swt_to_fep_static(cfg, args.tag0 or 0,
                                                args.ring_size)
            extra = {}
        elif args.direction == "fep2fzr":
            mapped, tag = mappings.fep_to_fzr(cfg, args.tag0)
            extra = {"tag": tag + 1}
        elif args.direction == "fzr2fep":
            mapped = mappings.fzr_to_fep(cfg, args.tag0 or 0)
            extra = {}
        else:
            raise ConfigError(f"unknown direction {args.direction!r}")
        summary = {"direction": args.direction,
                   "input": serialize_config(cfg),
                   "output": serialize_config(mapped),
                   "output_json": json.loads(config_to_json(mapped)),
                   "phase": classify(mapped).value, **extra}
    path = out / "map.json"
    path.write_text(json.dumps(summary, indent=2))
    outputs.append(str(path))
    _write_manifest(args, "map", outputs, started)
    return EXIT_OK


def cmd_coupling(args) -> int:
    from . import couplings
    started = _now()
    cfg = _resolve_config(args)
    reports = []
    violations = 0
    checks = 0
    for i in range(args.seeds):
        clocks = ClockStream(len(cfg.sites), args.seed, (i,))
        if args.kind == "basic":
            other = parse_config(args.config2) if args.config2 else SwtConfig(
                tuple(min(v + 1, 1) for v in cfg.sites))
            res = couplings.run_basic_coupling(cfg, other, clocks,
                                               args.horizon)
            report = res.report
        elif args.kind == "labelled":
            res = couplings.run_labelled_vs_ssep(cfg, clocks, args.horizon)
            report = res.report
        elif args.kind == "unrolled":
            res = couplings.run_unrolled(cfg, args.window, clocks,
                                         args.horizon)
            report = res.report
        elif args.kind == "domination":
            aux = ClockStream(len(cfg.sites) + args.window + 1, args.seed,
                              (i, 1))
            res = couplings.run_reservoir_domination(cfg, args.window, clocks,
                                                     aux, args.horizon)
            report = res.report
        else:
            raise ConfigError(f"unknown coupling kind {args.kind!r}")
        checks += report.checks
        violations += len(report.violations)
        if report.violations:
            reports.append({"replica": i, "violations": report.violations})
    payload = {"kind": args.kind, "replicas": args.seeds, "checks": checks,
               "violations": violations, "details": reports}
    out = _outdir(args)
    path = out / "coupling.report.json"
    path.write_text(json.dumps(payload, indent=2))
    _write_manifest(args, "coupling", [str(path)], started)
    if violations and args.assert_mode:
        print(f"coupling: {violations} violations over {checks} checks",
              file=sys.stderr)
        return EXIT_ASSERTION
    print(f"coupling: {checks} checks, {violations} violations")
    return EXIT_OK


def cmd_spectral(args) -> int:
    from .analytic import (spectral_occupation, ssep_mixing_bounds,
                           swt_mixing_sandwich, t_star, tau_star,
                           transience_bounds)
    started = _now()
    header = ["K", "s", "tau_star", "tau_star_degenerate", "t_star",
              "transience_lower", "transience_upper", "ssep_lower",
              "ssep_upper_loose", "sandwich_lower", "sandwich_upper",
              "regime", "cutoff"]
    rows = []
    dict_rows = []
    for K in args.K:
        for s in args.s:
            if s > K:
                continue
            ts = tau_star(K, s)
            tb = transience_bounds(K, s, args.eps, args.constant)
            sb = ssep_mixing_bounds(K, s, args.eps)
            sandwich = swt_mixing_sandwich(K, s, args.eps, args.constant)
            row = [K, s, ts.time, ts.degenerate, t_star(K), tb.lower,
                   tb.upper, sb.lower, sb.upper_loose, sandwich.lower,
                   sandwich.upper, sandwich.regime.row,
                   sandwich.regime.cutoff]
            rows.append(row)
            dict_rows.append(dict(zip(header, row)))
    outputs = [_write_table(args, "spectral", header, rows)]
    if args.plot:
        from .plots import plot_spectral
        outputs.append(plot_spectral(dict_rows,
                                     _outdir(args) / "spectral.png"))
    _write_manifest(args, "spectral", outputs, started)
    return EXIT_OK


def cmd_oracle(args) -> int:
    from .oracle import (exact_transient_prob, generator_power_sequence,
                         semigroup_value)
    started = _now()
    cfg = parse_config(args.seed_config)
    obs = parse_observable(args.observable, cfg)
    header = ["quantity", "argument", "value", "certified_error"]
    rows = []
    if args.power is not None:
        seq = generator_power_sequence(cfg, obs, args.power, cap=args.max_states)
        for n, v in enumerate(seq):
            rows.append([f"generator_power[{args.observable}]", n, v, 0.0])
    if args.time is not None:
        val, err = semigroup_value(cfg, obs, args.time, cap=args.max_states,
                                   tol=args.tol)
        rows.append([f"semigroup[{args.observable}]", args.time, val, err])
        if args.observable == "transient":
            p, perr = exact_transient_prob(cfg, args.time, cap=args.max_states,
                                           tol=args.tol)
            rows.append(["transient_probability", args.time, p, perr])
    outputs = [_write_table(args, "oracle", header, rows)]
    _write_manifest(args, "oracle", outputs, started)
    return EXIT_OK


def cmd_transience(args) -> int:
    from .experiments import estimate_transience_prob
    started = _now()
    cfg = _resolve_config(args)
    header = ["t", "estimate", "wilson_lower", "wilson_upper", "samples",
              "censored"]
    rows = []
    for i, t in enumerate(args.t):
        rep = estimate_transience_prob(cfg, t, args.samples, args.seed,
                                       workers=args.workers, key=(i,))
        rows.append([t, rep.estimate, rep.lower, rep.upper, rep.samples,
                     rep.censored])
    outputs = [_write_table(args, "transience", header, rows)]
    if args.plot:
        from .plots import plot_transience_curve
        outputs.append(plot_transience_curve(
            [(r[0], r[1], r[2], r[3]) for r in rows],
            _outdir(args) / "transience.png"))
    _write_manifest(args, "transience", outputs, started)
    return EXIT_OK


def cmd_theta(args) -> int:
    from .experiments import estimate_theta
    started = _now()
    cfg = _resolve_config(args)
    est = estimate_theta(cfg, args.eps, args.seed, t_hi=args.t_hi,
                         width_tol=args.width_tol, n_max=args.max_samples,
                         workers=args.workers)
    payload = {"epsilon": est.epsilon, "lower": est.lower, "upper": est.upper,
               "point": est.point, "samples_used": est.samples_used,
               "comparisons": est.comparisons,
               "indeterminate": est.indeterminate}
    path = _outdir(args) / "theta.json"
    path.write_text(json.dumps(payload, indent=2))
    _write_manifest(args, "theta", [str(path)], started)
    print(json.dumps(payload))
    return EXIT_OK


def cmd_cutoff(args) -> int:
    from .experiments import cutoff_profile
    started = _now()
    if not args.K:
        raise ConfigError("cutoff needs --K (flag or params file)")
    profile = cutoff_profile(args.K, args.grid, args.family, args.samples,
                             args.seed, workers=args.workers)
    header = ["K", "u", "t", "p_hat", "wilson_lower", "wilson_upper"]
    rows = [[r.K, r.u, r.t, r.p_hat, r.lower, r.upper] for r in profile.rows]
    outputs = [_write_table(args, "cutoff", header, rows)]
    slopes_path = _outdir(args) / "cutoff.slopes.json"
    slopes_path.write_text(json.dumps(
        {str(k): v for k, v in profile.slopes.items()}, indent=2))
    outputs.append(str(slopes_path))
    if args.plot:
        from .plots import plot_cutoff_profile
        outputs.append(plot_cutoff_profile(profile,
                                           _outdir(args) / "cutoff.png"))
    _write_manifest(args, "cutoff", outputs, started)
    return EXIT_OK


def cmd_mixing(args) -> int:
    from .analytic import ssep_mixing_bounds
    from .experiments import mixing_upper_via_meeting
    started = _now()
    if args.K is None or args.s is None:
        raise ConfigError("mixing needs --K and --s (flags or params file)")
    rep = mixing_upper_via_meeting(args.K, args.s, args.eps, args.samples,
                                   args.seed)
    bounds = ssep_mixing_bounds(args.K, args.s, args.eps)
    payload = {"K": args.K, "s": args.s, "epsilon": args.eps,
               "meeting_bound": (None if math.isinf(rep.time_bound)
                                 else rep.time_bound),
               "met_fraction": rep.met_fraction_at_bound,
               "censored": rep.censored, "samples": rep.samples,
               "analytic_upper_loose": bounds.upper_loose,
               "analytic_lower": bounds.lower}
    if args.K <= args.exact_max and args.s <= args.K:
        from .oracle import exact_tv_and_mixing
        exact = exact_tv_and_mixing(args.K, args.s, args.eps)
        payload["exact_ssep_mixing"] = exact.ssep_mixing_time
    path = _outdir(args) / "mixing.json"
    path.write_text(json.dumps(payload, indent=2))
    outputs = [str(path)]
    if args.plot:
        from .plots import plot_meeting_histogram
        outputs.append(plot_meeting_histogram(
            rep.times, rep.time_bound, args.eps,
            _outdir(args) / "mixing.png"))
    _write_manifest(args, "mixing", outputs, started)
    print(json.dumps(payload))
    return EXIT_OK


def cmd_negdep(args) -> int:
    from .experiments import NegativeDependenceError, negdep_demo
    started = _now()
    try:
        rep = negdep_demo()
        failed = None
    except NegativeDependenceError as exc:
        rep = None
        failed = str(exc)
    out = _outdir(args)
    outputs = []
    if rep is not None:
        header = ["n", "power_f", "power_g", "power_fg"]
        outputs.append(_write_table(args, "negdep.powers", header,
                                    [list(row) for row in rep.power_table]))
        payload = {
            "case1": {"time": rep.case1_time, "joint": rep.case1_joint,
                      "marginal_product": rep.case1_marginal_product,
                      "certified_error": rep.case1_error,
                      "strict": rep.case1_strict},
            "case2": {"time": rep.case2_time,
                      "joint_lower": rep.case2_joint_lower,
                      "product_upper": rep.case2_product_upper,
                      "strict": rep.case2_strict},
            "crossover_time": rep.crossover_time,
        }
        path = out / "negdep.json"
        path.write_text(json.dumps(payload, indent=2))
        outputs.append(str(path))
    _write_manifest(args, "negdep", outputs, started)
    if failed is not None:
        print(f"negdep: {failed}", file=sys.stderr)
        return EXIT_ASSERTION
    print("negdep: both counterexample inequalities hold")
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ringtrap",
        description="Simulation and exact analysis of ring lattice gases "
                    "with traps and facilitated dynamics.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("simulate", help="run one trajectory or an exit-time batch")
    _common_flags(p)
    p.add_argument("--process", choices=("swt", "fep", "fzr", "segment",
                                         "labelled"), default="swt")
    p.add_argument("--config", required=True, help='e.g. "S:1,-1"')
    p.add_argument("--horizon", type=float, required=True)
    p.add_argument("--engine", choices=("clock", "aggregate"), default="clock")
    p.add_argument("--samples", type=int, default=1,
                   help="replica count for the aggregate engine")
    p.add_argument("--trajectory-index", type=int, default=0)
    p.add_argument("--log-noop", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("map", help="static or dynamic process mappings")
    _common_flags(p)
    p.add_argument("--direction", required=True,
                   choices=("fep2swt", "swt2fep", "fep2fzr", "fzr2fep"))
    p.add_argument("--config", help="configuration text")
    p.add_argument("--trajectory", type=Path, help="ndjson trajectory input")
    p.add_argument("--tag", type=int, default=None,
                   help="1-based tagged site")
    p.add_argument("--ring-size", type=int, default=None)
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("coupling", help="run coupled processes with checks")
    _common_flags(p)
    p.add_argument("--kind", required=True,
                   choices=("basic", "labelled", "unrolled", "domination"))
    p.add_argument("--config", help="configuration text")
    p.add_argument("--family", choices=("SingleDeepTrapCritical",
                                        "UniformTrapsCritical",
                                        "RandomCritical"))
    p.add_argument("--size", type=int)
    p.add_argument("--traps", type=int, default=None)
    p.add_argument("--config2", help="upper configuration for basic")
    p.add_argument("--window", type=int, default=1,
                   help="watched segment length for unrolled/domination")
    p.add_argument("--seeds", type=int, default=100)
    p.add_argument("--horizon", type=float, default=50.0)
    p.set_defaults(func=cmd_coupling)

    p = sub.add_parser("spectral", help="closed-form tables and envelopes")
    _common_flags(p, plot_default=True)
    p.add_argument("--K", type=int, nargs="+", required=True)
    p.add_argument("--s", type=int, nargs="+", default=[0])
    p.add_argument("--eps", type=float, default=0.25)
    p.add_argument("--constant", type=float, default=None,
                   help="envelope calibration constant (default: calibrated)")
    p.set_defaults(func=cmd_spectral)

    p = sub.add_parser("oracle", help="exact finite-state computations")
    _common_flags(p)
    p.add_argument("--seed-config", required=True)
    p.add_argument("--observable", default="transient",
                   help="product of occupied:k / filled:k / anyfilled:... "
                        "terms, or 'transient' (1-based sites)")
    p.add_argument("--time", type=float, default=None)
    p.add_argument("--power", type=int, default=None)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--max-states", type=int, default=2_000_000)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("transience", help="Monte Carlo transience probability")
    _common_flags(p, plot_default=True, params_file=True)
    p.add_argument("--config")
    p.add_argument("--family", choices=("SingleDeepTrapCritical",
                                        "UniformTrapsCritical",
                                        "RandomCritical", "FepWorst"))
    p.add_argument("--size", type=int)
    p.add_argument("--traps", type=int, default=None)
    p.add_argument("--t", type=float, nargs="+", required=True)
    p.add_argument("--samples", type=int, default=10000)
    p.set_defaults(func=cmd_transience)

    p = sub.add_parser("theta", help="epsilon-transience time by certified bisection")
    _common_flags(p, params_file=True)
    p.add_argument("--config")
    p.add_argument("--family", choices=("SingleDeepTrapCritical",
                                        "UniformTrapsCritical",
                                        "RandomCritical", "FepWorst"))
    p.add_argument("--size", type=int)
    p.add_argument("--traps", type=int, default=None)
    p.add_argument("--eps", type=float, default=0.25)
    p.add_argument("--t-hi", type=float, default=None)
    p.add_argument("--width-tol", type=float, default=None)
    p.add_argument("--max-samples", type=int, default=1 << 17)
    p.set_defaults(func=cmd_theta)

    p = sub.add_parser("cutoff", help="transience profile over K and time grid")
    _common_flags(p, plot_default=True, params_file=True)
    p.add_argument("--K", type=int, nargs="+", default=None)
    p.add_argument("--grid", type=float, nargs="+",
                   default=[0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0])
    p.add_argument("--family", default="SingleDeepTrapCritical")
    p.add_argument("--samples", type=int, default=20000)
    p.set_defaults(func=cmd_cutoff)

    p = sub.add_parser("mixing", help="meeting-time mixing upper bound")
    _common_flags(p, plot_default=True, params_file=True)
    p.add_argument("--K", type=int, default=None)
    p.add_argument("--s", type=int, default=None)
    p.add_argument("--eps", type=float, default=0.25)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--exact-max", type=int, default=6,
                   help="also report the exact value for K up to this size")
    p.set_defaults(func=cmd_mixing)

    p = sub.add_parser("negdep", help="negative-dependence counterexamples")
    _common_flags(p)
    p.set_defaults(func=cmd_negdep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if hasattr(args, "tag"):
        args.tag0 = None if args.tag is None else args.tag - 1
    try:
        _apply_params_file(args, argv if argv is not None else sys.argv[1:])
        return args.func(args)
    except CapExceeded as exc:
        print(f"resource cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except ConfigError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AssertionFailed as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_ASSERTION


if __name__ == "__main__":
    sys.exit(main())
