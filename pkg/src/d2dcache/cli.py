"""Command-line entry point: ``d2dcache <command> [--config FILE] [--set k=v ...]``.

Exit codes: 0 success, 1 configuration error, 2 property-check violation,
3 unstable configuration where stability is required.
"""
from __future__ import annotations

import argparse
import sys

from . import config as cfgmod
from ._csvutil import write_rows
from .errors import ConfigError, PropertyViolation
from .experiments import GAIN_HEADER, ROW_HEADER, cooperation_gain, run_experiment
from .optimizer import check_matroid, check_supermodularity, default_greedy_rates, greedy_caching
from .placement import cpf_placement, placement_from_csv, random_placement
from .popularity import build_popularity
from .queueing import network_delay
from .simulator import SimConfig, simulate

EXIT_OK, EXIT_CONFIG, EXIT_PROPERTY, EXIT_UNSTABLE = 0, 1, 2, 3


def _emit(text, path):
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load(args):
    cfg = cfgmod.load_config(args.config) if args.config else cfgmod.Config()
    return cfgmod.apply_overrides(cfg, args.set)


def _placement(cfg, params, pop, rm):
    choice = cfg.get("placement", "cpf")
    if choice == "cpf":
        return cpf_placement(params)
    if choice == "rc":
        return random_placement(params, cfg.get("placement_seed", 0))
    if choice == "gca":
        return greedy_caching(params, pop, rm).final
    p = placement_from_csv(choice, params.N)
    if p.matrix.shape != (params.K, params.F):
        raise ConfigError(
            f"placement file has shape {p.matrix.shape}, expected ({params.K}, {params.F})",
            field="placement", line=cfg.line_of("placement"),
        )
    return p


def _greedy_rates(cfg, params):
    rm = cfgmod.rate_model_from_config(cfg)
    return rm if rm.is_fixed else default_greedy_rates(params)


def cmd_delay(args):
    cfg = _load(args)
    params = cfgmod.params_from_config(cfg)
    rm = cfgmod.rate_model_from_config(cfg)
    pop = build_popularity(params)
    placement = _placement(cfg, params, pop, _greedy_rates(cfg, params))
    report = network_delay(placement, pop, params, rm, cfgmod.cooperation_from_config(cfg))
    _emit(report.to_csv(), args.output)
    if not report.stable:
        print(f"unstable: max rho = {report.rho_max:.6g}", file=sys.stderr)
        return EXIT_UNSTABLE
    return EXIT_OK


def cmd_sweep(args):
    spec = cfgmod.spec_from_config(_load(args))
    rows = run_experiment(spec)
    if not spec.output or args.output:
        _emit(write_rows(ROW_HEADER, rows), args.output)
    return EXIT_OK


def cmd_gain(args):
    spec = cfgmod.spec_from_config(_load(args))
    rows = cooperation_gain(spec)
    if not spec.output or args.output:
        _emit(write_rows(GAIN_HEADER, rows), args.output)
    return EXIT_OK


def cmd_greedy(args):
    cfg = _load(args)
    params = cfgmod.params_from_config(cfg)
    trace = greedy_caching(
        params, build_popularity(params), _greedy_rates(cfg, params),
        cfgmod.cooperation_from_config(cfg),
    )
    _emit(trace.to_csv(), args.output)
    return EXIT_OK


def cmd_simulate(args):
    cfg = _load(args)
    params = cfgmod.params_from_config(cfg)
    rm = cfgmod.rate_model_from_config(cfg)
    pop = build_popularity(params)
    placement = _placement(cfg, params, pop, _greedy_rates(cfg, params))
    sim_cfg = SimConfig(
        params, placement, rm,
        horizon=cfg.get("horizon", 10**6),
        warmup_fraction=cfg.get("warmup_fraction", 0.1),
        seed=cfg.get("seed", 0),
        cooperation=cfgmod.cooperation_from_config(cfg),
        record_events=bool(args.events),
    )
    result = simulate(sim_cfg, pop)
    _emit(result.to_csv(), args.output)
    if args.events:
        result.events_to_csv(args.events)
    return EXIT_OK


def cmd_check(args):
    cfg = _load(args)
    params = cfgmod.params_from_config(cfg)
    trials = args.trials or cfg.get("trials", 1000)
    seed = cfg.get("seed", 0)
    reports = [
        check_matroid(params, trials, seed, raise_on_violation=False),
        check_supermodularity(
            params, build_popularity(params), _greedy_rates(cfg, params), trials, seed,
            cooperation=cfgmod.cooperation_from_config(cfg), raise_on_violation=False,
        ),
    ]
    text = "\n".join(str(r) for r in reports) + "\n"
    _emit(text, args.output)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_PROPERTY


def build_parser():
    parser = argparse.ArgumentParser(prog="d2dcache", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", "-c", help="key = value config file")
    common.add_argument(
        "--set", "-s", action="append", metavar="KEY=VALUE", help="override a config entry"
    )
    common.add_argument("--output", "-o", help="write output here instead of stdout")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("delay", parents=[common], help="analytic delay of one placement").set_defaults(
        func=cmd_delay
    )
    sub.add_parser("sweep", parents=[common], help="run a parameter sweep").set_defaults(
        func=cmd_sweep
    )
    sub.add_parser("greedy", parents=[common], help="greedy placement trace").set_defaults(
        func=cmd_greedy
    )
    p = sub.add_parser("simulate", parents=[common], help="simulate one placement")
    p.add_argument("--events", help="also write the per-request event log here")
    p.set_defaults(func=cmd_simulate)
    p = sub.add_parser("check", parents=[common], help="matroid and supermodularity checks")
    p.add_argument("--trials", type=int)
    p.set_defaults(func=cmd_check)
    sub.add_parser("gain", parents=[common], help="cooperation gain per sweep point").set_defaults(
        func=cmd_gain
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PropertyViolation as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_PROPERTY


if __name__ == "__main__":
    sys.exit(main())
