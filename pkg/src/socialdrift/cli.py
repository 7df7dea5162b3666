"""Command line interface.

Exit status: 0 on success, 1 on invalid input or usage, 2 when a run aborts.
Option values resolve as: explicit flag, then ``--config`` JSON, then default.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import __version__
from .adaptive import AdaptiveParams, integrate_adaptive, strength_state_correlation
from .diffusion import (
    DiffusionParams,
    instantaneous_drift,
    integrate,
    observables,
    predict_asymptotic_mean,
    predict_net_gain,
    write_trajectory_csv,
)
from .exceptions import DegenerateError, DisconnectedError, DivergenceError, GenerationError, ZeroStrengthError
from .harness import ASSORT_MODES, Fig2Config, Fig3Config, run_fig2, run_fig3
from .netcore import is_connected, read_edgelist, read_states, validate, write_edgelist, write_states
from .netgen import GenSpec, RewireSpec, generate, xbs_rewire

EXIT_OK, EXIT_INVALID, EXIT_ABORT = 0, 1, 2

DEFAULTS = {
    "generate": dict(n=100, model="erdos_renyi", p=None, m=None, self_loop_prob=0.01, weight_lo=0.0, weight_hi=10.0, seed=0),
    "rewire": dict(mode="assortative", attempts=30000, seed=0, weight_lo=0.0, weight_hi=10.0),
    "simulate": dict(c=1.0, dt=0.01, t_end=10.0, dynamics="social", seed=0, state_lo=-1.0, state_hi=1.0, store_every=None),
    "adapt": dict(alpha=0.0, beta=0.0, c=1.0, dt=0.01, t_end=1.0, sigma_floor=1e-12, seed=0, state_lo=-1.0, state_hi=1.0),
    "observables": dict(c=1.0),
    "fig2": dict(preset="desk", jobs=1, assort_mode=None, seed=None),
    "fig3": dict(preset="desk", jobs=1, seed=None),
}

MODEL_ALIASES = {"er": "erdos_renyi", "ba": "barabasi_albert", "erdos_renyi": "erdos_renyi", "barabasi_albert": "barabasi_albert"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output file (or directory for fig2/fig3)")
    common.add_argument("--config", help="JSON file supplying option values")

    parser = _Parser(prog="socialdrift", description="Social diffusion on weighted networks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", parents=[common], help="random connected weighted network")
    p.add_argument("--n", type=int)
    p.add_argument("--model", choices=sorted(MODEL_ALIASES))
    p.add_argument("--p", type=float, help="link probability (erdos_renyi)")
    p.add_argument("--m", type=int, help="links per new node (barabasi_albert)")
    p.add_argument("--self-loop-prob", type=float)
    p.add_argument("--weight-lo", type=float)
    p.add_argument("--weight-hi", type=float)

    p = sub.add_parser("rewire", parents=[common], help="degree-preserving assortativity rewiring")
    p.add_argument("--net", required=True)
    p.add_argument("--mode", choices=["assortative", "disassortative"])
    p.add_argument("--attempts", type=int)
    p.add_argument("--weight-lo", type=float)
    p.add_argument("--weight-hi", type=float)

    def add_states(p):
        p.add_argument("--net", required=True)
        p.add_argument("--states", help="state file; random uniform states from --seed if omitted")
        p.add_argument("--state-lo", type=float)
        p.add_argument("--state-hi", type=float)

    p = sub.add_parser("simulate", parents=[common], help="integrate social or physical diffusion")
    add_states(p)
    p.add_argument("--c", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--t-end", type=float)
    p.add_argument("--dynamics", choices=["social", "physical"])
    p.add_argument("--store-every", type=int)
    p.add_argument("--final-states", help="write the final state vector here")

    p = sub.add_parser("adapt", parents=[common], help="diffusion with adaptive link weights")
    add_states(p)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--t-end", type=float)
    p.add_argument("--sigma-floor", type=float)
    p.add_argument("--net-out", help="write the final network here")
    p.add_argument("--meta-out", help="write run metadata JSON here (default: stdout)")

    p = sub.add_parser("observables", parents=[common], help="conserved and drift quantities of a state")
    p.add_argument("--net", required=True)
    p.add_argument("--states", required=True)
    p.add_argument("--c", type=float)

    for name, helptext in (("fig2", "homogenization speed experiment"), ("fig3", "adaptive alpha/beta sweep")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--preset", choices=["desk", "paper"])
        p.add_argument("--jobs", type=int)
        if name == "fig2":
            p.add_argument("--assort-mode", choices=list(ASSORT_MODES) + ["all"])
    return parser


def _resolve(args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset options from the config file, then from DEFAULTS."""
    values = dict(DEFAULTS.get(args.command, {}))
    config = {}
    if args.config and args.command not in ("fig2", "fig3"):
        with open(args.config, encoding="utf-8") as fh:
            config = json.load(fh)
        unknown = set(config) - set(vars(args))
        if unknown:
            raise ValueError(f"unknown config key(s): {sorted(unknown)}")
    values.update(config)
    for key, value in values.items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)
    return args


def _load_net(path):
    net = read_edgelist(path)
    report = validate(net)
    if not report.valid:
        raise ValueError("invalid network: " + "; ".join(report.problems))
    return net


def _load_states(args, net):
    if args.states:
        s = read_states(args.states)
        if s.size != net.n:
            raise ValueError(f"state file has {s.size} entries, network has {net.n} nodes")
        return s
    return np.random.default_rng(args.seed).uniform(args.state_lo, args.state_hi, net.n)


def _emit_text(text: str, out):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_generate(args) -> int:
    spec = GenSpec(
        n=args.n,
        model=MODEL_ALIASES[args.model],
        p=args.p,
        m=args.m,
        self_loop_prob=args.self_loop_prob,
        weight_range=(args.weight_lo, args.weight_hi),
        seed=args.seed,
    )
    net = generate(spec)
    write_edgelist(net, args.out or sys.stdout)
    return EXIT_OK


def cmd_rewire(args) -> int:
    net = _load_net(args.net)
    spec = RewireSpec(mode=args.mode, attempts=args.attempts, seed=args.seed, weight_range=(args.weight_lo, args.weight_hi))
    out, stats = xbs_rewire(net, spec, return_stats=True)
    write_edgelist(out, args.out or sys.stdout)
    print(json.dumps(asdict(stats), sort_keys=True), file=sys.stderr)
    return EXIT_OK


def cmd_simulate(args) -> int:
    net = _load_net(args.net)
    s0 = _load_states(args, net)
    params = DiffusionParams(c=args.c, dt=args.dt, t_end=args.t_end)
    traj = integrate(net, s0, params, dynamics=args.dynamics, store_every=args.store_every)
    write_trajectory_csv(traj, args.out or sys.stdout)
    if args.final_states:
        write_states(traj.final_state, args.final_states)
    return EXIT_OK


def cmd_adapt(args) -> int:
    net = _load_net(args.net)
    if not is_connected(net):
        raise DisconnectedError("adaptive integration requires a connected network")
    s0 = _load_states(args, net)
    params = AdaptiveParams(
        alpha=args.alpha, beta=args.beta, c=args.c, dt=args.dt, t_end=args.t_end, sigma_floor=args.sigma_floor
    )
    try:
        traj, final = integrate_adaptive(net, s0, params)
    except ZeroStrengthError as exc:
        raise _Abort(str(exc)) from exc
    write_trajectory_csv(traj, args.out or sys.stdout)
    if args.net_out:
        write_edgelist(final, args.net_out)
    meta = json.dumps(traj.meta, indent=2, sort_keys=True) + "\n"
    if args.meta_out:
        Path(args.meta_out).write_text(meta, encoding="utf-8")
    elif args.out:
        sys.stdout.write(meta)
    else:
        sys.stderr.write(meta)
    return EXIT_OK


def cmd_observables(args) -> int:
    net = _load_net(args.net)
    s = read_states(args.states)
    if s.size != net.n:
        raise ValueError(f"state file has {s.size} entries, network has {net.n} nodes")
    result = asdict(observables(net, s))
    result["instantaneous_drift"] = instantaneous_drift(net, s, args.c)
    if is_connected(net):
        result["predicted_asymptotic_mean"] = predict_asymptotic_mean(net, s)
        result["predicted_global_state"] = net.n * result["predicted_asymptotic_mean"]
        result["predicted_net_gain"] = predict_net_gain(net, s)
    try:
        result["strength_state_correlation"] = strength_state_correlation(net, s)
    except DegenerateError:
        result["strength_state_correlation"] = float("nan")
    text = "".join(f"{key}={value!r}\n" for key, value in result.items())
    _emit_text(text, args.out)
    return EXIT_OK


def _experiment_config(args, cls):
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            cfg = cls.from_dict(json.load(fh))
    else:
        cfg = cls.paper() if args.preset == "paper" else cls.desk()
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    return cfg


def cmd_fig2(args) -> int:
    cfg = _experiment_config(args, Fig2Config)
    out = Path(args.out or "fig2_out")
    modes = ASSORT_MODES if args.assort_mode == "all" else [args.assort_mode or cfg.assort_mode]
    failed = 0
    for mode in modes:
        mode_cfg = replace(cfg, assort_mode=mode)
        target = out / mode if len(modes) > 1 else out
        res = run_fig2(mode_cfg, out_dir=target, jobs=args.jobs)
        failed += len(res.failures)
        rate = res.decay_rate_or_none()
        rate_txt = "n/a" if rate is None else f"{rate:.4f}"
        print(f"{mode}: {len(res.ok_runs)}/{cfg.runs} runs ok, decay rate {rate_txt} -> {target}")
    return EXIT_ABORT if failed else EXIT_OK


def cmd_fig3(args) -> int:
    cfg = _experiment_config(args, Fig3Config)
    out = Path(args.out or "fig3_out")
    res = run_fig3(cfg, out_dir=out, jobs=args.jobs)
    failed = sum(1 for r in res.records if r["status"] != "ok")
    best = max(res.cells, key=lambda c: c["mean_delta_global_state"])
    print(
        f"{len(res.records) - failed}/{len(res.records)} runs ok; "
        f"largest mean drift {best['mean_delta_global_state']:.4f} at alpha={best['alpha']}, beta={best['beta']} -> {out}"
    )
    return EXIT_ABORT if failed else EXIT_OK


class _Abort(RuntimeError):
    pass


COMMANDS = {
    "generate": cmd_generate,
    "rewire": cmd_rewire,
    "simulate": cmd_simulate,
    "adapt": cmd_adapt,
    "observables": cmd_observables,
    "fig2": cmd_fig2,
    "fig3": cmd_fig3,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        args = _resolve(args)
        return COMMANDS[args.command](args)
    except (_Abort, GenerationError, DivergenceError, RuntimeError, FloatingPointError) as exc:
        print(f"socialdrift {args.command}: aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"socialdrift {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
