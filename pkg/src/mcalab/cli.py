"""``mcalab`` command line: train, eval, baseline, compare, gen-traj.

Exit codes: 0 success, 1 usage or input error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import nn, plots, trajectory
from .config import ConfigError, RunConfig
from .env import EnvUsageError, McaEnv, VecMcaEnv
from .kinematics import PlatformTrajectory
from .metrics import ComparisonReport, ReportSchemaError, compare_reports, evaluate_mca, sensed_signals
from .ppo import ActorCritic, NumericalError, train, write_log_csv
from .trajectory import ReferenceTrajectory, TrajectoryError
from .washout import InfeasibleError, cw_optimize, cw_run

log = logging.getLogger("mcalab")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- helpers ----------------------------------------------------------------------

def _load_config(args) -> RunConfig:
    overrides = {"seed": getattr(args, "seed", None), "out_dir": getattr(args, "out_dir", None)}
    if getattr(args, "steps", None) is not None:
        overrides["ppo.total_steps"] = args.steps
    if getattr(args, "trajectory", None) is not None:
        overrides["eval.trajectory"] = args.trajectory
    return RunConfig.load(args.config, **overrides)


def _reference(cfg: RunConfig) -> ReferenceTrajectory:
    if cfg.eval.trajectory is None:
        return trajectory.iso_double_lane_change(cfg.eval.iso_speed, cfg.env.dt, k_roll=cfg.env.k_roll,
                                                 tau_roll=cfg.env.tau_roll)
    ref = ReferenceTrajectory.from_csv(cfg.eval.trajectory)
    if not np.isclose(ref.dt, cfg.env.dt, rtol=1e-9, atol=0.0):
        raise UsageError(f"trajectory step {ref.dt} s differs from env.dt {cfg.env.dt} s")
    return ref


def _write_evaluation(out_dir, cfg: RunConfig, plat: PlatformTrajectory, ref: ReferenceTrajectory, label: str):
    """Report (text + CSV row) and figures for a platform run over ``ref``."""
    report = evaluate_mca(plat, ref, cfg.vestibular)
    report.write(os.path.join(out_dir, "report.txt"))
    with open(os.path.join(out_dir, "report.csv"), "w") as fh:
        fh.write(report.csv_row(label))
    plots.evaluation_figures(plat, ref, sensed_signals(plat, ref, cfg.vestibular), out_dir, x_max=cfg.reward.x_max)
    return report


def _write_platform_csv(path, plat: PlatformTrajectory, ref: ReferenceTrajectory):
    cols = [plat.t, plat.x, plat.v, plat.a, plat.f, plat.phi, plat.omega, ref.f_v, ref.omega_v]
    with open(path, "w") as fh:
        fh.write("t,x,v,a,f,phi,omega,f_v,omega_v\n")
        for row in zip(*(c.tolist() for c in cols)):
            fh.write(",".join(f"{v:.12g}" for v in row) + "\n")


# -- commands ---------------------------------------------------------------------

def cmd_train(args) -> int:
    cfg = _load_config(args)
    out = cfg.out_dir
    os.makedirs(out, exist_ok=True)
    cfg.write(os.path.join(out, "config.json"))
    env_cfg, weights = cfg.env, cfg.reward

    def factory(n, seed):
        return VecMcaEnv(n, seed, env_cfg, weights)

    result = train(factory, cfg.ppo, seed=cfg.seed, out_dir=out)
    write_log_csv(os.path.join(out, "train_log.csv"), result.log)
    result.model.save(os.path.join(out, "policy.mcaw"), {"seed": cfg.seed, "steps": cfg.ppo.iterations * cfg.ppo.batch_size})
    log.info("wrote %s", os.path.join(out, "policy.mcaw"))
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = _load_config(args)
    model = ActorCritic.load(args.weights)
    if model.obs_dim != VecMcaEnv.obs_dim or model.policy.sizes[-1] != VecMcaEnv.act_dim:
        raise nn.ShapeError(f"policy maps {model.obs_dim} -> {model.policy.sizes[-1]} but the environment needs "
                            f"{VecMcaEnv.obs_dim} -> {VecMcaEnv.act_dim}")
    ref = _reference(cfg)
    out = cfg.out_dir
    os.makedirs(out, exist_ok=True)
    cfg.write(os.path.join(out, "config.json"))
    env = McaEnv(cfg.env, cfg.reward, ref)
    obs = env.reset()
    done, terminated, total = False, False, 0.0
    while not done:
        obs, r, done, info = env.step(np.clip(model.greedy(obs), -1.0, 1.0))
        total += r
        terminated = terminated or bool(info["terminated"])
    env.write_trace_csv(os.path.join(out, "trace.csv"))
    plat = env.platform_trajectory()
    # a terminated run is evaluated over the part of the reference it covered
    covered = ReferenceTrajectory(ref.dt, ref.f_v[:len(plat)], ref.omega_v[:len(plat)])
    report = _write_evaluation(out, cfg, plat, covered, "rl")
    with open(os.path.join(out, "summary.json"), "w") as fh:
        json.dump({"return": total, "terminated": terminated, "steps": len(plat) - 1}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(report.to_text(), end="")
    if terminated:
        print(f"workspace termination after {len(plat) - 1} steps")
    return EXIT_OK


def cmd_baseline(args) -> int:
    cfg = _load_config(args)
    ref = _reference(cfg)
    out = cfg.out_dir
    os.makedirs(out, exist_ok=True)
    cfg.write(os.path.join(out, "config.json"))
    w = cfg.washout
    res = cw_optimize(ref, w.bounds_tuples(), w.w1, w.w2, w.x_max, w.n_starts, cfg.seed, w.maxfev, cfg.vestibular)
    res.to_json(os.path.join(out, "cw_params.json"))
    plat = cw_run(res.params, ref)
    _write_platform_csv(os.path.join(out, "trace.csv"), plat, ref)
    report = _write_evaluation(out, cfg, plat, ref, "cw")
    print(report.to_text(), end="")
    return EXIT_OK


def cmd_compare(args) -> int:
    a = ComparisonReport.read(args.report_a)
    b = ComparisonReport.read(args.report_b)
    print(compare_reports(a, b, (args.label_a, args.label_b)), end="")
    return EXIT_OK


def cmd_gen_traj(args) -> int:
    cfg = _load_config(args)
    e = cfg.env
    if args.kind == "iso":
        ref = trajectory.iso_double_lane_change(args.speed, e.dt, k_roll=e.k_roll, tau_roll=e.tau_roll)
    elif args.kind == "episode":
        ref = e.sample_reference(np.random.SeedSequence([cfg.seed]))
    else:
        ref = ReferenceTrajectory.zeros(int(round(args.duration / e.dt)) + 1, e.dt)
    path = args.output or os.path.join(cfg.out_dir, f"{args.kind}.csv")
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    ref.to_csv(path)
    print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mcalab", description="Reinforcement-learning motion cueing laboratory")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, seed=True):
        sp.add_argument("--config", help="JSON run configuration (defaults apply to missing keys)")
        sp.add_argument("--out-dir", dest="out_dir", help="output directory (overrides out_dir)")
        if seed:
            sp.add_argument("--seed", type=int, help="master seed (overrides seed)")

    sp = sub.add_parser("train", help="train a PPO policy")
    common(sp)
    sp.add_argument("--steps", type=int, help="total environment steps (overrides ppo.total_steps)")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("eval", help="greedy rollout of a trained policy on a reference trajectory")
    common(sp, seed=False)
    sp.add_argument("--weights", required=True, help="policy weight file (.mcaw)")
    sp.add_argument("--trajectory", help="reference CSV (default: ISO double lane change)")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("baseline", help="optimise and evaluate the classical washout")
    common(sp)
    sp.add_argument("--trajectory", help="reference CSV (default: ISO double lane change)")
    sp.set_defaults(func=cmd_baseline)

    sp = sub.add_parser("compare", help="side-by-side table of two reports")
    sp.add_argument("report_a")
    sp.add_argument("report_b")
    sp.add_argument("--labels", nargs=2, default=("A", "B"), metavar=("A", "B"))
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("gen-traj", help="export a reference trajectory CSV")
    common(sp)
    sp.add_argument("--kind", choices=("iso", "episode", "zero"), default="iso")
    sp.add_argument("--speed", type=float, default=10.0, help="ISO manoeuvre speed [m/s]")
    sp.add_argument("--duration", type=float, default=20.0, help="length of a zero trajectory [s]")
    sp.add_argument("--output", "-o", help="output CSV (default: <out-dir>/<kind>.csv)")
    sp.set_defaults(func=cmd_gen_traj)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "compare":
        args.label_a, args.label_b = args.labels
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (NumericalError, FloatingPointError) as exc:
        print(f"mcalab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, UsageError, ReportSchemaError, nn.WeightFileError, nn.ShapeError, TrajectoryError,
            InfeasibleError, EnvUsageError, FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"mcalab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
