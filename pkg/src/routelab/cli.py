"""Command-line surface: scenario export, training, evaluation, timing.

Exit codes: 0 on success, 2 for configuration errors (including bad
flag values), 1 for runtime failures.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .baselines import BASELINE_KINDS
from .errors import ConfigurationError, RuntimeFailure
from .harness.bench import BENCH_PRESETS, bench_inference
from .harness.evaluate import BaselineApproach, EvalConfig, PolicyApproach, \
    evaluate_approaches
from .harness.experiment import run_experiment
from .scenarios import PRESETS, generate_scenario, save_scenario
from .training.loop import POLICY_KINDS, TrainConfig, load_checkpoint, train, \
    train_cached

M_TRAFFIC_CHOICES = (0.25, 0.75, 1.5, 3.0)
P_TCP_CHOICES = (0.0, 0.5, 1.0)
OBJECTIVE_CHOICES = ("r", "d", "a", "l", "rd", "ra", "rda")


def _scenario_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", default="nx-XS", choices=sorted(PRESETS))
    p.add_argument("--m-traffic", type=float, default=1.5,
                   choices=M_TRAFFIC_CHOICES)
    p.add_argument("--p-tcp", type=float, default=0.5, choices=P_TCP_CHOICES)
    p.add_argument("--link-failures", action="store_true")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="routelab",
        description="Desk-scale routing-optimization lab: scenario "
                    "generation, packet/fluid training, evaluation, timing.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-scenario", help="write one scenario as JSON")
    _scenario_flags(p)
    p.add_argument("-o", "--out-dir", default=".")

    p = sub.add_parser("train", help="run one training configuration")
    _scenario_flags(p)
    p.add_argument("--policy", required=True, choices=POLICY_KINDS)
    p.add_argument("--env", default="packet", choices=("packet", "fluid"))
    p.add_argument("--objective", default="rda", choices=OBJECTIVE_CHOICES)
    p.add_argument("--iterations", type=int, default=100)
    p.add_argument("--lr", type=float, default=0.0)
    p.add_argument("-o", "--out-dir", default="",
                   help="run directory; defaults to the content-keyed cache")

    p = sub.add_parser("evaluate", help="seed-paired evaluation report")
    _scenario_flags(p)
    p.add_argument("--objective", default="rda", choices=OBJECTIVE_CHOICES)
    p.add_argument("--episodes", type=int, default=0,
                   help="override the per-preset episode count")
    p.add_argument("--approach", action="append", required=True,
                   metavar="KIND_OR_CHECKPOINT",
                   help="baseline kind ({}) or a checkpoint path; "
                        "repeatable".format("|".join(BASELINE_KINDS)))
    p.add_argument("-o", "--out-dir", default=".")

    p = sub.add_parser("bench", help="per-step inference timing table")
    p.add_argument("--policy", required=True, choices=POLICY_KINDS)
    p.add_argument("--presets", default=",".join(BENCH_PRESETS),
                   help="comma-separated preset list")
    p.add_argument("--episodes", type=int, default=30)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out-dir", default=".")

    p = sub.add_parser("run", help="execute a full experiment config")
    p.add_argument("config", help="path to the experiment JSON")
    p.add_argument("-o", "--out-dir", default="experiment")
    p.add_argument("--dry-run", action="store_true",
                   help="print the resolved plan without executing")
    return parser


def _cmd_generate_scenario(args) -> int:
    scenario = generate_scenario(
        args.preset, args.seed, m_traffic=args.m_traffic, p_tcp=args.p_tcp,
        link_failures=args.link_failures)
    os.makedirs(args.out_dir, exist_ok=True)
    path = os.path.join(args.out_dir,
                        f"scenario-{args.preset}-{args.seed}.json")
    save_scenario(scenario, path)
    top = scenario.topology
    print(f"wrote {path}: {top.n_nodes} nodes, {len(top.links)} links, "
          f"{len(scenario.demands)} demands, "
          f"{len(scenario.failures)} failures")
    return 0


def _cmd_train(args) -> int:
    config = TrainConfig(
        policy=args.policy, env=args.env, preset=args.preset,
        m_traffic=args.m_traffic, p_tcp=args.p_tcp, objective=args.objective,
        link_failures=args.link_failures, iterations=args.iterations,
        lr=args.lr, seed=args.seed)
    if args.out_dir:
        result = train(config, args.out_dir)
    else:
        result = train_cached(config)
    last = result["curve"][-1]
    print(f"run dir: {result['out_dir']}")
    print(f"final iteration {last['iteration']}: "
          f"mean reward {last['mean_reward']:.6g}")
    print(f"checkpoints: {result['best_path']} {result['final_path']}")
    return 0


def _cmd_evaluate(args) -> int:
    config = EvalConfig(
        preset=args.preset, m_traffic=args.m_traffic, p_tcp=args.p_tcp,
        link_failures=args.link_failures, objective=args.objective,
        n_episodes=args.episodes, seed=args.seed)
    approaches = {}
    groups = {}
    for i, spec in enumerate(args.approach):
        if spec in BASELINE_KINDS:
            approaches[spec] = BaselineApproach(spec, rng_seed=args.seed)
            continue
        policy, kind = load_checkpoint(spec)
        name = f"{kind}#{i}"
        approaches[name] = PolicyApproach(policy, kind)
        groups.setdefault(kind, []).append(name)
    report, timings = evaluate_approaches(config, approaches, groups)
    os.makedirs(args.out_dir, exist_ok=True)
    report_path = os.path.join(args.out_dir, "report.json")
    with open(report_path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
    with open(os.path.join(args.out_dir, "timings.json"), "w") as fh:
        json.dump(timings, fh, indent=2, sort_keys=True)
    for name, entry in report["approaches"].items():
        rel = report["relative_to_eigrp"].get(name, {})
        rel_txt = ""
        if rel.get("goodput_mb") is not None:
            rel_txt = f" ({rel['goodput_mb']:.3f}x eigrp)"
        print(f"{name}: goodput {entry['mean']['goodput_mb']:.4g} MB/step"
              f"{rel_txt}, drop {entry['mean']['drop_ratio']:.4g}, "
              f"delay {entry['mean']['avg_delay_ms']:.4g} ms")
    print(f"wrote {report_path}")
    return 0


def _cmd_bench(args) -> int:
    presets = tuple(s for s in args.presets.split(",") if s)
    table = bench_inference(args.policy, presets, args.episodes, args.steps,
                            args.seed)
    os.makedirs(args.out_dir, exist_ok=True)
    path = os.path.join(args.out_dir, f"bench-{args.policy}.json")
    with open(path, "w") as fh:
        json.dump(table, fh, indent=2, sort_keys=True)
    for preset, row in table["presets"].items():
        print(f"{preset}: {row['mean_step_s'] * 1e3:.3f} ms/step "
              f"(p95 {row['p95_step_s'] * 1e3:.3f}), "
              f"APSP/step {row['apsp_per_step']:.3g}")
    print(f"wrote {path}")
    return 0


def _cmd_run(args) -> int:
    with open(args.config) as fh:
        config = json.load(fh)
    manifest = run_experiment(config, args.out_dir, dry_run=args.dry_run)
    if args.dry_run:
        print(json.dumps(manifest["plan"], indent=2))
        return 0
    print(f"wrote {os.path.join(args.out_dir, 'manifest.json')}")
    if manifest["failures"]:
        for failure in manifest["failures"]:
            print(f"stage {failure['stage']} failed: {failure['error']}",
                  file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "generate-scenario": _cmd_generate_scenario,
        "train": _cmd_train,
        "evaluate": _cmd_evaluate,
        "bench": _cmd_bench,
        "run": _cmd_run,
    }
    try:
        return handlers[args.command](args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except RuntimeFailure as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
