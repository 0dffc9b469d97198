"""Config-driven experiment runner: artifacts, manifest, dry-run plan.

A single JSON config describes scenario exports, training runs, an
evaluation, and a timing benchmark; each stage is optional. The
manifest echoes the config, the derived seeds, and content hashes of
every deterministic artifact, so a rerun with an identical config
yields identical hashes. Wall-clock outputs stay out of the hashes.
"""

from __future__ import annotations

import hashlib
import json
import os

from ..errors import ConfigurationError
from ..scenarios import generate_scenario, save_scenario
from ..training.loop import TrainConfig, train_cached
from .bench import BENCH_PRESETS, bench_inference
from .evaluate import (
    BaselineApproach,
    EvalConfig,
    PolicyApproach,
    evaluate_approaches,
)

STAGE_KEYS = ("scenarios", "train", "evaluate", "bench")


def _require(mapping: dict, key: str, where: str):
    if key not in mapping:
        raise ConfigurationError(f"missing config key: {where}.{key}")
    return mapping[key]


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def resolve_plan(config: dict) -> list:
    """Expand the config into an ordered list of concrete stage records."""
    if not any(k in config for k in STAGE_KEYS):
        raise ConfigurationError(
            f"config defines no stage; expected one of {list(STAGE_KEYS)}")
    plan = []
    for spec in config.get("scenarios", []):
        preset = _require(spec, "preset", "scenarios[]")
        seed = _require(spec, "seed", "scenarios[]")
        plan.append({"stage": "scenario", "preset": preset, "seed": seed,
                     "m_traffic": spec.get("m_traffic", 1.5),
                     "p_tcp": spec.get("p_tcp", 0.5),
                     "link_failures": spec.get("link_failures", False)})
    for spec in config.get("train", []):
        policy = _require(spec, "policy", "train[]")
        seeds = _require(spec, "seeds", "train[]")
        for seed in seeds:
            run = {"stage": "train", "policy": policy, "seed": seed}
            for k in ("env", "preset", "m_traffic", "p_tcp", "objective",
                      "link_failures", "iterations", "lr"):
                if k in spec:
                    run[k] = spec[k]
            run["label"] = "{}-{}-s{}".format(
                policy, spec.get("env", "packet"), seed)
            plan.append(run)
    if "evaluate" in config:
        spec = dict(config["evaluate"])
        spec["approaches"] = _require(spec, "approaches", "evaluate")
        plan.append({"stage": "evaluate", **spec})
    if "bench" in config:
        spec = dict(config["bench"])
        plan.append({"stage": "bench",
                     "policies": _require(spec, "policies", "bench"),
                     "presets": spec.get("presets", list(BENCH_PRESETS)),
                     "n_episodes": spec.get("n_episodes", 30),
                     "steps": spec.get("steps", 100),
                     "seed": spec.get("seed", 0)})
    return plan


def run_experiment(config: dict, out_dir: str, dry_run: bool = False) -> dict:
    """Execute the configured stages into out_dir; returns the manifest.

    Trained checkpoints from the train stage become greedy approaches
    in the evaluate stage, grouped per policy/environment label for
    across-seed aggregation. Failures are recorded per stage in the
    manifest instead of aborting later stages.
    """
    plan = resolve_plan(config)
    manifest = {"config": config, "plan": plan, "artifacts": {},
                "failures": []}
    if dry_run:
        return manifest
    os.makedirs(out_dir, exist_ok=True)
    trained = {}

    def record(relpath: str) -> None:
        manifest["artifacts"][relpath] = _sha256(os.path.join(out_dir, relpath))

    for item in plan:
        try:
            if item["stage"] == "scenario":
                scenario = generate_scenario(
                    item["preset"], item["seed"], m_traffic=item["m_traffic"],
                    p_tcp=item["p_tcp"], link_failures=item["link_failures"])
                rel = "scenario-{}-{}.json".format(item["preset"], item["seed"])
                save_scenario(scenario, os.path.join(out_dir, rel))
                record(rel)
            elif item["stage"] == "train":
                cfg_kwargs = {k: v for k, v in item.items()
                              if k not in ("stage", "label")}
                tc = TrainConfig(**cfg_kwargs)
                result = train_cached(tc)
                trained.setdefault(
                    "{}-{}".format(tc.policy, tc.env), []).append(
                        (item["label"], result["best_path"], tc.policy))
                rel = os.path.join("train", item["label"], "curve.csv")
                os.makedirs(os.path.dirname(os.path.join(out_dir, rel)),
                            exist_ok=True)
                with open(result["out_dir"] + "/curve.csv") as src, \
                        open(os.path.join(out_dir, rel), "w") as dst:
                    dst.write(src.read())
                record(rel)
            elif item["stage"] == "evaluate":
                manifest["evaluate"] = _run_evaluate(item, trained, out_dir)
                record("report.json")
            elif item["stage"] == "bench":
                results = {k: bench_inference(k, tuple(item["presets"]),
                                              item["n_episodes"], item["steps"],
                                              item["seed"])
                           for k in item["policies"]}
                with open(os.path.join(out_dir, "bench.json"), "w") as fh:
                    json.dump(results, fh, indent=2, sort_keys=True)
        except Exception as exc:  # recorded, later stages still run
            manifest["failures"].append({"stage": item["stage"],
                                         "context": repr(item),
                                         "error": f"{type(exc).__name__}: {exc}"})
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return manifest


def _run_evaluate(item: dict, trained: dict, out_dir: str) -> dict:
    from ..training.loop import load_checkpoint

    cfg_kwargs = {k: v for k, v in item.items()
                  if k in ("preset", "m_traffic", "p_tcp", "link_failures",
                           "objective", "n_episodes", "horizon", "seed")}
    eval_cfg = EvalConfig(**cfg_kwargs)
    approaches = {}
    for kind in item["approaches"]:
        approaches[kind] = BaselineApproach(kind, rng_seed=eval_cfg.seed)
    groups = {}
    for label, members in trained.items():
        names = []
        for member_label, ckpt, _kind in members:
            policy, kind = load_checkpoint(ckpt)
            approaches[member_label] = PolicyApproach(policy, kind)
            names.append(member_label)
        groups[label] = names
    report, timings = evaluate_approaches(eval_cfg, approaches, groups)
    with open(os.path.join(out_dir, "report.json"), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
    with open(os.path.join(out_dir, "timings.json"), "w") as fh:
        json.dump(timings, fh, indent=2, sort_keys=True)
    return {"n_approaches": len(approaches), "groups": groups}
