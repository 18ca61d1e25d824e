"""Multi-seed, multi-config simulation experiments driven by a JSON run config.

Each seed fixes one substrate and one base workload; every configuration in
the run replays that same workload with its own decorations.  Outputs are a
CSV per (seed, config) and a summary JSON, both free of wall-clock data so
that reruns are byte-identical.
"""
from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..embedder import PricingWeights
from ..milp import Weights
from ..solver import SolveLimits
from .runner import MetricsRecord, run
from .topology import SubstrateGenParams, gen_substrate
from .workload import CONFIGS, WorkloadParams, gen_workload

log = logging.getLogger(__name__)

CONFIG_SCHEMA = "secvne.simconfig/1"
SUMMARY_SCHEMA = "secvne.simsummary/1"
SUMMARY_FIELDS = ("acceptance_ratio", "node_stress", "link_stress",
                  "avg_revenue_per_accepted", "avg_cost_per_accepted")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    substrate: SubstrateGenParams = field(default_factory=SubstrateGenParams)
    workload: WorkloadParams = field(default_factory=WorkloadParams)
    configs: tuple[str, ...] = ("NS+NA",)
    seeds: tuple[int, ...] = (0,)
    weights: Weights = field(default_factory=Weights)
    pricing: PricingWeights = field(default_factory=PricingWeights)
    backend: str = "highs"
    limits: SolveLimits = field(default_factory=SolveLimits)
    bucket_width: float | None = None
    check: bool = True

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        schema = data.pop("schema", CONFIG_SCHEMA)
        if schema != CONFIG_SCHEMA:
            raise ConfigError(f"unsupported config schema {schema!r}")
        known = {"substrate", "workload", "configs", "seeds", "weights", "pricing", "solver",
                 "bucket_width", "check"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            solver = dict(data.get("solver", {}))
            backend = solver.pop("backend", "highs")
            configs = tuple(data.get("configs", ("NS+NA",)))
            for c in configs:
                if c not in CONFIGS:
                    raise ConfigError(f"unknown request config {c!r}")
            return cls(
                substrate=SubstrateGenParams.from_dict(data.get("substrate", {})),
                workload=WorkloadParams.from_dict(data.get("workload", {})),
                configs=configs,
                seeds=tuple(int(s) for s in data.get("seeds", (0,))),
                weights=Weights(*data.get("weights", (1.0, 1.0, 1.0))),
                pricing=PricingWeights(*data.get("pricing", (1.0, 1.0))),
                backend=backend,
                limits=SolveLimits(**solver),
                bucket_width=data.get("bucket_width"),
                check=bool(data.get("check", True)),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        sub = self.substrate.to_dict()
        wl = self.workload.to_dict()
        sub.pop("seed")
        for key in ("seed", "config"):
            wl.pop(key)
        return {
            "schema": CONFIG_SCHEMA,
            "substrate": sub,
            "workload": wl,
            "configs": list(self.configs),
            "seeds": list(self.seeds),
            "weights": [self.weights.beta1, self.weights.beta2, self.weights.beta3],
            "pricing": [self.pricing.lambda1, self.pricing.lambda2],
            "solver": {"backend": self.backend, "max_nodes": self.limits.max_nodes,
                       "time_budget": self.limits.time_budget,
                       "integrality_tol": self.limits.integrality_tol, "lp_tol": self.limits.lp_tol},
            "bucket_width": self.bucket_width,
            "check": self.check,
        }


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return ExperimentConfig.from_dict(json.load(fh))


def derive_seeds(seed: int) -> tuple[int, int]:
    """Independent (substrate, workload) seeds for one experiment seed."""
    sub, wl = np.random.SeedSequence(seed).spawn(2)
    return int(sub.generate_state(1, np.uint64)[0]), int(wl.generate_state(1, np.uint64)[0])


def run_one(cfg: ExperimentConfig, seed: int, config: str) -> MetricsRecord:
    sub_seed, wl_seed = derive_seeds(seed)
    net = gen_substrate(replace(cfg.substrate, seed=sub_seed))
    events = gen_workload(replace(cfg.workload, seed=wl_seed, config=config))
    t0 = time.perf_counter()
    rec = run(net, events, cfg.weights, cfg.pricing, cfg.limits, horizon=cfg.workload.horizon,
              bucket_width=cfg.bucket_width, backend=cfg.backend, check=cfg.check)
    log.info("seed %d %s: %d arrivals, acceptance %.4f, %.1fs", seed, config, rec.final["arrived"],
             rec.final["acceptance_ratio"], time.perf_counter() - t0)
    return rec


def _job(args):
    return run_one(*args)


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> dict[tuple[int, str], MetricsRecord]:
    """All (seed, config) runs; ``workers > 1`` spreads them over processes."""
    jobs = [(cfg, s, c) for s in cfg.seeds for c in cfg.configs]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_job, jobs))
    else:
        records = [_job(j) for j in jobs]
    return {(s, c): r for (_, s, c), r in zip(jobs, records)}


def _mean(values):
    values = [v for v in values if v is not None]
    return sum(values) / len(values) if values else None


def summarize(cfg: ExperimentConfig, results: dict[tuple[int, str], MetricsRecord]) -> dict:
    runs = []
    for (seed, config), rec in sorted(results.items(), key=lambda kv: (kv[0][0], cfg.configs.index(kv[0][1]))):
        runs.append({"seed": seed, "config": config, "final": rec.final, "violations": rec.violations})
    per_config = {}
    for config in cfg.configs:
        finals = [r["final"] for r in runs if r["config"] == config]
        per_config[config] = {
            "runs": len(finals),
            "arrived": sum(f["arrived"] for f in finals),
            "accepted": sum(f["accepted"] for f in finals),
            **{"mean_" + k: _mean([f[k] for f in finals]) for k in SUMMARY_FIELDS},
        }
    return {
        "schema": SUMMARY_SCHEMA,
        "config": cfg.to_dict(),
        "runs": runs,
        "per_config": per_config,
        "violations": sum(len(r["violations"]) for r in runs),
    }


def csv_name(seed: int, config: str) -> str:
    return f"seed{seed}_{config.replace('+', '_')}.csv"


def write_outputs(out_dir, cfg: ExperimentConfig, results: dict[tuple[int, str], MetricsRecord]) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for (seed, config), rec in results.items():
        (out / csv_name(seed, config)).write_text(rec.to_csv())
    summary = summarize(cfg, results)
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return summary


__all__ = ["CONFIG_SCHEMA", "SUMMARY_SCHEMA", "ConfigError", "ExperimentConfig", "csv_name", "derive_seeds",
           "load_config", "run_experiment", "run_one", "summarize", "write_outputs"]
