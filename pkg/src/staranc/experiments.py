"""Seeded Monte Carlo studies over leaf counts and estimators.

A study simulates ``replicates`` independent data sets at each leaf
count, runs the requested estimators on every data set, and persists
row-level results, an accuracy summary, and a manifest that pins the
master seed, the per-replicate seed derivation, and output digests, so
a study can be reproduced bit for bit from its manifest alone.
"""

from __future__ import annotations

import csv
import hashlib
import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from . import __version__
from .estimators import CapacityError, EstimateResult, Method, estimate
from .model import AncestralSequence, EdgeSpec, StationaryDistribution
from .simulate import IidEdgeLaw, SimulationConfig, sample_edge_lengths, simulate_alignment

SEED_RULE = "first uint64 word of numpy SeedSequence(entropy=master_seed, spawn_key=(n, replicate))"

ROWS_FILE = "rows.csv"
SUMMARY_FILE = "summary.csv"
MANIFEST_FILE = "manifest.json"


@dataclass(frozen=True)
class ExperimentConfig:
    pi: StationaryDistribution
    rho_true: AncestralSequence
    edge: Union[EdgeSpec, IidEdgeLaw]
    n_grid: tuple[int, ...]
    estimators: tuple[Method, ...]
    replicates: int
    seed: int
    output_dir: Optional[Path] = None
    search_cap: int = 1 << 20

    def __post_init__(self):
        n_grid = tuple(int(n) for n in self.n_grid)
        object.__setattr__(self, "n_grid", n_grid)
        object.__setattr__(self, "estimators", tuple(self.estimators))
        if self.replicates < 1:
            raise ValueError("need at least one replicate")
        if not n_grid or any(b <= a for a, b in zip(n_grid, n_grid[1:])):
            raise ValueError(f"leaf counts must be strictly increasing: {n_grid}")
        if not self.estimators:
            raise ValueError("need at least one estimator")
        if self.output_dir is not None:
            object.__setattr__(self, "output_dir", Path(self.output_dir))


@dataclass(frozen=True)
class ExperimentRow:
    n: int
    estimator: Method
    replicate: int
    recovered_truth: bool
    rho_hat: tuple[int, ...]
    log_score: Optional[float]
    wall_ms: float
    error: str = ""


@dataclass(frozen=True)
class SummaryRow:
    n: int
    estimator: Method
    replicates: int
    accuracy: float
    stderr: float
    errors: int


def derive_replicate_seed(master_seed: int, n: int, replicate: int) -> int:
    """Deterministic per-replicate seed; rule recorded in the manifest."""
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(n, replicate))
    return int(ss.generate_state(1, np.uint64)[0])


def run_experiment(config: ExperimentConfig) -> tuple[list[ExperimentRow], list[SummaryRow]]:
    """Run the full grid; capacity failures are recorded per estimator
    without aborting the others."""
    rows: list[ExperimentRow] = []
    truth = config.rho_true.states
    for n in config.n_grid:
        for replicate in range(config.replicates):
            rep_seed = derive_replicate_seed(config.seed, n, replicate)
            sim = SimulationConfig(
                pi=config.pi,
                rho_true=config.rho_true,
                n_leaves=n,
                edge=config.edge,
                seed=rep_seed,
            )
            edges = sample_edge_lengths(sim)
            alignment = simulate_alignment(config.pi, config.rho_true, edges, rep_seed)
            for method in config.estimators:
                start = time.perf_counter()
                try:
                    result: Optional[EstimateResult] = estimate(
                        config.pi, alignment, method, search_cap=config.search_cap
                    )
                    error = ""
                except (CapacityError, ValueError) as exc:
                    result = None
                    error = f"{type(exc).__name__}: {exc}"
                wall_ms = (time.perf_counter() - start) * 1e3
                rows.append(
                    ExperimentRow(
                        n=n,
                        estimator=method,
                        replicate=replicate,
                        recovered_truth=(result is not None and result.rho_hat.states == truth),
                        rho_hat=() if result is None else result.rho_hat.states,
                        log_score=None if result is None else result.log_score,
                        wall_ms=wall_ms,
                        error=error,
                    )
                )
    rows.sort(key=lambda r: (r.n, r.estimator.value, r.replicate))
    return rows, summarize(rows)


def summarize(rows: Sequence[ExperimentRow]) -> list[SummaryRow]:
    """Accuracy with binomial standard errors, per (n, estimator)."""
    keys = sorted({(r.n, r.estimator) for r in rows}, key=lambda k: (k[0], k[1].value))
    out = []
    for n, method in keys:
        group = [r for r in rows if r.n == n and r.estimator == method]
        ok = [r for r in group if not r.error]
        acc = sum(r.recovered_truth for r in ok) / len(ok) if ok else float("nan")
        se = float("nan")
        if ok:
            se = (acc * (1.0 - acc) / len(ok)) ** 0.5
        out.append(
            SummaryRow(
                n=n,
                estimator=method,
                replicates=len(group),
                accuracy=acc,
                stderr=se,
                errors=len(group) - len(ok),
            )
        )
    return out


def rows_to_csv(rows: Sequence[ExperimentRow], path) -> None:
    """Deterministic row-level results.

    Wall times go to a separate file (:func:`timings_to_csv`): they are
    environment noise and would break the bitwise-reproducibility
    contract on this one.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["n", "estimator", "replicate", "recovered_truth", "rho_hat", "log_score", "error"]
        )
        for r in rows:
            writer.writerow(
                [
                    r.n,
                    r.estimator.value,
                    r.replicate,
                    int(r.recovered_truth),
                    "-".join(str(s) for s in r.rho_hat),
                    "" if r.log_score is None else f"{r.log_score:.17g}",
                    r.error,
                ]
            )


def timings_to_csv(rows: Sequence[ExperimentRow], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "estimator", "replicate", "wall_ms"])
        for r in rows:
            writer.writerow([r.n, r.estimator.value, r.replicate, f"{r.wall_ms:.3f}"])


def summary_to_csv(summary: Sequence[SummaryRow], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "estimator", "replicates", "accuracy", "stderr", "errors"])
        for s in summary:
            writer.writerow(
                [s.n, s.estimator.value, s.replicates, f"{s.accuracy:.17g}", f"{s.stderr:.17g}", s.errors]
            )


def edge_to_descriptor(edge: Union[EdgeSpec, IidEdgeLaw]) -> dict:
    if isinstance(edge, IidEdgeLaw):
        return {"kind": "iid", "family": edge.family, "params": list(edge.params)}
    if edge.kind == "constant":
        return {"kind": "constant", "s": edge.values[0]}
    if edge.kind == "mixture":
        return {"kind": "mixture", "atoms": [list(a) for a in zip(edge.weights, edge.values)]}
    return {"kind": "empirical", "values": list(edge.values)}


def edge_from_descriptor(desc: dict) -> Union[EdgeSpec, IidEdgeLaw]:
    kind = desc["kind"]
    if kind == "iid":
        return IidEdgeLaw(family=desc["family"], params=tuple(desc["params"]))
    if kind == "constant":
        return EdgeSpec.constant(desc["s"], allow_zero_mean=True)
    if kind == "mixture":
        return EdgeSpec.mixture([tuple(a) for a in desc["atoms"]])
    if kind == "empirical":
        return EdgeSpec.empirical(desc["values"], allow_zero_mean=True)
    raise ValueError(f"unknown edge descriptor kind {kind!r}")


def _sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def emit_manifest(config: ExperimentConfig, out_dir: Path, outputs: Sequence[Path]) -> Path:
    """Write the study manifest: config echo, seed rule and derived
    seeds, and a digest per output file."""
    out_dir = Path(out_dir)
    manifest = {
        "tool": "staranc",
        "version": __version__,
        "config": {
            "pi": list(config.pi.probs),
            "rho_true": list(config.rho_true.states),
            "edge": edge_to_descriptor(config.edge),
            "n_grid": list(config.n_grid),
            "estimators": [m.value for m in config.estimators],
            "replicates": config.replicates,
            "search_cap": config.search_cap,
        },
        "master_seed": config.seed,
        "seed_rule": SEED_RULE,
        "derived_seeds": [
            {"n": n, "replicate": r, "seed": derive_replicate_seed(config.seed, n, r)}
            for n in config.n_grid
            for r in range(config.replicates)
        ],
        "outputs": {Path(p).name: _sha256(p) for p in outputs},
    }
    path = out_dir / MANIFEST_FILE
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def config_from_manifest(path) -> ExperimentConfig:
    """Rebuild the study configuration a manifest records."""
    with open(path) as fh:
        manifest = json.load(fh)
    cfg = manifest["config"]
    return ExperimentConfig(
        pi=StationaryDistribution(tuple(cfg["pi"])),
        rho_true=AncestralSequence(tuple(cfg["rho_true"])),
        edge=edge_from_descriptor(cfg["edge"]),
        n_grid=tuple(cfg["n_grid"]),
        estimators=tuple(Method(m) for m in cfg["estimators"]),
        replicates=cfg["replicates"],
        seed=manifest["master_seed"],
        search_cap=cfg.get("search_cap", 1 << 20),
    )


def run_experiment_to_dir(config: ExperimentConfig, out_dir: Optional[Path] = None) -> dict:
    """Run the study and persist rows, summary, timings, and manifest.

    The manifest digests cover the deterministic outputs only (rows and
    summary); timings are informational.  Returns the manifest dict.
    """
    target = out_dir if out_dir is not None else config.output_dir
    if target is None:
        raise ValueError("an output directory is required")
    out_dir = Path(target)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows, summary = run_experiment(config)
    rows_path = out_dir / ROWS_FILE
    summary_path = out_dir / SUMMARY_FILE
    rows_to_csv(rows, rows_path)
    summary_to_csv(summary, summary_path)
    timings_to_csv(rows, out_dir / "timings.csv")
    manifest_path = emit_manifest(config, out_dir, [rows_path, summary_path])
    with open(manifest_path) as fh:
        return json.load(fh)
