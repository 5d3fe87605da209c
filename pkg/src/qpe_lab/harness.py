"""Monte Carlo benchmark harness: strategy x budget x phase x repetition.

Every cell of the sweep derives its own seed by hashing (master seed,
strategy, budget, phase index, repetition), so any cell can be reproduced
in isolation and removing cells never perturbs the others.  Failures are
captured per cell rather than aborting the sweep.

Persisted CSVs render floats with 17 significant digits and are fully
determined by the sweep configuration: rerunning the same config yields
byte-identical files.  For that reason the runtime_ms column is pinned to
0.0; wall-clock jitter has no place in reproducible result sets (see the
package notes on determinism).
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .adaptive import AlgorithmConfig, run, validate_trace
from .angles import TWO_PI, wrapped_distance
from .baselines import (
    QpeaConfig,
    run_classical,
    run_nonadaptive_doubling,
    run_qpea,
)
from .model import NoiseModel
from .posterior import LossKind

STRATEGIES = ("adaptive", "classical", "nonadaptive-doubling", "qpea")
WORKER_ENV_VAR = "QPE_LAB_THREADS"

RESULTS_HEADER = (
    "strategy,n_tot,theta_index,theta_true,rep,abs_error,sq_error,"
    "expected_loss,resources_spent,max_depth,runtime_ms"
)
AGGREGATE_HEADER = "strategy,n_tot,mae_mean,mae_median,mae_min,mae_max,mse_mean,count"


class EmptyGroupError(ValueError):
    """Raised when asked to aggregate nothing."""


class DegenerateInputError(ValueError):
    """Raised when a log-log fit lacks usable points."""


@dataclass(frozen=True)
class SweepConfig:
    """Full description of one benchmark sweep."""

    strategies: tuple[str, ...]
    resource_ladder: tuple[int, ...]
    theta_count: int = 20
    repetitions: int = 10
    noise: NoiseModel = NoiseModel()
    depth_limit: int = 1 << 20
    epsilon_exponent: float = 3.0
    epsilon_scale: float = 1.0
    loss_kind: LossKind = LossKind.ABSOLUTE
    estimator: str = "map"
    grid_size: int = 4096
    shots_per_depth: int = 32
    master_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "strategies", tuple(self.strategies))
        object.__setattr__(self, "resource_ladder", tuple(int(n) for n in self.resource_ladder))
        if not self.strategies:
            raise ValueError("at least one strategy is required")
        unknown = set(self.strategies) - set(STRATEGIES)
        if unknown:
            raise ValueError(f"unknown strategies {sorted(unknown)}; pick from {STRATEGIES}")
        if len(set(self.strategies)) != len(self.strategies):
            raise ValueError(f"duplicate strategies in {self.strategies}")
        if not self.resource_ladder:
            raise ValueError("resource ladder must not be empty")
        if any(n < 2 for n in self.resource_ladder):
            raise ValueError(f"every ladder budget must be >= 2, got {self.resource_ladder}")
        if any(b <= a for a, b in zip(self.resource_ladder, self.resource_ladder[1:])):
            raise ValueError(f"resource ladder must increase strictly: {self.resource_ladder}")
        if self.theta_count < 1:
            raise ValueError(f"theta_count must be >= 1, got {self.theta_count}")
        if self.repetitions < 1:
            raise ValueError(f"repetitions must be >= 1, got {self.repetitions}")

    def theta_of(self, theta_index: int) -> float:
        return TWO_PI * theta_index / self.theta_count


@dataclass(frozen=True)
class SweepCellResult:
    """One estimation run inside a sweep, or its recorded failure."""

    strategy: str
    n_tot: int
    theta_index: int
    theta_true: float
    rep: int
    abs_error: float
    sq_error: float
    expected_loss: float
    resources_spent: int
    max_depth: int
    runtime_ms: float = 0.0
    error: str | None = None


@dataclass(frozen=True)
class AggregateRow:
    """Error statistics for one (strategy, budget) group.

    Statistics follow the per-phase protocol: errors are first averaged
    over repetitions at each phase, and the mean/median/min/max are taken
    across phases.  ``count`` is the number of finite cells behind the row.
    """

    strategy: str
    n_tot: int
    mae_mean: float
    mae_median: float
    mae_min: float
    mae_max: float
    mse_mean: float
    count: int


def derive_cell_seed(master_seed: int, strategy: str, n_tot: int, theta_index: int, rep: int) -> int:
    """Stable 64-bit seed for one cell, independent of all other cells."""
    key = f"{master_seed}|{strategy}|{n_tot}|{theta_index}|{rep}".encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "big")


def _qpea_register_size(n_tot: int) -> int:
    # Largest register whose 2**m - 1 applications fit the budget.
    return min(24, (n_tot + 1).bit_length() - 1)


def run_cell(config: SweepConfig, strategy: str, n_tot: int, theta_index: int, rep: int) -> SweepCellResult:
    """Execute one cell, trapping any failure into the result record."""
    theta = config.theta_of(theta_index)
    seed = derive_cell_seed(config.master_seed, strategy, n_tot, theta_index, rep)
    try:
        if strategy == "adaptive":
            algo = AlgorithmConfig(
                total_resources=n_tot,
                noise=config.noise,
                depth_limit=config.depth_limit,
                epsilon_exponent=config.epsilon_exponent,
                epsilon_scale=config.epsilon_scale,
                loss_kind=config.loss_kind,
                estimator=config.estimator,
                grid_size=config.grid_size,
                seed=seed,
            )
            trace = run(algo, theta)
            validate_trace(trace)
            estimate = trace.final_estimate
            resources = trace.resources_spent
            max_depth = trace.max_depth_used
            loss = trace.final_expected_loss
        elif strategy == "classical":
            res = run_classical(
                n_tot, theta, config.noise, np.random.default_rng(seed),
                config.grid_size, config.loss_kind,
            )
            estimate, resources, max_depth, loss = (
                res.estimate, res.resources_spent, res.max_depth, res.posterior_expected_loss,
            )
        elif strategy == "nonadaptive-doubling":
            res, _ = run_nonadaptive_doubling(
                n_tot, theta, config.noise, config.shots_per_depth,
                np.random.default_rng(seed), config.grid_size, config.loss_kind,
            )
            estimate, resources, max_depth, loss = (
                res.estimate, res.resources_spent, res.max_depth, res.posterior_expected_loss,
            )
        elif strategy == "qpea":
            qpea = QpeaConfig(_qpea_register_size(n_tot), config.noise)
            res = run_qpea(theta, qpea, np.random.default_rng(seed))
            estimate, resources, max_depth, loss = (
                res.estimate, res.resources_spent, res.max_depth, res.posterior_expected_loss,
            )
        else:
            raise ValueError(f"unknown strategy {strategy!r}")
    except Exception as exc:
        return SweepCellResult(
            strategy, n_tot, theta_index, theta, rep,
            math.nan, math.nan, math.nan, 0, 0,
            error=f"{type(exc).__name__}: {exc}",
        )
    abs_error = float(wrapped_distance(estimate, theta))
    return SweepCellResult(
        strategy=strategy,
        n_tot=n_tot,
        theta_index=theta_index,
        theta_true=theta,
        rep=rep,
        abs_error=abs_error,
        sq_error=abs_error * abs_error,
        expected_loss=math.nan if loss is None else float(loss),
        resources_spent=int(resources),
        max_depth=int(max_depth),
    )


def _cell_args(config: SweepConfig):
    for strategy in sorted(config.strategies):
        for n_tot in config.resource_ladder:
            for theta_index in range(config.theta_count):
                for rep in range(config.repetitions):
                    yield strategy, n_tot, theta_index, rep


def resolve_workers(explicit: int | None = None) -> int:
    """Worker count: explicit argument, else the env var, else all cores."""
    if explicit is None:
        raw = os.environ.get(WORKER_ENV_VAR)
        if raw is None:
            explicit = 0
        else:
            try:
                explicit = int(raw)
            except ValueError as exc:
                raise ValueError(f"{WORKER_ENV_VAR} must be an integer, got {raw!r}") from exc
    if explicit < 0:
        raise ValueError(f"worker count must be >= 0, got {explicit}")
    if explicit == 0:
        explicit = os.cpu_count() or 1
    return explicit


def _run_cell_star(packed):
    return run_cell(*packed)


def iter_sweep(config: SweepConfig, workers: int | None = None) -> Iterator[SweepCellResult]:
    """Yield cell results in canonical order (strategy, budget, phase, rep)."""
    workers = resolve_workers(workers)
    cells = list(_cell_args(config))
    if workers <= 1 or len(cells) <= 1:
        for cell in cells:
            yield run_cell(config, *cell)
        return
    packed = [(config, *cell) for cell in cells]
    chunk = max(1, len(packed) // (8 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        yield from pool.map(_run_cell_star, packed, chunksize=chunk)


def run_sweep(config: SweepConfig, workers: int | None = None) -> list[SweepCellResult]:
    """Run every cell of the sweep; failed cells are recorded, not raised."""
    return list(iter_sweep(config, workers))


def aggregate(results: Iterable[SweepCellResult]) -> list[AggregateRow]:
    """Group results by (strategy, budget) and summarise their errors."""
    results = list(results)
    if not results:
        raise EmptyGroupError("no cells to aggregate")
    groups: dict[tuple[str, int], dict[int, list[SweepCellResult]]] = {}
    for cell in results:
        by_theta = groups.setdefault((cell.strategy, cell.n_tot), {})
        by_theta.setdefault(cell.theta_index, []).append(cell)

    rows = []
    for (strategy, n_tot), by_theta in sorted(groups.items()):
        mae_by_theta = []
        mse_by_theta = []
        count = 0
        for cells in by_theta.values():
            abs_errors = [c.abs_error for c in cells if math.isfinite(c.abs_error)]
            if not abs_errors:
                continue
            count += len(abs_errors)
            mae_by_theta.append(float(np.mean(abs_errors)))
            mse_by_theta.append(float(np.mean([e * e for e in abs_errors])))
        if count == 0:
            rows.append(AggregateRow(strategy, n_tot, *([math.nan] * 5), 0))
            continue
        rows.append(
            AggregateRow(
                strategy=strategy,
                n_tot=n_tot,
                mae_mean=float(np.mean(mae_by_theta)),
                mae_median=float(np.median(mae_by_theta)),
                mae_min=float(np.min(mae_by_theta)),
                mae_max=float(np.max(mae_by_theta)),
                mse_mean=float(np.mean(mse_by_theta)),
                count=count,
            )
        )
    return rows


def fit_loglog_slope(points: Sequence[tuple[float, float]]) -> tuple[float, float, float]:
    """Least-squares slope, intercept, and residual RMS in log-log space."""
    if any((not math.isfinite(n)) or (not math.isfinite(e)) or n <= 0 or e <= 0 for n, e in points):
        raise DegenerateInputError(f"log-log fit needs positive finite points, got {points}")
    xs = np.log([n for n, _ in points])
    ys = np.log([e for _, e in points])
    if len(set(xs.tolist())) < 3:
        raise DegenerateInputError("log-log fit needs at least 3 distinct budgets")
    slope, intercept = np.polyfit(xs, ys, 1)
    residuals = ys - (slope * xs + intercept)
    return float(slope), float(intercept), float(np.sqrt(np.mean(residuals**2)))


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def write_results_csv(results: Iterable[SweepCellResult], path: str) -> None:
    ordered = sorted(results, key=lambda c: (c.strategy, c.n_tot, c.theta_index, c.rep))
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(RESULTS_HEADER.split(","))
        for c in ordered:
            writer.writerow(
                [
                    c.strategy,
                    c.n_tot,
                    c.theta_index,
                    _fmt(c.theta_true),
                    c.rep,
                    _fmt(c.abs_error),
                    _fmt(c.sq_error),
                    _fmt(c.expected_loss),
                    c.resources_spent,
                    c.max_depth,
                    _fmt(c.runtime_ms),
                ]
            )


def read_results_csv(path: str) -> list[SweepCellResult]:
    out = []
    with open(path, newline="") as handle:
        for row in csv.DictReader(handle):
            out.append(
                SweepCellResult(
                    strategy=row["strategy"],
                    n_tot=int(row["n_tot"]),
                    theta_index=int(row["theta_index"]),
                    theta_true=float(row["theta_true"]),
                    rep=int(row["rep"]),
                    abs_error=float(row["abs_error"]),
                    sq_error=float(row["sq_error"]),
                    expected_loss=float(row["expected_loss"]),
                    resources_spent=int(row["resources_spent"]),
                    max_depth=int(row["max_depth"]),
                    runtime_ms=float(row["runtime_ms"]),
                )
            )
    return out


def write_aggregate_csv(rows: Iterable[AggregateRow], path: str) -> None:
    ordered = sorted(rows, key=lambda r: (r.strategy, r.n_tot))
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(AGGREGATE_HEADER.split(","))
        for r in ordered:
            writer.writerow(
                [
                    r.strategy,
                    r.n_tot,
                    _fmt(r.mae_mean),
                    _fmt(r.mae_median),
                    _fmt(r.mae_min),
                    _fmt(r.mae_max),
                    _fmt(r.mse_mean),
                    r.count,
                ]
            )


def read_aggregate_csv(path: str) -> list[AggregateRow]:
    out = []
    with open(path, newline="") as handle:
        for row in csv.DictReader(handle):
            out.append(
                AggregateRow(
                    strategy=row["strategy"],
                    n_tot=int(row["n_tot"]),
                    mae_mean=float(row["mae_mean"]),
                    mae_median=float(row["mae_median"]),
                    mae_min=float(row["mae_min"]),
                    mae_max=float(row["mae_max"]),
                    mse_mean=float(row["mse_mean"]),
                    count=int(row["count"]),
                )
            )
    return out


def manifest_payload(config: SweepConfig, version: str) -> dict:
    return {
        "artifact": "qpe-lab",
        "version": version,
        "sweep": {
            "strategies": list(config.strategies),
            "resource_ladder": list(config.resource_ladder),
            "theta_count": config.theta_count,
            "repetitions": config.repetitions,
            "noise": {"alpha": config.noise.alpha, "beta": config.noise.beta},
            "depth_limit": config.depth_limit,
            "epsilon_exponent": config.epsilon_exponent,
            "epsilon_scale": config.epsilon_scale,
            "loss_kind": config.loss_kind.value,
            "estimator": config.estimator,
            "grid_size": config.grid_size,
            "shots_per_depth": config.shots_per_depth,
            "master_seed": config.master_seed,
        },
    }


def write_manifest(config: SweepConfig, path: str, version: str) -> None:
    with open(path, "w") as handle:
        json.dump(manifest_payload(config, version), handle, indent=2, sort_keys=True)
        handle.write("\n")
