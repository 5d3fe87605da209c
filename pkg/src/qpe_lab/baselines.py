"""Reference strategies and analytic error envelopes.

Three runnable baselines bracket the adaptive loop: the textbook
phase-estimation register (noiseless only), a non-adaptive
depth-doubling schedule, and a unit-depth classical strategy.  Alongside
them sit closed-form envelopes (standard quantum limit, Heisenberg limit,
decoherence floor) and an evaluator for the Chernoff-chain loss bound that
motivates the confidence schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .angles import TWO_PI
from .model import (
    Circuit,
    MeasurementRecord,
    NoiseModel,
    minimum_achievable_variance,
    optimal_depth,
    sample_outcome,
)
from .posterior import (
    GridPosterior,
    InsufficientResourcesError,
    LossKind,
    expected_loss,
    map_estimate,
    uniform_prior,
    update,
)
from .adaptive import chernoff_shot_budget

MAX_REGISTER_SIZE = 24
MAE_OF_STD = math.sqrt(2.0 / math.pi)


class InfeasibleBoundError(ValueError):
    """Raised when the Chernoff chain cannot fit inside the budget."""


@dataclass(frozen=True)
class BaselineResult:
    """Outcome of one baseline estimation run."""

    estimate: float
    resources_spent: int
    max_depth: int
    posterior_expected_loss: float | None


@dataclass(frozen=True)
class QpeaConfig:
    """Register size for the textbook estimator; resources are 2**m - 1."""

    register_size: int
    noise: NoiseModel = NoiseModel()

    def __post_init__(self):
        if not 1 <= self.register_size <= MAX_REGISTER_SIZE:
            raise ValueError(
                f"register_size must be in [1, {MAX_REGISTER_SIZE}], got {self.register_size}"
            )
        if not self.noise.noiseless:
            raise ValueError(
                "the textbook outcome law holds only without noise; "
                f"got alpha={self.noise.alpha}, beta={self.noise.beta}"
            )

    @property
    def resources(self) -> int:
        return (1 << self.register_size) - 1


def qpea_outcome_distribution(theta: float, register_size: int) -> np.ndarray:
    """Probability of each register readout k for a true phase theta.

    Pr[k] = sin^2(M delta_k / 2) / (M^2 sin^2(delta_k / 2)) with
    M = 2**m and delta_k = theta - 2 pi k / M, extended by its limit 1
    where delta_k vanishes.
    """
    if not 1 <= register_size <= MAX_REGISTER_SIZE:
        raise ValueError(f"register_size must be in [1, {MAX_REGISTER_SIZE}]")
    m_size = 1 << register_size
    delta = theta - TWO_PI * np.arange(m_size) / m_size
    half = 0.5 * delta
    denom = np.sin(half)
    numer = np.sin(m_size * half)
    with np.errstate(divide="ignore", invalid="ignore"):
        amplitude = numer / (m_size * denom)
    probs = np.where(denom == 0.0, 1.0, amplitude * amplitude)
    return probs


def run_qpea(theta_true: float, config: QpeaConfig, rng: np.random.Generator) -> BaselineResult:
    """Draw one register readout and return its phase estimate."""
    m_size = 1 << config.register_size
    probs = qpea_outcome_distribution(theta_true, config.register_size)
    k = int(rng.choice(m_size, p=probs / probs.sum()))
    return BaselineResult(
        estimate=TWO_PI * k / m_size,
        resources_spent=config.resources,
        max_depth=1 << (config.register_size - 1),
        posterior_expected_loss=None,
    )


def _largest_power_of_two_at_most(n: int) -> int:
    return 1 << (n.bit_length() - 1)


def run_nonadaptive_doubling(
    total_resources: int,
    theta_true: float,
    noise: NoiseModel,
    shots_per_depth: int,
    rng: np.random.Generator,
    grid_size: int = 4096,
    loss_kind: LossKind = LossKind.ABSOLUTE,
) -> tuple[BaselineResult, list[MeasurementRecord]]:
    """Fixed schedule: shots_per_depth at each of (n,0) and (n,pi/2), n doubling.

    Once the next full block no longer fits, the leftover budget is spent at
    the deepest power-of-two depth it can still pay for, split between the
    same two phases.
    """
    if total_resources < 2:
        raise InsufficientResourcesError(
            f"budget {total_resources} cannot pay one shot at each probe phase"
        )
    if shots_per_depth < 1:
        raise ValueError(f"shots_per_depth must be >= 1, got {shots_per_depth}")
    posterior = uniform_prior(grid_size)
    records: list[MeasurementRecord] = []
    budget = total_resources

    def sample_block(depth: int, phase: float, shots: int):
        nonlocal budget
        circuit = Circuit(depth, phase)
        got = sample_outcome(circuit, shots, theta_true, noise, rng)
        record = MeasurementRecord(circuit, shots, got)
        update(posterior, record, noise)
        records.append(record)
        budget -= depth * shots

    depth = 1
    while budget >= 2 * depth * shots_per_depth:
        sample_block(depth, 0.0, shots_per_depth)
        sample_block(depth, np.pi / 2.0, shots_per_depth)
        depth *= 2

    deepest = min(depth, _largest_power_of_two_at_most(budget)) if budget >= 1 else 1
    while budget >= 1:
        depth = min(deepest, _largest_power_of_two_at_most(budget))
        affordable = budget // depth
        first = affordable - affordable // 2
        sample_block(depth, 0.0, first)
        if affordable - first > 0:
            sample_block(depth, np.pi / 2.0, affordable - first)

    estimate = map_estimate(posterior)
    result = BaselineResult(
        estimate=estimate,
        resources_spent=total_resources - budget,
        max_depth=max(r.circuit.depth for r in records),
        posterior_expected_loss=expected_loss(posterior, estimate, loss_kind),
    )
    return result, records


def run_classical(
    total_resources: int,
    theta_true: float,
    noise: NoiseModel,
    rng: np.random.Generator,
    grid_size: int = 4096,
    loss_kind: LossKind = LossKind.ABSOLUTE,
) -> BaselineResult:
    """Unit-depth strategy: split the budget between phases 0 and pi/2."""
    if total_resources < 2:
        raise InsufficientResourcesError(
            f"budget {total_resources} cannot pay one shot at each probe phase"
        )
    posterior = uniform_prior(grid_size)
    shots_cos = total_resources - total_resources // 2
    shots_sin = total_resources // 2
    for phase, shots in ((0.0, shots_cos), (np.pi / 2.0, shots_sin)):
        circuit = Circuit(1, phase)
        got = sample_outcome(circuit, shots, theta_true, noise, rng)
        update(posterior, MeasurementRecord(circuit, shots, got), noise)
    estimate = map_estimate(posterior)
    return BaselineResult(
        estimate=estimate,
        resources_spent=total_resources,
        max_depth=1,
        posterior_expected_loss=expected_loss(posterior, estimate, loss_kind),
    )


def limit_curves(total_resources: int, noise: NoiseModel) -> dict[str, float]:
    """Mean-absolute-error envelopes at this budget.

    Keys: 'sql' (one resource, one bit), 'hl' (coherent use of the whole
    budget), and 'noisy_floor' (decoherence-limited optimum; present only
    when beta < 1).  Each converts a variance to an MAE via sqrt(2/pi).
    """
    if total_resources < 1:
        raise ValueError(f"total_resources must be >= 1, got {total_resources}")
    n = float(total_resources)
    curves = {
        "sql": MAE_OF_STD * math.sqrt(1.0 / n),
        "hl": MAE_OF_STD * math.sqrt(1.0 / n**2),
    }
    if noise.beta < 1.0:
        curves["noisy_floor"] = MAE_OF_STD * math.sqrt(
            minimum_achievable_variance(noise, n)
        )
    return curves


@dataclass(frozen=True)
class BoundParams:
    """Inputs to the Chernoff-chain loss bound.

    The chain uses pure depth doubling n_i = 2**(i-1) for i = 1..step_count
    and the confidence profile eps_i = epsilon_scale * (n_i / n_m)**exponent.
    """

    step_count: int
    total_resources: int
    noise: NoiseModel = NoiseModel()
    epsilon_scale: float = 1.0
    exponent: float = 3.0

    def __post_init__(self):
        if not 0.0 < self.epsilon_scale <= 1.0:
            raise ValueError(f"epsilon_scale must be in (0, 1], got {self.epsilon_scale}")
        if self.exponent < 0:
            raise ValueError(f"exponent must be >= 0, got {self.exponent}")
        if self.step_count < 2:
            raise ValueError(f"step_count must be >= 2, got {self.step_count}")
        if self.total_resources < 1:
            raise ValueError(f"total_resources must be >= 1, got {self.total_resources}")


def _chernoff_chain(params: BoundParams):
    """Depths, confidence allowances, and shot counts for the bound chain.

    Shot counts for rungs 1..m-1 come from the Chernoff budget; the last
    rung absorbs whatever the resource identity leaves over.
    """
    m = params.step_count
    depths = [1 << (i - 1) for i in range(1, m + 1)]
    top = depths[-1]
    eps = [params.epsilon_scale * (d / top) ** params.exponent for d in depths]
    shots = []
    for i in range(m - 1):
        eps_prev = 2.0 if i == 0 else eps[i - 1]
        shots.append(chernoff_shot_budget(eps[i], eps_prev, depths[i], params.noise))
    spent = sum(d * s for d, s in zip(depths, shots))
    last_shots = (params.total_resources - spent) / top
    if last_shots < 0.0:
        raise InfeasibleBoundError(
            f"chain needs {spent:.1f} resources before the last rung, "
            f"budget is {params.total_resources}"
        )
    shots.append(last_shots)
    return depths, eps, shots


def appendix_loss_bound(params: BoundParams, kind: LossKind) -> float:
    """Worst-case expected loss of the gated ladder under ``params``.

    The bound has three parts: a catastrophic term from the first rung
    failing, interval-escape terms from the middle rungs, and the terminal
    posterior width.  Values are clipped at the trivial wrapped maximum
    (pi for absolute error, pi**2 for squared).
    """
    depths, eps, shots = _chernoff_chain(params)
    noise = params.noise
    top = depths[-1]
    sigma_inv_sq = (8.0 * top**2 / math.pi**2) * math.log(2.0 / eps[-2])
    sigma_inv_sq += noise.alpha**2 * noise.beta ** (2 * top) * top**2 * shots[-1]
    terminal_var = 1.0 / sigma_inv_sq

    if kind is LossKind.ABSOLUTE:
        value = 1.5 * math.pi * eps[0]
        for d, e in zip(depths[1:-1], eps[1:-1]):
            value += e * math.pi / (2.0 * d)
        value += math.sqrt(2.0 * terminal_var / math.pi)
        return min(value, math.pi)
    value = 3.75 * math.pi**2 * eps[0]
    for d, e in zip(depths[1:-1], eps[1:-1]):
        value += e * 3.0 * math.pi**2 / (4.0 * d * d)
    value += terminal_var
    return min(value, math.pi**2)


def default_step_count(
    total_resources: int,
    noise: NoiseModel,
    depth_limit: int = 1 << 20,
    epsilon_scale: float = 1.0,
    exponent: float = 3.0,
) -> int:
    """Deepest feasible chain length whose top depth respects the caps."""
    cap = optimal_depth(noise, depth_limit)
    best = 0
    m = 2
    while (1 << (m - 1)) <= cap:
        try:
            _chernoff_chain(
                BoundParams(m, total_resources, noise, epsilon_scale, exponent)
            )
        except InfeasibleBoundError:
            break
        best = m
        m += 1
    if best == 0:
        raise InfeasibleBoundError(
            f"budget {total_resources} cannot fit even a two-rung chain"
        )
    return best
