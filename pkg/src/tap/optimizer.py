"""Threshold learning by finite-difference descent on the partition objective.

The objective is piecewise constant in the thresholds (it changes only when
a sample crosses a partition boundary), so its gradient is approximated by
central differences over a probe distance wide enough to straddle
plateaus, by default half the channel's standard deviation.  Each channel is
optimized independently from several seeds; every iterate is projected back
onto the strictly-ordered threshold region.

An optional population mode (Gaussian sampling with elite refitting) is
available behind ``OptimizerConfig.method = "cem"``; the default is the
plain finite-difference descent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .partitioning import (
    _POSITIVE_CHANNELS,
    _THRESHOLD_FIELDS,
    CHANNELS,
    DOMAIN_THRESHOLDS,
    KinematicDistributions,
    ThresholdSet,
    objective,
)


class EmptyDistributionError(ValueError):
    def __init__(self, channel: str):
        super().__init__(f"channel {channel!r} has no pooled samples to optimize on")
        self.channel = channel


class InvalidSeedError(ValueError):
    """A seed guess does not satisfy the threshold ordering invariant."""


_QUANTILE_TRIPLES = ((25, 50, 75), (10, 50, 90), (15, 40, 70), (35, 60, 85), (20, 45, 80), (30, 55, 95), (5, 45, 75))
_QUANTILE_PAIRS = ((20, 80), (10, 90), (30, 70), (25, 75), (15, 85), (35, 65), (5, 95))


@dataclass(frozen=True)
class OptimizerConfig:
    """Knobs for one optimization run; units follow the channel being optimized.

    ``eta`` and ``epsilon`` default to data-derived values: epsilon is half
    the channel standard deviation (so the probe points usually cross a
    partition boundary even on a plateau) and eta is calibrated once per
    seed so the first step moves the largest coordinate by
    ``step_scale * std``.
    """

    eta: float | None = None
    epsilon: float | None = None
    step_scale: float = 0.25
    max_epochs: int = 500
    convergence_tol: float = 1e-8
    patience: int = 3
    seeds: tuple | None = None
    n_seeds: int = 5
    projection_margin: float = 1e-4
    backtrack: bool = True
    refine_levels: int = 4
    method: str = "fd"
    cem_population: int = 32
    cem_elite_frac: float = 0.25
    cem_seed: int = 0

    def __post_init__(self):
        if self.epsilon is not None and self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.eta is not None and self.eta <= 0:
            raise ValueError("eta must be positive")
        if self.projection_margin <= 0:
            raise ValueError("projection_margin must be positive")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.convergence_tol < 0:
            raise ValueError("convergence_tol must be non-negative")
        if self.refine_levels < 1:
            raise ValueError("refine_levels must be >= 1")
        if self.method not in ("fd", "cem"):
            raise ValueError(f"unknown method {self.method!r} (expected 'fd' or 'cem')")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    values: tuple[float, ...]
    j: float


@dataclass(frozen=True)
class SeedResult:
    seed: ThresholdSet
    history: tuple[EpochRecord, ...]
    final_thresholds: ThresholdSet
    j_final: float
    converged: bool
    epochs_used: int


@dataclass(frozen=True)
class OptimizationTrace:
    """Per-seed descent histories for one channel plus the winning result."""

    channel: str
    seed_results: tuple[SeedResult, ...]
    epsilon: float

    @property
    def best(self) -> SeedResult:
        i = min(range(len(self.seed_results)), key=lambda k: (self.seed_results[k].j_final, k))
        return self.seed_results[i]

    @property
    def thresholds(self) -> ThresholdSet:
        return self.best.final_thresholds

    @property
    def j_star(self) -> float:
        return float(self.best.j_final)


def channel_spread(distributions: KinematicDistributions, channel: str) -> float:
    values = distributions.classification_values(channel)
    return float(np.std(values)) if values.size else 0.0


def resolve_epsilon(distributions: KinematicDistributions, channel: str, config: OptimizerConfig) -> float:
    if config.epsilon is not None:
        return float(config.epsilon)
    spread = channel_spread(distributions, channel)
    return max(0.5 * spread, config.projection_margin)


def project_channel_values(values: Sequence[float], channel: str, margin: float) -> tuple[float, ...]:
    """Restore strict ordering: sort, then push coordinates apart by ``margin``.

    Magnitude channels additionally get floored at ``margin`` so the lowest
    threshold stays positive.
    """
    th = np.sort(np.asarray(values, dtype=np.float64))
    if channel in _POSITIVE_CHANNELS and th[0] < margin:
        th[0] = margin
    for i in range(1, th.size):
        if th[i] < th[i - 1] + margin:
            th[i] = th[i - 1] + margin
    return tuple(float(v) for v in th)


def fd_probes(thresholds: ThresholdSet, channel: str, epsilon: float) -> list[tuple[ThresholdSet, ThresholdSet, float]]:
    """Per-coordinate probe pairs (theta+, theta-, step actually used).

    The step is clamped to half the gap to each neighboring threshold (and
    to zero for magnitude channels) so every probe is itself a valid,
    strictly-ordered threshold set.
    """
    th = np.asarray(thresholds.channel_values(channel))
    lower = 0.0 if channel in _POSITIVE_CHANNELS else -np.inf
    probes = []
    for i in range(th.size):
        gap_lo = th[i] - (th[i - 1] if i > 0 else lower)
        gap_hi = (th[i + 1] - th[i]) if i < th.size - 1 else np.inf
        step = float(min(epsilon, 0.5 * gap_lo, 0.5 * gap_hi))
        plus = th.copy()
        plus[i] += step
        minus = th.copy()
        minus[i] -= step
        probes.append(
            (thresholds.with_channel(channel, plus), thresholds.with_channel(channel, minus), step)
        )
    return probes


def fd_gradient(
    distributions: KinematicDistributions,
    channel: str,
    thresholds: ThresholdSet,
    epsilon: float,
) -> np.ndarray:
    """Coordinate-wise central-difference estimate of dJ/dtheta."""
    grad = np.empty(len(_THRESHOLD_FIELDS[channel]))
    for i, (plus, minus, step) in enumerate(fd_probes(thresholds, channel, epsilon)):
        j_plus = objective(distributions, channel, plus)
        j_minus = objective(distributions, channel, minus)
        grad[i] = (j_plus - j_minus) / (2.0 * step)
    return grad


def _as_seed(seed, channel: str, margin: float) -> ThresholdSet:
    if isinstance(seed, ThresholdSet):
        return seed
    try:
        values = project_channel_values(tuple(float(v) for v in seed), channel, margin)
        return DOMAIN_THRESHOLDS.with_channel(channel, values)
    except (TypeError, ValueError) as exc:
        raise InvalidSeedError(f"bad seed for channel {channel}: {seed!r} ({exc})") from exc


def seed_from_distribution(
    distributions: KinematicDistributions,
    channel: str,
    n_seeds: int = 5,
    projection_margin: float = 1e-4,
    base: ThresholdSet = DOMAIN_THRESHOLDS,
) -> list[ThresholdSet]:
    """Initial guesses: the fixed domain seed plus quantile placements.

    Quantiles are taken over the channel's classification values (magnitudes
    for yaw rate), then projected apart if the data is degenerate.
    """
    values = distributions.classification_values(channel)
    if values.size == 0:
        raise EmptyDistributionError(channel)
    arity = len(_THRESHOLD_FIELDS[channel])
    quantile_sets = _QUANTILE_PAIRS if arity == 2 else _QUANTILE_TRIPLES
    seeds = [base]
    for qs in quantile_sets:
        if len(seeds) >= n_seeds:
            break
        guess = np.percentile(values, qs)
        projected = project_channel_values(guess, channel, projection_margin)
        seeds.append(base.with_channel(channel, projected))
    return seeds[:n_seeds]


def _descend_phase(
    distributions: KinematicDistributions,
    channel: str,
    start: ThresholdSet,
    config: OptimizerConfig,
    epsilon: float,
    epoch_offset: int,
    budget: int,
    history: list[EpochRecord],
) -> tuple[ThresholdSet, bool]:
    """One constant-epsilon descent until a fixed point, stability, or budget."""
    spread = channel_spread(distributions, channel)
    thresholds = start
    eta = config.eta
    j_prev = None
    stable = 0
    for k in range(budget):
        j = objective(distributions, channel, thresholds)
        history.append(EpochRecord(epoch_offset + k + 1, thresholds.channel_values(channel), j))
        if j_prev is not None and abs(j - j_prev) <= config.convergence_tol:
            stable += 1
            if stable >= config.patience:
                return thresholds, True
        else:
            stable = 0
        j_prev = j
        grad = fd_gradient(distributions, channel, thresholds, epsilon)
        if not np.any(grad):
            return thresholds, True  # plateau fixed point: theta_{k+1} = theta_k
        if eta is None:
            scale = max(spread, config.projection_margin)
            eta = config.step_scale * scale / float(np.max(np.abs(grad)))
        current = np.asarray(thresholds.channel_values(channel))
        if not config.backtrack:
            projected = project_channel_values(current - eta * grad, channel, config.projection_margin)
            thresholds = thresholds.with_channel(channel, projected)
            continue
        # Halve the step until the objective stops increasing; a step that
        # cannot be made non-increasing means this probe scale is exhausted.
        accepted = False
        step = eta
        for _ in range(12):
            projected = project_channel_values(current - step * grad, channel, config.projection_margin)
            trial = thresholds.with_channel(channel, projected)
            if objective(distributions, channel, trial) <= j + 1e-15:
                thresholds = trial
                eta = step
                accepted = True
                break
            step /= 2.0
        if not accepted:
            return thresholds, True
    return thresholds, False


def _descend_fd(
    distributions: KinematicDistributions,
    channel: str,
    seed: ThresholdSet,
    config: OptimizerConfig,
    epsilon: float,
) -> SeedResult:
    """Finite-difference descent, re-run at halved probe scales for refinement.

    The epoch budget is shared across refinement levels so the recorded trace
    never exceeds ``max_epochs`` entries.
    """
    history: list[EpochRecord] = []
    thresholds = seed
    converged = False
    for level in range(config.refine_levels):
        budget = config.max_epochs - len(history)
        if budget <= 0:
            break
        thresholds, converged = _descend_phase(
            distributions,
            channel,
            thresholds,
            config,
            epsilon / (2.0**level),
            len(history),
            budget,
            history,
        )
    best = min(history, key=lambda rec: (rec.j, rec.epoch))
    return SeedResult(
        seed=seed,
        history=tuple(history),
        final_thresholds=seed.with_channel(channel, best.values),
        j_final=best.j,
        converged=converged,
        epochs_used=len(history),
    )


def _descend_cem(
    distributions: KinematicDistributions,
    channel: str,
    seed: ThresholdSet,
    seed_index: int,
    config: OptimizerConfig,
    epsilon: float,
) -> SeedResult:
    rng = np.random.default_rng(config.cem_seed * 100003 + CHANNELS.index(channel) * 7919 + seed_index)
    arity = len(_THRESHOLD_FIELDS[channel])
    mean = np.asarray(seed.channel_values(channel))
    sigma = np.full(arity, max(epsilon, 10 * config.projection_margin))
    n_elite = max(1, int(round(config.cem_population * config.cem_elite_frac)))
    history: list[EpochRecord] = []
    best_values, best_j = tuple(mean), np.inf
    j_prev = None
    stable = 0
    converged = False
    for epoch in range(1, config.max_epochs + 1):
        samples = rng.normal(mean, sigma, size=(config.cem_population, arity))
        scored = []
        for row in samples:
            values = project_channel_values(row, channel, config.projection_margin)
            scored.append((objective(distributions, channel, seed.with_channel(channel, values)), values))
        scored.sort(key=lambda item: item[0])
        elite = scored[:n_elite]
        if elite[0][0] < best_j:
            best_j, best_values = elite[0][0], elite[0][1]
        history.append(EpochRecord(epoch, best_values, best_j))
        elite_values = np.asarray([v for _, v in elite])
        mean = elite_values.mean(axis=0)
        sigma = np.maximum(elite_values.std(axis=0), config.projection_margin)
        if j_prev is not None and abs(best_j - j_prev) <= config.convergence_tol:
            stable += 1
            if stable >= config.patience:
                converged = True
                break
        else:
            stable = 0
        j_prev = best_j
    return SeedResult(
        seed=seed,
        history=tuple(history),
        final_thresholds=seed.with_channel(channel, best_values),
        j_final=float(best_j),
        converged=converged,
        epochs_used=len(history),
    )


def optimize_channel(
    distributions: KinematicDistributions,
    channel: str,
    config: OptimizerConfig = OptimizerConfig(),
) -> OptimizationTrace:
    """Minimize the partition objective for one channel from every seed."""
    values = distributions.classification_values(channel)
    if values.size == 0:
        raise EmptyDistributionError(channel)
    epsilon = resolve_epsilon(distributions, channel, config)
    if config.seeds is not None:
        seeds = [_as_seed(s, channel, config.projection_margin) for s in config.seeds]
        if not seeds:
            raise InvalidSeedError("seeds list is empty")
    else:
        seeds = seed_from_distribution(
            distributions, channel, n_seeds=config.n_seeds, projection_margin=config.projection_margin
        )
    results = []
    for k, seed in enumerate(seeds):
        if config.method == "cem":
            results.append(_descend_cem(distributions, channel, seed, k, config, epsilon))
        else:
            results.append(_descend_fd(distributions, channel, seed, config, epsilon))
    return OptimizationTrace(channel=channel, seed_results=tuple(results), epsilon=epsilon)


def optimize_all(
    distributions: KinematicDistributions,
    config: OptimizerConfig = OptimizerConfig(),
) -> dict[str, OptimizationTrace]:
    """Optimize the three channels independently; deterministic given seeds."""
    return {channel: optimize_channel(distributions, channel, config) for channel in CHANNELS}


def combined_thresholds(traces: dict[str, OptimizationTrace]) -> ThresholdSet:
    """Assemble the winning per-channel thresholds into one set."""
    thresholds = DOMAIN_THRESHOLDS
    for channel in CHANNELS:
        thresholds = thresholds.with_channel(channel, traces[channel].thresholds.channel_values(channel))
    return thresholds
