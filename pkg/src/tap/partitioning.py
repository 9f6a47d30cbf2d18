"""Pooled 1-second channel distributions, partition rules, and the threshold objective.

Every trajectory contributes the mean of each kinematic channel over
consecutive non-overlapping 1-second windows to the pooled distributions
(yaw rate, acceleration, velocity).  A threshold set carves each
distribution into named partitions; the optimization objective is the sum of
squared differences between the partitions' mean pairwise distances.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .trajectory import Corpus

CHANNELS = ("omega", "a", "v")

PARTITION_NAMES = {
    "omega": ("Straight", "GradualTurn", "MediumTurn", "AggressiveTurn"),
    "a": ("Decelerate", "MaintainSpeed", "Accelerate"),
    "v": ("Stopped", "Slow", "Medium", "Fast"),
}

# Channels whose thresholds are magnitudes and must stay positive.
_POSITIVE_CHANNELS = ("omega", "v")

_THRESHOLD_FIELDS = {
    "omega": ("omega_str", "omega_grad", "omega_med"),
    "a": ("a_dec", "a_acc"),
    "v": ("v_stop", "v_slow", "v_med"),
}

_CONFIG_KEYS = {
    "omega.str": "omega_str",
    "omega.grad": "omega_grad",
    "omega.med": "omega_med",
    "a.dec": "a_dec",
    "a.acc": "a_acc",
    "v.stop": "v_stop",
    "v.slow": "v_slow",
    "v.med": "v_med",
}


class TrajectoryTooShortError(ValueError):
    def __init__(self, key, frames: int, needed: int):
        super().__init__(f"trajectory {key} has {frames} frames; needs >= {needed} for one 1 s window")
        self.key = key


@dataclass(frozen=True)
class ThresholdSet:
    """The eight separation thresholds, strictly ordered within each channel.

    Yaw-rate thresholds are rad/s on |omega|, acceleration thresholds m/s^2
    (dec below acc, typically straddling zero), velocity thresholds m/s.
    """

    omega_str: float
    omega_grad: float
    omega_med: float
    a_dec: float
    a_acc: float
    v_stop: float
    v_slow: float
    v_med: float

    def __post_init__(self):
        for channel, fields in _THRESHOLD_FIELDS.items():
            values = [getattr(self, f) for f in fields]
            if any(not math.isfinite(v) for v in values):
                raise ValueError(f"non-finite threshold in channel {channel}: {values}")
            if any(b <= a for a, b in zip(values, values[1:])):
                raise ValueError(f"thresholds for channel {channel} must be strictly increasing: {values}")
            if channel in _POSITIVE_CHANNELS and values[0] <= 0:
                raise ValueError(f"thresholds for channel {channel} must be positive: {values}")

    def channel_values(self, channel: str) -> tuple[float, ...]:
        return tuple(float(getattr(self, f)) for f in _THRESHOLD_FIELDS[channel])

    def with_channel(self, channel: str, values: Sequence[float]) -> "ThresholdSet":
        fields = _THRESHOLD_FIELDS[channel]
        if len(values) != len(fields):
            raise ValueError(f"channel {channel} takes {len(fields)} thresholds, got {len(values)}")
        return replace(self, **{f: float(v) for f, v in zip(fields, values)})

    def to_config_text(self) -> str:
        lines = [f"{key} = {getattr(self, field)!r}" for key, field in _CONFIG_KEYS.items()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_config_text(cls, text: str) -> "ThresholdSet":
        values = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            m = re.fullmatch(r"([\w.]+)\s*=\s*(\S+)", line)
            if m is None:
                raise ValueError(f"line {lineno}: expected 'key = value', got {line!r}")
            key, raw = m.group(1), m.group(2)
            if key not in _CONFIG_KEYS:
                raise ValueError(f"line {lineno}: unknown threshold key {key!r}")
            values[_CONFIG_KEYS[key]] = float(raw)
        missing = set(_CONFIG_KEYS.values()) - set(values)
        if missing:
            raise ValueError(f"missing threshold keys: {sorted(missing)}")
        return cls(**values)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_config_text())

    @classmethod
    def load(cls, path) -> "ThresholdSet":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_config_text(fh.read())


# Conservative defaults for passenger-vehicle dynamics; used as the
# domain-knowledge optimizer seed and as a fallback labeling config.
DOMAIN_THRESHOLDS = ThresholdSet(
    omega_str=0.03, omega_grad=0.15, omega_med=0.5,
    a_dec=-0.5, a_acc=0.5,
    v_stop=0.5, v_slow=5.0, v_med=12.0,
)


@dataclass(frozen=True)
class PartitionId:
    channel: str
    name: str

    def __post_init__(self):
        if self.channel not in PARTITION_NAMES:
            raise ValueError(f"unknown channel: {self.channel!r}")
        if self.name not in PARTITION_NAMES[self.channel]:
            raise ValueError(f"{self.name!r} is not a partition of channel {self.channel}")


@dataclass(frozen=True)
class KinematicDistributions:
    """Pooled 1-second window means per channel across a corpus.

    ``d_omega`` keeps the signed window means; partition membership is
    decided on magnitudes.
    """

    d_omega: np.ndarray
    d_a: np.ndarray
    d_v: np.ndarray

    def __post_init__(self):
        for name in ("d_omega", "d_a", "d_v"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def channel(self, channel: str) -> np.ndarray:
        return {"omega": self.d_omega, "a": self.d_a, "v": self.d_v}[channel]

    def classification_values(self, channel: str) -> np.ndarray:
        """Values partition membership is decided on (|omega| for yaw rate)."""
        values = self.channel(channel)
        return np.abs(values) if channel == "omega" else values


def window_edges(n_frames: int, sample_rate_hz: float) -> np.ndarray:
    """Frame indices bounding consecutive 1 s windows; partial tail discarded."""
    n_windows = int(n_frames // sample_rate_hz)
    return np.floor(np.arange(n_windows + 1) * sample_rate_hz).astype(int)


def build_distributions(corpus: Corpus) -> KinematicDistributions:
    """Pool per-window channel means over every trajectory in the corpus."""
    pools = {"omega": [], "a": [], "v": []}
    for traj in corpus:
        edges = window_edges(len(traj), traj.sample_rate_hz)
        if len(edges) < 2:
            raise TrajectoryTooShortError(traj.key, len(traj), int(math.ceil(traj.sample_rate_hz)))
        for channel in CHANNELS:
            values = getattr(traj, channel)
            sums = np.add.reduceat(values, edges[:-1])
            counts = np.diff(edges)
            pools[channel].append(sums / counts)
    return KinematicDistributions(
        d_omega=np.concatenate(pools["omega"]),
        d_a=np.concatenate(pools["a"]),
        d_v=np.concatenate(pools["v"]),
    )


def partition_indices(values, channel: str, thresholds: ThresholdSet) -> np.ndarray:
    """Partition index per value; boundaries belong to the lower partition."""
    cuts = np.asarray(thresholds.channel_values(channel))
    vals = np.abs(np.asarray(values, dtype=np.float64)) if channel == "omega" else np.asarray(values, dtype=np.float64)
    # side="left": a value equal to a cut sorts below it.
    return np.searchsorted(cuts, vals, side="left")


def classify(value: float, channel: str, thresholds: ThresholdSet) -> PartitionId:
    """Partition of a single channel sample under the rule table."""
    idx = int(partition_indices(np.array([value]), channel, thresholds)[0])
    return PartitionId(channel, PARTITION_NAMES[channel][idx])


def mu_part(samples) -> float:
    """Mean pairwise absolute distance within one partition.

    Sorting turns the O(n^2) pair sum into a prefix-sum identity:
    sum_{i<j} (x_j - x_i) = sum_k (2k - n + 1) * x_(k).  Partitions with
    fewer than two samples have no pairs and contribute 0.
    """
    arr = np.asarray(samples, dtype=np.float64).ravel()
    n = arr.size
    if n <= 1:
        return 0.0
    x = np.sort(arr)
    total = float(np.dot(2.0 * np.arange(n) - (n - 1), x))
    return total / (n * (n - 1) / 2)


def partition_mus(distributions: KinematicDistributions, channel: str, thresholds: ThresholdSet) -> np.ndarray:
    """Per-partition mu for one channel, in rule-table order."""
    values = distributions.classification_values(channel)
    idx = partition_indices(values, channel, thresholds)
    n_parts = len(PARTITION_NAMES[channel])
    return np.array([mu_part(values[idx == p]) for p in range(n_parts)])


def objective(distributions: KinematicDistributions, channel: str, thresholds: ThresholdSet) -> float:
    """Sum of squared mu differences over unordered distinct partition pairs.

    Zero exactly when every partition of the channel is equally
    self-similar; piecewise constant in the thresholds (it changes only when
    a sample switches partition).
    """
    mus = partition_mus(distributions, channel, thresholds)
    total = 0.0
    for i in range(len(mus)):
        for j in range(i + 1, len(mus)):
            diff = mus[i] - mus[j]
            total += diff * diff
    return float(total)
