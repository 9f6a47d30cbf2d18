"""Four-stage frame labeling: kinematic channels to refined behavior labels.

Stage 1 applies the lateral (yaw rate) and longitudinal (acceleration)
automata frame by frame.  Stage 2 detects stopped intervals from velocity
and smooths short inconsistent label runs.  Stage 3 fuses opposite-direction
turn pairs into merge maneuvers.  Stage 4 refines turns by intensity and
longitudinal maneuvers by speed profile, collapsing fragments shorter than
the minimum action duration onto the run average.

Each stage is pure: identical inputs give identical outputs, and
trajectories can be processed in parallel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import labels as L
from .labels import FrameLabels, label_runs
from .partitioning import ThresholdSet
from .trajectory import Trajectory

_TIME_EPS = 1e-9


@dataclass(frozen=True)
class PipelineConfig:
    thresholds: ThresholdSet
    min_action_duration_s: float = 1.0
    merge_max_gap_s: float = 4.0
    smoother_max_blip_s: float = 1.0

    def __post_init__(self):
        if min(self.min_action_duration_s, self.merge_max_gap_s, self.smoother_max_blip_s) <= 0:
            raise ValueError("all pipeline durations must be positive")
        if self.merge_max_gap_s < self.min_action_duration_s:
            raise ValueError("merge_max_gap_s must be at least min_action_duration_s")


@dataclass(frozen=True)
class PipelineResult:
    """Frame labels at every refinement level, for inspection and testing."""

    trace: FrameLabels
    trend: FrameLabels
    maneuver: FrameLabels
    action: FrameLabels

    def at(self, level: str) -> FrameLabels:
        return getattr(self, level)

    def levels(self) -> dict[str, FrameLabels]:
        return {level: getattr(self, level) for level in L.LEVELS}


def _lateral_rule(omega, theta_str: float) -> np.ndarray:
    """Trace lateral automaton; positive yaw rate turns left, boundary is Straight."""
    omega = np.asarray(omega)
    return np.where(
        omega > theta_str, L.LEFT_TURN, np.where(omega < -theta_str, L.RIGHT_TURN, L.STRAIGHT)
    ).astype("U24")


def _longitudinal_rule(accel, theta_dec: float, theta_acc: float) -> np.ndarray:
    """Trace acceleration automaton; the closed band [dec, acc] maintains speed."""
    accel = np.asarray(accel)
    return np.where(
        accel > theta_acc, L.ACCELERATE, np.where(accel < theta_dec, L.DECELERATE, L.MAINTAIN_SPEED)
    ).astype("U24")


def stage1_trace(trajectory: Trajectory, config: PipelineConfig) -> FrameLabels:
    """Frame-wise trace labels from yaw rate and acceleration."""
    th = config.thresholds
    return FrameLabels(
        L.TRACE,
        _lateral_rule(trajectory.omega, th.omega_str),
        _longitudinal_rule(trajectory.a, th.a_dec, th.a_acc),
        trajectory.sample_rate_hz,
    )


def _is_blip(start: int, stop: int, rate: float, blip_s: float) -> bool:
    return (stop - start) / rate < blip_s - _TIME_EPS


def _smooth_stream(
    stream: np.ndarray,
    channel: np.ndarray,
    rate: float,
    blip_s: float,
    relabel,
    pinned: np.ndarray | None = None,
) -> np.ndarray:
    """Low-pass label smoother, iterated to a fixed point.

    An interior run shorter than ``blip_s`` is absorbed into its flanking
    label when both flanks agree; otherwise its frames are relabeled from the
    mean channel value over the run.  Runs containing pinned frames are never
    modified (they may still absorb neighbors as flanks).
    """
    out = np.array(stream, dtype="U24")
    while True:
        runs = label_runs(out)
        changed = False
        for k in range(1, len(runs) - 1):
            start, stop, label = runs[k]
            if not _is_blip(start, stop, rate, blip_s):
                continue
            if pinned is not None and pinned[start:stop].any():
                continue
            left_label = runs[k - 1][2]
            right_label = runs[k + 1][2]
            if left_label == right_label:
                out[start:stop] = left_label
                changed = True
                break
            replacement = relabel(float(np.mean(channel[start:stop])))
            if replacement != label:
                out[start:stop] = replacement
                changed = True
                break
        if not changed:
            return out


def stage2_trend(trajectory: Trajectory, trace: FrameLabels, config: PipelineConfig) -> FrameLabels:
    """Stopped-vehicle detection plus label smoothing.

    A vehicle below the stop threshold is Stopped and cannot be turning, so
    its lateral label is Straight.  The stopped rule runs before the
    smoother; after longitudinal smoothing the lateral Straight constraint is
    re-imposed from the surviving Stopped frames and those frames are pinned
    against lateral smoothing.
    """
    th = config.thresholds
    rate = trace.sample_rate_hz
    stopped_raw = np.asarray(trajectory.v) < th.v_stop

    longitudinal = np.array(trace.longitudinal, dtype="U24")
    longitudinal[stopped_raw] = L.STOPPED
    lateral = np.array(trace.lateral, dtype="U24")
    lateral[stopped_raw] = L.STRAIGHT

    def relabel_long(mean_value: float) -> str:
        return str(_longitudinal_rule([mean_value], th.a_dec, th.a_acc)[0])

    def relabel_lat(mean_value: float) -> str:
        return str(_lateral_rule([mean_value], th.omega_str)[0])

    longitudinal = _smooth_stream(
        longitudinal, np.asarray(trajectory.a), rate, config.smoother_max_blip_s, relabel_long
    )
    pinned = longitudinal == L.STOPPED
    lateral[pinned] = L.STRAIGHT
    lateral = _smooth_stream(
        lateral, np.asarray(trajectory.omega), rate, config.smoother_max_blip_s, relabel_lat, pinned=pinned
    )
    return FrameLabels(L.TREND, lateral, longitudinal, rate)


def _merge_label(first_turn: str) -> str:
    # A merge is named after its initial turn: a lane change that begins by
    # turning left is a LeftMerge.
    return L.LEFT_MERGE if first_turn == L.LEFT_TURN else L.RIGHT_MERGE


def stage3_maneuver(trend: FrameLabels, config: PipelineConfig) -> FrameLabels:
    """Fuse a turn and a prompt counter-turn (plus the gap between) into a merge.

    The gap is measured from the end of the first turn run to the start of
    the opposite one and may be at most ``merge_max_gap_s``.  Pairing is
    greedy left to right; a turn consumed by a merge is not considered
    again.
    """
    rate = trend.sample_rate_hz
    lateral = np.array(trend.lateral, dtype="U24")
    runs = label_runs(lateral)
    turn_runs = [k for k, (_, _, label) in enumerate(runs) if label in (L.LEFT_TURN, L.RIGHT_TURN)]
    i = 0
    while i < len(turn_runs) - 1:
        k1, k2 = turn_runs[i], turn_runs[i + 1]
        first, second = runs[k1], runs[k2]
        if first[2] != second[2]:
            gap_s = (second[0] - first[1]) / rate
            if gap_s <= config.merge_max_gap_s + _TIME_EPS:
                lateral[first[0] : second[1]] = _merge_label(first[2])
                i += 2
                continue
        i += 1
    return FrameLabels(L.MANEUVER, lateral, np.array(trend.longitudinal, dtype="U24"), rate)


def _intensity_indices(magnitudes: np.ndarray, theta_grad: float, theta_med: float) -> np.ndarray:
    return np.searchsorted(np.array([theta_grad, theta_med]), magnitudes, side="left")


def _profile_indices(speeds: np.ndarray, theta_slow: float, theta_med: float) -> np.ndarray:
    return np.searchsorted(np.array([theta_slow, theta_med]), speeds, side="left")


def _refine_runs(
    stream: np.ndarray,
    values: np.ndarray,
    rate: float,
    min_duration_s: float,
    skip,
    index_fn,
    name_fn,
) -> np.ndarray:
    """Refine each maneuver run by per-frame classification of ``values``.

    If any refined sub-run inside a maneuver run is shorter than the minimum
    action duration, the whole run gets the single label classified from its
    mean value instead.
    """
    out = np.empty(stream.shape, dtype="U24")
    for start, stop, label in label_runs(stream):
        if skip(label):
            out[start:stop] = label
            continue
        idx = index_fn(values[start:stop])
        sub_runs = label_runs(idx.astype("U2"))
        if any(_is_blip(s, e, rate, min_duration_s) for s, e, _ in sub_runs):
            mean_idx = int(index_fn(np.array([np.mean(values[start:stop])]))[0])
            out[start:stop] = name_fn(mean_idx, label)
        else:
            for s, e, _ in sub_runs:
                out[start + s : start + e] = name_fn(int(idx[s]), label)
    return out


def stage4_action(trajectory: Trajectory, maneuver: FrameLabels, config: PipelineConfig) -> FrameLabels:
    """Refine turns/merges by |yaw rate| intensity and maneuvers by speed profile."""
    th = config.thresholds
    rate = maneuver.sample_rate_hz

    lateral = _refine_runs(
        np.array(maneuver.lateral, dtype="U24"),
        np.abs(np.asarray(trajectory.omega)),
        rate,
        config.min_action_duration_s,
        skip=lambda label: label == L.STRAIGHT,
        index_fn=lambda vals: _intensity_indices(vals, th.omega_grad, th.omega_med),
        name_fn=lambda i, label: L.turn_action(L.TURN_INTENSITIES[i], label),
    )
    longitudinal = _refine_runs(
        np.array(maneuver.longitudinal, dtype="U24"),
        np.asarray(trajectory.v),
        rate,
        config.min_action_duration_s,
        skip=lambda label: label == L.STOPPED,
        index_fn=lambda vals: _profile_indices(vals, th.v_slow, th.v_med),
        name_fn=lambda i, label: L.speed_action(label, L.SPEED_PROFILES[i]),
    )
    return FrameLabels(L.ACTION, lateral, longitudinal, rate)


def run_pipeline(trajectory: Trajectory, config: PipelineConfig) -> PipelineResult:
    """Run all four stages and keep every intermediate level."""
    trace = stage1_trace(trajectory, config)
    trend = stage2_trend(trajectory, trace, config)
    maneuver = stage3_maneuver(trend, config)
    action = stage4_action(trajectory, maneuver, config)
    return PipelineResult(trace=trace, trend=trend, maneuver=maneuver, action=action)


def label_trajectory(trajectory: Trajectory, config: PipelineConfig, level: str = L.ACTION):
    """Convenience: pipeline plus segmentation into an SDL label at one level."""
    result = run_pipeline(trajectory, config)
    return L.to_sdl(result.at(level), trajectory.scenario_id, trajectory.vehicle_id)
