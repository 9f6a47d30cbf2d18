"""Behavior label taxonomy, frame-label streams, and segment-level SDL labels.

A vehicle's behavior is described by two independent label streams, lateral
and longitudinal, available at four levels of refinement::

    trace < trend < maneuver < action

Frame-level streams (one label per trajectory frame) are produced by the
labeling pipeline; this module turns them into ordered, timed action
segments, projects labels between levels, and (de)serializes the canonical
one-line JSON record used as the interchange format for labeled corpora.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

# Hierarchy levels, coarsest first.
TRACE = "trace"
TREND = "trend"
MANEUVER = "maneuver"
ACTION = "action"
LEVELS = (TRACE, TREND, MANEUVER, ACTION)
_LEVEL_RANK = {name: i for i, name in enumerate(LEVELS)}

# Lateral labels.
STRAIGHT = "Straight"
LEFT_TURN = "LeftTurn"
RIGHT_TURN = "RightTurn"
LEFT_MERGE = "LeftMerge"
RIGHT_MERGE = "RightMerge"

# Longitudinal labels.
ACCELERATE = "Accelerate"
DECELERATE = "Decelerate"
MAINTAIN_SPEED = "MaintainSpeed"
STOPPED = "Stopped"

TURN_INTENSITIES = ("Gradual", "Medium", "Aggressive")
SPEED_PROFILES = ("Slow", "Medium", "Fast")

# Longitudinal action names are built as <prefix><profile>Speed, e.g.
# "AccelerateSlowSpeed"; MaintainSpeed contributes the bare "Maintain" prefix.
_LONG_PREFIX = {ACCELERATE: "Accelerate", DECELERATE: "Decelerate", MAINTAIN_SPEED: "Maintain"}


def speed_action(maneuver_label: str, profile: str) -> str:
    """Action-level longitudinal name for a maneuver refined by a speed profile."""
    return f"{_LONG_PREFIX[maneuver_label]}{profile}Speed"


def turn_action(intensity: str, maneuver_label: str) -> str:
    """Action-level lateral name for a turn or merge refined by intensity."""
    return f"{intensity}{maneuver_label}"


_LAT_TRACE = (STRAIGHT, LEFT_TURN, RIGHT_TURN)
_LAT_MANEUVER = (STRAIGHT, LEFT_TURN, RIGHT_TURN, LEFT_MERGE, RIGHT_MERGE)
_LAT_ACTION = (STRAIGHT,) + tuple(
    turn_action(i, m) for m in (LEFT_TURN, RIGHT_TURN, LEFT_MERGE, RIGHT_MERGE) for i in TURN_INTENSITIES
)
_LONG_TRACE = (ACCELERATE, DECELERATE, MAINTAIN_SPEED)
_LONG_TREND = (ACCELERATE, DECELERATE, MAINTAIN_SPEED, STOPPED)
_LONG_ACTION = (STOPPED,) + tuple(
    speed_action(m, p) for m in (ACCELERATE, DECELERATE, MAINTAIN_SPEED) for p in SPEED_PROFILES
)

LATERAL_LABELS = {
    TRACE: _LAT_TRACE,
    TREND: _LAT_TRACE,
    MANEUVER: _LAT_MANEUVER,
    ACTION: _LAT_ACTION,
}
LONGITUDINAL_LABELS = {
    TRACE: _LONG_TRACE,
    TREND: _LONG_TREND,
    MANEUVER: _LONG_TREND,
    ACTION: _LONG_ACTION,
}


def _one_step_down(stream_labels: dict, finer: str, mapping: dict) -> dict:
    table = {}
    for label in stream_labels[finer]:
        table[label] = mapping.get(label, label)
    return table


# Parent of each label one level down the hierarchy.  Merges collapse onto a
# turn in the direction of their initial turn; Stopped folds back into
# MaintainSpeed at the trace level.
_LAT_PARENT = {
    ACTION: _one_step_down(
        LATERAL_LABELS,
        ACTION,
        {turn_action(i, m): m for m in (LEFT_TURN, RIGHT_TURN, LEFT_MERGE, RIGHT_MERGE) for i in TURN_INTENSITIES},
    ),
    MANEUVER: _one_step_down(LATERAL_LABELS, MANEUVER, {LEFT_MERGE: LEFT_TURN, RIGHT_MERGE: RIGHT_TURN}),
    TREND: _one_step_down(LATERAL_LABELS, TREND, {}),
}
_LONG_PARENT = {
    ACTION: _one_step_down(
        LONGITUDINAL_LABELS,
        ACTION,
        {speed_action(m, p): m for m in (ACCELERATE, DECELERATE, MAINTAIN_SPEED) for p in SPEED_PROFILES},
    ),
    MANEUVER: _one_step_down(LONGITUDINAL_LABELS, MANEUVER, {}),
    TREND: _one_step_down(LONGITUDINAL_LABELS, TREND, {STOPPED: MAINTAIN_SPEED}),
}


class InvalidDirectionError(ValueError):
    """Raised when a projection would have to invent refinement."""


class ParseError(ValueError):
    """Raised when a serialized label record is malformed; carries position info."""


def level_rank(level: str) -> int:
    try:
        return _LEVEL_RANK[level]
    except KeyError:
        raise ValueError(f"unknown hierarchy level: {level!r}") from None


def project_label(label: str, stream: str, from_level: str, to_level: str) -> str:
    """Map a single label to its ancestor at a coarser level.

    ``stream`` is ``"lateral"`` or ``"longitudinal"``.
    """
    src, dst = level_rank(from_level), level_rank(to_level)
    if dst > src:
        raise InvalidDirectionError(f"cannot project {from_level} label up to {to_level}")
    tables = _LAT_PARENT if stream == "lateral" else _LONG_PARENT
    current = label
    for rank in range(src, dst, -1):
        current = tables[LEVELS[rank]][current]
    return current


@dataclass(frozen=True)
class FrameLabels:
    """Per-frame lateral and longitudinal label streams at one hierarchy level."""

    level: str
    lateral: np.ndarray
    longitudinal: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        lat = np.asarray(self.lateral, dtype="U24")
        lon = np.asarray(self.longitudinal, dtype="U24")
        object.__setattr__(self, "lateral", lat)
        object.__setattr__(self, "longitudinal", lon)
        if self.level not in LEVELS:
            raise ValueError(f"unknown hierarchy level: {self.level!r}")
        if lat.shape != lon.shape or lat.ndim != 1 or lat.size == 0:
            raise ValueError("lateral/longitudinal streams must be equal-length, non-empty 1-d")
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        bad_lat = set(np.unique(lat)) - set(LATERAL_LABELS[self.level])
        bad_lon = set(np.unique(lon)) - set(LONGITUDINAL_LABELS[self.level])
        if bad_lat or bad_lon:
            raise ValueError(f"labels not legal at level {self.level}: {sorted(bad_lat | bad_lon)}")

    def __len__(self) -> int:
        return self.lateral.size

    def project(self, target_level: str) -> "FrameLabels":
        """Frame-wise projection onto a coarser level."""
        if target_level == self.level:
            return self
        lat = _project_array(self.lateral, "lateral", self.level, target_level)
        lon = _project_array(self.longitudinal, "longitudinal", self.level, target_level)
        return FrameLabels(target_level, lat, lon, self.sample_rate_hz)


def _project_array(labels: np.ndarray, stream: str, from_level: str, to_level: str) -> np.ndarray:
    out = labels.copy()
    for value in np.unique(labels):
        out[labels == value] = project_label(str(value), stream, from_level, to_level)
    return out


def label_runs(labels: np.ndarray) -> list[tuple[int, int, str]]:
    """Maximal runs of equal labels as (start, stop, label) with stop exclusive."""
    labels = np.asarray(labels)
    if labels.size == 0:
        return []
    change = np.flatnonzero(labels[1:] != labels[:-1]) + 1
    starts = np.concatenate(([0], change))
    stops = np.concatenate((change, [labels.size]))
    return [(int(s), int(e), str(labels[s])) for s, e in zip(starts, stops)]


def _round3(x: float) -> float:
    v = round(float(x), 3)
    return 0.0 if v == 0 else v


@dataclass(frozen=True)
class ActionSegment:
    """One timed behavior segment; the interval is half-open [start_s, end_s)."""

    label: str
    start_s: float
    end_s: float

    def __post_init__(self):
        if not self.end_s > self.start_s:
            raise ValueError(f"segment must have positive duration: {self}")

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s


class SdlLabel:
    """Ordered lateral and longitudinal behavior segments for one vehicle.

    Two labels are equal when their canonical serialized records are equal;
    segment times compare at millisecond precision.
    """

    __slots__ = ("scenario_id", "vehicle_id", "level", "lateral", "longitudinal", "_key")

    def __init__(
        self,
        scenario_id: str,
        vehicle_id: str,
        level: str,
        lateral: Sequence[ActionSegment],
        longitudinal: Sequence[ActionSegment],
    ):
        self.scenario_id = str(scenario_id)
        self.vehicle_id = str(vehicle_id)
        self.level = level
        self.lateral = tuple(lateral)
        self.longitudinal = tuple(longitudinal)
        self._validate()
        self._key = self._canonical_key()

    def _validate(self) -> None:
        if self.level not in LEVELS:
            raise ValueError(f"unknown hierarchy level: {self.level!r}")
        for stream, segs, legal in (
            ("lateral", self.lateral, LATERAL_LABELS[self.level]),
            ("longitudinal", self.longitudinal, LONGITUDINAL_LABELS[self.level]),
        ):
            if not segs:
                raise ValueError(f"{stream} stream is empty")
            if abs(segs[0].start_s) > 1e-9:
                raise ValueError(f"{stream} stream must start at 0, got {segs[0].start_s}")
            for prev, cur in zip(segs, segs[1:]):
                if abs(cur.start_s - prev.end_s) > 1e-9:
                    raise ValueError(
                        f"{stream} segments must be contiguous and non-overlapping "
                        f"at t={prev.end_s:.3f}/{cur.start_s:.3f}"
                    )
                if cur.label == prev.label:
                    raise ValueError(f"{stream} has uncoalesced adjacent '{cur.label}' segments")
            for seg in segs:
                if seg.label not in legal:
                    raise ValueError(f"label {seg.label!r} not legal at level {self.level}")
        if abs(self.lateral[-1].end_s - self.longitudinal[-1].end_s) > 1e-9:
            raise ValueError("lateral and longitudinal streams must cover the same span")

    def _canonical_key(self):
        return (
            self.scenario_id,
            self.vehicle_id,
            self.level,
            tuple((s.label, _round3(s.start_s), _round3(s.end_s)) for s in self.lateral),
            tuple((s.label, _round3(s.start_s), _round3(s.end_s)) for s in self.longitudinal),
        )

    @property
    def key(self) -> tuple[str, str]:
        return (self.scenario_id, self.vehicle_id)

    @property
    def duration_s(self) -> float:
        return self.lateral[-1].end_s

    def lateral_labels(self) -> tuple[str, ...]:
        return tuple(s.label for s in self.lateral)

    def longitudinal_labels(self) -> tuple[str, ...]:
        return tuple(s.label for s in self.longitudinal)

    def signature(self) -> tuple[str, ...]:
        """Duration-free action sequence used for exact-match indexing."""
        return self.lateral_labels() + ("||",) + self.longitudinal_labels()

    def __eq__(self, other) -> bool:
        return isinstance(other, SdlLabel) and self._key == other._key

    def __hash__(self) -> int:
        return hash(self._key)

    def __repr__(self) -> str:
        return (
            f"SdlLabel({self.scenario_id}/{self.vehicle_id}, {self.level}, "
            f"lat={list(self.lateral_labels())}, long={list(self.longitudinal_labels())})"
        )


def _segments_from_runs(runs: Iterable[tuple[int, int, str]], rate: float) -> list[ActionSegment]:
    return [ActionSegment(label, start / rate, stop / rate) for start, stop, label in runs]


def to_sdl(frames: FrameLabels, scenario_id: str, vehicle_id: str) -> SdlLabel:
    """Collapse frame streams into coalesced, timed segments."""
    return SdlLabel(
        scenario_id,
        vehicle_id,
        frames.level,
        _segments_from_runs(label_runs(frames.lateral), frames.sample_rate_hz),
        _segments_from_runs(label_runs(frames.longitudinal), frames.sample_rate_hz),
    )


def _coalesce(segments: Sequence[ActionSegment]) -> list[ActionSegment]:
    out: list[ActionSegment] = []
    for seg in segments:
        if out and out[-1].label == seg.label:
            out[-1] = ActionSegment(seg.label, out[-1].start_s, seg.end_s)
        else:
            out.append(seg)
    return out


def project(label: SdlLabel, target_level: str) -> SdlLabel:
    """Rename every segment to its ancestor at ``target_level`` and re-coalesce."""
    if target_level == label.level:
        return label
    lat = _coalesce(
        [
            ActionSegment(project_label(s.label, "lateral", label.level, target_level), s.start_s, s.end_s)
            for s in label.lateral
        ]
    )
    lon = _coalesce(
        [
            ActionSegment(project_label(s.label, "longitudinal", label.level, target_level), s.start_s, s.end_s)
            for s in label.longitudinal
        ]
    )
    return SdlLabel(label.scenario_id, label.vehicle_id, target_level, lat, lon)


def _segment_json(seg: ActionSegment) -> str:
    return (
        f'{{"end_s": {_round3(seg.end_s):.3f}, "label": "{seg.label}", '
        f'"start_s": {_round3(seg.start_s):.3f}}}'
    )


def serialize(label: SdlLabel) -> str:
    """Canonical one-line record: sorted keys, fixed 3-decimal times.

    Equal labels serialize to byte-equal strings and vice versa.
    """
    lat = ", ".join(_segment_json(s) for s in label.lateral)
    lon = ", ".join(_segment_json(s) for s in label.longitudinal)
    return (
        f'{{"lateral": [{lat}], "level": "{label.level}", "longitudinal": [{lon}], '
        f'"scenario_id": {json.dumps(label.scenario_id)}, '
        f'"vehicle_id": {json.dumps(label.vehicle_id)}}}'
    )


def deserialize(text: str) -> SdlLabel:
    """Parse one serialized record; raises ParseError with position context."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at position {exc.pos}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ParseError("record must be a JSON object")
    try:
        streams = {}
        for stream in ("lateral", "longitudinal"):
            segs = []
            for i, item in enumerate(raw[stream]):
                try:
                    segs.append(
                        ActionSegment(str(item["label"]), float(item["start_s"]), float(item["end_s"]))
                    )
                except (KeyError, TypeError, ValueError) as exc:
                    raise ParseError(f"bad segment {stream}[{i}]: {exc}") from exc
            streams[stream] = segs
        label = SdlLabel(
            str(raw["scenario_id"]),
            str(raw["vehicle_id"]),
            str(raw["level"]),
            streams["lateral"],
            streams["longitudinal"],
        )
    except KeyError as exc:
        raise ParseError(f"missing field {exc.args[0]!r}") from exc
    except ValueError as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(str(exc)) from exc
    return label


def write_labels_jsonl(labels: Iterable[SdlLabel], path) -> int:
    """Write records one per line; returns the record count."""
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for label in labels:
            fh.write(serialize(label))
            fh.write("\n")
            n += 1
    return n


def read_labels_jsonl(path) -> list[SdlLabel]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(deserialize(line))
            except ParseError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from exc
    return out
