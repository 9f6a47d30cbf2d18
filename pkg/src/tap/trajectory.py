"""Scenario/vehicle trajectory types and interchange-file ingestion.

Trajectories are uniform-rate time series of kinematic state
``(x, y, v, a, phi, omega)`` per frame.  The interchange format is JSONL
(one vehicle-frame per line) with a CSV alternative carrying the same
columns; both round-trip exactly through :func:`export` / :func:`ingest`.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Sequence

import numpy as np

DEFAULT_SAMPLE_RATE_HZ = 10.0

CHANNEL_COLUMNS = ("x", "y", "v", "a", "phi", "omega")
REQUIRED_COLUMNS = ("scenario_id", "vehicle_id") + CHANNEL_COLUMNS
# Relative deviation of frame spacing tolerated before sampling counts as
# non-uniform.
SAMPLING_TOLERANCE = 0.01


class IngestError(ValueError):
    """Base for ingestion validation failures."""


class MissingColumnError(IngestError):
    def __init__(self, column: str):
        super().__init__(f"missing required column: {column!r}")
        self.column = column


class NonFiniteValueError(IngestError):
    def __init__(self, row: int, column: str, value):
        super().__init__(f"non-finite value in column {column!r} at data row {row}: {value!r}")
        self.row = row
        self.column = column


class NonUniformSamplingError(IngestError):
    def __init__(self, key, detail: str):
        super().__init__(f"non-uniform sampling for {key}: {detail}")
        self.key = key


class EmptyFileError(IngestError):
    def __init__(self, path):
        super().__init__(f"no data rows in {path}")


class TooShortError(ValueError):
    """Input sequence has too few samples for the requested derivation."""


@dataclass(frozen=True)
class VehicleState:
    """Kinematic state of one vehicle at one frame.

    Positions are meters in the map frame, ``v`` is speed (m/s, non-negative)
    along heading ``phi`` (radians), ``a`` is acceleration (m/s^2) and
    ``omega`` is yaw rate (rad/s, positive counterclockwise).
    """

    x: float
    y: float
    v: float
    a: float
    phi: float
    omega: float


class Trajectory:
    """Immutable uniform-rate state sequence for one vehicle in one scenario."""

    __slots__ = ("scenario_id", "vehicle_id", "sample_rate_hz", "x", "y", "v", "a", "phi", "omega")

    def __init__(
        self,
        scenario_id: str,
        vehicle_id: str,
        sample_rate_hz: float,
        x,
        y,
        v,
        a,
        phi,
        omega,
    ):
        self.scenario_id = str(scenario_id)
        self.vehicle_id = str(vehicle_id)
        self.sample_rate_hz = float(sample_rate_hz)
        if not self.sample_rate_hz > 0:
            raise ValueError(f"sample_rate_hz must be positive, got {sample_rate_hz}")
        arrays = {}
        for name, values in zip(("x", "y", "v", "a", "phi", "omega"), (x, y, v, a, phi, omega)):
            arr = np.ascontiguousarray(values, dtype=np.float64)
            if arr.ndim != 1 or arr.size == 0:
                raise ValueError(f"channel {name} must be a non-empty 1-d sequence")
            if not np.all(np.isfinite(arr)):
                bad = int(np.flatnonzero(~np.isfinite(arr))[0])
                raise ValueError(f"channel {name} has a non-finite value at frame {bad}")
            arr.setflags(write=False)
            arrays[name] = arr
        lengths = {arr.size for arr in arrays.values()}
        if len(lengths) != 1:
            raise ValueError("all channels must have the same length")
        if np.any(arrays["v"] < 0):
            bad = int(np.flatnonzero(arrays["v"] < 0)[0])
            raise ValueError(f"speed must be non-negative; v[{bad}] = {arrays['v'][bad]}")
        for name, arr in arrays.items():
            object.__setattr__(self, name, arr)

    def __setattr__(self, name, value):
        if hasattr(self, "omega"):  # fully constructed
            raise AttributeError("Trajectory is immutable")
        object.__setattr__(self, name, value)

    def __len__(self) -> int:
        return int(self.x.size)

    @property
    def key(self) -> tuple[str, str]:
        return (self.scenario_id, self.vehicle_id)

    @property
    def duration_s(self) -> float:
        return len(self) / self.sample_rate_hz

    def state(self, i: int) -> VehicleState:
        return VehicleState(
            float(self.x[i]), float(self.y[i]), float(self.v[i]),
            float(self.a[i]), float(self.phi[i]), float(self.omega[i]),
        )

    @property
    def states(self) -> list[VehicleState]:
        return [self.state(i) for i in range(len(self))]

    @classmethod
    def from_states(cls, scenario_id, vehicle_id, sample_rate_hz, states: Sequence[VehicleState]):
        cols = [[getattr(s, name) for s in states] for name in ("x", "y", "v", "a", "phi", "omega")]
        return cls(scenario_id, vehicle_id, sample_rate_hz, *cols)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Trajectory):
            return NotImplemented
        return (
            self.key == other.key
            and self.sample_rate_hz == other.sample_rate_hz
            and all(np.array_equal(getattr(self, c), getattr(other, c)) for c in CHANNEL_COLUMNS)
        )

    def __repr__(self) -> str:
        return f"Trajectory({self.scenario_id}/{self.vehicle_id}, {len(self)} frames @ {self.sample_rate_hz:g} Hz)"


class Corpus:
    """Immutable collection of trajectories with unique (scenario, vehicle) keys."""

    __slots__ = ("trajectories", "metadata", "_by_key")

    def __init__(self, trajectories: Sequence[Trajectory], metadata: dict | None = None):
        trajs = tuple(trajectories)
        by_key = {}
        for traj in trajs:
            if traj.key in by_key:
                raise ValueError(f"duplicate (scenario_id, vehicle_id): {traj.key}")
            by_key[traj.key] = traj
        object.__setattr__(self, "trajectories", trajs)
        object.__setattr__(self, "metadata", dict(metadata or {}))
        object.__setattr__(self, "_by_key", by_key)

    def __setattr__(self, name, value):
        raise AttributeError("Corpus is immutable")

    def __len__(self) -> int:
        return len(self.trajectories)

    def __iter__(self) -> Iterator[Trajectory]:
        return iter(self.trajectories)

    def get(self, scenario_id: str, vehicle_id: str) -> Trajectory:
        return self._by_key[(str(scenario_id), str(vehicle_id))]

    def keys(self) -> list[tuple[str, str]]:
        return list(self._by_key)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Corpus):
            return NotImplemented
        return self.trajectories == other.trajectories

    def __repr__(self) -> str:
        return f"Corpus({len(self)} trajectories)"


def _parse_jsonl_rows(path) -> tuple[list[dict], bool]:
    rows = []
    has_t = True
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise IngestError(f"{path}: invalid JSON on line {len(rows) + 1}: {exc.msg}") from exc
    if rows:
        has_t = all("t" in r for r in rows)
    return rows, has_t


def _parse_csv_rows(path) -> tuple[list[dict], bool]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return [], False
        for col in REQUIRED_COLUMNS:
            if col not in reader.fieldnames:
                raise MissingColumnError(col)
        has_t = "t" in reader.fieldnames
        return list(reader), has_t


def ingest(path, format: str = "jsonl", default_sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ) -> Corpus:
    """Load an interchange file into a validated Corpus.

    Rows are grouped by (scenario_id, vehicle_id) and sorted by ``t``.  The
    sample rate is inferred from the median frame spacing and must be uniform
    within 1% relative tolerance; without a ``t`` column the rows are taken in
    file order at ``default_sample_rate_hz``.
    """
    if format == "jsonl":
        rows, has_t = _parse_jsonl_rows(path)
    elif format == "csv":
        rows, has_t = _parse_csv_rows(path)
    else:
        raise ValueError(f"unknown format: {format!r} (expected 'jsonl' or 'csv')")
    if not rows:
        raise EmptyFileError(path)

    parsed = []
    for i, row in enumerate(rows):
        for col in REQUIRED_COLUMNS:
            if col not in row:
                raise MissingColumnError(col)
        values = {}
        for col in CHANNEL_COLUMNS + (("t",) if has_t else ()):
            try:
                val = float(row[col])
            except (TypeError, ValueError):
                raise NonFiniteValueError(i, col, row[col]) from None
            if not math.isfinite(val):
                raise NonFiniteValueError(i, col, row[col])
            values[col] = val
        parsed.append((str(row["scenario_id"]), str(row["vehicle_id"]), i, values))

    groups: dict[tuple[str, str], list] = {}
    for sid, vid, i, values in parsed:
        groups.setdefault((sid, vid), []).append((values.get("t", i), i, values))

    trajectories = []
    rates = []
    for key, items in groups.items():
        items.sort(key=lambda item: (item[0], item[1]))
        if has_t and len(items) > 1:
            ts = np.array([item[0] for item in items])
            dt = np.diff(ts)
            median = float(np.median(dt))
            if median <= 0:
                raise NonUniformSamplingError(key, "non-increasing timestamps")
            if np.any(np.abs(dt - median) > SAMPLING_TOLERANCE * median):
                worst = int(np.argmax(np.abs(dt - median)))
                raise NonUniformSamplingError(
                    key, f"frame spacing {dt[worst]:.6g}s vs median {median:.6g}s"
                )
            # Round to 6 decimals so regenerated timestamps infer the exact
            # same rate (round-trip stability).
            rate = round(1.0 / median, 6)
        else:
            rate = default_sample_rate_hz
        rates.append(rate)
        channels = {c: [item[2][c] for item in items] for c in CHANNEL_COLUMNS}
        trajectories.append(Trajectory(key[0], key[1], rate, **channels))

    trajectories.sort(key=lambda t: t.key)
    metadata = {"source": str(path), "sample_rate_hz": float(np.median(rates))}
    return Corpus(trajectories, metadata)


def export(corpus: Corpus, path, format: str = "jsonl") -> None:
    """Write a corpus back to the interchange format; inverse of :func:`ingest`."""
    if format == "jsonl":
        with open(path, "w", encoding="utf-8") as fh:
            for traj in corpus:
                for i in range(len(traj)):
                    record = {
                        "scenario_id": traj.scenario_id,
                        "vehicle_id": traj.vehicle_id,
                        "t": i / traj.sample_rate_hz,
                        "x": float(traj.x[i]),
                        "y": float(traj.y[i]),
                        "v": float(traj.v[i]),
                        "a": float(traj.a[i]),
                        "phi": float(traj.phi[i]),
                        "omega": float(traj.omega[i]),
                    }
                    fh.write(json.dumps(record))
                    fh.write("\n")
    elif format == "csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(("scenario_id", "vehicle_id", "t") + CHANNEL_COLUMNS)
            for traj in corpus:
                for i in range(len(traj)):
                    writer.writerow(
                        [traj.scenario_id, traj.vehicle_id, repr(i / traj.sample_rate_hz)]
                        + [repr(float(getattr(traj, c)[i])) for c in CHANNEL_COLUMNS]
                    )
    else:
        raise ValueError(f"unknown format: {format!r} (expected 'jsonl' or 'csv')")


class KinematicChannels(NamedTuple):
    v: np.ndarray
    a: np.ndarray
    phi: np.ndarray
    omega: np.ndarray


def _finite_difference(values: np.ndarray, rate: float) -> np.ndarray:
    # Central differences inside, one-sided at the endpoints.
    out = np.empty_like(values)
    out[1:-1] = (values[2:] - values[:-2]) * (rate / 2.0)
    out[0] = (values[1] - values[0]) * rate
    out[-1] = (values[-1] - values[-2]) * rate
    return out


def derive_kinematics(positions, sample_rate_hz: float) -> KinematicChannels:
    """Recover (v, a, phi, omega) from an ordered (x, y) sequence.

    Finite differences of position give the velocity vector; heading comes
    from atan2 of that vector and is unwrapped before differencing so the yaw
    rate stays continuous across the +/-pi seam.
    """
    pos = np.asarray(positions, dtype=np.float64)
    if pos.ndim != 2 or pos.shape[1] != 2:
        raise ValueError("positions must be an (N, 2) sequence")
    if pos.shape[0] < 3:
        raise TooShortError(f"need at least 3 position samples, got {pos.shape[0]}")
    vx = _finite_difference(pos[:, 0], sample_rate_hz)
    vy = _finite_difference(pos[:, 1], sample_rate_hz)
    v = np.hypot(vx, vy)
    phi = np.unwrap(np.arctan2(vy, vx))
    omega = _finite_difference(phi, sample_rate_hz)
    a = _finite_difference(v, sample_rate_hz)
    return KinematicChannels(v=v, a=a, phi=phi, omega=omega)


def trajectory_from_positions(scenario_id, vehicle_id, positions, sample_rate_hz: float) -> Trajectory:
    """Build a full Trajectory from positions only, deriving the other channels."""
    pos = np.asarray(positions, dtype=np.float64)
    derived = derive_kinematics(pos, sample_rate_hz)
    return Trajectory(
        scenario_id, vehicle_id, sample_rate_hz,
        pos[:, 0], pos[:, 1], derived.v, derived.a, derived.phi, derived.omega,
    )
