"""Scripted synthetic trajectories with exact ground-truth labels.

A behavior script is two independent primitive lists, lateral and
longitudinal, each primitive naming one refined action with a duration and
an optional explicit channel target (band midpoints are derived from the
generating thresholds when omitted).  Channels are synthesized as piecewise
constant targets plus bounded zero-mean noise; ground truth at every
hierarchy level is built directly from the script, mirroring the pipeline's
merge and minimum-duration semantics on exact segment values.

A separate chatter mode injects sub-second excursions into an adjacent
band strictly inside a primitive, producing label blips with identical
flanks that the pipeline's smoother must remove.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import labels as L
from .labels import ActionSegment, SdlLabel
from .partitioning import DOMAIN_THRESHOLDS, ThresholdSet
from .search import LabeledCorpus
from .trajectory import Corpus, Trajectory

MIN_PRIMITIVE_DURATION_S = 1.0
_EPS = 1e-9


class ScriptError(ValueError):
    """The script is structurally invalid."""


class AmbiguousScriptError(ValueError):
    """A primitive's channel target sits too close to a separation threshold."""


@dataclass(frozen=True)
class LateralPrimitive:
    """One lateral behavior: Straight or an intensity-refined turn."""

    action: str
    duration_s: float
    yaw_rate: float | None = None  # signed; left turns positive


@dataclass(frozen=True)
class LongitudinalPrimitive:
    """One longitudinal behavior: Stopped or a maneuver with a speed profile."""

    action: str
    duration_s: float
    accel: float | None = None
    speed: float | None = None


_LAT_SCRIPT_ACTIONS = (L.STRAIGHT,) + tuple(
    L.turn_action(i, m) for m in (L.LEFT_TURN, L.RIGHT_TURN) for i in L.TURN_INTENSITIES
)
_LONG_SCRIPT_ACTIONS = L.LONGITUDINAL_LABELS[L.ACTION]


@dataclass(frozen=True)
class BehaviorScript:
    """Two primitive streams of equal total duration plus noise settings."""

    lateral: tuple[LateralPrimitive, ...]
    longitudinal: tuple[LongitudinalPrimitive, ...]
    noise_omega: float = 0.0
    noise_a: float = 0.0
    noise_v: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "lateral", tuple(self.lateral))
        object.__setattr__(self, "longitudinal", tuple(self.longitudinal))
        if not self.lateral or not self.longitudinal:
            raise ScriptError("script needs at least one primitive per stream")
        for prim in self.lateral:
            if prim.action not in _LAT_SCRIPT_ACTIONS:
                raise ScriptError(f"unknown lateral script action: {prim.action!r}")
        for prim in self.longitudinal:
            if prim.action not in _LONG_SCRIPT_ACTIONS:
                raise ScriptError(f"unknown longitudinal script action: {prim.action!r}")
        for prim in self.lateral + self.longitudinal:
            if prim.duration_s < MIN_PRIMITIVE_DURATION_S - _EPS:
                raise ScriptError(
                    f"primitive {prim.action} lasts {prim.duration_s}s; behaviors must "
                    f"be at least {MIN_PRIMITIVE_DURATION_S}s"
                )
        if min(self.noise_omega, self.noise_a, self.noise_v) < 0:
            raise ScriptError("noise amplitudes must be non-negative")
        lat_total = sum(p.duration_s for p in self.lateral)
        long_total = sum(p.duration_s for p in self.longitudinal)
        if abs(lat_total - long_total) > 1e-6:
            raise ScriptError(f"stream durations differ: lateral {lat_total}s, longitudinal {long_total}s")
        self._check_stopped_overlap()

    def _check_stopped_overlap(self) -> None:
        # A stopped vehicle cannot be turning: lateral must be Straight over
        # every Stopped span.
        t = 0.0
        stopped_spans = []
        for prim in self.longitudinal:
            if prim.action == L.STOPPED:
                stopped_spans.append((t, t + prim.duration_s))
            t += prim.duration_s
        if not stopped_spans:
            return
        t = 0.0
        for prim in self.lateral:
            span = (t, t + prim.duration_s)
            t = span[1]
            if prim.action == L.STRAIGHT:
                continue
            for lo, hi in stopped_spans:
                if min(span[1], hi) - max(span[0], lo) > 1e-6:
                    raise ScriptError(
                        f"lateral {prim.action} overlaps a Stopped span at t={max(span[0], lo):.2f}s"
                    )

    @property
    def duration_s(self) -> float:
        return sum(p.duration_s for p in self.lateral)


def _lateral_parts(action: str) -> tuple[str | None, str]:
    if action == L.STRAIGHT:
        return None, L.STRAIGHT
    for intensity in L.TURN_INTENSITIES:
        for base in (L.LEFT_TURN, L.RIGHT_TURN):
            if action == L.turn_action(intensity, base):
                return intensity, base
    raise ScriptError(f"unknown lateral action {action!r}")


def _longitudinal_parts(action: str) -> tuple[str, str | None]:
    if action == L.STOPPED:
        return L.STOPPED, None
    for maneuver in (L.ACCELERATE, L.DECELERATE, L.MAINTAIN_SPEED):
        for profile in L.SPEED_PROFILES:
            if action == L.speed_action(maneuver, profile):
                return maneuver, profile
    raise ScriptError(f"unknown longitudinal action {action!r}")


def _band_target(lo: float | None, hi: float | None, halfwidth: float) -> float:
    if lo is not None and hi is not None:
        return 0.5 * (lo + hi)
    if lo is not None:
        return lo + halfwidth
    return hi - halfwidth


def _band_margin(value: float, lo: float | None, hi: float | None) -> float:
    margins = []
    if lo is not None:
        margins.append(value - lo)
    if hi is not None:
        margins.append(hi - value)
    return min(margins)


def _intensity_band(intensity: str | None, th: ThresholdSet) -> tuple[float | None, float | None, float]:
    ref = 0.5 * (th.omega_med - th.omega_grad)
    return {
        None: (0.0, th.omega_str, ref),
        "Gradual": (th.omega_str, th.omega_grad, ref),
        "Medium": (th.omega_grad, th.omega_med, ref),
        "Aggressive": (th.omega_med, None, ref),
    }[intensity]


def _accel_band(maneuver: str, th: ThresholdSet) -> tuple[float | None, float | None, float]:
    ref = 0.5 * (th.a_acc - th.a_dec)
    return {
        L.DECELERATE: (None, th.a_dec, ref),
        L.MAINTAIN_SPEED: (th.a_dec, th.a_acc, ref),
        L.ACCELERATE: (th.a_acc, None, ref),
    }[maneuver]


def _speed_band(profile: str | None, th: ThresholdSet) -> tuple[float | None, float | None, float]:
    ref = 0.5 * (th.v_med - th.v_slow)
    return {
        None: (0.0, th.v_stop, 0.5 * th.v_stop),  # Stopped
        "Slow": (th.v_stop, th.v_slow, ref),
        "Medium": (th.v_slow, th.v_med, ref),
        "Fast": (th.v_med, None, ref),
    }[profile]


def _check_margin(name: str, value: float, band, noise: float) -> float:
    lo, hi, _ = band
    margin = _band_margin(value, lo, hi)
    if margin <= 0:
        raise AmbiguousScriptError(f"{name}: target {value:g} is outside its intended partition")
    if margin < 2.0 * noise - _EPS:
        raise AmbiguousScriptError(
            f"{name}: target {value:g} is within 2x noise amplitude ({noise:g}) of a threshold"
        )
    return value


@dataclass(frozen=True)
class _LatPiece:
    start: int
    stop: int
    action: str
    base: str
    omega: float  # signed target


@dataclass(frozen=True)
class _LongPiece:
    start: int
    stop: int
    action: str
    maneuver: str
    accel: float
    speed: float


def _frame_boundaries(durations: Sequence[float], rate: float) -> list[int]:
    bounds = [0]
    total = 0.0
    for d in durations:
        total += d
        bounds.append(int(round(total * rate)))
    return bounds


def _resolve_lateral(script: BehaviorScript, th: ThresholdSet, rate: float) -> list[_LatPiece]:
    bounds = _frame_boundaries([p.duration_s for p in script.lateral], rate)
    pieces = []
    for prim, start, stop in zip(script.lateral, bounds, bounds[1:]):
        intensity, base = _lateral_parts(prim.action)
        band = _intensity_band(intensity, th)
        if prim.yaw_rate is None:
            magnitude = _band_target(*band)
            signed = magnitude if base != L.RIGHT_TURN else -magnitude
        else:
            signed = float(prim.yaw_rate)
            if base == L.LEFT_TURN and signed <= 0:
                raise ScriptError(f"{prim.action}: yaw_rate must be positive for left turns")
            if base == L.RIGHT_TURN and signed >= 0:
                raise ScriptError(f"{prim.action}: yaw_rate must be negative for right turns")
        _check_margin(prim.action, abs(signed), band, script.noise_omega)
        pieces.append(_LatPiece(start, stop, prim.action, base, signed))
    return pieces


def _resolve_longitudinal(script: BehaviorScript, th: ThresholdSet, rate: float) -> list[_LongPiece]:
    bounds = _frame_boundaries([p.duration_s for p in script.longitudinal], rate)
    pieces = []
    for prim, start, stop in zip(script.longitudinal, bounds, bounds[1:]):
        maneuver, profile = _longitudinal_parts(prim.action)
        speed_band = _speed_band(profile, th)
        speed = float(prim.speed) if prim.speed is not None else _band_target(*speed_band)
        _check_margin(f"{prim.action} speed", speed, speed_band, script.noise_v)
        if maneuver == L.STOPPED:
            # The acceleration channel still needs a value; it must read as
            # MaintainSpeed at the trace level.
            accel_band = _accel_band(L.MAINTAIN_SPEED, th)
        else:
            accel_band = _accel_band(maneuver, th)
        accel = float(prim.accel) if prim.accel is not None else _band_target(*accel_band)
        _check_margin(f"{prim.action} accel", accel, accel_band, script.noise_a)
        pieces.append(_LongPiece(start, stop, prim.action, maneuver, accel, speed))
    return pieces


@dataclass(frozen=True)
class GroundTruth:
    """Script-derived SDL labels at each hierarchy level."""

    trace: SdlLabel
    trend: SdlLabel
    maneuver: SdlLabel
    action: SdlLabel

    def at(self, level: str) -> SdlLabel:
        return getattr(self, level)


def _coalesce_frames(segs: Iterable[tuple[int, int, str]]) -> list[tuple[int, int, str]]:
    out: list[tuple[int, int, str]] = []
    for start, stop, label in segs:
        if out and out[-1][2] == label and out[-1][1] == start:
            out[-1] = (out[-1][0], stop, label)
        else:
            out.append((start, stop, label))
    return out


def _merge_segments(
    segments: list[tuple[int, int, str]], rate: float, max_gap_s: float
) -> list[tuple[int, int, str]]:
    """Segment-level mirror of the pipeline's merge rule (greedy left to right)."""
    turn_idx = [k for k, (_, _, label) in enumerate(segments) if label in (L.LEFT_TURN, L.RIGHT_TURN)]
    spans = []
    i = 0
    while i < len(turn_idx) - 1:
        k1, k2 = turn_idx[i], turn_idx[i + 1]
        first, second = segments[k1], segments[k2]
        if first[2] != second[2] and (second[0] - first[1]) / rate <= max_gap_s + _EPS:
            direction = L.LEFT_MERGE if first[2] == L.LEFT_TURN else L.RIGHT_MERGE
            spans.append((k1, k2, direction))
            i += 2
        else:
            i += 1
    if not spans:
        return list(segments)
    out: list[tuple[int, int, str]] = []
    consumed_until = -1
    span_by_start = {k1: (k2, direction) for k1, k2, direction in spans}
    for k, seg in enumerate(segments):
        if k <= consumed_until:
            continue
        if k in span_by_start:
            k2, direction = span_by_start[k]
            out.append((seg[0], segments[k2][1], direction))
            consumed_until = k2
        else:
            out.append(seg)
    return _coalesce_frames(out)


def _classify_index(value: float, cuts: tuple[float, float]) -> int:
    return int(np.searchsorted(np.asarray(cuts), value, side="left"))


def _refine_truth(
    maneuver_segs: list[tuple[int, int, str]],
    pieces: Sequence,
    value_of,
    cuts: tuple[float, float],
    names,
    skip,
    name_fn,
    rate: float,
    min_duration_s: float,
) -> list[tuple[int, int, str]]:
    """Segment-level mirror of stage-4 refinement with the short-fragment collapse."""
    out: list[tuple[int, int, str]] = []
    for start, stop, label in maneuver_segs:
        if skip(label):
            out.append((start, stop, label))
            continue
        subs: list[tuple[int, int, int]] = []
        for piece in pieces:
            lo, hi = max(start, piece.start), min(stop, piece.stop)
            if hi <= lo:
                continue
            idx = _classify_index(value_of(piece), cuts)
            if subs and subs[-1][2] == idx and subs[-1][1] == lo:
                subs[-1] = (subs[-1][0], hi, idx)
            else:
                subs.append((lo, hi, idx))
        too_short = any((hi - lo) / rate < min_duration_s - _EPS for lo, hi, _ in subs)
        if too_short:
            total = sum(hi - lo for lo, hi, _ in subs)
            mean = sum(value_of(p) * (min(stop, p.stop) - max(start, p.start))
                       for p in pieces if min(stop, p.stop) > max(start, p.start)) / total
            out.append((start, stop, name_fn(names[_classify_index(mean, cuts)], label)))
        else:
            for lo, hi, idx in subs:
                out.append((lo, hi, name_fn(names[idx], label)))
    return _coalesce_frames(out)


def _segments_to_sdl(
    scenario_id, vehicle_id, level: str,
    lat: list[tuple[int, int, str]], lon: list[tuple[int, int, str]], rate: float,
) -> SdlLabel:
    return SdlLabel(
        scenario_id, vehicle_id, level,
        [ActionSegment(label, s / rate, e / rate) for s, e, label in lat],
        [ActionSegment(label, s / rate, e / rate) for s, e, label in lon],
    )


def build_ground_truth(
    script: BehaviorScript,
    thresholds: ThresholdSet,
    sample_rate_hz: float = 10.0,
    scenario_id: str = "synth",
    vehicle_id: str = "0",
    min_action_duration_s: float = 1.0,
    merge_max_gap_s: float = 4.0,
) -> GroundTruth:
    """Ground-truth labels at all levels without synthesizing any frames."""
    th = thresholds
    rate = sample_rate_hz
    lat_pieces = _resolve_lateral(script, th, rate)
    long_pieces = _resolve_longitudinal(script, th, rate)
    for piece in list(lat_pieces) + list(long_pieces):
        if (piece.stop - piece.start) / rate < MIN_PRIMITIVE_DURATION_S - _EPS:
            raise ScriptError(
                f"primitive {piece.action} shrinks below {MIN_PRIMITIVE_DURATION_S}s after frame alignment"
            )

    lat_trace = _coalesce_frames(
        (p.start, p.stop, L.project_label(p.action, "lateral", L.ACTION, L.TRACE)) for p in lat_pieces
    )
    long_trace = _coalesce_frames(
        (p.start, p.stop, L.project_label(p.action, "longitudinal", L.ACTION, L.TRACE)) for p in long_pieces
    )
    long_trend = _coalesce_frames(
        (p.start, p.stop, L.project_label(p.action, "longitudinal", L.ACTION, L.TREND)) for p in long_pieces
    )
    lat_trend = lat_trace  # turns during stops are rejected at script validation
    lat_maneuver = _merge_segments(lat_trend, rate, merge_max_gap_s)
    lat_action = _refine_truth(
        lat_maneuver,
        lat_pieces,
        value_of=lambda p: abs(p.omega),
        cuts=(th.omega_grad, th.omega_med),
        names=L.TURN_INTENSITIES,
        skip=lambda label: label == L.STRAIGHT,
        name_fn=lambda intensity, label: L.turn_action(intensity, label),
        rate=rate,
        min_duration_s=min_action_duration_s,
    )
    long_action = _refine_truth(
        long_trend,
        long_pieces,
        value_of=lambda p: p.speed,
        cuts=(th.v_slow, th.v_med),
        names=L.SPEED_PROFILES,
        skip=lambda label: label == L.STOPPED,
        name_fn=lambda profile, label: L.speed_action(label, profile),
        rate=rate,
        min_duration_s=min_action_duration_s,
    )
    return GroundTruth(
        trace=_segments_to_sdl(scenario_id, vehicle_id, L.TRACE, lat_trace, long_trace, rate),
        trend=_segments_to_sdl(scenario_id, vehicle_id, L.TREND, lat_trend, long_trend, rate),
        maneuver=_segments_to_sdl(scenario_id, vehicle_id, L.MANEUVER, lat_maneuver, long_trend, rate),
        action=_segments_to_sdl(scenario_id, vehicle_id, L.ACTION, lat_action, long_action, rate),
    )


def _inject_chatter(
    rng: np.random.Generator,
    values: np.ndarray,
    pieces: Sequence,
    blip_value_fn,
    n_blips: int,
    rate: float,
) -> int:
    """Overwrite short windows strictly inside primitives with an adjacent-band value.

    Each window keeps at least one smoother-threshold worth of unmodified
    frames on both sides so the flanking runs stay too long to be smoothed
    themselves.
    """
    max_len = max(1, int(math.ceil(rate)) - 1)
    flank = int(math.ceil(rate))  # one second of frames
    eligible = [p for p in pieces if (p.stop - p.start) >= 2 * flank + 1]
    injected = 0
    occupied = np.zeros(values.size, dtype=bool)
    attempts = 0
    while injected < n_blips and attempts < 200 * max(1, n_blips):
        attempts += 1
        if not eligible:
            break
        piece = eligible[rng.integers(len(eligible))]
        length = int(rng.integers(1, min(max_len, piece.stop - piece.start - 2 * flank) + 1))
        lo_min, lo_max = piece.start + flank, piece.stop - flank - length
        if lo_max < lo_min:
            continue
        lo = int(rng.integers(lo_min, lo_max + 1))
        if occupied[max(0, lo - flank) : lo + length + flank].any():
            continue
        values[lo : lo + length] = blip_value_fn(piece)
        occupied[lo : lo + length] = True
        injected += 1
    return injected


def generate(
    script: BehaviorScript,
    thresholds: ThresholdSet = DOMAIN_THRESHOLDS,
    sample_rate_hz: float = 10.0,
    scenario_id: str = "synth",
    vehicle_id: str = "0",
    chatter_blips: int = 0,
    min_action_duration_s: float = 1.0,
    merge_max_gap_s: float = 4.0,
) -> tuple[Trajectory, GroundTruth]:
    """Synthesize one trajectory and its ground truth.

    Channel values step between primitive targets at frame-aligned
    boundaries; zero-mean uniform noise bounded by the script's amplitudes is
    added per frame.  With ``chatter_blips > 0``, that many sub-second
    excursions into an adjacent band are injected strictly inside primitives
    (ground truth is unchanged; the pipeline's smoother is expected to remove
    them).
    """
    th = thresholds
    rate = sample_rate_hz
    truth = build_ground_truth(
        script, th, rate, scenario_id, vehicle_id, min_action_duration_s, merge_max_gap_s
    )
    lat_pieces = _resolve_lateral(script, th, rate)
    long_pieces = _resolve_longitudinal(script, th, rate)
    n = lat_pieces[-1].stop
    if long_pieces[-1].stop != n:
        raise ScriptError("stream frame totals diverged")  # guarded by duration validation

    omega = np.empty(n)
    accel = np.empty(n)
    speed = np.empty(n)
    for p in lat_pieces:
        omega[p.start : p.stop] = p.omega
    for p in long_pieces:
        accel[p.start : p.stop] = p.accel
        speed[p.start : p.stop] = p.speed

    rng = np.random.default_rng(script.seed)
    if script.noise_omega:
        omega += rng.uniform(-script.noise_omega, script.noise_omega, n)
    if script.noise_a:
        accel += rng.uniform(-script.noise_a, script.noise_a, n)
    if script.noise_v:
        speed += rng.uniform(-script.noise_v, script.noise_v, n)

    if chatter_blips:
        stopped_spans = [(p.start, p.stop) for p in long_pieces if p.maneuver == L.STOPPED]

        def outside_stops(piece) -> bool:
            return all(min(piece.stop, hi) <= max(piece.start, lo) for lo, hi in stopped_spans)

        def omega_blip(piece) -> float:
            # Blips into the gradual-turn band read as a brief turn.  Turn
            # pieces are left alone: faking straight-band yaw inside a turn
            # would corrupt the per-frame magnitudes that intensity
            # refinement averages over, which no smoother can undo.
            return _band_target(*_intensity_band("Gradual", th))

        def accel_blip(piece) -> float:
            band = L.ACCELERATE if piece.maneuver != L.ACCELERATE else L.MAINTAIN_SPEED
            return _band_target(*_accel_band(band, th))

        straight_pieces = [p for p in lat_pieces if p.base == L.STRAIGHT and outside_stops(p)]
        half = chatter_blips // 2
        _inject_chatter(rng, omega, straight_pieces, omega_blip, chatter_blips - half, rate)
        _inject_chatter(rng, accel, [p for p in long_pieces if p.maneuver != L.STOPPED], accel_blip, half, rate)

    speed = np.maximum(speed, 0.0)
    phi = np.concatenate(([0.0], np.cumsum(omega[:-1]) / rate))
    x = np.concatenate(([0.0], np.cumsum(speed[:-1] * np.cos(phi[:-1])) / rate))
    y = np.concatenate(([0.0], np.cumsum(speed[:-1] * np.sin(phi[:-1])) / rate))
    trajectory = Trajectory(scenario_id, vehicle_id, rate, x, y, speed, accel, phi, omega)
    return trajectory, truth


@dataclass(frozen=True)
class ScriptMix:
    """Recipe for sampling random scripts when building a corpus."""

    turn_fraction: float = 0.3
    stop_fraction: float = 0.1
    merge_fraction: float = 0.008
    n_unique: int = 0
    pool_size: int | None = None  # distinct repeated scripts; default n // 4
    noise_omega: float = 0.0
    noise_a: float = 0.0
    noise_v: float = 0.0

    def __post_init__(self):
        if self.turn_fraction + self.stop_fraction + self.merge_fraction > 1.0 + _EPS:
            raise ValueError("category fractions must sum to at most 1")


def _snap(duration: float, rate: float) -> float:
    frames = max(int(round(duration * rate)), int(math.ceil(rate * MIN_PRIMITIVE_DURATION_S - _EPS)))
    return frames / rate


def _random_durations(rng, total_s: float, k: int, rate: float) -> list[float]:
    # Stick-breaking with a floor comfortably above the minimum so frame
    # snapping cannot push any piece under it.
    floor = MIN_PRIMITIVE_DURATION_S + 2.0 / rate
    k = max(1, min(k, int(total_s / floor)))
    extra = total_s - k * floor
    weights = rng.random(k)
    raw = floor + extra * weights / weights.sum()
    durations = [_snap(d, rate) for d in raw[:-1]]
    durations.append(total_s - sum(durations))
    return durations


def _random_long_stream(rng, total_s: float, rate: float) -> list[LongitudinalPrimitive]:
    k = int(rng.integers(1, 4))
    durations = _random_durations(rng, total_s, k, rate)
    maneuvers = (L.ACCELERATE, L.DECELERATE, L.MAINTAIN_SPEED)
    prims = []
    last = None
    for d in durations:
        choices = [
            L.speed_action(m, p) for m in maneuvers for p in L.SPEED_PROFILES
            if L.speed_action(m, p) != last
        ]
        action = choices[rng.integers(len(choices))]
        last = action
        prims.append(LongitudinalPrimitive(action, d))
    return prims


def _random_script(rng, category: str, rate: float, mix: ScriptMix, extra_variety: bool = False) -> BehaviorScript:
    total = _snap(float(rng.uniform(8.0, 14.0)), rate)
    turn_actions = [L.turn_action(i, b) for b in (L.LEFT_TURN, L.RIGHT_TURN) for i in L.TURN_INTENSITIES]
    if category == "turn":
        d_turn = _snap(float(rng.uniform(1.5, 4.0)), rate)
        d_head = _snap(float(rng.uniform(1.5, 3.0)), rate)
        lateral = [
            LateralPrimitive(L.STRAIGHT, d_head),
            LateralPrimitive(turn_actions[rng.integers(len(turn_actions))], d_turn),
            LateralPrimitive(L.STRAIGHT, total - d_head - d_turn),
        ]
        longitudinal = _random_long_stream(rng, total, rate)
    elif category == "merge":
        total = _snap(float(rng.uniform(10.5, 14.0)), rate)
        direction = int(rng.integers(2))
        first = L.turn_action(L.TURN_INTENSITIES[rng.integers(3)], (L.LEFT_TURN, L.RIGHT_TURN)[direction])
        second = L.turn_action(L.TURN_INTENSITIES[rng.integers(3)], (L.RIGHT_TURN, L.LEFT_TURN)[direction])
        d1 = _snap(float(rng.uniform(1.0, 2.0)), rate)
        d2 = _snap(float(rng.uniform(1.0, 3.0)), rate)  # gap, under the 4 s limit
        d3 = _snap(float(rng.uniform(1.0, 2.0)), rate)
        d_head = _snap(float(rng.uniform(1.0, 2.0)), rate)
        lateral = [
            LateralPrimitive(L.STRAIGHT, d_head),
            LateralPrimitive(first, d1),
            LateralPrimitive(L.STRAIGHT, d2),
            LateralPrimitive(second, d3),
            LateralPrimitive(L.STRAIGHT, total - d_head - d1 - d2 - d3),
        ]
        longitudinal = _random_long_stream(rng, total, rate)
    elif category == "stop":
        d_stop = _snap(float(rng.uniform(2.0, 4.0)), rate)
        d_in = _snap(float(rng.uniform(2.0, 3.0)), rate)
        profile = L.SPEED_PROFILES[rng.integers(2)]
        longitudinal = [
            LongitudinalPrimitive(L.speed_action(L.DECELERATE, profile), d_in),
            LongitudinalPrimitive(L.STOPPED, d_stop),
            LongitudinalPrimitive(L.speed_action(L.ACCELERATE, profile), total - d_in - d_stop),
        ]
        lateral = [LateralPrimitive(L.STRAIGHT, total)]
    else:  # cruise / speed changes
        lateral = [LateralPrimitive(L.STRAIGHT, total)]
        longitudinal = _random_long_stream(rng, total, rate)
        if extra_variety:
            k = int(rng.integers(2, 5))
            longitudinal = []
            for d in _random_durations(rng, total, k, rate):
                m = (L.ACCELERATE, L.DECELERATE, L.MAINTAIN_SPEED)[rng.integers(3)]
                longitudinal.append(LongitudinalPrimitive(L.speed_action(m, L.SPEED_PROFILES[rng.integers(3)]), d))
    return BehaviorScript(
        lateral=tuple(lateral),
        longitudinal=tuple(longitudinal),
        noise_omega=mix.noise_omega,
        noise_a=mix.noise_a,
        noise_v=mix.noise_v,
        seed=int(rng.integers(2**31)),
    )


def _sample_category(rng, mix: ScriptMix) -> str:
    u = float(rng.random())
    if u < mix.merge_fraction:
        return "merge"
    if u < mix.merge_fraction + mix.stop_fraction:
        return "stop"
    if u < mix.merge_fraction + mix.stop_fraction + mix.turn_fraction:
        return "turn"
    return "cruise"


def generate_corpus(
    n: int,
    mix: "ScriptMix | Sequence[tuple[BehaviorScript, float]]" = ScriptMix(),
    thresholds: ThresholdSet = DOMAIN_THRESHOLDS,
    sample_rate_hz: float = 10.0,
    seed: int = 0,
    chatter_blips: int = 0,
) -> tuple[Corpus, dict[tuple[str, str], GroundTruth]]:
    """Deterministically sample ``n`` scripted trajectories plus ground truth.

    With a :class:`ScriptMix`, non-unique scripts come from a small pool so
    each appears at least twice, and ``mix.n_unique`` extra scripts are
    rejection-sampled until their action-level signatures occur nowhere else
    in the corpus.  Alternatively pass explicit ``(script, weight)`` pairs to
    sample from fixed scripts.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    if not isinstance(mix, ScriptMix):
        scripts = [script for script, _ in mix]
        weights = np.asarray([w for _, w in mix], dtype=float)
        if np.any(weights < 0) or weights.sum() <= 0:
            raise ValueError("script weights must be non-negative and not all zero")
        picks = rng.choice(len(scripts), size=n, p=weights / weights.sum())
        assignments = [scripts[i] for i in picks]
        return _render_assignments(assignments, rng, thresholds, sample_rate_hz, seed, chatter_blips)

    if mix.n_unique > n:
        raise ValueError("n_unique cannot exceed n")
    n_dup = n - mix.n_unique
    pool_size = mix.pool_size if mix.pool_size is not None else max(1, n // 4)
    pool_size = max(1, min(pool_size, n_dup // 2)) if n_dup else 0

    def action_signature(script: BehaviorScript):
        return build_ground_truth(script, thresholds, sample_rate_hz).action.signature()

    pool = []
    taken = set()
    for _ in range(pool_size):
        script = _random_script(rng, _sample_category(rng, mix), sample_rate_hz, mix)
        pool.append(script)
        taken.add(action_signature(script))

    uniques = []
    attempts = 0
    while len(uniques) < mix.n_unique:
        attempts += 1
        if attempts > 1000 * max(1, mix.n_unique):
            raise RuntimeError("could not sample enough unique scripts")
        candidate = _random_script(rng, _sample_category(rng, mix), sample_rate_hz, mix, extra_variety=True)
        sig = action_signature(candidate)
        if sig not in taken:
            taken.add(sig)
            uniques.append(candidate)

    assignments = [pool[i % pool_size] for i in range(n_dup)] + uniques
    return _render_assignments(assignments, rng, thresholds, sample_rate_hz, seed, chatter_blips)


def _render_assignments(
    assignments, rng, thresholds, sample_rate_hz, seed, chatter_blips
) -> tuple[Corpus, dict[tuple[str, str], GroundTruth]]:
    trajectories = []
    truths: dict[tuple[str, str], GroundTruth] = {}
    for i, script in enumerate(assignments):
        sid, vid = f"s{i // 4:05d}", f"v{i % 4}"
        traj, truth = generate(
            replace(script, seed=int(rng.integers(2**31))),
            thresholds,
            sample_rate_hz,
            scenario_id=sid,
            vehicle_id=vid,
            chatter_blips=chatter_blips,
        )
        trajectories.append(traj)
        truths[(sid, vid)] = truth
    corpus = Corpus(trajectories, {"source": "synth", "sample_rate_hz": sample_rate_hz, "seed": seed})
    return corpus, truths


def truth_corpus(truths: Mapping[tuple[str, str], GroundTruth], level: str = L.ACTION) -> LabeledCorpus:
    """Collect per-vehicle ground truth into a searchable labeled corpus."""
    return LabeledCorpus(truth.at(level) for truth in truths.values())
