"""Label one synthetic trajectory and walk through the four refinement levels.

Run:  python demos/01_label_a_trajectory.py
"""

import numpy as np

from tap import (
    DOMAIN_THRESHOLDS,
    BehaviorScript,
    LateralPrimitive,
    LongitudinalPrimitive,
    PipelineConfig,
    generate,
    run_pipeline,
    to_sdl,
)

print("=" * 64)
print(" A right turn while speeding up, at 10 Hz")
print("=" * 64)

script = BehaviorScript(
    lateral=(
        LateralPrimitive("Straight", 1.0),
        LateralPrimitive("MediumRightTurn", 3.6),
        LateralPrimitive("Straight", 2.4),
    ),
    longitudinal=(
        LongitudinalPrimitive("MaintainSlowSpeed", 1.8),
        LongitudinalPrimitive("AccelerateSlowSpeed", 3.8),
        LongitudinalPrimitive("AccelerateMediumSpeed", 1.4),
    ),
    noise_omega=0.005,
    noise_a=0.1,
    noise_v=0.05,
    seed=7,
)
trajectory, truth = generate(script, DOMAIN_THRESHOLDS, scenario_id="demo", vehicle_id="car-1")

print(f"\nframes: {len(trajectory)}  duration: {trajectory.duration_s:.1f} s")
print(f"yaw rate range: [{trajectory.omega.min():+.3f}, {trajectory.omega.max():+.3f}] rad/s")
print(f"speed range:    [{trajectory.v.min():.2f}, {trajectory.v.max():.2f}] m/s")

# The pipeline needs only the thresholds; every stage output is kept.
result = run_pipeline(trajectory, PipelineConfig(thresholds=DOMAIN_THRESHOLDS))

for level in ("trace", "trend", "maneuver", "action"):
    label = to_sdl(result.at(level), "demo", "car-1")
    print(f"\n--- {level} level ---")
    print("  lateral:")
    for seg in label.lateral:
        print(f"    {seg.start_s:5.1f}-{seg.end_s:5.1f} s  {seg.label}")
    print("  longitudinal:")
    for seg in label.longitudinal:
        print(f"    {seg.start_s:5.1f}-{seg.end_s:5.1f} s  {seg.label}")

action = to_sdl(result.action, "demo", "car-1")
print("\nmatches the script's ground truth:", action == truth.at("action"))

print()
print("=" * 64)
print(" A lane change: turns in opposite directions fuse into a merge")
print("=" * 64)

lane_change = BehaviorScript(
    lateral=(
        LateralPrimitive("GradualLeftTurn", 1.5),
        LateralPrimitive("Straight", 2.0),
        LateralPrimitive("GradualRightTurn", 1.5),
        LateralPrimitive("Straight", 3.0),
    ),
    longitudinal=(LongitudinalPrimitive("MaintainMediumSpeed", 8.0),),
)
trajectory, _ = generate(lane_change, DOMAIN_THRESHOLDS, scenario_id="demo", vehicle_id="car-2")
result = run_pipeline(trajectory, PipelineConfig(thresholds=DOMAIN_THRESHOLDS))

trend = to_sdl(result.trend, "demo", "car-2")
maneuver = to_sdl(result.maneuver, "demo", "car-2")
print("\ntrend lateral:   ", [seg.label for seg in trend.lateral])
print("maneuver lateral:", [seg.label for seg in maneuver.lateral])
print("\nThe opposite turn started within the 4 s window, so the turns and")
print("the gap between them become one LeftMerge at the maneuver level.")
