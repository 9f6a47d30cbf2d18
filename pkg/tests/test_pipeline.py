import numpy as np
import pytest

from tap import labels as L
from tap.labels import ActionSegment, label_runs, to_sdl
from tap.pipeline import (
    PipelineConfig,
    run_pipeline,
    stage1_trace,
    stage2_trend,
    stage3_maneuver,
    stage4_action,
)

from .conftest import make_trajectory


@pytest.fixture
def config(thresholds):
    return PipelineConfig(thresholds=thresholds)


def seconds(n, rate=10.0):
    return int(round(n * rate))


class TestStage1:
    def test_all_quiet(self, config):
        traj = make_trajectory(n=30)
        trace = stage1_trace(traj, config)
        assert set(trace.lateral) == {"Straight"}
        assert set(trace.longitudinal) == {"MaintainSpeed"}

    def test_worked_right_turn_timing(self, config):
        # Yaw rate drops below -theta_str at t = 1.0 s and recovers at 4.6 s.
        omega = np.zeros(70)
        omega[seconds(1.0) : seconds(4.6)] = -0.2
        traj = make_trajectory(omega=omega)
        trace = stage1_trace(traj, config)
        label = to_sdl(trace, "s", "v0")
        assert label.lateral == (
            ActionSegment("Straight", 0.0, 1.0),
            ActionSegment("RightTurn", 1.0, 4.6),
            ActionSegment("Straight", 4.6, 7.0),
        )

    def test_positive_yaw_is_left(self, config):
        traj = make_trajectory(omega=np.full(20, 0.2))
        assert set(stage1_trace(traj, config).lateral) == {"LeftTurn"}

    def test_boundary_values_are_straight_and_maintain(self, config, thresholds):
        traj = make_trajectory(
            omega=np.full(10, thresholds.omega_str), a=np.full(10, thresholds.a_acc)
        )
        trace = stage1_trace(traj, config)
        assert set(trace.lateral) == {"Straight"}
        assert set(trace.longitudinal) == {"MaintainSpeed"}

    def test_accel_ramp_single_transition(self, config, thresholds):
        a = np.linspace(0.0, 1.0, 40)  # crosses theta_acc = 0.5 once
        traj = make_trajectory(a=a)
        lon = stage1_trace(traj, config).longitudinal
        runs = label_runs(lon)
        assert [r[2] for r in runs] == ["MaintainSpeed", "Accelerate"]
        first_accel = runs[1][0]
        assert a[first_accel] > thresholds.a_acc >= a[first_accel - 1]


class TestStage2:
    def test_stationary_vehicle(self, config):
        # Even with yaw-rate noise, a stopped vehicle reads Stopped/Straight.
        rng = np.random.default_rng(0)
        traj = make_trajectory(omega=rng.uniform(-1, 1, 50), v=np.zeros(50))
        trend = stage2_trend(traj, stage1_trace(traj, config), config)
        assert set(trend.longitudinal) == {"Stopped"}
        assert set(trend.lateral) == {"Straight"}

    def test_short_maintain_between_accelerate_smoothed(self, config):
        a = np.full(60, 1.0)
        a[30:35] = 0.0  # 0.5 s of MaintainSpeed inside Accelerate
        traj = make_trajectory(a=a)
        trend = stage2_trend(traj, stage1_trace(traj, config), config)
        assert set(trend.longitudinal) == {"Accelerate"}

    def test_short_turn_blip_between_straight_smoothed(self, config):
        omega = np.zeros(60)
        omega[20:23] = 0.2  # 0.3 s LeftTurn blip
        traj = make_trajectory(omega=omega)
        trend = stage2_trend(traj, stage1_trace(traj, config), config)
        assert set(trend.lateral) == {"Straight"}

    def test_differing_flanks_relabelled_from_mean(self, config):
        # 0.5 s sliver between Decelerate and Accelerate whose mean sits in
        # the maintain band keeps the MaintainSpeed label.
        a = np.concatenate([np.full(20, -1.0), np.full(5, 0.0), np.full(20, 1.0)])
        traj = make_trajectory(a=a)
        trend = stage2_trend(traj, stage1_trace(traj, config), config)
        assert [r[2] for r in label_runs(trend.longitudinal)] == [
            "Decelerate", "MaintainSpeed", "Accelerate",
        ]

    def test_one_second_run_not_smoothed(self, config):
        a = np.full(60, 1.0)
        a[20:30] = 0.0  # exactly 1.0 s: at the threshold, kept
        traj = make_trajectory(a=a)
        trend = stage2_trend(traj, stage1_trace(traj, config), config)
        assert [r[2] for r in label_runs(trend.longitudinal)] == [
            "Accelerate", "MaintainSpeed", "Accelerate",
        ]

    def test_fixed_point_no_equal_flank_blips(self, config):
        rng = np.random.default_rng(3)
        # alternating noisy accelerations produce chatter to clean up
        a = np.where(rng.random(200) < 0.5, 0.6, 0.4)
        traj = make_trajectory(a=a)
        trend = stage2_trend(traj, stage1_trace(traj, config), config)
        runs = label_runs(trend.longitudinal)
        for k in range(1, len(runs) - 1):
            start, stop, _ = runs[k]
            if (stop - start) / 10.0 < config.smoother_max_blip_s - 1e-9:
                assert runs[k - 1][2] != runs[k + 1][2]

    def test_stop_chatter_in_velocity_absorbed(self, config):
        v = np.full(60, 3.0)
        v[30:33] = 0.0  # 0.3 s dip below the stop threshold
        traj = make_trajectory(v=v)
        trend = stage2_trend(traj, stage1_trace(traj, config), config)
        assert set(trend.longitudinal) == {"MaintainSpeed"}

    def test_stopped_run_extension_pins_lateral(self, config):
        # Two stop runs separated by a short moving blip merge into one stop;
        # the lateral stream over the whole merged span must be Straight.
        v = np.concatenate([np.full(15, 0.0), np.full(4, 3.0), np.full(15, 0.0), np.full(26, 3.0)])
        omega = np.zeros(60)
        omega[15:19] = 0.3  # turning during the moving blip
        traj = make_trajectory(omega=omega, v=v)
        trend = stage2_trend(traj, stage1_trace(traj, config), config)
        stopped = trend.longitudinal == "Stopped"
        assert stopped[:34].all()
        assert np.all(trend.lateral[stopped] == "Straight")


class TestStage3:
    def _trend(self, config, omega, v=None):
        traj = make_trajectory(omega=omega, v=v)
        return traj, stage2_trend(traj, stage1_trace(traj, config), config)

    def test_opposite_turns_within_gap_merge(self, config):
        omega = np.concatenate([np.full(15, 0.2), np.zeros(20), np.full(15, -0.2), np.zeros(10)])
        traj, trend = self._trend(config, omega)
        maneuver = stage3_maneuver(trend, config)
        label = to_sdl(maneuver, "s", "v0")
        assert label.lateral[0] == ActionSegment("LeftMerge", 0.0, 5.0)

    def test_gap_beyond_limit_stays_two_turns(self, config):
        omega = np.concatenate([np.full(15, 0.2), np.zeros(50), np.full(15, -0.2)])
        traj, trend = self._trend(config, omega)
        maneuver = stage3_maneuver(trend, config)
        labels = [seg.label for seg in to_sdl(maneuver, "s", "v0").lateral]
        assert labels == ["LeftTurn", "Straight", "RightTurn"]

    def test_same_direction_never_merges(self, config):
        omega = np.concatenate([np.full(15, 0.2), np.zeros(10), np.full(15, 0.2), np.zeros(10)])
        traj, trend = self._trend(config, omega)
        maneuver = stage3_maneuver(trend, config)
        labels = [seg.label for seg in to_sdl(maneuver, "s", "v0").lateral]
        assert "LeftMerge" not in labels and "RightMerge" not in labels

    def test_merge_direction_named_after_initial_turn(self, config):
        omega = np.concatenate([np.full(15, -0.2), np.zeros(10), np.full(15, 0.2)])
        traj, trend = self._trend(config, omega)
        maneuver = stage3_maneuver(trend, config)
        assert to_sdl(maneuver, "s", "v0").lateral[0].label == "RightMerge"

    def test_longitudinal_passthrough(self, config):
        omega = np.concatenate([np.full(15, 0.2), np.zeros(10), np.full(15, -0.2)])
        a = np.linspace(-1, 1, 40)
        traj = make_trajectory(omega=omega, a=a)
        trend = stage2_trend(traj, stage1_trace(traj, config), config)
        maneuver = stage3_maneuver(trend, config)
        assert np.array_equal(maneuver.longitudinal, trend.longitudinal)


class TestStage4:
    def test_constant_medium_turn(self, config, thresholds):
        magnitude = 0.5 * (thresholds.omega_grad + thresholds.omega_med)
        omega = np.concatenate([np.zeros(15), np.full(20, magnitude), np.zeros(15)])
        traj = make_trajectory(omega=omega)
        result = run_pipeline(traj, config)
        labels = [seg.label for seg in to_sdl(result.action, "s", "v0").lateral]
        assert labels == ["Straight", "MediumLeftTurn", "Straight"]

    def test_short_sliver_collapses_to_run_average(self, config, thresholds):
        # 2.6 s of gradual turning with a 0.4 s aggressive spike: the whole
        # turn takes one label from the mean magnitude.
        omega = np.zeros(60)
        omega[20:46] = 0.1
        omega[30:34] = 0.8
        traj = make_trajectory(omega=omega)
        result = run_pipeline(traj, config)
        turn_segments = [s for s in to_sdl(result.action, "s", "v0").lateral if s.label != "Straight"]
        assert len(turn_segments) == 1
        mean_magnitude = np.abs(omega[20:46]).mean()
        expected = "GradualLeftTurn" if mean_magnitude <= thresholds.omega_grad else "MediumLeftTurn"
        assert turn_segments[0].label == expected

    def test_worked_example_longitudinal_actions(self, config):
        # MaintainSpeed then Accelerate; speed crosses into the medium band
        # at t = 5.6 s giving three refined actions.
        a = np.concatenate([np.zeros(18), np.full(52, 1.0)])
        v = np.concatenate([np.full(56, 4.0), np.full(14, 9.0)])
        traj = make_trajectory(a=a, v=v)
        result = run_pipeline(traj, config)
        label = to_sdl(result.action, "s", "v0")
        assert label.longitudinal == (
            ActionSegment("MaintainSlowSpeed", 0.0, 1.8),
            ActionSegment("AccelerateSlowSpeed", 1.8, 5.6),
            ActionSegment("AccelerateMediumSpeed", 5.6, 7.0),
        )

    def test_stopped_exempt_from_speed_profile(self, config):
        v = np.concatenate([np.zeros(20), np.full(30, 3.0)])
        traj = make_trajectory(v=v)
        result = run_pipeline(traj, config)
        labels = [seg.label for seg in to_sdl(result.action, "s", "v0").longitudinal]
        assert labels[0] == "Stopped"

    def test_merge_gets_intensity(self, config):
        omega = np.concatenate([np.full(15, 0.1), np.zeros(15), np.full(15, -0.1), np.zeros(15)])
        traj = make_trajectory(omega=omega)
        result = run_pipeline(traj, config)
        lat = [seg.label for seg in to_sdl(result.action, "s", "v0").lateral]
        assert lat[0] == "GradualLeftMerge"


class TestRunPipeline:
    def test_stationary_everything_stopped(self, config):
        traj = make_trajectory(v=np.zeros(40))
        result = run_pipeline(traj, config)
        assert set(result.action.longitudinal) == {"Stopped"}
        assert set(result.action.lateral) == {"Straight"}

    def test_deterministic(self, config):
        rng = np.random.default_rng(4)
        traj = make_trajectory(
            omega=rng.normal(0, 0.1, 300), a=rng.normal(0, 0.5, 300), v=np.abs(rng.normal(5, 2, 300))
        )
        r1 = run_pipeline(traj, config)
        r2 = run_pipeline(traj, config)
        for level in L.LEVELS:
            assert np.array_equal(r1.at(level).lateral, r2.at(level).lateral)
            assert np.array_equal(r1.at(level).longitudinal, r2.at(level).longitudinal)

    def test_level_monotonicity(self, config):
        rng = np.random.default_rng(6)
        traj = make_trajectory(
            omega=rng.normal(0, 0.15, 400),
            a=rng.normal(0, 0.6, 400),
            v=np.abs(rng.normal(4, 3, 400)),
        )
        result = run_pipeline(traj, config)
        # action -> maneuver projection reproduces the maneuver stage exactly
        projected = result.action.project(L.MANEUVER)
        assert np.array_equal(projected.lateral, result.maneuver.lateral)
        assert np.array_equal(projected.longitudinal, result.maneuver.longitudinal)
        # maneuver -> trend agrees wherever no merge was written
        projected = result.maneuver.project(L.TREND)
        not_merged = ~np.isin(result.maneuver.lateral, ("LeftMerge", "RightMerge"))
        assert np.array_equal(projected.lateral[not_merged], result.trend.lateral[not_merged])
        assert np.array_equal(projected.longitudinal, result.trend.longitudinal)

    def test_stopped_frames_straight_at_all_levels(self, config):
        rng = np.random.default_rng(8)
        v = np.abs(rng.normal(1.0, 1.5, 300))
        traj = make_trajectory(omega=rng.normal(0, 0.2, 300), v=v)
        result = run_pipeline(traj, config)
        for level in (L.TREND, L.MANEUVER, L.ACTION):
            stopped = result.at(level).longitudinal == "Stopped"
            assert np.all(result.at(level).lateral[stopped] == "Straight")

    def test_short_interior_runs_only_as_transitional_maneuvers(self, config):
        # Stage 4 never fragments a maneuver run into sub-minimum pieces (the
        # collapse rule); an interior action run shorter than the minimum can
        # only be an entire transitional maneuver run that the smoother kept
        # because its flanks disagree and its own mean supports its label.
        rng = np.random.default_rng(9)
        traj = make_trajectory(
            omega=rng.normal(0, 0.05, 500),
            a=rng.normal(0, 0.4, 500),
            v=np.abs(rng.normal(6, 2, 500)),
        )
        result = run_pipeline(traj, config)
        for action_stream, maneuver_stream in (
            (result.action.lateral, result.maneuver.lateral),
            (result.action.longitudinal, result.maneuver.longitudinal),
        ):
            action_runs = label_runs(action_stream)
            maneuver_bounds = {(s, e) for s, e, _ in label_runs(maneuver_stream)}
            for start, stop, _ in action_runs[1:-1]:
                if (stop - start) / 10.0 >= config.min_action_duration_s - 1e-9:
                    continue
                assert (start, stop) in maneuver_bounds

    def test_merge_gap_never_exceeds_limit(self, config):
        # sweep gaps around the limit; merges appear only at gap <= 4.0 s
        for gap_s, expect_merge in ((3.9, True), (4.0, True), (4.1, False)):
            gap = seconds(gap_s)
            omega = np.concatenate(
                [np.full(15, 0.2), np.zeros(gap), np.full(15, -0.2), np.zeros(10)]
            )
            traj = make_trajectory(omega=omega)
            result = run_pipeline(traj, config)
            merged = "LeftMerge" in result.maneuver.lateral
            assert merged == expect_merge, f"gap {gap_s}s"


class TestPipelineConfig:
    def test_rejects_non_positive_durations(self, thresholds):
        with pytest.raises(ValueError):
            PipelineConfig(thresholds=thresholds, min_action_duration_s=0.0)

    def test_rejects_merge_gap_below_min_duration(self, thresholds):
        with pytest.raises(ValueError):
            PipelineConfig(thresholds=thresholds, merge_max_gap_s=0.5)
