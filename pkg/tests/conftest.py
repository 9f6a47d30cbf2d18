import numpy as np
import pytest

from tap.partitioning import KinematicDistributions, ThresholdSet
from tap.trajectory import Trajectory


def pytest_runtest_logreport(report):
    # One visible pass/fail line per acceptance criterion.
    if report.when == "call" and "test_acceptance" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        status = "PASS" if report.passed else "FAIL"
        print(f"\n[ACCEPTANCE] {name}: {status}", flush=True)


@pytest.fixture
def thresholds():
    return ThresholdSet(
        omega_str=0.03, omega_grad=0.15, omega_med=0.5,
        a_dec=-0.5, a_acc=0.5,
        v_stop=0.5, v_slow=5.0, v_med=12.0,
    )


def make_trajectory(omega=None, a=None, v=None, rate=10.0, scenario_id="s", vehicle_id="v0", n=None):
    """Trajectory with given channels; unspecified ones default to benign values."""
    for channel in (omega, a, v):
        if channel is not None:
            n = len(channel)
            break
    if n is None:
        raise ValueError("give at least one channel or n")
    omega = np.zeros(n) if omega is None else np.asarray(omega, dtype=float)
    a = np.zeros(n) if a is None else np.asarray(a, dtype=float)
    v = np.full(n, 3.0) if v is None else np.asarray(v, dtype=float)
    zeros = np.zeros(n)
    return Trajectory(scenario_id, vehicle_id, rate, zeros, zeros, v, a, zeros, omega)


def single_channel_distributions(channel: str, samples) -> KinematicDistributions:
    """Distributions with real data on one channel and placeholders elsewhere."""
    data = {
        "omega": np.array([0.01]),
        "a": np.array([0.0]),
        "v": np.array([1.0]),
    }
    data[channel] = np.asarray(samples, dtype=float)
    return KinematicDistributions(d_omega=data["omega"], d_a=data["a"], d_v=data["v"])
