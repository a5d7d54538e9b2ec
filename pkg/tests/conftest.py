import numpy as np
import pytest

from driftsac.track import TrackSpec, generate_track, scripted_expert_reference, straight_track
from driftsac.vehicle import VehicleParams


@pytest.fixture(scope="session")
def trainer_params():
    return VehicleParams()


@pytest.fixture(scope="session")
def long_straight():
    return straight_track(length=400.0)


@pytest.fixture(scope="session")
def small_track():
    return generate_track(TrackSpec(seed=1, n_corners=3, corner_angle_range_deg=(40, 90),
                                    segment_length_range_m=(40, 90), radius_range_m=(60, 100),
                                    name="small"))


@pytest.fixture(scope="session")
def small_reference(small_track, trainer_params):
    return scripted_expert_reference(small_track, trainer_params)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# -- acceptance verdict lines ------------------------------------------------

_VERDICTS = pytest.StashKey[list]()


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.stash.setdefault(_VERDICTS, []).append(rep.passed)


@pytest.fixture
def criterion(request):
    """Record the outcome of one acceptance criterion for the terminal summary."""
    doc = (request.node.function.__doc__ or request.node.name).strip()
    info = {"name": doc.splitlines()[0], "detail": ""}
    yield info
    passed = all(request.node.stash.get(_VERDICTS, [False]))
    line = f"criterion {info['name']}: {'PASS' if passed else 'FAIL'}"
    if info["detail"]:
        line += f"  ({info['detail']})"
    request.config.stash.setdefault(_VERDICTS, []).append(line)
    print("\n" + line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
