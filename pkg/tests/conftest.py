import os

from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


import pytest  # noqa: E402


@pytest.fixture(scope="session")
def point_charge():
    """A converged point-charge solution on [1, 100], shared across modules."""
    from isoframe.odes import ShootingConfig, shoot_point_charge
    return shoot_point_charge(ShootingConfig(r_max=100.0))


@pytest.fixture(scope="session")
def plane_wave_h():
    """Plane-wave trajectory with h != 0, where the structure solve is regular."""
    from isoframe.odes import solve_plane_wave
    return solve_plane_wave(g0=0.0, dg0=0.8, h0=0.3, dh0=0.1, T_range=(0.0, 12.0))


ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
