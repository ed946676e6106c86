import numpy as np
import pytest

from gspin.geometry import perturbations_from_lines
from gspin.sequences import Defect, Drive, SpinSystem
from gspin.spin import GAMMA_E, ZfsParameters

# illustrative per-site line positions: four resolved plus lines, and two
# minus-branch sites sharing one frequency so five minus lines remain
NU_PLUS = (689.0, 678.5, 685.5, 689.0, 692.5, 699.5)
NU_MINUS = (1734.1, 1704.0, 1712.0, 1737.9, 1712.0, 1720.0)

# [001] field projects onto a plus-branch site with factor sqrt(2/3) * sqrt(3)/2
PLUS_COUPLING = np.sqrt(2 / 3) * np.sqrt(3) / 2


def field_for_plus_rabi(omega_mhz):
    """|B| (mT) along [001] giving ``omega_mhz`` on the four plus-allowed sites."""
    return omega_mhz / (GAMMA_E * PLUS_COUPLING)


@pytest.fixture(scope="session")
def base_zfs():
    return ZfsParameters(-1205.0, 516.0)


@pytest.fixture(scope="session")
def fine_defect(base_zfs):
    perts = perturbations_from_lines(base_zfs, NU_PLUS, NU_MINUS)
    return Defect(base_zfs, tuple(perts))


@pytest.fixture(scope="session")
def fine_system(fine_defect):
    return SpinSystem(defect=fine_defect, drive=Drive((0.0, 0.0, field_for_plus_rabi(50.0))))


@pytest.fixture(scope="session")
def flat_system():
    return SpinSystem(drive=Drive((0.0, 0.0, 1.0)))
