"""Shared fixtures: canonical geometries with cached assembled systems."""

import math
from dataclasses import dataclass

import numpy as np
import pytest

from qport import momwire, portreduce, scenarios

F0 = 1.0e9
OMEGA0 = 2.0 * math.pi * F0
LAM0 = momwire.C0 / F0


@dataclass(frozen=True)
class Rig:
    """One geometry with everything precomputed at the design frequency."""

    geometry: momwire.WireArrayGeometry
    system: momwire.MoMSystem
    dz: np.ndarray
    reduction: portreduce.PortReduction
    y0: np.ndarray
    dy0: np.ndarray

    @property
    def omega0(self) -> float:
        return self.system.omega


def build_rig(geometry: momwire.WireArrayGeometry) -> Rig:
    system = momwire.assemble(geometry, OMEGA0)
    dz = momwire.impedance_derivative(geometry, OMEGA0)
    reduction = portreduce.PortReduction.from_geometry(geometry)
    y0 = portreduce.port_admittance(system, None, reduction)
    dy0 = portreduce.port_admittance_derivative(system, None, reduction, dz)
    return Rig(geometry=geometry, system=system, dz=dz, reduction=reduction, y0=y0, dy0=dy0)


@pytest.fixture(scope="session")
def rig_factory():
    return build_rig


@pytest.fixture(scope="session")
def single_rig() -> Rig:
    geometry = scenarios.parallel_dipole_array(1, LAM0, F0)
    return build_rig(geometry)


@pytest.fixture(scope="session")
def pair_rig() -> Rig:
    """Two half-wave dipoles at an eighth of a wavelength: strong coupling."""
    geometry = scenarios.parallel_dipole_array(2, LAM0 / 8.0, F0)
    return build_rig(geometry)


@pytest.fixture(scope="session")
def pair_rig_wide() -> Rig:
    """Two half-wave dipoles at three quarters of a wavelength."""
    geometry = scenarios.parallel_dipole_array(2, 0.75 * LAM0, F0)
    return build_rig(geometry)


@pytest.fixture(scope="session")
def five_rig() -> Rig:
    """Five half-wave dipoles at a sixth of a wavelength."""
    geometry = scenarios.parallel_dipole_array(5, LAM0 / 6.0, F0)
    return build_rig(geometry)
