"""Reduction of the moment-method system to its delta-gap port quantities.

The full solver state is compressed to port level through two bookkeeping
matrices: a binary selector that picks the basis function carrying each delta
gap, and a diagonal length matrix that converts between basis coefficients
and physical port volt/ampere pairs.  All port observables are bilinear forms
in the solved current, so the reduction is exact rather than approximate.

One sign trap is baked into the derivative path: the frequency derivative of
the port admittance is carried by plain transposes of the solved block, never
by conjugate transposes.  Bilinear reductions of Hermitian forms, by contrast,
do conjugate.  The two helpers keep the conventions apart.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .momwire import (
    LossModel,
    MoMSystem,
    SingularSystemError,
    WireArrayGeometry,
    assemble,
    impedance_derivative,
)


@dataclass(frozen=True)
class PortExcitation:
    """Complex port voltage amplitudes, one entry per delta gap."""

    v: np.ndarray

    def __post_init__(self):
        v = np.atleast_1d(np.asarray(self.v, dtype=np.complex128))
        if v.ndim != 1 or v.size == 0:
            raise ValueError("port excitation must be a nonempty vector")
        object.__setattr__(self, "v", v)

    @property
    def n_ports(self) -> int:
        return self.v.size


@dataclass(frozen=True)
class PortReduction:
    """Selector and length bookkeeping between basis space and port space.

    Attributes:
        selector: (N, P) binary matrix, one column per port, a single one in
            the row of the basis function whose peak node hosts the gap.
        lengths: (N,) diagonal of the length matrix: the port segment length
            on port rows, one elsewhere.  Only the port rows ever matter
            because the selector picks port rows, but the full diagonal keeps
            the algebra literal.
        port_basis: basis row index per port.
    """

    selector: np.ndarray
    lengths: np.ndarray
    port_basis: tuple[int, ...]

    @property
    def n_ports(self) -> int:
        return len(self.port_basis)

    @classmethod
    def from_geometry(cls, geometry: WireArrayGeometry) -> "PortReduction":
        n = geometry.n_basis
        port_basis: list[int] = []
        lengths = np.ones(n)
        offset = 0
        for w in geometry.wires:
            if w.port_segment is not None:
                row = offset + w.port_segment - 1
                port_basis.append(row)
                lengths[row] = w.segment_length
            offset += w.segments - 1
        if not port_basis:
            raise ValueError("geometry has no ported wire")
        selector = np.zeros((n, len(port_basis)))
        for col, row in enumerate(port_basis):
            selector[row, col] = 1.0
        return cls(selector=selector, lengths=lengths, port_basis=tuple(port_basis))


def expand_voltage(reduction: PortReduction, excitation: PortExcitation) -> np.ndarray:
    """Lift port voltages to the full excitation vector V = D P v."""
    v = excitation.v
    if v.size != reduction.n_ports:
        raise ValueError(f"excitation has {v.size} entries for {reduction.n_ports} ports")
    return reduction.lengths * (reduction.selector @ v)


def _tuned_matrix(system: MoMSystem, loss: LossModel | None) -> np.ndarray:
    if loss is None or loss.is_lossless():
        return system.z
    return system.z + loss.matrix(system.n_basis)


def _solved_block(system: MoMSystem, loss: LossModel | None, reduction: PortReduction) -> np.ndarray:
    """Solve (Z + R_L) W = D P once for all port columns."""
    dp = reduction.lengths[:, None] * reduction.selector
    try:
        return np.linalg.solve(_tuned_matrix(system, loss), dp)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"impedance matrix is singular: {exc}") from exc


def port_admittance(
    system: MoMSystem, loss: LossModel | None, reduction: PortReduction
) -> np.ndarray:
    """Port admittance matrix y0 = P^T D (Z + R_L)^-1 D P in siemens."""
    dp = reduction.lengths[:, None] * reduction.selector
    return dp.T @ _solved_block(system, loss, reduction)


def port_admittance_derivative(
    system: MoMSystem,
    loss: LossModel | None,
    reduction: PortReduction,
    dz: np.ndarray,
) -> np.ndarray:
    """Frequency derivative of the port admittance from the dZ matrix.

    dy0 = -(D P)^T Y dZ Y D P with Y the solved inverse block.  The left
    factor uses the plain transpose; conjugating it is a classic mistake that
    silently breaks agreement with finite differences of y0.
    """
    w = _solved_block(system, loss, reduction)
    return -(w.T @ dz @ w)


def port_admittance_second_derivative(
    geometry: WireArrayGeometry,
    omega: float,
    loss: LossModel | None,
    reduction: PortReduction,
    rel_step: float = 1e-4,
) -> np.ndarray:
    """Second frequency derivative of y0.

    Central difference of the exact first derivative; the analytic first
    derivative keeps the difference well conditioned at a plain 1e-4 step.
    """
    h = omega * rel_step

    def dy0_at(w: float) -> np.ndarray:
        system = assemble(geometry, w)
        dz = impedance_derivative(geometry, w)
        return port_admittance_derivative(system, loss, reduction, dz)

    return (dy0_at(omega + h) - dy0_at(omega - h)) / (2.0 * h)


def reduce_bilinear(
    matrix: np.ndarray,
    system: MoMSystem,
    loss: LossModel | None,
    reduction: PortReduction,
    excitation: PortExcitation,
) -> complex:
    """Evaluate I^H M I for the current driven by the port excitation."""
    current = np.linalg.solve(_tuned_matrix(system, loss), expand_voltage(reduction, excitation))
    return complex(current.conj() @ (matrix @ current))


def reduce_matrix(
    matrix: np.ndarray,
    system: MoMSystem,
    loss: LossModel | None,
    reduction: PortReduction,
) -> np.ndarray:
    """Port-level matrix m with v^H m v = I^H M I for every excitation v.

    This is the conjugated reduction (Y^H M Y sandwiched by D P), appropriate
    for energy and power forms.
    """
    w = _solved_block(system, loss, reduction)
    return w.conj().T @ matrix @ w


def port_currents(reduction: PortReduction, current: np.ndarray) -> np.ndarray:
    """Physical port currents i = (D P)^T I of a solved coefficient vector."""
    return (reduction.lengths[:, None] * reduction.selector).T @ current
