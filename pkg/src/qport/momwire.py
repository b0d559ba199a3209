"""Thin-wire method-of-moments solver for arrays of parallel straight wires.

The solver discretizes the electric field integral equation with the reduced
thin-wire kernel: the source current flows on the wire axis and the boundary
condition is tested on the wire surface, so the self-interaction distance never
drops below the wire radius.  Overlapping triangle basis functions live on
segment pairs and the testing is Galerkin, which keeps the impedance matrix
complex symmetric.

Basis normalization follows the surface-patch convention: a basis function
peaks at the value of its segment length, so the coefficient vector carries
units of A/m and the physical current through a node is coefficient times
segment length.  Port bookkeeping (the diagonal length matrix) then produces
input admittances in siemens without extra unit fixes.
"""

from __future__ import annotations

import hashlib
import json
import math
import weakref
from dataclasses import dataclass, field

import numpy as np

C0 = 299792458.0            # m/s
MU0 = 4.0e-7 * math.pi      # H/m
EPS0 = 1.0 / (MU0 * C0 * C0)
ETA0 = MU0 * C0

# 4-point Gauss-Legendre rule mapped onto the unit interval.
_GX, _GW = np.polynomial.legendre.leggauss(4)
_GX = 0.5 * (_GX + 1.0)
_GW = 0.5 * _GW

_MIN_SEGMENTS = 10
_SEGMENTS_PER_WAVELENGTH = 10.0
_RADIUS_LENGTH_RATIO = 50.0
_RADIUS_GAP_RATIO = 4.0
_SOLVE_RESIDUAL_TOL = 1e-10


class GeometryError(ValueError):
    """Raised when a wire array violates the thin-wire validity envelope."""


class AssemblyError(RuntimeError):
    """Raised when a geometry cannot be meshed at the requested frequency."""


class SingularSystemError(RuntimeError):
    """Raised when the linear system cannot be solved reliably."""

    def __init__(self, message: str, condition: float | None = None):
        if condition is not None:
            message = f"{message} (condition estimate {condition:.3e})"
        super().__init__(message)
        self.condition = condition


@dataclass(frozen=True, eq=False)
class Wire:
    """One straight wire: center position, axis direction, and mesh controls.

    Attributes:
        length: wire length in meters.
        radius: wire radius in meters.
        center: 3-vector of the wire midpoint in meters.
        axis: 3-vector direction of the wire; normalized on construction.
        segments: number of mesh segments, even so a basis-function peak
            can sit on the center segment boundary.
        port_segment: the delta gap sits on the boundary between segments
            ``port_segment - 1`` and ``port_segment`` (0-based), which is the
            peak node of one triangle basis function.  ``None`` for a parasitic
            wire without a feed.
    """

    length: float
    radius: float
    center: np.ndarray
    axis: np.ndarray
    segments: int
    port_segment: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        axis = np.asarray(self.axis, dtype=float)
        norm = float(np.linalg.norm(axis))
        if not norm > 0.0:
            raise GeometryError("wire axis must be a nonzero vector")
        object.__setattr__(self, "axis", axis / norm)
        if not (self.length > 0.0 and self.radius > 0.0):
            raise GeometryError("wire length and radius must be positive")
        if self.radius * _RADIUS_LENGTH_RATIO >= self.length:
            raise GeometryError(
                f"radius {self.radius:g} m too thick for length {self.length:g} m; "
                f"thin-wire kernel needs radius < length/{_RADIUS_LENGTH_RATIO:g}"
            )
        if self.segments < _MIN_SEGMENTS:
            raise GeometryError(f"need at least {_MIN_SEGMENTS} segments per wire")
        if self.segments % 2 != 0:
            raise GeometryError("segment count must be even")
        if self.port_segment is not None and not (1 <= self.port_segment <= self.segments - 1):
            raise GeometryError(
                "port_segment must lie in [1, segments-1] so the gap sits on an "
                "interior segment boundary"
            )

    @property
    def segment_length(self) -> float:
        return self.length / self.segments


@dataclass(frozen=True, eq=False)
class WireArrayGeometry:
    """A collection of parallel wires sharing one axis direction."""

    wires: tuple[Wire, ...]

    def __post_init__(self):
        object.__setattr__(self, "wires", tuple(self.wires))
        if not self.wires:
            raise GeometryError("geometry needs at least one wire")
        ref = self.wires[0].axis
        for i, w in enumerate(self.wires):
            if np.linalg.norm(w.axis - ref) > 1e-9:
                raise GeometryError(f"wire {i} axis differs from wire 0; wires must be parallel")
        self._validate_gaps()

    def _validate_gaps(self):
        axis = self.wires[0].axis
        for i in range(len(self.wires)):
            for j in range(i + 1, len(self.wires)):
                gap = _axis_gap(self.wires[i], self.wires[j], axis)
                if not gap > 0.0:
                    raise GeometryError(f"wires {i} and {j} touch or overlap")
                for w, name in ((self.wires[i], i), (self.wires[j], j)):
                    if w.radius * _RADIUS_GAP_RATIO >= gap:
                        raise GeometryError(
                            f"wire {name} radius {w.radius:g} m too thick for the "
                            f"{gap:g} m gap to its neighbor; reduced kernel needs "
                            f"radius < gap/{_RADIUS_GAP_RATIO:g}"
                        )

    @property
    def n_ports(self) -> int:
        return sum(1 for w in self.wires if w.port_segment is not None)

    @property
    def n_basis(self) -> int:
        return sum(w.segments - 1 for w in self.wires)


def _axis_gap(wa: Wire, wb: Wire, axis: np.ndarray) -> float:
    """Minimum center-line distance between two parallel wire segments."""
    sa = float(wa.center @ axis)
    sb = float(wb.center @ axis)
    rho = np.linalg.norm((wa.center - sa * axis) - (wb.center - sb * axis))
    lo_a, hi_a = sa - wa.length / 2, sa + wa.length / 2
    lo_b, hi_b = sb - wb.length / 2, sb + wb.length / 2
    clearance = max(lo_a - hi_b, lo_b - hi_a, 0.0)
    return math.hypot(rho, clearance)


@dataclass(frozen=True)
class LossModel:
    """Ohmic loss as a real PSD resistance matrix added to the impedance matrix.

    The matrix lives in the same basis normalization as the assembled
    impedance matrix.  ``None`` means lossless.
    """

    resistance: np.ndarray | None = None

    def matrix(self, n: int) -> np.ndarray:
        if self.resistance is None:
            return np.zeros((n, n))
        r = np.asarray(self.resistance, dtype=float)
        if r.shape != (n, n):
            raise ValueError(f"loss matrix shape {r.shape} does not match {n} basis functions")
        return r

    def is_lossless(self) -> bool:
        return self.resistance is None or not np.any(self.resistance)


def loss_for_efficiency(system: "MoMSystem", eta: float) -> LossModel:
    """Build a loss matrix proportional to the radiation resistance matrix.

    The resulting radiation efficiency is ``eta`` for every excitation because
    numerator and denominator quadratic forms share the same matrix shape.
    """
    if not (0.0 < eta <= 1.0):
        raise ValueError("efficiency must lie in (0, 1]")
    beta = (1.0 - eta) / eta
    return LossModel(resistance=beta * system.z.real)


@dataclass(frozen=True, eq=False)
class MoMSystem:
    """An assembled moment-method system at one angular frequency."""

    geometry: WireArrayGeometry
    omega: float
    z: np.ndarray

    @property
    def n_basis(self) -> int:
        return self.z.shape[0]


@dataclass(frozen=True)
class Powers:
    """Power balance of one solved current distribution."""

    p_rad: float
    p_loss: float
    p_react: float


# --------------------------------------------------------------------------
# Assembly plan: geometry-only tables reused across frequencies.
# --------------------------------------------------------------------------

class _Plan:
    __slots__ = (
        "n_basis", "seg_len_max", "basis_scale",
        "pair_c", "pair_dp", "pair_dq", "pair_rho", "pair_diag",
        "o_rows", "o_cols", "o_pair", "o_alpha", "o_phi",
        "m_rows", "m_cols", "m_pair", "m_alpha", "m_phi",
        "port_basis", "port_scale", "wire_seg_len",
    )


_PLANS: "weakref.WeakKeyDictionary[WireArrayGeometry, _Plan]" = weakref.WeakKeyDictionary()


def _alpha_pattern(rise_m: bool, rise_n: bool) -> tuple[int, int, int, int]:
    # Coefficients over the monomial integrals (1, xi, xi', xi*xi') that
    # realize the triangle shapes: rising edge is xi, falling edge is 1-xi.
    if rise_m and rise_n:
        return (0, 0, 0, 1)
    if rise_m:
        return (0, 1, 0, -1)
    if rise_n:
        return (0, 0, 1, -1)
    return (1, -1, -1, 1)


def _build_plan(geom: WireArrayGeometry) -> _Plan:
    axis = geom.wires[0].axis
    seg_z1, seg_len, seg_wire = [], [], []
    touch: list[list[tuple[int, bool]]] = []
    basis_scale = []
    port_basis, port_scale = [], []
    wire_lat = []

    basis_offset = 0
    for w_idx, w in enumerate(geom.wires):
        s_mid = float(w.center @ axis)
        z_start = s_mid - w.length / 2.0
        dl = w.segment_length
        wire_lat.append(w.center - s_mid * axis)
        seg_offset = len(seg_z1)
        for i in range(w.segments):
            seg_z1.append(z_start + i * dl)
            seg_len.append(dl)
            seg_wire.append(w_idx)
            touch.append([])
        for i in range(w.segments - 1):
            b = basis_offset + i
            touch[seg_offset + i].append((b, True))
            touch[seg_offset + i + 1].append((b, False))
            basis_scale.append(dl)
        if w.port_segment is not None:
            port_basis.append(basis_offset + w.port_segment - 1)
            port_scale.append(dl)
        basis_offset += w.segments - 1

    n_seg = len(seg_z1)
    seg_z1 = np.asarray(seg_z1)
    seg_len = np.asarray(seg_len)
    seg_wire = np.asarray(seg_wire)

    n_wires = len(geom.wires)
    rho_ww = np.empty((n_wires, n_wires))
    for i in range(n_wires):
        for j in range(n_wires):
            if i == j:
                rho_ww[i, j] = geom.wires[i].radius
            else:
                rho = float(np.linalg.norm(wire_lat[i] - wire_lat[j]))
                # Collinear wires keep a positive kernel offset so the static
                # antiderivatives stay finite; the gap check already enforced
                # axial clearance in that arrangement.
                rho_ww[i, j] = max(rho, 1e-12 * seg_len.max())

    pp, qq = np.triu_indices(n_seg)
    plan = _Plan()
    plan.n_basis = len(basis_scale)
    plan.seg_len_max = float(seg_len.max())
    plan.basis_scale = np.asarray(basis_scale)
    plan.pair_c = seg_z1[pp] - seg_z1[qq]
    plan.pair_dp = seg_len[pp]
    plan.pair_dq = seg_len[qq]
    plan.pair_rho = rho_ww[seg_wire[pp], seg_wire[qq]]
    plan.pair_diag = pp == qq
    plan.port_basis = tuple(port_basis)
    plan.port_scale = np.asarray(port_scale)
    plan.wire_seg_len = tuple(w.segment_length for w in geom.wires)

    o_entries, m_entries = [], []
    for t in range(len(pp)):
        p, q = pp[t], qq[t]
        bucket = o_entries if p == q else m_entries
        inv_dd = 1.0 / (seg_len[p] * seg_len[q])
        for (m, rm) in touch[p]:
            sm = 1.0 if rm else -1.0
            for (n, rn) in touch[q]:
                sn = 1.0 if rn else -1.0
                bucket.append((m, n, t, *_alpha_pattern(rm, rn), sm * sn * inv_dd))

    def pack(entries):
        if not entries:
            z = np.zeros(0, dtype=np.intp)
            return z, z, z, np.zeros((0, 4)), np.zeros(0)
        arr = np.asarray(entries, dtype=float)
        return (
            arr[:, 0].astype(np.intp), arr[:, 1].astype(np.intp),
            arr[:, 2].astype(np.intp), arr[:, 3:7].copy(), arr[:, 7].copy(),
        )

    plan.o_rows, plan.o_cols, plan.o_pair, plan.o_alpha, plan.o_phi = pack(o_entries)
    plan.m_rows, plan.m_cols, plan.m_pair, plan.m_alpha, plan.m_phi = pack(m_entries)
    return plan


def _plan_for(geom: WireArrayGeometry) -> _Plan:
    plan = _PLANS.get(geom)
    if plan is None:
        plan = _build_plan(geom)
        _PLANS[geom] = plan
    return plan


# --------------------------------------------------------------------------
# Pair integrals.
# --------------------------------------------------------------------------

def _static_monomials(c, dp, dq, rho):
    """Exact integrals of xi^a * xi'^b / R over a parallel segment pair.

    ``c`` is the axial offset between the segment start points and ``rho``
    the lateral separation.  Everything is elementary once the inner integral
    is folded into antiderivatives of asinh and sqrt terms; the four corner
    arguments are c, c+dp, c-dq, c+dp-dq.
    """
    v1 = c
    v2 = c + dp
    v3 = c - dq
    v4 = c + dp - dq

    def bundle(v):
        r = np.hypot(v, rho)
        a = np.arcsinh(v / rho)
        ia = v * a - r
        iva = 0.25 * ((2.0 * v * v + rho * rho) * a - v * r)
        iv2a = (v ** 3 / 3.0) * a - r ** 3 / 9.0 + (rho * rho) * r / 3.0
        ir = 0.5 * (v * r + rho * rho * a)
        ivr = r ** 3 / 3.0
        return a, ia, iva, iv2a, ir, ivr

    b1, b2, b3, b4 = bundle(v1), bundle(v2), bundle(v3), bundle(v4)

    def d12(idx):
        return b2[idx] - b1[idx]

    def d34(idx):
        return b4[idx] - b3[idx]

    IA, IVA, IV2A, IR, IVR = 1, 2, 3, 4, 5

    i00 = d12(IA) - d34(IA)
    i10 = ((d12(IVA) - c * d12(IA)) - (d34(IVA) - v3 * d34(IA))) / dp
    i01 = (d12(IVA) - d34(IVA) - dq * d34(IA) - d12(IR) + d34(IR)) / dq
    i11 = (
        (d12(IV2A) - c * d12(IVA))
        - (d34(IV2A) + (dq - v3) * d34(IVA) - v3 * dq * d34(IA))
        - (d12(IVR) - c * d12(IR))
        + (d34(IVR) - v3 * d34(IR))
    ) / (dp * dq)
    return i00, i10, i01, i11


def _pair_monomials(plan: _Plan, k: float):
    """Monomial-weighted kernel integrals for every unique segment pair.

    The 1/R singularity is extracted and integrated exactly; the remainder
    (exp(-jkR) - 1)/R is entire in (z, z') for positive lateral offset, where
    the 4-point tensor Gauss rule converges fast.
    """
    c, dp, dq, rho = plan.pair_c, plan.pair_dp, plan.pair_dq, plan.pair_rho

    zo = c[:, None] + _GX[None, :] * dp[:, None]
    zs = _GX[None, :] * dq[:, None]
    u = zo[:, :, None] - zs[:, None, :]
    r = np.sqrt(u * u + (rho * rho)[:, None, None])
    kr = k * r
    # exp(-j k r) - 1 written through half-angle sines to keep the real part
    # accurate when k r is small.
    s = np.sin(0.5 * kr)
    smooth = (-2.0 * s * s - 1j * np.sin(kr)) / r

    wx = _GW * _GX
    g00 = np.einsum("i,j,tij->t", _GW, _GW, smooth, optimize=True)
    g10 = np.einsum("i,j,tij->t", wx, _GW, smooth, optimize=True)
    g01 = np.einsum("i,j,tij->t", _GW, wx, smooth, optimize=True)
    g11 = np.einsum("i,j,tij->t", wx, wx, smooth, optimize=True)
    area = dp * dq
    g00, g10, g01, g11 = g00 * area, g10 * area, g01 * area, g11 * area

    i00, i10, i01, i11 = _static_monomials(c, dp, dq, rho)
    g00 = g00 + i00
    g10 = g10 + i10
    g01 = g01 + i01
    g11 = g11 + i11

    # Same-segment pairs are symmetric in (xi, xi'); force the two mixed
    # monomials to share one value so the assembled matrix is exactly
    # symmetric instead of symmetric to roundoff.
    diag = plan.pair_diag
    g01[diag] = g10[diag]
    return g00, g10, g01, g11


def assemble(geometry: WireArrayGeometry, omega: float) -> MoMSystem:
    """Assemble the thin-wire impedance matrix at one angular frequency.

    Args:
        geometry: validated wire array.
        omega: angular frequency in rad/s.

    Returns:
        MoMSystem with the complex symmetric impedance matrix.

    Raises:
        AssemblyError: when the mesh is too coarse for the frequency.
    """
    if not omega > 0.0:
        raise ValueError("omega must be positive")
    plan = _plan_for(geometry)
    lam = 2.0 * math.pi * C0 / omega
    if plan.seg_len_max >= lam / _SEGMENTS_PER_WAVELENGTH:
        worst = max(geometry.wires, key=lambda w: w.segment_length)
        need = math.ceil(_SEGMENTS_PER_WAVELENGTH * worst.length / lam)
        need += need % 2
        raise AssemblyError(
            f"segment length {plan.seg_len_max:g} m exceeds lambda/10 at omega={omega:g}; "
            f"use at least {need} segments on the longest wire"
        )

    k = omega / C0
    g00, g10, g01, g11 = _pair_monomials(plan, k)
    coef_a = 1j * omega * 1e-7
    coef_phi = -1j * 1e-7 * C0 * C0 / omega

    n = plan.n_basis
    z = np.zeros((n, n), dtype=np.complex128)
    for rows, cols, pair, alpha, phi, mirror in (
        (plan.o_rows, plan.o_cols, plan.o_pair, plan.o_alpha, plan.o_phi, False),
        (plan.m_rows, plan.m_cols, plan.m_pair, plan.m_alpha, plan.m_phi, True),
    ):
        if rows.size == 0:
            continue
        vals = coef_a * (
            alpha[:, 0] * g00[pair] + alpha[:, 1] * g10[pair]
            + alpha[:, 2] * g01[pair] + alpha[:, 3] * g11[pair]
        ) + coef_phi * phi * g00[pair]
        np.add.at(z, (rows, cols), vals)
        if mirror:
            np.add.at(z, (cols, rows), vals)

    scale = plan.basis_scale
    z *= scale[:, None] * scale[None, :]
    return MoMSystem(geometry=geometry, omega=omega, z=z)


def impedance_derivative(
    geometry: WireArrayGeometry, omega: float, rel_step: float = 1e-5
) -> np.ndarray:
    """Frequency derivative of the impedance matrix.

    Central differences with one Richardson extrapolation level; the result
    carries an O(h^4) truncation error at negligible extra cost next to the
    solver work downstream.
    """
    h = omega * rel_step
    d_h = (assemble(geometry, omega + h).z - assemble(geometry, omega - h).z) / (2.0 * h)
    d_h2 = (assemble(geometry, omega + 0.5 * h).z - assemble(geometry, omega - 0.5 * h).z) / h
    return (4.0 * d_h2 - d_h) / 3.0


def solve_current(
    system: MoMSystem, loss: LossModel | None, excitation: np.ndarray
) -> np.ndarray:
    """Solve (Z + R_L) I = V for the basis coefficient vector."""
    v = np.asarray(excitation, dtype=np.complex128)
    if v.shape != (system.n_basis,):
        raise ValueError(f"excitation must have shape ({system.n_basis},)")
    zt = system.z if loss is None or loss.is_lossless() else system.z + loss.matrix(system.n_basis)
    try:
        cur = np.linalg.solve(zt, v)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"impedance matrix is singular: {exc}") from exc
    vnorm = float(np.linalg.norm(v))
    if vnorm > 0.0:
        residual = float(np.linalg.norm(zt @ cur - v)) / vnorm
        if residual > _SOLVE_RESIDUAL_TOL:
            raise SingularSystemError(
                f"solve residual {residual:.3e} exceeds {_SOLVE_RESIDUAL_TOL:g}",
                condition=float(np.linalg.cond(zt)),
            )
    return cur


def powers(system: MoMSystem, loss: LossModel | None, current: np.ndarray) -> Powers:
    """Radiated, dissipated, and reactive power of a solved current."""
    cur = np.asarray(current, dtype=np.complex128)
    p_rad = 0.5 * float(np.real(cur.conj() @ (system.z.real @ cur)))
    p_react = 0.5 * float(np.real(cur.conj() @ (system.z.imag @ cur)))
    if loss is None or loss.is_lossless():
        p_loss = 0.0
    else:
        p_loss = 0.5 * float(np.real(cur.conj() @ (loss.matrix(system.n_basis) @ cur)))
    return Powers(p_rad=p_rad, p_loss=p_loss, p_react=p_react)


# --------------------------------------------------------------------------
# Geometry serialization.
# --------------------------------------------------------------------------

def geometry_to_dict(geom: WireArrayGeometry) -> dict:
    return {
        "wires": [
            {
                "length": w.length,
                "radius": w.radius,
                "center": list(map(float, w.center)),
                "axis": list(map(float, w.axis)),
                "segments": w.segments,
                "port_segment": w.port_segment,
            }
            for w in geom.wires
        ]
    }


def geometry_from_dict(data: dict) -> WireArrayGeometry:
    try:
        wires = tuple(
            Wire(
                length=float(w["length"]),
                radius=float(w["radius"]),
                center=np.asarray(w["center"], dtype=float),
                axis=np.asarray(w["axis"], dtype=float),
                segments=int(w["segments"]),
                port_segment=None if w.get("port_segment") is None else int(w["port_segment"]),
            )
            for w in data["wires"]
        )
    except KeyError as exc:
        raise GeometryError(f"geometry description is missing field {exc}") from exc
    return WireArrayGeometry(wires=wires)


def load_geometry(path) -> WireArrayGeometry:
    with open(path, "r", encoding="utf-8") as fh:
        return geometry_from_dict(json.load(fh))


def save_geometry(geom: WireArrayGeometry, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(geometry_to_dict(geom), fh, indent=2)
        fh.write("\n")


def geometry_fingerprint(geom: WireArrayGeometry) -> str:
    """Stable hash of the geometry for report provenance."""
    blob = json.dumps(geometry_to_dict(geom), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]
