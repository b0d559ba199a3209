"""Q factors and fractional bandwidth prediction for multiport antennas.

Three Q definitions live here side by side:

* the radiation Q built from stored field energy over radiated power, at the
  solver level or reduced to port level;
* the reflection Q read off the curvature of the matched total efficiency,
  which is the one that predicts usable bandwidth under a TARC threshold;
* the prior-art multiport impedance Q that generalizes the single-port
  derivative formula and is kept for comparison.

For a single matched port all three curvature-based definitions collapse to
the classic omega |Z'| / (2 R) expression.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import matching
from ._interp import CubicHermite, GridRangeError
from .matching import MatchingState
from .momwire import LossModel, MoMSystem


class UnboundedBandwidthError(RuntimeError):
    """Raised when a zero Q makes the predicted bandwidth unbounded."""


class UnmatchedStateError(RuntimeError):
    """Raised when a matched-state formula is applied to an unmatched state."""


class BandEdgeError(RuntimeError):
    """Raised when a TARC threshold crossing is missing on one side."""

    def __init__(self, message: str, side: str):
        super().__init__(message)
        self.side = side


@dataclass(frozen=True)
class StoredEnergies:
    """Stored energy split and power balance of one current distribution.

    ``indefinite`` flags a negative energy quadratic form; the numbers are
    still reported because the max-based Q formula survives small indefinite
    parts while the split itself loses meaning.
    """

    w_m: float
    w_e: float
    p_rad: float
    p_react: float
    indefinite: bool


@dataclass(frozen=True)
class QReport:
    """All Q factors and bandwidth figures for one analysis."""

    omega0: float
    q_rad: float | None
    q_tarc: float
    q_zm: float
    q_z: float | None
    f_predicted: float
    eta_max: float
    gamma_max: float
    f_swept: float | None = None
    q_fbw: float | None = None
    double_resonance: bool | None = None
    flags: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "omega0_rad_per_s": self.omega0,
            "f0_hz": self.omega0 / (2.0 * np.pi),
            "q_rad": self.q_rad,
            "q_tarc": self.q_tarc,
            "q_zm": self.q_zm,
            "q_z": self.q_z,
            "gamma_max": self.gamma_max,
            "fbw_predicted": self.f_predicted,
            "fbw_swept": self.f_swept,
            "q_fbw": self.q_fbw,
            "eta_max": self.eta_max,
            "double_resonance": self.double_resonance,
            "flags": dict(self.flags),
        }


def _form(matrix: np.ndarray, v: np.ndarray) -> float:
    """Quadratic form v^H M v of a Hermitian M, returned as a real number."""
    return float(np.real(np.conj(v) @ (matrix @ v)))


def stored_energies(system: MoMSystem, dz: np.ndarray, current: np.ndarray) -> StoredEnergies:
    """Magnetic and electric stored energy of a solved current.

    The energy matrix is the frequency derivative of the reactance matrix;
    adding and subtracting the reactance form splits the total into the
    magnetic and electric halves.
    """
    cur = np.asarray(current, dtype=np.complex128)
    omega = system.omega
    w_form = _form(dz.imag, cur)
    x_form = _form(system.z.imag, cur)
    w_m = (omega * w_form + x_form) / (8.0 * omega)
    w_e = (omega * w_form - x_form) / (8.0 * omega)
    p_rad = 0.5 * _form(system.z.real, cur)
    return StoredEnergies(
        w_m=w_m, w_e=w_e, p_rad=p_rad, p_react=0.5 * x_form, indefinite=w_form < 0.0
    )


def q_rad_mom(energies: StoredEnergies, omega: float) -> float:
    """Radiation Q from the stored-energy split: 2 omega max(W_m, W_e) / P_rad."""
    if not energies.p_rad > 0.0:
        raise ValueError("radiated power must be positive for a radiation Q")
    return 2.0 * omega * max(energies.w_m, energies.w_e) / energies.p_rad


def q_rad_port(y0: np.ndarray, w: np.ndarray, v: np.ndarray, omega: float) -> float:
    """Radiation Q evaluated from port-level matrices.

    Args:
        y0: port admittance matrix.
        w: port stored-energy matrix.  The faithful choice is the conjugated
            reduction of the reactance derivative matrix
            (``portreduce.reduce_matrix(dz.imag, ...)``); passing ``Im(dy0)``
            instead reproduces the approximation some published comparisons
            use, and the two differ once mutual coupling matters.
        v: port excitation.
        omega: angular frequency in rad/s.
    """
    v = np.asarray(v, dtype=np.complex128)
    g_form = _form(np.real(y0), v)
    if not g_form > 0.0:
        raise ValueError("excitation radiates no power; Q undefined")
    w_form = _form(w, v)
    b_form = _form(np.imag(y0), v)
    return (0.5 * omega * w_form + 0.5 * abs(b_form)) / g_form


def _tuned_admittance(y0: np.ndarray, match: MatchingState, omega: float) -> np.ndarray:
    return y0 + 1j * np.diag(match.susceptance(omega))


def eta_second_derivative(
    y0: np.ndarray,
    dy0: np.ndarray,
    ddy0: np.ndarray,
    match: MatchingState,
    v: np.ndarray,
    omega0: float,
) -> float:
    """Curvature of the total efficiency at omega0 for a fixed feeding.

    Both terms of the closed form are evaluated; the second one is carried by
    the residual reflected wave and collapses to roundoff for a synthesized
    match, but it keeps the expression exact for detuned states.
    """
    v = np.asarray(v, dtype=np.complex128)
    lam = np.sqrt(match.r0)
    y_v = _tuned_admittance(y0, match, omega0) @ v
    yp_v = dy0 @ v + 1j * match.susceptance_derivative(omega0) * v
    ypp_v = ddy0 @ v + 1j * match.susceptance_second_derivative(omega0) * v
    a = 0.5 * (v / lam + lam * y_v)
    denom = float(np.vdot(a, a).real)
    if not denom > 0.0:
        raise ValueError("incident power vanishes; efficiency curvature undefined")
    term1 = -0.5 * float(np.vdot(lam * yp_v, lam * yp_v).real) / denom
    term2 = 0.5 * float(np.real(np.vdot(ypp_v, v - lam * lam * y_v))) / denom
    return term1 + term2


def q_tarc(
    y0: np.ndarray,
    dy0: np.ndarray,
    match: MatchingState,
    v: np.ndarray,
    omega0: float,
    matched_tol: float = 1e-8,
) -> float:
    """Reflection Q of a matched multiport: (omega0/2) |Lam Y' v| / |K_i v|.

    Requires an actually matched state; for detuned states the curvature
    picks up a second term and ``eta_second_derivative`` is the honest route.
    """
    v = np.asarray(v, dtype=np.complex128)
    wave_pair = matching.waves(y0, match, omega0, v)
    a_norm = float(np.linalg.norm(wave_pair.a))
    if not a_norm > 0.0:
        raise ValueError("incident power vanishes; Q undefined")
    if float(np.linalg.norm(wave_pair.b)) > matched_tol * a_norm:
        raise UnmatchedStateError(
            "state is not matched at omega0; use eta_second_derivative for the "
            "general curvature"
        )
    lam = np.sqrt(match.r0)
    yp_v = dy0 @ v + 1j * match.susceptance_derivative(omega0) * v
    return 0.5 * omega0 * float(np.linalg.norm(lam * yp_v)) / a_norm


def q_zm(y0: np.ndarray, dy0: np.ndarray, v: np.ndarray, omega0: float) -> float:
    """Prior-art multiport impedance Q built from port admittance derivatives."""
    v = np.asarray(v, dtype=np.complex128)
    g_form = _form(np.real(y0), v)
    if not g_form > 0.0:
        raise ValueError("excitation conducts no real power; Q undefined")
    gp = _form(np.real(dy0), v)
    bp = _form(np.imag(dy0), v) + abs(_form(np.imag(y0), v)) / omega0
    return 0.5 * omega0 * float(np.hypot(gp, bp)) / g_form


def q_z(y0: complex, dy0: complex, match: MatchingState, omega0: float) -> float:
    """Single-port impedance Q, omega |Z'| / (2 R), on the tuned impedance."""
    y = complex(y0) + 1j * float(match.susceptance(omega0)[0])
    yp = complex(dy0) + 1j * float(match.susceptance_derivative(omega0)[0])
    z_t = 1.0 / y
    r_t = z_t.real
    if not r_t > 0.0:
        raise ValueError("tuned resistance must be positive")
    dz_t = -yp / (y * y)
    return 0.5 * omega0 * abs(dz_t) / r_t


def tarc_approx(q: float, omega0: float, omega, eta_max: float = 1.0):
    """Single-resonance TARC approximation around omega0.

    For the lossless case this is the linear ramp q |omega - omega0| / omega0
    clipped at one; with eta_max < 1 the floor sqrt(1 - eta_max) appears and
    the curvature term carries the eta_max weight of the total efficiency.
    """
    if not (0.0 < eta_max <= 1.0):
        raise ValueError("eta_max must lie in (0, 1]")
    delta = (np.asarray(omega, dtype=float) - omega0) / omega0
    val = np.sqrt(np.clip(1.0 - eta_max + eta_max * (q * delta) ** 2, 0.0, 1.0))
    return float(val) if val.ndim == 0 else val


def fbw_predict(q: float, gamma_max: float) -> float:
    """Fractional bandwidth 2 Gamma_max / Q predicted from a single frequency."""
    if not (0.0 < gamma_max < 1.0):
        raise ValueError("gamma_max must lie in (0, 1)")
    if q < 0.0:
        raise ValueError("Q must be nonnegative")
    if q == 0.0:
        raise UnboundedBandwidthError("Q = 0; predicted bandwidth is unbounded")
    return 2.0 * gamma_max / q


@dataclass(frozen=True)
class SweptBandwidth:
    """Band edges found on a swept TARC curve."""

    fbw: float
    omega_minus: float
    omega_plus: float
    double_resonance: bool
    n_minima: int


def fbw_sweep(
    omegas: np.ndarray,
    tarc_values: np.ndarray,
    omega0: float,
    gamma_max: float,
) -> SweptBandwidth:
    """Measure the fractional bandwidth of a sampled TARC curve.

    Walks outward from omega0 to bracket the threshold crossings, then
    bisects on the local cubic interpolant to relative tolerance 1e-10.
    Flags curves whose band is badly off-center or carries several minima,
    the signature of merged neighboring resonances.
    """
    omegas = np.asarray(omegas, dtype=float)
    tarc_values = np.asarray(tarc_values, dtype=float)
    if not (0.0 < gamma_max < 1.0):
        raise ValueError("gamma_max must lie in (0, 1)")
    if omega0 < omegas[0] or omega0 > omegas[-1]:
        raise GridRangeError(
            f"omega0 {omega0:g} outside swept range [{omegas[0]:g}, {omegas[-1]:g}]"
        )
    interp = CubicHermite(omegas, tarc_values)
    if float(interp(omega0)) >= gamma_max:
        raise BandEdgeError(
            f"TARC at omega0 already exceeds gamma_max {gamma_max:g}; no band", side="center"
        )

    center = int(np.searchsorted(omegas, omega0))

    def edge(direction: int) -> float:
        idx = center if direction > 0 else center - 1
        prev_x = omega0
        while 0 <= idx < omegas.size:
            if tarc_values[idx] >= gamma_max:
                lo, hi = (prev_x, omegas[idx]) if direction > 0 else (omegas[idx], prev_x)
                return _bisect(interp, lo, hi, gamma_max, rising=direction > 0)
            prev_x = omegas[idx]
            idx += direction
        side = "upper" if direction > 0 else "lower"
        raise BandEdgeError(
            f"TARC never reaches gamma_max {gamma_max:g} on the {side} side of the sweep; "
            "widen the span", side=side,
        )

    w_plus = edge(+1)
    w_minus = edge(-1)
    fbw = (w_plus - w_minus) / omega0

    inside = (omegas > w_minus) & (omegas < w_plus)
    idx = np.flatnonzero(inside)
    n_minima = 0
    for i in idx:
        if 0 < i < omegas.size - 1 and tarc_values[i] < gamma_max:
            if tarc_values[i] < tarc_values[i - 1] and tarc_values[i] < tarc_values[i + 1]:
                n_minima += 1
    off_center = abs(w_plus + w_minus - 2.0 * omega0) / omega0 > 0.2 * fbw
    return SweptBandwidth(
        fbw=fbw,
        omega_minus=w_minus,
        omega_plus=w_plus,
        double_resonance=off_center or n_minima > 1,
        n_minima=n_minima,
    )


def _bisect(interp, lo: float, hi: float, level: float, rising: bool) -> float:
    """Find the threshold crossing inside [lo, hi] to 1e-10 relative width."""
    f_lo = float(interp(lo)) - level
    for _ in range(200):
        if hi - lo <= 1e-10 * max(abs(lo), abs(hi)):
            break
        mid = 0.5 * (lo + hi)
        f_mid = float(interp(mid)) - level
        # Keep the sub-interval that still brackets the crossing.
        if (f_lo < 0.0) == (f_mid < 0.0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
