"""Per-port shunt matching and incident/reflected wave decomposition.

Each port gets one shunt susceptance and a real reference resistance chosen
so that the reflected wave vanishes at the design frequency for the chosen
excitation.  Off the design frequency the susceptance follows the physical
element law of the component that realizes it: a capacitor grows as omega C,
an inductor falls as -1/(omega L).  The reference resistances stay fixed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CAPACITOR = "capacitor"
INDUCTOR = "inductor"


class SynthesisError(RuntimeError):
    """Raised when a port cannot be matched with a passive shunt element."""


@dataclass(frozen=True)
class MatchingState:
    """Synthesized per-port shunt elements and reference resistances.

    Attributes:
        r0: per-port reference resistance in ohm.
        element: per-port element kind, ``capacitor`` or ``inductor``.
        value: element value, farad for capacitors and henry for inductors.
        omega_ref: angular frequency the match was synthesized at.
    """

    r0: np.ndarray
    element: tuple[str, ...]
    value: np.ndarray
    omega_ref: float

    def susceptance(self, omega: float) -> np.ndarray:
        """Shunt susceptance of every element at omega per its element law."""
        out = np.empty(len(self.element))
        for p, kind in enumerate(self.element):
            if kind == CAPACITOR:
                out[p] = omega * self.value[p]
            else:
                out[p] = -1.0 / (omega * self.value[p])
        return out

    def susceptance_derivative(self, omega: float) -> np.ndarray:
        out = np.empty(len(self.element))
        for p, kind in enumerate(self.element):
            if kind == CAPACITOR:
                out[p] = self.value[p]
            else:
                out[p] = 1.0 / (omega * omega * self.value[p])
        return out

    def susceptance_second_derivative(self, omega: float) -> np.ndarray:
        out = np.zeros(len(self.element))
        for p, kind in enumerate(self.element):
            if kind == INDUCTOR:
                out[p] = -2.0 / (omega ** 3 * self.value[p])
        return out

    def as_dict(self) -> dict:
        return {
            "omega_ref": self.omega_ref,
            "ports": [
                {"r0_ohm": float(self.r0[p]), "element": self.element[p],
                 "value": float(self.value[p]),
                 "unit": "F" if self.element[p] == CAPACITOR else "H"}
                for p in range(len(self.element))
            ],
        }


@dataclass(frozen=True)
class WavePair:
    """Incident and reflected wave amplitudes in sqrt(W) units."""

    a: np.ndarray
    b: np.ndarray

    @property
    def p_incident(self) -> float:
        return 0.5 * float(np.vdot(self.a, self.a).real)

    @property
    def p_reflected(self) -> float:
        return 0.5 * float(np.vdot(self.b, self.b).real)


def synthesize_match(y0: np.ndarray, v: np.ndarray, omega0: float) -> MatchingState:
    """Choose shunt elements and references that zero the reflection at omega0.

    The active input admittance seen at port p under the excitation v is
    (y0 v)_p / v_p; its imaginary part is cancelled by the shunt element and
    its real part sets the reference resistance.

    Raises:
        SynthesisError: when some port sees a nonpositive conductance or a
            zero drive, naming the offending ports.
    """
    v = np.asarray(v, dtype=np.complex128)
    dead = [p for p in range(v.size) if v[p] == 0]
    if dead:
        raise SynthesisError(f"ports {dead} have zero drive; active admittance undefined")
    y_in = (y0 @ v) / v
    bad = [p for p in range(v.size) if not y_in[p].real > 0.0]
    if bad:
        raise SynthesisError(
            f"ports {bad} see nonpositive active conductance {[y_in[p].real for p in bad]}; "
            "no passive shunt match exists for this feeding"
        )
    b_l = -y_in.imag
    element, value = [], np.empty(v.size)
    for p in range(v.size):
        if b_l[p] >= 0.0:
            element.append(CAPACITOR)
            value[p] = b_l[p] / omega0
        else:
            element.append(INDUCTOR)
            value[p] = -1.0 / (omega0 * b_l[p])
    return MatchingState(
        r0=1.0 / y_in.real, element=tuple(element), value=value, omega_ref=omega0
    )


def waves(y0: np.ndarray, match: MatchingState, omega: float, v: np.ndarray) -> WavePair:
    """Incident and reflected waves of the shunted antenna at omega.

    The port voltages v are held frequency independent; the admittance of the
    shunt elements follows their element laws.
    """
    v = np.asarray(v, dtype=np.complex128)
    lam = np.sqrt(match.r0)
    yv = y0 @ v + 1j * match.susceptance(omega) * v
    a = 0.5 * (v / lam + lam * yv)
    b = 0.5 * (v / lam - lam * yv)
    return WavePair(a=a, b=b)


def tarc(wave_pair: WavePair, p_loss: float = 0.0) -> float:
    """Total active reflection coefficient, with ohmic loss counted as lost.

    TARC^2 = 1 - eta where eta is radiated over incident power; for lossless
    systems this collapses to |b| / |a|.
    """
    p_in = wave_pair.p_incident
    if not p_in > 0.0:
        raise ValueError("incident power vanishes; TARC undefined")
    ratio = wave_pair.p_reflected / p_in + p_loss / p_in
    return float(np.sqrt(np.clip(ratio, 0.0, 1.0)))
