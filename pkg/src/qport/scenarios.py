"""Scenario construction and end-to-end evaluation.

A scenario bundles a wire-array geometry, a feeding vector, and sweep
settings.  Running one produces the full Q report, the swept TARC table, and
optionally the bandwidth-agreement table over a grid of reflection ceilings.
The port-admittance sweep is feeding independent, so parameter studies reuse
it across feedings instead of reassembling the operator.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__, matching, momwire, portreduce, qcore
from .momwire import C0, LossModel, Wire, WireArrayGeometry

_FIXED_FEEDINGS = {
    "in-phase": (1.0, 1.0),
    "out-of-phase": (1.0, -1.0),
    "triangle": (1.0, 2.0, 3.0, 2.0, 1.0),
    "binomial": (1.0, 4.0, 6.0, 4.0, 1.0),
    "chebyshev": (1.0, 1.61, 1.94, 1.61, 1.0),
}

FEEDING_NAMES = ("in-phase", "out-of-phase", "uniform") + tuple(
    name for name in _FIXED_FEEDINGS if name not in ("in-phase", "out-of-phase")
)


def feeding_vector(name: str, n_ports: int) -> np.ndarray:
    """Named excitation vector, checked against the port count."""
    if name == "uniform":
        return np.ones(n_ports, dtype=np.complex128)
    try:
        vec = _FIXED_FEEDINGS[name]
    except KeyError:
        raise KeyError(
            f"unknown feeding {name!r}; choose from {', '.join(FEEDING_NAMES)}"
        ) from None
    if len(vec) != n_ports:
        raise ValueError(
            f"feeding {name!r} drives {len(vec)} ports but the geometry has {n_ports}"
        )
    return np.asarray(vec, dtype=np.complex128)


def parallel_dipole_array(
    n_wires: int,
    spacing: float,
    f0: float,
    length: float | None = None,
    radius: float | None = None,
    segments: int = 32,
) -> WireArrayGeometry:
    """Equidistant parallel dipoles, each center fed, sized from f0.

    Defaults follow the usual canonical array: half-wave length and a
    wavelength/1000 radius at the design frequency.
    """
    lam0 = C0 / f0
    length = lam0 / 2.0 if length is None else length
    radius = lam0 / 1000.0 if radius is None else radius
    wires = []
    for i in range(n_wires):
        x = (i - 0.5 * (n_wires - 1)) * spacing
        wires.append(
            Wire(
                length=length,
                radius=radius,
                center=(x, 0.0, 0.0),
                axis=(0.0, 0.0, 1.0),
                segments=segments,
                port_segment=segments // 2,
            )
        )
    return WireArrayGeometry(wires=tuple(wires))


@dataclass(frozen=True, eq=False)
class Scenario:
    """One analysis case: geometry, feeding, and sweep settings."""

    name: str
    geometry: WireArrayGeometry
    f0: float
    feeding: np.ndarray
    gamma_max: float = 0.2
    span: float = 0.1
    points: int = 201
    loss: LossModel | None = None
    match: matching.MatchingState | None = None

    def __post_init__(self):
        if not self.f0 > 0.0:
            raise ValueError("f0 must be positive")
        v = np.asarray(self.feeding, dtype=np.complex128)
        if v.shape != (self.geometry.n_ports,):
            raise ValueError(
                f"feeding has {v.size} entries for {self.geometry.n_ports} ports"
            )
        object.__setattr__(self, "feeding", v)
        if not (0.0 < self.gamma_max < 1.0):
            raise ValueError("gamma_max must lie in (0, 1)")
        if not (0.0 < self.span <= 0.5):
            raise ValueError("span must lie in (0, 0.5]")
        if self.points < 21 or self.points % 2 == 0:
            raise ValueError("points must be odd and at least 21 so omega0 is on-grid")

    @property
    def omega0(self) -> float:
        return 2.0 * math.pi * self.f0

    def sweep_omegas(self) -> np.ndarray:
        return self.omega0 * np.linspace(1.0 - self.span, 1.0 + self.span, self.points)


@dataclass(frozen=True)
class PortCurve:
    """Feeding-independent port data along a frequency sweep."""

    omegas: np.ndarray
    y0: np.ndarray
    loss_reduced: np.ndarray | None


def sweep_port_admittance(
    geometry: WireArrayGeometry,
    loss: LossModel | None,
    reduction: portreduce.PortReduction,
    omegas: np.ndarray,
) -> PortCurve:
    """Port admittance (and reduced loss matrix when lossy) at every omega."""
    n = geometry.n_ports
    lossless = loss is None or loss.is_lossless()
    y0 = np.empty((omegas.size, n, n), dtype=np.complex128)
    lred = None if lossless else np.empty_like(y0)
    for i, omega in enumerate(omegas):
        system = momwire.assemble(geometry, float(omega))
        y0[i] = portreduce.port_admittance(system, loss, reduction)
        if lred is not None:
            lred[i] = portreduce.reduce_matrix(
                loss.matrix(geometry.n_basis), system, loss, reduction
            )
    return PortCurve(omegas=np.asarray(omegas, dtype=float), y0=y0, loss_reduced=lred)


def tarc_curve(
    curve: PortCurve, match: matching.MatchingState, v: np.ndarray
) -> np.ndarray:
    """Swept TARC of a fixed feeding behind fixed matching elements."""
    out = np.empty(curve.omegas.size)
    for i, omega in enumerate(curve.omegas):
        pair = matching.waves(curve.y0[i], match, float(omega), v)
        p_loss = 0.0
        if curve.loss_reduced is not None:
            p_loss = 0.5 * float(
                np.real(np.conj(v) @ (curve.loss_reduced[i] @ v))
            )
        out[i] = matching.tarc(pair, p_loss)
    return out


@dataclass(frozen=True)
class SweepTable:
    """Plot-ready swept TARC data with the single-resonance model curve."""

    omegas: np.ndarray
    tarc: np.ndarray
    tarc_model: np.ndarray


@dataclass(frozen=True)
class AgreementRow:
    """Predicted versus swept fractional bandwidth at one reflection ceiling."""

    gamma_max: float
    f_predicted: float
    f_swept: float | None
    double_resonance: bool | None
    note: str = ""

    @property
    def ratio(self) -> float | None:
        if self.f_swept is None or self.f_predicted == 0.0:
            return None
        return self.f_swept / self.f_predicted


@dataclass(frozen=True)
class ScenarioResult:
    """Everything a scenario run produces, including partial failures.

    ``scenario`` is None for runs driven by sampled network data instead of
    a generated geometry.
    """

    scenario: Scenario | None
    report: qcore.QReport | None
    match: matching.MatchingState | None
    table: SweepTable | None
    agreement: tuple[AgreementRow, ...] | None
    diagnostics: dict
    provenance: dict
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def _active_admittances(y0: np.ndarray, v: np.ndarray) -> list:
    """Per-port active admittance (y0 v)_p / v_p; None where the drive is zero."""
    yv = y0 @ v
    out = []
    for p in range(v.size):
        if v[p] == 0:
            out.append(None)
        else:
            val = yv[p] / v[p]
            out.append([float(val.real), float(val.imag)])
    return out


def _q_rad_sampled(
    y0: np.ndarray, dy0: np.ndarray, v: np.ndarray, omega0: float
) -> float | None:
    """Radiation Q from sampled port data via dZ = -Z dY Z.

    The reactance-derivative quadratic form acts on port currents, so the
    voltage-space matrix handed to the shared Q routine is the congruence
    y0^H Im(dZ) y0.  None when the admittance is singular at omega0.
    """
    try:
        z0 = np.linalg.inv(y0)
    except np.linalg.LinAlgError:
        return None
    dz = -z0 @ dy0 @ z0
    w = y0.conj().T @ dz.imag @ y0
    return qcore.q_rad_port(y0, w, v, omega0)


def _provenance(scenario: Scenario, match: matching.MatchingState | None) -> dict:
    loss = scenario.loss
    return {
        "package": f"qport {__version__}",
        "geometry_sha256": momwire.geometry_fingerprint(scenario.geometry),
        "f0_hz": scenario.f0,
        "feeding": [[float(c.real), float(c.imag)] for c in scenario.feeding],
        "loss_model": "none" if loss is None or loss.is_lossless() else "resistance-matrix",
        "derivative_method": {
            "dy0": "analytic frequency derivative of the assembled operator",
            "ddy0": "central difference of the analytic first derivative",
        },
        "match": None if match is None else match.as_dict(),
    }


def run_scenario(
    scenario: Scenario,
    with_sweep: bool = True,
    agreement_gammas: np.ndarray | None = None,
    port_curve: PortCurve | None = None,
) -> ScenarioResult:
    """Evaluate one scenario end to end.

    Match synthesis failures do not raise; they come back as a result with
    ``error`` set and whatever diagnostics survive without a matched state.
    A precomputed ``port_curve`` (from ``sweep_port_admittance`` over
    ``scenario.sweep_omegas()``) is reused instead of reassembling.
    """
    geometry = scenario.geometry
    loss = scenario.loss
    v = scenario.feeding
    omega0 = scenario.omega0
    reduction = portreduce.PortReduction.from_geometry(geometry)

    system0 = momwire.assemble(geometry, omega0)
    dz0 = momwire.impedance_derivative(geometry, omega0)
    y0 = portreduce.port_admittance(system0, loss, reduction)
    dy0 = portreduce.port_admittance_derivative(system0, loss, reduction, dz0)

    excitation = portreduce.expand_voltage(reduction, portreduce.PortExcitation(v))
    current = momwire.solve_current(system0, loss, excitation)
    pw = momwire.powers(system0, loss, current)
    energies = qcore.stored_energies(system0, dz0, current)
    q_rad = qcore.q_rad_mom(energies, omega0)
    w_red = portreduce.reduce_matrix(dz0.imag, system0, loss, reduction)
    eta_max = pw.p_rad / (pw.p_rad + pw.p_loss)

    diagnostics = {
        "p_rad_w": pw.p_rad,
        "p_loss_w": pw.p_loss,
        "eta_rad": eta_max,
        "q_zm": qcore.q_zm(y0, dy0, v, omega0),
        "q_rad": q_rad,
        "q_rad_port": qcore.q_rad_port(y0, w_red, v, omega0),
        "indefinite_energy": energies.indefinite,
        "y_active": _active_admittances(y0, v),
    }

    try:
        match = scenario.match or matching.synthesize_match(y0, v, omega0)
    except matching.SynthesisError as exc:
        return ScenarioResult(
            scenario=scenario,
            report=None,
            match=None,
            table=None,
            agreement=None,
            diagnostics=diagnostics,
            provenance=_provenance(scenario, None),
            error=f"match synthesis failed: {exc}",
        )

    ddy0 = portreduce.port_admittance_second_derivative(
        geometry, omega0, loss, reduction
    )
    flags: dict = {}
    try:
        q_t = qcore.q_tarc(y0, dy0, match, v, omega0)
    except qcore.UnmatchedStateError as exc:
        diagnostics["eta_second_derivative"] = qcore.eta_second_derivative(
            y0, dy0, ddy0, match, v, omega0
        )
        return ScenarioResult(
            scenario=scenario,
            report=None,
            match=match,
            table=None,
            agreement=None,
            diagnostics=diagnostics,
            provenance=_provenance(scenario, match),
            error=f"supplied matching state is detuned: {exc}",
        )
    diagnostics["eta_second_derivative"] = qcore.eta_second_derivative(
        y0, dy0, ddy0, match, v, omega0
    )
    if energies.indefinite:
        flags["indefinite_energy"] = True

    q_z = None
    if geometry.n_ports == 1:
        q_z = qcore.q_z(y0[0, 0], dy0[0, 0], match, omega0)
    f_pred = qcore.fbw_predict(q_t, scenario.gamma_max)

    table = None
    f_swept = None
    q_fbw = None
    double_res = None
    agreement = None
    if with_sweep:
        omegas = scenario.sweep_omegas()
        if port_curve is None:
            port_curve = sweep_port_admittance(geometry, loss, reduction, omegas)
        curve = tarc_curve(port_curve, match, v)
        model = qcore.tarc_approx(q_t, omega0, port_curve.omegas, eta_max)
        table = SweepTable(omegas=port_curve.omegas, tarc=curve, tarc_model=model)
        try:
            swept = qcore.fbw_sweep(port_curve.omegas, curve, omega0, scenario.gamma_max)
            f_swept = swept.fbw
            q_fbw = 2.0 * scenario.gamma_max / swept.fbw
            double_res = swept.double_resonance
        except qcore.BandEdgeError as exc:
            flags["band_edge"] = f"{exc.side}: {exc}"
        if agreement_gammas is not None:
            agreement = tuple(
                _agreement_row(port_curve.omegas, curve, omega0, q_t, float(g))
                for g in agreement_gammas
            )

    report = qcore.QReport(
        omega0=omega0,
        q_rad=q_rad,
        q_tarc=q_t,
        q_zm=diagnostics["q_zm"],
        q_z=q_z,
        f_predicted=f_pred,
        eta_max=eta_max,
        gamma_max=scenario.gamma_max,
        f_swept=f_swept,
        q_fbw=q_fbw,
        double_resonance=double_res,
        flags=flags,
    )
    return ScenarioResult(
        scenario=scenario,
        report=report,
        match=match,
        table=table,
        agreement=agreement,
        diagnostics=diagnostics,
        provenance=_provenance(scenario, match),
    )


def _agreement_row(
    omegas: np.ndarray, curve: np.ndarray, omega0: float, q: float, gamma: float
) -> AgreementRow:
    f_pred = qcore.fbw_predict(q, gamma)
    try:
        swept = qcore.fbw_sweep(omegas, curve, omega0, gamma)
    except qcore.BandEdgeError as exc:
        return AgreementRow(
            gamma_max=gamma,
            f_predicted=f_pred,
            f_swept=None,
            double_resonance=None,
            note=str(exc),
        )
    return AgreementRow(
        gamma_max=gamma,
        f_predicted=f_pred,
        f_swept=swept.fbw,
        double_resonance=swept.double_resonance,
    )


def analyze_network(
    net,
    v: np.ndarray,
    omega0: float,
    gamma_max: float = 0.2,
    agreement_gammas: np.ndarray | None = None,
) -> ScenarioResult:
    """Q analysis of sampled network data instead of a generated geometry.

    Derivatives come from centered differences on the interpolated admittance
    curve, and the radiation Q uses the port reactance derivative recovered
    through dZ = -Z dY Z since sampled data carries no basis-level operator.
    Both limitations are labelled in the report flags and the provenance
    block.
    """
    from . import netparam

    y_net = netparam.to_admittance(net)
    v = np.asarray(v, dtype=np.complex128)
    if v.shape != (net.n_ports,):
        raise ValueError(f"feeding has {v.size} entries for {net.n_ports} ports")
    y0, dy0, ddy0 = netparam.sampled_derivatives(y_net, omega0)

    provenance = {
        "package": f"qport {__version__}",
        "input_kind": "sampled-network",
        "derivative_method": {
            "dy0": "sampled-data finite difference",
            "ddy0": "sampled-data finite difference",
        },
        "q_rad_method": "sampled reactance derivative",
        "match": None,
    }
    diagnostics = {
        "q_zm": qcore.q_zm(y0, dy0, v, omega0),
        "q_rad_sampled": _q_rad_sampled(y0, dy0, v, omega0),
        "y_active": _active_admittances(y0, v),
    }
    try:
        match = matching.synthesize_match(y0, v, omega0)
    except matching.SynthesisError as exc:
        return ScenarioResult(
            scenario=None,
            report=None,
            match=None,
            table=None,
            agreement=None,
            diagnostics=diagnostics,
            provenance=provenance,
            error=f"match synthesis failed: {exc}",
        )
    provenance["match"] = match.as_dict()

    q_t = qcore.q_tarc(y0, dy0, match, v, omega0)
    diagnostics["eta_second_derivative"] = qcore.eta_second_derivative(
        y0, dy0, ddy0, match, v, omega0
    )
    q_z = None
    if net.n_ports == 1:
        q_z = qcore.q_z(y0[0, 0], dy0[0, 0], match, omega0)

    omegas = y_net.grid.omegas
    curve = np.empty(omegas.size)
    for i, omega in enumerate(omegas):
        curve[i] = matching.tarc(matching.waves(y_net.data[i], match, float(omega), v))
    model = qcore.tarc_approx(q_t, omega0, omegas, 1.0)
    table = SweepTable(omegas=omegas, tarc=curve, tarc_model=model)

    flags = {
        "q_rad_method": "sampled reactance derivative",
        "derivatives": "sampled-data finite difference",
    }
    f_swept = None
    q_fbw = None
    double_res = None
    try:
        swept = qcore.fbw_sweep(omegas, curve, omega0, gamma_max)
        f_swept = swept.fbw
        q_fbw = 2.0 * gamma_max / swept.fbw
        double_res = swept.double_resonance
    except qcore.BandEdgeError as exc:
        flags["band_edge"] = f"{exc.side}: {exc}"

    agreement = None
    if agreement_gammas is not None:
        agreement = tuple(
            _agreement_row(omegas, curve, omega0, q_t, float(g))
            for g in agreement_gammas
        )

    report = qcore.QReport(
        omega0=omega0,
        q_rad=diagnostics["q_rad_sampled"],
        q_tarc=q_t,
        q_zm=diagnostics["q_zm"],
        q_z=q_z,
        f_predicted=qcore.fbw_predict(q_t, gamma_max),
        eta_max=1.0,
        gamma_max=gamma_max,
        f_swept=f_swept,
        q_fbw=q_fbw,
        double_resonance=double_res,
        flags=flags,
    )
    return ScenarioResult(
        scenario=None,
        report=report,
        match=match,
        table=table,
        agreement=agreement,
        diagnostics=diagnostics,
        provenance=provenance,
    )


def run_many(scenarios, jobs: int | None = None) -> list[ScenarioResult]:
    """Run scenarios concurrently, results in input order, errors captured.

    Rows never raise: any exception is boxed into a failed ScenarioResult so
    a long parameter sweep survives individual bad rows.
    """
    scenarios = list(scenarios)

    def one(sc: Scenario) -> ScenarioResult:
        try:
            return run_scenario(sc)
        except Exception as exc:  # noqa: BLE001 - row isolation is the point
            try:
                provenance = _provenance(sc, None)
            except Exception:  # noqa: BLE001 - the scenario itself may be broken
                provenance = {"error": "provenance unavailable"}
            return ScenarioResult(
                scenario=sc,
                report=None,
                match=None,
                table=None,
                agreement=None,
                diagnostics={},
                provenance=provenance,
                error=f"{type(exc).__name__}: {exc}",
            )

    if jobs is None:
        jobs = min(4, len(scenarios)) or 1
    if jobs <= 1 or len(scenarios) <= 1:
        return [one(sc) for sc in scenarios]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(one, scenarios))
