"""Multiport antenna Q factors and bandwidth prediction from one frequency.

The package couples a thin-wire method-of-moments solver for parallel dipole
arrays with a port-reduction layer, per-port shunt matching, and the Q and
bandwidth estimators built on frequency derivatives of the port admittance.
Externally measured or simulated networks enter through a Touchstone reader
and run through the same matched-Q pipeline.
"""

__version__ = "0.1.0"

from .matching import MatchingState, SynthesisError, synthesize_match, tarc, waves
from .momwire import (
    AssemblyError,
    GeometryError,
    LossModel,
    MoMSystem,
    SingularSystemError,
    Wire,
    WireArrayGeometry,
    assemble,
    impedance_derivative,
    load_geometry,
    loss_for_efficiency,
    powers,
    save_geometry,
    solve_current,
)
from .netparam import (
    ConversionError,
    MultiportNetwork,
    TouchstoneParseError,
    from_samples,
    parse_touchstone,
    sample_at,
    sampled_derivatives,
    to_admittance,
    to_impedance,
    to_scattering,
    write_touchstone,
)
from .portreduce import (
    PortExcitation,
    PortReduction,
    expand_voltage,
    port_admittance,
    port_admittance_derivative,
    port_admittance_second_derivative,
    reduce_matrix,
)
from .qcore import (
    BandEdgeError,
    QReport,
    UnboundedBandwidthError,
    UnmatchedStateError,
    eta_second_derivative,
    fbw_predict,
    fbw_sweep,
    q_rad_mom,
    q_rad_port,
    q_tarc,
    q_z,
    q_zm,
    stored_energies,
    tarc_approx,
)
from .scenarios import (
    Scenario,
    ScenarioResult,
    analyze_network,
    feeding_vector,
    parallel_dipole_array,
    run_many,
    run_scenario,
)

__all__ = [
    "__version__",
    "AssemblyError",
    "BandEdgeError",
    "ConversionError",
    "GeometryError",
    "LossModel",
    "MatchingState",
    "MoMSystem",
    "MultiportNetwork",
    "PortExcitation",
    "PortReduction",
    "QReport",
    "Scenario",
    "ScenarioResult",
    "SingularSystemError",
    "SynthesisError",
    "TouchstoneParseError",
    "UnboundedBandwidthError",
    "UnmatchedStateError",
    "Wire",
    "WireArrayGeometry",
    "analyze_network",
    "assemble",
    "eta_second_derivative",
    "expand_voltage",
    "fbw_predict",
    "fbw_sweep",
    "feeding_vector",
    "from_samples",
    "impedance_derivative",
    "load_geometry",
    "loss_for_efficiency",
    "parallel_dipole_array",
    "parse_touchstone",
    "port_admittance",
    "port_admittance_derivative",
    "port_admittance_second_derivative",
    "powers",
    "q_rad_mom",
    "q_rad_port",
    "q_tarc",
    "q_z",
    "q_zm",
    "reduce_matrix",
    "run_many",
    "run_scenario",
    "sample_at",
    "sampled_derivatives",
    "save_geometry",
    "scenarios",
    "solve_current",
    "stored_energies",
    "synthesize_match",
    "tarc",
    "tarc_approx",
    "to_admittance",
    "to_impedance",
    "to_scattering",
    "waves",
    "write_touchstone",
]
