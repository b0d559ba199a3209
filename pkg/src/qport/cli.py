"""Command line front end.

Four subcommands: ``dipoles2`` and ``dipoles5`` generate the canonical
parallel-dipole scenarios, ``analyze`` runs the pipeline on external
Touchstone data or a saved geometry, and ``sweep`` tabulates Q against the
element spacing.  Every run is deterministic; errors leave a one-line JSON
summary on stderr and a nonzero exit code.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, matching, momwire, netparam, plots, portreduce, qcore, scenarios
from ._interp import GridRangeError

AGREEMENT_GAMMAS = np.round(np.linspace(0.05, 0.5, 19), 6)

_CONFIG_KEYS = {
    "f0",
    "gamma_max",
    "span",
    "points",
    "segments",
    "d_over_lambda",
    "feeding",
    "efficiency",
    "jobs",
    "wires",
}

TARC_CSV_HEADER = ["omega_rad_per_s", "frequency_hz", "tarc", "tarc_model"]
AGREEMENT_CSV_HEADER = [
    "gamma_max",
    "fbw_predicted",
    "fbw_swept",
    "ratio",
    "double_resonance",
    "note",
]
SWEEP_CSV_HEADER = [
    "d_over_lambda",
    "q_tarc",
    "q_zm",
    "q_rad",
    "q_z",
    "fbw_predicted",
    "fbw_swept",
    "q_fbw",
    "double_resonance",
    "eta_max",
    "error",
]


class CliError(Exception):
    """User-facing failure with a machine-readable kind and context."""

    def __init__(self, kind: str, message: str, context: dict | None = None):
        super().__init__(message)
        self.kind = kind
        self.context = context or {}


def _emit_error(kind: str, message: str, context: dict | None = None) -> None:
    payload = {"error": {"type": kind, "message": message}}
    if context:
        payload["error"]["context"] = context
    print(json.dumps(payload, default=_json_default), file=sys.stderr)


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(value) for value in row])


def _write_tarc_csv(path: Path, table: scenarios.SweepTable) -> None:
    rows = (
        (float(w), float(w) / (2.0 * math.pi), float(t), float(m))
        for w, t, m in zip(table.omegas, table.tarc, table.tarc_model)
    )
    _write_csv(path, TARC_CSV_HEADER, rows)


def _write_agreement_csv(path: Path, rows) -> None:
    _write_csv(
        path,
        AGREEMENT_CSV_HEADER,
        (
            (
                row.gamma_max,
                row.f_predicted,
                row.f_swept,
                row.ratio,
                row.double_resonance,
                row.note,
            )
            for row in rows
        ),
    )


def _sibling(path: Path, tag: str, ext: str) -> Path:
    return path.parent / f"{path.stem}{tag}{ext}"


def _load_config(path: Path | None) -> dict:
    if path is None:
        return {}
    try:
        cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError("config", f"cannot read config file: {exc}") from exc
    if not isinstance(cfg, dict):
        raise CliError("config", "config file must hold a JSON object")
    unknown = sorted(set(cfg) - _CONFIG_KEYS)
    if unknown:
        raise CliError(
            "config",
            f"unknown config keys: {', '.join(unknown)}",
            {"allowed": sorted(_CONFIG_KEYS)},
        )
    return cfg


def _merged(args, key: str, default=None):
    """Flag wins over config file wins over the built-in default."""
    value = getattr(args, key, None)
    if value is not None:
        return value
    return args.config_values.get(key, default)


def _parse_feeding(text: str, n_ports: int) -> np.ndarray:
    text = text.strip()
    if text in scenarios.FEEDING_NAMES:
        return scenarios.feeding_vector(text, n_ports)
    parts = [p.replace(" ", "") for p in text.split(",") if p.strip()]
    try:
        vec = np.array([complex(p) for p in parts], dtype=np.complex128)
    except ValueError:
        raise CliError(
            "feeding",
            f"cannot parse feeding {text!r}; use a preset name "
            f"({', '.join(scenarios.FEEDING_NAMES)}) or comma-separated complex numbers",
        ) from None
    if vec.size != n_ports:
        raise CliError("feeding", f"feeding has {vec.size} entries for {n_ports} ports")
    if not np.any(vec):
        raise CliError("feeding", "feeding vector is identically zero")
    return vec


def _loss_for(args, geometry, f0: float):
    eta = _merged(args, "efficiency")
    if eta is None:
        return None
    if not (0.0 < eta <= 1.0):
        raise CliError("precondition", "efficiency must lie in (0, 1]")
    if eta == 1.0:
        return None
    system = momwire.assemble(geometry, 2.0 * math.pi * f0)
    return momwire.loss_for_efficiency(system, eta)


def _dipole_scenario(args, n_wires: int, feeding_name: str, bounds) -> tuple:
    d = _merged(args, "d_over_lambda")
    if d is None:
        raise CliError("precondition", "--d-over-lambda is required (flag or config)")
    d = float(d)
    if not bounds[0] <= d <= bounds[1]:
        raise CliError(
            "precondition",
            f"d_over_lambda must lie in [{bounds[0]}, {bounds[1]}], got {d}",
        )
    f0 = float(_merged(args, "f0", 1e9))
    segments = int(_merged(args, "segments", 32))
    lam0 = momwire.C0 / f0
    geometry = scenarios.parallel_dipole_array(n_wires, d * lam0, f0, segments=segments)
    scenario = scenarios.Scenario(
        name=f"dipoles{n_wires}-{feeding_name}-d{d:g}",
        geometry=geometry,
        f0=f0,
        feeding=scenarios.feeding_vector(feeding_name, n_wires),
        gamma_max=float(_merged(args, "gamma_max", 0.2)),
        span=float(_merged(args, "span", 0.1)),
        points=int(_merged(args, "points", 201)),
        loss=_loss_for(args, geometry, f0),
    )
    return scenario, d


def _scenario_block(res: scenarios.ScenarioResult, feeding_name: str, extra: dict) -> dict:
    block = dict(extra)
    block["feeding_name"] = feeding_name
    if res.scenario is not None:
        sc = res.scenario
        block.update(
            name=sc.name,
            f0_hz=sc.f0,
            gamma_max=sc.gamma_max,
            span=sc.span,
            points=sc.points,
            n_ports=sc.geometry.n_ports,
            feeding=[[float(c.real), float(c.imag)] for c in sc.feeding],
        )
    return block


def _write_report(
    path: Path,
    command: str,
    res: scenarios.ScenarioResult,
    scenario_block: dict,
    figures: list[Path],
) -> None:
    payload = {
        "command": command,
        "scenario": scenario_block,
        "report": None if res.report is None else res.report.as_dict(),
        "match": None if res.match is None else res.match.as_dict(),
        "diagnostics": res.diagnostics,
        "provenance": res.provenance,
        "figures": [str(p) for p in figures],
        "error": res.error,
    }
    Path(path).write_text(
        json.dumps(payload, indent=2, default=_json_default) + "\n", encoding="utf-8"
    )


def _emit_outputs(args, command: str, res: scenarios.ScenarioResult, scenario_block: dict) -> int:
    written: list[str] = []
    if args.out is not None and res.table is not None:
        _write_tarc_csv(args.out, res.table)
        written.append(str(args.out))
    if args.fbw_table is not None and res.agreement is not None:
        _write_agreement_csv(args.fbw_table, res.agreement)
        written.append(str(args.fbw_table))
    figures: list[Path] = []
    if args.report is not None:
        if not args.no_figures and res.table is not None:
            omega0 = res.report.omega0 if res.report else None
            if omega0 is None and res.scenario is not None:
                omega0 = res.scenario.omega0
            gamma = scenario_block.get("gamma_max", 0.2)
            if omega0 is not None:
                figures.append(
                    plots.tarc_figure(
                        res.table, omega0, gamma, _sibling(args.report, "_tarc", ".png")
                    )
                )
            if res.agreement:
                figures.append(
                    plots.agreement_figure(
                        res.agreement, _sibling(args.report, "_fbw", ".png")
                    )
                )
        _write_report(args.report, command, res, scenario_block, figures)
        written.append(str(args.report))
    written.extend(str(p) for p in figures)

    if res.error is not None:
        _emit_error("scenario", res.error, {"written": written})
        return 1
    rep = res.report
    parts = [
        f"q_tarc={rep.q_tarc:.6g}",
        f"q_zm={rep.q_zm:.6g}",
        f"q_rad={rep.q_rad:.6g}" if rep.q_rad is not None else "q_rad=n/a",
        f"fbw_predicted={rep.f_predicted:.6g}",
        f"fbw_swept={rep.f_swept:.6g}" if rep.f_swept is not None else "fbw_swept=n/a",
    ]
    if rep.double_resonance:
        parts.append("double_resonance")
    print(" ".join(parts))
    for name in written:
        print(f"wrote {name}")
    return 0


# --------------------------------------------------------------------------
# Subcommands.
# --------------------------------------------------------------------------

def _run_dipole_command(args, command: str, scenario: scenarios.Scenario,
                        feeding_name: str, d: float) -> int:
    port_curve = None
    exported = None
    if getattr(args, "export_touchstone", None) is not None:
        reduction = portreduce.PortReduction.from_geometry(scenario.geometry)
        port_curve = scenarios.sweep_port_admittance(
            scenario.geometry, scenario.loss, reduction, scenario.sweep_omegas()
        )
        net = netparam.from_samples(port_curve.omegas, port_curve.y0, "y", 50.0)
        netparam.write_touchstone(net, args.export_touchstone)
        exported = args.export_touchstone
    res = scenarios.run_scenario(
        scenario,
        agreement_gammas=AGREEMENT_GAMMAS if args.fbw_table is not None else None,
        port_curve=port_curve,
    )
    block = _scenario_block(res, feeding_name, {"d_over_lambda": d})
    code = _emit_outputs(args, command, res, block)
    if exported is not None:
        print(f"wrote {exported}")
    return code


def cmd_dipoles2(args) -> int:
    args.config_values = _load_config(args.config)
    feeding_name = _merged(args, "feeding", "in-phase")
    if feeding_name not in ("in-phase", "out-of-phase"):
        raise CliError("precondition", "dipoles2 feeding must be in-phase or out-of-phase")
    scenario, d = _dipole_scenario(args, 2, feeding_name, (0.05, 2.0))
    return _run_dipole_command(args, "dipoles2", scenario, feeding_name, d)


def cmd_dipoles5(args) -> int:
    args.config_values = _load_config(args.config)
    feeding_name = _merged(args, "feeding", "triangle")
    if feeding_name not in ("triangle", "binomial", "chebyshev", "uniform"):
        raise CliError(
            "precondition",
            "dipoles5 feeding must be triangle, binomial, chebyshev or uniform",
        )
    scenario, d = _dipole_scenario(args, 5, feeding_name, (0.05, 1.0))
    return _run_dipole_command(args, "dipoles5", scenario, feeding_name, d)


def cmd_analyze(args) -> int:
    args.config_values = _load_config(args.config)
    if (args.touchstone is None) == (args.geometry is None):
        raise CliError("precondition", "analyze needs exactly one of --touchstone or --geometry")
    f0 = _merged(args, "f0")
    if f0 is None:
        raise CliError("precondition", "--f0 is required for analyze (flag or config)")
    f0 = float(f0)
    gamma = float(_merged(args, "gamma_max", 0.2))
    feeding_text = _merged(args, "feeding", "uniform")

    if args.geometry is not None:
        geometry = momwire.load_geometry(args.geometry)
        v = _parse_feeding(feeding_text, geometry.n_ports)
        scenario = scenarios.Scenario(
            name=f"geometry-{Path(args.geometry).stem}",
            geometry=geometry,
            f0=f0,
            feeding=v,
            gamma_max=gamma,
            span=float(_merged(args, "span", 0.1)),
            points=int(_merged(args, "points", 201)),
            loss=_loss_for(args, geometry, f0),
        )
        res = scenarios.run_scenario(
            scenario,
            agreement_gammas=AGREEMENT_GAMMAS if args.fbw_table is not None else None,
        )
        res.provenance["input_sha256"] = _file_sha256(args.geometry)
        block = _scenario_block(res, feeding_text, {"input": str(args.geometry)})
        return _emit_outputs(args, "analyze", res, block)

    net = netparam.parse_touchstone(args.touchstone)
    v = _parse_feeding(feeding_text, net.n_ports)
    res = scenarios.analyze_network(
        net,
        v,
        2.0 * math.pi * f0,
        gamma,
        agreement_gammas=AGREEMENT_GAMMAS if args.fbw_table is not None else None,
    )
    res.provenance["input_sha256"] = _file_sha256(args.touchstone)
    block = {
        "input": str(args.touchstone),
        "feeding_name": feeding_text,
        "feeding": [[float(c.real), float(c.imag)] for c in v],
        "f0_hz": f0,
        "gamma_max": gamma,
        "n_ports": net.n_ports,
    }
    return _emit_outputs(args, "analyze", res, block)


def cmd_sweep(args) -> int:
    args.config_values = _load_config(args.config)
    if args.out is None:
        raise CliError("precondition", "--out CSV path is required for sweep")
    wires = int(_merged(args, "wires", 2))
    if wires < 1:
        raise CliError("precondition", "wires must be positive")
    feeding_name = str(_merged(args, "feeding", "in-phase"))
    start, stop, count = args.d_range
    count = int(count)
    if count < 0:
        raise CliError("precondition", "d range count must be nonnegative")
    ds = np.linspace(float(start), float(stop), count) if count else np.array([])

    f0 = float(_merged(args, "f0", 1e9))
    segments = int(_merged(args, "segments", 32))
    gamma = float(_merged(args, "gamma_max", 0.2))
    span = float(_merged(args, "span", 0.1))
    points = int(_merged(args, "points", 201))
    lam0 = momwire.C0 / f0

    built: list[scenarios.Scenario | None] = []
    build_errors: dict[int, str] = {}
    for i, d in enumerate(ds):
        try:
            geometry = scenarios.parallel_dipole_array(
                wires, float(d) * lam0, f0, segments=segments
            )
            built.append(
                scenarios.Scenario(
                    name=f"sweep-{wires}-{feeding_name}-d{d:g}",
                    geometry=geometry,
                    f0=f0,
                    feeding=scenarios.feeding_vector(feeding_name, wires),
                    gamma_max=gamma,
                    span=span,
                    points=points,
                    loss=_loss_for(args, geometry, f0),
                )
            )
        except Exception as exc:  # noqa: BLE001 - row isolation
            built.append(None)
            build_errors[i] = f"{type(exc).__name__}: {exc}"

    runnable = [sc for sc in built if sc is not None]
    outcomes = scenarios.run_many(runnable, jobs=_merged(args, "jobs"))
    results: list[scenarios.ScenarioResult | None] = []
    it = iter(outcomes)
    for sc in built:
        results.append(next(it) if sc is not None else None)

    rows = []
    failures = []
    for i, (d, res) in enumerate(zip(ds, results)):
        if res is None:
            rows.append((float(d), None, None, None, None, None, None, None, None, None, build_errors[i]))
            failures.append({"index": i, "d_over_lambda": float(d), "message": build_errors[i]})
            continue
        if res.report is None:
            rows.append((float(d), None, None, None, None, None, None, None, None, None, res.error))
            failures.append({"index": i, "d_over_lambda": float(d), "message": res.error})
            continue
        rep = res.report
        rows.append(
            (
                float(d),
                rep.q_tarc,
                rep.q_zm,
                rep.q_rad,
                rep.q_z,
                rep.f_predicted,
                rep.f_swept,
                rep.q_fbw,
                rep.double_resonance,
                rep.eta_max,
                None,
            )
        )
    _write_csv(args.out, SWEEP_CSV_HEADER, rows)
    print(f"wrote {args.out}")

    if args.report is not None:
        figures = []
        if not args.no_figures and any(r is not None and r.report is not None for r in results):
            ok_pairs = [(float(d), r) for d, r in zip(ds, results) if r is not None]
            figures.append(
                plots.sweep_figure(
                    [p for p, _ in ok_pairs],
                    [r for _, r in ok_pairs],
                    "d / lambda0",
                    _sibling(args.report, "_q", ".png"),
                )
            )
        payload = {
            "command": "sweep",
            "scenario": {
                "wires": wires,
                "feeding_name": feeding_name,
                "f0_hz": f0,
                "gamma_max": gamma,
                "span": span,
                "points": points,
                "d_over_lambda": [float(d) for d in ds],
            },
            "rows": [
                None
                if res is None
                else {
                    "d_over_lambda": float(d),
                    "report": None if res.report is None else res.report.as_dict(),
                    "error": res.error,
                    "provenance": res.provenance,
                }
                for d, res in zip(ds, results)
            ],
            "figures": [str(p) for p in figures],
            "failures": failures,
        }
        Path(args.report).write_text(
            json.dumps(payload, indent=2, default=_json_default) + "\n", encoding="utf-8"
        )
        print(f"wrote {args.report}")
        for fig in figures:
            print(f"wrote {fig}")

    if failures:
        _emit_error(
            "row-errors",
            f"{len(failures)} of {len(ds)} sweep rows failed",
            {"rows": failures},
        )
        return 1
    return 0


def _file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# --------------------------------------------------------------------------
# Parser.
# --------------------------------------------------------------------------

def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--f0", type=float, default=None, help="design frequency in Hz (default 1e9)")
    sp.add_argument("--gamma-max", dest="gamma_max", type=float, default=None,
                    help="TARC ceiling defining the band (default 0.2)")
    sp.add_argument("--span", type=float, default=None,
                    help="sweep half-width as a fraction of f0, in (0, 0.5] (default 0.1)")
    sp.add_argument("--points", type=int, default=None,
                    help="sweep sample count, odd and >= 21 (default 201)")
    sp.add_argument("--segments", type=int, default=None,
                    help="even segment count per wire (default 32)")
    sp.add_argument("--efficiency", type=float, default=None,
                    help="synthesize uniform ohmic loss with this radiation efficiency")
    sp.add_argument("--config", type=Path, default=None,
                    help="JSON file with scenario defaults; explicit flags override it")
    sp.add_argument("--out", type=Path, default=None, help="swept TARC table CSV path")
    sp.add_argument("--report", type=Path, default=None,
                    help="report JSON path; figures are rendered next to it")
    sp.add_argument("--fbw-table", dest="fbw_table", type=Path, default=None,
                    help="bandwidth agreement table CSV path")
    sp.add_argument("--no-figures", dest="no_figures", action="store_true",
                    help="skip figure rendering")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qport",
        description="Multiport antenna Q factors and bandwidth from single-frequency data.",
    )
    parser.add_argument("--version", action="version", version=f"qport {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")

    d2 = sub.add_parser("dipoles2", help="two parallel half-wave dipoles")
    d2.add_argument("--d-over-lambda", dest="d_over_lambda", type=float, default=None,
                    help="element spacing over the design wavelength, in [0.05, 2]")
    d2.add_argument("--feeding", default=None, choices=("in-phase", "out-of-phase"),
                    help="excitation preset (default in-phase)")
    d2.add_argument("--export-touchstone", dest="export_touchstone", type=Path, default=None,
                    help="write the swept port admittance as a Touchstone .s2p file")
    _add_common(d2)
    d2.set_defaults(func=cmd_dipoles2)

    d5 = sub.add_parser("dipoles5", help="five equidistant parallel half-wave dipoles")
    d5.add_argument("--d-over-lambda", dest="d_over_lambda", type=float, default=None,
                    help="element spacing over the design wavelength, in [0.05, 1]")
    d5.add_argument("--feeding", default=None,
                    choices=("triangle", "binomial", "chebyshev", "uniform"),
                    help="excitation preset (default triangle)")
    d5.add_argument("--export-touchstone", dest="export_touchstone", type=Path, default=None,
                    help="write the swept port admittance as a Touchstone .s5p file")
    _add_common(d5)
    d5.set_defaults(func=cmd_dipoles5)

    an = sub.add_parser("analyze", help="analyze a Touchstone file or a saved geometry")
    an.add_argument("--touchstone", type=Path, default=None, help="Touchstone .sNp input")
    an.add_argument("--geometry", type=Path, default=None, help="geometry JSON input")
    an.add_argument("--feeding", default=None,
                    help="preset name or comma-separated complex entries (default uniform)")
    _add_common(an)
    an.set_defaults(func=cmd_analyze)

    sw = sub.add_parser("sweep", help="tabulate Q against element spacing")
    sw.add_argument("--wires", type=int, default=None, help="number of dipoles (default 2)")
    sw.add_argument("--feeding", default=None,
                    help="excitation preset applied at every spacing (default in-phase)")
    sw.add_argument("--d-range", dest="d_range", nargs=3, type=float, required=True,
                    metavar=("START", "STOP", "COUNT"),
                    help="spacing sweep in d/lambda0: start stop count")
    sw.add_argument("--jobs", type=int, default=None, help="concurrent rows (default 4)")
    _add_common(sw)
    sw.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "func", None) is None:
        parser.print_help(sys.stderr)
        return 2
    try:
        return args.func(args)
    except CliError as exc:
        _emit_error(exc.kind, str(exc), exc.context)
        return 1
    except (
        momwire.GeometryError,
        momwire.AssemblyError,
        momwire.SingularSystemError,
        matching.SynthesisError,
        qcore.BandEdgeError,
        qcore.UnboundedBandwidthError,
        qcore.UnmatchedStateError,
        netparam.TouchstoneParseError,
        netparam.ConversionError,
        GridRangeError,
        OSError,
        ValueError,
        KeyError,
    ) as exc:
        _emit_error(type(exc).__name__, str(exc))
        return 1


if __name__ == "__main__":
    sys.exit(main())
