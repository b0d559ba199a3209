"""Touchstone ingestion, parameter conversion, and frequency resampling.

Covers the classic version-1 subset: one option line, ``!`` comments, S, Y or
Z data in RI, MA or DB triplet form, with the 2-port column-major quirk and
row-major wrapped records for three ports and up.  Y and Z data are stored in
raw siemens and ohm.  The writer always emits RI so that a parse, serialize,
parse cycle reproduces bit-identical numbers.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._interp import CubicHermite, GridRangeError

_UNIT_SCALE = {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9}
_KINDS = {"s": "s", "y": "y", "z": "z"}
_FORMATS = ("ri", "ma", "db")

SCATTERING = "s"
ADMITTANCE = "y"
IMPEDANCE = "z"


class TouchstoneParseError(ValueError):
    """Malformed Touchstone content, carrying the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConversionError(ValueError):
    """Raised when a parameter conversion is singular at some frequency."""


@dataclass(frozen=True)
class FrequencyGrid:
    """Ascending angular frequency grid with its file unit metadata.

    ``f_raw`` keeps the frequency numbers exactly as written in the source
    unit so serialization reproduces them verbatim.
    """

    omegas: np.ndarray
    f_raw: np.ndarray
    unit: str

    def __post_init__(self):
        omegas = np.asarray(self.omegas, dtype=float)
        if omegas.ndim != 1 or omegas.size == 0:
            raise ValueError("frequency grid must be a nonempty vector")
        if omegas.size > 1 and np.any(np.diff(omegas) <= 0):
            raise ValueError("frequency grid must be strictly ascending")
        object.__setattr__(self, "omegas", omegas)
        object.__setattr__(self, "f_raw", np.asarray(self.f_raw, dtype=float))
        if self.unit not in _UNIT_SCALE:
            raise ValueError(f"unknown frequency unit {self.unit!r}")

    @property
    def f_hz(self) -> np.ndarray:
        return self.f_raw * _UNIT_SCALE[self.unit]

    @property
    def n_points(self) -> int:
        return self.omegas.size


@dataclass(frozen=True)
class MultiportNetwork:
    """Sampled network parameters of one kind on a frequency grid."""

    grid: FrequencyGrid
    kind: str
    data: np.ndarray
    z_ref: np.ndarray

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"kind must be one of {sorted(_KINDS)}")
        data = np.asarray(self.data, dtype=np.complex128)
        if data.ndim != 3 or data.shape[1] != data.shape[2]:
            raise ValueError("data must have shape (n_freq, ports, ports)")
        if data.shape[0] != self.grid.n_points:
            raise ValueError("data length does not match the frequency grid")
        object.__setattr__(self, "data", data)
        z_ref = np.atleast_1d(np.asarray(self.z_ref, dtype=float))
        if z_ref.size == 1:
            z_ref = np.full(data.shape[1], z_ref[0])
        if z_ref.shape != (data.shape[1],) or np.any(z_ref <= 0):
            raise ValueError("z_ref must be positive, one entry per port")
        object.__setattr__(self, "z_ref", z_ref)

    @property
    def n_ports(self) -> int:
        return self.data.shape[1]


def from_samples(omegas, data, kind: str, z_ref=50.0) -> MultiportNetwork:
    """Build a network from angular frequency samples (unit bookkeeping in Hz)."""
    omegas = np.asarray(omegas, dtype=float)
    grid = FrequencyGrid(omegas=omegas, f_raw=omegas / (2.0 * math.pi), unit="hz")
    return MultiportNetwork(grid=grid, kind=kind, data=data, z_ref=z_ref)


# --------------------------------------------------------------------------
# Parsing.
# --------------------------------------------------------------------------

def _ports_from_suffix(path: Path) -> int:
    suffix = path.suffix.lower()
    if suffix.startswith(".s") and suffix.endswith("p"):
        digits = suffix[2:-1]
        if digits.isdigit() and int(digits) >= 1:
            return int(digits)
    raise TouchstoneParseError(
        f"cannot infer port count from extension {path.suffix!r}; expected .sNp"
    )


def _to_complex(fmt: str, x: float, y: float) -> complex:
    if fmt == "ri":
        return complex(x, y)
    if fmt == "ma":
        return x * cmath.exp(1j * math.radians(y))
    return 10.0 ** (x / 20.0) * cmath.exp(1j * math.radians(y))


def parse_touchstone(path) -> MultiportNetwork:
    """Parse a Touchstone v1 file, port count taken from the extension."""
    path = Path(path)
    n_ports = _ports_from_suffix(path)
    text = path.read_text(encoding="utf-8")
    return _parse_text(text, n_ports)


def _parse_text(text: str, n_ports: int) -> MultiportNetwork:
    unit, kind, fmt, ref = "ghz", "s", "ma", 50.0
    seen_option = False
    tokens: list[float] = []
    token_line: list[int] = []
    line_first_token: set[int] = set()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("!", 1)[0].strip()
        if not line:
            continue
        if line.startswith("#"):
            if seen_option:
                raise TouchstoneParseError("multiple option lines", lineno)
            if tokens:
                raise TouchstoneParseError("option line after data records", lineno)
            seen_option = True
            unit, kind, fmt, ref = _parse_option(line, lineno, unit, kind, fmt, ref)
            continue
        first = True
        for tok in line.split():
            try:
                val = float(tok)
            except ValueError:
                raise TouchstoneParseError(f"expected a number, got {tok!r}", lineno) from None
            if first:
                line_first_token.add(len(tokens))
                first = False
            tokens.append(val)
            token_line.append(lineno)

    if not tokens:
        raise TouchstoneParseError("no data records found")
    record = 1 + 2 * n_ports * n_ports
    if len(tokens) % record != 0:
        start = (len(tokens) // record) * record
        raise TouchstoneParseError(
            f"incomplete record: expected {record} numbers per frequency for "
            f"{n_ports} ports",
            token_line[min(start, len(tokens) - 1)],
        )

    f_raw, mats = [], []
    for r in range(len(tokens) // record):
        base = r * record
        if base not in line_first_token:
            raise TouchstoneParseError(
                "record does not start on a fresh line; wrong token count upstream",
                token_line[base],
            )
        freq = tokens[base]
        if f_raw and freq <= f_raw[-1]:
            raise TouchstoneParseError(
                f"frequency {freq:g} not ascending (noise data is unsupported)",
                token_line[base],
            )
        f_raw.append(freq)
        vals = [
            _to_complex(fmt, tokens[base + 1 + 2 * i], tokens[base + 2 + 2 * i])
            for i in range(n_ports * n_ports)
        ]
        mats.append(_order_matrix(vals, n_ports))

    f_raw = np.asarray(f_raw)
    grid = FrequencyGrid(
        omegas=2.0 * math.pi * f_raw * _UNIT_SCALE[unit], f_raw=f_raw, unit=unit
    )
    return MultiportNetwork(grid=grid, kind=kind, data=np.asarray(mats), z_ref=ref)


def _parse_option(line: str, lineno: int, unit, kind, fmt, ref):
    parts = line[1:].split()
    i = 0
    while i < len(parts):
        tok = parts[i].lower()
        if tok in _UNIT_SCALE:
            unit = tok
        elif tok in _KINDS:
            kind = tok
        elif tok in _FORMATS:
            fmt = tok
        elif tok == "r":
            if i + 1 >= len(parts):
                raise TouchstoneParseError("option R needs a reference value", lineno)
            try:
                ref = float(parts[i + 1])
            except ValueError:
                raise TouchstoneParseError(
                    f"bad reference value {parts[i + 1]!r}", lineno
                ) from None
            i += 1
        else:
            raise TouchstoneParseError(f"unknown option token {parts[i]!r}", lineno)
        i += 1
    return unit, kind, fmt, ref


def _order_matrix(vals: list[complex], n: int) -> np.ndarray:
    mat = np.empty((n, n), dtype=np.complex128)
    if n == 2:
        # The version-1 quirk: two-port records run s11 s21 s12 s22.
        mat[0, 0], mat[1, 0], mat[0, 1], mat[1, 1] = vals
    else:
        for i in range(n):
            for j in range(n):
                mat[i, j] = vals[i * n + j]
    return mat


# --------------------------------------------------------------------------
# Conversions.
# --------------------------------------------------------------------------

def _convert_one(mat: np.ndarray, src: str, dst: str, z_ref: np.ndarray, omega: float):
    if src == dst:
        return mat.copy()
    eye = np.eye(mat.shape[0])
    r_half = np.sqrt(z_ref)
    try:
        if src == SCATTERING and dst == ADMITTANCE:
            return (np.linalg.solve((eye + mat).T, (eye - mat).T).T / r_half[:, None]) / r_half[None, :]
        if src == SCATTERING and dst == IMPEDANCE:
            return (np.linalg.solve((eye - mat).T, (eye + mat).T).T * r_half[:, None]) * r_half[None, :]
        if src == ADMITTANCE and dst == SCATTERING:
            yn = (mat * r_half[:, None]) * r_half[None, :]
            return np.linalg.solve((eye + yn).T, (eye - yn).T).T
        if src == IMPEDANCE and dst == SCATTERING:
            zn = (mat / r_half[:, None]) / r_half[None, :]
            return np.linalg.solve((zn + eye).T, (zn - eye).T).T
        if src == ADMITTANCE and dst == IMPEDANCE:
            return np.linalg.inv(mat)
        if src == IMPEDANCE and dst == ADMITTANCE:
            return np.linalg.inv(mat)
    except np.linalg.LinAlgError as exc:
        raise ConversionError(
            f"{src}->{dst} conversion singular at omega={omega:g} rad/s "
            f"(f={omega / (2 * math.pi):g} Hz): {exc}"
        ) from exc
    raise ValueError(f"unsupported conversion {src}->{dst}")


def _convert(net: MultiportNetwork, dst: str) -> MultiportNetwork:
    if net.kind == dst:
        return net
    out = np.empty_like(net.data)
    for i, omega in enumerate(net.grid.omegas):
        out[i] = _convert_one(net.data[i], net.kind, dst, net.z_ref, omega)
    return MultiportNetwork(grid=net.grid, kind=dst, data=out, z_ref=net.z_ref)


def to_admittance(net: MultiportNetwork) -> MultiportNetwork:
    """Convert to admittance parameters in siemens."""
    return _convert(net, ADMITTANCE)


def to_impedance(net: MultiportNetwork) -> MultiportNetwork:
    """Convert to impedance parameters in ohm."""
    return _convert(net, IMPEDANCE)


def to_scattering(net: MultiportNetwork) -> MultiportNetwork:
    """Convert to scattering parameters against the stored port references."""
    return _convert(net, SCATTERING)


# --------------------------------------------------------------------------
# Resampling and derivatives.
# --------------------------------------------------------------------------

def sample_at(net: MultiportNetwork, omega: float) -> np.ndarray:
    """Network matrix at one angular frequency.

    Grid points return the stored sample exactly; anything between is the
    local cubic interpolant, and anything outside the grid is a range error.
    """
    omegas = net.grid.omegas
    idx = int(np.searchsorted(omegas, omega))
    if idx < omegas.size and omegas[idx] == omega:
        return net.data[idx].copy()
    return CubicHermite(omegas, net.data)(omega)


def sampled_derivatives(net: MultiportNetwork, omega0: float):
    """Value, first, and second derivative of the sampled matrix at omega0.

    Central differences on the interpolated curve with the local grid
    spacing as the step; measured data carries no analytic derivative, so
    this is the honest sampled-data route and reports label it as such.
    """
    omegas = net.grid.omegas
    if omega0 < omegas[0] or omega0 > omegas[-1]:
        raise GridRangeError(
            f"omega0 {omega0:g} outside sampled range [{omegas[0]:g}, {omegas[-1]:g}]"
        )
    idx = int(np.searchsorted(omegas, omega0))
    gaps = []
    if idx > 0:
        gaps.append(omegas[idx] - omegas[idx - 1])
    if idx < omegas.size - 1:
        gaps.append(omegas[idx + 1] - omegas[idx])
    h = float(min(gaps))
    if omega0 - h < omegas[0] or omega0 + h > omegas[-1]:
        raise GridRangeError(
            f"omega0 {omega0:g} too close to the grid edge for a centered "
            f"difference of step {h:g}"
        )
    y_0 = sample_at(net, omega0)
    y_p = sample_at(net, omega0 + h)
    y_m = sample_at(net, omega0 - h)
    dy = (y_p - y_m) / (2.0 * h)
    ddy = (y_p - 2.0 * y_0 + y_m) / (h * h)
    return y_0, dy, ddy


# --------------------------------------------------------------------------
# Serialization.
# --------------------------------------------------------------------------

def write_touchstone(net: MultiportNetwork, path) -> None:
    """Write a Touchstone v1 file in RI format.

    RI with shortest round-trip float formatting makes parse(write(parse))
    numerically identical to the first parse.  The frequency unit of the grid
    is preserved.
    """
    path = Path(path)
    expected = f".s{net.n_ports}p"
    if path.suffix.lower() != expected:
        raise ValueError(f"a {net.n_ports}-port network needs the {expected} extension")
    if not np.all(net.z_ref == net.z_ref[0]):
        raise ValueError("touchstone output needs one shared port reference")
    lines = [f"# {net.grid.unit.upper()} {net.kind.upper()} RI R {_fmt(net.z_ref[0])}"]
    for f, mat in zip(net.grid.f_raw, net.data):
        vals = _flatten_matrix(mat, net.n_ports)
        if net.n_ports <= 2:
            nums = [f] + [x for c in vals for x in (c.real, c.imag)]
            lines.append(" ".join(_fmt(x) for x in nums))
        else:
            for i in range(net.n_ports):
                row = vals[i * net.n_ports:(i + 1) * net.n_ports]
                for start in range(0, net.n_ports, 4):
                    chunk = row[start:start + 4]
                    nums = [x for c in chunk for x in (c.real, c.imag)]
                    if i == 0 and start == 0:
                        nums = [f] + nums
                    lines.append(" ".join(_fmt(x) for x in nums))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _flatten_matrix(mat: np.ndarray, n: int) -> list[complex]:
    if n == 2:
        return [mat[0, 0], mat[1, 0], mat[0, 1], mat[1, 1]]
    return [mat[i, j] for i in range(n) for j in range(n)]


def _fmt(x: float) -> str:
    return repr(float(x))


def entry_labels(net: MultiportNetwork) -> list[str]:
    labels = []
    for i in range(net.n_ports):
        for j in range(net.n_ports):
            labels.append(f"{net.kind}{i + 1}{j + 1}_re")
            labels.append(f"{net.kind}{i + 1}{j + 1}_im")
    return labels


def write_csv(net: MultiportNetwork, path) -> None:
    """Delimited dump: one row per frequency, real/imag columns per entry."""
    lines = ["omega," + ",".join(entry_labels(net))]
    for omega, mat in zip(net.grid.omegas, net.data):
        cells = [_fmt(omega)]
        for i in range(net.n_ports):
            for j in range(net.n_ports):
                cells.append(_fmt(mat[i, j].real))
                cells.append(_fmt(mat[i, j].imag))
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
