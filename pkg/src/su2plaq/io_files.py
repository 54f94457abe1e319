"""Stable on-disk formats: run manifests, time-series CSV, state dumps, reports.

All numeric text output uses 17 significant digits so that identical runs
produce byte-identical files, and values round-trip through binary64.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .evolution import TimeRecord, TimeSeries

SCHEMA_VERSION = "1.0"
_STATE_MAGIC = b"SU2PLAQV"
_STATE_HEADER = struct.Struct("<8sII")  # magic, format version, n_qubits


def fmt(value: float) -> str:
    """Fixed 17-significant-digit decimal form of a float."""
    return f"{value:.17g}"


# -- manifests ----------------------------------------------------------------


def write_manifest(path, payload: dict) -> None:
    payload = {"schema_version": SCHEMA_VERSION, **payload}
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_manifest(path) -> dict:
    payload = json.loads(Path(path).read_text())
    version = str(payload.get("schema_version", ""))
    major = version.split(".", 1)[0]
    ours = SCHEMA_VERSION.split(".", 1)[0]
    if major != ours:
        raise ValueError(f"unsupported manifest schema version {version!r} (expected {ours}.x)")
    return payload


# -- state dumps --------------------------------------------------------------


def save_state(path, amplitudes: np.ndarray) -> None:
    """Raw little-endian complex-double dump with a small header."""
    amps = np.ascontiguousarray(amplitudes, dtype="<c16")
    n_qubits = amps.size.bit_length() - 1
    if amps.size != 1 << n_qubits:
        raise ValueError(f"amplitude count {amps.size} is not a power of two")
    with open(path, "wb") as fh:
        fh.write(_STATE_HEADER.pack(_STATE_MAGIC, 1, n_qubits))
        fh.write(amps.tobytes())


def load_state(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < _STATE_HEADER.size:
        raise ValueError(f"state file {path} is truncated")
    magic, version, n_qubits = _STATE_HEADER.unpack_from(raw)
    if magic != _STATE_MAGIC:
        raise ValueError(f"{path} is not a state dump (bad magic {magic!r})")
    if version != 1:
        raise ValueError(f"unsupported state dump version {version}")
    amps = np.frombuffer(raw, dtype="<c16", offset=_STATE_HEADER.size)
    if amps.size != 1 << n_qubits:
        raise ValueError(
            f"state file {path} holds {amps.size} amplitudes, header says 2^{n_qubits}"
        )
    return amps.astype(np.complex128)


# -- time-series CSV ----------------------------------------------------------


def series_header(n_plaquettes: int) -> str:
    cols = ["t", "iters", "residual", "energy_total", "norm"]
    cols += [f"E_{i}" for i in range(n_plaquettes)]
    cols += [f"u_{i}" for i in range(n_plaquettes)]
    return ",".join(cols)


def format_record_row(record: TimeRecord) -> str:
    fields = [
        fmt(record.t),
        str(record.iterations),
        "" if record.residual is None else fmt(record.residual),
        fmt(record.energy),
        fmt(record.norm),
    ]
    fields += [fmt(v) for v in record.electric]
    fields += [fmt(v) for v in record.tadpole]
    return ",".join(fields)


def write_series_csv(series: TimeSeries, path) -> None:
    lines = [series_header(series.n_plaquettes)]
    lines += [format_record_row(r) for r in series.records]
    Path(path).write_text("\n".join(lines) + "\n")


def read_series_csv(path) -> dict:
    """Parse a series CSV into arrays; used by tests and round-trips."""
    lines = Path(path).read_text().strip().splitlines()
    header = lines[0].split(",")
    n_plaq = sum(1 for c in header if c.startswith("E_"))
    rows = [line.split(",") for line in lines[1:]]
    t = np.array([float(r[0]) for r in rows])
    iters = np.array([int(r[1]) for r in rows])
    residual = np.array([float(r[2]) if r[2] else np.nan for r in rows])
    energy = np.array([float(r[3]) for r in rows])
    norm = np.array([float(r[4]) for r in rows])
    electric = np.array([[float(v) for v in r[5 : 5 + n_plaq]] for r in rows])
    tadpole = np.array([[float(v) for v in r[5 + n_plaq :]] for r in rows])
    return {
        "t": t,
        "iters": iters,
        "residual": residual,
        "energy_total": energy,
        "norm": norm,
        "electric": electric,
        "tadpole": tadpole,
    }


# -- vacuum files -------------------------------------------------------------


def write_vacuum(path, result, model_payload: dict, state_file: str | None) -> None:
    payload = {
        "schema_version": SCHEMA_VERSION,
        "model": model_payload,
        "total_energy": result.total_energy,
        "energy_density": result.energy_density,
        "tadpole_kind": result.tadpole.kind,
        "tadpole": [float(v) for v in result.tadpole.values],
        "iterations": result.iterations,
        "final_residual": result.final_residual,
        "gap_estimate": result.gap_estimate,
        "state_file": state_file,
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_vacuum(path) -> dict:
    payload = json.loads(Path(path).read_text())
    version = str(payload.get("schema_version", ""))
    if version.split(".", 1)[0] != SCHEMA_VERSION.split(".", 1)[0]:
        raise ValueError(f"unsupported vacuum file schema version {version!r}")
    return payload


# -- key = value files --------------------------------------------------------


def parse_config(path) -> dict[str, str]:
    """Key = value lines; '#' starts a comment; later keys override earlier."""
    values: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, value = stripped.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def write_report(path, entries: list[tuple[str, object]]) -> None:
    lines = []
    for key, value in entries:
        if isinstance(value, float):
            value = fmt(value)
        lines.append(f"{key} = {value}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_report(path) -> dict[str, str]:
    return parse_config(path)
