"""On-disk artifacts: field snapshots, spectra, diagnostics, norm reports.

Snapshot format ("CGNS1"): magic bytes b"CGNS1", then little-endian u32 dim,
u32 per-axis resolution, u32 components, then complex64 coefficients in
row-major wavenumber order. CSV/JSON writers embed the resolved run
configuration and its content hash so outputs are self-describing and byte
reproducible.
"""

import hashlib
import json
import struct

import numpy as np

from .errors import ValidationError
from .field import SpectralField
from .grid import TorusGrid

MAGIC = b"CGNS1"
_HEADER = struct.Struct("<III")


def write_field(field: SpectralField, path):
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_HEADER.pack(field.grid.dim, field.grid.resolution,
                              field.components))
        fh.write(np.ascontiguousarray(field.coeffs, dtype=np.complex64).tobytes())


def read_field(path, dealias_fraction: float = 2.0 / 3.0) -> SpectralField:
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise ValidationError(f"{path}: not a CGNS1 snapshot")
        dim, resolution, components = _HEADER.unpack(fh.read(_HEADER.size))
        count = components * resolution ** dim
        raw = np.frombuffer(fh.read(count * 8), dtype=np.complex64, count=count)
    grid = TorusGrid(dim, resolution, dealias_fraction)
    coeffs = raw.astype(np.complex128).reshape((components,) + grid.shape)
    return SpectralField(grid, coeffs)


def config_hash(config: dict) -> str:
    canonical = "\n".join(f"{k}={config[k]!r}" for k in sorted(config))
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def _config_header_lines(config: dict | None):
    if not config:
        return []
    lines = [f"# config_hash={config_hash(config)}"]
    lines += [f"# {k}={config[k]!r}" for k in sorted(config)]
    return lines


def write_csv(path, columns, rows, config: dict | None = None):
    lines = _config_header_lines(config)
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _fmt(v):
    if isinstance(v, (np.floating, float)):
        return repr(float(v))
    if isinstance(v, (np.integer, int)):
        return str(int(v))
    return str(v)


def write_spectra_csv(field: SpectralField, path, config: dict | None = None,
                      threshold: float = 0.0):
    """Columns (|k|, component, re, im), one row per retained mode."""
    kmag = field.grid.kmag.ravel()
    rows = []
    for c in range(field.components):
        flat = field.coeffs[c].ravel()
        keep = np.abs(flat) > threshold if threshold > 0 else slice(None)
        idx = np.arange(flat.size)[keep] if threshold > 0 else np.arange(flat.size)
        for i in idx:
            rows.append((kmag[i], c, flat[i].real, flat[i].imag))
    write_csv(path, ("k_mag", "component", "re", "im"), rows, config)


def write_diagnostics_csv(diag, path, config: dict | None = None):
    columns = ("t", "energy", "dissipation", "h_half", "h_three_half", "linf",
               "blowup_integral", "cum_linf_sq")
    write_csv(path, columns, diag.rows(), config)


def write_norm_report_csv(path, entries, config: dict | None = None):
    """entries: iterable of (norm_name, s, p, q, value, quadrature_points)."""
    write_csv(path, ("norm_name", "s", "p", "q", "value", "quadrature_points"),
              entries, config)


def write_json_report(path, payload: dict, config: dict | None = None):
    doc = dict(payload)
    if config is not None:
        doc["config"] = {k: config[k] for k in sorted(config)}
        doc["config_hash"] = config_hash(config)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(v):
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"cannot serialize {type(v)!r}")
