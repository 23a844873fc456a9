"""Field and report serialization for the command-line tool.

Fields are written as JSON documents with a metadata header and a row-major
``data`` array of per-point records, and as flat CSV with the same columns.
All floating-point numbers are encoded as decimal literals with 17
significant digits, which round-trip bit-exactly to IEEE doubles; given one
config and seed the emitted bytes are reproducible.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import ConfigError, GridMismatchError
from .wigner import PhaseSpaceGrid, WignerMatrixField

__all__ = [
    "FIELD_FORMAT",
    "MANIFEST_FORMAT",
    "COLUMNS",
    "format_float",
    "canonical_field",
    "data_section_text",
    "field_json_text",
    "write_field_json",
    "read_field_json",
    "write_field_csv",
    "read_field_csv",
    "config_hash",
    "check_same_grid",
]

FIELD_FORMAT = "vibtomo-field/v1"
MANIFEST_FORMAT = "vibtomo-manifest/v1"

COLUMNS = (
    "re_alpha", "im_alpha",
    "w11", "w22", "re_w12", "im_w12",
    "stderr_w11", "stderr_w22", "stderr_re_w12", "stderr_im_w12",
    "leakage_bound",
)

_GRID_KEYS = ("re_min", "re_max", "n_re", "im_min", "im_max", "n_im")


def format_float(x: float) -> str:
    """Decimal encoding at 17 significant digits (bit-exact double round trip)."""
    if not np.isfinite(x):
        raise ValueError(f"cannot serialise non-finite value {x!r}")
    return format(float(x), ".17g")


def canonical_field(field: WignerMatrixField) -> WignerMatrixField:
    """Project onto the stored representation: real diagonals, w21 = conj(w12)."""
    w = field.w.copy()
    w[:, 0, 0] = w[:, 0, 0].real
    w[:, 1, 1] = w[:, 1, 1].real
    w[:, 1, 0] = np.conj(w[:, 0, 1])
    return WignerMatrixField(grid=field.grid, w=w, stderr=field.stderr,
                             leakage=field.leakage)


def _record_values(field: WignerMatrixField, p: int, alpha: complex) -> list[float]:
    w = field.w[p]
    se = field.stderr[p] if field.stderr is not None else np.zeros((2, 2))
    leak = float(field.leakage[p]) if field.leakage is not None else 0.0
    return [
        alpha.real, alpha.imag,
        w[0, 0].real, w[1, 1].real, w[0, 1].real, w[0, 1].imag,
        se[0, 0], se[1, 1], se[0, 1], se[1, 0],
        leak,
    ]


def data_section_text(field: WignerMatrixField) -> str:
    """The deterministic JSON ``data`` array (the reproducibility contract)."""
    alphas = field.grid.alphas()
    lines = []
    for p in range(len(field)):
        vals = _record_values(field, p, complex(alphas[p]))
        pairs = ",".join(f'"{k}":{format_float(v)}' for k, v in zip(COLUMNS, vals))
        lines.append("{" + pairs + "}")
    return "[\n" + ",\n".join(lines) + "\n]"


def _grid_json(grid: PhaseSpaceGrid) -> str:
    parts = []
    for key in _GRID_KEYS:
        value = getattr(grid, key)
        parts.append(f'"{key}":{value if isinstance(value, int) else format_float(value)}')
    return "{" + ",".join(parts) + "}"


def field_json_text(field: WignerMatrixField, kind: str, metadata: dict) -> str:
    """Full deterministic field document (no timestamps; those live in the manifest)."""
    meta = json.dumps(metadata, sort_keys=True, separators=(",", ":"))
    return (
        "{\n"
        f'"format":"{FIELD_FORMAT}",\n'
        f'"kind":{json.dumps(kind)},\n'
        f'"metadata":{meta},\n'
        f'"grid":{_grid_json(field.grid)},\n'
        f'"data":{data_section_text(field)}\n'
        "}\n"
    )


def write_field_json(path: str | Path, field: WignerMatrixField, kind: str,
                     metadata: dict | None = None) -> None:
    Path(path).write_text(field_json_text(field, kind, metadata or {}), encoding="utf-8")


def _field_from_rows(grid: PhaseSpaceGrid, rows: list[list[float]]) -> WignerMatrixField:
    n = grid.n_points
    if len(rows) != n:
        raise ConfigError(f"expected {n} records for the grid, found {len(rows)}")
    w = np.empty((n, 2, 2), dtype=complex)
    stderr = np.empty((n, 2, 2))
    leakage = np.empty(n)
    for p, vals in enumerate(rows):
        (_, _, w11, w22, re12, im12, s11, s22, sre, sim, leak) = vals
        w[p, 0, 0] = w11
        w[p, 1, 1] = w22
        w[p, 0, 1] = complex(re12, im12)
        w[p, 1, 0] = complex(re12, -im12)
        stderr[p] = [[s11, sre], [sim, s22]]
        leakage[p] = leak
    return WignerMatrixField(grid=grid, w=w, stderr=stderr, leakage=leakage)


def read_field_json(path: str | Path) -> tuple[WignerMatrixField, str, dict]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != FIELD_FORMAT:
        raise ConfigError(f"{path}: not a {FIELD_FORMAT} document")
    grid = PhaseSpaceGrid(**doc["grid"])
    rows = [[float(rec[k]) for k in COLUMNS] for rec in doc["data"]]
    field = _field_from_rows(grid, rows)
    return field, doc.get("kind", "unknown"), doc.get("metadata", {})


def write_field_csv(path: str | Path, field: WignerMatrixField) -> None:
    alphas = field.grid.alphas()
    lines = [",".join(COLUMNS)]
    for p in range(len(field)):
        vals = _record_values(field, p, complex(alphas[p]))
        lines.append(",".join(format_float(v) for v in vals))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_field_csv(path: str | Path, grid: PhaseSpaceGrid) -> WignerMatrixField:
    lines = Path(path).read_text(encoding="utf-8").strip().splitlines()
    if lines[0].split(",") != list(COLUMNS):
        raise ConfigError(f"{path}: unexpected CSV header")
    rows = [[float(tok) for tok in line.split(",")] for line in lines[1:]]
    return _field_from_rows(grid, rows)


def config_hash(config: dict) -> str:
    """sha256 of the canonical (sorted, compact) JSON encoding of the config."""
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def check_same_grid(a: WignerMatrixField, b: WignerMatrixField) -> None:
    if a.grid != b.grid:
        raise GridMismatchError(f"grids differ: {a.grid} vs {b.grid}")
