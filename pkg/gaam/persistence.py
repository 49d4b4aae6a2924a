"""

Persistence for GAAM

Binary field checkpoints and trajectory tables.

Checkpoint layout (all little-endian):

    magic "GAAM1" | version u8 | flags u8 | dim u8 | modes_per_axis u32 |
    box_length, alpha, beta, gamma, delta, nu, t as float64 |
    payload: float64 (re, im) pairs, component-major, then grid enumeration order

Only canonical retained modes are stored; reading rebuilds the conjugate half,
so read(write(u)) reproduces the coefficients bit for bit.

License: BSD 3-Clause

"""

#
# IMPORTS
#
import csv
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Literal, Union

import numpy as np

from gaam.constants import CHECKPOINT_MAGIC, CHECKPOINT_VERSION, CSV_FLOAT_FORMAT
from gaam.dynamics import TrajectoryRecord
from gaam.spectral_core import ModelParams, VectorField, make_grid


#
# CONSTANTS
#
logger = logging.getLogger(__name__)

HEADER_FORMAT: str = "<5sBBBI7d"
HEADER_SIZE: int = struct.calcsize(HEADER_FORMAT)
FLAG_DIVERGENCE_FREE: int = 1

TableType = Literal["csv", "parquet"]


#
# ERRORS
#
class CheckpointError(ValueError):
    """Malformed or incompatible checkpoint file."""


#
# TYPES
#
@dataclass
class Checkpoint:
    params: ModelParams
    t: float
    field: VectorField


#
# PUBLIC
#
def encode_checkpoint(field: VectorField, params: ModelParams, t: float = 0.0) -> bytes:
    """Serialize a field and its model parameters."""
    grid = field.grid
    if (grid.dim, grid.modes_per_axis, grid.box_length) != (params.dim, params.modes_per_axis, params.box_length):
        raise CheckpointError(f"field grid {grid} does not match the parameters' geometry")
    flags = FLAG_DIVERGENCE_FREE if field.divergence_free else 0
    header = struct.pack(
        HEADER_FORMAT, CHECKPOINT_MAGIC, CHECKPOINT_VERSION, flags, grid.dim, grid.modes_per_axis,
        grid.box_length, params.alpha, params.beta, params.gamma, params.delta, params.nu, float(t))
    values = field.coefficients[(slice(None),) + grid.enumeration]
    payload = np.stack([values.real, values.imag], axis=-1).astype("<f8")
    return header + payload.tobytes()


def decode_checkpoint(data: bytes) -> Checkpoint:
    """Parse checkpoint bytes.

    Raises:
        CheckpointError: Bad magic, unsupported version or payload size mismatch.
    """
    if len(data) < HEADER_SIZE:
        raise CheckpointError(f"checkpoint too short ({len(data)} bytes)")
    magic, version, flags, dim, modes, *floats = struct.unpack(HEADER_FORMAT, data[:HEADER_SIZE])
    if magic != CHECKPOINT_MAGIC:
        raise CheckpointError(f"bad checkpoint magic {magic!r}")
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    box_length, alpha, beta, gamma, delta, nu, t = floats
    try:
        params = ModelParams(alpha=alpha, beta=beta, gamma=gamma, delta=delta, nu=nu,
                             dim=dim, modes_per_axis=modes, box_length=box_length)
    except ValueError as error:
        raise CheckpointError(f"invalid parameters in checkpoint header: {error}") from error
    grid = make_grid(dim, modes, box_length)
    positions = grid.enumeration
    n_values = dim * len(positions[0]) * 2
    payload = np.frombuffer(data, dtype="<f8", offset=HEADER_SIZE)
    if payload.size != n_values:
        raise CheckpointError(f"payload holds {payload.size} values, expected {n_values}")
    pairs = payload.reshape(dim, len(positions[0]), 2)
    coeffs = np.zeros((dim,) + grid.spectral_shape, dtype=complex)
    coeffs[(slice(None),) + positions] = pairs[..., 0] + 1j * pairs[..., 1]
    field = VectorField.from_coefficients(grid, coeffs, bool(flags & FLAG_DIVERGENCE_FREE))
    return Checkpoint(params=params, t=t, field=field)


def write_checkpoint(
        path: Union[str, Path],
        field: VectorField,
        params: ModelParams,
        t: float = 0.0,
        force: bool = False) -> Path:
    """Write a checkpoint file.

    Raises:
        FileExistsError: If the file exists and force is False.
    """
    path = Path(path)
    if path.exists() and not force:
        raise FileExistsError(f"File {path} already exists. Use force=True to overwrite.")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_checkpoint(field, params, t))
    logger.debug("wrote checkpoint %s (t=%s)", path, t)
    return path


def read_checkpoint(path: Union[str, Path]) -> Checkpoint:
    return decode_checkpoint(Path(path).read_bytes())


def write_trajectory(
        record: TrajectoryRecord,
        path: Union[str, Path],
        table_type: TableType = "csv",
        force: bool = False) -> Path:
    """Write the sampled diagnostics of a run as a table.

    Args:
        record: Trajectory record.
        path: Output file.
        table_type: 'csv' (17 significant digits) or 'parquet' (needs pyarrow).
        force: Overwrite an existing file.

    Returns:
        Path written.

    Raises:
        FileExistsError: If the file exists and force is False.
    """
    return write_table(record.rows(), path, table_type, force, columns=record.columns)


def write_table(
        rows: List[Dict[str, Any]],
        path: Union[str, Path],
        table_type: TableType = "csv",
        force: bool = False,
        columns: List[str] = None) -> Path:
    """Write a list of row dicts as CSV or Parquet."""
    path = Path(path)
    if path.exists() and not force:
        raise FileExistsError(f"File {path} already exists. Use force=True to overwrite.")
    path.parent.mkdir(parents=True, exist_ok=True)
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    if table_type == "csv":
        _write_csv(rows, columns, path)
    elif table_type == "parquet":
        _write_parquet(rows, path)
    else:
        raise ValueError(f"Unknown table type '{table_type}'")
    return path


def read_csv_table(path: Union[str, Path]) -> List[Dict[str, str]]:
    with open(path, "r", newline="") as csvfile:
        return list(csv.DictReader(csvfile))


#
# INTERNAL
#
def _format_cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), CSV_FLOAT_FORMAT)
    if value is None:
        return ""
    return str(value)


def _write_csv(rows: List[Dict[str, Any]], columns: List[str], path: Path) -> None:
    with open(path, "w", newline="") as csvfile:
        writer = csv.DictWriter(csvfile, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({name: _format_cell(row.get(name)) for name in columns})


def _write_parquet(rows: List[Dict[str, Any]], path: Path) -> None:
    try:
        import pyarrow as pa
        import pyarrow.parquet as pq
    except ImportError:
        raise ImportError("PyArrow required for Parquet support. Install with: pip install pyarrow")
    pq.write_table(pa.Table.from_pylist(rows), str(path))
