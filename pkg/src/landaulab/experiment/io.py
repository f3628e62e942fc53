"""Binary snapshots and CSV/JSON writers.

Snapshot layout (little-endian): magic ``b"LAND"``, u32 version (1), u32 d,
u32 N, f64 L, f64 t, f64 gamma, then N^d f64 values in row-major order.
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..errors import SnapshotError
from ..grid import VelocityGrid

MAGIC = b"LAND"
VERSION = 1
_HEADER = struct.Struct("<4sIIIddd")


@dataclass(frozen=True)
class SnapshotHeader:
    d: int
    N: int
    L: float
    t: float
    gamma: float
    version: int = VERSION

    @property
    def grid(self) -> VelocityGrid:
        return VelocityGrid(self.d, self.N, self.L)


def snapshot_bytes(grid: VelocityGrid, f: np.ndarray, t: float, gamma: float) -> bytes:
    f = grid.check_field(f, finite=False)
    head = _HEADER.pack(MAGIC, VERSION, grid.d, grid.N, grid.L, float(t), float(gamma))
    return head + np.ascontiguousarray(f, dtype="<f8").tobytes()


def write_snapshot(path, grid: VelocityGrid, f: np.ndarray, t: float, gamma: float) -> Path:
    path = Path(path)
    path.write_bytes(snapshot_bytes(grid, f, t, gamma))
    return path


def parse_snapshot(raw: bytes) -> tuple[SnapshotHeader, np.ndarray]:
    if len(raw) < _HEADER.size:
        raise SnapshotError("file shorter than the snapshot header")
    magic, version, d, N, L, t, gamma = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise SnapshotError(f"bad magic {magic!r}")
    if version != VERSION:
        raise SnapshotError(f"unsupported snapshot version {version}")
    if d not in (2, 3) or N < 1:
        raise SnapshotError(f"bad grid header d={d} N={N}")
    payload = raw[_HEADER.size :]
    expected = 8 * N**d
    if len(payload) != expected:
        raise SnapshotError(f"payload has {len(payload)} bytes, expected {expected}")
    f = np.frombuffer(payload, dtype="<f8").astype(float).reshape((N,) * d)
    return SnapshotHeader(d, N, L, t, gamma, version), f


def read_snapshot(path) -> tuple[SnapshotHeader, np.ndarray]:
    return parse_snapshot(Path(path).read_bytes())


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])
    return path


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def write_json(path, data) -> Path:
    path = Path(path)
    path.write_text(json.dumps(data, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path
