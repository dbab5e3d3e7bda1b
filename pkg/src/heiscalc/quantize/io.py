"""Grid dumps: row-major little-endian float64 payload plus a JSON sidecar."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .grid import GridSpec

__all__ = ["save_grid_function", "load_grid_function"]

FORMAT = "heiscalc-grid-v1"


def save_grid_function(path, values: np.ndarray, grid: GridSpec, meta: dict | None = None) -> tuple:
    """Write ``path`` (.bin) and ``path``.json.  Complex data store (re, im) pairs."""
    path = Path(path)
    values = np.asarray(values)
    is_complex = np.iscomplexobj(values)
    if is_complex:
        payload = np.stack([values.real, values.imag], axis=-1)
    else:
        payload = values
    payload = np.ascontiguousarray(payload, dtype="<f8")
    path.write_bytes(payload.tobytes(order="C"))
    side = {
        "format": FORMAT,
        "dtype": "float64",
        "byte_order": "little",
        "order": "C",
        "complex": bool(is_complex),
        "shape": list(values.shape),
        "grid": grid.as_dict(),
        "meta": meta or {},
    }
    sidecar = path.with_name(path.name + ".json")
    sidecar.write_text(json.dumps(side, indent=2, sort_keys=True) + "\n")
    return path, sidecar


def load_grid_function(path):
    path = Path(path)
    side = json.loads(path.with_name(path.name + ".json").read_text())
    if side.get("format") != FORMAT:
        raise ValueError("unrecognized grid dump format")
    raw = np.frombuffer(path.read_bytes(), dtype="<f8")
    shape = tuple(side["shape"])
    if side["complex"]:
        arr = raw.reshape(shape + (2,))
        values = arr[..., 0] + 1j * arr[..., 1]
    else:
        values = raw.reshape(shape).copy()
    grid = GridSpec(tuple(side["grid"]["extent"]), tuple(side["grid"]["points"]))
    return values, grid, side["meta"]
