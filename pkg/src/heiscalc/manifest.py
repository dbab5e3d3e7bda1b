"""Manifest documents (TOML) describing a frame, base points and run settings.

Fields::

    dim    = 3                      # number of coordinates, d + 1
    mode   = "rational"             # or "float"
    points = [[0, 0, 0], ["1/2", 0, 1]]
    mu     = "0"                    # scalar or square matrix of expressions in x0..x{dim-1}
    mu_imag = "0"                   # optional imaginary part, same shape as mu

    [frame]                         # coefficient rows of X0..Xd in the coordinate basis
    X0 = ["1", "0", "0"]
    X1 = ["x2", "1", "0"]
    X2 = ["-x1", "0", "1"]

    [domain]                        # optional box; points outside it are flagged
    lower = [-1, -1, -1]
    upper = [1, 1, 1]

    [cr_signature]                  # optional, for the Y(q) and Y(p,q) conditions
    n = 3
    r = 3
    kappa = 1

    [grid]                          # optional verification settings
    N = 64
    coarse = 32
    extent = 8.0
    seeds = 3
    window = 0.5

    [parametrix]                    # optional evaluation settings
    covectors = [[1, 0, 0], [0.5, 1, -1]]
    ray = [1, 0.3, 0.2]
"""
from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - interpreter dependent
    import tomli as tomllib

from . import exprparse as ep
from .errors import InputError
from .geometry import HFrame, load_frame
from .hypocheck import CRSignature

__all__ = ["Manifest", "load_manifest", "parse_manifest", "canonical_digest", "GridSettings"]

KNOWN_KEYS = {
    "dim", "mode", "points", "mu", "mu_imag", "frame", "domain", "cr_signature", "grid",
    "parametrix", "name", "description",
}


def _canonical(obj: Any):
    if isinstance(obj, Mapping):
        return {str(k): _canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    if hasattr(obj, "isoformat"):
        return obj.isoformat()
    return obj


def canonical_digest(data: Mapping) -> str:
    """SHA-256 of the sorted, whitespace-free JSON rendering of ``data``."""
    text = json.dumps(_canonical(data), sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class GridSettings:
    N: int = 64
    coarse: int = 32
    extent: float = 8.0
    seeds: int = 3
    window: float = 0.5


@dataclass
class Manifest:
    data: dict
    frame: HFrame
    digest: str
    source: str = "<memory>"
    mu_src: tuple | None = None
    mu_imag_src: tuple | None = None
    cr: CRSignature | None = None
    grid: GridSettings = field(default_factory=GridSettings)
    covectors: tuple = ()
    ray: tuple | None = None

    @property
    def mode(self) -> str:
        return self.frame.mode

    @property
    def dim(self) -> int:
        return self.frame.dim

    @property
    def points(self) -> tuple:
        return self.frame.sample_points or (self.frame.center(),)

    def mu_at(self, point, override=None) -> tuple:
        """mu(x) at ``point`` as a tuple-of-tuples (exact in rational mode when possible)."""
        if override is not None:
            src, imag = override, None
        else:
            src, imag = self.mu_src, self.mu_imag_src
        if src is None:
            raise InputError("manifest has no mu section")
        exact = self.mode == "rational"
        pt = self.frame.point(point)
        mode = "auto" if exact else "float"
        out = []
        for i, row in enumerate(src):
            vals = []
            for j, s in enumerate(row):
                v = _eval_entry(s, self.dim, pt, mode)
                if imag is not None:
                    w = _eval_entry(imag[i][j], self.dim, pt, mode)
                    if w != 0:
                        v = complex(float(v), float(w))
                vals.append(v)
            out.append(tuple(vals))
        return tuple(out)


def _eval_entry(s, dim, pt, mode):
    if isinstance(s, complex):
        return s
    text = str(s).strip()
    try:
        e = ep.parse(text, dim)
    except InputError:
        # accept Python complex literals such as "1+2j"
        try:
            c = complex(text.replace(" ", ""))
        except ValueError:
            raise
        return c if c.imag else c.real
    v = ep.evaluate(e, pt, mode)
    if isinstance(v, Fraction) and v.denominator == 1:
        return int(v)
    return v


def _matrix(value, name) -> tuple:
    if isinstance(value, (str, int, float)):
        return ((str(value),),)
    if isinstance(value, list) and value and all(isinstance(r, list) for r in value):
        r = len(value)
        if any(len(row) != r for row in value):
            raise InputError(f"{name} must be square")
        return tuple(tuple(str(v) for v in row) for row in value)
    raise InputError(f"{name} must be a scalar or a square matrix")


def parse_manifest(data: Mapping, source: str = "<memory>") -> Manifest:
    if not isinstance(data, Mapping):
        raise InputError("manifest must be a table")
    unknown = set(data) - KNOWN_KEYS
    if unknown:
        raise InputError(f"unknown manifest keys: {sorted(unknown)}")
    frame = load_frame(data)
    mu = _matrix(data["mu"], "mu") if "mu" in data else None
    mu_im = _matrix(data["mu_imag"], "mu_imag") if "mu_imag" in data else None
    if mu_im is not None and (mu is None or len(mu_im) != len(mu)):
        raise InputError("mu_imag must match the shape of mu")
    cr = None
    if "cr_signature" in data:
        c = data["cr_signature"]
        try:
            cr = CRSignature(int(c["n"]), int(c["r"]), int(c["kappa"]))
        except KeyError as exc:
            raise InputError(f"cr_signature is missing {exc.args[0]!r}") from None
    g = data.get("grid", {}) or {}
    try:
        grid = GridSettings(
            int(g.get("N", 64)), int(g.get("coarse", max(8, int(g.get("N", 64)) // 2))),
            float(g.get("extent", 8.0)), int(g.get("seeds", 3)), float(g.get("window", 0.5)),
        )
    except (TypeError, ValueError) as exc:
        raise InputError(f"bad grid settings: {exc}") from None
    p = data.get("parametrix", {}) or {}
    covs = tuple(tuple(float(v) for v in c) for c in p.get("covectors", ()))
    for c in covs:
        if len(c) != frame.dim:
            raise InputError(f"covector {c} must have {frame.dim} components")
    ray = tuple(float(v) for v in p["ray"]) if "ray" in p else None
    if ray is not None and len(ray) != frame.dim:
        raise InputError(f"ray must have {frame.dim} components")
    return Manifest(dict(data), frame, canonical_digest(data), source, mu, mu_im, cr, grid, covs, ray)


def load_manifest(path) -> Manifest:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read manifest {path}: {exc.strerror}") from None
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise InputError(f"manifest {path} is not valid TOML: {exc}") from None
    return parse_manifest(data, str(path))
