"""Bit-exact persistence and export formats.

Snapshot layout: magic b"HOPF", format version (u32 LE), metadata length
(u32 LE), UTF-8 JSON metadata, then the payload as raw little-endian
float64, sites ordered x-fastest with components innermost.  Round trips
are bitwise identical regardless of host endianness.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile

import numpy as np

from . import algebra as alg
from . import fields as fl
from .errors import ConfigError
from .lattice import Grid, LatticeField

MAGIC = b"HOPF"
FORMAT_VERSION = 1

FIELD_KINDS = ("map_s2", "lift_su2", "potential")


class SnapshotError(Exception):
    pass


def _atomic_write(path, payload):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".hopf-tmp-")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _site_payload(values):
    """Sites x-fastest, components innermost: transpose to (z, y, x, comps)."""
    comps = values.shape[3:]
    flat = values.reshape(values.shape[:3] + (-1,))
    return np.ascontiguousarray(flat.transpose(2, 1, 0, 3)).astype("<f8")


def _payload_sites(raw, n, ncomp):
    arr = np.frombuffer(raw, dtype="<f8").reshape(n, n, n, ncomp)
    return np.ascontiguousarray(arr.transpose(2, 1, 0, 3))


def write_snapshot(path, obj, kind=None, extra_meta=None):
    """Write a MapField, LiftField or PotentialField to a snapshot file."""
    if isinstance(obj, fl.MapField):
        kind = kind or "map_s2"
        values = obj.values
        grid = obj.grid
    elif isinstance(obj, fl.LiftField):
        kind = kind or "lift_su2"
        values = obj.values
        grid = obj.grid
    elif isinstance(obj, fl.PotentialField):
        kind = kind or "potential"
        values = obj.a.data
        grid = obj.grid
    else:
        raise SnapshotError(f"cannot snapshot object of type {type(obj).__name__}")
    if kind not in FIELD_KINDS:
        raise SnapshotError(f"unknown field kind '{kind}'")
    ncomp = int(np.prod(values.shape[3:]))
    meta = {
        "n": grid.n,
        "length": grid.length,
        "kind": kind,
        "components": ncomp,
        "creator": "hopfion",
        "format": FORMAT_VERSION,
    }
    if extra_meta:
        meta.update(extra_meta)
    meta_bytes = json.dumps(meta, sort_keys=True).encode("utf-8")
    header = MAGIC + struct.pack("<II", FORMAT_VERSION, len(meta_bytes))
    payload = _site_payload(values.reshape(values.shape[:3] + (ncomp,)))
    _atomic_write(path, header + meta_bytes + payload.tobytes())


def read_snapshot(path):
    """Returns (metadata dict, field object)."""
    with open(path, "rb") as handle:
        blob = handle.read()
    if blob[:4] != MAGIC:
        raise SnapshotError("bad magic; not a snapshot file")
    version, meta_len = struct.unpack("<II", blob[4:12])
    if version != FORMAT_VERSION:
        raise SnapshotError(f"unsupported snapshot version {version}")
    meta = json.loads(blob[12:12 + meta_len].decode("utf-8"))
    n = meta["n"]
    ncomp = meta["components"]
    raw = blob[12 + meta_len:]
    expected = n ** 3 * ncomp * 8
    if len(raw) != expected:
        raise SnapshotError(f"payload is {len(raw)} bytes, expected {expected}")
    values = _payload_sites(raw, n, ncomp)
    grid = Grid(n, meta["length"])
    kind = meta["kind"]
    if kind == "map_s2":
        return meta, fl.MapField(grid, alg.su2_u1(), values, renormalize=False)
    if kind == "lift_su2":
        return meta, fl.LiftField(grid, alg.su2_u1(), values, renormalize=False)
    if kind == "potential":
        data = values.reshape(n, n, n, 3, ncomp // 3)
        a = LatticeField(grid, 1, data)
        return meta, fl.PotentialField(a, fl.constant_map(grid), alg.su2_u1())
    raise SnapshotError(f"unknown field kind '{kind}'")


# ---------------------------------------------------------------------------
# run configuration
# ---------------------------------------------------------------------------

CONFIG_DEFAULTS = {
    "grid.n": 32,
    "grid.length": 2.0 * np.pi,
    "model.pair": "su2_u1",
    "model.variant": "coisotropy",
    "model.scale_dirichlet": 1.0,
    "model.scale_skyrme": 1.0,
    "ansatz.kind": "hopf",
    "ansatz.charge": 1,
    "optimizer.max_iters": 2000,
    "optimizer.grad_tol": 1e-3,
    "optimizer.step_init": 0.2,
    "optimizer.step_rule": "barzilai_borwein",
    "optimizer.checkpoint_every": 0,
    "optimizer.charge_check_every": 25,
    "optimizer.step_cap": 0.2,
    "output.dir": "hopfion-out",
    "seed": 0,
}

_CONFIG_PARSERS = {
    "grid.n": int,
    "grid.length": float,
    "model.pair": str,
    "model.variant": str,
    "model.scale_dirichlet": float,
    "model.scale_skyrme": float,
    "ansatz.kind": str,
    "ansatz.charge": int,
    "optimizer.max_iters": int,
    "optimizer.grad_tol": float,
    "optimizer.step_init": float,
    "optimizer.step_rule": str,
    "optimizer.checkpoint_every": int,
    "optimizer.charge_check_every": int,
    "optimizer.step_cap": float,
    "output.dir": str,
    "seed": int,
}


def parse_config(text):
    """Parse a `key = value` document; unknown keys are a hard error."""
    values = dict(CONFIG_DEFAULTS)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in CONFIG_DEFAULTS:
            raise ConfigError(f"line {lineno}: unknown key '{key}'")
        try:
            values[key] = _CONFIG_PARSERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for '{key}': {exc}") from exc
    return values


def load_config(path):
    with open(path, "r", encoding="utf-8") as handle:
        return parse_config(handle.read())


# ---------------------------------------------------------------------------
# history and export
# ---------------------------------------------------------------------------

def write_history_csv(path, run):
    lines = ["iter,energy,dirichlet,skyrme,grad_norm,step,charge"]
    for it, e, e2, e4, gn, st, ch in run.history:
        charge = "" if ch is None else repr(ch)
        lines.append(f"{it},{e!r},{e2!r},{e4!r},{gn!r},{st!r},{charge}")
    _atomic_write(path, ("\n".join(lines) + "\n").encode("utf-8"))


def _vtk_header(grid, title):
    return [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {grid.n} {grid.n} {grid.n}",
        "ORIGIN 0 0 0",
        f"SPACING {grid.h!r} {grid.h!r} {grid.h!r}",
        f"POINT_DATA {grid.n ** 3}",
    ]


def _vtk_vectors(name, values):
    # VTK structured points iterate x fastest
    lines = [f"VECTORS {name} double"]
    flat = values.transpose(2, 1, 0, 3).reshape(-1, 3)
    for row in flat:
        lines.append(f"{row[0]!r} {row[1]!r} {row[2]!r}")
    return lines


def _vtk_scalars(name, values):
    lines = [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
    flat = values.transpose(2, 1, 0).reshape(-1)
    for v in flat:
        lines.append(repr(float(v)))
    return lines


def export_vtk(path, meta, obj):
    """Legacy ASCII STRUCTURED_POINTS export of a snapshot's field."""
    kind = meta["kind"]
    grid = obj.grid
    lines = _vtk_header(grid, f"hopfion {kind}")
    if kind == "map_s2":
        lines += _vtk_vectors("psi", obj.values)
    elif kind == "lift_su2":
        lines += _vtk_vectors("lift_im", obj.values[..., 1:])
        lines += _vtk_scalars("lift_re", obj.values[..., 0])
    else:  # potential: one vector block per axis slot
        for mu, label in enumerate(("a_x", "a_y", "a_z")):
            lines += _vtk_vectors(label, obj.a.slot(mu))
    _atomic_write(path, ("\n".join(lines) + "\n").encode("utf-8"))


def export_density_csv(path, obj):
    """Energy density per site for maps; squared pointwise norm otherwise."""
    from .energy import energy_map

    if isinstance(obj, fl.MapField):
        density = energy_map(obj).density.slot(0)[..., 0]
    elif isinstance(obj, fl.LiftField):
        density = np.sum(obj.values * obj.values, axis=-1)
    else:
        density = obj.a.norm2_density()
    grid = obj.grid
    coords = grid.site_coords()
    lines = ["x,y,z,density"]
    flat_c = coords.reshape(-1, 3)
    flat_d = density.reshape(-1)
    for (x, y, z), dv in zip(flat_c, flat_d):
        lines.append(f"{x!r},{y!r},{z!r},{dv!r}")
    _atomic_write(path, ("\n".join(lines) + "\n").encode("utf-8"))
