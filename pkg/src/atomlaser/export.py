"""CSV and PGM writers/readers.

All numbers are written with ``format(x, ".9g")``, which does not depend on the
process locale.
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from .cgle import DiagnosticsRecord, FieldState
from .coupled import CoupledState
from .sweep import LABEL_STATUS, STABLE, STATUS_LABELS, UNSTABLE, StabilityMap


def _fmt(x) -> str:
    return format(float(x), ".9g")


def _write(path, text: str) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="\n", encoding="ascii") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def _coordinate_columns(grid) -> list[np.ndarray]:
    return [c.ravel() for c in grid.coords()]


def field_csv(state: FieldState, path) -> Path:
    """Columns: index, x[, y], re_phi, im_phi, abs2 (row-major over the grid)."""
    grid = state.grid
    coords = _coordinate_columns(grid)
    names = ["x", "y"][: grid.dim]
    phi = state.phi.ravel()
    lines = [f"# tau={_fmt(state.tau)}", ",".join(["index", *names, "re_phi", "im_phi", "abs2"])]
    for i, v in enumerate(phi):
        cols = [str(i), *(_fmt(c[i]) for c in coords), _fmt(v.real), _fmt(v.imag), _fmt(abs(v) ** 2)]
        lines.append(",".join(cols))
    return _write(path, "\n".join(lines) + "\n")


def coupled_csv(state: CoupledState, path) -> Path:
    """Columns: index, x[, y] (units of l0), re_phi, im_phi, abs2, n_u (SI)."""
    grid = state.grid
    coords = _coordinate_columns(grid)
    names = ["x", "y"][: grid.dim]
    phi, n_u = state.phi.ravel(), state.n_u.ravel()
    lines = [f"# t={_fmt(state.t)}", ",".join(["index", *names, "re_phi", "im_phi", "abs2", "n_u"])]
    for i, v in enumerate(phi):
        cols = [str(i), *(_fmt(c[i]) for c in coords), _fmt(v.real), _fmt(v.imag), _fmt(abs(v) ** 2), _fmt(n_u[i])]
        lines.append(",".join(cols))
    return _write(path, "\n".join(lines) + "\n")


def diagnostics_csv(records: list[DiagnosticsRecord], path) -> Path:
    probes = records[0].probes if records else ()
    header = ["tau", "mass", "mean_density", "modulation_contrast", *(f"mode_{_fmt(q)}" for q in probes)]
    lines = [",".join(header)]
    for r in records:
        vals = [r.tau, r.mass, r.mean_density, r.modulation_contrast, *r.mode_amplitudes]
        lines.append(",".join(_fmt(v) for v in vals))
    return _write(path, "\n".join(lines) + "\n")


def map_csv(smap: StabilityMap, path) -> Path:
    """Comment header (``# key=value``), a column line, then one row per (omega, R) cell."""
    lines = [f"# {k}={v}" for k, v in smap.provenance.items()]
    for name, axis in (("omega", smap.omega_axis), ("R", smap.r_axis)):
        lines.append(f"# {name}_axis={_fmt(axis[0])},{_fmt(axis[-1])},{axis.size}")
    lines.append("omega,R,margin,verdict")
    for i, om in enumerate(smap.omega_axis):
        for j, r in enumerate(smap.r_axis):
            lines.append(f"{_fmt(om)},{_fmt(r)},{_fmt(smap.margin[i, j])},{STATUS_LABELS[int(smap.status[i, j])]}")
    return _write(path, "\n".join(lines) + "\n")


def read_map_csv(path) -> StabilityMap:
    meta: dict[str, str] = {}
    rows = []
    with open(path, encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key] = value
            elif not line.startswith("omega,"):
                om, r, m, v = line.split(",")
                rows.append((float(om), float(r), float(m), LABEL_STATUS[v]))
    omegas = sorted({row[0] for row in rows})
    rs = sorted({row[1] for row in rows})
    oi = {v: i for i, v in enumerate(omegas)}
    ri = {v: j for j, v in enumerate(rs)}
    margin = np.full((len(omegas), len(rs)), np.nan)
    status = np.zeros((len(omegas), len(rs)), dtype=int)
    for om, r, m, s in rows:
        margin[oi[om], ri[r]] = m
        status[oi[om], ri[r]] = s
    meta.pop("omega_axis", None)
    meta.pop("R_axis", None)
    return StabilityMap(np.array(omegas), np.array(rs), margin, status, meta.get("mode", "analytic"), meta)


def map_pixels(smap: StabilityMap) -> np.ndarray:
    """uint8 image, rows = R (highest R on top), columns = omega.

    Stable cells 128..255 scaled by margin, unstable 0..127 (darker for larger
    |margin|), below-threshold and failed cells 128.
    """
    m = np.nan_to_num(smap.margin.T[::-1], nan=0.0)
    s = smap.status.T[::-1]
    img = np.full(m.shape, 128, dtype=np.uint8)
    stable, unstable = s == STABLE, s == UNSTABLE
    if stable.any():
        top = np.abs(m[stable]).max() or 1.0
        img[stable] = np.clip(128 + np.rint(127 * np.abs(m[stable]) / top), 128, 255).astype(np.uint8)
    if unstable.any():
        top = np.abs(m[unstable]).max() or 1.0
        img[unstable] = np.clip(127 - np.rint(127 * np.abs(m[unstable]) / top), 0, 127).astype(np.uint8)
    return img


def map_pgm(smap: StabilityMap, path) -> Path:
    img = map_pixels(smap)
    h, w = img.shape
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as fh:
            fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
            fh.write(img.tobytes())
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    # magic, width, height, maxval, then exactly one whitespace byte before the raster
    m = re.match(rb"(P5)\s+(\d+)\s+(\d+)\s+(\d+)\s", data)
    if m is None:
        raise ValueError(f"{path}: not a binary PGM")
    w, h, maxval = (int(g) for g in m.groups()[1:])
    if maxval != 255:
        raise ValueError(f"{path}: unsupported maxval {maxval}")
    return np.frombuffer(data[m.end() : m.end() + w * h], dtype=np.uint8).reshape(h, w)
