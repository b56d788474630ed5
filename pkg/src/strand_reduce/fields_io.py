"""Deterministic CSV serialization of grid fields, run diagnostics and reports.

One CSV per field, rows in t-major then s order, reals printed with 17
significant digits (lossless for doubles), LF line endings.  A manifest file
records the grid metadata and a sha256 checksum per field file, so any change
in any value changes the manifest.
"""

import hashlib
import os

import numpy as np

from .errors import ConfigError
from .grid import Grid2
from .simulate import COMPONENTS, StateSlice

FMT = "%.17g"

_KINDS = {(): "scalar", (3,): "vec3", (3, 3): "rot3"}
_WIDTH = {"scalar": 1, "vec3": 3, "rot3": 9}


def _fmt(x):
    return FMT % x


def write_fields(outdir, grid, fields):
    """Write ``{name: array}`` plus ``manifest.txt``; returns the file map."""
    os.makedirs(outdir, exist_ok=True)
    t = grid.t_coords()
    s = grid.s_coords()
    written = {}
    for name in sorted(fields):
        values = np.asarray(fields[name], dtype=float)
        kind = _KINDS.get(values.shape[2:])
        if kind is None or values.shape[:2] != (grid.n_t, grid.n_s):
            raise ValueError(f"field '{name}' does not match the grid")
        width = _WIDTH[kind]
        flat = values.reshape(grid.n_t, grid.n_s, width)
        path = os.path.join(outdir, f"{name}.csv")
        with open(path, "w", newline="\n") as fh:
            fh.write("t_index,s_index,t,s," +
                     ",".join(f"c{k + 1}" for k in range(width)) + "\n")
            for i in range(grid.n_t):
                ti = _fmt(t[i])
                for j in range(grid.n_s):
                    row = flat[i, j]
                    fh.write(f"{i},{j},{ti},{_fmt(s[j])},"
                             + ",".join(_fmt(v) for v in row) + "\n")
        written[name] = (path, kind)
    _write_manifest(outdir, grid, written)
    return written


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


def _write_manifest(outdir, grid, written):
    path = os.path.join(outdir, "manifest.txt")
    with open(path, "w", newline="\n") as fh:
        fh.write(f"grid n_t={grid.n_t} n_s={grid.n_s} dt={_fmt(grid.dt)} "
                 f"ds={_fmt(grid.ds)} bc={grid.bc_s}\n")
        for name in sorted(written):
            fpath, kind = written[name]
            fh.write(f"field name={name} file={os.path.basename(fpath)} "
                     f"kind={kind} sha256={_sha256(fpath)}\n")


def read_fields(indir, names=None):
    """Read fields written by :func:`write_fields`; bit-exact round trip."""
    manifest = os.path.join(indir, "manifest.txt")
    if not os.path.exists(manifest):
        raise ConfigError(f"no manifest.txt in {indir}")
    grid = None
    entries = {}
    with open(manifest) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            kv = dict(p.split("=", 1) for p in parts[1:])
            if parts[0] == "grid":
                grid = Grid2(n_t=int(kv["n_t"]), n_s=int(kv["n_s"]),
                             dt=float(kv["dt"]), ds=float(kv["ds"]),
                             bc_s=kv["bc"])
            elif parts[0] == "field":
                entries[kv["name"]] = (kv["file"], kv["kind"])
    if grid is None:
        raise ConfigError(f"manifest in {indir} has no grid line")
    fields = {}
    for name, (fname, kind) in entries.items():
        if names is not None and name not in names:
            continue
        width = _WIDTH[kind]
        data = np.loadtxt(os.path.join(indir, fname), delimiter=",",
                          skiprows=1, ndmin=2)
        values = data[:, 4:4 + width].reshape(grid.n_t, grid.n_s, width)
        if kind == "scalar":
            values = values[..., 0]
        elif kind == "rot3":
            values = values.reshape(grid.n_t, grid.n_s, 3, 3)
        fields[name] = values
    if names is not None:
        missing = set(names) - set(fields)
        if missing:
            raise ConfigError(f"fields {sorted(missing)} not found in {indir}")
    return grid, fields


def write_steps(outdir, rows):
    """Per-step diagnostics CSV."""
    path = os.path.join(outdir, "diagnostics.csv")
    with open(path, "w", newline="\n") as fh:
        fh.write("step,t,max_state,rotor_total_1,rotor_total_2,rotor_total_3\n")
        for row in np.asarray(rows):
            fh.write(f"{int(row[0])}," + ",".join(_fmt(v) for v in row[1:]) + "\n")
    return path


def write_initial_slice(path, state):
    """One-row-per-node CSV holding a full initial state slice."""
    arrays = [getattr(state, name) for name in COMPONENTS]
    n_s = arrays[0].shape[0]
    with open(path, "w", newline="\n") as fh:
        fh.write("s_index," + ",".join(f"{name}{k + 1}" for name in COMPONENTS
                                       for k in range(3)) + "\n")
        for j in range(n_s):
            vals = [a[j, k] for a in arrays for k in range(3)]
            fh.write(f"{j}," + ",".join(_fmt(v) for v in vals) + "\n")
    return path


def read_initial_slice(path, n_s):
    if not os.path.exists(path):
        raise ConfigError(f"initial state file not found: {path}", key="init.file")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape != (n_s, 1 + 3 * len(COMPONENTS)):
        raise ConfigError(
            f"initial state file {path} has shape {data.shape}, "
            f"expected ({n_s}, {1 + 3 * len(COMPONENTS)})", key="init.file")
    parts = {name: data[:, 1 + 3 * i:4 + 3 * i]
             for i, name in enumerate(COMPONENTS)}
    return StateSlice(**parts)


def format_report(title, checks, preamble=()):
    """Plain-text report: one ``name value tolerance verdict`` line per check."""
    lines = [title]
    lines.extend(preamble)
    for c in checks:
        tol = "-" if c.tol is None else _fmt(c.tol)
        lines.append(f"{c.name} {_fmt(c.value)} {tol} "
                     f"{'PASS' if c.passed else 'FAIL'}")
    return "\n".join(lines) + "\n"


def write_report(path, title, checks, preamble=()):
    text = format_report(title, checks, preamble)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
    return text
