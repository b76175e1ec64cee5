"""Legacy ASCII VTK and CSV writers with a provenance header."""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from .mesh import CylinderMesh

__all__ = ["write_vtk", "write_csv", "format_value", "read_nodal_csv"]


def format_value(v) -> str:
    """Shortest round-trip text for floats; plain text otherwise."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, columns, rows, provenance: dict | None = None) -> None:
    """CSV with ``# key: value`` comment lines ahead of the header row."""
    buf = io.StringIO()
    for key, val in (provenance or {}).items():
        buf.write(f"# {key}: {val}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        cells = [row.get(c, "") for c in columns] if isinstance(row, dict) else list(row)
        writer.writerow([format_value(x) for x in cells])
    Path(path).write_text(buf.getvalue())


def write_vtk(path, mesh: CylinderMesh, fields: dict, title: str = "varfrac extended field") -> None:
    """STRUCTURED_GRID dump of nodal fields on the whole cylinder mesh.

    Global node order (x1 fastest, then x2, then y) is already VTK's order.
    """
    coords = mesh.coords()
    if mesh.N == 1:
        dims = (mesh.n_x, mesh.n_y, 1)
        pts = np.column_stack([coords[:, 0], coords[:, 1], np.zeros(len(coords))])
    else:
        dims = (mesh.n_x, mesh.n_x, mesh.n_y)
        pts = coords
    lines = ["# vtk DataFile Version 3.0", title[:255], "ASCII", "DATASET STRUCTURED_GRID",
             f"DIMENSIONS {dims[0]} {dims[1]} {dims[2]}", f"POINTS {len(pts)} double"]
    lines += [" ".join(format_value(c) for c in p) for p in pts]
    lines.append(f"POINT_DATA {len(pts)}")
    for name, vals in fields.items():
        vals = np.asarray(vals, dtype=float)
        if vals.shape != (mesh.n_nodes,):
            raise ValueError(f"field {name!r} has shape {vals.shape}, expected ({mesh.n_nodes},)")
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += [format_value(v) for v in vals]
    Path(path).write_text("\n".join(lines) + "\n")


def read_nodal_csv(path) -> np.ndarray:
    """Last column of a CSV file (comment lines and a non-numeric header are skipped)."""
    vals = []
    with open(path, newline="") as fh:
        for row in csv.reader(line for line in fh if not line.startswith("#")):
            if not row:
                continue
            try:
                vals.append(float(row[-1]))
            except ValueError:
                if vals:
                    raise
    return np.asarray(vals)
