"""Output writers: legacy VTK ASCII snapshots and JSON run metadata.

Snapshots use the STRUCTURED_POINTS legacy format so any VTK-aware viewer
can load them without helper libraries.  Numbers are written with ``repr``
so repeated runs produce byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .fields import Grid

__all__ = ["write_vtk", "write_metadata"]


def _fmt(x: float) -> str:
    return repr(float(x))


def write_vtk(
    path,
    grid: Grid,
    point_scalars: dict | None = None,
    point_vectors: dict | None = None,
    cell_scalars: dict | None = None,
    title: str = "viscofrac snapshot",
) -> None:
    """Write nodal and cell fields as a legacy VTK ASCII structured-points file."""
    path = Path(path)
    nx1 = grid.node_shape[0]
    ny1 = grid.node_shape[1] if grid.dim == 2 else 1
    hx = grid.spacing[0]
    hy = grid.spacing[1] if grid.dim == 2 else 1.0

    lines = [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {nx1} {ny1} 1",
        "ORIGIN 0.0 0.0 0.0",
        f"SPACING {_fmt(hx)} {_fmt(hy)} 1.0",
    ]

    if point_scalars or point_vectors:
        lines.append(f"POINT_DATA {grid.n_nodes}")
        for name, arr in (point_scalars or {}).items():
            arr = np.asarray(arr, dtype=float).reshape(-1)
            lines.append(f"SCALARS {name} double 1")
            lines.append("LOOKUP_TABLE default")
            lines.extend(_fmt(x) for x in arr)
        for name, arr in (point_vectors or {}).items():
            arr = np.asarray(arr, dtype=float).reshape(grid.n_nodes, grid.dim)
            lines.append(f"VECTORS {name} double")
            for row in arr:
                x, y = row[0], (row[1] if grid.dim == 2 else 0.0)
                lines.append(f"{_fmt(x)} {_fmt(y)} 0.0")
    if cell_scalars:
        lines.append(f"CELL_DATA {grid.n_cells}")
        for name, arr in cell_scalars.items():
            arr = np.asarray(arr, dtype=float).reshape(-1)
            lines.append(f"SCALARS {name} double 1")
            lines.append("LOOKUP_TABLE default")
            lines.extend(_fmt(x) for x in arr)

    path.write_text("\n".join(lines) + "\n")


def write_metadata(path, metadata: dict) -> None:
    """Write run metadata as sorted, indented JSON (deterministic bytes)."""
    Path(path).write_text(json.dumps(metadata, indent=2, sort_keys=True) + "\n")
