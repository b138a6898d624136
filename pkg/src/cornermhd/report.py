"""Deterministic CSV and column-text emission.

Every artifact starts with '#'-prefixed header lines naming its producer.
Floats print with repr-faithful %.17g so identical runs give identical
bytes.
"""

from __future__ import annotations

import hashlib
from pathlib import Path


def fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return "" if v is None else str(v)


def write_csv(path, columns, rows, header_lines=()):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# {h}" for h in header_lines]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def dump_field(field, path, extra_header=()):
    """Column-text field dump: '# grid n1 n2 domain=<kind>' then one
    'x1 x2 value' (or 'r theta value') row per cell."""
    g = field.grid
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# grid {g.n1} {g.n2} domain={g.domain.kind}"]
    lines += [f"# {h}" for h in extra_header]
    A, B = g.mesh()
    v = field.values
    for i in range(g.n1):
        for j in range(g.n2):
            lines.append(f"{fmt(float(A[i, j]))} {fmt(float(B[i, j]))} {fmt(float(v[i, j]))}")
    path.write_text("\n".join(lines) + "\n")


def read_field_values(path):
    """Read back a dump_field file; returns (header, ndarray of rows)."""
    import numpy as np

    lines = Path(path).read_text().splitlines()
    header = [ln for ln in lines if ln.startswith("#")]
    data = np.array(
        [[float(t) for t in ln.split()] for ln in lines if ln and not ln.startswith("#")]
    )
    return header, data


def config_hash(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()[:16]
