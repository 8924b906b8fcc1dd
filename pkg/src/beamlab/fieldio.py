"""CSV persistence for response fields.

Layout::

    #nt=<N_t>
    #modules=<m1,m2,...>
    #label=<text>
    #grid=<kind>:<n_points>:<theta_max>
    theta_deg,phi_deg,re_1,im_1,...,re_Nt,im_Nt

Values are written with 17 significant digits, so a save/load round trip is
bit-exact.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .core import DirectionGrid, ResponseField, make_direction_grid
from .errors import FormatError

_HEADER_KEYS = ("nt", "modules", "label", "grid")


def format_field(field: ResponseField) -> str:
    nt = field.n_elements
    out = [
        f"#nt={nt}",
        "#modules=" + ",".join(str(m) for m in field.module_of.tolist()),
        f"#label={field.label}",
        f"#grid={field.grid.spec}",
    ]
    table = np.empty((field.grid.n_points, 2 + 2 * nt))
    table[:, 0] = field.grid.theta
    table[:, 1] = field.grid.phi
    table[:, 2::2] = field.responses.real
    table[:, 3::2] = field.responses.imag
    row_fmt = ",".join(["%.17g"] * table.shape[1])
    out.extend(row_fmt % tuple(row) for row in table.tolist())
    out.append("")
    return "\n".join(out)


def save_field(field: ResponseField, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_field(field))
    return path


def _parse_grid_spec(text, path, line):
    parts = text.split(":")
    if len(parts) != 3 or parts[0] not in ("fib", "points"):
        raise FormatError(path, line, 7, f"grid spec must be kind:n:theta_max, got {text!r}")
    try:
        n = int(parts[1])
        theta_max = float(parts[2])
    except ValueError:
        raise FormatError(path, line, 7, f"bad grid spec {text!r}") from None
    return parts[0], n, theta_max


def parse_field(text: str, path="<string>") -> ResponseField:
    header = {}
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        if raw.startswith("#"):
            key, sep, value = raw[1:].partition("=")
            if not sep or key not in _HEADER_KEYS:
                raise FormatError(path, lineno, 1, f"unknown header line {raw!r}")
            header[key] = (value, lineno)
            continue
        cells = raw.split(",")
        row = []
        col = 1
        for cell in cells:
            try:
                row.append(float(cell))
            except ValueError:
                raise FormatError(path, lineno, col, f"not a number: {cell!r}") from None
            col += len(cell) + 1
        rows.append((lineno, row))

    for key in _HEADER_KEYS:
        if key not in header:
            raise FormatError(path, 1, 1, f"missing #{key}= header")
    nt_text, nt_line = header["nt"]
    try:
        nt = int(nt_text)
    except ValueError:
        raise FormatError(path, nt_line, 5, f"#nt must be an integer, got {nt_text!r}") from None
    mod_text, mod_line = header["modules"]
    try:
        modules = [int(m) for m in mod_text.split(",")]
    except ValueError:
        raise FormatError(path, mod_line, 10, "module ids must be integers") from None
    if len(modules) != nt:
        raise FormatError(path, mod_line, 10, f"{len(modules)} module ids for nt={nt}")
    grid_text, grid_line = header["grid"]
    kind, n_points, theta_max = _parse_grid_spec(grid_text, path, grid_line)

    width = 2 + 2 * nt
    for lineno, row in rows:
        if len(row) != width:
            raise FormatError(path, lineno, 1, f"expected {width} columns, found {len(row)}")
    if len(rows) != n_points:
        raise FormatError(path, grid_line, 7, f"grid declares {n_points} points, file has {len(rows)}")
    if not rows:
        raise FormatError(path, 1, 1, "field has no data rows")
    table = np.array([r for _, r in rows], dtype=float)

    theta, phi = table[:, 0], table[:, 1]
    if kind == "fib":
        grid = make_direction_grid(n_points, theta_max)
        if not (np.array_equal(grid.theta, theta) and np.array_equal(grid.phi, phi)):
            raise FormatError(path, rows[0][0], 1, "directions do not match the declared Fibonacci grid")
    else:
        try:
            grid = DirectionGrid(theta, phi, theta_max, kind="points")
        except ValueError as exc:
            raise FormatError(path, rows[0][0], 1, str(exc)) from None
    responses = np.empty((n_points, nt), dtype=np.complex128)
    responses.real = table[:, 2::2]
    responses.imag = table[:, 3::2]
    return ResponseField(grid, responses, np.array(modules), header["label"][0])


def load_field(path) -> ResponseField:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        return parse_field(fh.read(), os.fspath(path))
