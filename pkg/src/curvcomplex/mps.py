"""Fixed-column MPS export and import of :class:`LinearModel`.

Field layout (1-based columns): 2-3 indicator, 5-12 name, 15-22 name,
25-36 value, 40-47 name, 50-61 value.  Names longer than eight characters
are replaced by positional names (``C0000012``, ``R0000007``).  Integer
columns are wrapped in ``MARKER INTORG``/``INTEND`` blocks and always get
explicit bounds, since readers disagree on the default bounds of integer
columns.
"""
from __future__ import annotations

import os

import numpy as np
import scipy.sparse as sp

from .model import EQ, GE, LE, LinearModel

OBJ_ROW = "OBJ"
RHS_SET = "RHS"
BND_SET = "BND"
SENSE_CODE = {EQ: "E", LE: "L", GE: "G"}


class MPSError(ValueError):
    pass


def format_number(v: float) -> str:
    """Shortest-precision rendering of ``v`` that fits the 12-character field."""
    v = float(v)
    if not np.isfinite(v):
        raise MPSError("MPS values must be finite")
    if v == int(v) and abs(v) < 1e11:
        return str(int(v))
    for prec in range(12, 0, -1):
        s = f"{v:.{prec}g}"
        if len(s) <= 12:
            return s
    raise MPSError(f"cannot fit {v!r} into 12 characters")


def _line(ind="", n1="", n2="", v1="", n3="", v2=""):
    s = f" {ind:<2} {n1:<8}  {n2:<8}  {v1:>12}"
    if n3:
        s += f"   {n3:<8}  {v2:>12}"
    return s.rstrip() + "\n"


def _names(names, prefix):
    ok = all(0 < len(n) <= 8 and " " not in n for n in names) and len(set(names)) == len(names)
    if ok and OBJ_ROW not in names:
        return list(names)
    return [f"{prefix}{i:07d}" for i in range(len(names))]


def mps_names(model: LinearModel):
    """(column names, row names) as written to the file."""
    return _names(model.var_names, "C"), _names(model.row_names, "R")


def write_mps(model: LinearModel, path=None) -> str:
    model.validate()
    cols, rows = mps_names(model)
    out = [f"NAME          {model.name[:8]}\n", "ROWS\n", _line("N", OBJ_ROW)]
    for name, s in zip(rows, model.sense):
        out.append(_line(SENSE_CODE[s], name))
    out.append("COLUMNS\n")
    A = sp.csc_matrix(model.A)
    A.sort_indices()
    in_int = False
    marker = 0
    for j in range(model.num_vars):
        if bool(model.integer[j]) != in_int:
            kind = "'INTORG'" if not in_int else "'INTEND'"
            out.append(_line("", f"M{marker:07d}", "'MARKER'", "", kind, ""))
            marker += 1
            in_int = not in_int
        entries = []
        if model.objective[j] != 0:
            entries.append((OBJ_ROW, model.objective[j]))
        s, e = A.indptr[j], A.indptr[j + 1]
        entries += [(rows[i], v) for i, v in zip(A.indices[s:e], A.data[s:e]) if v != 0]
        if not entries:
            entries.append((OBJ_ROW, 0.0))
        for k in range(0, len(entries), 2):
            a = entries[k]
            if k + 1 < len(entries):
                b = entries[k + 1]
                out.append(_line("", cols[j], a[0], format_number(a[1]), b[0],
                                 format_number(b[1])))
            else:
                out.append(_line("", cols[j], a[0], format_number(a[1])))
    if in_int:
        out.append(_line("", f"M{marker:07d}", "'MARKER'", "", "'INTEND'", ""))
    out.append("RHS\n")
    nz = [(rows[i], v) for i, v in enumerate(model.rhs) if v != 0]
    for k in range(0, len(nz), 2):
        if k + 1 < len(nz):
            out.append(_line("", RHS_SET, nz[k][0], format_number(nz[k][1]), nz[k + 1][0],
                             format_number(nz[k + 1][1])))
        else:
            out.append(_line("", RHS_SET, nz[k][0], format_number(nz[k][1])))
    out.append("BOUNDS\n")
    for j in range(model.num_vars):
        lo, up = model.lower[j], model.upper[j]
        integer = bool(model.integer[j])
        if lo == up:
            out.append(_line("FX", BND_SET, cols[j], format_number(lo)))
            continue
        if np.isinf(lo) and np.isinf(up):
            out.append(_line("FR", BND_SET, cols[j]))
            continue
        if np.isinf(lo):
            out.append(_line("MI", BND_SET, cols[j]))
        elif lo != 0 or integer:
            out.append(_line("LO", BND_SET, cols[j], format_number(lo)))
        if np.isinf(up):
            if integer or np.isinf(lo):
                out.append(_line("PL", BND_SET, cols[j]))
        else:
            out.append(_line("UP", BND_SET, cols[j], format_number(up)))
    out.append("ENDATA\n")
    text = "".join(out)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def _fields(line: str):
    line = line.rstrip("\n").ljust(61)
    return (line[1:3].strip(), line[4:12].strip(), line[14:22].strip(), line[24:36].strip(),
            line[39:47].strip(), line[49:61].strip())


def read_mps(source) -> LinearModel:
    """Parse fixed-column MPS text (a path or the text itself)."""
    if isinstance(source, os.PathLike) or "\n" not in source:
        with open(source) as fh:
            source = fh.read()
    section = None
    name = "model"
    obj_row = None
    row_names, senses = [], []
    row_index = {}
    col_names, col_index = [], {}
    entries = []
    objective = {}
    integer = []
    rhs = {}
    bounds = []
    in_int = False
    for raw in source.splitlines():
        if not raw.strip() or raw.startswith("*"):
            continue
        if not raw.startswith(" "):
            head = raw.split()
            section = head[0]
            if section == "NAME" and len(head) > 1:
                name = raw[14:].strip() or head[1]
            if section == "ENDATA":
                break
            if section not in ("NAME", "ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS"):
                raise MPSError(f"unknown section {section}")
            if section == "RANGES":
                raise MPSError("RANGES are not supported")
            continue
        if section == "ROWS":
            ind, rname = _fields(raw)[:2]
            if ind == "N":
                if obj_row is None:
                    obj_row = rname
                continue
            if ind not in ("E", "L", "G"):
                raise MPSError(f"bad row type {ind!r}")
            row_index[rname] = len(row_names)
            row_names.append(rname)
            senses.append({"E": EQ, "L": LE, "G": GE}[ind])
        elif section == "COLUMNS":
            if "'MARKER'" in raw:
                if "'INTORG'" in raw:
                    in_int = True
                elif "'INTEND'" in raw:
                    in_int = False
                continue
            _, cname, r1, v1, r2, v2 = _fields(raw)
            if cname not in col_index:
                col_index[cname] = len(col_names)
                col_names.append(cname)
                integer.append(in_int)
            j = col_index[cname]
            for r, v in ((r1, v1), (r2, v2)):
                if not r:
                    continue
                if r == obj_row:
                    objective[j] = objective.get(j, 0.0) + float(v)
                elif r in row_index:
                    entries.append((row_index[r], j, float(v)))
                else:
                    raise MPSError(f"unknown row {r!r}")
        elif section == "RHS":
            _, _, r1, v1, r2, v2 = _fields(raw)
            for r, v in ((r1, v1), (r2, v2)):
                if r and r != obj_row:
                    rhs[row_index[r]] = float(v)
        elif section == "BOUNDS":
            ind, _, cname, v = _fields(raw)[:4]
            bounds.append((ind, col_index[cname], float(v) if v else None))
    n, m = len(col_names), len(row_names)
    lower = np.zeros(n)
    upper = np.full(n, np.inf)
    for ind, j, v in bounds:
        if ind == "UP":
            upper[j] = v
        elif ind == "LO":
            lower[j] = v
        elif ind == "FX":
            lower[j] = upper[j] = v
        elif ind == "FR":
            lower[j], upper[j] = -np.inf, np.inf
        elif ind == "MI":
            lower[j] = -np.inf
        elif ind == "PL":
            upper[j] = np.inf
        elif ind == "BV":
            lower[j], upper[j] = 0.0, 1.0
        else:
            raise MPSError(f"unsupported bound type {ind!r}")
    if entries:
        r, c, v = zip(*entries)
        A = sp.csr_matrix((v, (r, c)), shape=(m, n))
    else:
        A = sp.csr_matrix((m, n))
    obj = np.zeros(n)
    for j, v in objective.items():
        obj[j] = v
    b = np.zeros(m)
    for i, v in rhs.items():
        b[i] = v
    return LinearModel(obj, A, np.array(senses, dtype="<U1"), b, lower, upper,
                       np.array(integer, dtype=bool), col_names, row_names, name)


def write_solution(model: LinearModel, x, path=None) -> str:
    """Whitespace-separated ``name value`` lines for oracle comparison."""
    text = "".join(f"{n} {float(v)!r}\n" for n, v in zip(model.var_names, x))
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text
