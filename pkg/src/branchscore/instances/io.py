"""Canonical text format for MILP instances.

Layout (one section keyword per line, numbers with 17 significant digits)::

    branchscore-mip 1
    name <text>
    dims <n> <m>
    obj
    <c_0> ... <c_{n-1}>
    rows
    <b_i> | <j>:<a_ij> <j>:<a_ij> ...      (m lines)
    bounds
    <lo_j> <up_j>                          (n lines, inf / -inf allowed)
    integer
    <indices of integer variables>
    end
"""

from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from ..milp.instance import InvalidInstanceError, MilpInstance

MAGIC = "branchscore-mip"
FORMAT_VERSION = 1


class InstanceFormatError(ValueError):
    def __init__(self, message: str, line: int, source: str = "<text>"):
        super().__init__(f"{source}:{line}: {message}")
        self.line = line
        self.source = source


def _num(v: float) -> str:
    return format(float(v), ".17g")


def format_instance(inst: MilpInstance) -> str:
    A = inst.A
    out = [f"{MAGIC} {FORMAT_VERSION}", f"name {inst.name or '-'}", f"dims {inst.num_vars} {inst.num_cons}", "obj"]
    out.append(" ".join(_num(v) for v in inst.c))
    out.append("rows")
    for i in range(inst.num_cons):
        lo, hi = A.indptr[i], A.indptr[i + 1]
        pairs = " ".join(f"{j}:{_num(a)}" for j, a in zip(A.indices[lo:hi], A.data[lo:hi]))
        out.append(f"{_num(inst.b[i])} | {pairs}")
    out.append("bounds")
    out.extend(f"{_num(lo)} {_num(up)}" for lo, up in zip(inst.lower, inst.upper))
    out.append("integer")
    out.append(" ".join(str(j) for j in np.flatnonzero(inst.integrality)))
    out.append("end")
    return "\n".join(out) + "\n"


def write_instance(inst: MilpInstance, path) -> str:
    """Write ``inst`` to ``path``; returns the sha256 of the bytes written."""
    text = format_instance(inst)
    data = text.encode()
    Path(path).write_bytes(data)
    return hashlib.sha256(data).hexdigest()


class _Reader:
    def __init__(self, text: str, source: str):
        self.lines = text.splitlines()
        self.pos = 0
        self.source = source

    def error(self, msg: str, line: int | None = None) -> InstanceFormatError:
        return InstanceFormatError(msg, self.pos if line is None else line, self.source)

    def next(self, what: str) -> str:
        while self.pos < len(self.lines):
            line = self.lines[self.pos].strip()
            self.pos += 1
            if line and not line.startswith("#"):
                return line
        raise self.error(f"unexpected end of file, expected {what}", len(self.lines))

    def keyword(self, kw: str) -> str:
        line = self.next(kw)
        if line.split()[0] != kw:
            raise self.error(f"expected '{kw}', found {line.split()[0]!r}")
        return line[len(kw):].strip()

    def floats(self, text: str, count: int | None = None) -> np.ndarray:
        try:
            vals = np.array([float(t) for t in text.split()], dtype=float)
        except ValueError as e:
            raise self.error(f"bad number: {e}") from None
        if count is not None and vals.size != count:
            raise self.error(f"expected {count} numbers, found {vals.size}")
        return vals


def parse_instance(text: str, source: str = "<text>") -> MilpInstance:
    r = _Reader(text, source)
    header = r.next("header").split()
    if len(header) != 2 or header[0] != MAGIC:
        raise r.error(f"missing '{MAGIC} <version>' header")
    if header[1] != str(FORMAT_VERSION):
        raise r.error(f"unsupported format version {header[1]}")
    name = r.keyword("name")
    dims = r.keyword("dims").split()
    try:
        n, m = int(dims[0]), int(dims[1])
    except (ValueError, IndexError):
        raise r.error("dims needs two integers") from None
    if n < 1:
        raise r.error("instance has no variables")
    if m < 1:
        raise r.error("instance has no constraints")
    r.keyword("obj")
    c = r.floats(r.next("objective coefficients"), n)
    r.keyword("rows")
    b = np.empty(m)
    rows, cols, vals = [], [], []
    for i in range(m):
        line = r.next(f"row {i}")
        if "|" not in line:
            raise r.error("row must read '<rhs> | j:a ...'")
        rhs, body = line.split("|", 1)
        b[i] = r.floats(rhs, 1)[0]
        if not body.split():
            raise r.error(f"row {i} is empty")
        for tok in body.split():
            try:
                j, a = tok.split(":")
                j, a = int(j), float(a)
            except ValueError:
                raise r.error(f"bad entry {tok!r}") from None
            if not 0 <= j < n:
                raise r.error(f"column index {j} out of range")
            rows.append(i)
            cols.append(j)
            vals.append(a)
    r.keyword("bounds")
    lower, upper = np.empty(n), np.empty(n)
    for j in range(n):
        lower[j], upper[j] = r.floats(r.next(f"bounds of variable {j}"), 2)
    r.keyword("integer")
    integrality = np.zeros(n, dtype=bool)
    line = r.next("integer indices or 'end'")
    if line != "end":
        try:
            idx = [int(t) for t in line.split()]
        except ValueError:
            raise r.error("integer indices must be integers") from None
        if any(not 0 <= j < n for j in idx):
            raise r.error("integer index out of range")
        integrality[idx] = True
        if r.next("'end'") != "end":
            raise r.error("expected 'end'")
    A = sp.csr_matrix((vals, (rows, cols)), shape=(m, n))
    try:
        return MilpInstance(c, A, b, lower, upper, integrality, name="" if name == "-" else name)
    except InvalidInstanceError as e:
        raise r.error(str(e)) from None


def read_instance(path) -> MilpInstance:
    path = Path(path)
    return parse_instance(path.read_text(), source=str(path))
