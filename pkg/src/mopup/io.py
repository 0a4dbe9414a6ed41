"""Plain-text sample-set formats.

``MST1`` (matrices)::

    MST1 n p1 p2
    <n blocks of p1 lines, each with p2 values>

``TST1`` (order-d tensors)::

    TST1 n d p1 ... pd
    <n blocks of prod(p) values, 8 per line, mode 1 varying fastest>

Lines whose first non-blank character is ``#`` are comments and may appear
anywhere.  Values are written with ``%.17g`` so a write/read round trip is
exact.
"""

import math

import numpy as np

from .model import MatrixSampleSet, TensorSampleSet

VALUES_PER_LINE = 8


class ParseError(ValueError):
    """Malformed sample-set file; ``lineno`` is 1-based (0 if unknown)."""

    def __init__(self, message, lineno=0, path=None):
        where = f"{path}:{lineno}" if path else f"line {lineno}"
        super().__init__(f"{where}: {message}" if lineno else message)
        self.lineno = lineno


def _fmt(v):
    return "%.17g" % v


def _content_lines(fh):
    for lineno, raw in enumerate(fh, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield lineno, line


def _parse_floats(line, lineno, path):
    try:
        vals = [float(tok) for tok in line.split()]
    except ValueError as exc:
        raise ParseError(f"bad number ({exc})", lineno, path) from None
    if not all(math.isfinite(v) for v in vals):
        raise ParseError("non-finite value", lineno, path)
    return vals


def _parse_header(lines, magic, path):
    try:
        lineno, line = next(lines)
    except StopIteration:
        raise ParseError("empty file, expected a header", 0, path) from None
    toks = line.split()
    if not toks or toks[0] != magic:
        raise ParseError(f"expected header starting with {magic!r}, got {line[:40]!r}", lineno, path)
    try:
        ints = [int(t) for t in toks[1:]]
    except ValueError:
        raise ParseError(f"header fields must be integers: {line!r}", lineno, path) from None
    if any(v <= 0 for v in ints):
        raise ParseError(f"header sizes must be positive: {line!r}", lineno, path)
    return lineno, ints


def write_sample_set(samples, path):
    """Write a :class:`MatrixSampleSet` as MST1 or a :class:`TensorSampleSet` as TST1."""
    if isinstance(samples, TensorSampleSet):
        _write_tensor(samples, path)
        return
    x = samples.samples if isinstance(samples, MatrixSampleSet) else np.asarray(samples, float)
    n, p1, p2 = x.shape
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"MST1 {n} {p1} {p2}\n")
        for i in range(n):
            fh.write(f"# sample {i + 1}\n")
            for row in x[i]:
                fh.write(" ".join(_fmt(v) for v in row) + "\n")


def _write_tensor(samples, path):
    x = samples.samples
    n, dims = x.shape[0], x.shape[1:]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"TST1 {n} {len(dims)} " + " ".join(str(p) for p in dims) + "\n")
        for i in range(n):
            flat = x[i].ravel(order="F")
            fh.write(f"# sample {i + 1}\n")
            for start in range(0, flat.size, VALUES_PER_LINE):
                fh.write(" ".join(_fmt(v) for v in flat[start:start + VALUES_PER_LINE]) + "\n")


def read_sample_set(path):
    """Read an MST1 or TST1 file, dispatching on the header."""
    with open(path, encoding="utf-8") as fh:
        lines = _content_lines(fh)
        try:
            lineno, first = next(lines)
        except StopIteration:
            raise ParseError("empty file, expected a header", 0, path) from None
        magic = first.split()[0]
        chained = _prepend((lineno, first), lines)
        if magic == "MST1":
            return _read_matrix(chained, path)
        if magic == "TST1":
            return _read_tensor(chained, path)
        raise ParseError(f"unknown format tag {magic!r}", lineno, path)


def _prepend(item, it):
    yield item
    yield from it


def _read_matrix(lines, path):
    lineno, ints = _parse_header(lines, "MST1", path)
    if len(ints) != 3:
        raise ParseError("MST1 header needs n p1 p2", lineno, path)
    n, p1, p2 = ints
    expected = n * p1
    rows = []
    for lineno, line in lines:
        vals = _parse_floats(line, lineno, path)
        if len(vals) != p2:
            raise ParseError(f"expected {p2} values per row, found {len(vals)}", lineno, path)
        rows.append(vals)
        if len(rows) > expected:
            raise ParseError(f"expected {expected} data rows, found more", lineno, path)
    if len(rows) != expected:
        raise ParseError(f"expected {expected} data rows, found {len(rows)}", lineno, path)
    return MatrixSampleSet(np.array(rows).reshape(n, p1, p2))


def _read_tensor(lines, path):
    lineno, ints = _parse_header(lines, "TST1", path)
    if len(ints) < 3 or len(ints) != 2 + ints[1]:
        raise ParseError("TST1 header needs n d p1 ... pd with d >= 2", lineno, path)
    n, dims = ints[0], tuple(ints[2:])
    size = int(np.prod(dims))
    rows_per = -(-size // VALUES_PER_LINE)
    expected = n * rows_per
    blocks, cur, nrows = [], [], 0
    for lineno, line in lines:
        vals = _parse_floats(line, lineno, path)
        nrows += 1
        if nrows > expected:
            raise ParseError(f"expected {expected} data rows, found more", lineno, path)
        want = min(VALUES_PER_LINE, size - len(cur))
        if len(vals) != want:
            raise ParseError(f"expected {want} values on this row, found {len(vals)}", lineno, path)
        cur.extend(vals)
        if len(cur) == size:
            blocks.append(np.array(cur).reshape(dims, order="F"))
            cur = []
    if nrows != expected:
        raise ParseError(f"expected {expected} data rows, found {nrows}", lineno, path)
    return TensorSampleSet(np.stack(blocks))
