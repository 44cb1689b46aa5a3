"""Plain-text serialization of :class:`~walkerkit.walker.WalkerData`.

Format::

    walker n=4 r=1
    A:
    1; 0
    0; 1
    H:
    x3
    0
    B:
    x2^2 - x3^2

One row per line, entries separated by ``;``.  Blocks of size zero are
omitted (``A`` and ``H`` when ``n = 2r``, ``H`` and ``B`` when ``r = 0``).
Blank lines and lines starting with ``#`` are ignored.
"""

from __future__ import annotations

import re
from pathlib import Path

from .expr import ExprSyntaxError, IndexRangeError, parse
from .walker import WalkerData, WalkerInvariantError

__all__ = ["WalkerFormatError", "format_walker", "parse_walker", "read_walker", "write_walker"]

_HEADER = re.compile(r"^\s*walker\s+n\s*=\s*(\d+)\s+r\s*=\s*(\d+)\s*$")
_LABEL = re.compile(r"^\s*([AHB])\s*:\s*$")


class WalkerFormatError(ValueError):
    """Malformed WalkerData text.  ``line`` is 1-based, ``offset`` a byte offset into the text."""

    def __init__(self, message: str, line: int | None = None, offset: int | None = None):
        self.line = line
        self.offset = offset
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if offset is not None:
            loc.append(f"byte offset {offset}")
        super().__init__(f"{message} ({', '.join(loc)})" if loc else message)


def format_walker(data: WalkerData) -> str:
    lines = [f"walker n={data.n} r={data.r}"]
    for name, blk in (("A", data.A), ("H", data.H), ("B", data.B)):
        if not blk or not blk[0]:
            continue
        lines.append(f"{name}:")
        for row in blk:
            lines.append("; ".join(f.text() for f in row))
    return "\n".join(lines) + "\n"


def parse_walker(text: str) -> WalkerData:
    raw = text.encode("utf-8")
    # (line number, byte offset of line start, line text)
    lines = []
    pos = 0
    for number, chunk in enumerate(raw.split(b"\n"), start=1):
        lines.append((number, pos, chunk.decode("utf-8")))
        pos += len(chunk) + 1
    content = [(k, off, s) for k, off, s in lines if s.strip() and not s.lstrip().startswith("#")]
    if not content:
        raise WalkerFormatError("empty input", 1, 0)
    k, off, s = content[0]
    m = _HEADER.match(s)
    if m is None:
        raise WalkerFormatError("expected header 'walker n=<int> r=<int>'", k, off)
    n, r = int(m.group(1)), int(m.group(2))
    if n < 1 or 2 * r > n:
        raise WalkerFormatError(f"need n >= 1 and 0 <= r <= n/2, got n={n}, r={r}", k, off)

    blocks: dict[str, list[list]] = {}
    current = None
    for k, off, s in content[1:]:
        lab = _LABEL.match(s)
        if lab:
            current = lab.group(1)
            if current in blocks:
                raise WalkerFormatError(f"block {current} given twice", k, off)
            blocks[current] = []
            continue
        if current is None:
            raise WalkerFormatError("expected a block label 'A:', 'H:' or 'B:'", k, off)
        row = []
        col = 0
        for piece in s.split(";"):
            lead = len(piece) - len(piece.lstrip())
            start = off + len(s[:col + lead].encode("utf-8"))
            try:
                row.append(parse(piece.strip(), n))
            except ExprSyntaxError as exc:
                raise WalkerFormatError(
                    f"in block {current}: {exc}", k, start + exc.offset
                ) from None
            except IndexRangeError as exc:
                where = start + (exc.offset or 0)
                raise WalkerFormatError(f"in block {current}: {exc}", k, where) from None
            col += len(piece) + 1
        blocks[current].append(row)

    m_dim = n - 2 * r
    shapes = {"A": (m_dim, m_dim), "H": (m_dim, r), "B": (r, r)}
    for name, (rows, cols) in shapes.items():
        if name not in blocks:
            if rows * cols:
                raise WalkerFormatError(f"missing block {name} ({rows}x{cols})")
            blocks[name] = [] if rows == 0 else [[] for _ in range(rows)]
    try:
        return WalkerData.from_blocks(n, r, blocks["A"], blocks["H"], blocks["B"])
    except WalkerInvariantError as exc:
        raise WalkerFormatError(str(exc)) from None


def read_walker(path) -> WalkerData:
    return parse_walker(Path(path).read_text(encoding="utf-8"))


def write_walker(path, data: WalkerData) -> None:
    Path(path).write_text(format_walker(data), encoding="utf-8")
