"""Small CSV/digest helpers shared by the loaders and writers."""

from __future__ import annotations

import csv
import hashlib
import io
import os
from fractions import Fraction
from pathlib import Path
from typing import Iterator, Sequence

from .errors import InputValidationError


def file_digest(path: str | os.PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


def bytes_digest(data: bytes) -> str:
    return "sha256:" + hashlib.sha256(data).hexdigest()


def read_rows(path: str | os.PathLike, header: Sequence[str]) -> Iterator[tuple[int, list[str] | None]]:
    """Yield ``(line_number, fields)`` for every data row of a headed CSV.

    ``fields`` is None when the row has the wrong number of columns, so callers
    can count it as a rejection. Blank lines are skipped. The header must match
    ``header`` exactly.
    """
    path = Path(path)
    if not path.is_file():
        raise InputValidationError(f"missing file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            got = next(reader)
        except StopIteration:
            raise InputValidationError(f"{path}: empty file, header row required") from None
        if got and got[0].startswith("﻿"):
            got[0] = got[0][1:]
        if [c.strip() for c in got] != list(header):
            raise InputValidationError(
                f"{path}: line 1: expected header {','.join(header)!r}, got {','.join(got)!r}"
            )
        for row in reader:
            line = reader.line_num
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            yield line, (row if len(row) == len(header) else None)


def write_csv_bytes(header: Sequence[str], rows) -> bytes:
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(r)
    return buf.getvalue().encode("utf-8")


def parse_fraction(text: str) -> Fraction:
    """Parse a decimal or ``p/q`` string exactly."""
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"not a number: {text!r}") from None


def round_half_up(x: Fraction, places: int = 0) -> Fraction:
    """Round a non-negative-or-negative rational half away from zero."""
    scale = 10**places
    y = abs(x) * scale
    q = int(y + Fraction(1, 2))
    out = Fraction(q, scale)
    return -out if x < 0 else out


def fmt_decimal(x: Fraction, places: int) -> str:
    """Exact rational → fixed-point string, rounded half away from zero."""
    r = round_half_up(Fraction(x), places)
    sign = "-" if r < 0 else ""
    r = abs(r)
    scaled = int(r * 10**places)
    whole, frac = divmod(scaled, 10**places)
    if places == 0:
        return f"{sign}{whole}"
    return f"{sign}{whole}.{frac:0{places}d}"
