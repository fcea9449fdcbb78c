"""Tech-Risk mapping matrices: (tech level T, risk score R) → automation index.

A matrix is a 4×5 grid of exact rationals indexed by T in 0..3 and R in 1..5.
Three presets are provided; anything else can be loaded from JSON::

    {"name": "...", "cells": [[R1..R5 for T=0], [T=1], [T=2], [T=3]]}
"""

from __future__ import annotations

import enum
import json
import os
import warnings
from dataclasses import dataclass
from fractions import Fraction

from .errors import MatrixError

T_RANGE = range(0, 4)
R_RANGE = range(1, 6)

F = Fraction


class MonotonicityWarning(UserWarning):
    pass


class ScenarioId(str, enum.Enum):
    BASELINE = "baseline"
    AGGRESSIVE = "aggressive"
    CONSERVATIVE = "conservative"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class MappingMatrix:
    name: str
    cells: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        cells = tuple(tuple(Fraction(v) for v in row) for row in self.cells)
        if len(cells) != len(T_RANGE) or any(len(r) != len(R_RANGE) for r in cells):
            raise MatrixError(f"matrix {self.name!r} must be 4 rows (T=0..3) of 5 cells (R=1..5)")
        for t in T_RANGE:
            for r in R_RANGE:
                v = cells[t][r - 1]
                if not 0 <= v <= 1:
                    raise MatrixError(f"matrix {self.name!r}: cell (T={t}, R={r}) = {float(v)} outside [0, 1]")
        object.__setattr__(self, "cells", cells)

    def __call__(self, tech: int, risk: int) -> Fraction:
        return automation_index(self, tech, risk)

    def items(self):
        for t in T_RANGE:
            for r in R_RANGE:
                yield (t, r), self.cells[t][r - 1]

    def dominates(self, other: "MappingMatrix") -> bool:
        return all(v >= other.cells[t][r - 1] for (t, r), v in self.items())

    def monotonicity_violations(self) -> list[str]:
        out = []
        for t in T_RANGE:
            for r in R_RANGE:
                v = self.cells[t][r - 1]
                if r < 5 and v < self.cells[t][r]:
                    out.append(f"({t},{r})={float(v)} < ({t},{r + 1})={float(self.cells[t][r])}: increases with risk")
                if t < 3 and v > self.cells[t + 1][r - 1]:
                    out.append(
                        f"({t},{r})={float(v)} > ({t + 1},{r})={float(self.cells[t + 1][r - 1])}: decreases with tech"
                    )
        return out

    def to_json(self) -> dict:
        return {"name": self.name, "cells": [[_json_num(v) for v in row] for row in self.cells]}


def _json_num(v: Fraction):
    if v.denominator == 1:
        return int(v)
    return float(v)


def automation_index(m: MappingMatrix, tech: int, risk: int) -> Fraction:
    if tech not in T_RANGE:
        raise ValueError(f"tech level {tech!r} outside 0..3")
    if risk not in R_RANGE:
        raise ValueError(f"risk score {risk!r} outside 1..5")
    return m.cells[tech][risk - 1]


def _baseline_cells() -> list[list[Fraction]]:
    def f(t: int, r: int) -> Fraction:
        if r == 5 or t == 0:
            return F(0)
        if t == 3 and r <= 2:
            return F(1)
        if (t == 3 and r == 3) or (t == 2 and r <= 2):
            return F(7, 10)
        if t == 2 and r == 3:
            return F(1, 2)
        if (t in (2, 3) and r == 4) or (t == 1 and r <= 3):
            return F(3, 10)
        return F(0)  # t == 1 and r == 4

    return [[f(t, r) for r in R_RANGE] for t in T_RANGE]


def _build_presets() -> dict[ScenarioId, MappingMatrix]:
    base = _baseline_cells()

    agg = [row[:] for row in base]
    agg[3][3 - 1] = F(1)
    agg[3][4 - 1] = F(7, 10)

    cons = [row[:] for row in base]
    for t in T_RANGE:
        cons[t][4 - 1] = F(0)
        cons[t][5 - 1] = F(0)

    return {
        ScenarioId.BASELINE: MappingMatrix("baseline", base),
        ScenarioId.AGGRESSIVE: MappingMatrix("aggressive", agg),
        ScenarioId.CONSERVATIVE: MappingMatrix("conservative", cons),
    }


_PRESETS = _build_presets()


def preset(s: ScenarioId | str) -> MappingMatrix:
    return _PRESETS[ScenarioId(s)]


def constant_matrix(value, name: str | None = None) -> MappingMatrix:
    v = Fraction(value)
    return MappingMatrix(name or f"constant-{v}", [[v] * 5 for _ in T_RANGE])


def matrix_from_json(data: dict, source: str = "<json>") -> MappingMatrix:
    if not isinstance(data, dict) or "cells" not in data:
        raise MatrixError(f"{source}: expected an object with a 'cells' array")
    cells = data["cells"]
    name = str(data.get("name", "custom"))
    if not isinstance(cells, list) or len(cells) != 4:
        raise MatrixError(f"{source}: 'cells' must have 4 rows (T=0..3), got {_len(cells)}")
    for t, row in enumerate(cells):
        if not isinstance(row, list) or len(row) != 5:
            raise MatrixError(f"{source}: row T={t} must have 5 cells (R=1..5), got {_len(row)}")
        for r, v in enumerate(row, start=1):
            if v is None or isinstance(v, (bool, str, list, dict)):
                raise MatrixError(f"{source}: missing or non-numeric cell (T={t}, R={r})")
    m = MappingMatrix(name, cells)
    for msg in m.monotonicity_violations():
        warnings.warn(f"{source}: monotonicity violation {msg}", MonotonicityWarning, stacklevel=2)
    return m


def _len(x) -> str:
    return str(len(x)) if isinstance(x, list) else type(x).__name__


def load_matrix(config: str | os.PathLike) -> MappingMatrix:
    """Load a custom matrix from JSON.

    Range/totality problems raise ``MatrixError``; monotonicity problems only
    emit ``MonotonicityWarning``.
    """
    try:
        with open(config, encoding="utf-8") as fh:
            data = json.load(fh, parse_float=Fraction, parse_int=Fraction)
    except json.JSONDecodeError as exc:
        raise MatrixError(f"{config}: malformed JSON: {exc}") from None
    except FileNotFoundError:
        raise MatrixError(f"{config}: file not found") from None
    return matrix_from_json(data, str(config))


def diff_cells(a: MappingMatrix, b: MappingMatrix) -> dict[tuple[int, int], tuple[Fraction, Fraction]]:
    return {k: (v, b.cells[k[0]][k[1] - 1]) for k, v in a.items() if v != b.cells[k[0]][k[1] - 1]}
