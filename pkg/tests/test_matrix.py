import json
import warnings
from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from oaindex.errors import MatrixError
from oaindex.matrix import (
    MappingMatrix,
    MonotonicityWarning,
    ScenarioId,
    automation_index,
    constant_matrix,
    diff_cells,
    load_matrix,
    matrix_from_json,
    preset,
)

BASE = preset("baseline")

# Hand-typed baseline, rows T=0..3, columns R=1..5.
EXPECTED_BASELINE = [
    ["0", "0", "0", "0", "0"],
    ["0.3", "0.3", "0.3", "0", "0"],
    ["0.7", "0.7", "0.5", "0.3", "0"],
    ["1", "1", "0.7", "0.3", "0"],
]


def test_baseline_grid_exact():
    for t, row in enumerate(EXPECTED_BASELINE):
        for r, v in enumerate(row, start=1):
            assert BASE(t, r) == F(v), (t, r)


@pytest.mark.parametrize("t, r, v", [(3, 1, "1.0"), (3, 3, "0.7"), (2, 3, "0.5"), (1, 4, "0"), (0, 1, "0"), (3, 5, "0")])
def test_baseline_examples(t, r, v):
    assert automation_index(BASE, t, r) == F(v)


@pytest.mark.parametrize("t, r", [(4, 1), (-1, 2), (2, 0), (2, 6)])
def test_out_of_range_inputs_raise(t, r):
    with pytest.raises(ValueError):
        automation_index(BASE, t, r)


def test_risk_veto_and_no_capability_cap():
    for name in ScenarioId:
        m = preset(name)
        assert all(m(t, 5) == 0 for t in range(4))
        assert all(m(0, r) == 0 for r in range(1, 6))


def test_aggressive_differs_in_two_cells():
    assert diff_cells(BASE, preset("aggressive")) == {(3, 3): (F(7, 10), F(1)), (3, 4): (F(3, 10), F(7, 10))}


def test_conservative_zeroes_high_risk():
    cons = preset("conservative")
    assert all(cons(t, r) == 0 for t in range(4) for r in (4, 5))
    # (1,4) is already zero in the baseline so only two cells move
    assert set(diff_cells(BASE, cons)) == {(2, 4), (3, 4)}


def test_dominance_order():
    agg, cons = preset("aggressive"), preset("conservative")
    assert agg.dominates(BASE) and BASE.dominates(cons)
    assert not cons.dominates(BASE)


def test_presets_are_monotone():
    for s in ScenarioId:
        assert preset(s).monotonicity_violations() == []


def test_constant_matrix():
    m = constant_matrix(1)
    assert all(v == 1 for _, v in m.items())


def test_cell_out_of_unit_interval():
    with pytest.raises(MatrixError, match=r"\(T=2, R=3\)"):
        MappingMatrix("bad", [[0] * 5, [0] * 5, [0, 0, F(3, 2), 0, 0], [0] * 5])


def _write(tmp_path, obj, name="m.json"):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return p


def test_load_roundtrip(tmp_path):
    p = _write(tmp_path, BASE.to_json())
    m = load_matrix(p)
    assert m.cells == BASE.cells
    assert m.name == "baseline"


def test_decimal_cells_loaded_exactly(tmp_path):
    p = _write(tmp_path, '{"cells": [[0,0,0,0,0],[0.1,0.1,0.1,0,0],[0.7,0.7,0.5,0.3,0],[1,1,0.7,0.3,0]]}')
    assert load_matrix(p)(1, 1) == F(1, 10)


@pytest.mark.parametrize(
    "body, match",
    [
        ("{not json", "malformed JSON"),
        ({"name": "x"}, "'cells'"),
        ({"cells": [[0] * 5] * 3}, "4 rows"),
        ({"cells": [[0] * 5, [0] * 4, [0] * 5, [0] * 5]}, "row T=1"),
        ({"cells": [[0] * 5, [0] * 5, [0, None, 0, 0, 0], [0] * 5]}, r"\(T=2, R=2\)"),
        ({"cells": [[0] * 5, [0] * 5, [0] * 5, [0, 0, 0, 0, -0.1]]}, "outside"),
    ],
)
def test_load_errors(tmp_path, body, match):
    with pytest.raises(MatrixError, match=match):
        load_matrix(_write(tmp_path, body))


def test_missing_file(tmp_path):
    with pytest.raises(MatrixError, match="not found"):
        load_matrix(tmp_path / "nope.json")


def test_monotonicity_violation_only_warns():
    cells = [[0] * 5, [0] * 5, [0, 0, 0, 0.5, 0], [0] * 5]
    with pytest.warns(MonotonicityWarning):
        m = matrix_from_json({"cells": cells})
    assert m(2, 4) == F(1, 2)


def test_monotone_custom_matrix_is_quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        matrix_from_json(preset("aggressive").to_json())


@given(st.lists(st.lists(st.fractions(0, 1), min_size=5, max_size=5), min_size=4, max_size=4))
def test_json_roundtrip_property(cells):
    m = MappingMatrix("p", cells)
    data = json.loads(json.dumps({"name": "p", "cells": [[str(v) for v in row] for row in cells]}))
    # strings are rejected as cells, so go through Fraction-typed decoding instead
    with pytest.raises(MatrixError):
        matrix_from_json(data)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MonotonicityWarning)
        back = matrix_from_json({"name": "p", "cells": [list(r) for r in m.cells]})
    assert back == m
