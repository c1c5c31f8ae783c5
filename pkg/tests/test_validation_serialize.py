import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mublab.exceptions import DimensionError, DomainError, MatrixParseError, NormalizationError
from mublab.matcore import random_unitary
from mublab.serialize import (
    complex_from_json,
    complex_to_json,
    dump_matrix,
    load_matrix,
    loads_matrix,
    matrix_from_json,
    matrix_to_json,
    to_jsonable,
)
from mublab.validation import (
    DEFAULT_TOL,
    Tolerance,
    check_chm,
    check_matrix,
    check_random_state,
    check_tolerance,
    check_unit_vector,
    check_unitary,
)
from strategies import orders, rng_from, seeds


def test_tolerance_defaults_and_invariants():
    assert DEFAULT_TOL.predicate_tol == 1e-9 and DEFAULT_TOL.search_tol == 1e-6
    with pytest.raises(ValueError):
        Tolerance(predicate_tol=0.0)
    with pytest.raises(ValueError):
        Tolerance(predicate_tol=1e-6, search_tol=1e-9)


def test_check_tolerance_coercion():
    assert check_tolerance(None) is DEFAULT_TOL
    t = check_tolerance(1e-8)
    assert t.predicate_tol == 1e-8 and t.search_tol == 1e-6
    with pytest.raises(TypeError):
        check_tolerance("tight")


def test_check_matrix_names_operand():
    with pytest.raises(DimensionError, match="basis B"):
        check_matrix(np.ones((2, 3)), name="basis B", square=True)
    with pytest.raises(DimensionError):
        check_matrix(np.eye(3), order=6)


def test_check_unitary_and_chm():
    with pytest.raises(DomainError, match="W"):
        check_unitary(2 * np.eye(3), name="W")
    with pytest.raises(DomainError):
        check_chm(np.eye(3))


def test_check_unit_vector():
    with pytest.raises(NormalizationError):
        check_unit_vector(np.array([1.0, 1.0]))
    v = check_unit_vector(np.array([1.0, 0.0]))
    assert v.dtype == complex


def test_check_random_state():
    a = check_random_state(3).random()
    b = check_random_state(3).random()
    assert a == b
    g = np.random.default_rng(0)
    assert check_random_state(g) is g


@given(seeds, orders)
def test_matrix_json_roundtrip_bit_exact(seed, d):
    M = random_unitary(d, rng_from(seed))
    text = json.dumps(matrix_to_json(M))
    assert np.array_equal(loads_matrix(text), M)


def test_matrix_json_labels(tmp_path):
    path = tmp_path / "m.json"
    dump_matrix(np.eye(2), path, labels=["a", "b"])
    obj = json.loads(path.read_text())
    assert obj["labels"] == ["a", "b"]
    assert np.array_equal(load_matrix(path), np.eye(2))


def test_parse_error_reports_line_and_column():
    with pytest.raises(MatrixParseError) as info:
        loads_matrix('{"rows": 1,\n  "cols": 1\n  "entries": [[1, 0]]}')
    assert info.value.lineno == 3
    assert "line 3, column 3" in str(info.value)


@pytest.mark.parametrize("obj", [
    [],
    {"rows": 2, "cols": 2},
    {"rows": 1, "cols": 2, "entries": [[1, 0]]},
    {"rows": 1, "cols": 1, "entries": [[1]]},
    {"rows": 1, "cols": 1, "entries": [["x", 0]]},
    {"rows": 0, "cols": 1, "entries": []},
])
def test_malformed_matrix_objects(obj):
    with pytest.raises(MatrixParseError):
        matrix_from_json(obj)


@given(st.complex_numbers(allow_nan=False, allow_infinity=False))
def test_complex_roundtrip(z):
    assert complex_from_json(json.loads(json.dumps(complex_to_json(z)))) == z


def test_to_jsonable_nested():
    obj = to_jsonable({"m": np.eye(2, dtype=complex), "v": np.array([1j, 2]), "k": np.int64(3),
                       "f": np.float64(0.5), "b": np.bool_(True), "z": 1 + 2j, "r": np.arange(3)})
    json.dumps(obj)
    assert obj["m"]["rows"] == 2 and obj["v"] == [[0.0, 1.0], [2.0, 0.0]]
    assert obj["z"] == [1.0, 2.0] and obj["r"] == [0, 1, 2] and obj["b"] is True
