import json

import numpy as np
import pytest

from relentropy.cpmaps import random_channel
from relentropy.errors import MalformedDocument, NotAChannel
from relentropy.io import dumps_matrix, kraus_from_dict, kraus_to_dict, loads_matrix, matrix_from_dict


def test_matrix_round_trip(rng):
    a = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
    assert np.array_equal(loads_matrix(dumps_matrix(a)), a)


def test_matrix_layout():
    doc = json.loads(dumps_matrix(np.array([[1, 2j], [3, 4]])))
    assert doc["entries"] == [[1.0, 0.0], [0.0, 2.0], [3.0, 0.0], [4.0, 0.0]]


@pytest.mark.parametrize("doc", [
    {"dim_rows": 2, "dim_cols": 2, "entries": [[1, 0]] * 3},
    {"dim_rows": 2, "entries": []},
    {"dim_rows": 0, "dim_cols": 1, "entries": []},
    {"dim_rows": 1, "dim_cols": 1, "entries": [["x", 0]]},
    {"dim_rows": 1, "dim_cols": 1, "entries": [[float("nan"), 0]]},
])
def test_malformed_matrix(doc):
    with pytest.raises(MalformedDocument):
        matrix_from_dict(doc)


def test_kraus_round_trip(rng):
    phi = random_channel(rng, 3, 2, 2)
    back = kraus_from_dict(json.loads(json.dumps(kraus_to_dict(phi))))
    assert back.kind == "channel" and back.dim_in == 3 and back.dim_out == 2
    assert all(np.array_equal(a, b) for a, b in zip(phi.kraus_ops, back.kraus_ops))


def test_kraus_validation_on_load(rng):
    doc = kraus_to_dict(random_channel(rng, 2, 2, 1))
    doc["kraus_ops"][0]["entries"][0] = [5.0, 0.0]
    with pytest.raises(NotAChannel):
        kraus_from_dict(doc)
    with pytest.raises(MalformedDocument):
        kraus_from_dict({"dim_in": 2})
