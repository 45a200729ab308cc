import hashlib
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from logbm import __version__
from logbm.bodies import DirectSum, make_box, make_cross, make_segment, random_symmetric_polytope
from logbm.errors import InvalidParameter
from logbm.logops import ProductOracle, WulffOracle
from logbm.report import CSV_FIELDS, ReportRow, rows_to_csv
from logbm.serialize import body_from_json, body_to_json, dumps, inputs_hash, load_json, load_pair, plain


@pytest.mark.parametrize("body", [
    make_box([1, 2]),
    make_cross([1, 0.5, 2]),
    DirectSum([(make_cross([1, 2]), [0, 2]), (make_segment(1.5), [1])]),
])
def test_round_trip_preserves_support(body):
    back = body_from_json(json.loads(json.dumps(body_to_json(body))))
    u = np.random.default_rng(0).standard_normal((20, body.dim))
    assert np.array_equal(back.support(u), body.support(u))


def test_round_trip_of_composite_bodies():
    K, C = make_box([1, 1]), make_cross([1, 1])
    for obj in ({"kind": "l0sum", "K": K.to_json(), "C": C.to_json(), "lambda": 0.5},
                {"kind": "product", "K": K.to_json(), "C": C.to_json(), "lambda": 0.5}):
        body = body_from_json(obj)
        assert isinstance(body, (WulffOracle, ProductOracle))
        assert body_to_json(body) == obj


def test_shorthand_kinds_and_vertex_form():
    assert body_from_json({"kind": "box", "halfwidths": [1, 2]}).volume == pytest.approx(8.0)
    V = body_from_json({"kind": "vpoly", "vertices": [[1, 0], [0, 1], [-1, 0], [0, -1]]})
    assert V.volume == pytest.approx(2.0)


@pytest.mark.parametrize("obj", [{}, [], {"kind": "ball"}, {"kind": "box"},
                                 {"kind": "hpoly", "normals": [[1, 0]]}])
def test_bad_body_json(obj):
    with pytest.raises(InvalidParameter):
        body_from_json(obj)


def test_load_json_inline_and_file(tmp_path):
    assert load_json('{"a": 1}') == {"a": 1}
    p = tmp_path / "x.json"
    p.write_text('{"b": 2}')
    assert load_json(str(p)) == {"b": 2}
    with pytest.raises(InvalidParameter):
        load_json(str(tmp_path / "missing.json"))
    with pytest.raises(InvalidParameter):
        load_json("{not json")


def test_load_pair_checks():
    pair = {"K": make_box([1, 1]).to_json(), "C": make_cross([1, 1]).to_json()}
    K, C, raw = load_pair(json.dumps(pair))
    assert K.dim == C.dim == 2 and raw == pair
    with pytest.raises(InvalidParameter):
        load_pair(json.dumps({"K": pair["K"]}))
    with pytest.raises(InvalidParameter):
        load_pair(json.dumps({"K": pair["K"], "C": make_box([1, 1, 1]).to_json()}))


def test_plain_converts_numpy_and_non_finite():
    out = plain({"a": np.float64(1.5), "b": np.arange(3), "c": np.inf, "d": (np.bool_(True), np.int64(4))})
    assert out == {"a": 1.5, "b": [0, 1, 2], "c": None, "d": [True, 4]}


def test_dumps_is_canonical():
    assert dumps({"b": 1, "a": [1.0, 2]}) == '{\n  "a": [\n    1.0,\n    2\n  ],\n  "b": 1\n}\n'


def test_inputs_hash_is_sha256_of_compact_json():
    cfg = {"seed": 1, "command": "x", "lam": 0.5}
    text = '{"command":"x","lam":0.5,"seed":1}'
    assert inputs_hash(cfg) == hashlib.sha256(text.encode()).hexdigest()
    assert inputs_hash({"lam": 0.5, "seed": 1, "command": "x"}) == inputs_hash(cfg)


@given(st.integers(0, 10_000))
def test_hpoly_json_is_bit_exact(seed):
    P = random_symmetric_polytope(3, np.random.default_rng(seed))
    Q = body_from_json(json.loads(json.dumps(P.to_json())))
    assert np.array_equal(P.normals, Q.normals) and np.array_equal(P.offsets, Q.offsets)


def test_report_rows_and_csv():
    rows = [ReportRow("gap", "abc", 0.25, 0.0, 0, 3), ReportRow("mc", "abc", None, None, 10, 3)]
    assert rows[0].version == __version__
    text = rows_to_csv(rows)
    lines = text.splitlines()
    assert lines[0] == ",".join(CSV_FIELDS)
    assert lines[1] == f"gap,abc,0.25,0.0,0,3,{__version__}"
    assert lines[2] == f"mc,abc,,,10,3,{__version__}"
