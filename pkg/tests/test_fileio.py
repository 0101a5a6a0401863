import json

import numpy as np
import pytest

from seqbell.fileio import (
    ConfigError,
    dump_config,
    format_matrix,
    format_table,
    get_bool,
    get_float,
    parse_complex,
    parse_config,
    parse_matrix,
    parse_table,
    to_json,
)
from seqbell.lhv import BehaviorTable


def test_config_round_trip():
    cfg = {"state.alpha_sq": 0.8, "state.p1": 0.7, "protocol.allow_swap": False, "state.kind": "example"}
    text = dump_config(cfg)
    back = parse_config(text)
    assert get_float(back, "state.alpha_sq") == 0.8
    assert get_bool(back, "protocol.allow_swap", True) is False
    assert parse_config(dump_config(back)) == back


def test_config_rejects_bad_lines():
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config("state.alpah_sq = 0.8")
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config("state.p1 = 0.1\nstate.p1 = 0.2")
    with pytest.raises(ConfigError, match="expected"):
        parse_config("state.p1 0.1")
    assert parse_config("# comment only\n\nstate.p1 = 0.3  # trailing\n") == {"state.p1": "0.3"}


def test_complex_parsing():
    assert parse_complex("0.25-0.5i") == complex(0.25, -0.5)
    assert parse_complex("-1i") == -1j
    with pytest.raises(ConfigError):
        parse_complex("one")


def test_matrix_round_trip(rng):
    m = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    assert np.array_equal(parse_matrix(format_matrix(m)), m)
    with pytest.raises(ConfigError):
        parse_matrix("1 0\n0")
    with pytest.raises(ConfigError):
        parse_matrix("")


def test_table_round_trip(rng):
    p = rng.dirichlet(np.ones(6), size=(2, 3)).reshape(2, 3, 2, 3)
    t = BehaviorTable(p)
    assert np.array_equal(parse_table(format_table(t)), t.p)
    with pytest.raises(ConfigError):
        parse_table("2 2 2 2\n0.25 0.25 0.25 0.25\n")
    with pytest.raises(ConfigError):
        parse_table("1 1 2 2\n0.25 0.25 nan 0.25\n")


def test_to_json_is_valid_and_exact():
    obj = {"b": 0.1, "a": [1, 2.5, True, None], "m": np.eye(2), "nested": {"x": float("nan")}}
    text = to_json(obj)
    back = json.loads(text)
    assert list(back) == ["b", "a", "m", "nested"]
    assert back["b"] == 0.1 and back["m"] == [[1.0, 0.0], [0.0, 1.0]] and back["nested"]["x"] is None
