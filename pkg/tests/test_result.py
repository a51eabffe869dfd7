import io
import json

import numpy as np
import pytest

from rwc.result import SCHEMA, CentralityResult


def test_csv_round_trip_keeps_full_precision():
    res = CentralityResult([1 / 3, 2.5, 1e-17], "exact", [5, 9, 11])
    text = res.to_csv()
    assert text.splitlines()[0] == "node,score"
    back = CentralityResult.from_csv(text)
    assert back.labels.tolist() == [5, 9, 11]
    assert back.scores.tolist() == res.scores.tolist()
    buf = io.StringIO()
    assert res.to_csv(buf) is None and buf.getvalue() == text


def test_json_round_trip_and_timing_flag():
    res = CentralityResult([1.0, 2.0], "fastwalk", params={"l": np.int64(3), "lam": np.float64(0.5), "x": float("inf")},
                           elapsed=1.25)
    data = json.loads(res.to_json())
    assert data["schema"] == SCHEMA and "elapsed" not in data
    assert data["params"] == {"l": 3, "lam": 0.5, "x": "inf"}
    assert json.loads(res.to_json(include_timing=True))["elapsed"] == 1.25
    back = CentralityResult.from_dict(data)
    assert back.engine == "fastwalk" and back.scores.tolist() == [1.0, 2.0]


def test_validation():
    with pytest.raises(ValueError):
        CentralityResult([1.0, 2.0], "x", [1])
    with pytest.raises(ValueError):
        CentralityResult.from_dict({"schema": "other"})
    with pytest.raises(ValueError):
        CentralityResult.from_csv("a,b\n1,2\n")
    assert CentralityResult([1.0], "x").labels.tolist() == [0]
