"""Per-node centrality scores with engine metadata and CSV/JSON serialisation."""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

SCHEMA = "rwc.result/1"


@dataclass
class CentralityResult:
    """Random walk centrality ``H_u`` for every node (smaller is more central).

    ``labels`` are the original node labels in dense-index order.
    """

    scores: np.ndarray
    engine: str
    labels: np.ndarray | None = None
    params: dict[str, Any] = field(default_factory=dict)
    elapsed: float = 0.0

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=float)
        if self.labels is None:
            self.labels = np.arange(len(self.scores))
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if len(self.labels) != len(self.scores):
            raise ValueError("labels and scores differ in length")

    @property
    def n(self) -> int:
        return len(self.scores)

    def to_csv(self, stream=None) -> str | None:
        buf = io.StringIO() if stream is None else stream
        buf.write("node,score\n")
        for label, score in zip(self.labels.tolist(), self.scores.tolist()):
            buf.write(f"{label},{score!r}\n")
        return buf.getvalue() if stream is None else None

    def to_dict(self, include_timing: bool = False) -> dict[str, Any]:
        out = {
            "schema": SCHEMA,
            "engine": self.engine,
            "n": self.n,
            "params": _jsonable(self.params),
            "nodes": self.labels.tolist(),
            "scores": self.scores.tolist(),
        }
        if include_timing:
            out["elapsed"] = self.elapsed
        return out

    def to_json(self, include_timing: bool = False) -> str:
        return json.dumps(self.to_dict(include_timing), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "CentralityResult":
        if data.get("schema") != SCHEMA:
            raise ValueError(f"unsupported schema {data.get('schema')!r}")
        return cls(
            scores=np.array(data["scores"], dtype=float),
            engine=data["engine"],
            labels=np.array(data["nodes"], dtype=np.int64),
            params=data.get("params", {}),
            elapsed=data.get("elapsed", 0.0),
        )

    @classmethod
    def from_csv(cls, text: str, engine: str = "csv") -> "CentralityResult":
        lines = text.strip().splitlines()
        if not lines or lines[0].strip() != "node,score":
            raise ValueError("expected 'node,score' header")
        rows = [line.split(",") for line in lines[1:]]
        return cls(
            scores=np.array([float(r[1]) for r in rows]),
            engine=engine,
            labels=np.array([int(r[0]) for r in rows], dtype=np.int64),
        )


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if math.isfinite(value) else repr(value)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj
