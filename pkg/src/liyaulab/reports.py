"""Value objects for check results and their JSON / CSV forms."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

SCHEMA = 1
DEFAULT_TOL = 1e-7

GRID_COLUMNS = ("vertex", "t", "b", "source", "lhs", "rhs", "margin")


def _clean(value):
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else str(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


@dataclass
class ViolationReport:
    """Grid of margins (rhs - lhs) for one inequality on one graph.

    ``rows`` hold tuples ordered as ``GRID_COLUMNS``; ``source`` names the
    initial datum (e.g. the vertex y of f = delta_y). A row fails when
    margin < -tol * max(1, |rhs|).
    """

    check: str
    graph: str
    n: float
    K: float
    rows: list[tuple] = field(default_factory=list)
    tol: float = DEFAULT_TOL
    certified: bool | None = True
    provenance: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def add(self, vertex, t, b, source, lhs, rhs) -> None:
        self.rows.append((vertex, float(t), b, source, float(lhs), float(rhs), float(rhs - lhs)))

    def extend(self, vertices, t, b, sources, lhs: np.ndarray, rhs: np.ndarray) -> None:
        """Add a (vertex x source) block of rows for one (t, b)."""
        lhs = np.broadcast_to(lhs, (len(vertices), len(sources)))
        rhs = np.broadcast_to(rhs, (len(vertices), len(sources)))
        margin = rhs - lhs
        for a, x in enumerate(vertices):
            for c, y in enumerate(sources):
                self.rows.append((x, float(t), b, y, float(lhs[a, c]), float(rhs[a, c]), float(margin[a, c])))

    def _scaled(self, row) -> float:
        return row[6] / max(1.0, abs(row[5]))

    @property
    def min_margin(self) -> float:
        return min((r[6] for r in self.rows), default=math.inf)

    @property
    def worst(self) -> tuple | None:
        """Row with the most negative scaled margin."""
        return min(self.rows, key=self._scaled, default=None)

    @property
    def failures(self) -> list[tuple]:
        return [r for r in self.rows if self._scaled(r) < -self.tol]

    @property
    def verdict(self) -> str:
        if self.failures:
            return "fail"
        if not self.certified:
            return "inconclusive"
        return "pass"

    @property
    def witness(self) -> dict | None:
        if self.verdict != "fail":
            return None
        return dict(zip(GRID_COLUMNS, self.worst))

    def summary(self) -> dict:
        worst = self.worst
        return {
            "check": self.check,
            "graph": self.graph,
            "n": self.n,
            "K": self.K,
            "b": None if worst is None else worst[2],
            "t_min_margin": None if worst is None else worst[1],
            "min_margin": self.min_margin,
            "verdict": self.verdict,
        }

    def to_dict(self) -> dict:
        return _clean({
            "schema": SCHEMA,
            **self.summary(),
            "tol": self.tol,
            "certified": self.certified,
            "witness": self.witness,
            "provenance": self.provenance,
            "extra": self.extra,
            "columns": list(GRID_COLUMNS),
            "rows": [list(r) for r in self.rows],
        })


SUMMARY_COLUMNS = ("check", "graph", "n", "K", "b", "t_min_margin", "min_margin", "verdict")


def reports_to_json(reports: list[ViolationReport], config: dict | None = None) -> str:
    doc = {"schema": SCHEMA, "config": _clean(config or {}),
           "reports": [r.to_dict() for r in reports]}
    return json.dumps(doc, indent=1, sort_keys=False) + "\n"


def reports_to_csv(reports: list[ViolationReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("schema",) + SUMMARY_COLUMNS)
    for r in reports:
        s = r.summary()
        w.writerow([SCHEMA] + [repr(s[c]) if isinstance(s[c], float) else s[c] for c in SUMMARY_COLUMNS])
    return buf.getvalue()
