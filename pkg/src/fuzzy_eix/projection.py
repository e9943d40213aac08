"""Type-1 and type-2 membership functions read off granule boundaries."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Literal

from .engine import ModelState
from .granule import Granule


@dataclass(frozen=True)
class TrapezoidMF:
    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        if not self.a <= self.b <= self.c <= self.d:
            raise ValueError(f"trapezoid needs a <= b <= c <= d, got {self.as_tuple()}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.a, self.b, self.c, self.d)

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "c": self.c, "d": self.d}

    def __call__(self, x: float) -> float:
        return eval_mf(self, x)


@dataclass(frozen=True)
class Type2MF:
    lower: TrapezoidMF
    upper: TrapezoidMF

    def __post_init__(self):
        lo, up = self.lower, self.upper
        if not (up.a <= lo.a and lo.d <= up.d and up.b <= lo.b and lo.c <= up.c):
            raise ValueError("lower membership function must lie under the upper one")

    def to_dict(self) -> dict:
        return {"lower": self.lower.to_dict(), "upper": self.upper.to_dict()}


def eval_mf(m: TrapezoidMF, x: float) -> float:
    if m.b <= x <= m.c:
        return 1.0
    if x <= m.a or x >= m.d:
        return 0.0
    if x < m.b:
        return (x - m.a) / (m.b - m.a)
    return (m.d - x) / (m.d - m.c)


def _check_axis(g: Granule, j: int) -> None:
    if not 0 <= j < g.n:
        raise IndexError(f"attribute index {j} out of range for {g.n} attributes")


def project_type1(g: Granule, j: int) -> TrapezoidMF:
    """Support from the outer interval, core from the inner interval."""
    _check_axis(g, j)
    return TrapezoidMF(float(g.outer.lower[j]), float(g.inner.lower[j]),
                       float(g.inner.upper[j]), float(g.outer.upper[j]))


def project_type2(g: Granule, j: int) -> Type2MF:
    """Upper MF is the type-1 trapezoid; the lower MF is a triangle peaking
    at the center and supported on the inner interval only."""
    _check_axis(g, j)
    c = float(g.center[j])
    lower = TrapezoidMF(float(g.inner.lower[j]), c, c, float(g.inner.upper[j]))
    return Type2MF(lower, project_type1(g, j))


def trapezoid_area(m: TrapezoidMF) -> float:
    return ((m.d - m.a) + (m.c - m.b)) / 2


def fou_area(m: Type2MF) -> float:
    """Area of the footprint of uncertainty between the two MFs."""
    return trapezoid_area(m.upper) - trapezoid_area(m.lower)


def export_rulebase(state: ModelState, kind: Literal["type1", "type2"] = "type1") -> dict:
    """One If-Then rule per granule, ordered by granule id."""
    if kind not in ("type1", "type2"):
        raise ValueError(f"kind must be 'type1' or 'type2', got {kind!r}")
    project = project_type1 if kind == "type1" else project_type2
    rules = []
    for g in sorted(state.granules, key=lambda g: g.gid):
        rules.append({
            "granule_id": g.gid,
            "label": g.majority_label(),
            "mfs": [project(g, j).to_dict() for j in range(g.n)],
        })
    return {"kind": kind, "n": state.n or 0, "rules": rules}


def rulebase_json(state: ModelState, kind: str = "type1") -> str:
    return json.dumps(export_rulebase(state, kind), indent=1)


def rulebase_rows(doc: dict) -> list[dict]:
    """Flatten a rule-base document to one row per (rule, attribute)."""
    rows = []
    for rule in doc["rules"]:
        for j, mf in enumerate(rule["mfs"]):
            row = {"granule_id": rule["granule_id"], "label": rule["label"], "attribute": j}
            if "lower" in mf:
                row.update({f"upper_{k}": v for k, v in mf["upper"].items()})
                row.update({f"lower_{k}": v for k, v in mf["lower"].items()})
            else:
                row.update(mf)
            rows.append(row)
    return rows
