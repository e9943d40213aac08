"""The evolving learner: one instance in, one structural/parametric update out.

Per instance the engine picks at most one target granule, updates it
(shrink + slide on an inner hit, expansion on an outer hit) or creates a
new granule, then merges close granules to a fixpoint and balances widths.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Any, Literal, NamedTuple

import numpy as np

from .errors import RejectedInstanceError, SnapshotError
from .granule import (
    TNORMS,
    Bounds,
    Granule,
    UpdateParams,
    check_instance,
    clamp,
    expand_on_outer,
    make_granule,
    membership,
    shrink_on_inner,
    slide,
)

MERGE_METHODS = ("weighted_mean", "convex_hull")
SNAPSHOT_VERSION = 1

HitKind = Literal["inner", "outer"]


@dataclass(frozen=True)
class EngineConfig:
    epsilon: float
    rho: float
    alpha: float = 0.3
    beta: float = 0.3
    merge_method: str = "convex_hull"
    tnorm: str = "min"

    def __post_init__(self):
        if not 0.0 < self.epsilon <= 0.5:
            raise ValueError(f"epsilon must lie in (0, 0.5], got {self.epsilon}")
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must lie in [0, 1], got {self.rho}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        if self.merge_method not in MERGE_METHODS:
            raise ValueError(f"merge_method must be one of {MERGE_METHODS}, "
                             f"got {self.merge_method!r}")
        if self.tnorm not in TNORMS:
            raise ValueError(f"tnorm must be one of {TNORMS}, got {self.tnorm!r}")

    @property
    def update_params(self) -> UpdateParams:
        return UpdateParams(self.epsilon, self.beta)

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon, "rho": self.rho, "alpha": self.alpha,
            "beta": self.beta, "merge_method": self.merge_method,
            "tnorm": self.tnorm,
        }


@dataclass(frozen=True)
class ModelState:
    granules: tuple[Granule, ...] = ()
    h: int = 0
    next_id: int = 1
    creation_log: tuple[tuple[int, int], ...] = ()
    # (h, (merged id, merged id), new id)
    merge_log: tuple[tuple[int, tuple[int, int], int], ...] = ()

    @property
    def k(self) -> int:
        return len(self.granules)

    @property
    def n(self) -> int | None:
        return self.granules[0].n if self.granules else None

    def get(self, gid: int) -> Granule:
        for g in self.granules:
            if g.gid == gid:
                return g
        raise KeyError(gid)

    def same_as(self, other: "ModelState") -> bool:
        return (
            self.h == other.h
            and self.next_id == other.next_id
            and self.creation_log == other.creation_log
            and self.merge_log == other.merge_log
            and self.k == other.k
            and all(a.same_as(b) for a, b in zip(self.granules, other.granules))
        )


class Selection(NamedTuple):
    gid: int
    kind: HitKind


@dataclass(frozen=True)
class StepEvent:
    kind: Literal["inner_update", "outer_update", "created"]
    granule_id: int
    membership: float
    merges: tuple[tuple[tuple[int, int], int], ...] = field(default_factory=tuple)


def linf(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a - b)))


def _nearest(candidates: list[Granule], x: np.ndarray) -> Granule | None:
    if not candidates:
        return None
    dist = np.max(np.abs(np.stack([g.center for g in candidates]) - x), axis=1)
    ids = np.array([g.gid for g in candidates])
    return candidates[int(np.lexsort((ids, dist))[0])]


def _box_hits(granules, x: np.ndarray, inner: bool) -> np.ndarray:
    lo = np.stack([(g.inner if inner else g.outer).lower for g in granules])
    hi = np.stack([(g.inner if inner else g.outer).upper for g in granules])
    return np.all((lo < x) & (x < hi), axis=1)


def select_granule(state: ModelState, x) -> Selection | None:
    """Pick the single granule an instance updates.

    Inner-box hits take precedence over outer-box hits; within a tier the
    nearest center (L-infinity) wins and ties go to the lowest id.
    """
    if not state.granules:
        return None
    x = np.asarray(x, dtype=float)
    granules = state.granules
    for inner, kind in ((True, "inner"), (False, "outer")):
        hits = _box_hits(granules, x, inner)
        if hits.any():
            cands = [g for g, hit in zip(granules, hits) if hit]
            return Selection(_nearest(cands, x).gid, kind)
    return None


def _combined_bookkeeping(g1: Granule, g2: Granule) -> dict[str, Any]:
    tally = dict(g1.label_tally)
    for label, count in g2.label_tally.items():
        tally[label] = tally.get(label, 0) + count
    return dict(support=g1.support + g2.support,
                outer_hits=g1.outer_hits + g2.outer_hits,
                label_tally=tally)


def merge_weighted_mean(g1: Granule, g2: Granule) -> Granule:
    """Support-weighted combination; the center lands on the segment between
    the two centers at parameter N2 / (N1 + N2), and every bound vector is
    combined the same way."""
    w = g2.support / (g1.support + g2.support)

    def mix(a, b):
        return a - w * (a - b)

    return Granule(
        center=mix(g1.center, g2.center),
        inner=Bounds(mix(g1.inner.lower, g2.inner.lower),
                     mix(g1.inner.upper, g2.inner.upper)),
        outer=Bounds(mix(g1.outer.lower, g2.outer.lower),
                     mix(g1.outer.upper, g2.outer.upper)),
        gid=g1.gid,
        **_combined_bookkeeping(g1, g2),
    )


def merge_convex_hull(g1: Granule, g2: Granule) -> Granule:
    """Smallest box pair enclosing both operands, centered mid inner box."""
    il = np.minimum(g1.inner.lower, g2.inner.lower)
    iu = np.maximum(g1.inner.upper, g2.inner.upper)
    ol = np.minimum(g1.outer.lower, g2.outer.lower)
    ou = np.maximum(g1.outer.upper, g2.outer.upper)
    return Granule(
        center=(il + iu) / 2,
        inner=Bounds(il, iu),
        outer=Bounds(ol, ou),
        gid=g1.gid,
        **_combined_bookkeeping(g1, g2),
    )


_MERGERS = {"weighted_mean": merge_weighted_mean, "convex_hull": merge_convex_hull}


def _closest_pair(granules: list[Granule], rho: float) -> tuple[int, int] | None:
    """Positions of the closest pair with center distance <= rho; ties go to
    the pair with the smallest (lower id, higher id)."""
    k = len(granules)
    if k < 2:
        return None
    centers = np.stack([g.center for g in granules])
    dist = np.max(np.abs(centers[:, None, :] - centers[None, :, :]), axis=2)
    a, b = np.triu_indices(k, 1)
    d = dist[a, b]
    ok = d <= rho
    if not ok.any():
        return None
    a, b, d = a[ok], b[ok], d[ok]
    ids = np.array([g.gid for g in granules])
    lo = np.minimum(ids[a], ids[b])
    hi = np.maximum(ids[a], ids[b])
    best = np.lexsort((hi, lo, d))[0]
    return int(a[best]), int(b[best])


def merge_pass(state: ModelState, cfg: EngineConfig) -> ModelState:
    """Merge the closest qualifying pair until no two centers lie within rho.

    The merged granule gets a fresh id and is appended to the collection.
    """
    granules = list(state.granules)
    next_id = state.next_id
    log = list(state.merge_log)
    merger = _MERGERS[cfg.merge_method]
    while True:
        pair = _closest_pair(granules, cfg.rho)
        if pair is None:
            break
        a, b = pair
        g1, g2 = granules[a], granules[b]
        merged = clamp(replace(merger(g1, g2), gid=next_id), cfg.epsilon)
        log.append((state.h, (g1.gid, g2.gid), next_id))
        del granules[b], granules[a]
        granules.append(merged)
        next_id += 1
    if len(granules) == state.k and next_id == state.next_id:
        return state
    return replace(state, granules=tuple(granules), next_id=next_id,
                   merge_log=tuple(log))


def _axis_mean(rows: list[np.ndarray]) -> np.ndarray:
    # left-to-right accumulation keeps the result independent of numpy's
    # pairwise-summation heuristics
    total = rows[0].copy()
    for r in rows[1:]:
        total = total + r
    return total / len(rows)


def balance(state: ModelState, cfg: EngineConfig) -> ModelState:
    """Move every granule's widths toward the per-axis average widths."""
    if not state.granules:
        return state
    mean_in = _axis_mean([g.inner.width for g in state.granules])
    mean_out = _axis_mean([g.outer.width for g in state.granules])
    alpha = cfg.alpha
    out = []
    for g in state.granules:
        dev_in = mean_in - g.inner.width
        dev_out = mean_out - g.outer.width
        moved = replace(
            g,
            inner=Bounds(g.inner.lower - alpha * dev_in, g.inner.upper + alpha * dev_in),
            outer=Bounds(g.outer.lower - alpha * dev_out, g.outer.upper + alpha * dev_out),
        )
        out.append(clamp(moved, cfg.epsilon))
    return replace(state, granules=tuple(out))


def process(state: ModelState, x, cfg: EngineConfig,
            label: int | None = None) -> tuple[ModelState, StepEvent]:
    """Learn from one instance.

    ``label``, when given, is added to the tally of the granule that absorbed
    the instance; it never influences geometry. Invalid instances raise
    :class:`RejectedInstanceError` and leave ``state`` untouched.
    """
    x = check_instance(x)
    if state.n is not None and x.shape[0] != state.n:
        raise RejectedInstanceError(
            f"instance has {x.shape[0]} attributes, model has {state.n}")
    h = state.h + 1
    granules = list(state.granules)
    creation_log = state.creation_log
    next_id = state.next_id

    sel = select_granule(state, x) if granules else None
    if sel is None:
        target = make_granule(x, cfg.epsilon, gid=next_id)
        creation_log = creation_log + ((h, next_id),)
        next_id += 1
        granules.append(target)
        idx = len(granules) - 1
        kind, mu = "created", 0.0
    else:
        idx = next(i for i, g in enumerate(granules) if g.gid == sel.gid)
        g = granules[idx]
        mu = membership(g, x, cfg.tnorm)
        p = cfg.update_params
        if sel.kind == "inner":
            g = slide(shrink_on_inner(g, x, p), x)
            target = replace(g, support=g.support + 1)
            kind = "inner_update"
        else:
            g = expand_on_outer(g, x, p)
            target = replace(g, outer_hits=g.outer_hits + 1)
            kind = "outer_update"
    if label is not None:
        target = target.with_label(label)
    granules[idx] = target

    updated = replace(state, granules=tuple(granules), h=h, next_id=next_id,
                      creation_log=creation_log)
    merged = merge_pass(updated, cfg)
    merges = tuple((ids, new) for _, ids, new in merged.merge_log[len(updated.merge_log):])
    final = balance(merged, cfg)
    return final, StepEvent(kind, target.gid, mu, merges)


def predict(state: ModelState, x) -> int | None:
    """Majority label of the granule the instance would update, falling back
    to the nearest center when no granule contains it."""
    if not state.granules:
        return None
    x = np.asarray(x, dtype=float)
    sel = select_granule(state, x)
    g = state.get(sel.gid) if sel else _nearest(list(state.granules), x)
    return g.majority_label()


class FuzzyEIX:
    """Stateful convenience wrapper around :func:`process`."""

    def __init__(self, cfg: EngineConfig, state: ModelState | None = None):
        self.cfg = cfg
        self.state = state or ModelState()
        self.last_event: StepEvent | None = None

    def learn_one(self, x, label: int | None = None) -> StepEvent:
        self.state, self.last_event = process(self.state, x, self.cfg, label)
        return self.last_event

    def predict_one(self, x) -> int | None:
        return predict(self.state, x)

    @property
    def granules(self) -> tuple[Granule, ...]:
        return self.state.granules


# -- snapshots -------------------------------------------------------------

def _granule_doc(g: Granule) -> dict:
    return {
        "id": g.gid,
        "center": g.center.tolist(),
        "inner_lower": g.inner.lower.tolist(),
        "inner_upper": g.inner.upper.tolist(),
        "outer_lower": g.outer.lower.tolist(),
        "outer_upper": g.outer.upper.tolist(),
        "support": g.support,
        "outer_hits": g.outer_hits,
        "label_tally": {str(k): v for k, v in sorted(g.label_tally.items())},
    }


def snapshot_dict(state: ModelState, cfg: EngineConfig) -> dict:
    return {
        "version": SNAPSHOT_VERSION,
        "config": cfg.to_dict(),
        "h": state.h,
        "next_id": state.next_id,
        "granules": [_granule_doc(g) for g in state.granules],
        "creation_log": [list(e) for e in state.creation_log],
        "merge_log": [[h, list(ids), new] for h, ids, new in state.merge_log],
    }


def snapshot(state: ModelState, cfg: EngineConfig) -> str:
    """Serialize to JSON; floats use the shortest repr that round-trips."""
    return json.dumps(snapshot_dict(state, cfg), indent=1)


def _require(doc: dict, key: str, kind, where: str):
    if not isinstance(doc, dict) or key not in doc:
        raise SnapshotError(f"{where}: missing field {key!r}")
    value = doc[key]
    if kind is float:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    elif kind is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    else:
        ok = isinstance(value, kind)
    if not ok:
        raise SnapshotError(f"{where}.{key}: expected {getattr(kind, '__name__', kind)}, "
                            f"got {type(value).__name__}")
    return value


def _vector(doc: dict, key: str, where: str, n: int | None) -> np.ndarray:
    raw = _require(doc, key, list, where)
    try:
        v = np.array(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SnapshotError(f"{where}.{key}: not a numeric vector") from exc
    if v.ndim != 1 or (n is not None and v.shape[0] != n):
        raise SnapshotError(f"{where}.{key}: wrong length {len(raw)}")
    return v


def restore_dict(doc: Any) -> tuple[ModelState, EngineConfig]:
    if not isinstance(doc, dict):
        raise SnapshotError("document root: expected an object")
    version = _require(doc, "version", int, "document")
    if version != SNAPSHOT_VERSION:
        raise SnapshotError(f"document.version: unsupported version {version}, "
                            f"expected {SNAPSHOT_VERSION}")
    cdoc = _require(doc, "config", dict, "document")
    try:
        cfg = EngineConfig(
            epsilon=_require(cdoc, "epsilon", float, "config"),
            rho=_require(cdoc, "rho", float, "config"),
            alpha=_require(cdoc, "alpha", float, "config"),
            beta=_require(cdoc, "beta", float, "config"),
            merge_method=_require(cdoc, "merge_method", str, "config"),
            tnorm=_require(cdoc, "tnorm", str, "config"),
        )
    except ValueError as exc:
        if isinstance(exc, SnapshotError):
            raise
        raise SnapshotError(f"config: {exc}") from exc

    granules = []
    n = None
    for i, gdoc in enumerate(_require(doc, "granules", list, "document")):
        where = f"granules[{i}]"
        center = _vector(gdoc, "center", where, n)
        n = center.shape[0]
        tally_doc = _require(gdoc, "label_tally", dict, where)
        try:
            tally = {int(k): int(v) for k, v in tally_doc.items()}
        except (TypeError, ValueError) as exc:
            raise SnapshotError(f"{where}.label_tally: non-integer entry") from exc
        granules.append(Granule(
            center=center,
            inner=Bounds(_vector(gdoc, "inner_lower", where, n),
                         _vector(gdoc, "inner_upper", where, n)),
            outer=Bounds(_vector(gdoc, "outer_lower", where, n),
                         _vector(gdoc, "outer_upper", where, n)),
            support=_require(gdoc, "support", int, where),
            outer_hits=gdoc.get("outer_hits", 0),
            label_tally=tally,
            gid=_require(gdoc, "id", int, where),
        ))
    h = _require(doc, "h", int, "document")
    next_id = doc.get("next_id", max((g.gid for g in granules), default=0) + 1)
    try:
        creation_log = tuple((int(a), int(b)) for a, b in doc.get("creation_log", []))
        merge_log = tuple((int(a), (int(ids[0]), int(ids[1])), int(c))
                          for a, ids, c in doc.get("merge_log", []))
    except (TypeError, ValueError, IndexError) as exc:
        raise SnapshotError("document: malformed creation_log/merge_log") from exc
    state = ModelState(tuple(granules), h, next_id, creation_log, merge_log)
    return state, cfg


def restore(text: str) -> tuple[ModelState, EngineConfig]:
    """Parse a snapshot document; raises :class:`SnapshotError` with the
    failing location and never returns a partial model."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SnapshotError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return restore_dict(doc)
