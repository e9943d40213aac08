"""Double-boundary hyper-box granules and their per-instance update rules.

A granule is a center plus two nested axis-aligned boxes: the inner box
(full membership) and the outer box (partial membership). Every function
here is pure: it takes a granule and returns a new one.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from .errors import ContractError, RejectedInstanceError

TNORMS = ("min", "product")


@dataclass(frozen=True)
class Bounds:
    lower: np.ndarray
    upper: np.ndarray

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower


@dataclass(frozen=True)
class UpdateParams:
    epsilon: float
    beta: float = 0.3

    def __post_init__(self):
        if not 0.0 < self.epsilon <= 0.5:
            raise ValueError(f"epsilon must lie in (0, 0.5], got {self.epsilon}")
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")


@dataclass(frozen=True, eq=False)
class Granule:
    """One information granule.

    ``support`` counts instances absorbed by the inner region and weights
    both the sliding step and weighted-mean merging. ``outer_hits`` and
    ``label_tally`` are bookkeeping only; learning never reads them.
    """

    center: np.ndarray
    inner: Bounds
    outer: Bounds
    support: int = 1
    outer_hits: int = 0
    label_tally: Mapping[int, int] = field(default_factory=dict)
    gid: int = 0

    @property
    def n(self) -> int:
        return self.center.shape[0]

    def majority_label(self) -> int | None:
        """Most frequent label in the tally; ``None`` if empty or tied."""
        if not self.label_tally:
            return None
        ranked = sorted(self.label_tally.items(), key=lambda kv: -kv[1])
        if len(ranked) > 1 and ranked[0][1] == ranked[1][1]:
            return None
        return ranked[0][0]

    def with_label(self, label: int) -> "Granule":
        tally = dict(self.label_tally)
        tally[label] = tally.get(label, 0) + 1
        return replace(self, label_tally=tally)

    def same_as(self, other: "Granule") -> bool:
        """Exact equality of every numeric field (bit-for-bit)."""
        return (
            self.gid == other.gid
            and self.support == other.support
            and self.outer_hits == other.outer_hits
            and dict(self.label_tally) == dict(other.label_tally)
            and all(
                np.array_equal(a, b)
                for a, b in zip(self.vectors(), other.vectors())
            )
        )

    def vectors(self) -> tuple[np.ndarray, ...]:
        """(center, inner lower, inner upper, outer lower, outer upper)."""
        return (self.center, self.inner.lower, self.inner.upper,
                self.outer.lower, self.outer.upper)


def _as_instance(x, n: int | None = None) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if n is not None and x.shape[0] != n:
        raise ContractError(f"dimension mismatch: instance has {x.shape[0]} "
                            f"attributes, granule has {n}")
    return x


def check_instance(x) -> np.ndarray:
    """Validate a raw instance: finite and scaled into [0, 1]."""
    x = _as_instance(x)
    if x.size == 0:
        raise RejectedInstanceError("empty instance")
    if not np.all(np.isfinite(x)):
        raise RejectedInstanceError(f"non-finite coordinate in {x.tolist()}")
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise RejectedInstanceError(
            f"coordinate outside [0, 1] in {x.tolist()}; scale the stream first")
    return x


def make_granule(x, epsilon: float, gid: int = 0) -> Granule:
    x = check_instance(x)
    if not 0.0 < epsilon <= 0.5:
        raise ValueError(f"epsilon must lie in (0, 0.5], got {epsilon}")
    half = epsilon / 2
    return Granule(
        center=x.copy(),
        inner=Bounds(x - half, x + half),
        outer=Bounds(x - epsilon, x + epsilon),
        gid=gid,
    )


def contains_inner(g: Granule, x) -> bool:
    x = _as_instance(x, g.n)
    return bool(np.all((g.inner.lower < x) & (x < g.inner.upper)))


def contains_outer(g: Granule, x) -> bool:
    x = _as_instance(x, g.n)
    return bool(np.all((g.outer.lower < x) & (x < g.outer.upper)))


def dim_memberships(g: Granule, x) -> np.ndarray:
    """Per-attribute degrees: 1 on the closed inner interval, 0 outside the
    open outer interval, linear ramps in between."""
    x = _as_instance(x, g.n)
    il, iu = g.inner.lower, g.inner.upper
    ol, ou = g.outer.lower, g.outer.upper
    mu = np.zeros_like(x)
    core = (il <= x) & (x <= iu)
    left = (ol < x) & (x < il)
    right = (iu < x) & (x < ou)
    mu[core] = 1.0
    mu[left] = (x[left] - ol[left]) / (il[left] - ol[left])
    mu[right] = (ou[right] - x[right]) / (ou[right] - iu[right])
    return mu


def membership(g: Granule, x, tnorm: str = "min") -> float:
    mu = dim_memberships(g, x)
    if tnorm == "min":
        return float(mu.min())
    if tnorm == "product":
        return float(np.prod(mu))
    raise ValueError(f"unknown T-norm {tnorm!r}; expected one of {TNORMS}")


def clamp(g: Granule, epsilon: float) -> Granule:
    """Restore the ordering chain and the (epsilon, 2*epsilon) width floors.

    Each bound is pushed away from the center to at least half the floor
    width; the outer box is then widened to enclose the inner one.
    """
    c = g.center
    il = np.minimum(g.inner.lower, c - epsilon / 2)
    iu = np.maximum(g.inner.upper, c + epsilon / 2)
    ol = np.minimum(np.minimum(g.outer.lower, il), c - epsilon)
    ou = np.maximum(np.maximum(g.outer.upper, iu), c + epsilon)
    return replace(g, inner=Bounds(il, iu), outer=Bounds(ol, ou))


def shrink_factors(g: Granule, x, beta: float) -> np.ndarray:
    """Per-attribute shrink rate ``d`` in [0, beta]; largest at the center."""
    x = _as_instance(x, g.n)
    c = g.center
    # ratio can exceed 1 by an ulp when the center is not exactly mid-box
    ratio = np.minimum(np.abs(c - x) / (c - g.inner.lower), 1.0)
    return beta - beta * ratio


def shrink_raw(g: Granule, x, beta: float) -> Granule:
    """Inner-region contraction without the width-floor clamp."""
    d = shrink_factors(g, x, beta)
    il = (1.0 + d) * g.inner.lower
    iu = g.inner.upper - (il - g.inner.lower)
    ol = (1.0 + d) * g.outer.lower
    ou = g.outer.upper - (ol - g.outer.lower)
    return replace(g, inner=Bounds(il, iu), outer=Bounds(ol, ou))


def shrink_on_inner(g: Granule, x, p: UpdateParams) -> Granule:
    if not contains_inner(g, x):
        raise ContractError("shrink_on_inner requires x inside the inner box")
    return clamp(shrink_raw(g, x, p.beta), p.epsilon)


def slide(g: Granule, x) -> Granule:
    """Translate the whole granule toward ``x`` by (x - c) / (support + 1).

    The caller increments ``support`` afterwards.
    """
    x = _as_instance(x, g.n)
    delta = (x - g.center) / (g.support + 1)
    return replace(
        g,
        center=g.center + delta,
        inner=Bounds(g.inner.lower + delta, g.inner.upper + delta),
        outer=Bounds(g.outer.lower + delta, g.outer.upper + delta),
    )


def expansion_factors(g: Granule, x, beta: float) -> np.ndarray:
    """Signed expansion rate ``f``: positive on the lower side, negative on
    the upper side, zero where ``x`` sits inside the inner interval."""
    x = _as_instance(x, g.n)
    il, iu = g.inner.lower, g.inner.upper
    ol, ou = g.outer.lower, g.outer.upper
    f = np.zeros_like(x)
    low = (ol <= x) & (x <= il)
    high = (iu <= x) & (x <= ou)
    f[low] = beta * ((il[low] - x[low]) / (il[low] - ol[low]))
    f[high] = -beta * ((x[high] - iu[high]) / (ou[high] - iu[high]))
    return f


def expand_raw(g: Granule, x, beta: float) -> Granule:
    """Outer-region expansion without the width-floor clamp."""
    x = _as_instance(x, g.n)
    f = expansion_factors(g, x, beta)
    il, iu = g.inner.lower.copy(), g.inner.upper.copy()
    ol, ou = g.outer.lower.copy(), g.outer.upper.copy()

    low = (g.outer.lower <= x) & (x <= g.inner.lower)
    high = (g.inner.upper <= x) & (x <= g.outer.upper)

    il[low] = (1.0 - f[low]) * g.inner.lower[low]
    iu[low] = g.inner.upper[low] + (g.inner.lower[low] - il[low])
    ol[low] = (1.0 - f[low]) * g.outer.lower[low]
    ou[low] = g.outer.upper[low] + (g.outer.lower[low] - ol[low])

    iu[high] = (1.0 - f[high]) * g.inner.upper[high]
    il[high] = g.inner.lower[high] - (iu[high] - g.inner.upper[high])
    ou[high] = (1.0 - f[high]) * g.outer.upper[high]
    ol[high] = g.outer.lower[high] - (ou[high] - g.outer.upper[high])

    return replace(g, inner=Bounds(il, iu), outer=Bounds(ol, ou))


def expand_on_outer(g: Granule, x, p: UpdateParams) -> Granule:
    if not contains_outer(g, x) or contains_inner(g, x):
        raise ContractError(
            "expand_on_outer requires x in the outer box but not the inner box")
    return clamp(expand_raw(g, x, p.beta), p.epsilon)


def widths(g: Granule) -> tuple[np.ndarray, np.ndarray]:
    return g.inner.width, g.outer.width


def check_invariants(g: Granule, epsilon: float, tol: float = 1e-12) -> list[str]:
    """Return a list of violated invariants (empty when the granule is valid).

    ``tol`` absorbs the rounding of ``c +/- epsilon/2`` in the floor clamp.
    """
    problems = []
    chain = g.outer.lower, g.inner.lower, g.center, g.inner.upper, g.outer.upper
    names = "outer.lower", "inner.lower", "center", "inner.upper", "outer.upper"
    for k in range(4):
        if np.any(chain[k] > chain[k + 1]):
            problems.append(f"{names[k]} > {names[k + 1]}")
    if np.any(g.inner.width < epsilon - tol):
        problems.append(f"inner width {g.inner.width.min()} < {epsilon}")
    if np.any(g.outer.width < 2 * epsilon - tol):
        problems.append(f"outer width {g.outer.width.min()} < {2 * epsilon}")
    if not all(np.all(np.isfinite(v)) for v in g.vectors()):
        problems.append("non-finite coordinate")
    if g.support < 1:
        problems.append("support < 1")
    return problems
