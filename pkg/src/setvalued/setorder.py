"""Orders on vectors and hyperboxes for the cone ``K = R^k_+``.

Hyperboxes are compared through their corners: ``A`` is lower set-less than
``B`` exactly when ``A.lb <= B.lb`` and upper set-less exactly when
``A.ub <= B.ub``. The strict relations replace ``<=`` by ``<`` in every
component (the interior of the orthant). A hyperbox-valued problem therefore
turns into a finite multi-objective one; :func:`vectorize` builds that
objective map.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal, Sequence

import numpy as np

Kind = Literal["lower", "upper", "both"]


def _vec(a) -> np.ndarray:
    return np.atleast_1d(np.asarray(a, dtype=float))


def cone_dominates(a, b, strict: bool = False) -> bool:
    """``a <=_K b`` (or ``a <_K b`` when *strict*) for the nonnegative orthant."""
    a, b = _vec(a), _vec(b)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return bool(np.all(a < b) if strict else np.all(a <= b))


@dataclass(frozen=True)
class Hyperbox:
    """Axis-aligned box ``[lb, ub]`` in ``R^k``; degenerate sides are allowed."""

    lb: np.ndarray
    ub: np.ndarray

    def __post_init__(self):
        lb, ub = _vec(self.lb), _vec(self.ub)
        if lb.shape != ub.shape or lb.ndim != 1:
            raise ValueError("lb and ub must be vectors of equal length")
        if np.any(lb > ub):
            raise ValueError("hyperbox requires lb <= ub componentwise")
        object.__setattr__(self, "lb", lb)
        object.__setattr__(self, "ub", ub)

    @property
    def dim(self) -> int:
        return self.lb.size


@dataclass(frozen=True)
class RelationMode:
    kind: Kind = "both"
    strict: bool = False

    def __post_init__(self):
        if self.kind not in ("lower", "upper", "both"):
            raise ValueError(f"unknown relation kind {self.kind!r}")


SET_LESS = RelationMode("both", False)
STRICT_SET_LESS = RelationMode("both", True)


def box_relate(A: Hyperbox, B: Hyperbox, mode: RelationMode = SET_LESS) -> bool:
    """Decide ``A <= B`` under the lower, upper or combined set-less relation."""
    if A.dim != B.dim:
        raise ValueError(f"dimension mismatch: {A.dim} vs {B.dim}")
    lower = cone_dominates(A.lb, B.lb, mode.strict)
    if mode.kind == "lower":
        return lower
    upper = cone_dominates(A.ub, B.ub, mode.strict)
    if mode.kind == "upper":
        return upper
    return lower and upper


def minimal_elements(family: Sequence[Hyperbox], strict: bool = True) -> list[int]:
    """Indices of minimal boxes in *family* under the set-less relation.

    With ``strict=True`` a box ``A`` qualifies when every ``B <= A`` also
    satisfies ``A <= B``. With ``strict=False`` (weak minimality) it qualifies
    when no ``B`` strictly precedes it.
    """
    if len(family) == 0:
        raise ValueError("family must be nonempty")
    dims = {box.dim for box in family}
    if len(dims) != 1:
        raise ValueError("all boxes in the family must share a dimension")

    out = []
    for i, A in enumerate(family):
        if strict:
            ok = all(
                box_relate(A, B, SET_LESS)
                for B in family
                if box_relate(B, A, SET_LESS)
            )
        else:
            ok = not any(box_relate(B, A, STRICT_SET_LESS) for B in family)
        if ok:
            out.append(i)
    return out


class BoundOrderError(ValueError):
    """Raised when a lower-bound map exceeds its upper-bound map."""


@dataclass(frozen=True)
class ObjectiveVectorSpec:
    """Finite vectorization of a hyperbox-valued map.

    Calling the spec on ``x`` returns the stacked objective vector. For
    intervals (``k == 1``) the order is ``(f_lb, f_ub)``; for ``k >= 2`` it is
    ``(F_ub; F_lb)``. ``slots`` names what each component carries as a
    ``(bound, coordinate)`` pair.
    """

    f_lb: Callable
    f_ub: Callable
    k: int

    @property
    def arity(self) -> int:
        return 2 * self.k

    @property
    def slots(self) -> tuple[tuple[str, int], ...]:
        if self.k == 1:
            return (("lb", 0), ("ub", 0))
        return tuple(("ub", i) for i in range(self.k)) + tuple(
            ("lb", i) for i in range(self.k)
        )

    def slot(self, bound: str, coord: int) -> int:
        return self.slots.index((bound, coord))

    def assemble(self, lb, ub) -> np.ndarray:
        """Stack already evaluated bounds, checking ``lb <= ub``."""
        lb, ub = _vec(lb), _vec(ub)
        if lb.size != self.k or ub.size != self.k:
            raise ValueError(f"expected bounds of length {self.k}")
        # rounding slack: tail averages of a constant sample may differ by an ulp
        if np.any(lb > ub + 1e-12 * (1.0 + np.abs(ub))):
            raise BoundOrderError(f"lower bound {lb} exceeds upper bound {ub}")
        if self.k == 1:
            return np.array([lb[0], ub[0]])
        return np.concatenate([ub, lb])

    def __call__(self, x) -> np.ndarray:
        return self.assemble(self.f_lb(x), self.f_ub(x))


def vectorize(f_lb: Callable, f_ub: Callable, k: int) -> ObjectiveVectorSpec:
    if k < 1:
        raise ValueError("k must be at least 1")
    return ObjectiveVectorSpec(f_lb, f_ub, int(k))
