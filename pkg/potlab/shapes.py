"""
Signed-distance primitives used to describe grid domains.

Open sets are {sdf < 0}, closed sets {sdf <= 0}. A Point marks the single
grid node nearest to it, so a "singleton" survives every refinement.
"""

from __future__ import annotations

from typing import Annotated, List, Literal, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

Vector = Tuple[float, ...]

# closed sets absorb nodes within this distance of their boundary
_CLOSED_SLACK = 1e-9


class _ShapeBase(BaseModel):
    model_config = ConfigDict(frozen=True)

    def sdf(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def dimension(self) -> int:
        raise NotImplementedError


class Disc(_ShapeBase):
    kind: Literal["disc"] = "disc"
    center: Vector
    radius: float

    @model_validator(mode="after")
    def _positive(self) -> "Disc":
        if not self.radius > 0:
            raise ValueError("disc radius must be positive")
        return self

    def sdf(self, x: np.ndarray) -> np.ndarray:
        return np.linalg.norm(x - np.asarray(self.center), axis=-1) - self.radius

    def dimension(self) -> int:
        return len(self.center)


class Box(_ShapeBase):
    """Axis-aligned box; lo == hi along an axis gives a flat box (e.g. a segment)."""

    kind: Literal["box"] = "box"
    lo: Vector
    hi: Vector

    @model_validator(mode="after")
    def _ordered(self) -> "Box":
        if len(self.lo) != len(self.hi):
            raise ValueError("box corners have different dimensions")
        if any(b < a for a, b in zip(self.lo, self.hi)):
            raise ValueError("box corners are reversed")
        return self

    def sdf(self, x: np.ndarray) -> np.ndarray:
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        q = np.maximum(lo - x, x - hi)
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=-1)
        inside = np.minimum(q.max(axis=-1), 0.0)
        return outside + inside

    def dimension(self) -> int:
        return len(self.lo)


class Point(_ShapeBase):
    kind: Literal["point"] = "point"
    x: Vector

    def sdf(self, x: np.ndarray) -> np.ndarray:
        return np.linalg.norm(x - np.asarray(self.x), axis=-1)

    def dimension(self) -> int:
        return len(self.x)


class UnionOf(_ShapeBase):
    kind: Literal["union"] = "union"
    parts: List["Shape"]

    @model_validator(mode="after")
    def _nonempty(self) -> "UnionOf":
        if not self.parts:
            raise ValueError("union needs at least one part")
        return self

    def sdf(self, x: np.ndarray) -> np.ndarray:
        return np.min([s.sdf(x) for s in self.parts], axis=0)

    def dimension(self) -> int:
        return self.parts[0].dimension()


class Difference(_ShapeBase):
    kind: Literal["difference"] = "difference"
    base: "Shape"
    minus: "Shape"

    def sdf(self, x: np.ndarray) -> np.ndarray:
        return np.maximum(self.base.sdf(x), -self.minus.sdf(x))

    def dimension(self) -> int:
        return self.base.dimension()


Shape = Annotated[Union[Disc, Box, Point, UnionOf, Difference], Field(discriminator="kind")]

UnionOf.model_rebuild()
Difference.model_rebuild()


def _nearest_node(point: Vector, axes: List[np.ndarray]) -> Tuple[int, ...]:
    return tuple(int(np.argmin(np.abs(ax - c))) for ax, c in zip(axes, point))


def open_mask(shape: _ShapeBase, nodes: np.ndarray) -> np.ndarray:
    """Nodes strictly inside the shape; points and flat boxes have none."""
    return shape.sdf(nodes) < 0.0


def closed_mask(shape: _ShapeBase, nodes: np.ndarray, axes: List[np.ndarray]) -> np.ndarray:
    """Nodes in the closed shape, with Points snapped to their nearest node."""
    if isinstance(shape, Point):
        out = np.zeros(nodes.shape[:-1], dtype=bool)
        out[_nearest_node(shape.x, axes)] = True
        return out
    if isinstance(shape, UnionOf):
        out = np.zeros(nodes.shape[:-1], dtype=bool)
        for part in shape.parts:
            out |= closed_mask(part, nodes, axes)
        return out
    if isinstance(shape, Difference):
        return closed_mask(shape.base, nodes, axes) & ~open_mask(shape.minus, nodes)
    return shape.sdf(nodes) <= _CLOSED_SLACK
