"""Tensor-product grids on a truncated box and nonnegative grid functions."""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from functools import cached_property

import numpy as np


class Frame(str, Enum):
    ORIGINAL = "original"
    RESCALED = "rescaled"


@dataclass(frozen=True)
class Grid:
    """Nodes -L_i + j*dx_i, j = 0..sizes_i-1, on each axis.

    Every node carries a cell of volume prod dx_i, so quadratures are plain
    sums times the cell volume (the boundary nodes get a full cell too).
    """

    sizes: tuple[int, ...]
    half_widths: tuple[float, ...]

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        half_widths = tuple(float(h) for h in self.half_widths)
        if len(sizes) != len(half_widths) or not 1 <= len(sizes) <= 3:
            raise ValueError(f"sizes {sizes} and half_widths {half_widths} must have equal length 1..3")
        if any(s < 2 for s in sizes):
            raise ValueError(f"need at least 2 nodes per axis, got {sizes}")
        if any(not (h > 0 and np.isfinite(h)) for h in half_widths):
            raise ValueError(f"half widths must be positive, got {half_widths}")
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "half_widths", half_widths)

    @property
    def n(self) -> int:
        return len(self.sizes)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.sizes

    @property
    def spacings(self) -> tuple[float, ...]:
        return tuple(2.0 * L / (N - 1) for N, L in zip(self.sizes, self.half_widths))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacings))

    def coords(self, axis: int) -> np.ndarray:
        N, L = self.sizes[axis], self.half_widths[axis]
        return -L + np.arange(N) * self.spacings[axis]

    @cached_property
    def axes(self) -> tuple[np.ndarray, ...]:
        return tuple(self.coords(i) for i in range(self.n))

    def mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*self.axes, indexing="ij")

    def points(self) -> np.ndarray:
        """Node coordinates stacked on a trailing axis, shape sizes + (n,)."""
        return np.stack(self.mesh(), axis=-1)

    @classmethod
    def from_spacing(cls, half_widths, spacing) -> "Grid":
        half_widths = tuple(float(h) for h in np.atleast_1d(half_widths))
        spacing = np.broadcast_to(np.atleast_1d(spacing), (len(half_widths),))
        sizes = tuple(int(round(2 * L / d)) + 1 for L, d in zip(half_widths, spacing))
        return cls(sizes, half_widths)


@dataclass
class Field:
    grid: Grid
    values: np.ndarray
    time: float = 0.0
    frame: Frame = Frame.ORIGINAL

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.shape != self.grid.shape:
            values = values.reshape(self.grid.shape)
        if self.time < 0:
            raise ValueError(f"field time must be nonnegative, got {self.time}")
        self.values = values
        self.frame = Frame(self.frame)

    def check_nonnegative(self):
        if np.any(self.values < 0) or not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite and nonnegative")
        return self

    def copy(self, **changes) -> "Field":
        changes.setdefault("values", self.values.copy())
        return replace(self, **changes)


def mass(f: Field) -> float:
    return float(np.sum(f.values)) * f.grid.cell_volume


def sup_norm(f: Field) -> float:
    return float(np.max(f.values))


def l1_distance(a: Field, b: Field) -> float:
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")
    return float(np.sum(np.abs(a.values - b.values))) * a.grid.cell_volume
