"""Uniform tensor grids and sampled space-time fields."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Tensor-product grid made of uniform 1-D axes."""

    axes: tuple[np.ndarray, ...]
    steps: tuple[float, ...]

    @classmethod
    def line(cls, lo: float, hi: float, step: float) -> "Grid":
        n = int(round((hi - lo) / step))
        if n < 2:
            raise ValueError("grid needs at least 3 points")
        return cls((lo + step * np.arange(n + 1),), (float(step),))

    @classmethod
    def box(cls, bounds, step: float) -> "Grid":
        axes = []
        for lo, hi in bounds:
            n = int(round((hi - lo) / step))
            axes.append(lo + step * np.arange(n + 1))
        return cls(tuple(axes), (float(step),) * len(axes))

    @classmethod
    def sphere(cls, cells: int) -> "Grid":
        """Polar-angle grid on (0, pi) with both poles excluded by one cell."""
        if cells < 4:
            raise ValueError("sphere grid needs at least 4 cells")
        step = np.pi / cells
        return cls((step * np.arange(1, cells),), (step,))

    @property
    def ndim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.axes)

    @property
    def step(self) -> float:
        return min(self.steps)

    def mesh(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*self.axes, indexing="ij"))


@dataclass
class SpaceTimeField:
    """Values sampled on ``times x grid``; ``values[k]`` is the level at ``times[k]``.

    ``times`` is ascending but need not be uniform (CFL-limited wave runs are not).
    """

    times: np.ndarray
    grid: Grid
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.times),) + self.grid.shape:
            raise ValueError(
                f"values shape {self.values.shape} does not match "
                f"{(len(self.times),) + self.grid.shape}"
            )

    def level(self, t: float) -> np.ndarray:
        k = int(np.argmin(np.abs(self.times - t)))
        if not np.isclose(self.times[k], t, rtol=0, atol=1e-12 * max(1.0, abs(t))):
            raise KeyError(f"no stored level at t={t}")
        return self.values[k]

    def window(self, t_lo: float, t_hi: float) -> "SpaceTimeField":
        keep = (self.times >= t_lo - 1e-12) & (self.times <= t_hi + 1e-12)
        return SpaceTimeField(self.times[keep], self.grid, self.values[keep], dict(self.meta))
