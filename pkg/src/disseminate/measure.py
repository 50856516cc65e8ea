"""Finite atomic measures on R^d and the supported test-function family.

A DiscreteMeasure is the state of the measure-valued process at a snapshot:
atoms (position, mass) with every mass positive. Total mass is accumulated
with math.fsum everywhere, so <X, 1> and the scalar mass process W agree
bit-for-bit rather than merely to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .raster import RasterGrid, Window


@dataclass(frozen=True)
class DiscreteMeasure:
    positions: np.ndarray = field(repr=False)  # (n_atoms, d)
    masses: np.ndarray = field(repr=False)  # (n_atoms,)

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.float64)
        m = np.asarray(self.masses, dtype=np.float64)
        if pos.ndim != 2:
            pos = pos.reshape(len(m), -1) if len(m) else pos.reshape(0, 2)
        if pos.shape[0] != m.shape[0]:
            raise ValueError("positions and masses must have one row per atom")
        if np.any(m <= 0):
            raise ValueError("atom masses must be positive")
        if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(m))):
            raise ValueError("atoms must be finite")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "masses", m)

    @property
    def n_atoms(self) -> int:
        return int(self.masses.shape[0])

    @property
    def dimension(self) -> int:
        return int(self.positions.shape[1])

    def total_mass(self) -> float:
        return math.fsum(self.masses.tolist())


def empty_measure(d: int = 2) -> DiscreteMeasure:
    return DiscreteMeasure(positions=np.empty((0, d)), masses=np.empty(0))


@dataclass(frozen=True)
class TestFunction:
    """One of the supported integrands.

    kinds:
      const      -- f = 1
      halfplane  -- f = 1{x[axis] > threshold}
      rectangle  -- f = 1{x0 <= x <= x1 and y0 <= y <= y1} on the first two axes
      gauss      -- f = exp(-|x - center|^2 / (2 * bandwidth^2))
    """

    kind: str
    axis: int = 0
    threshold: float = 0.0
    rect: tuple = ()
    center: tuple = ()
    bandwidth: float = 1.0

    def __post_init__(self):
        if self.kind not in ("const", "halfplane", "rectangle", "gauss"):
            raise ConfigError(f"unknown test function kind {self.kind!r}")
        if self.kind == "rectangle" and len(self.rect) != 4:
            raise ConfigError("rectangle test function needs rect=(x0, x1, y0, y1)")
        if self.kind == "gauss":
            if not self.bandwidth > 0:
                raise ConfigError("gauss test function needs bandwidth > 0")
            if len(self.center) == 0:
                raise ConfigError("gauss test function needs a center point")

    def __call__(self, positions: np.ndarray) -> np.ndarray:
        pos = np.atleast_2d(np.asarray(positions, dtype=np.float64))
        if self.kind == "const":
            return np.ones(pos.shape[0])
        if self.kind == "halfplane":
            return (pos[:, self.axis] > self.threshold).astype(np.float64)
        if self.kind == "rectangle":
            x0, x1, y0, y1 = self.rect
            inside = (pos[:, 0] >= x0) & (pos[:, 0] <= x1)
            inside &= (pos[:, 1] >= y0) & (pos[:, 1] <= y1)
            return inside.astype(np.float64)
        center = np.asarray(self.center, dtype=np.float64)
        sq = np.sum((pos - center) ** 2, axis=1)
        return np.exp(-sq / (2.0 * self.bandwidth**2))


def parse_test_function(spec) -> TestFunction:
    """Build a TestFunction from 'const' / a dict with a 'kind' key."""
    if isinstance(spec, TestFunction):
        return spec
    if isinstance(spec, str):
        if spec == "const":
            return TestFunction(kind="const")
        raise ConfigError(f"unknown test function spec {spec!r}")
    if isinstance(spec, dict):
        d = dict(spec)
        kind = d.pop("kind", None)
        if kind is None:
            raise ConfigError("test function spec needs a 'kind' key")
        allowed = {"axis", "threshold", "rect", "center", "bandwidth"}
        unknown = set(d) - allowed
        if unknown:
            raise ConfigError(f"unknown test function keys: {sorted(unknown)}")
        if "rect" in d:
            d["rect"] = tuple(d["rect"])
        if "center" in d:
            d["center"] = tuple(d["center"])
        return TestFunction(kind=kind, **d)
    raise ConfigError(f"cannot parse test function from {type(spec).__name__}")


def integrate_test_function(measure: DiscreteMeasure, f) -> float:
    """<measure, f> = sum_i mass_i * f(position_i).

    The constant-1 integrand routes through total_mass() so that <X, 1>
    and W are literally the same accumulation, not two roundings.
    """
    f = parse_test_function(f)
    if measure.n_atoms == 0:
        return 0.0
    if f.kind == "const":
        return measure.total_mass()
    values = f(measure.positions)
    return math.fsum((measure.masses * values).tolist())


def density_grid(measure: DiscreteMeasure, window: Window, cellsize: float):
    """Occupation density raster: cell value = mass in cell / cell area.

    Atoms outside the window are ignored; their total is returned alongside
    the raster, so value*area summed over cells plus the out-of-window mass
    reconstructs the total mass.

    Returns (RasterGrid, out_of_window_mass).
    """
    grid = RasterGrid.from_window(window, cellsize)
    if measure.n_atoms == 0:
        return grid, 0.0
    if measure.dimension != 2:
        raise ValueError("density_grid needs planar atoms (d = 2)")
    pos = measure.positions
    h = cellsize
    col = np.floor((pos[:, 0] - window.x0) / h).astype(np.int64)
    row_from_bottom = np.floor((pos[:, 1] - window.y0) / h).astype(np.int64)
    row = grid.nrows - 1 - row_from_bottom
    inside = (col >= 0) & (col < grid.ncols) & (row >= 0) & (row < grid.nrows)
    mass_in = np.zeros((grid.nrows, grid.ncols))
    np.add.at(mass_in, (row[inside], col[inside]), measure.masses[inside])
    grid.values = mass_in / (h * h)
    out_mass = math.fsum(measure.masses[~inside].tolist())
    return grid, out_mass
