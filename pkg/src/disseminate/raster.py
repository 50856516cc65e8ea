"""Plane-window rasters and the ASCII grid interchange format.

All gridded outputs (coverage masks, occupation densities, environment
fields) share one carrier: a rectangular window discretized at a fixed
cellsize, stored row-major with row 0 at the TOP of the window, and
serialized as an ASCII grid with the header lines

    ncols, nrows, xllcorner, yllcorner, cellsize, nodata_value

followed by nrows whitespace-separated rows (first file row = top row).

Grids built from a window whose width or height is not an integer multiple
of the cellsize round the dimension up; the trailing partial column/row is
flagged so area accounting can exclude it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

DEFAULT_NODATA = -9999.0


@dataclass(frozen=True)
class Window:
    """Axis-aligned rectangle [x0, x1] x [y0, y1] in plane units."""

    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ConfigError(
                f"degenerate window: need x1 > x0 and y1 > y0, got {self}"
            )

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    @property
    def diagonal(self) -> float:
        return float(np.hypot(self.width, self.height))


@dataclass
class RasterGrid:
    """values[r, c] covers x in [xll + c*h, xll + (c+1)*h) and the matching
    y band, with r = 0 the top row (largest y)."""

    values: np.ndarray = field(repr=False)
    xllcorner: float = 0.0
    yllcorner: float = 0.0
    cellsize: float = 1.0
    nodata: float = DEFAULT_NODATA
    partial_last_col: bool = False
    partial_last_row: bool = False

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.size == 0:
            raise ValueError("raster values must be a nonempty 2-D array")
        if not self.cellsize > 0:
            raise ValueError(f"cellsize must be positive, got {self.cellsize}")
        self.values = v

    @property
    def nrows(self) -> int:
        return self.values.shape[0]

    @property
    def ncols(self) -> int:
        return self.values.shape[1]

    @classmethod
    def from_window(
        cls, window: Window, cellsize: float, fill: float = 0.0, nodata: float = DEFAULT_NODATA
    ) -> "RasterGrid":
        if not cellsize > 0:
            raise ConfigError(f"cellsize must be positive, got {cellsize}")
        ncols = int(np.ceil(window.width / cellsize - 1e-9))
        nrows = int(np.ceil(window.height / cellsize - 1e-9))
        partial_col = ncols * cellsize > window.width + 1e-9 * cellsize
        partial_row = nrows * cellsize > window.height + 1e-9 * cellsize
        return cls(
            values=np.full((nrows, ncols), fill, dtype=np.float64),
            xllcorner=window.x0,
            yllcorner=window.y0,
            cellsize=cellsize,
            nodata=nodata,
            partial_last_col=bool(partial_col),
            partial_last_row=bool(partial_row),
        )

    def cell_centers(self):
        """(x of each column, y of each row), y ordered top row first."""
        h = self.cellsize
        xs = self.xllcorner + (np.arange(self.ncols) + 0.5) * h
        ys = self.yllcorner + (self.nrows - np.arange(self.nrows) - 0.5) * h
        return xs, ys

    def cell_index(self, x: float, y: float):
        """(row, col) of the cell containing (x, y), or None outside the grid."""
        h = self.cellsize
        col = int(np.floor((x - self.xllcorner) / h))
        row_from_bottom = int(np.floor((y - self.yllcorner) / h))
        row = self.nrows - 1 - row_from_bottom
        if 0 <= col < self.ncols and 0 <= row < self.nrows:
            return row, col
        return None

    def value_at(self, x: float, y: float, background: float):
        """Piecewise-constant lookup; outside the extent or nodata -> background."""
        idx = self.cell_index(x, y)
        if idx is None:
            return background
        v = self.values[idx]
        return background if v == self.nodata else float(v)

    def data_max(self) -> float:
        """Largest non-nodata value (-inf if the grid is all nodata)."""
        mask = self.values != self.nodata
        return float(self.values[mask].max()) if mask.any() else float("-inf")

    def data_min(self) -> float:
        mask = self.values != self.nodata
        return float(self.values[mask].min()) if mask.any() else float("inf")


_HEADER_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value")


def write_ascii_grid(grid: RasterGrid, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"ncols {grid.ncols}\n")
        f.write(f"nrows {grid.nrows}\n")
        f.write(f"xllcorner {grid.xllcorner!r}\n")
        f.write(f"yllcorner {grid.yllcorner!r}\n")
        f.write(f"cellsize {grid.cellsize!r}\n")
        f.write(f"nodata_value {grid.nodata!r}\n")
        for r in range(grid.nrows):
            f.write(" ".join(repr(v) for v in grid.values[r].tolist()))
            f.write("\n")


def read_ascii_grid(path) -> RasterGrid:
    """Parse an ASCII grid; parse failures name the offending line/row/column."""
    with open(path, "r", encoding="utf-8") as f:
        lines = f.read().splitlines()
    header = {}
    for i, key in enumerate(_HEADER_KEYS):
        if i >= len(lines):
            raise ConfigError(f"{path}: missing header line {i + 1} ({key})")
        parts = lines[i].split()
        if len(parts) != 2 or parts[0].lower() != key:
            raise ConfigError(
                f"{path}: header line {i + 1} must be '{key} <value>', got {lines[i]!r}"
            )
        try:
            header[key] = float(parts[1])
        except ValueError:
            raise ConfigError(
                f"{path}: header line {i + 1}: cannot parse value {parts[1]!r} for {key}"
            ) from None
    ncols = int(header["ncols"])
    nrows = int(header["nrows"])
    if ncols < 1 or nrows < 1 or header["ncols"] != ncols or header["nrows"] != nrows:
        raise ConfigError(f"{path}: ncols/nrows must be positive integers")
    if not header["cellsize"] > 0:
        raise ConfigError(f"{path}: cellsize must be positive")
    body = lines[len(_HEADER_KEYS):]
    if len(body) < nrows:
        raise ConfigError(f"{path}: expected {nrows} data rows, found {len(body)}")
    values = np.empty((nrows, ncols), dtype=np.float64)
    for r in range(nrows):
        tokens = body[r].split()
        if len(tokens) != ncols:
            raise ConfigError(
                f"{path}: data row {r + 1} has {len(tokens)} values, expected {ncols}"
            )
        for c, tok in enumerate(tokens):
            try:
                values[r, c] = float(tok)
            except ValueError:
                raise ConfigError(
                    f"{path}: data row {r + 1}, column {c + 1}: bad value {tok!r}"
                ) from None
    return RasterGrid(
        values=values,
        xllcorner=header["xllcorner"],
        yllcorner=header["yllcorner"],
        cellsize=header["cellsize"],
        nodata=header["nodata_value"],
    )
