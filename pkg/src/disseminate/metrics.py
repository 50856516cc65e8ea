"""Dissemination metrics on top of particle snapshots.

Coverage is defined on a raster: a cell counts as covered when its center
lies within the communication radius of at least one node. Everything
else (zones, recoverage, passage times, front speed) is built on that
convention or on running-maximum radius series recorded during runs.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ConfigError
from .raster import RasterGrid, Window


def coverage_raster(positions, window: Window, cellsize: float, radius: float) -> RasterGrid:
    """0/1 raster of cells whose center is within `radius` of some node.

    Nodes are hashed into buckets of side `radius`; each occupied bucket
    only has to test the cell centers of its 3x3 bucket neighborhood, so
    the cost is n_nodes * (radius/cellsize)^2 rather than n_nodes * n_cells.
    """
    if not radius > 0:
        raise ConfigError("coverage radius must be positive")
    if not cellsize > 0:
        raise ConfigError("cellsize must be positive")
    if cellsize > radius / 2:
        warnings.warn(
            "cellsize above radius/2 rasterizes coverage coarsely",
            stacklevel=2,
        )
    grid = RasterGrid.from_window(window, cellsize)
    pos = np.atleast_2d(np.asarray(positions, dtype=np.float64))
    covered = np.zeros((grid.nrows, grid.ncols), dtype=bool)
    if pos.shape[0] == 0:
        grid.values = covered.astype(np.float64)
        return grid
    if pos.shape[1] != 2:
        raise ConfigError("coverage_raster needs planar positions")
    h = cellsize
    r2 = radius * radius
    # cell centers, indexed by column and by row-from-bottom
    cx = window.x0 + (np.arange(grid.ncols) + 0.5) * h
    cy = window.y0 + (np.arange(grid.nrows) + 0.5) * h
    buckets = np.floor(pos / radius).astype(np.int64)
    uniq, inverse = np.unique(buckets, axis=0, return_inverse=True)
    order = np.argsort(inverse, kind="stable")
    bounds = np.searchsorted(inverse[order], np.arange(uniq.shape[0] + 1))
    for b in range(uniq.shape[0]):
        nodes = pos[order[bounds[b] : bounds[b + 1]]]
        bx, by = uniq[b]
        # candidate centers live in the 3x3 bucket neighborhood
        c_lo = max(0, int(np.floor(((bx - 1) * radius - window.x0) / h)) - 1)
        c_hi = min(grid.ncols - 1, int(np.ceil(((bx + 2) * radius - window.x0) / h)))
        r_lo = max(0, int(np.floor(((by - 1) * radius - window.y0) / h)) - 1)
        r_hi = min(grid.nrows - 1, int(np.ceil(((by + 2) * radius - window.y0) / h)))
        if c_lo > c_hi or r_lo > r_hi:
            continue
        dx = nodes[:, 0][:, None] - cx[c_lo : c_hi + 1][None, :]
        dy = nodes[:, 1][:, None] - cy[r_lo : r_hi + 1][None, :]
        hit = (dx[:, None, :] ** 2 + dy[:, :, None] ** 2 <= r2).any(axis=0)
        rows_top = grid.nrows - 1 - np.arange(r_lo, r_hi + 1)
        covered[rows_top[:, None], np.arange(c_lo, c_hi + 1)[None, :]] |= hit
    grid.values = covered.astype(np.float64)
    return grid


def _full_cell_block(grid: RasterGrid) -> np.ndarray:
    """View of grid.values restricted to cells fully inside the window."""
    r0 = 1 if grid.partial_last_row else 0  # top row is the partial one
    c1 = grid.ncols - 1 if grid.partial_last_col else grid.ncols
    return grid.values[r0:, :c1]


def coverage_fraction(cov: RasterGrid) -> float:
    """Fraction of fully-inside cells marked covered.

    Cells sticking out past the window edge (a partial last row/column
    appears when the window is not a multiple of the cellsize) are left
    out of both numerator and denominator.
    """
    block = _full_cell_block(cov)
    if block.size == 0:
        raise ConfigError("window holds no complete cell at this cellsize")
    return float(np.count_nonzero(block > 0)) / block.size


@dataclass(frozen=True)
class Zone:
    """Connected uncovered region; bounding box in cell indices.

    min_x/max_x are column indices, min_y/max_y row indices counted from
    the bottom edge of the window, both inclusive.
    """

    zone_id: int
    area_cells: int
    min_x: int
    min_y: int
    max_x: int
    max_y: int


def uncovered_zones(cov: RasterGrid) -> list[Zone]:
    """4-connected components of uncovered cells, largest first."""
    uncovered = cov.values == 0
    labels, n = ndimage.label(uncovered)  # default structure = 4-connectivity
    zones = []
    for lab in range(1, n + 1):
        rows, cols = np.nonzero(labels == lab)
        y = cov.nrows - 1 - rows  # rows are stored top-first
        zones.append(
            Zone(
                zone_id=0,
                area_cells=int(rows.size),
                min_x=int(cols.min()),
                min_y=int(y.min()),
                max_x=int(cols.max()),
                max_y=int(y.max()),
            )
        )
    zones.sort(key=lambda z: (-z.area_cells, z.min_y, z.min_x))
    return [
        Zone(
            zone_id=i + 1,
            area_cells=z.area_cells,
            min_x=z.min_x,
            min_y=z.min_y,
            max_x=z.max_x,
            max_y=z.max_y,
        )
        for i, z in enumerate(zones)
    ]


def _coverage_stack(times, rasters):
    stack = np.asarray(
        [g.values if isinstance(g, RasterGrid) else g for g in rasters]
    )
    times = np.asarray(times, dtype=np.float64)
    if stack.ndim != 3 or stack.shape[0] != times.shape[0]:
        raise ConfigError("one coverage raster per observation time required")
    if stack.shape[0] and np.any(np.diff(times) <= 0):
        raise ConfigError("observation times must be strictly increasing")
    return times, stack > 0


@dataclass(frozen=True)
class CoverageSeries:
    """Covered fraction over time plus per-cell first/last coverage times.

    first/last entries are nan for cells never observed covered.
    """

    times: np.ndarray
    covered_fraction: np.ndarray
    first_cover_time: np.ndarray
    last_cover_time: np.ndarray


def coverage_series(times, rasters) -> CoverageSeries:
    times, stack = _coverage_stack(times, rasters)
    # fraction over full cells when given RasterGrids, else over everything
    fracs = []
    for i, g in enumerate(rasters):
        if isinstance(g, RasterGrid):
            fracs.append(coverage_fraction(g))
        else:
            fracs.append(float(np.count_nonzero(stack[i])) / stack[i].size)
    first = np.full(stack.shape[1:], np.nan)
    last = np.full(stack.shape[1:], np.nan)
    for i in range(stack.shape[0]):
        cov = stack[i]
        first[np.isnan(first) & cov] = times[i]
        last[cov] = times[i]
    return CoverageSeries(times, np.asarray(fracs), first, last)


def recoverage_delay(times, rasters, cell) -> float | None:
    """Delay until the given cell is covered, from the first observation.

    cell = (row, col) into the raster. Covered at the reference time
    means delay 0; never covered within the horizon means None.
    """
    times, stack = _coverage_stack(times, rasters)
    if stack.shape[0] == 0:
        raise ConfigError("need at least one observation")
    r, c = cell
    series = stack[:, r, c]
    if series[0]:
        return 0.0
    hits = np.nonzero(series)[0]
    if hits.size == 0:
        return None
    return float(times[hits[0]] - times[0])


@dataclass(frozen=True)
class RecoverageSummary:
    """Aggregate over cells uncovered at the reference observation."""

    n_open: int  # cells uncovered at the reference time
    n_recovered: int
    n_censored: int
    mean_delay: float  # over recovered cells; nan when none
    median_delay: float
    deadline: float | None = None
    n_within_deadline: int | None = None
    fraction_within_deadline: float | None = None


def recoverage_summary(times, rasters, deadline: float | None = None) -> RecoverageSummary:
    """Re-coverage delay distribution over all initially uncovered cells.

    Cells still uncovered at the last observation are censored; with a
    deadline they count against the within-deadline fraction rather than
    being dropped.
    """
    times, stack = _coverage_stack(times, rasters)
    if stack.shape[0] == 0:
        raise ConfigError("need at least one observation")
    open_cells = ~stack[0]
    n_open = int(np.count_nonzero(open_cells))
    ever = stack.any(axis=0) & open_cells
    first_idx = np.argmax(stack, axis=0)  # first True index where any
    delays = (times[first_idx] - times[0])[ever]
    n_recovered = int(delays.size)
    n_censored = n_open - n_recovered
    mean_d = float(delays.mean()) if n_recovered else math.nan
    med_d = float(np.median(delays)) if n_recovered else math.nan
    if deadline is None:
        return RecoverageSummary(n_open, n_recovered, n_censored, mean_d, med_d)
    n_within = int(np.count_nonzero(delays <= deadline)) if n_recovered else 0
    frac = n_within / n_open if n_open else math.nan
    return RecoverageSummary(
        n_open, n_recovered, n_censored, mean_d, med_d,
        deadline, n_within, frac,
    )


@dataclass(frozen=True)
class FirstPassageRow:
    radius: float
    n_uncensored: int
    n_censored: int
    mean: float  # statistics over uncensored passage times; nan when none
    median: float
    q90: float


def first_passage_times(series_list, radii) -> list[FirstPassageRow]:
    """First times the running front radius reaches each threshold.

    series_list holds one (times, running_max) pair per replication, with
    running_max nondecreasing (RunningMaxRecorder.series() output).
    Replications whose front never reaches a radius are censored there.
    """
    radii = sorted(float(r) for r in radii)
    prepared = []
    for ts, run in series_list:
        ts = np.asarray(ts, dtype=np.float64)
        run = np.asarray(run, dtype=np.float64)
        if ts.shape != run.shape:
            raise ConfigError("times and running max must align")
        if np.any(np.diff(run) < 0):
            raise ConfigError("running max series must be nondecreasing")
        prepared.append((ts, run))
    rows = []
    for r in radii:
        hits = []
        censored = 0
        for ts, run in prepared:
            idx = int(np.searchsorted(run, r, side="left"))
            if idx < run.shape[0]:
                hits.append(float(ts[idx]))
            else:
                censored += 1
        arr = np.asarray(hits)
        if arr.size:
            mean = float(arr.mean())
            med = float(np.median(arr))
            q90 = float(np.quantile(arr, 0.9))
        else:
            mean = med = q90 = math.nan
        rows.append(FirstPassageRow(r, int(arr.size), censored, mean, med, q90))
    return rows


def front_speed_estimate(rows, survival_fraction: float | None = None) -> float | None:
    """Least-squares front speed from median passage times.

    Only the upper half of the radius ladder enters the fit (the early
    radii are still in the transient). Slope is of radius against median
    time, so the result is a speed. Returns None when the estimate is not
    trustworthy: survival below 10%, fewer than 3 usable radii, or a
    degenerate time spread. A run that survives but never pushes the
    front out (all radii censored) reports speed 0.0.
    """
    if survival_fraction is not None and survival_fraction < 0.10:
        return None
    rows = sorted(rows, key=lambda row: row.radius)
    top = rows[len(rows) // 2 :]
    if not top:
        return None
    if all(row.n_uncensored == 0 for row in top):
        return 0.0
    usable = [
        row for row in top
        if row.n_uncensored > 0 and row.n_uncensored >= row.n_censored
    ]
    if len(usable) < 3:
        return None
    r = np.array([row.radius for row in usable])
    t = np.array([row.median for row in usable])
    var_t = float(np.var(t))
    if var_t == 0.0:
        return None
    cov = float(np.mean((t - t.mean()) * (r - r.mean())))
    return cov / var_t
