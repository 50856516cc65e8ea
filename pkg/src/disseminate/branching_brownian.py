"""Branching Brownian particle system with spatially varying rates.

Particles diffuse independently, split into two at a position-dependent
birth rate, and die at a position-dependent death rate. On a split the
parent persists and the child starts at the parent's position. Rates are
realized by thinning against global upper bounds, so only the bounds enter
the clock and the local values enter the accept step; between events a
particle's diffusivity is frozen at the value seen at its segment start.

Two interchangeable drivers:

  * an event-at-a-time engine valid for any environment, and
  * a batched engine restricted to spatially constant environments, which
    processes whole time slices with vectorized draws.

Both are exact in law for constant environments (the batched one refuses
non-constant fields) and leave every surviving particle synchronized at
the requested end time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, PopulationOverflowError
from .measure import DiscreteMeasure
from .raster import RasterGrid, read_ascii_grid
from .rng import (
    RngStream,
    exponentials,
    normals,
    random_indices,
    sample_exponential,
    uniforms,
)

DEFAULT_PARTICLE_CAP = 10_000_000


# ---------------------------------------------------------------------------
# environment


@dataclass(frozen=True)
class EnvField:
    """Scalar field over the plane: a constant, or a raster with background.

    `offset` is added on top of whatever the base lookup returns; the
    rescaled runs use it to shift both demographic rates by the same
    amount without touching the underlying field.
    """

    constant: float | None = None
    raster: RasterGrid | None = None
    background: float = 0.0
    offset: float = 0.0
    name: str = "field"

    def __post_init__(self):
        if (self.constant is None) == (self.raster is None):
            raise ConfigError(
                f"field {self.name!r}: set exactly one of constant / raster"
            )
        if self.offset < 0:
            raise ConfigError(f"field {self.name!r}: offset must be >= 0")
        if self.constant is not None:
            if not np.isfinite(self.constant) or self.constant < 0:
                raise ConfigError(
                    f"field {self.name!r}: constant must be finite and >= 0,"
                    f" got {self.constant!r}"
                )
        else:
            if not np.isfinite(self.background) or self.background < 0:
                raise ConfigError(
                    f"field {self.name!r}: background must be finite and >= 0"
                )
            g = self.raster
            data = g.values != g.nodata
            bad = data & ~(np.isfinite(g.values) & (g.values >= 0))
            if np.any(bad):
                r, c = [int(v[0]) for v in np.nonzero(bad)]
                raise ConfigError(
                    f"field {self.name!r}: invalid value {g.values[r, c]!r}"
                    f" at row {r}, col {c}"
                )

    @property
    def is_constant(self) -> bool:
        return self.constant is not None

    @property
    def upper_bound(self) -> float:
        if self.constant is not None:
            return self.constant + self.offset
        g = self.raster
        data = g.values[g.values != g.nodata]
        top = self.background if data.size == 0 else max(float(data.max()), self.background)
        return top + self.offset

    def at_many(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        n = pts.shape[0]
        if self.constant is not None:
            return np.full(n, self.constant + self.offset)
        g = self.raster
        col = np.floor((pts[:, 0] - g.xllcorner) / g.cellsize).astype(np.int64)
        row_b = np.floor((pts[:, 1] - g.yllcorner) / g.cellsize).astype(np.int64)
        row = g.nrows - 1 - row_b
        out = np.full(n, self.background)
        inside = (col >= 0) & (col < g.ncols) & (row >= 0) & (row < g.nrows)
        if np.any(inside):
            vals = g.values[row[inside], col[inside]]
            out[inside] = np.where(vals == g.nodata, self.background, vals)
        return out + self.offset

    def at(self, point) -> float:
        if self.constant is not None:
            return self.constant + self.offset
        return float(self.at_many(np.asarray(point)[None, :])[0])


@dataclass(frozen=True)
class Environment:
    """Birth rate, death rate and diffusivity fields plus the dimension."""

    birth: EnvField
    death: EnvField
    sigma: EnvField
    dimension: int = 2

    def __post_init__(self):
        if self.dimension not in (1, 2, 3):
            raise ConfigError("dimension must be 1, 2 or 3")
        if self.dimension != 2:
            for f in (self.birth, self.death, self.sigma):
                if not f.is_constant:
                    raise ConfigError(
                        f"raster field {f.name!r} needs dimension = 2"
                    )

    @property
    def is_constant(self) -> bool:
        return self.birth.is_constant and self.death.is_constant and self.sigma.is_constant

    @property
    def birth_max(self) -> float:
        return self.birth.upper_bound

    @property
    def death_max(self) -> float:
        return self.death.upper_bound

    @property
    def sigma_max(self) -> float:
        return self.sigma.upper_bound

    def with_rate_offset(self, delta: float) -> "Environment":
        """Shift birth and death rates by the same additive amount."""
        from dataclasses import replace

        return Environment(
            birth=replace(self.birth, offset=self.birth.offset + delta),
            death=replace(self.death, offset=self.death.offset + delta),
            sigma=self.sigma,
            dimension=self.dimension,
        )


def constant_environment(birth_rate, death_rate, sigma, dimension=2) -> Environment:
    return Environment(
        birth=EnvField(constant=float(birth_rate), name="birth_rate"),
        death=EnvField(constant=float(death_rate), name="death_rate"),
        sigma=EnvField(constant=float(sigma), name="sigma"),
        dimension=dimension,
    )


_FIELD_ALIASES = {
    "birth_rate": "birth_rate",
    "lambda": "birth_rate",
    "death_rate": "death_rate",
    "mu": "death_rate",
    "sigma": "sigma",
}


def load_environment(spec) -> Environment:
    """Build an Environment from a config mapping.

    Accepted keys: dimension (default 2) and one entry per field, where a
    field entry is a number (constant) or a mapping with `raster` (path to
    an ASCII grid) and optional `background`. `lambda` / `mu` are accepted
    as aliases for birth_rate / death_rate. Unknown keys are rejected.
    """
    if not isinstance(spec, dict):
        raise ConfigError("environment spec must be a mapping")
    spec = dict(spec)
    dimension = spec.pop("dimension", 2)
    if not isinstance(dimension, int):
        raise ConfigError("environment key 'dimension' must be an integer")
    entries = {}
    for key in list(spec):
        canon = _FIELD_ALIASES.get(key)
        if canon is None:
            raise ConfigError(f"unknown environment key {key!r}")
        if canon in entries:
            raise ConfigError(f"environment field {canon!r} given twice")
        entries[canon] = spec.pop(key)
    missing = [k for k in ("birth_rate", "death_rate", "sigma") if k not in entries]
    if missing:
        raise ConfigError(f"environment spec missing fields: {missing}")
    fields = {}
    for canon in ("birth_rate", "death_rate", "sigma"):
        val = entries[canon]
        if isinstance(val, (int, float)) and not isinstance(val, bool):
            fields[canon] = EnvField(constant=float(val), name=canon)
        elif isinstance(val, dict):
            sub = dict(val)
            path = sub.pop("raster", None)
            background = sub.pop("background", 0.0)
            if sub:
                raise ConfigError(
                    f"environment field {canon!r}: unknown keys {sorted(sub)}"
                )
            if path is None:
                raise ConfigError(f"environment field {canon!r}: missing 'raster'")
            grid = read_ascii_grid(path)
            fields[canon] = EnvField(
                raster=grid, background=float(background), name=canon
            )
        else:
            raise ConfigError(
                f"environment field {canon!r} must be a number or a mapping"
            )
    return Environment(
        birth=fields["birth_rate"],
        death=fields["death_rate"],
        sigma=fields["sigma"],
        dimension=dimension,
    )


def environment_from_prefix(prefix, birth_rate, death_rate, sigma, dimension=2) -> Environment:
    """Assemble an environment from raster files sharing a path prefix.

    Looks for <prefix>.lambda.asc, <prefix>.mu.asc and <prefix>.sigma.asc.
    A field whose file exists becomes a raster field with the corresponding
    constant as out-of-extent background; a missing file leaves that field
    constant. With no files present this degrades to constant_environment.
    """
    import os.path

    def _field(suffix, const, name):
        path = f"{prefix}.{suffix}.asc"
        if os.path.exists(path):
            return EnvField(raster=read_ascii_grid(path), background=float(const), name=name)
        return EnvField(constant=float(const), name=name)

    return Environment(
        birth=_field("lambda", birth_rate, "birth_rate"),
        death=_field("mu", death_rate, "death_rate"),
        sigma=_field("sigma", sigma, "sigma"),
        dimension=dimension,
    )


# ---------------------------------------------------------------------------
# population state


@dataclass(frozen=True)
class Particle:
    """Read-only view of one particle at the state's current time."""

    id: int
    parent_id: int  # -1 for initial particles
    birth_time: float
    position: np.ndarray
    weight: float


class PopulationState:
    """Array-backed population; rows [0, n_alive) are the living particles.

    Dead rows are reclaimed by swap-remove, so row order carries no
    meaning. The integer identity

        n_alive == n_initial + births - deaths + external_added - external_removed

    is maintained through every engine step and through driver surgery
    (resampling, culling) done via the add_/drop_ helpers.
    """

    __slots__ = (
        "d", "time", "n_alive", "n_initial", "next_id",
        "total_births", "total_deaths", "external_added", "external_removed",
        "ids", "parent_ids", "birth_times", "pos", "upd_times", "weights",
    )

    def __init__(self, d: int, capacity: int = 64):
        self.d = int(d)
        self.time = 0.0
        self.n_alive = 0
        self.n_initial = 0
        self.next_id = 0
        self.total_births = 0
        self.total_deaths = 0
        self.external_added = 0
        self.external_removed = 0
        capacity = max(int(capacity), 1)
        self.ids = np.zeros(capacity, dtype=np.int64)
        self.parent_ids = np.zeros(capacity, dtype=np.int64)
        self.birth_times = np.zeros(capacity)
        self.pos = np.zeros((capacity, self.d))
        self.upd_times = np.zeros(capacity)
        self.weights = np.zeros(capacity)

    # -- storage -----------------------------------------------------------

    @property
    def capacity(self) -> int:
        return self.ids.shape[0]

    def ensure_capacity(self, needed: int):
        cap = self.capacity
        if needed <= cap:
            return
        while cap < needed:
            cap *= 2
        n = self.n_alive
        for name in ("ids", "parent_ids", "birth_times", "upd_times", "weights"):
            old = getattr(self, name)
            new = np.zeros(cap, dtype=old.dtype)
            new[:n] = old[:n]
            setattr(self, name, new)
        new_pos = np.zeros((cap, self.d))
        new_pos[:n] = self.pos[:n]
        self.pos = new_pos

    # -- queries -----------------------------------------------------------

    @property
    def positions(self) -> np.ndarray:
        return self.pos[: self.n_alive]

    @property
    def alive_weights(self) -> np.ndarray:
        return self.weights[: self.n_alive]

    def particles(self):
        for i in range(self.n_alive):
            yield Particle(
                id=int(self.ids[i]),
                parent_id=int(self.parent_ids[i]),
                birth_time=float(self.birth_times[i]),
                position=self.pos[i].copy(),
                weight=float(self.weights[i]),
            )

    def count_identity_ok(self) -> bool:
        expected = (
            self.n_initial
            + self.total_births
            - self.total_deaths
            + self.external_added
            - self.external_removed
        )
        return self.n_alive == expected

    # -- engine mutations ----------------------------------------------------

    def spawn_child(self, row: int, t: float) -> int:
        self.ensure_capacity(self.n_alive + 1)
        j = self.n_alive
        self.ids[j] = self.next_id
        self.parent_ids[j] = self.ids[row]
        self.birth_times[j] = t
        self.pos[j] = self.pos[row]
        self.upd_times[j] = t
        self.weights[j] = self.weights[row]
        self.next_id += 1
        self.n_alive += 1
        self.total_births += 1
        return j

    def kill(self, row: int):
        last = self.n_alive - 1
        if row != last:
            self.ids[row] = self.ids[last]
            self.parent_ids[row] = self.parent_ids[last]
            self.birth_times[row] = self.birth_times[last]
            self.pos[row] = self.pos[last]
            self.upd_times[row] = self.upd_times[last]
            self.weights[row] = self.weights[last]
        self.n_alive = last
        self.total_deaths += 1

    # -- driver surgery (resampling, culling) --------------------------------

    def drop_rows(self, rows) -> int:
        """Remove the given rows from outside the dynamics (not deaths)."""
        rows = np.unique(np.asarray(rows, dtype=np.int64))
        if rows.size == 0:
            return 0
        if rows.size and (rows[0] < 0 or rows[-1] >= self.n_alive):
            raise IndexError("drop_rows: row out of range")
        keep = np.ones(self.n_alive, dtype=bool)
        keep[rows] = False
        self._compact(keep)
        self.external_removed += int(rows.size)
        return int(rows.size)

    def keep_only(self, keep_mask) -> int:
        keep = np.asarray(keep_mask, dtype=bool)
        if keep.shape[0] != self.n_alive:
            raise IndexError("keep_only: mask length must equal n_alive")
        dropped = int(self.n_alive - keep.sum())
        self._compact(keep)
        self.external_removed += dropped
        return dropped

    def _compact(self, keep: np.ndarray):
        n = int(keep.sum())
        idx = np.nonzero(keep)[0]
        self.ids[:n] = self.ids[idx]
        self.parent_ids[:n] = self.parent_ids[idx]
        self.birth_times[:n] = self.birth_times[idx]
        self.pos[:n] = self.pos[idx]
        self.upd_times[:n] = self.upd_times[idx]
        self.weights[:n] = self.weights[idx]
        self.n_alive = n

    def add_copies(self, source_rows) -> np.ndarray:
        """Duplicate the given rows with fresh ids (parent = source id).

        Used by resampling; counts as externally added mass, not births.
        Returns the new row indices.
        """
        src = np.asarray(source_rows, dtype=np.int64)
        k = src.size
        if k == 0:
            return np.empty(0, dtype=np.int64)
        self.ensure_capacity(self.n_alive + k)
        j0 = self.n_alive
        sl = slice(j0, j0 + k)
        self.ids[sl] = self.next_id + np.arange(k, dtype=np.int64)
        self.parent_ids[sl] = self.ids[src]
        self.birth_times[sl] = self.time
        self.pos[sl] = self.pos[src]
        self.upd_times[sl] = self.upd_times[src]
        self.weights[sl] = self.weights[src]
        self.next_id += k
        self.n_alive += k
        self.external_added += k
        return np.arange(j0, j0 + k, dtype=np.int64)


def init_population(
    n0: int,
    origin=(0.0, 0.0),
    env: Environment | None = None,
    d: int | None = None,
    weight: float = 1.0,
    t0: float = 0.0,
) -> PopulationState:
    """Fresh population: n0 particles of equal weight stacked at origin."""
    if n0 < 1:
        raise ConfigError("initial population must satisfy n0 >= 1")
    if not weight > 0:
        raise ConfigError("particle weight must be positive")
    origin = np.asarray(origin, dtype=np.float64).ravel()
    if env is not None:
        if d is not None and d != env.dimension:
            raise ConfigError("d and env.dimension disagree")
        d = env.dimension
    if d is None:
        d = origin.shape[0]
    if origin.shape[0] != d:
        raise ConfigError("origin length must match dimension")
    state = PopulationState(d=d, capacity=max(64, 2 * n0))
    state.time = float(t0)
    state.n_alive = n0
    state.n_initial = n0
    state.next_id = n0
    state.ids[:n0] = np.arange(n0, dtype=np.int64)
    state.parent_ids[:n0] = -1
    state.birth_times[:n0] = t0
    state.pos[:n0] = origin
    state.upd_times[:n0] = t0
    state.weights[:n0] = weight
    return state


def snapshot_measure(state: PopulationState, beta: float = 1.0) -> DiscreteMeasure:
    """Atomic measure with one atom of mass weight/beta per particle."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    n = state.n_alive
    return DiscreteMeasure(
        positions=state.pos[:n].copy(),
        masses=state.weights[:n] / beta,
    )


def total_mass(state: PopulationState, beta: float = 1.0) -> float:
    """<X, 1> for the snapshot measure; same accumulation as the measure's."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    n = state.n_alive
    return math.fsum((state.weights[:n] / beta).tolist())


# ---------------------------------------------------------------------------
# observers


class CallbackObserver:
    def __init__(self, times, fn):
        self.times = tuple(sorted(times))
        self.fn = fn

    def observe(self, state: PopulationState):
        self.fn(state)


class CountRecorder:
    """Records (time, n_alive) at each observation time."""

    def __init__(self, times):
        self.times = tuple(sorted(times))
        self.records: list[tuple[float, int]] = []

    def observe(self, state: PopulationState):
        self.records.append((state.time, state.n_alive))


class RunningMaxRecorder:
    """Tracks the maximal distance from origin reached by any particle.

    Stores (time, n_alive, instantaneous max radius) rows; series() folds
    them into a running maximum, carrying the last value through epochs
    where the population is extinct.
    """

    def __init__(self, times, origin=None):
        self.times = tuple(sorted(times))
        self.origin = None if origin is None else np.asarray(origin, dtype=np.float64)
        self.records: list[tuple[float, int, float]] = []

    def observe(self, state: PopulationState):
        n = state.n_alive
        if n == 0:
            r = math.nan
        else:
            p = state.pos[:n]
            if self.origin is not None:
                p = p - self.origin
            r = float(np.sqrt(np.max(np.sum(p * p, axis=1))))
        self.records.append((state.time, n, r))

    def series(self):
        ts = np.array([r[0] for r in self.records])
        peak = -math.inf
        out = np.empty(len(self.records))
        for i, (_, _, r) in enumerate(self.records):
            if not math.isnan(r) and r > peak:
                peak = r
            out[i] = peak
        return ts, out


class MeasureRecorder:
    """Snapshots (time, DiscreteMeasure, total mass) with atom mass weight/beta."""

    def __init__(self, times, beta: float = 1.0):
        self.times = tuple(sorted(times))
        self.beta = float(beta)
        self.records: list[tuple[float, DiscreteMeasure, float]] = []

    def observe(self, state: PopulationState):
        mu = snapshot_measure(state, self.beta)
        self.records.append((state.time, mu, mu.total_mass()))


def _collect_schedule(observers, t_start: float, t_end: float):
    """Sorted (time, [observers due]) boundaries in (t_start, t_end]."""
    due: dict[float, list] = {}
    for obs in observers:
        for t in obs.times:
            if t_start < t <= t_end:
                due.setdefault(float(t), []).append(obs)
    times = sorted(due)
    if not times or times[-1] != t_end:
        times.append(t_end)
    return [(t, due.get(t, [])) for t in times]


# ---------------------------------------------------------------------------
# engines


def _sync_all(state: PopulationState, env: Environment, t_target: float, stream: RngStream):
    """Diffuse every live particle from its last update to t_target.

    Diffusivity is frozen at the stored (segment-start) position. Normals
    are drawn for every row regardless of elapsed time so the draw count
    depends only on n_alive, not on which rows happen to be stale.
    """
    n = state.n_alive
    if n > 0:
        dts = t_target - state.upd_times[:n]
        if np.any(dts < -1e-12):
            raise RuntimeError("particle ahead of sync target")
        np.maximum(dts, 0.0, out=dts)
        if env.sigma.is_constant:
            sig = env.sigma.upper_bound
            scale = sig * np.sqrt(dts)
        else:
            scale = env.sigma.at_many(state.pos[:n]) * np.sqrt(dts)
        z = normals(stream, (n, state.d))
        state.pos[:n] += z * scale[:, None]
        state.upd_times[:n] = t_target
    state.time = t_target


def _advance_event(state, env, until, stream, schedule, cap):
    rho = env.birth_max + env.death_max
    d = state.d
    t = state.time
    for t_next, obs_list in schedule:
        while state.n_alive > 0 and rho > 0.0:
            dt = sample_exponential(stream, rho * state.n_alive)
            if t + dt > t_next:
                # overshoot discarded; the clock restarts fresh at the
                # boundary, which is exact by memorylessness
                break
            t += dt
            i = int(random_indices(stream, state.n_alive, 1)[0])
            lag = t - state.upd_times[i]
            if lag > 0:
                sig = env.sigma.at(state.pos[i])
                state.pos[i] += normals(stream, (d,)) * (sig * math.sqrt(lag))
                state.upd_times[i] = t
            u = float(uniforms(stream, 1)[0]) * rho
            birth_here = env.birth.at(state.pos[i])
            if u < birth_here:
                state.spawn_child(i, t)
                if state.n_alive > cap:
                    raise PopulationOverflowError(
                        f"population exceeded cap={cap} at t={t:.6g};"
                        " rerun through the rescaled superprocess driver"
                        " with resampling"
                    )
            elif u < birth_here + env.death.at(state.pos[i]):
                state.kill(i)
            # otherwise a phantom event: position updated, nothing else
        _sync_all(state, env, t_next, stream)
        t = t_next
        for obs in obs_list:
            obs.observe(state)


def _advance_batched(state, env, until, stream, schedule, cap):
    # constant environment only: one rate triple governs every particle
    birth = env.birth_max
    death = env.death_max
    sig = env.sigma_max
    rho = birth + death
    d = state.d
    for t_next, obs_list in schedule:
        t0 = state.time
        n = state.n_alive
        if n > 0 and rho > 0.0:
            ids = state.ids[:n].copy()
            parents = state.parent_ids[:n].copy()
            born_at = state.birth_times[:n].copy()
            w = state.weights[:n].copy()
            pos = state.pos[:n].copy()
            cur_t = np.full(n, t0)
            alive = np.ones(n, dtype=bool)
            ev = t0 + exponentials(stream, n) / rho
            next_id = state.next_id
            births = deaths = 0
            while True:
                idx = np.nonzero(alive & (ev <= t_next))[0]
                if idx.size == 0:
                    break
                m = idx.size
                step = ev[idx] - cur_t[idx]
                pos[idx] += normals(stream, (m, d)) * (sig * np.sqrt(step))[:, None]
                cur_t[idx] = ev[idx]
                u = uniforms(stream, m) * rho
                is_birth = u < birth
                dying = idx[~is_birth]
                alive[dying] = False
                ev[dying] = math.inf
                deaths += dying.size
                bearing = idx[is_birth]
                nb = bearing.size
                if nb:
                    ev[bearing] = ev[bearing] + exponentials(stream, nb) / rho
                    child_ev = cur_t[bearing] + exponentials(stream, nb) / rho
                    ids = np.concatenate([ids, next_id + np.arange(nb, dtype=np.int64)])
                    parents = np.concatenate([parents, ids[bearing]])
                    born_at = np.concatenate([born_at, cur_t[bearing]])
                    w = np.concatenate([w, w[bearing]])
                    pos = np.concatenate([pos, pos[bearing]])
                    cur_t = np.concatenate([cur_t, cur_t[bearing]])
                    alive = np.concatenate([alive, np.ones(nb, dtype=bool)])
                    ev = np.concatenate([ev, child_ev])
                    next_id += nb
                    births += nb
                    n_alive_now = int(alive.sum())
                    if n_alive_now > cap:
                        raise PopulationOverflowError(
                            f"population exceeded cap={cap} in slice ending"
                            f" t={t_next:.6g}; rerun through the rescaled"
                            " superprocess driver with resampling"
                        )
            keep = np.nonzero(alive)[0]
            m = keep.size
            lag = t_next - cur_t[keep]
            pos_keep = pos[keep]
            pos_keep += normals(stream, (m, d)) * (sig * np.sqrt(lag))[:, None]
            state.ensure_capacity(m)
            state.ids[:m] = ids[keep]
            state.parent_ids[:m] = parents[keep]
            state.birth_times[:m] = born_at[keep]
            state.pos[:m] = pos_keep
            state.upd_times[:m] = t_next
            state.weights[:m] = w[keep]
            state.n_alive = m
            state.next_id = next_id
            state.total_births += births
            state.total_deaths += deaths
            state.time = t_next
        else:
            _sync_all(state, env, t_next, stream)
        for obs in obs_list:
            obs.observe(state)


def advance(
    state: PopulationState,
    env: Environment,
    until: float,
    stream: RngStream,
    observers=(),
    cap: int = DEFAULT_PARTICLE_CAP,
    method: str = "auto",
) -> PopulationState:
    """Run the particle system forward to `until` (in place).

    Observers fire at their scheduled times inside (state.time, until],
    with all particle positions synchronized to the observation time; an
    observation exactly at the entry time belongs to the previous call.
    method: "auto" picks the batched engine for constant environments and
    the per-event engine otherwise; "event" / "batch" force one.
    """
    if env.dimension != state.d:
        raise ConfigError("environment dimension does not match population")
    if until < state.time:
        raise ValueError("cannot advance backwards")
    if method not in ("auto", "event", "batch"):
        raise ValueError(f"unknown method {method!r}")
    if method == "batch" and not env.is_constant:
        raise ConfigError("batched engine requires a constant environment")
    if until == state.time:
        return state
    schedule = _collect_schedule(observers, state.time, until)
    use_batch = method == "batch" or (method == "auto" and env.is_constant)
    if use_batch:
        _advance_batched(state, env, until, stream, schedule, cap)
    else:
        _advance_event(state, env, until, stream, schedule, cap)
    assert state.count_identity_ok(), "particle count identity violated"
    return state


def simulate_run(
    env: Environment,
    t_end: float,
    stream: RngStream,
    n0: int = 1,
    origin=None,
    weight: float = 1.0,
    observers=(),
    cap: int = DEFAULT_PARTICLE_CAP,
    method: str = "auto",
) -> PopulationState:
    """init_population + advance, firing time-0 observers on the way in."""
    if origin is None:
        origin = np.zeros(env.dimension)
    state = init_population(n0, origin=origin, d=env.dimension, weight=weight)
    for obs in observers:
        if obs.times and obs.times[0] == 0.0:
            obs.observe(state)
    return advance(state, env, t_end, stream, observers=observers, cap=cap, method=method)
