"""Rescaled particle systems and their measure-valued limit tooling.

Level-k rescaling: both demographic rates get an additive bump
branching_scale * k, the initial condition puts round(k * x_init)
particles of weight 1/k at the origin, and snapshots are read off as
atomic measures whose total mass W approximates the limiting
continuous-state process. Resampling keeps particle counts bounded in
long supercritical runs while conserving total mass to within one ulp.

The total-mass marginal of the rescaled system is a linear birth-death
chain, so for mass-only studies `rescaled_mass_samples` simulates the
embedded jump chain directly (optionally through a numba kernel); this
is the same process in law, just without the spatial bookkeeping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .branching_brownian import (
    DEFAULT_PARTICLE_CAP,
    Environment,
    MeasureRecorder,
    PopulationState,
    advance,
    init_population,
    snapshot_measure,
    total_mass,
)
from .errors import ConfigError
from .measure import (
    DiscreteMeasure,
    TestFunction,
    density_grid,
    empty_measure,
    integrate_test_function,
    parse_test_function,
)
from .rng import RngStream, exponentials, uniforms

try:  # numba accelerates the jump-chain kernel; everything works without it
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    _HAVE_NUMBA = False

__all__ = [
    "DiscreteMeasure",
    "TestFunction",
    "parse_test_function",
    "integrate_test_function",
    "density_grid",
    "empty_measure",
    "RescalingSchedule",
    "initial_particle_count",
    "rescaled_run",
    "resample",
    "rescaled_mass_samples",
]


@dataclass(frozen=True)
class RescalingSchedule:
    """Level-k scaling: mass unit 1/k, rate bump branching_scale * k."""

    k: int
    branching_scale: float = 1.0

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError("rescaling level k must be >= 1")
        if not self.branching_scale > 0:
            raise ConfigError("branching_scale must be positive")

    @property
    def beta(self) -> float:
        return float(self.k)

    @property
    def mass_unit(self) -> float:
        return 1.0 / self.k

    @property
    def rate_bump(self) -> float:
        return self.branching_scale * self.k


def initial_particle_count(k: int, x_init: float) -> int:
    n0 = int(round(k * x_init))
    if n0 < 1:
        raise ConfigError(
            f"k={k}, x_init={x_init} rounds to an empty initial population"
        )
    return n0


def resample(state: PopulationState, target: int, stream: RngStream) -> PopulationState:
    """Systematic resampling down (or up) to `target` equal-mass particles.

    Identity when the population is already at or below the target.
    Selection points are a jittered equispaced grid on the cumulative
    weight axis, so a particle carrying a fraction p of the total mass
    leaves floor(p * target) or ceil(p * target) copies: unbiased and
    low-variance. Survivors keep their positions; extra copies get fresh
    ids with parent = source. All output weights equal fsum(w) / target,
    hence total mass is conserved to at most one ulp.
    """
    if target < 1:
        raise ConfigError("resample target must be >= 1")
    n = state.n_alive
    if n <= target:
        return state
    w = state.weights[:n]
    m_total = math.fsum(w.tolist())
    stride = m_total / target
    u0 = float(uniforms(stream, 1)[0]) * stride
    points = u0 + stride * np.arange(target)
    cum = np.cumsum(w)
    cum[-1] = m_total  # guard accumulated drift at the top end
    rows = np.searchsorted(cum, points, side="right")
    np.clip(rows, 0, n - 1, out=rows)
    counts = np.bincount(rows, minlength=n)
    extra = counts > 1
    dup_sources = np.repeat(np.nonzero(extra)[0], counts[extra] - 1)
    state.add_copies(dup_sources)
    keep = np.ones(state.n_alive, dtype=bool)
    keep[:n] = counts > 0
    state.keep_only(keep)
    state.weights[: state.n_alive] = stride
    if state.n_alive != target:
        raise RuntimeError("resample bookkeeping failed")
    return state


def rescaled_run(
    env: Environment,
    x_init: float,
    schedule: RescalingSchedule,
    t_end: float,
    snapshot_times,
    stream: RngStream,
    origin=None,
    resample_target: int | None = None,
    resample_every: float | None = None,
    cap: int = DEFAULT_PARTICLE_CAP,
    method: str = "auto",
):
    """Run the level-k system and return [(time, DiscreteMeasure, W), ...].

    Weights are physical masses (1/k at the start), so snapshots use
    beta = 1 and W is read with the same accumulator as <X, 1>. x_init is
    either a scalar mass placed at `origin` or a DiscreteMeasure whose
    atoms are approximated by round(k * mass) particles each. When
    resample_target is set, resample_every must be too: the population is
    resampled back to the target count at every multiple of
    resample_every at which it exceeds the target.
    """
    if (resample_target is None) != (resample_every is None):
        raise ConfigError("resample_target and resample_every go together")
    if resample_every is not None and not resample_every > 0:
        raise ConfigError("resample_every must be positive")
    k_env = env.with_rate_offset(schedule.rate_bump)
    if isinstance(x_init, DiscreteMeasure):
        if x_init.dimension != env.dimension:
            raise ConfigError("initial measure dimension does not match environment")
        counts = np.rint(schedule.k * x_init.masses).astype(np.int64)
        n0 = int(counts.sum())
        if n0 < 1:
            raise ConfigError("initial measure rounds to an empty population at this k")
        state = init_population(n0, origin=np.zeros(env.dimension),
                                d=env.dimension, weight=schedule.mass_unit)
        state.pos[:n0] = np.repeat(x_init.positions, counts, axis=0)
    else:
        n0 = initial_particle_count(schedule.k, x_init)
        if origin is None:
            origin = np.zeros(env.dimension)
        state = init_population(n0, origin=origin, d=env.dimension,
                                weight=schedule.mass_unit)
    recorder = MeasureRecorder(snapshot_times, beta=1.0)
    if recorder.times and recorder.times[0] == 0.0:
        recorder.observe(state)
    if resample_target is None:
        boundaries = [t_end]
    else:
        n_steps = max(1, math.ceil(t_end / resample_every - 1e-9))
        boundaries = [min(t_end, (i + 1) * resample_every) for i in range(n_steps)]
        if boundaries[-1] < t_end:
            boundaries.append(t_end)
    for b in boundaries:
        advance(state, k_env, b, stream, observers=[recorder], cap=cap, method=method)
        if (
            resample_target is not None
            and state.time < t_end
            and state.n_alive > resample_target
        ):
            resample(state, resample_target, stream)
    return recorder.records


# ---------------------------------------------------------------------------
# mass-only fast path


def _chain_block_python(n, t, t_end, rate, p_birth, exps, us):
    """Scalar reference: returns (n, t, done, value)."""
    for j in range(exps.shape[0]):
        dt = exps[j] / (rate * n)
        if t + dt > t_end:
            return n, t, True, n
        t = t + dt
        n = n + (1 if us[j] < p_birth else -1)
        if n == 0:
            return 0, t, True, 0
    return n, t, False, -1


if _HAVE_NUMBA:

    @numba.njit(cache=True)
    def _chain_block_numba(n, t, t_end, rate, p_birth, exps, us):  # pragma: no cover
        for j in range(exps.shape[0]):
            dt = exps[j] / (rate * n)
            if t + dt > t_end:
                return n, t, True, n
            t = t + dt
            n = n + (1 if us[j] < p_birth else -1)
            if n == 0:
                return 0, t, True, 0
        return n, t, False, -1


def _chain_block_numpy(n, t, t_end, rate, p_birth, exps, us):
    """Vectorized block consumer, bit-identical to the scalar reference.

    Running times are built with a sequential cumsum seeded at t, which
    reproduces the scalar left-to-right float adds exactly. Entries past
    the absorption index divide by non-positive populations; they only
    appear at indices the stopping logic never reads.
    """
    m = exps.shape[0]
    signs = np.where(us < p_birth, 1, -1).astype(np.int64)
    n_after = n + np.cumsum(signs)
    n_before = np.empty(m, dtype=np.int64)
    n_before[0] = n
    n_before[1:] = n_after[:-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        dt = exps / (rate * n_before)
        t_path = np.cumsum(np.concatenate([[t], dt]))[1:]
    # scalar test is `t_prev + dt > t_end` with t_prev the running sum so far
    t_prev = np.empty(m)
    t_prev[0] = t
    t_prev[1:] = t_path[:-1]
    with np.errstate(invalid="ignore"):
        crossed = t_prev + dt > t_end
    absorbed = n_after == 0
    i_cross = int(np.argmax(crossed)) if crossed.any() else m
    i_abs = int(np.argmax(absorbed)) if absorbed.any() else m
    if i_cross <= i_abs and i_cross < m:
        return int(n_before[i_cross]), float(t_prev[i_cross]), True, int(n_before[i_cross])
    if i_abs < m:
        return 0, float(t_path[i_abs]), True, 0
    return int(n_after[-1]), float(t_path[-1]), False, -1


def rescaled_mass_samples(
    k: int,
    x_init: float,
    t_end: float,
    stream: RngStream,
    n_reps: int,
    branching_scale: float = 1.0,
    base_birth_rate: float = 0.0,
    base_death_rate: float = 0.0,
    block: int = 2048,
    use_numba: bool | None = None,
) -> np.ndarray:
    """Total mass W at t_end for n_reps independent level-k systems.

    Space is integrated out: the particle count is a linear birth-death
    chain with per-capita rates (base + branching_scale * k), simulated
    through its embedded jump chain. Draws are consumed in whole blocks
    per replication regardless of backend, so results are identical with
    and without numba.
    """
    if n_reps < 1:
        raise ConfigError("n_reps must be >= 1")
    if t_end < 0:
        raise ConfigError("t_end must be >= 0")
    birth = base_birth_rate + branching_scale * k
    death = base_death_rate + branching_scale * k
    rate = birth + death
    if not rate > 0:
        raise ConfigError("total event rate must be positive")
    p_birth = birth / rate
    n0 = initial_particle_count(k, x_init)
    if use_numba is None:
        use_numba = _HAVE_NUMBA
    if use_numba and not _HAVE_NUMBA:
        raise ConfigError("numba requested but not installed")
    consume = _chain_block_numba if use_numba else _chain_block_numpy
    out = np.empty(n_reps)
    for r in range(n_reps):
        n, t, done, value = n0, 0.0, t_end == 0.0, n0
        while not done:
            exps = exponentials(stream, block)
            us = uniforms(stream, block)
            n, t, done, value = consume(n, t, t_end, rate, p_birth, exps, us)
        out[r] = value / k
    return out
