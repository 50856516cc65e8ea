"""Composed experiment drivers shared by the test suite and the scripts.

These wire the simulation primitives into the studies the package is
validated against: exit-time sampling for passage oracles, count
ensembles for mean-growth checks, beam-culled front-speed runs, and the
scaling-limit gap study for the rescaled mass process.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .branching_brownian import (
    CountRecorder,
    RunningMaxRecorder,
    advance,
    constant_environment,
    init_population,
    simulate_run,
)
from .csbp import BranchingMechanism, laplace_functional
from .errors import ConfigError, NumericFailureError
from .metrics import FirstPassageRow, first_passage_times, front_speed_estimate
from .rng import make_stream, normals
from .superprocess import rescaled_mass_samples


def ball_exit_times(
    sigma: float,
    d: int,
    radius: float,
    n_reps: int,
    stream,
    alpha: float = 0.15,
    boundary_frac: float = 1e-4,
    max_steps: int = 10_000_000,
) -> np.ndarray:
    """Exit times of driftless diffusion (per-coordinate scale sigma) from
    a centered ball, started at the center.

    Steps adapt quadratically to the distance from the boundary
    (dt = alpha * dist^2 / (sigma^2 d)), so the chance of an undetected
    excursion across the boundary within a step is of order e^{-2/alpha}.
    Paths inside boundary_frac * radius of the boundary are absorbed;
    both effects bias the mean by far less than Monte Carlo noise at the
    replication counts used here.
    """
    if not sigma > 0:
        raise ConfigError("sigma must be positive for an exit to occur")
    if not 0 < alpha < 1:
        raise ConfigError("alpha must be in (0, 1)")
    if not radius > 0:
        raise ConfigError("radius must be positive")
    eps = boundary_frac * radius
    denom = sigma * sigma * d
    pos = np.zeros((n_reps, d))
    t = np.zeros(n_reps)
    out = np.empty(n_reps)
    active = np.arange(n_reps)
    for _ in range(max_steps):
        if active.size == 0:
            return out
        p = pos[active]
        dist = radius - np.sqrt(np.sum(p * p, axis=1))
        done = dist <= eps
        if done.any():
            out[active[done]] = t[active[done]]
            keep = ~done
            active = active[keep]
            if active.size == 0:
                return out
            p = p[keep]
            dist = dist[keep]
        dt = alpha * dist * dist / denom
        step = normals(stream, (active.size, d)) * (sigma * np.sqrt(dt))[:, None]
        pos[active] = p + step
        t[active] += dt
    raise NumericFailureError("exit-time sampler exceeded max_steps")


def bbm_count_ensemble(
    birth_rate: float,
    death_rate: float,
    sigma: float,
    snapshot_times,
    n_reps: int,
    master_seed: int,
    n0: int = 1,
    d: int = 2,
    method: str = "auto",
    stream_offset: int = 0,
) -> np.ndarray:
    """Alive counts at the snapshot times, one row per replication.

    Replication i consumes the stream (master_seed, stream_offset + i).
    """
    env = constant_environment(birth_rate, death_rate, sigma, dimension=d)
    times = tuple(sorted(float(t) for t in snapshot_times))
    t_end = times[-1]
    counts = np.zeros((n_reps, len(times)), dtype=np.int64)
    for i in range(n_reps):
        stream = make_stream(master_seed, stream_offset + i)
        rec = CountRecorder(times)
        simulate_run(env, t_end, stream, n0=n0, observers=[rec], method=method)
        counts[i] = [n for (_, n) in rec.records]
    return counts


@dataclass(frozen=True)
class FrontSpeedResult:
    rows: list  # FirstPassageRow per radius, surviving runs only
    n_reps: int
    n_surviving: int
    survival_fraction: float
    speed: float | None


def front_speed_study(
    birth_rate: float,
    death_rate: float,
    sigma: float,
    horizon: float,
    radii,
    n_reps: int,
    master_seed: int,
    slice_dt: float = 0.1,
    beam_width: float = 6.0,
    n0: int = 1,
    d: int = 2,
    stream_offset: int = 0,
) -> FrontSpeedResult:
    """Front-speed estimate from beam-culled supercritical runs.

    Between slices, particles lagging more than beam_width behind the
    maximal radius are removed (driver surgery, counted as external
    removals). Laggards at depth w only overtake the front with
    probability of order e^{-c w}, so the running-maximum series is
    essentially unaffected while the population stays polynomial instead
    of exponential. Passage statistics are computed over surviving runs.
    """
    env = constant_environment(birth_rate, death_rate, sigma, dimension=d)
    n_slices = int(round(horizon / slice_dt))
    if abs(n_slices * slice_dt - horizon) > 1e-9:
        raise ConfigError("horizon must be a multiple of slice_dt")
    times = tuple((i + 1) * slice_dt for i in range(n_slices))
    series = []
    n_surviving = 0
    for i in range(n_reps):
        stream = make_stream(master_seed, stream_offset + i)
        state = init_population(n0, origin=np.zeros(d), d=d)
        rec = RunningMaxRecorder(times)
        for t_next in times:
            advance(state, env, t_next, stream, observers=[rec])
            if state.n_alive == 0:
                break
            p = state.positions
            r = np.sqrt(np.sum(p * p, axis=1))
            r_max = float(r.max())
            if r_max > beam_width:
                keep = r >= r_max - beam_width
                if not keep.all():
                    state.keep_only(keep)
        if state.n_alive > 0:
            n_surviving += 1
            series.append(rec.series())
    survival = n_surviving / n_reps
    rows = first_passage_times(series, radii) if series else [
        FirstPassageRow(float(r), 0, 0, math.nan, math.nan, math.nan) for r in radii
    ]
    speed = front_speed_estimate(rows, survival_fraction=survival)
    return FrontSpeedResult(rows, n_reps, n_surviving, survival, speed)


def exact_rescaled_laplace(
    k: int,
    x_init: float,
    t_end: float,
    mu: float,
    branching_scale: float = 1.0,
) -> float:
    """E[e^{-mu W_t}] for the level-k critical system, in closed form.

    The count process is a critical linear birth-death chain with
    per-capita rate a = branching_scale * k each way, whose per-line
    generating function is F(s, t) = 1 - (1-s)/(1 + a t (1-s)); the k
    initial lines are independent and W = N/k.
    """
    n0 = int(round(k * x_init))
    a = branching_scale * k
    u = -math.expm1(-mu / k)  # 1 - e^{-mu/k}
    f = 1.0 - u / (1.0 + a * t_end * u)
    return f**n0


@dataclass(frozen=True)
class FellerGapPoint:
    k: int
    n_reps: int
    laplace_mc: float
    se: float
    gap: float  # |MC - limit|
    exact_laplace: float
    exact_gap: float  # |exact finite-k value - limit|


def feller_limit_gaps(
    k_values,
    x_init: float,
    t_end: float,
    mu: float,
    n_reps: int,
    master_seed: int,
    branching_scale: float = 1.0,
    block: int = 4096,
    stream_offset: int = 0,
):
    """Gap between the rescaled-mass Laplace functional and its limit.

    Returns (points, limit_value): one FellerGapPoint per k, each run on
    its own stream, against e^{-x v_t(mu)} for the quadratic mechanism.
    """
    mech = BranchingMechanism(b=0.0, c=branching_scale)
    limit = laplace_functional(mech, x_init, mu, t_end)
    points = []
    for j, k in enumerate(k_values):
        stream = make_stream(master_seed, stream_offset + j)
        w = rescaled_mass_samples(
            int(k), x_init, t_end, stream, n_reps,
            branching_scale=branching_scale, block=block,
        )
        vals = np.exp(-mu * w)
        mc = float(vals.mean())
        se = float(vals.std(ddof=1) / math.sqrt(n_reps))
        exact = exact_rescaled_laplace(int(k), x_init, t_end, mu, branching_scale)
        points.append(
            FellerGapPoint(
                k=int(k), n_reps=n_reps, laplace_mc=mc, se=se,
                gap=abs(mc - limit), exact_laplace=exact,
                exact_gap=abs(exact - limit),
            )
        )
    return points, limit
