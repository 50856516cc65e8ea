"""Continuous-state branching process numerics.

A mechanism here is the function

    phi(z) = b*z + c*z^2 + sum_i w_i * (exp(-z*y_i) - 1 + z*y_i)

with a finite atomic jump part. The Laplace exponent v_t(mu) solves
dv/dt = -phi(v) with v_0 = mu, and the process started from mass x has
E[exp(-mu * Y_t)] = exp(-x * v_t(mu)) and E[Y_t] = x * exp(-b*t).

The purely quadratic mechanism phi(z) = c*z^2 is the Feller branching
diffusion: critical, mean-preserving, with the closed form
v_t(mu) = mu / (1 + c*t*mu). Criticality labels follow the direction of the
mean mass: growing mean (b < 0) is supercritical, decaying mean (b > 0)
subcritical, constant mean critical.

Path simulation covers the diffusive case only; jump mechanisms are
exercised through v_t. The Euler scheme uses full truncation (clamp under
the square root, absorbing zero), the standard positivity-preserving
treatment for square-root diffusions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import NumericFailureError
from .rng import RngStream, normals


@dataclass(frozen=True)
class BranchingMechanism:
    """Coefficients (b, c) and finite atomic jump measure [(weight, jump size), ...]."""

    b: float = 0.0
    c: float = 0.0
    atoms: tuple = ()

    def __post_init__(self):
        if self.c < 0:
            raise ValueError(f"quadratic coefficient c must be >= 0, got {self.c}")
        for w, y in self.atoms:
            if not w > 0:
                raise ValueError(f"atom weight must be positive, got {w}")
            if not y > 0:
                raise ValueError(f"atom jump size must be positive, got {y}")
        object.__setattr__(self, "atoms", tuple((float(w), float(y)) for w, y in self.atoms))

    @property
    def purely_quadratic(self) -> bool:
        return self.b == 0.0 and not self.atoms and self.c > 0


def mechanism_value(mech: BranchingMechanism, z) -> float:
    """Evaluate phi(z); z must be nonnegative.

    The atom terms use expm1 so that exp(-z*y) - 1 + z*y keeps full relative
    accuracy for small z*y.
    """
    z = np.asarray(z, dtype=np.float64)
    if np.any(z < 0):
        raise ValueError("phi is only defined for z >= 0")
    out = mech.b * z + mech.c * z * z
    for w, y in mech.atoms:
        out = out + w * (np.expm1(-z * y) + z * y)
    return float(out) if out.ndim == 0 else out


def classify_mechanism(mech: BranchingMechanism) -> str:
    """Criticality by the direction of the mean E[Y_t] = x*exp(-b*t)."""
    if mech.b > 0:
        return "subcritical"
    if mech.b < 0:
        return "supercritical"
    return "critical"


def laplace_exponent(
    mech: BranchingMechanism,
    mu: float,
    t: float,
    tol: float = 1e-10,
    method: str = "auto",
) -> float:
    """v_t(mu): solve dv/dt = -phi(v), v_0 = mu, clamped to >= 0.

    method="auto" uses the closed form mu/(1+c*t*mu) for purely quadratic
    mechanisms and adaptive integration otherwise; "ode" forces the
    integrator (the two must agree within tol, which the test suite checks);
    "closed" demands the quadratic closed form.
    """
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if method not in ("auto", "ode", "closed"):
        raise ValueError(f"unknown method {method!r}")
    if t == 0:
        return float(mu)
    if method == "closed" or (method == "auto" and mech.purely_quadratic):
        if not mech.purely_quadratic:
            raise ValueError("closed form requires a purely quadratic mechanism")
        return float(mu / (1.0 + mech.c * t * mu))

    def rhs(_t, v):
        return [-mechanism_value(mech, max(v[0], 0.0))]

    sol = solve_ivp(
        rhs,
        (0.0, float(t)),
        [float(mu)],
        method="DOP853",
        rtol=max(tol * 1e-3, 1e-13),
        atol=max(tol * 1e-3, 1e-14),
    )
    if not sol.success:
        raise NumericFailureError(
            f"Laplace-exponent integration failed: {sol.message}",
            t=float(sol.t[-1]),
            value=float(sol.y[0, -1]),
        )
    return max(float(sol.y[0, -1]), 0.0)


def laplace_functional(
    mech: BranchingMechanism, x: float, mu: float, t: float, tol: float = 1e-10
) -> float:
    """E[exp(-mu*Y_t)] for initial mass x: exp(-x * v_t(mu))."""
    if x < 0:
        raise ValueError(f"initial mass x must be nonnegative, got {x}")
    if x == 0:
        return 1.0
    return float(np.exp(-x * laplace_exponent(mech, mu, t, tol)))


def expected_mass(mech: BranchingMechanism, x: float, t: float) -> float:
    """E[Y_t] = x * exp(-b*t)."""
    if x < 0:
        raise ValueError(f"initial mass x must be nonnegative, got {x}")
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    return float(x * np.exp(-mech.b * t))


@dataclass(frozen=True)
class FellerPath:
    """One simulated mass path; zero is absorbing."""

    times: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.float64)
        v = np.asarray(self.values, dtype=np.float64)
        if t.shape != v.shape:
            raise ValueError("times and values must have equal length")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        if np.any(v < 0):
            raise ValueError("mass values must be nonnegative")
        dead = v == 0.0
        if np.any(dead) and np.any(v[np.argmax(dead):] > 0):
            raise ValueError("path leaves the absorbing state 0")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @property
    def terminal(self) -> float:
        return float(self.values[-1])


def _step_grid(t_end: float, dt: float) -> np.ndarray:
    n_full = int(np.floor(t_end / dt + 1e-9))
    times = np.arange(n_full + 1, dtype=np.float64) * dt
    if times[-1] < t_end - 1e-9 * dt:
        times = np.append(times, t_end)
    else:
        times[-1] = t_end
    return times

def simulate_feller_path(
    c: float, b: float, x0: float, t_end: float, dt: float, stream: RngStream
) -> FellerPath:
    """Full-truncation Euler path of the Feller diffusion.

    Y_{k+1} = max(0, Y_k - b*Y_k*dt + sqrt(2*c*max(0,Y_k)*dt) * G_k),
    evaluated on the grid k*dt (last step truncated to land on t_end).
    """
    if not c > 0:
        raise ValueError(f"c must be positive, got {c}")
    if x0 < 0:
        raise ValueError(f"x0 must be nonnegative, got {x0}")
    if not 0 < dt <= t_end:
        raise ValueError(f"need 0 < dt <= t_end, got dt={dt}, t_end={t_end}")
    times = _step_grid(t_end, dt)
    steps = np.diff(times)
    noise = normals(stream, len(steps))
    values = np.empty(len(times))
    values[0] = x0
    y = float(x0)
    for k, (h, g) in enumerate(zip(steps, noise)):
        y = max(0.0, y - b * y * h + np.sqrt(2.0 * c * max(y, 0.0) * h) * g)
        values[k + 1] = y
    return FellerPath(times=times, values=values)


def feller_terminal_values(
    c: float,
    b: float,
    x0: float,
    t_end: float,
    dt: float,
    n_paths: int,
    stream: RngStream,
    snapshot_times=None,
) -> dict:
    """Euler-path values at snapshot times for an ensemble of paths.

    Same scheme as simulate_feller_path, advanced for all paths in lockstep;
    returns {snapshot time: array of n_paths values}. Snapshot times are
    matched to the step grid within half a step.
    """
    if not c > 0:
        raise ValueError(f"c must be positive, got {c}")
    if x0 < 0:
        raise ValueError(f"x0 must be nonnegative, got {x0}")
    if not 0 < dt <= t_end:
        raise ValueError(f"need 0 < dt <= t_end, got dt={dt}, t_end={t_end}")
    times = _step_grid(t_end, dt)
    if snapshot_times is None:
        snapshot_times = [t_end]
    snap_idx = {}
    for s in snapshot_times:
        i = int(np.argmin(np.abs(times - s)))
        if abs(times[i] - s) > 0.5 * dt + 1e-12:
            raise ValueError(f"snapshot time {s} not on the step grid")
        snap_idx[i] = float(s)

    y = np.full(n_paths, float(x0))
    out = {}
    if 0 in snap_idx:
        out[snap_idx[0]] = y.copy()
    for k in range(1, len(times)):
        h = times[k] - times[k - 1]
        g = normals(stream, n_paths)
        y = np.maximum(0.0, y - b * y * h + np.sqrt(2.0 * c * np.maximum(y, 0.0) * h) * g)
        if k in snap_idx:
            out[snap_idx[k]] = y.copy()
    return out
