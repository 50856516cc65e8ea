"""Discrete-generation branching processes with finite-support offspring laws.

The population recursion is N_{m+1} = sum_{j=1}^{N_m} Z_j with Z iid from the
offspring law. Means multiply: E N_m = n0 * zeta^m where zeta = E Z. The
module simulates count trajectories (optionally with the genealogy tree),
computes the mean law, classifies criticality, and finds the extinction
probability as the smallest fixed point of the generating function
g(s) = sum_k p_k s^k.

Offspring laws are restricted to finite support so that zeta and g are exact;
probabilities supplied as rationals keep zeta in exact arithmetic, which makes
the trichotomy at zeta = 1 predictable instead of a floating-point accident.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import PopulationOverflowError
from .rng import RngStream, uniforms

# Beyond this many individuals a brute-force generation is meaningless to
# simulate (and does not fit an int64); callers are pointed at the
# mass-rescaled superprocess approximation instead.
COUNT_CAP = 2**63 - 1

_CRITICAL_TOL = 1e-12


def _is_exact(values) -> bool:
    return all(isinstance(v, (Fraction, int)) for v in values)


@dataclass(frozen=True)
class OffspringLaw:
    """Finite-support offspring distribution: probabilities[k] = P(Z = k)."""

    probabilities: tuple

    def __post_init__(self):
        p = self.probabilities
        if len(p) == 0:
            raise ValueError("offspring law needs at least one probability")
        if any(float(x) < 0 for x in p):
            raise ValueError("offspring probabilities must be nonnegative")
        total = sum(Fraction(x) if isinstance(x, (Fraction, int)) else float(x) for x in p)
        if abs(float(total) - 1.0) > 1e-12:
            raise ValueError(f"offspring probabilities must sum to 1, got {float(total)}")
        object.__setattr__(self, "probabilities", tuple(p))

    @classmethod
    def from_specs(cls, specs) -> "OffspringLaw":
        """Build from a sequence of floats, ints, Fractions, or strings like '1/3'.

        String and integer entries are kept as exact rationals, so a law such
        as ('1/3', 0, '2/3') gets an exact mean.
        """
        parsed = []
        for s in specs:
            if isinstance(s, str):
                parsed.append(Fraction(s))
            elif isinstance(s, (Fraction, int)):
                parsed.append(Fraction(s))
            else:
                parsed.append(float(s))
        return cls(tuple(parsed))

    @property
    def zeta(self):
        """Mean offspring count; a Fraction when every probability is rational."""
        p = self.probabilities
        if _is_exact(p):
            return sum(Fraction(k) * Fraction(pk) for k, pk in enumerate(p))
        return float(sum(k * float(pk) for k, pk in enumerate(p)))

    @property
    def max_offspring(self) -> int:
        return len(self.probabilities) - 1

    def pvals(self) -> np.ndarray:
        """Float probability vector normalized for samplers."""
        v = np.asarray([float(x) for x in self.probabilities], dtype=np.float64)
        return v / v.sum()

    def generating_function(self, s: float) -> float:
        """g(s) = sum_k p_k s^k, evaluated by Horner."""
        acc = 0.0
        for pk in reversed(self.probabilities):
            acc = acc * s + float(pk)
        return acc


@dataclass(frozen=True)
class GwTrajectory:
    """Population counts N_0..N_M; zero is absorbing by construction."""

    counts: tuple

    def __post_init__(self):
        c = self.counts
        if any(n < 0 for n in c):
            raise ValueError("population counts must be nonnegative")
        hit_zero = False
        for n in c:
            if hit_zero and n != 0:
                raise ValueError("trajectory leaves the absorbing state 0")
            hit_zero = hit_zero or n == 0

    @property
    def extinct(self) -> bool:
        return self.counts[-1] == 0


@dataclass(frozen=True)
class TreeNode:
    id: int
    parent_id: Optional[int]
    generation: int
    offspring_count: int


@dataclass(frozen=True)
class GenealogyTree:
    """Explicit genealogy: one node per individual; offspring_count 0 marks a leaf."""

    nodes: tuple

    def generation_sizes(self) -> dict:
        sizes: dict = {}
        for node in self.nodes:
            sizes[node.generation] = sizes.get(node.generation, 0) + 1
        return sizes


def _sample_offspring(stream: RngStream, cumulative: np.ndarray, n: int) -> np.ndarray:
    """n iid offspring counts by inverse CDF on the cumulative probabilities."""
    u = uniforms(stream, n)
    return np.searchsorted(cumulative, u, side="right")


def simulate_counts(
    law: OffspringLaw,
    n0: int,
    m_max: int,
    stream: RngStream,
    record_tree: bool = False,
):
    """Simulate N_0..N_{m_max} starting from n0 individuals.

    Without the tree, each generation is sampled as one multinomial over
    offspring counts, which is exact and fast for large populations. With
    record_tree=True every individual is drawn separately so the genealogy
    (ids, parents, offspring counts) is materialized.

    Raises PopulationOverflowError when a generation would exceed 2^63 - 1
    individuals; at that size only the superprocess rescaling is viable.
    """
    if n0 < 1:
        raise ValueError(f"n0 must be >= 1, got {n0}")
    if m_max < 0:
        raise ValueError(f"m_max must be >= 0, got {m_max}")

    pvals = law.pvals()
    ks = range(len(pvals))
    counts = [int(n0)]
    nodes = []
    if record_tree:
        cumulative = np.cumsum(pvals)
        next_id = n0
        current_ids = list(range(n0))
        current_parents = [None] * n0

    n = int(n0)
    for m in range(m_max):
        if n == 0:
            counts.extend([0] * (m_max - m))
            break
        if n > COUNT_CAP:
            raise PopulationOverflowError(
                f"generation {m} holds {n} individuals (> 2^63 - 1); "
                "per-individual simulation is infeasible at this scale - "
                "use the superprocess module (mass-rescaled approximation)"
            )
        if record_tree:
            z = _sample_offspring(stream, cumulative, n)
            for ident, parent, zj in zip(current_ids, current_parents, z):
                nodes.append(TreeNode(ident, parent, m, int(zj)))
            child_ids = []
            child_parents = []
            for ident, zj in zip(current_ids, z):
                for _ in range(int(zj)):
                    child_ids.append(next_id)
                    child_parents.append(ident)
                    next_id += 1
            current_ids = child_ids
            current_parents = child_parents
            n_next = len(child_ids)
        else:
            draws = stream.generator.multinomial(n, pvals)
            stream.counter += len(pvals)
            n_next = int(sum(int(k) * int(c) for k, c in zip(ks, draws)))
        counts.append(n_next)
        n = n_next
    if record_tree and n > 0 and len(counts) == m_max + 1:
        # individuals of the final generation are recorded as leaves with
        # unknown offspring: the horizon truncates them at offspring 0
        for ident, parent in zip(current_ids, current_parents):
            nodes.append(TreeNode(ident, parent, m_max, 0))

    trajectory = GwTrajectory(tuple(counts))
    tree = GenealogyTree(tuple(nodes)) if record_tree else None
    return trajectory, tree


def simulate_counts_ensemble(
    law: OffspringLaw, n0: int, m_max: int, n_reps: int, stream: RngStream
) -> np.ndarray:
    """Counts for n_reps independent trajectories, shape (n_reps, m_max+1).

    Every replication advances one generation per vectorized multinomial
    call; equal in law to n_reps separate simulate_counts runs.
    """
    if n0 < 1:
        raise ValueError(f"n0 must be >= 1, got {n0}")
    pvals = law.pvals()
    ks = np.arange(len(pvals), dtype=np.int64)
    out = np.zeros((n_reps, m_max + 1), dtype=np.int64)
    out[:, 0] = n0
    current = out[:, 0].copy()
    for m in range(m_max):
        if int(current.max(initial=0)) > 2**62:
            raise PopulationOverflowError(
                f"generation {m} exceeds the ensemble count cap; "
                "use the superprocess module for populations of this size"
            )
        draws = stream.generator.multinomial(current, pvals)
        stream.counter += n_reps * len(pvals)
        current = draws @ ks
        out[:, m + 1] = current
    return out


def mean_population(law: OffspringLaw, m: int) -> float:
    """Expected generation-m size per initial individual: zeta^m."""
    if m < 0:
        raise ValueError(f"m must be >= 0, got {m}")
    z = law.zeta
    if isinstance(z, Fraction):
        return float(z**m)
    return float(z) ** m


def classify_criticality(zeta) -> str:
    """Trichotomy by the mean offspring count.

    Exact comparison for rational zeta; floats count as critical within
    1e-12 of 1 (the boundary is discontinuous, so equality must be
    deliberate, not a rounding accident).
    """
    if float(zeta) < 0:
        raise ValueError(f"zeta must be >= 0, got {zeta}")
    if isinstance(zeta, (Fraction, int)):
        if zeta == 1:
            return "critical"
        return "subcritical" if zeta < 1 else "supercritical"
    z = float(zeta)
    if abs(z - 1.0) < _CRITICAL_TOL:
        return "critical"
    return "subcritical" if z < 1.0 else "supercritical"


def extinction_probability(law: OffspringLaw, tol: float) -> float:
    """Smallest fixed point of g on [0, 1].

    Monotone iteration s <- g(s) from s = 0 converges upward to the smallest
    fixed point; stops when successive iterates differ by less than tol.
    Subcritical and critical laws short-circuit to exactly 1.
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if classify_criticality(law.zeta) in ("subcritical", "critical"):
        return 1.0
    s = 0.0
    while True:
        s_next = law.generating_function(s)
        if abs(s_next - s) < tol:
            return s_next
        s = s_next


def extinction_frequency(
    law: OffspringLaw,
    horizon: int,
    n_reps: int,
    stream: RngStream,
    escape_threshold: Optional[int] = None,
) -> float:
    """Fraction of replications whose count hits 0 by the horizon generation.

    With escape_threshold set, a trajectory reaching that many individuals is
    scored as surviving without simulating the remaining generations. The
    chance of misclassifying is at most q**threshold (q < 1 the extinction
    probability of a supercritical law), which for thresholds in the hundreds
    is far below anything a frequency over n_reps could resolve; it also keeps
    supercritical populations away from the int64 count cap.
    """
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    if n_reps < 1:
        raise ValueError("n_reps must be >= 1")
    if escape_threshold is not None and escape_threshold < 1:
        raise ValueError("escape_threshold must be >= 1")
    pvals = law.pvals()
    n_extinct = 0
    for _ in range(n_reps):
        n = 1
        for _ in range(horizon):
            if escape_threshold is not None and n >= escape_threshold:
                break
            if n > COUNT_CAP // max(1, law.max_offspring):
                raise PopulationOverflowError(
                    "generation too large to simulate exactly; set an"
                    " escape_threshold or use the rescaled superprocess"
                )
            draws = stream.generator.multinomial(n, pvals)
            stream.counter += pvals.shape[0]
            n = int(sum(int(k) * int(c) for k, c in enumerate(draws) if c))
            if n == 0:
                n_extinct += 1
                break
    return n_extinct / n_reps
