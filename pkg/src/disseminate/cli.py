"""Command-line harness: one experiment per invocation, reproducible outputs.

Subcommands map onto the simulation and analysis layers (gw, csbp, bbm,
sbm, metrics, pipeline). Every run resolves a config (TOML file plus flag
overrides, flags winning), fans replications out over worker processes,
and writes CSV/raster outputs plus a manifest. Replication i always uses
RNG stream i of the master seed, so outputs are byte-identical for a
given (seed, config) at any worker count.

Exit codes: 0 success, 2 config error, 3 runtime or numeric failure,
4 population overflow.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from functools import partial

import numpy as np

from . import __version__
from .branching_brownian import (
    CallbackObserver,
    constant_environment,
    environment_from_prefix,
    simulate_run,
)
from .config import ExperimentConfig, parse_config
from .csbp import (
    BranchingMechanism,
    expected_mass,
    laplace_exponent,
    laplace_functional,
    simulate_feller_path,
)
from .errors import ConfigError, NumericFailureError, PopulationOverflowError
from .galton_watson import OffspringLaw, simulate_counts
from .measure import DiscreteMeasure, density_grid
from .metrics import (
    coverage_fraction,
    coverage_raster,
    first_passage_times,
    front_speed_estimate,
    recoverage_summary,
    uncovered_zones,
)
from .raster import Window, write_ascii_grid
from .rng import make_stream
from .superprocess import RescalingSchedule, rescaled_run

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_OVERFLOW = 4


# ---------------------------------------------------------------------------
# output plumbing


def _fmt(v) -> str:
    """CSV cell formatting: shortest round-trip floats, plain ints."""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _ensure_parent(path: str):
    # fresh out-prefix directories are created on demand; a file squatting
    # on the directory name surfaces as FileExistsError (an OSError)
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)


class OutputSet:
    """Tracks files written by one run so a failure can remove them all."""

    def __init__(self, quiet: bool = False):
        self.paths: list[str] = []
        self.quiet = quiet

    def _finalize(self, tmp: str, path: str):
        os.replace(tmp, path)
        self.paths.append(path)
        if not self.quiet:
            print(f"wrote {path}")

    def write_csv(self, path: str, header, rows):
        _ensure_parent(path)
        tmp = f"{path}.tmp{os.getpid()}"
        try:
            with open(tmp, "w", encoding="utf-8", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(header)
                for row in rows:
                    w.writerow([_fmt(v) for v in row])
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        self._finalize(tmp, path)

    def write_grid(self, path: str, grid):
        _ensure_parent(path)
        tmp = f"{path}.tmp{os.getpid()}"
        try:
            write_ascii_grid(grid, tmp)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        self._finalize(tmp, path)

    def write_text(self, path: str, text: str):
        _ensure_parent(path)
        tmp = f"{path}.tmp{os.getpid()}"
        try:
            with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        self._finalize(tmp, path)

    def discard_all(self):
        for p in self.paths:
            try:
                os.unlink(p)
            except OSError:
                pass
        self.paths.clear()


def _manifest_config(cfg: ExperimentConfig) -> dict:
    """Config as recorded in the manifest.

    workers and quiet are execution knobs, not part of the experiment:
    leaving them out keeps manifests byte-identical across worker counts.
    """
    d = asdict(cfg)
    d.pop("workers", None)
    d.pop("quiet", None)
    return d


def _write_manifest(cfg: ExperimentConfig, out: OutputSet, results: dict, path: str):
    conf = _manifest_config(cfg)
    canonical = json.dumps(conf, sort_keys=True, separators=(",", ":"))
    manifest = {
        "artifact_version": __version__,
        "mode": cfg.mode,
        "seed": cfg.seed,
        "replications": cfg.replications,
        "config": conf,
        "config_sha256": hashlib.sha256(canonical.encode("utf-8")).hexdigest(),
        "outputs": sorted(os.path.basename(p) for p in out.paths),
        "results": results,
    }
    out.write_text(path, json.dumps(manifest, sort_keys=True, indent=2) + "\n")


def _rep_path(prefix: str, rep: int, n_reps: int, stem: str) -> str:
    """Per-replication file name; single-replication runs keep flat names."""
    if n_reps == 1:
        return f"{prefix}.{stem}"
    return f"{prefix}.rep{rep:04d}.{stem}"


def _map_replications(cfg: ExperimentConfig, fn) -> list:
    """fn(cfg, i) for i in range(replications), optionally in parallel.

    Results come back ordered by replication index either way, and each
    replication derives its randomness only from (seed, i), so the worker
    count cannot change any output byte.
    """
    reps = cfg.replications
    if cfg.workers <= 1 or reps <= 1:
        return [fn(cfg, i) for i in range(reps)]
    with ProcessPoolExecutor(max_workers=min(cfg.workers, reps)) as pool:
        return list(pool.map(partial(fn, cfg), range(reps)))


# ---------------------------------------------------------------------------
# per-replication workers (module level so they pickle)


def _rep_gw(cfg: ExperimentConfig, i: int):
    p = cfg.gw
    law = OffspringLaw.from_specs(p.offspring)
    stream = make_stream(cfg.seed, i)
    traj, _ = simulate_counts(law, p.n0, p.generations, stream)
    return list(traj.counts)


def _rep_csbp_path(cfg: ExperimentConfig, i: int):
    p = cfg.csbp
    stream = make_stream(cfg.seed, i)
    path = simulate_feller_path(p.c, p.b, p.x0, max(p.t_values), p.dt, stream)
    return path.times, path.values


def _rep_bbm(cfg: ExperimentConfig, i: int):
    p = cfg.bbm
    if p.env_prefix is not None:
        env = environment_from_prefix(p.env_prefix, p.birth_rate, p.death_rate, p.sigma)
    else:
        env = constant_environment(p.birth_rate, p.death_rate, p.sigma)
    stream = make_stream(cfg.seed, i)
    snaps = []

    def grab(state):
        n = state.n_alive
        snaps.append((
            state.time,
            state.ids[:n].copy(),
            state.parent_ids[:n].copy(),
            state.positions.copy(),
            state.alive_weights.copy(),
        ))

    obs = CallbackObserver(p.snapshots, grab)
    simulate_run(env, p.t_end, stream, n0=p.n0, observers=[obs], cap=p.cap)
    return snaps


def _rep_sbm(cfg: ExperimentConfig, i: int):
    p = cfg.sbm
    env = constant_environment(p.base_birth_rate, p.base_death_rate, p.sigma)
    schedule = RescalingSchedule(k=p.k, branching_scale=p.branching_scale)
    if p.init_atoms:
        x_init = DiscreteMeasure(
            positions=np.asarray([(x, y) for x, y, _ in p.init_atoms], dtype=np.float64),
            masses=np.asarray([m for _, _, m in p.init_atoms], dtype=np.float64),
        )
    else:
        x_init = p.x_init
    stream = make_stream(cfg.seed, i)
    records = rescaled_run(
        env, x_init, schedule, p.t_end, p.snapshots, stream,
        resample_target=p.resample_target, resample_every=p.resample_every,
        cap=p.cap,
    )
    return records


# ---------------------------------------------------------------------------
# mode runners


def run_gw(cfg: ExperimentConfig, out: OutputSet) -> dict:
    per_rep = _map_replications(cfg, _rep_gw)
    rows = []
    for i, counts in enumerate(per_rep):
        for m, n in enumerate(counts):
            rows.append((i, m, n))
    path = cfg.gw.out if cfg.gw.out is not None else f"{cfg.out_prefix}.csv"
    out.write_csv(path, ["replication", "generation", "count"], rows)
    n_extinct = sum(1 for counts in per_rep if counts[-1] == 0)
    return {"n_extinct_at_horizon": n_extinct}


def run_csbp(cfg: ExperimentConfig, out: OutputSet) -> dict:
    p = cfg.csbp
    mech = BranchingMechanism(b=p.b, c=p.c, atoms=p.atoms)
    path = f"{cfg.out_prefix}.csv"
    if p.submode == "path":
        per_rep = _map_replications(cfg, _rep_csbp_path)
        rows = []
        for i, (times, values) in enumerate(per_rep):
            for t, y in zip(times, values):
                rows.append((i, float(t), float(y)))
        out.write_csv(path, ["replication", "t", "Y"], rows)
        return {"n_paths": len(per_rep)}
    if p.submode == "v":
        rows = [(t, laplace_exponent(mech, p.laplace_mu, t)) for t in p.t_values]
    elif p.submode == "laplace":
        rows = [(t, laplace_functional(mech, p.x0, p.laplace_mu, t)) for t in p.t_values]
    else:  # mean
        rows = [(t, expected_mass(mech, p.x0, t)) for t in p.t_values]
    out.write_csv(path, ["t", "value"], rows)
    return {"n_rows": len(rows)}


def _bbm_snapshot_rows(per_rep) -> list:
    rows = []
    for i, snaps in enumerate(per_rep):
        for t, ids, parents, pos, w in snaps:
            for j in range(ids.shape[0]):
                rows.append((
                    i, t, int(ids[j]), int(parents[j]),
                    float(pos[j, 0]), float(pos[j, 1]), float(w[j]),
                ))
    return rows


def run_bbm(cfg: ExperimentConfig, out: OutputSet) -> dict:
    per_rep = _map_replications(cfg, _rep_bbm)
    rows = _bbm_snapshot_rows(per_rep)
    out.write_csv(
        f"{cfg.out_prefix}.snapshots.csv",
        ["replication", "time", "particle_id", "parent_id", "x", "y", "weight"],
        rows,
    )
    final_counts = [snaps[-1][1].shape[0] for snaps in per_rep]
    return {"mean_final_count": float(np.mean(final_counts))}


def run_sbm(cfg: ExperimentConfig, out: OutputSet) -> dict:
    p = cfg.sbm
    per_rep = _map_replications(cfg, _rep_sbm)
    reps = cfg.replications
    mass_rows = []
    for i, records in enumerate(per_rep):
        for t, _, w_total in records:
            mass_rows.append((i, t, w_total))
    out.write_csv(f"{cfg.out_prefix}.mass.csv", ["replication", "time", "W"], mass_rows)
    for i, records in enumerate(per_rep):
        dump_rows = []
        for t, measure, _ in records:
            for j in range(measure.n_atoms):
                dump_rows.append((
                    t, float(measure.positions[j, 0]),
                    float(measure.positions[j, 1]), float(measure.masses[j]),
                ))
        out.write_csv(
            _rep_path(cfg.out_prefix, i, reps, "measures.csv"),
            ["time", "x", "y", "mass"], dump_rows,
        )
    if p.window is not None:
        window = Window(*p.window)
        for i, records in enumerate(per_rep):
            for j, (t, measure, _) in enumerate(records):
                if measure.n_atoms == 0:
                    continue
                grid, _outside = density_grid(measure, window, p.cellsize)
                out.write_grid(_rep_path(cfg.out_prefix, i, reps, f"t{j}.density.asc"), grid)
    final_w = [records[-1][2] for records in per_rep]
    return {"mean_final_mass": float(np.mean(final_w))}


# -- metrics ----------------------------------------------------------------

SNAPSHOT_HEADER = ["replication", "time", "particle_id", "parent_id", "x", "y", "weight"]
MEASURE_HEADER = ["time", "x", "y", "mass"]


def _load_positions(path: str) -> dict:
    """Read a snapshot CSV or measure dump into {rep: [(t, positions)]}.

    Weights/masses are ignored: a covered cell is covered no matter how
    light the node covering it is.
    """
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as e:
        raise ConfigError(f"metrics.in: cannot open {path}: {e}")
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigError(f"metrics.in: {path} is empty")
        header = [h.strip() for h in header]
        buckets: dict = {}
        if header == SNAPSHOT_HEADER:
            for ln, row in enumerate(reader, start=2):
                if not row:
                    continue
                try:
                    rep, t = int(row[0]), float(row[1])
                    x, y = float(row[4]), float(row[5])
                except (ValueError, IndexError):
                    raise ConfigError(f"metrics.in: {path} line {ln}: bad row")
                buckets.setdefault(rep, {}).setdefault(t, []).append((x, y))
        elif header == MEASURE_HEADER:
            for ln, row in enumerate(reader, start=2):
                if not row:
                    continue
                try:
                    t = float(row[0])
                    x, y = float(row[1]), float(row[2])
                except (ValueError, IndexError):
                    raise ConfigError(f"metrics.in: {path} line {ln}: bad row")
                buckets.setdefault(0, {}).setdefault(t, []).append((x, y))
        else:
            raise ConfigError(
                f"metrics.in: {path}: unrecognized header {header!r} "
                f"(expected {SNAPSHOT_HEADER} or {MEASURE_HEADER})"
            )
    if not buckets:
        raise ConfigError(f"metrics.in: {path} holds no data rows")
    out = {}
    for rep, by_time in buckets.items():
        series = []
        for t in sorted(by_time):
            series.append((t, np.asarray(by_time[t], dtype=np.float64)))
        out[rep] = series
    return out


def _positions_from_bbm(per_rep) -> dict:
    out = {}
    for i, snaps in enumerate(per_rep):
        out[i] = [(t, pos.copy()) for t, _, _, pos, _ in snaps]
    return out


def _metrics_outputs(cfg: ExperimentConfig, out: OutputSet, positions: dict) -> dict:
    """Coverage, zones, recoverage and passage outputs for loaded positions.

    positions: {rep: [(time, (n, 2) array)]} with times sorted. Snapshot
    CSVs can skip times where a replication is extinct; such gaps censor
    that replication's later metrics rather than erroring out.
    """
    p = cfg.metrics
    window = Window(*p.window)
    reps = sorted(positions)
    n_reps = len(reps)
    results: dict = {}
    series_for_passage = []
    n_surviving = 0
    for rep in reps:
        series = positions[rep]
        times = [t for t, _ in series]
        rasters = [coverage_raster(pos, window, p.cellsize, p.radius) for _, pos in series]
        cov_rows = [(t, coverage_fraction(g)) for t, g in zip(times, rasters)]
        out.write_csv(
            _rep_path(cfg.out_prefix, rep, n_reps, "coverage.csv"),
            ["time", "covered_fraction"], cov_rows,
        )
        final = rasters[-1]
        out.write_grid(_rep_path(cfg.out_prefix, rep, n_reps, "coverage.asc"), final)
        zones = uncovered_zones(final)
        out.write_csv(
            _rep_path(cfg.out_prefix, rep, n_reps, "zones.csv"),
            ["zone_id", "area_cells", "min_x", "min_y", "max_x", "max_y"],
            [(z.zone_id, z.area_cells, z.min_x, z.min_y, z.max_x, z.max_y) for z in zones],
        )
        if p.deadline is not None and len(times) >= 2:
            summ = recoverage_summary(times, rasters, deadline=p.deadline)
            out.write_csv(
                _rep_path(cfg.out_prefix, rep, n_reps, "recoverage.csv"),
                ["n_open", "n_recovered", "n_censored", "mean_delay",
                 "median_delay", "deadline", "n_within_deadline",
                 "fraction_within_deadline"],
                [(summ.n_open, summ.n_recovered, summ.n_censored,
                  summ.mean_delay if summ.mean_delay is not None else float("nan"),
                  summ.median_delay if summ.median_delay is not None else float("nan"),
                  summ.deadline, summ.n_within_deadline,
                  summ.fraction_within_deadline)],
            )
        if series[-1][1].shape[0] > 0:
            n_surviving += 1
        if p.radii:
            inst = np.array(
                [float(np.max(np.hypot(pos[:, 0], pos[:, 1]))) if pos.shape[0] else -np.inf
                 for _, pos in series]
            )
            series_for_passage.append((np.asarray(times), np.maximum.accumulate(inst)))
    if p.radii:
        rows = first_passage_times(series_for_passage, p.radii)
        out.write_csv(
            f"{cfg.out_prefix}.passage.csv",
            ["radius", "n_uncensored", "n_censored", "mean", "median", "q90"],
            [(r.radius, r.n_uncensored, r.n_censored, r.mean, r.median, r.q90)
             for r in rows],
        )
        speed = front_speed_estimate(rows, survival_fraction=n_surviving / n_reps)
        results["front_speed"] = speed
        results["survival_fraction"] = n_surviving / n_reps
        if not cfg.quiet:
            print(f"front_speed={'none' if speed is None else repr(speed)}")
    return results


def run_metrics(cfg: ExperimentConfig, out: OutputSet) -> dict:
    positions = _load_positions(cfg.metrics.input_path)
    return _metrics_outputs(cfg, out, positions)


def run_pipeline(cfg: ExperimentConfig, out: OutputSet) -> dict:
    per_rep = _map_replications(cfg, _rep_bbm)
    out.write_csv(
        f"{cfg.out_prefix}.snapshots.csv",
        ["replication", "time", "particle_id", "parent_id", "x", "y", "weight"],
        _bbm_snapshot_rows(per_rep),
    )
    mass_rows = []
    for i, snaps in enumerate(per_rep):
        for t, _, _, _, w in snaps:
            mass_rows.append((i, t, math.fsum(w.tolist())))
    out.write_csv(f"{cfg.out_prefix}.mass.csv", ["replication", "time", "W"], mass_rows)
    return _metrics_outputs(cfg, out, _positions_from_bbm(per_rep))


RUNNERS = {
    "gw": run_gw,
    "csbp": run_csbp,
    "bbm": run_bbm,
    "sbm": run_sbm,
    "metrics": run_metrics,
    "pipeline": run_pipeline,
}


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML config file; flags override its values")
    common.add_argument("--seed", type=int, help="master seed (default 0)")
    common.add_argument("--replications", type=int, help="independent replications (default 1)")
    common.add_argument("--workers", type=int, help="worker processes (default 1)")
    common.add_argument("--out-prefix", dest="out_prefix", help="output path prefix")
    common.add_argument(
        "--quiet", dest="quiet", action="store_const", const=True, default=None,
        help="suppress informational output",
    )

    ap = argparse.ArgumentParser(
        prog="disseminate",
        description="Branching-particle dissemination simulator and analysis harness.",
    )
    sub = ap.add_subparsers(dest="mode", required=True)

    gw = sub.add_parser("gw", parents=[common], help="discrete-generation branching counts")
    gw.add_argument("--offspring", help="offspring law p0,p1,... ('1/3' fractions allowed)")
    gw.add_argument("--n0", type=int, help="initial individuals (default 1)")
    gw.add_argument("--generations", type=int, help="last generation to simulate")
    gw.add_argument("--out", help="output CSV path (default <prefix>.csv)")

    cs = sub.add_parser("csbp", parents=[common], help="continuous-state branching tools")
    cs.add_argument("--b", type=float, help="linear drift coefficient")
    cs.add_argument("--c", type=float, help="quadratic coefficient")
    cs.add_argument("--atoms", help="jump measure atoms w:y,w:y,...")
    cs.add_argument("--x0", type=float, help="initial mass")
    cs.add_argument("--mu", type=float, help="Laplace argument")
    cs.add_argument("--t", help="time or comma list of times")
    cs.add_argument("--dt", type=float, help="Euler step for path mode")
    cs.add_argument("--mode", dest="csbp_mode", choices=["v", "laplace", "mean", "path"],
                    help="what to compute")

    bb = sub.add_parser("bbm", parents=[common], help="branching Brownian particles")
    bb.add_argument("--lambda", dest="lam", type=float, help="birth rate")
    bb.add_argument("--mu", type=float, help="death rate")
    bb.add_argument("--sigma", type=float, help="diffusion coefficient")
    bb.add_argument("--n0", type=int, help="initial particles (default 1)")
    bb.add_argument("--t-end", dest="t_end", type=float, help="horizon")
    bb.add_argument("--snapshots", help="snapshot times t1,t2,...")
    bb.add_argument("--env", help="raster prefix: <env>.lambda.asc / .mu.asc / .sigma.asc")
    bb.add_argument("--cap", type=int, help="particle cap (default 1e7)")

    sb = sub.add_parser("sbm", parents=[common], help="rescaled measure-valued limit runs")
    sb.add_argument("--k", type=int, help="rescaling level")
    sb.add_argument("--c", type=float, help="branching scale")
    sb.add_argument("--x-init", dest="x_init", type=float, help="initial mass at the origin")
    sb.add_argument("--init-atoms", dest="init_atoms", help="initial atoms x:y:mass,...")
    sb.add_argument("--resample-target", dest="resample_target", type=int,
                    help="particle count to resample down to")
    sb.add_argument("--resample-every", dest="resample_every", type=float,
                    help="resampling period")
    sb.add_argument("--t-end", dest="t_end", type=float, help="horizon")
    sb.add_argument("--snapshots", help="snapshot times t1,t2,...")
    sb.add_argument("--window", help="density window x0:y0:x1:y1")
    sb.add_argument("--cellsize", type=float, help="density raster cell size")
    sb.add_argument("--cap", type=int, help="particle cap (default 1e7)")

    me = sub.add_parser("metrics", parents=[common], help="coverage and passage analysis")
    me.add_argument("--in", dest="in_path", help="snapshot CSV or measure dump to analyze")
    me.add_argument("--r", type=float, help="coverage radius")
    me.add_argument("--window", help="analysis window x0:y0:x1:y1")
    me.add_argument("--cellsize", type=float, help="coverage raster cell size")
    me.add_argument("--radii", help="first-passage radii r1,r2,...")
    me.add_argument("--deadline", type=float, help="re-coverage deadline")

    sub.add_parser("pipeline", parents=[common],
                   help="bbm simulation piped straight into metrics (config-driven)")
    return ap


def _overrides_from_args(args: argparse.Namespace) -> dict:
    ov: dict = {
        "mode": args.mode,
        "seed": args.seed,
        "replications": args.replications,
        "workers": args.workers,
        "out_prefix": args.out_prefix,
        "quiet": args.quiet,
    }
    if args.mode == "gw":
        ov["gw"] = {
            "offspring": args.offspring, "n0": args.n0,
            "generations": args.generations, "out": args.out,
        }
    elif args.mode == "csbp":
        ov["csbp"] = {
            "b": args.b, "c": args.c, "atoms": args.atoms, "x0": args.x0,
            "mu": args.mu, "t": args.t, "dt": args.dt, "mode": args.csbp_mode,
        }
    elif args.mode == "bbm":
        ov["bbm"] = {
            "lambda": args.lam, "mu": args.mu, "sigma": args.sigma,
            "n0": args.n0, "t_end": args.t_end, "snapshots": args.snapshots,
            "env": args.env, "cap": args.cap,
        }
    elif args.mode == "sbm":
        ov["sbm"] = {
            "k": args.k, "c": args.c, "x_init": args.x_init,
            "init_atoms": args.init_atoms, "resample_target": args.resample_target,
            "resample_every": args.resample_every, "t_end": args.t_end,
            "snapshots": args.snapshots, "window": args.window,
            "cellsize": args.cellsize, "cap": args.cap,
        }
    elif args.mode == "metrics":
        ov["metrics"] = {
            "in": args.in_path, "r": args.r, "window": args.window,
            "cellsize": args.cellsize, "radii": args.radii,
            "deadline": args.deadline,
        }
    return ov


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Execute a resolved config; returns the manifest results block.

    Writes all outputs atomically and removes everything written so far
    if any stage fails, so a failed run leaves no partial output set.
    """
    out = OutputSet(quiet=cfg.quiet)
    try:
        results = RUNNERS[cfg.mode](cfg, out)
        if cfg.mode == "gw" and cfg.gw.out is not None:
            manifest_path = os.path.splitext(cfg.gw.out)[0] + ".manifest.json"
        else:
            manifest_path = f"{cfg.out_prefix}.manifest.json"
        _write_manifest(cfg, out, results, manifest_path)
    except BaseException:
        out.discard_all()
        raise
    return results


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config, _overrides_from_args(args))
        run_experiment(cfg)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except PopulationOverflowError as e:
        print(f"overflow: {e}", file=sys.stderr)
        return EXIT_OVERFLOW
    except NumericFailureError as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ValueError, RuntimeError, OSError, ArithmeticError) as e:
        print(f"runtime error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
