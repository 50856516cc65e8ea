"""Coverage demo: run a small branching-Brownian spread, rasterize the
communication footprint, and report uncovered zones over time.

Usage: python3 scripts/coverage_demo.py [t_end] [seed]
Writes coverage_demo.asc (final coverage raster) next to the cwd.
"""

import sys

from disseminate.branching_brownian import (
    MeasureRecorder,
    constant_environment,
    simulate_run,
)
from disseminate.metrics import coverage_fraction, coverage_raster, uncovered_zones
from disseminate.raster import Window, write_ascii_grid
from disseminate.rng import make_stream


def main():
    t_end = float(sys.argv[1]) if len(sys.argv) > 1 else 3.0
    seed = int(sys.argv[2]) if len(sys.argv) > 2 else 1
    env = constant_environment(1.2, 0.4, 1.0)
    times = [t_end * (j + 1) / 6 for j in range(6)]
    rec = MeasureRecorder(times)
    state = simulate_run(env, t_end, make_stream(seed, 0), n0=5, observers=[rec])
    window = Window(-12.0, -12.0, 12.0, 12.0)
    print(f"final population: {state.n_alive} nodes")
    print(f"{'time':>6} {'nodes':>6} {'covered':>8} {'zones':>6} {'largest':>8}")
    final = None
    for t, measure, _ in rec.records:
        if measure.n_atoms == 0:
            print(f"{t:6.2f} {0:6d} {'-':>8} {'-':>6} {'-':>8}")
            continue
        cov = coverage_raster(measure.positions, window, 0.25, 1.5)
        zones = uncovered_zones(cov)
        largest = zones[0].area_cells if zones else 0
        print(f"{t:6.2f} {measure.n_atoms:6d} {coverage_fraction(cov):8.4f} "
              f"{len(zones):6d} {largest:8d}")
        final = cov
    if final is not None:
        write_ascii_grid(final, "coverage_demo.asc")
        print("wrote coverage_demo.asc")


if __name__ == "__main__":
    main()
