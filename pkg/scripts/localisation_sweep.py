"""Localisation hit rate over a set of scatterer positions, with estimated and
known source amplitudes and a few preconditioner settings.

    python scripts/localisation_sweep.py --powers 0.5 1.0 --lambdas 1e-9 1e-3
"""

import argparse

import numpy as np

from gaininit import AcquisitionGeometry, PipelineConfig, Scatterer, VelocityModel
from gaininit.pipeline import directions_from_observed
from gaininit.synthetics import synth_born_observed

C = 3500.0
POSITIONS = [(x, z) for x in (900.0, 2100.0, 3100.0) for z in (500.0, 1100.0, 1700.0, 2500.0)]


def hits(cfg, grid, geo, cell):
    obs = synth_born_observed(geo, C, [Scatterer.at_cell(grid, *cell, 100.0)], 2.5, cfg.transform_spec(), grid)
    _, dirs, _ = directions_from_observed(obs, geo, cfg, grid)
    good = 0
    for d in dirs.values():
        p = np.unravel_index(np.argmax(np.abs(d.direction)), d.direction.shape)
        good += max(abs(p[0] - cell[0]), abs(p[1] - cell[1])) <= 1 and d.direction[cell] > 0
    return good, len(dirs)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--powers", type=float, nargs="+", default=[0.5, 1.0], help="Hessian exponents")
    ap.add_argument("--lambdas", type=float, nargs="+", default=[1e-9])
    ap.add_argument("--guard", type=float, default=0.3)
    args = ap.parse_args()

    grid = VelocityModel.constant(20, 15, 200.0, 200.0, C)
    geo = AcquisitionGeometry.fixed_spread(np.linspace(100.0, 3900.0, 8), np.linspace(0.0, 4000.0, 32))
    for source in (None, 2.5):
        for p in args.powers:
            for lam in args.lambdas:
                cfg = PipelineConfig(damping_constants=(2.0, 7.0, 12.0), hessian_power=p, lambda_rel=lam,
                                     crossing_guard=args.guard, source_amplitude=source)
                good = total = 0
                for x, z in POSITIONS:
                    g, t = hits(cfg, grid, geo, grid.cell_of(x, z))
                    good, total = good + g, total + t
                label = "known" if source else "estimated"
                print(f"source {label:>9}  p={p:g}  lambda={lam:g}  {good}/{total}")


if __name__ == "__main__":
    main()
