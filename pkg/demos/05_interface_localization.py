#!/usr/bin/env python3
"""
Interface fluctuations under the Dobrushin condition

In d=2 the interface is rough and its central height variance grows with
the box.  In d=3 at low temperature it stays pinned near the plane z = -1/2.
Short runs here; the acceptance suite uses 40000 sweeps.
"""

from gibbslab.experiments import interface_profile, localization_scan
from gibbslab.lattice import ModelParams, centered_box, dobrushin_bc
from gibbslab.svg import lattice_svg, write_svg
from gibbslab.samplers import new_chain, swendsen_wang_sweep

for d, beta, sizes in ((2, 1.2, (16, 32, 64)), (3, 1.5, (8, 12))):
    for row in localization_scan(d, beta, sizes, seed=0, n_sweeps=4000):
        print(f"d={d} n={row['n']:3d}  Var h = {row['variance']:.4f} +- {row['stderr']:.4f}")

box = centered_box(4, 4, 8)
prof, _ = interface_profile(box, dobrushin_bc(box), ModelParams(2, 1.5), seed=1, n_sweeps=3000, init="ground")
print("\nlayer magnetization, 4x4x8 at Potts beta 1.5:")
for z, m, s in zip(prof.heights, prof.mean, prof.stderr):
    print(f"  z={z:3d}  {m:+.4f} +- {s:.4f}")

box = centered_box(48, 48)
bc = dobrushin_bc(box)
state = new_chain(box, 2, seed=2)
swendsen_wang_sweep(state, box, bc, ModelParams(2, 1.2), 500)
write_svg(lattice_svg(box, state.spins, bc, cell=6), "interface_2d.svg")
print("\nwrote interface_2d.svg")
