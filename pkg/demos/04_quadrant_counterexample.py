#!/usr/bin/env python3
"""
Steiner trees and a (corr-ab) violation for the q=4 quadrant condition

The four sides of a square box carry colours 1..4.  At low temperature the
interfaces follow one of two Steiner trees, and conditioning on a site in
the region that only one tree colours 3 favours that tree.  A site in the
matching colour-1 region then becomes more likely to be 1, which breaks
P(A = i | B = j) <= P(A = i).

Pass --mc to also run the pinned 24x24 Monte Carlo instance (about 30 s).
"""

import sys

from gibbslab.experiments import PINNED_QUADRANT, quadrant_instances, quadrant_search
from gibbslab.inequalities import search_violation
from gibbslab.lattice import make_box
from gibbslab.steiner import counterexample_sites, steiner_tree_square, symmetric_difference_regions
from gibbslab.svg import steiner_svg, write_svg

trees = steiner_tree_square()
print(f"Euclidean Steiner length {trees.vertical.length:.9f} (1 + sqrt 3), three sides {trees.three_sides}")
regions = symmetric_difference_regions(trees.vertical, trees.horizontal)
for color, (a_only, b_only) in regions.items():
    print(f"  colour {color}: vertical-only area {a_only.area:.4f}, horizontal-only area {b_only.area:.4f}")
write_svg(steiner_svg(trees, {c: [r[0]] for c, r in regions.items()}), "steiner.svg")
print("wrote steiner.svg")

for L in (4, 6, 24):
    x, y = counterexample_sites(make_box(2, [(0, L - 1), (0, L - 1)]))
    print(f"L={L}: A site {x}, B site {y}")

print("\nexact search (transfer matrix):")
for rep in search_violation("corr-ab", quadrant_instances(4, (4, 6)), bisect_steps=10):
    print(f"  {rep.extra['label']}: beta={rep.extra['grid_beta']}  P(A|B)={rep.lhs:.4f} > P(A)={rep.rhs:.4f}  "
          f"threshold ~ {rep.extra['threshold_beta']:.3f}")

if "--mc" in sys.argv:
    P = PINNED_QUADRANT
    for rep in quadrant_search(P["q"], (P["size"],), betas=(P["beta"],), n_sweeps=P["n_sweeps"],
                               n_chains=P["n_chains"], seed=P["seed"]):
        print(f"\nMC L={P['size']} beta={P['beta']}: slack {rep.slack:.3f} +- {rep.stderr:.3f} -> {rep.verdict}")
