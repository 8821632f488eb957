"""A walk through the functional-inequality checkers.

Each checker returns a ratio measured/allowed; the suite asserts the
ratio stays at or below a declared bound on randomized inputs. Two
closed-form reference points anchor the scale: the product-cosine
bilinear estimate ratio 1/(8 pi), and interpolation saturating on a
single mode.

Run: python3 demos/inequality_tour.py
"""

import numpy as np

from sglab.inequalities import (
    check_det_lipschitz,
    check_h1_interp,
    check_sobolev_interp,
    check_wente,
    random_field,
    run_suite,
)
from sglab.spectral import ScalarField, TorusGrid

grid = TorusGrid(64)
x, y = grid.points()

# the product cosine turns the H^-1 bilinear estimate into an identity
psi = ScalarField(grid, np.cos(2 * np.pi * x) * np.cos(2 * np.pi * y))
res = check_wente(psi, seed=0)
print("bilinear det estimate on cos(2pi x)cos(2pi y):")
print(f"  ratio {res.ratio:.12f}   closed form 1/(8 pi) = {1 / (8 * np.pi):.12f}")

mode = ScalarField(grid, np.cos(2 * np.pi * (2 * x + y)))
print(f"\nH1 interpolation on a single mode saturates: "
      f"ratio = {check_h1_interp(mode, seed=0).ratio:.12f}")

rng = np.random.default_rng(42)
f = random_field(grid, rng, gamma=3.0)
g = random_field(grid, rng, gamma=3.0)
print(f"\nrandom smooth fields (spectral decay |k|^-3):")
print(f"  sobolev interpolation  ratio {check_sobolev_interp(f, seed=0).ratio:.4f} (bound 1)")
print(f"  det Lipschitz in H^-1  ratio {check_det_lipschitz(f, g, seed=0).ratio:.4f} (bound 1)")

print("\nfull suite, one seed, 20 samples per checker:")
rep = run_suite(7, count=20)
worst = sorted(rep.max_ratios().items(), key=lambda kv: -kv[1])[:6]
for name, ratio in worst:
    print(f"  {name:>22}: max ratio {ratio:.4f}")
n_pass = sum(r.passed for r in rep.results)
print(f"  {n_pass}/{len(rep.results)} checks passed, {len(rep.errors)} errors")
