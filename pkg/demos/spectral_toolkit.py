"""Tour of the spectral layer: exact derivatives, Poisson inverses,
and the homogeneous Sobolev norm family on the unit torus.

Run: python3 demos/spectral_toolkit.py
"""

import numpy as np

from sglab.spectral import (
    NormKind,
    ScalarField,
    TorusGrid,
    derivative,
    inv_laplacian,
    norm,
)

grid = TorusGrid(128)
x, y = grid.points()

# a single Fourier mode: everything about it is known in closed form
f = ScalarField(grid, np.cos(2 * np.pi * (3 * x + 5 * y)))
k2 = 4 * np.pi ** 2 * (3 ** 2 + 5 ** 2)

fx = derivative(f, (1, 0))
print("d/dx of cos(2pi(3x+5y)): max error",
      np.max(np.abs(fx.values + 6 * np.pi * np.sin(2 * np.pi * (3 * x + 5 * y)))))

sol = inv_laplacian(f)
print("Poisson solve: max error vs -f/|k|^2",
      np.max(np.abs(sol.values + f.values / k2)))

print("\nnorm family on the same mode (all reduce to powers of |k|):")
for kind, label in [
    (NormKind.L2, "L2"),
    (NormKind.Hs(1.0), "H1"),
    (NormKind.Hs(2.0), "H2"),
    (NormKind.Hminus1, "H^-1"),
    (NormKind.GradLinf, "grad Linf"),
]:
    print(f"  {label:>9}: {norm(f, kind):.6f}")
print(f"  predicted H1 = |k|*L2 = {np.sqrt(k2) * norm(f, NormKind.L2):.6f}")

# interpolation: the H1 norm of a single mode saturates the
# log-convexity bound between L2 ~ H0 and H2
l2, h1, h2 = (norm(f, NormKind.Hs(s)) for s in (0.0, 1.0, 2.0))
print("\nH1 vs sqrt(L2*H2) (equal on one mode):", h1, np.sqrt(l2 * h2))
