"""Sparse-grid building blocks: knots, multi-index sets, combination technique.

Walks through the low-level pieces on a smooth two-parameter test peak:
one-dimensional point families, a total-degree multi-index set, the
combination coefficients, and the accuracy of the assembled surrogate.

Run:  python3 demos/01_sparse_grid_basics.py
"""

import numpy as np

from misckit import (
    GridKit,
    build_surrogate,
    collocation_requests,
    combination_coeffs,
    knots_1d,
    level_to_knots,
    reduced_margin,
)

# --- one-dimensional families ------------------------------------------------
print("Clenshaw-Curtis points, doubling rule:")
for level in (1, 2, 3):
    m = level_to_knots("doubling", level)
    print(f"  level {level} ({m} points): {np.round(knots_1d('clenshaw_curtis', m), 4)}")

print("\nSymmetric Leja points (first 5, nested under every rule):")
print(" ", np.round(knots_1d("symmetric_leja", 5), 4))

# --- a total-degree multi-index set and its combination coefficients ---------
iset = {(b1, b2) for b1 in range(1, 4) for b2 in range(1, 4) if b1 + b2 <= 4}
print(f"\nTotal-degree set |b|_1 <= 4: {sorted(iset)}")
print(f"Reduced margin: {sorted(reduced_margin(iset))}")

coeffs = combination_coeffs(iset)
print("Combination coefficients (zero terms drop out of the assembly):")
for b in sorted(iset):
    print(f"  c{b} = {coeffs[b]:+d}")

# --- assemble a surrogate of a smooth function --------------------------------
def peak(y):
    return 1.0 / (1.0 + 5.0 * (y[0] - 0.3) ** 2 + 2.0 * (y[1] - 0.6) ** 2)


kit = GridKit("clenshaw_curtis", "doubling")
joint = {(1,) + b for b in iset}  # single fidelity
requests = collocation_requests(joint, 1, kit)
print(f"\nDistinct collocation points needed: {len(requests[(1,)])}")

surr = build_surrogate(joint, 1, kit, lambda alpha, y: peak(y))
rng = np.random.default_rng(0)
Y = rng.random((2000, 2))
err = np.abs(surr.evaluate_many(Y) - np.array([peak(y) for y in Y]))
print(f"Surrogate max error on 2000 random points: {err.max():.2e}")
print(f"Surrogate integral (exact quadrature of the interpolant): {surr.expectation():.6f}")
