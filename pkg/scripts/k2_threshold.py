"""CDE'(n, 0) on the two-vertex graph: closed form against the search.

With f = (1, e^a) the normalized deficit at the first vertex is
(q + 1)^2 / (2q) - (2/n) a^2 / (q - 1)^2, q = e^a, so the smallest admissible n
is the supremum of 4 q a^2 / ((q - 1)^2 (q + 1)^2) over a.
"""

import math

import numpy as np
from scipy.optimize import minimize_scalar

from liyaulab.curvature import cde_curvature_upper, certify_cde_dimension
from liyaulab.families import FamilySpec, generate


def ratio(a, n):
    q = math.exp(a)
    return (q + 1) ** 2 / (2 * q) - (2 / n) * a * a / (q - 1) ** 2


def main():
    res = minimize_scalar(lambda a: -4 * math.exp(a) * a * a / ((math.exp(a) - 1) ** 2 * (math.exp(a) + 1) ** 2),
                          bounds=(-10, -1e-3), method="bounded", options={"xatol": 1e-12})
    print(f"closed-form threshold n* = {-res.fun:.10f} (attained at a = {res.x:.6f})")
    grid = np.linspace(-3, 3, 601)
    grid = grid[np.abs(grid) > 1e-9]
    for n in (2.0, 2.2, -res.fun, 2.5, 3.0):
        print(f"n = {n:.6f}: min over a in [-3, 3] of the ratio = {min(ratio(a, n) for a in grid):+.6f}, "
              f"search upper bound on K = {cde_curvature_upper(generate(FamilySpec('complete', (2,))), '0', n):+.6f}")
    n, ok = certify_cde_dimension(generate(FamilySpec("complete", (2,))))
    print(f"certified by search: n = {n:.10f} ({ok})")


if __name__ == "__main__":
    main()
