"""
Large-N limits of the stationary configuration
==============================================

With V(y) = a y and a close to 1 the fixed-point phases fill [0, 1] with a
density that depends on how fast a approaches 1 as N grows.
"""
import numpy as np

from spikering import analysis, solvers

n = 4096
for regime, alpha in (("uniform", None), ("density_alpha", 1.0), ("density_alpha", 3.0), ("atom_at_zero", None)):
    a = analysis.regime_scale(n, regime, alpha)
    y = solvers.fixed_point_linear(a, n).y_star
    rep = analysis.regime_compare(y, regime, alpha)
    label = regime if alpha is None else f"{regime}(alpha={alpha})"
    print(f"{label:24s} a={a:.8f}  KS={rep.ks_distance:.2e}")

# %% The empirical CDF on a coarse grid, next to the alpha=1 reference.
a = analysis.regime_scale(n, "density_alpha", 1.0)
table = analysis.cdf_table(solvers.fixed_point_linear(a, n).y_star, grid_points=6)
ref = analysis.regime_cdf(1.0)
for y, f in table:
    print(f"  y={y:.1f}  empirical {f:.4f}  limit {ref(y):.4f}")
