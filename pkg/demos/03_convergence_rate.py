"""
How fast the ring settles
=========================

For affine decay the distance to the stationary configuration shrinks
geometrically.  We fit the per-rotation contraction and compare it with
(1 - beta)^N.
"""
import numpy as np

from spikering import analysis, dynamics as dyn, influence as inf, solvers
from spikering.dynamics import PhaseConfiguration, RunLimits

n, beta = 6, 0.15
spec = inf.affine_decay(beta)
y_star = solvers.fixed_point(spec, n).y_star

rng = np.random.default_rng(3)
traj = dyn.run(PhaseConfiguration.from_phases(rng.random(n)), spec, RunLimits(3000, stop_on_stationary=False))
d = analysis.distances_to_fixed_point(traj, y_star)
print("distance every 100 events:", np.array2string(d[::100][:8], precision=2))

rate = analysis.convergence_rate(traj, y_star)
print(f"fitted contraction {rate.per_rotation_contraction:.5f} (R^2 {rate.r_squared:.4f})")
print(f"predicted          {(1 - beta) ** n:.5f}")

# %% Heterogeneous slopes: one rotation multiplies the error by prod(a).
a = np.array([0.95, 0.85, 0.9, 0.8])
spec = inf.heterogeneous_linear(a)
traj = dyn.run(PhaseConfiguration.from_phases(rng.random(a.size)), spec, RunLimits(800, stop_on_stationary=False))
rate = analysis.convergence_rate(traj, lambda order: solvers.fixed_point_heterogeneous(a[list(order)]).y_star,
                                 stride=a.size)
print(f"heterogeneous contraction {rate.per_rotation_contraction:.4f} vs prod(a) {np.prod(a):.4f}")
