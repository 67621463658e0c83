"""
Stationary configurations of isolated neurons
=============================================

When every receiver keeps its own phase after each firing, the ring settles
into a fixed configuration of the post-event map.  Here we solve for it three
ways and check that they agree.
"""
import numpy as np

from spikering import influence as inf, solvers

# %% Linear response V(y) = a y: the gaps form a geometric sequence.
spec = inf.linear_v(0.5)
closed = solvers.fixed_point_linear(0.5, 3)
print("closed-form gaps   ", closed.z_star)            # 1/7, 2/7, 4/7
print("phases y*          ", closed.y_star)

# %% Bisection on the first phase works for any admissible increasing V.
bis = solvers.fixed_point_bisection(spec, 3)
print("bisection y*       ", bis.y_star, "residual", bis.residual)

# %% A nonlinear influence has no closed form but the shooting method still applies.
quad = inf.quadratic_decay(0.3, 0.2)
res = solvers.fixed_point(quad, 8)
print("quadratic, N=8     ", np.round(res.y_star, 6), "via", res.method)

# %% Iterating the map from a random start reaches the same point.
rng = np.random.default_rng(0)
it = solvers.fixed_point_iterate(quad, 8, start=np.sort(rng.random(7)))
print("iteration distance ", np.max(np.abs(it.y_star - res.y_star)), "after", it.iterations, "steps")

# %% Replaying the solution through the event engine leaves it unchanged.
rep = solvers.verify_fixed_point(res, quad)
print("engine residual    ", rep.engine_residual)

# %% Neurons with different slopes: the ring contracts by the product of slopes per rotation.
a = [0.9, 0.8, 0.7]
het = solvers.fixed_point_heterogeneous(a)
print("heterogeneous gaps ", het.z_star, "contraction", het.contraction)
