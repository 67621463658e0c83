"""
Two neurons and the boundary 2-cycle
====================================

With two neurons the post-event map reduces to y -> V(1 - y).  For
V(y) = y^2 the interior fixed point repels, and iterates are pushed to the
2-cycle {0, 1}.  Which end the even iterates reach depends on the start.
"""
from spikering import influence as inf, solvers

spec = inf.quadratic_decay(0.0, 1.0)          # V(y) = y^2
for start in (0.3, 0.5):
    rep = solvers.two_particle_analysis(spec, start=start, iters=60)
    print(f"start {start}: fixed point {rep.y_star:.6f}, even -> {rep.even_limit:.3g}, odd -> {rep.odd_limit:.3g}")

# A contracting V instead keeps the pair at its interior fixed point.
rep = solvers.two_particle_analysis(inf.linear_v(0.5))
print(f"V(y) = y/2: fixed point {rep.y_star:.6f}, 2-cycle {rep.two_cycle}")
