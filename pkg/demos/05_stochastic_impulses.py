"""
Noisy kicks
===========

Each neuron's kick is h plus its own fixed offset.  Clusters then carry
different total forces, so equal-size clusters no longer hold their spacing
and the ring drifts toward fewer clusters.
"""
import numpy as np

from spikering import analysis, dynamics as dyn, influence as inf
from spikering.dynamics import PhaseConfiguration, RunLimits

n = 8
rng = np.random.default_rng(11)
spec = inf.realize_noise(inf.perturbed_trapezoid(0.05, 0.01), n, rng)
print("per-neuron offsets:", np.round(spec.xi, 4))

start = PhaseConfiguration.from_phases(np.repeat([0.0, 0.25, 0.5, 0.75], 2))
for c in start.clusters:
    print(f"cluster {c.members}: force {analysis.cluster_force(c.members, spec):.4f}")

traj = dyn.run(start, spec, RunLimits(20_000))
print("termination:", traj.termination, "after", len(traj.events), "events; final sizes", traj.final.sizes)
