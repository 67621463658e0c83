"""
Clusters under the flat trapezoid influence
===========================================

A constant kick of size h lets neurons catch up and lock together.  Once
locked they never separate, and the number of surviving clusters is limited
by how much kick a full rotation can absorb.
"""
import numpy as np

from spikering import analysis, dynamics as dyn, influence as inf
from spikering.dynamics import PhaseConfiguration

n = 12
rng = np.random.default_rng(7)

# %% Which cluster counts are possible at all?
for h in (0.02, 0.1, 0.2):
    print(f"h={h}: admissible cluster counts {analysis.admissible_cluster_counts(n, h)}")

# %% Run random starts to termination and tally the terminal cluster counts.
for h in (0.02, 0.1, 0.2):
    counts = {}
    for _ in range(200):
        traj = dyn.run(PhaseConfiguration.from_phases(rng.random(n)), inf.trapezoid(h))
        rep = analysis.classify_terminal(traj, h, n)
        counts[rep.k] = counts.get(rep.k, 0) + 1
    print(f"h={h}: terminal k histogram {dict(sorted(counts.items()))}")

# %% Gaps between clusters of unequal size shrink at a fixed rate per rotation.
traj = dyn.run(PhaseConfiguration.from_phases([0.0, 0.5, 0.5, 0.5]), inf.trapezoid(0.1))
audit = analysis.gap_audit(traj, 0.1)
print("gap audit:", "ok" if audit.ok else "violated", "| decrements", np.round(audit.decrements, 12),
      "| merged after", audit.events_to_merge, "events")

# %% With a large total kick (N h >= 2) everything collapses into one cluster.
traj = dyn.run(PhaseConfiguration.from_phases(rng.random(4)), inf.trapezoid(0.55))
print("N h = 2.2 ->", analysis.classify_terminal(traj, 0.55, 4).classification)

# %% Chance that no two of N uniform neurons start within h of each other.
est = analysis.no_small_gap_probability(3, 0.1, 200_000, seed=1)
print(f"P(no gap < h) = {est.estimate:.4f} +/- {est.std_error:.4f}, exact {est.oracle(3, 0.1):.4f}")
