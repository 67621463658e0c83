"""Random admissible influences and the engine invariants checked on every event."""
from __future__ import annotations

import numpy as np

from spikering import influence as inf
from spikering.dynamics import PhaseConfiguration


def random_spec(rng: np.random.Generator, n: int) -> inf.InfluenceSpec:
    kind = inf.KINDS[rng.integers(len(inf.KINDS))]
    if kind == "linear_v":
        return inf.linear_v(rng.uniform(0.05, 1.0))
    if kind == "trapezoid":
        return inf.trapezoid(rng.uniform(0.01, 0.6))
    if kind == "affine_decay":
        return inf.affine_decay(rng.uniform(0.01, 0.95))
    if kind == "quadratic_decay":
        # admissible region: 0 <= b0 + b1 (1 - x) <= 1 and W' = 1 - b0 - b1 + 2 b1 x >= 0
        while True:
            b0, b1 = rng.uniform(0.0, 1.0), rng.uniform(-0.5, 1.0)
            spec = inf.quadratic_decay(b0, b1)
            if inf.check_admissible(spec, grid_points=501).ok:
                return spec
    if kind == "linear_dominating_trapezoid":
        h = rng.uniform(0.01, 0.5)
        return inf.linear_dominating_trapezoid(h, rng.uniform(h, 1.0))
    if kind == "perturbed_trapezoid":
        h = rng.uniform(0.05, 0.5)
        spec = inf.perturbed_trapezoid(h, rng.uniform(0.0, 0.5 * h))
        return inf.realize_noise(spec, n, rng)
    return inf.heterogeneous_linear(rng.uniform(0.05, 1.0, size=n))


def random_phases(rng: np.random.Generator, n: int) -> np.ndarray:
    x = rng.random(n)
    if n > 2 and rng.random() < 0.2:
        x[1] = x[0]          # start with a cluster
    return x


def cluster_of(state: PhaseConfiguration) -> dict[int, int]:
    return {m: i for i, c in enumerate(state.clusters) for m in c.members}


def cyclic_order_ok(before: PhaseConfiguration, after: PhaseConfiguration) -> bool:
    """Clusters keep their cyclic order: each target cluster is one contiguous cyclic block."""
    where = cluster_of(after)
    targets = [where[c.members[0]] for c in before.clusters]
    runs = [t for i, t in enumerate(targets) if i == 0 or t != targets[i - 1]]
    if len(runs) > 1 and runs[0] == runs[-1]:
        runs.pop()
    k = after.k
    if sorted(runs) != list(range(k)):
        return False
    start = runs.index(0)
    return runs[start:] + runs[:start] == list(range(k))


def event_violations(before: PhaseConfiguration, record, n: int) -> list[str]:
    """Invariant violations for one event (empty when all hold)."""
    after = record.post_state
    bad = []
    members = sorted(m for c in after.clusters for m in c.members)
    if members != list(range(n)) or sum(after.sizes) != n:
        bad.append("mass")
    where = cluster_of(after)
    for c in before.clusters:
        if len({where[m] for m in c.members}) != 1:
            bad.append("permanence")
            break
    if not cyclic_order_ok(before, after):
        bad.append("order")
    if not 1 <= record.cascade_depth <= n or not record.fired_members:
        bad.append("avalanche")
    x = after.phases
    if x[0] != 0.0 or np.any(np.diff(x) <= 0.0) or x[-1] >= 1.0:
        bad.append("phase range")
    return bad
