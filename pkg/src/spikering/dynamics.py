"""Event-driven engine: drift, avalanche firing, exact cluster coalescence.

Phases live on [0, 1).  Between events every cluster drifts at rate 1; the
leading cluster reaches 1, fires, and kicks everyone else.  The state is
sampled immediately after each avalanche, with the fired cluster rebased
to exactly 0.

Also home to the closed-form discrete maps in reversed coordinates
``y = 1 - x``: :func:`tilde_map` (shift, then jump) and :func:`hat_map`
(jump, then shift), plus the gap coordinates :func:`to_gaps` / :func:`from_gaps`.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import InternalInvariantError, UsageError
from .influence import InfluenceSpec, _eval_v, _eval_w


@dataclass(frozen=True)
class Tolerances:
    fire: float = 1e-12   # x >= 1 - fire snaps to 1
    merge: float = 1e-9   # phases closer than this coalesce


DEFAULT_TOL = Tolerances()


class Cluster(NamedTuple):
    members: tuple[int, ...]
    x: float

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class PhaseConfiguration:
    """Clusters sorted by strictly increasing phase, plus elapsed time."""

    clusters: tuple[Cluster, ...]
    n_total: int
    time: float = 0.0

    @classmethod
    def from_phases(cls, phases, ids=None, time=0.0, merge_tol=DEFAULT_TOL.merge):
        """Build a configuration from per-neuron phases.

        Neuron ``i`` gets id ``ids[i]`` (default ``i``); phases closer than
        ``merge_tol`` share a cluster.
        """
        phases = np.asarray(phases, dtype=float)
        n = phases.size
        if n == 0:
            raise UsageError("configuration needs at least one neuron")
        if np.any(phases < 0.0) or np.any(phases >= 1.0):
            raise UsageError("phases must lie in [0, 1)")
        ids = list(range(n)) if ids is None else [int(i) for i in ids]
        if sorted(ids) != list(range(n)):
            raise UsageError("ids must be a permutation of 0..n-1")
        order = np.argsort(phases, kind="stable")
        clusters = []
        members, xs = [ids[order[0]]], [phases[order[0]]]
        for j in order[1:]:
            if phases[j] - xs[-1] <= merge_tol:
                members.append(ids[j])
                xs.append(phases[j])
            else:
                clusters.append(Cluster(tuple(sorted(members)), float(xs[0])))
                members, xs = [ids[j]], [phases[j]]
        clusters.append(Cluster(tuple(sorted(members)), float(xs[0])))
        return cls(tuple(clusters), n, time)

    @classmethod
    def equally_spaced(cls, n):
        return cls.from_phases(np.arange(n) / n)

    @property
    def k(self) -> int:
        return len(self.clusters)

    @property
    def phases(self) -> np.ndarray:
        return np.array([c.x for c in self.clusters])

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(c.size for c in self.clusters)

    def gaps(self) -> np.ndarray:
        """Circular gaps between consecutive clusters; the last one wraps through 1."""
        x = self.phases
        return np.append(np.diff(x), 1.0 - x[-1] + x[0])

    def neuron_phases(self) -> np.ndarray:
        out = np.empty(self.n_total)
        for c in self.clusters:
            out[list(c.members)] = c.x
        return out

    def y_vector(self) -> np.ndarray:
        """Reversed coordinates ``1 - x`` of all clusters, ascending.

        Right after an event the fired cluster sits at x = 0, so the vector
        ends with exactly 1.
        """
        return np.sort(1.0 - self.phases)

    def validate(self):
        x = self.phases
        if np.any(np.diff(x) <= 0.0):
            raise InternalInvariantError("cluster phases not strictly increasing")
        if x[0] < 0.0 or x[-1] >= 1.0:
            raise InternalInvariantError("cluster phase outside [0, 1)")
        seen = sorted(m for c in self.clusters for m in c.members)
        if seen != list(range(self.n_total)):
            raise InternalInvariantError("cluster members do not partition the neurons")


@dataclass(frozen=True)
class EventRecord:
    event_index: int
    time: float
    fired_members: tuple[int, ...]
    merge_events: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]
    post_state: PhaseConfiguration
    cascade_depth: int


@dataclass
class Trajectory:
    initial: PhaseConfiguration
    events: list[EventRecord] = field(default_factory=list)
    termination: str = "max_events"   # max_events | stationary | single_cluster
    scenario_id: str = "scenario"
    seed: int | None = None

    @property
    def final(self) -> PhaseConfiguration:
        return self.events[-1].post_state if self.events else self.initial

    def states(self) -> list[PhaseConfiguration]:
        """Initial state followed by every post-event state."""
        return [self.initial] + [e.post_state for e in self.events]


@dataclass(frozen=True)
class RunLimits:
    max_events: int = 10_000
    stop_on_stationary: bool = True
    stop_on_single_cluster: bool = True


# -- engine -------------------------------------------------------------------

def advance_to_next_firing(cfg: PhaseConfiguration, tol: Tolerances = DEFAULT_TOL):
    """Drift every cluster until the leading one reaches 1.

    Returns ``(configuration, elapsed)``.  Clusters within ``tol.fire`` of 1
    are snapped to exactly 1; the result is only valid as input to
    :func:`fire_avalanche`.
    """
    if not cfg.clusters:
        raise UsageError("empty configuration")
    x_max = cfg.clusters[-1].x
    if x_max >= 1.0:
        raise UsageError("a cluster already sits at 1")
    elapsed = 1.0 - x_max
    clusters = []
    for c in cfg.clusters[:-1]:
        x = c.x + elapsed
        clusters.append(Cluster(c.members, 1.0 if x >= 1.0 - tol.fire else x))
    clusters.append(Cluster(cfg.clusters[-1].members, 1.0))
    return PhaseConfiguration(tuple(clusters), cfg.n_total, cfg.time + elapsed), elapsed


def fire_avalanche(cfg: PhaseConfiguration, spec: InfluenceSpec, tol: Tolerances = DEFAULT_TOL,
                   event_index: int = 0):
    """Resolve the cascade started by the clusters sitting at exactly 1.

    Clusters fire in queue order (initial ones by lowest member id); each
    member of a firing cluster applies its ``W`` once, in ascending id, to
    every cluster that is neither at 1 nor already fired.  Fired clusters
    are frozen for the rest of the event and finally merge into a single
    cluster at 0.  Returns ``(post_state, EventRecord)``.
    """
    members = [c.members for c in cfg.clusters]
    xs = np.array([c.x for c in cfg.clusters])
    k = len(members)
    start = [i for i in range(k) if xs[i] == 1.0]
    if not start:
        raise UsageError("no cluster at 1 to fire")
    start.sort(key=lambda i: members[i][0])
    fired = np.zeros(k, dtype=bool)
    wave = {i: 1 for i in start}
    queue = deque(start)
    order = []
    depth = 0
    while queue:
        i = queue.popleft()
        order.append(i)
        fired[i] = True
        depth = max(depth, wave[i])
        for m in members[i]:
            idx = np.flatnonzero(~fired & (xs < 1.0))
            if idx.size == 0:
                break
            new = _eval_w(spec, m, xs[idx])
            if np.any(np.diff(new) < -tol.merge):
                raise InternalInvariantError(f"neuron {m} made receivers overtake each other")
            new[new >= 1.0 - tol.fire] = 1.0
            xs[idx] = new
            hits = sorted(idx[new == 1.0], key=lambda j: members[j][0])
            for j in hits:
                wave[j] = wave[i] + 1
                queue.append(j)

    merges = []
    fired_set = members[order[0]]
    for i in order[1:]:
        merges.append((fired_set, members[i]))
        fired_set = tuple(sorted(fired_set + members[i]))

    # coalesce: fired cluster at 0 first, then receivers in phase order
    rest = np.flatnonzero(~fired)
    if rest.size == 0 or (xs[rest[0]] > tol.merge and np.all(np.diff(xs[rest]) > tol.merge)):
        clusters = (Cluster(fired_set, 0.0),) + tuple(Cluster(members[i], float(xs[i])) for i in rest)
    else:
        groups = [[fired_set, 0.0, len(fired_set), True]]
        for i in rest:
            g = groups[-1]
            if xs[i] - g[1] <= tol.merge:
                merges.append((g[0], members[i]))
                mass = g[2] + len(members[i])
                if not g[3]:
                    g[1] = (g[1] * g[2] + xs[i] * len(members[i])) / mass
                g[0] = tuple(sorted(g[0] + members[i]))
                g[2] = mass
            else:
                groups.append([members[i], float(xs[i]), len(members[i]), False])
        clusters = tuple(Cluster(g[0], float(g[1])) for g in groups)
    post = PhaseConfiguration(clusters, cfg.n_total, cfg.time)
    record = EventRecord(event_index, cfg.time, fired_set, tuple(merges), post, depth)
    return post, record


def step(cfg: PhaseConfiguration, spec: InfluenceSpec, tol: Tolerances = DEFAULT_TOL, event_index: int = 0):
    """One firing event: drift to threshold, then resolve the avalanche."""
    moved, _ = advance_to_next_firing(cfg, tol)
    return fire_avalanche(moved, spec, tol, event_index)


@dataclass
class StationarityCheck:
    stationary: bool
    k: int
    shift: int | None = None
    max_deviation: float | None = None
    reason: str = ""


def _signature(cfg):
    return np.array(cfg.sizes), cfg.gaps()


def is_stationary(window: Sequence[PhaseConfiguration], tol: float = 1e-9) -> StationarityCheck:
    """Period check over one full rotation.

    With ``k`` clusters in the last state, compares the (sizes, gaps)
    vector of ``window[-k-1]`` and ``window[-1]`` up to a cyclic shift.
    Every state in between must also have ``k`` clusters (no merges).
    """
    if not window:
        return StationarityCheck(False, 0, reason="empty window")
    k = window[-1].k
    if len(window) < k + 1:
        return StationarityCheck(False, k, reason="window shorter than one rotation")
    span = window[-k - 1:]
    if any(s.k != k for s in span):
        return StationarityCheck(False, k, reason="merge inside window")
    s0, g0 = _signature(span[0])
    s1, g1 = _signature(span[-1])
    best = None
    for shift in range(k):
        if not np.array_equal(np.roll(s0, -shift), s1):
            continue
        dev = float(np.max(np.abs(np.roll(g0, -shift) - g1)))
        if best is None or dev < best[1]:
            best = (shift, dev)
    if best is None:
        return StationarityCheck(False, k, reason="cluster sizes differ")
    return StationarityCheck(best[1] <= tol, k, best[0], best[1],
                             "" if best[1] <= tol else "gaps moved")


def run(cfg: PhaseConfiguration, spec: InfluenceSpec, limits: RunLimits = RunLimits(),
        tol: Tolerances = DEFAULT_TOL, scenario_id: str = "scenario", seed: int | None = None) -> Trajectory:
    """Iterate :func:`step` until a stop condition or ``limits.max_events``."""
    traj = Trajectory(cfg, scenario_id=scenario_id, seed=seed)
    window = deque([cfg], maxlen=cfg.n_total + 1)
    state = cfg
    for i in range(limits.max_events):
        state, rec = step(state, spec, tol, i)
        traj.events.append(rec)
        window.append(state)
        if limits.stop_on_single_cluster and state.k == 1 and cfg.n_total > 1:
            traj.termination = "single_cluster"
            break
        if limits.stop_on_stationary and is_stationary(list(window)[-state.k - 1:], tol.merge).stationary:
            traj.termination = "stationary"
            break
    return traj


# -- discrete maps in y = 1 - x -------------------------------------------------

def _check_y(y):
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size < 1:
        raise UsageError("y must be a non-empty 1-d sequence")
    if y[-1] != 1.0:
        raise UsageError("the last coordinate (just-fired neuron) must be exactly 1")
    if y[0] <= 0.0 or np.any(np.diff(y) <= 0.0):
        raise UsageError("y must satisfy 0 < y_1 < ... < y_N = 1")
    return y


def tilde_map(y, spec: InfluenceSpec, emitter=None) -> np.ndarray:
    """Post-event map: shift so the lowest neuron fires, then apply ``V``.

    ``y_i -> V(y_{i+1} - y_1)`` for ``i < N`` and ``y_N -> 1``.
    """
    y = _check_y(y)
    out = np.empty_like(y)
    out[:-1] = _eval_v(spec, emitter, y[1:] - y[0])
    out[-1] = 1.0
    return out


def hat_map(y, spec: InfluenceSpec, emitter=None) -> np.ndarray:
    """Opposite composition: apply ``V`` pointwise, then shift.

    ``y_i -> V(y_{i+1}) - V(y_1)`` for ``i < N-1``, ``y_{N-1} -> 1 - V(y_1)``.
    """
    y = _check_y(y)
    out = np.ones_like(y)
    if y.size > 1:
        v = _eval_v(spec, emitter, y[:-1])
        out[:-2] = v[1:] - v[0]
        out[-2] = 1.0 - v[0]
    return out


def to_gaps(y) -> np.ndarray:
    """Gap coordinates of interior points ``y_1 < ... < y_{N-1}``; sums to 1."""
    y = np.asarray(y, dtype=float)
    if y.size and (y[0] < 0.0 or y[-1] > 1.0 or np.any(np.diff(y) < 0.0)):
        raise UsageError("y must be nondecreasing in [0, 1]")
    return np.diff(np.concatenate(([0.0], y, [1.0])))


def from_gaps(z, tol: float = 1e-12) -> np.ndarray:
    """Inverse of :func:`to_gaps`."""
    z = np.asarray(z, dtype=float)
    if z.size == 0 or np.any(z < 0.0):
        raise UsageError("gaps must be a non-empty nonnegative vector")
    if abs(z.sum() - 1.0) > tol:
        raise UsageError(f"gaps sum to {z.sum()!r}, not 1")
    return np.cumsum(z[:-1])
