"""Verdicts on trajectories and fixed points.

Terminal-state classification for the trapezoid family, per-rotation gap
bookkeeping, empirical measures of fixed points for large N, convergence
rate fits, and a Monte Carlo estimate of the no-small-gap probability.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats

from .dynamics import PhaseConfiguration, Trajectory
from .errors import InvalidSpecError, UsageError
from .influence import InfluenceSpec


# -- terminal states of the trapezoid family ------------------------------------

@dataclass
class TerminalReport:
    k: int
    sizes: list[int]
    gaps: list[float]
    classification: str      # trivial | k_regular_stationary | non_stationary
    constraints_checked: list[tuple[str, bool]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "sizes": list(self.sizes),
            "gaps": [float(g) for g in self.gaps],
            "classification": self.classification,
            "constraints": [[name, ok] for name, ok in self.constraints_checked],
        }


def _post_event_gaps(state: PhaseConfiguration):
    """Gaps starting at the cluster sitting at 0; the last one is the freshly shrunk one."""
    return list(state.gaps())


def classify_terminal(trajectory: Trajectory, h: float, n: int | None = None) -> TerminalReport:
    """Classify the last state of a finished trapezoid run.

    A k-regular stationary state has ``k | N``, all sizes ``N/k``, every gap
    except the one just shrunk by the last firing above ``h N / k``, that
    one positive, and ``(N - N/k) h < 1``.
    """
    if trajectory.termination not in ("stationary", "single_cluster"):
        raise UsageError(f"trajectory not terminated (reason {trajectory.termination!r})")
    state = trajectory.final
    n = state.n_total if n is None else n
    k = state.k
    sizes = list(state.sizes)
    gaps = _post_event_gaps(state)
    checks = []
    nh = n * h
    if nh >= 2.0:
        checks.append(("Nh>=2 implies one cluster", k == 1))
    if k == 1:
        checks.append(("single cluster", True))
        return TerminalReport(1, sizes, gaps, "trivial", checks)

    m = n / k
    checks.append(("k divides N", n % k == 0))
    checks.append(("equal sizes N/k", all(s * k == n for s in sizes)))
    checks.append(("gaps > hN/k", bool(all(g > h * m for g in gaps[:-1]))))
    checks.append(("post-fire gap > 0", bool(gaps[-1] > 0.0)))
    checks.append(("(N - N/k) h < 1", (n - m) * h < 1.0))
    if 1.0 < nh < 2.0:
        checks.append(("Nh - Nh/k < 1", nh - nh / k < 1.0))
    ok = all(passed for _, passed in checks)
    return TerminalReport(k, sizes, gaps, "k_regular_stationary" if ok else "non_stationary", checks)


def admissible_cluster_counts(n: int, h: float) -> list[int]:
    """Divisors k of N for which k equal clusters fit on the circle."""
    return [k for k in range(1, n + 1) if n % k == 0 and (k == 1 or (n - n / k) * h < 1.0)]


# -- per-rotation gap audit ------------------------------------------------------

@dataclass
class GapAuditReport:
    rotations_checked: int
    max_error: float
    violations: list[int]        # event index ending each failing rotation
    merged: bool
    events_to_merge: int | None
    decrements: list[float] = field(default_factory=list)   # closing gaps only

    @property
    def ok(self) -> bool:
        return not self.violations


def _directed_gaps(state: PhaseConfiguration):
    """{(behind, ahead): gap} keyed by each cluster's lowest member id."""
    keys = [c.members[0] for c in state.clusters]
    gaps = state.gaps()
    k = len(keys)
    return {(keys[i], keys[(i + 1) % k]): float(gaps[i]) for i in range(k)}


def gap_audit(trajectory: Trajectory, h: float, tol: float = 1e-9) -> GapAuditReport:
    """Check every merge-free rotation against the per-rotation gap law.

    Over one rotation the gap from cluster P (behind) to cluster A (ahead)
    changes by exactly ``h (n_P - n_A)``: the larger cluster pushes the
    smaller one harder.
    """
    states = trajectory.states()
    errors, violations, decrements = [], [], []
    rotations = 0
    for t in range(len(states)):
        k = states[t].k
        if k < 2 or t + k >= len(states):
            continue
        window = states[t:t + k + 1]
        if any(s.k != k for s in window):
            continue
        before, after = window[0], window[-1]
        size = {c.members[0]: c.size for c in before.clusters}
        g0, g1 = _directed_gaps(before), _directed_gaps(after)
        if set(g0) != set(g1):
            violations.append(t + k - 1)
            continue
        rotations += 1
        worst = 0.0
        for (p, a), gap in g0.items():
            expected = gap + h * (size[p] - size[a])
            err = abs(g1[(p, a)] - expected)
            worst = max(worst, err)
            if size[p] < size[a]:
                decrements.append(gap - g1[(p, a)])
        errors.append(worst)
        if worst > tol:
            violations.append(t + k - 1)
    merge_at = None
    for prev, ev in zip(states, trajectory.events):
        if ev.post_state.k < prev.k:
            merge_at = ev.event_index
            break
    return GapAuditReport(rotations, max(errors, default=0.0), violations,
                          trajectory.final.k < trajectory.initial.k, merge_at, decrements)


# -- empirical measures ----------------------------------------------------------

@dataclass
class EmpiricalCDF:
    atoms: np.ndarray    # sorted, includes y_N = 1

    @property
    def n(self) -> int:
        return self.atoms.size

    def __call__(self, y):
        return np.searchsorted(self.atoms, np.asarray(y, dtype=float), side="right") / self.n


def empirical_measure(y_star) -> EmpiricalCDF:
    """Mass 1/N at each fixed-point coordinate and at ``y_N = 1``."""
    y = np.sort(np.asarray(y_star, dtype=float))
    return EmpiricalCDF(np.append(y, 1.0))


REGIMES = ("uniform", "density_alpha", "atom_at_zero")


def regime_beta(alpha: float) -> float:
    """Root of ``int_0^1 dy / (alpha y + beta) = 1``, i.e. ``alpha / (e^alpha - 1)``."""
    if alpha <= 0.0:
        raise InvalidSpecError("alpha must be positive")
    return alpha / math.expm1(alpha)


def regime_cdf(alpha: float) -> Callable:
    beta = regime_beta(alpha)
    return lambda y: np.log1p(alpha * np.asarray(y) / beta) / alpha


def regime_scale(n: int, regime: str, alpha: float | None = None) -> float:
    """Linear scale ``a`` realizing a regime at size N.

    uniform: ``1 - a = N^-2``; density_alpha: ``(1 - a) N = alpha``;
    atom_at_zero: ``(1 - a) N = sqrt(N)``.
    """
    if regime == "uniform":
        return 1.0 - 1.0 / n**2
    if regime == "density_alpha":
        if alpha is None or alpha <= 0.0:
            raise InvalidSpecError("density_alpha needs alpha > 0")
        return 1.0 - alpha / n
    if regime == "atom_at_zero":
        return 1.0 - 1.0 / math.sqrt(n)
    raise UsageError(f"unknown regime {regime!r}")


@dataclass
class MeasureReport:
    regime: str
    alpha: float | None
    beta: float | None
    ks_distance: float
    n: int
    eta: float | None = None

    def to_dict(self) -> dict:
        return {"regime": self.regime, "alpha": self.alpha, "beta": self.beta,
                "ks_distance": float(self.ks_distance), "N": self.n, "eta": self.eta}


def regime_compare(y_star, regime: str, alpha: float | None = None, eta: float = 0.05) -> MeasureReport:
    """Distance between the empirical measure of ``y_star`` and a limit regime.

    For ``uniform`` and ``density_alpha`` this is the Kolmogorov-Smirnov
    distance; for ``atom_at_zero`` it is the mass outside ``[0, eta]``.
    """
    emp = empirical_measure(y_star)
    if regime == "uniform":
        d = stats.kstest(emp.atoms, "uniform").statistic
        return MeasureReport(regime, None, None, float(d), emp.n)
    if regime == "density_alpha":
        if alpha is None or alpha <= 0.0:
            raise InvalidSpecError("density_alpha needs alpha > 0")
        d = stats.kstest(emp.atoms, regime_cdf(alpha)).statistic
        return MeasureReport(regime, alpha, regime_beta(alpha), float(d), emp.n)
    if regime == "atom_at_zero":
        outside = float(np.mean(emp.atoms > eta))
        return MeasureReport(regime, None, None, outside, emp.n, eta)
    raise UsageError(f"unknown regime {regime!r}")


def cdf_table(y_star, grid_points: int = 201) -> np.ndarray:
    """Two columns (y, F(y)) of the empirical CDF on a uniform grid."""
    emp = empirical_measure(y_star)
    y = np.linspace(0.0, 1.0, grid_points)
    return np.column_stack([y, emp(y)])


# -- convergence rate ------------------------------------------------------------

@dataclass
class RateReport:
    per_rotation_contraction: float | None
    per_event_slope: float | None
    r_squared: float | None
    window: tuple[int, int]
    already_converged: bool = False
    n_points: int = 0

    def to_dict(self) -> dict:
        return {"per_rotation_contraction": self.per_rotation_contraction,
                "per_event_slope": self.per_event_slope, "r_squared": self.r_squared,
                "window": list(self.window), "already_converged": self.already_converged}


def aligned_y(state: PhaseConfiguration) -> tuple[np.ndarray, tuple[int, ...]]:
    """Interior y-vector and neuron order (by increasing y) of a post-event state."""
    order = sorted(state.clusters, key=lambda c: -c.x)
    y = 1.0 - np.array([c.x for c in order])
    return y[:-1], tuple(c.members[0] for c in order)


def distances_to_fixed_point(trajectory: Trajectory, fixed_point) -> np.ndarray:
    """l-infinity distance of every post-event state to the fixed point.

    ``fixed_point`` is either the interior vector ``y_star`` or a callable
    mapping the neuron order of a state to its ``y_star``.
    """
    out = np.full(len(trajectory.events), np.nan)
    for i, ev in enumerate(trajectory.events):
        st = ev.post_state
        if st.k != st.n_total:
            break
        y, order = aligned_y(st)
        ref = fixed_point(order) if callable(fixed_point) else np.asarray(fixed_point)
        out[i] = np.max(np.abs(y - ref)) if y.size else 0.0
    return out


def convergence_rate(trajectory: Trajectory, fixed_point, stride: int = 1, floor: float = 1e-14,
                     converged_below: float = 1e-12) -> RateReport:
    """Log-linear fit of the distance to the fixed point.

    Uses events from index N on, sampled every ``stride`` events, up to the
    first distance below ``floor``.  ``stride = N`` samples one phase of the
    rotation, which is what per-emitter influence needs.
    """
    n = trajectory.initial.n_total
    d = distances_to_fixed_point(trajectory, fixed_point)
    idx = np.arange(n, d.size, stride)
    if idx.size and np.all(d[idx][np.isfinite(d[idx])] < converged_below):
        return RateReport(None, None, None, (n, d.size), True, 0)
    keep = []
    for i in idx:
        if not np.isfinite(d[i]) or d[i] < floor:
            break
        keep.append(i)
    if len(keep) < 3:
        return RateReport(None, None, None, (n, keep[-1] + 1 if keep else n), False, len(keep))
    keep = np.array(keep)
    fit = stats.linregress(keep, np.log(d[keep]))
    slope = float(fit.slope)
    return RateReport(float(np.exp(n * slope)), slope, float(fit.rvalue**2),
                      (int(keep[0]), int(keep[-1]) + 1), False, keep.size)


# -- Monte Carlo ---------------------------------------------------------------

@dataclass
class GapProbability:
    estimate: float
    std_error: float
    trials: int

    @staticmethod
    def oracle(n: int, h: float) -> float:
        """Exact probability that N uniform points on the circle have all gaps > h."""
        return max(1.0 - n * h, 0.0) ** (n - 1)


def no_small_gap_probability(n: int, h: float, trials: int, seed: int, batch: int = 50_000) -> GapProbability:
    """Fraction of uniform N-point configurations whose circular gaps all exceed h."""
    if trials < 1:
        raise UsageError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < trials:
        m = min(batch, trials - done)
        x = np.sort(rng.random((m, n)), axis=1)
        gaps = np.diff(x, axis=1, append=x[:, :1] + 1.0)
        hits += int(np.count_nonzero(np.all(gaps > h, axis=1)))
        done += m
    p = hits / trials
    return GapProbability(p, math.sqrt(p * (1.0 - p) / trials), trials)


def cluster_force(members, spec: InfluenceSpec) -> float:
    """Total impulse a cluster sends when it fires: sum of ``h + xi_i``."""
    if spec.kind != "perturbed_trapezoid":
        raise UsageError("cluster force is defined for perturbed_trapezoid")
    if spec.xi is None:
        raise UsageError("perturbed_trapezoid noise not realized; call realize_noise()")
    return float(sum(spec.h + spec.xi[i] for i in members))
