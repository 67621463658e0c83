"""Stationary configurations of the post-event map.

Coordinates: ``y_star`` holds the interior points ``y_1 < ... < y_{N-1}``
(the just-fired neuron at ``y_N = 1`` is implied) and ``z_star`` the gap
vector, which sums to 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import dynamics
from .errors import BracketError, InvalidSpecError, UsageError
from .influence import (
    InfluenceSpec,
    LINEAR_KINDS,
    _eval_v,
    check_admissible,
    eval_v,
    linear_v,
    v_strictly_increasing,
)


@dataclass
class FixedPointResult:
    y_star: np.ndarray
    z_star: np.ndarray
    residual: float
    method: str            # bisection | closed_form_linear | closed_form_heterogeneous | iteration
    iterations: int
    attracting: bool | None = None
    contraction: float | None = None
    converged: bool = True
    clamps: int = 0
    order: tuple[int, ...] | None = None   # neuron ids by increasing y (iteration only)

    @property
    def n(self) -> int:
        return self.z_star.size

    def y_full(self) -> np.ndarray:
        return np.append(self.y_star, 1.0)

    def to_dict(self) -> dict:
        out = {
            "y_star": [float(v) for v in self.y_star],
            "z_star": [float(v) for v in self.z_star],
            "residual": float(self.residual),
            "method": self.method,
            "iterations": int(self.iterations),
            "attracting": self.attracting,
        }
        if self.contraction is not None:
            out["contraction"] = float(self.contraction)
        if not self.converged:
            out["converged"] = False
        return out


def _in_open_simplex(y):
    return y.size == 0 or (y[0] > 0.0 and y[-1] < 1.0 and np.all(np.diff(y) > 0.0))


def _tilde_residual(y_star, spec, emitter=None):
    if y_star.size == 0:
        return 0.0
    y = np.append(y_star, 1.0)
    return float(np.max(np.abs(dynamics.tilde_map(y, spec, emitter) - y)))


def _attracting(spec):
    if spec.kind == "linear_v":
        return spec.a < 1.0
    if spec.kind == "affine_decay":
        return True
    return None


def _shoot(spec, n, y1):
    """Solve the fixed-point equations top-down from a trial ``y_1``.

    Returns ``(y, implied_y1, clamps)`` with ``y`` the interior vector.
    """
    y = np.empty(n - 1)
    clamps = 0
    arg = 1.0 - y1
    for i in range(n - 2, -1, -1):
        if arg < 0.0:
            arg, clamps = 0.0, clamps + 1
        y[i] = _eval_v(spec, None, np.array(arg))
        arg = y[i] - y1
    # y[0] was computed from V(y_2 - y_1); it is the implied y_1
    return y, float(y[0]), clamps


def fixed_point_bisection(spec: InfluenceSpec, n: int, tol: float = 1e-12, max_iter: int = 200) -> FixedPointResult:
    """Unique fixed point of the post-event map by bisection on ``y_1``.

    The shooting residual ``r(y_1) = implied_y_1 - y_1`` is strictly
    decreasing, positive at 0 and negative at 1.  Bisection runs until
    the bracket stops shrinking in floating point or ``max_iter`` halvings.
    """
    if spec.per_emitter:
        raise UsageError("bisection needs a homogeneous influence; use fixed_point_heterogeneous")
    if not v_strictly_increasing(spec):
        raise BracketError(f"V is not strictly increasing for {spec.kind}", check_admissible(spec))
    if n < 2:
        raise UsageError("bisection needs n >= 2")
    lo, hi = 0.0, 1.0
    r_lo = _shoot(spec, n, lo)[1] - lo
    r_hi = _shoot(spec, n, hi)[1] - hi
    if not (r_lo > 0.0 > r_hi):
        raise BracketError("shooting residual does not change sign on [0, 1]", check_admissible(spec))
    it = 0
    while it < max_iter:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        it += 1
        r = _shoot(spec, n, mid)[1] - mid
        if r > 0.0:
            lo = mid
        elif r < 0.0:
            hi = mid
        else:
            lo = hi = mid
            break
    # pick the bracket end with the smaller residual
    cands = [(abs(_shoot(spec, n, v)[1] - v), v) for v in {lo, hi}]
    y1 = min(cands)[1]
    y, _, clamps = _shoot(spec, n, y1)
    y[0] = y1
    if not _in_open_simplex(y):
        raise BracketError("bisection left the open simplex", check_admissible(spec))
    residual = _tilde_residual(y, spec)
    if residual > max(tol, 1e-10):
        raise BracketError(f"bisection residual {residual:.3e} above tolerance", check_admissible(spec))
    return FixedPointResult(y, dynamics.to_gaps(y), residual, "bisection", it,
                            attracting=_attracting(spec), clamps=clamps)


def _linear_scale(spec):
    if spec.kind == "linear_v":
        return spec.a
    if spec.kind == "affine_decay":
        return 1.0 - spec.beta
    raise UsageError(f"{spec.kind} is not a homogeneous linear family")


def fixed_point_linear(a: float, n: int) -> FixedPointResult:
    """Closed form for ``V(y) = a y``: ``z_k = a^(N-k) A`` with ``A = 1 / sum_{j<N} a^j``."""
    if not 0.0 < a <= 1.0:
        raise InvalidSpecError(f"a must lie in (0, 1], got {a}")
    if n < 1:
        raise UsageError("n must be >= 1")
    powers = np.arange(n - 1, -1, -1)
    if a == 1.0:
        z = np.full(n, 1.0 / n)
    else:
        log_a = np.log(a)
        big_a = (1.0 - a) / -np.expm1(n * log_a)
        z = np.exp(powers * log_a) * big_a
    y = np.cumsum(z[:-1])
    return FixedPointResult(y, z, _tilde_residual(y, linear_v(a)), "closed_form_linear", 0,
                            attracting=a < 1.0, contraction=a**n)


def _gap_event(z, a):
    """One discharge in gap coordinates: ``z -> a T z + (1 - a) e``."""
    out = np.empty_like(z)
    out[:-1] = a * z[1:]
    out[-1] = a * z[0] + (1.0 - a)
    return out


def fixed_point_heterogeneous(a_seq) -> FixedPointResult:
    """Fixed point of one full rotation for per-neuron scales.

    ``a_seq[i]`` is the scale of the neuron at position ``i`` (by increasing
    ``y``) in the post-event state, i.e. the ``i``-th to fire next.  The
    rotation operator is ``z -> (prod a) z + g`` and ``z* = g / (1 - prod a)``.
    """
    a = np.asarray(a_seq, dtype=float)
    if a.size < 1 or np.any(a <= 0.0) or np.any(a > 1.0):
        raise InvalidSpecError("every scale must lie in (0, 1]")
    n = a.size
    # tail[k] = a_{k+1} ... a_N (product of the scales firing after k)
    tail = np.append(np.cumprod(a[::-1])[::-1][1:], 1.0)
    g = tail * (1.0 - a)
    log_prod = float(np.sum(np.log(a)))
    prod = float(np.exp(log_prod))
    if prod == 1.0:
        z = np.full(n, 1.0 / n)
        attracting = False
    else:
        z = g / -np.expm1(log_prod)
        attracting = True
    zz = z.copy()
    for ak in a:
        zz = _gap_event(zz, ak)
    residual = float(np.max(np.abs(zz - z)))
    return FixedPointResult(np.cumsum(z[:-1]), z, residual, "closed_form_heterogeneous", 0,
                            attracting=attracting, contraction=prod)


def _y_event(y, ids, spec):
    """Post-event map on the full y-vector with neuron ids attached.

    The neuron at ``y[0]`` fires (emitter ``ids[0]``) and moves to the end.
    """
    out = np.empty_like(y)
    out[:-1] = _eval_v(spec, ids[0], y[1:] - y[0])
    out[-1] = 1.0
    return out, ids[1:] + ids[:1]


def fixed_point_iterate(spec: InfluenceSpec, n: int, tol: float = 1e-13, max_iters: int = 200_000,
                        start=None, ids=None, engine: str = "map") -> FixedPointResult:
    """Fixed point by iterating the dynamics from ``start``.

    ``start`` holds the interior points ``y_1 < ... < y_{N-1}`` (default
    equally spaced) and ``ids`` the neuron ids by increasing ``y`` including
    the just-fired one (default ``0..N-1``).  ``engine="map"`` iterates the
    exact post-event map in y-coordinates; ``engine="events"`` runs the full
    event engine.  Iteration stops when two post-event y-vectors one
    period apart differ by less than ``tol`` (period 1 for homogeneous
    influence, ``N`` for per-emitter influence).
    """
    if n == 1:
        return FixedPointResult(np.empty(0), np.ones(1), 0.0, "iteration", 0, attracting=None, order=(0,))
    y0 = np.arange(1, n) / n if start is None else np.asarray(start, dtype=float)
    if y0.size != n - 1 or not _in_open_simplex(y0):
        raise UsageError("start must be n-1 points in the open simplex")
    ids = list(range(n)) if ids is None else [int(i) for i in ids]
    period = n if spec.per_emitter else 1
    y = np.append(y0, 1.0)
    if engine == "events":
        x = np.empty(n)
        x[ids] = 1.0 - y
        state = dynamics.PhaseConfiguration.from_phases(x, merge_tol=0.0)
    elif engine != "map":
        raise UsageError(f"unknown engine {engine!r}")

    history = [y]
    it = 0
    converged = False
    while it < max_iters:
        it += 1
        if engine == "map":
            y, ids = _y_event(y, ids, spec)
        else:
            state, _ = dynamics.step(state, spec, event_index=it - 1)
            if state.k != n:
                break
            order = sorted(state.clusters, key=lambda c: -c.x)
            ids = [c.members[0] for c in order]
            y = 1.0 - np.array([c.x for c in order])
        history.append(y)
        if len(history) > period + 1:
            history.pop(0)
        if len(history) == period + 1 and np.max(np.abs(history[-1] - history[0])) < tol:
            converged = True
            break
    y_star = y[:-1].copy()
    contraction = None
    if spec.per_emitter:
        residual = _rotation_residual(y_star, ids, spec)
        if spec.kind == "heterogeneous_linear":
            contraction = float(np.prod(spec.a_per_neuron))
    else:
        residual = _tilde_residual(y_star, spec) if _in_open_simplex(y_star) else float("inf")
    return FixedPointResult(y_star, np.diff(np.concatenate(([0.0], y))), residual, "iteration", it,
                            attracting=_attracting(spec), contraction=contraction,
                            converged=converged, order=tuple(ids))


def _rotation_residual(y_star, ids, spec):
    y = np.append(y_star, 1.0)
    cur, cur_ids = y, list(ids)
    for _ in range(len(ids)):
        cur, cur_ids = _y_event(cur, cur_ids, spec)
    return float(np.max(np.abs(cur - y)))


def fixed_point_hat(spec: InfluenceSpec, n: int, max_iter: int = 200) -> FixedPointResult:
    """Fixed point of the jump-then-shift map by its own shooting bisection.

    Equations: ``y_{N-1} = 1 - V(y_1)`` and ``y_i = V(y_{i+1}) - V(y_1)``.
    """
    if not v_strictly_increasing(spec) or spec.per_emitter:
        raise UsageError("hat fixed point needs a homogeneous, strictly increasing V")
    if n < 2:
        raise UsageError("n must be >= 2")

    def shoot(y1):
        v1 = float(_eval_v(spec, None, np.array(y1)))
        y = np.empty(n - 1)
        y[-1] = 1.0 - v1
        for i in range(n - 3, -1, -1):
            y[i] = max(float(_eval_v(spec, None, np.array(y[i + 1]))) - v1, 0.0)
        return y

    lo, hi = 0.0, 1.0
    it = 0
    while it < max_iter:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        it += 1
        if shoot(mid)[0] - mid > 0.0:
            lo = mid
        else:
            hi = mid
    y1 = min((abs(shoot(v)[0] - v), v) for v in (lo, hi))[1]
    y = shoot(y1)
    y[0] = y1
    residual = float(np.max(np.abs(dynamics.hat_map(np.append(y, 1.0), spec) - np.append(y, 1.0))))
    return FixedPointResult(y, dynamics.to_gaps(y), residual, "bisection", it, attracting=_attracting(spec))


def fixed_point(spec: InfluenceSpec, n: int) -> FixedPointResult:
    """Best available solver: closed form for linear families, else bisection."""
    if spec.kind == "heterogeneous_linear":
        if len(spec.a_per_neuron) != n:
            raise UsageError("a_per_neuron must have n entries")
        return fixed_point_heterogeneous(spec.a_per_neuron)
    if spec.kind in LINEAR_KINDS:
        return fixed_point_linear(_linear_scale(spec), n)
    if n == 1:
        return FixedPointResult(np.empty(0), np.ones(1), 0.0, "bisection", 0)
    return fixed_point_bisection(spec, n)


@dataclass
class TwoParticleReport:
    y_star: float
    two_cycle: bool
    c0_c1: float | None
    even_limit: float
    odd_limit: float
    basin: str        # fixed_point | two_cycle
    iterates: np.ndarray = field(repr=False)


def two_particle_analysis(spec: InfluenceSpec, start: float = 0.5, iters: int = 100,
                          fd_step: float = 1e-6) -> TwoParticleReport:
    """Two neurons: fixed point of ``y -> V(1 - y)`` and the boundary 2-cycle.

    ``iterates[k]`` is the ``k``-th image of ``start`` (``iterates[0] = start``).
    When ``V(0) = 0``, ``V(1) = 1`` and ``V'(0) V'(1) < 1`` the orbit pair
    {0, 1} attracts, and the start is classified by where its even
    iterates go.
    """
    if not v_strictly_increasing(spec) or spec.per_emitter:
        raise UsageError("two-particle analysis needs a homogeneous, strictly increasing V")

    def v(u):
        return float(eval_v(spec, None, min(max(u, 0.0), 1.0)))

    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if mid - v(1.0 - mid) < 0.0:
            lo = mid
        else:
            hi = mid
    y_star = 0.5 * (lo + hi)

    seq = np.empty(iters + 1)
    seq[0] = start
    for k in range(iters):
        seq[k + 1] = v(1.0 - seq[k])

    two_cycle = False
    c0c1 = None
    if abs(v(0.0)) < 1e-12 and abs(v(1.0) - 1.0) < 1e-12:
        c0 = (v(fd_step) - v(0.0)) / fd_step
        c1 = (v(1.0) - v(1.0 - fd_step)) / fd_step
        c0c1 = c0 * c1
        two_cycle = c0c1 < 1.0
    even, odd = float(seq[-1 - (iters % 2)]), float(seq[-1 - ((iters + 1) % 2)])
    in_cycle = two_cycle and min(abs(even), abs(even - 1.0)) < 1e-6
    return TwoParticleReport(y_star, two_cycle, c0c1, even, odd,
                             "two_cycle" if in_cycle else "fixed_point", seq)


@dataclass
class VerificationReport:
    engine_residual: float
    map_residual: float
    agreement: float


def verify_fixed_point(result: FixedPointResult, spec: InfluenceSpec) -> VerificationReport:
    """Push ``y_star`` through both the event engine and the closed-form map.

    Per-emitter influence is checked over a full rotation (``N`` events).
    """
    n = result.n
    if n == 1:
        cfg = dynamics.PhaseConfiguration.from_phases([0.0])
        post, _ = dynamics.step(cfg, spec)
        return VerificationReport(abs(post.phases[0] - 0.0), 0.0, 0.0)
    y = result.y_full()
    ids = list(result.order) if result.order is not None else list(range(n))
    x = np.empty(n)
    x[ids] = 1.0 - y
    state = dynamics.PhaseConfiguration.from_phases(x, merge_tol=0.0)
    map_y, map_ids = y, ids
    for i in range(n if spec.per_emitter else 1):
        state, _ = dynamics.step(state, spec, event_index=i)
        map_y, map_ids = _y_event(map_y, map_ids, spec)
    engine_y = state.y_vector() if state.k == n else np.full(n, np.inf)
    return VerificationReport(float(np.max(np.abs(engine_y - y))),
                              float(np.max(np.abs(map_y - y))),
                              float(np.max(np.abs(engine_y - map_y))))


__all__ = [
    "FixedPointResult", "TwoParticleReport", "VerificationReport",
    "fixed_point", "fixed_point_bisection", "fixed_point_linear", "fixed_point_heterogeneous",
    "fixed_point_iterate", "fixed_point_hat", "two_particle_analysis", "verify_fixed_point",
]
