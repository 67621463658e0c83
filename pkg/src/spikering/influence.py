"""Influence-function families for pulse-coupled neurons on the circle.

A neuron at phase ``x`` that receives a spike jumps to ``W(x) = x + f(x)``.
In the reversed coordinate ``y = 1 - x`` the same jump reads ``y -> V(y)``
with ``V(y) = 1 - W(1 - y)``.  Every family below is evaluated natively in
both coordinates, so ``V`` keeps full relative precision for tiny ``y``.

Two families attach the influence to the emitting neuron: ``heterogeneous_linear``
(one scale per neuron) and ``perturbed_trapezoid`` (one impulse height
``h + xi_i`` per neuron, drawn once with :func:`realize_noise`).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidSpecError, UnsupportedOperationError, UsageError

KINDS = (
    "linear_v",
    "trapezoid",
    "affine_decay",
    "quadratic_decay",
    "linear_dominating_trapezoid",
    "perturbed_trapezoid",
    "heterogeneous_linear",
)
PER_EMITTER = frozenset({"perturbed_trapezoid", "heterogeneous_linear"})
TRAPEZOID_KINDS = frozenset({"trapezoid", "linear_dominating_trapezoid", "perturbed_trapezoid"})
LINEAR_KINDS = frozenset({"linear_v", "affine_decay", "heterogeneous_linear"})

_REQUIRED = {
    "linear_v": ("a",),
    "trapezoid": ("h",),
    "affine_decay": ("beta",),
    "quadratic_decay": ("b0", "b1"),
    "linear_dominating_trapezoid": ("h", "H"),
    "perturbed_trapezoid": ("h", "noise_half_width"),
    "heterogeneous_linear": ("a_per_neuron",),
}
_PARAMS = ("a", "h", "beta", "b0", "b1", "H", "noise_half_width", "a_per_neuron")


@dataclass(frozen=True)
class InfluenceSpec:
    """Immutable parameter set for one influence family.

    Only the fields named by ``kind`` may be set (``epsilon`` is always
    allowed; it feeds :func:`check_contraction_conditions`).  ``xi`` holds the
    realized per-neuron noise of a ``perturbed_trapezoid``.
    """

    kind: str
    a: float | None = None
    h: float | None = None
    beta: float | None = None
    b0: float | None = None
    b1: float | None = None
    H: float | None = None
    noise_half_width: float | None = None
    a_per_neuron: tuple[float, ...] | None = None
    xi: tuple[float, ...] | None = field(default=None, repr=False)
    epsilon: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidSpecError(f"unknown influence kind {self.kind!r}")
        if self.a_per_neuron is not None:
            object.__setattr__(self, "a_per_neuron", tuple(float(v) for v in self.a_per_neuron))
        if self.xi is not None:
            object.__setattr__(self, "xi", tuple(float(v) for v in self.xi))
        required = _REQUIRED[self.kind]
        for name in _PARAMS:
            value = getattr(self, name)
            if name in required and value is None:
                raise InvalidSpecError(f"{self.kind} requires parameter {name!r}")
            if name not in required and value is not None:
                raise InvalidSpecError(f"parameter {name!r} does not apply to {self.kind}")
        if self.xi is not None and self.kind != "perturbed_trapezoid":
            raise InvalidSpecError("xi only applies to perturbed_trapezoid")
        self._check_ranges()

    def _check_ranges(self):
        def need(ok, msg):
            if not ok:
                raise InvalidSpecError(msg)

        k = self.kind
        if k == "linear_v":
            need(0.0 < self.a <= 1.0, f"a must lie in (0, 1], got {self.a}")
        elif k == "affine_decay":
            need(0.0 < self.beta < 1.0, f"beta must lie in (0, 1), got {self.beta}")
        elif k == "quadratic_decay":
            need(np.isfinite(self.b0) and np.isfinite(self.b1), "b0, b1 must be finite")
        elif k == "heterogeneous_linear":
            need(len(self.a_per_neuron) >= 1, "a_per_neuron must be non-empty")
            for i, v in enumerate(self.a_per_neuron):
                need(0.0 < v <= 1.0, f"a_per_neuron[{i}] must lie in (0, 1], got {v}")
        if k in TRAPEZOID_KINDS:
            need(0.0 < self.h < 1.0, f"h must lie in (0, 1), got {self.h}")
        if k == "linear_dominating_trapezoid":
            need(self.h <= self.H <= 1.0, f"H must lie in [h, 1], got {self.H}")
        if k == "perturbed_trapezoid":
            w = self.noise_half_width
            need(w >= 0.0, f"noise_half_width must be >= 0, got {w}")
            need(0.0 < self.h - w and self.h + w < 1.0, "h +/- noise_half_width must stay in (0, 1)")
            if self.xi is not None:
                for i, v in enumerate(self.xi):
                    need(abs(v) <= w, f"xi[{i}]={v} exceeds noise_half_width")
        if self.epsilon is not None:
            need(0.0 < self.epsilon < 1.0, f"epsilon must lie in (0, 1), got {self.epsilon}")

    @property
    def per_emitter(self) -> bool:
        return self.kind in PER_EMITTER

    @property
    def n_emitters(self) -> int | None:
        """Number of distinct emitters, or None for homogeneous kinds."""
        if self.kind == "heterogeneous_linear":
            return len(self.a_per_neuron)
        if self.kind == "perturbed_trapezoid" and self.xi is not None:
            return len(self.xi)
        return None


# -- constructors -----------------------------------------------------------

def linear_v(a, epsilon=None):
    return InfluenceSpec("linear_v", a=a, epsilon=epsilon)


def trapezoid(h):
    return InfluenceSpec("trapezoid", h=h)


def affine_decay(beta, epsilon=None):
    return InfluenceSpec("affine_decay", beta=beta, epsilon=epsilon)


def quadratic_decay(b0, b1, epsilon=None):
    return InfluenceSpec("quadratic_decay", b0=b0, b1=b1, epsilon=epsilon)


def linear_dominating_trapezoid(h, H):
    return InfluenceSpec("linear_dominating_trapezoid", h=h, H=H)


def perturbed_trapezoid(h, noise_half_width, xi=None):
    return InfluenceSpec("perturbed_trapezoid", h=h, noise_half_width=noise_half_width, xi=xi)


def heterogeneous_linear(a_per_neuron):
    return InfluenceSpec("heterogeneous_linear", a_per_neuron=tuple(a_per_neuron))


def realize_noise(spec: InfluenceSpec, n: int, rng: np.random.Generator) -> InfluenceSpec:
    """Draw one impulse perturbation per neuron, uniform on [-w, w].

    Returns ``spec`` unchanged for kinds without per-neuron noise.
    """
    if spec.kind != "perturbed_trapezoid":
        return spec
    w = spec.noise_half_width
    xi = rng.uniform(-w, w, size=n) if w > 0 else np.zeros(n)
    return replace(spec, xi=tuple(xi))


# -- evaluation ---------------------------------------------------------------

def _emitter_param(spec, emitter):
    """Scale ``a`` (linear kinds) or impulse height (trapezoid kinds) seen from ``emitter``."""
    k = spec.kind
    if k in PER_EMITTER:
        if emitter is None:
            raise UsageError(f"{k} needs the emitting neuron id")
        if k == "heterogeneous_linear":
            table = spec.a_per_neuron
        else:
            if spec.xi is None:
                raise UsageError("perturbed_trapezoid noise not realized; call realize_noise()")
            table = spec.xi
        if not 0 <= emitter < len(table):
            raise UsageError(f"emitter {emitter} out of range for {len(table)} neurons")
        if k == "heterogeneous_linear":
            return table[emitter]
        return spec.h + table[emitter]
    if k == "linear_v":
        return spec.a
    if k == "affine_decay":
        return 1.0 - spec.beta
    if k in TRAPEZOID_KINDS:
        return spec.h
    return None


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _out(arr, scalar):
    return float(arr) if scalar else arr


def _check_unit(arr, name):
    if np.any(arr < 0.0) or np.any(arr > 1.0) or np.any(np.isnan(arr)):
        raise UsageError(f"{name} must lie in [0, 1]")


def _dominating_f(spec, x):
    h, H = spec.h, spec.H
    return H + (h - H) * x / (1.0 - h)


def eval_f(spec: InfluenceSpec, emitter, x):
    """Jump size ``f(x)`` received at phase ``x``."""
    x, scalar = _as_array(x)
    _check_unit(x, "x")
    return _out(_eval_f(spec, emitter, x), scalar)


def _eval_f(spec, emitter, x):
    k = spec.kind
    p = _emitter_param(spec, emitter)
    if k in LINEAR_KINDS:
        return (1.0 - p) * (1.0 - x)
    if k == "quadratic_decay":
        return (1.0 - x) * (spec.b0 + spec.b1 * x)
    if k == "linear_dominating_trapezoid":
        return np.where(x < 1.0 - p, _dominating_f(spec, x), 1.0 - x)
    # trapezoid, perturbed_trapezoid
    return np.where(x < 1.0 - p, p, 1.0 - x)


def eval_w(spec: InfluenceSpec, emitter, x):
    """Post-spike phase ``W(x) = x + f(x)``, capped at exactly 1.

    ``emitter`` is the firing neuron id; it is required for per-emitter
    kinds and ignored otherwise.
    """
    x, scalar = _as_array(x)
    _check_unit(x, "x")
    return _out(_eval_w(spec, emitter, x), scalar)


def _eval_w(spec, emitter, x):
    k = spec.kind
    p = _emitter_param(spec, emitter)
    if k in TRAPEZOID_KINDS:
        # the jump to 1 is an assignment, never an addition
        if k == "linear_dominating_trapezoid":
            below = x + _dominating_f(spec, x)
        else:
            below = x + p
        return np.where(x < 1.0 - p, np.minimum(below, 1.0), 1.0)
    return np.minimum(x + _eval_f(spec, emitter, x), 1.0)


def eval_v(spec: InfluenceSpec, emitter, y):
    """Jump in reversed coordinates, ``V(y) = 1 - W(1 - y)``."""
    y, scalar = _as_array(y)
    _check_unit(y, "y")
    return _out(_eval_v(spec, emitter, y), scalar)


def _eval_v(spec, emitter, y):
    k = spec.kind
    p = _emitter_param(spec, emitter)
    if k in LINEAR_KINDS:
        return p * y
    if k == "quadratic_decay":
        return np.maximum(y * (1.0 - spec.b0 - spec.b1 * (1.0 - y)), 0.0)
    if k == "linear_dominating_trapezoid":
        above = y - _dominating_f(spec, 1.0 - y)
    else:
        above = y - p
    return np.where(y > p, np.maximum(above, 0.0), 0.0)


def v_strictly_increasing(spec: InfluenceSpec) -> bool:
    """True when ``V`` is strictly increasing on [0, 1] (so invertible)."""
    if spec.kind in LINEAR_KINDS:
        return True
    if spec.kind == "quadratic_decay":
        c = 1.0 - spec.b0 - spec.b1
        # V'(y) = c + 2 b1 y is linear in y: nonnegative at both ends, not identically 0
        return c >= 0.0 and c + 2.0 * spec.b1 >= 0.0 and not (c == 0.0 and spec.b1 == 0.0)
    return False


def eval_v_inverse(spec: InfluenceSpec, emitter, y):
    """Unique preimage of ``y`` under ``V``; only for strictly increasing ``V``."""
    if not v_strictly_increasing(spec):
        raise UnsupportedOperationError(f"V is not strictly increasing for {spec.kind}")
    y, scalar = _as_array(y)
    _check_unit(y, "y")
    if spec.kind in LINEAR_KINDS:
        out = y / _emitter_param(spec, emitter)
    else:
        c, b1 = 1.0 - spec.b0 - spec.b1, spec.b1
        # root of b1 t^2 + c t - y = 0 in the cancellation-free form
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.where(y > 0.0, 2.0 * y / (c + np.sqrt(c * c + 4.0 * b1 * y)), 0.0)
    return _out(np.minimum(out, 1.0), scalar)


# -- admissibility ------------------------------------------------------------

def emitters(spec: InfluenceSpec):
    """Emitter ids to sweep when checking a spec (``[None]`` if homogeneous)."""
    n = spec.n_emitters
    if n is None:
        if spec.kind == "perturbed_trapezoid":
            raise UsageError("perturbed_trapezoid noise not realized; call realize_noise()")
        return [None]
    return list(range(n))


@dataclass
class AdmissibilityReport:
    monotone_w: bool
    f_bounds: bool
    f_one_zero: bool
    grid_points: int
    witnesses: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.monotone_w and self.f_bounds and self.f_one_zero


def check_admissible(spec: InfluenceSpec, grid_points: int = 10_001, tol: float = 1e-12) -> AdmissibilityReport:
    """Check no-overtaking (monotone W), ``0 <= f <= 1 - x`` and ``f(1) = 0`` on a grid.

    Failures carry a witness ``(emitter, x)`` in ``witnesses``.
    """
    if spec.kind == "perturbed_trapezoid" and spec.xi is None:
        w = spec.noise_half_width
        probes = [perturbed_trapezoid(spec.h, w, xi=(-w, 0.0, w))]
    else:
        probes = [spec]
    x = np.linspace(0.0, 1.0, grid_points)
    report = AdmissibilityReport(True, True, True, grid_points)
    for s in probes:
        for e in emitters(s):
            f = _eval_f(s, e, x)
            w = x + f
            drops = np.flatnonzero(np.diff(w) < -tol)
            if drops.size and report.monotone_w:
                report.monotone_w = False
                report.witnesses["monotone_w"] = (e, float(x[drops[0]]))
            bad = np.flatnonzero((f < -tol) | (f > 1.0 - x + tol))
            if bad.size and report.f_bounds:
                report.f_bounds = False
                report.witnesses["f_bounds"] = (e, float(x[bad[0]]))
            f1 = float(_eval_f(s, e, np.array(1.0)))
            if abs(f1) > tol and report.f_one_zero:
                report.f_one_zero = False
                report.witnesses["f_one_zero"] = (e, 1.0)
    return report


@dataclass
class ContractionReport:
    epsilon: float
    between_linear: bool     # eps (1 - x) < f(x) < 1 - x on (0, 1)
    slope_bounds: bool       # -1 + eps < f'(x) < -eps
    bounded_curvature: bool  # |f''| <= curvature_bound
    vanishes_at_one: bool    # f(1) = 0
    step: float
    witnesses: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.between_linear and self.slope_bounds and self.bounded_curvature and self.vanishes_at_one


def check_contraction_conditions(
    spec: InfluenceSpec,
    epsilon: float | None = None,
    step: float = 1e-4,
    tol: float = 1e-6,
    curvature_bound: float = 1e3,
) -> ContractionReport:
    """Grid check of the four smooth-decay conditions for exponential convergence.

    Derivatives are central finite differences with spacing ``step``;
    ``tol`` is the allowed ``|f(1)|``.
    """
    eps = spec.epsilon if epsilon is None else epsilon
    if eps is None:
        raise UsageError("epsilon must be given or set on the influence")
    m = int(round(1.0 / step))
    x = np.arange(1, m) * step
    report = ContractionReport(eps, True, True, True, True, step)

    def fail(name, e, at):
        if getattr(report, name):
            setattr(report, name, False)
            report.witnesses[name] = (e, float(at))

    for e in emitters(spec):
        f = _eval_f(spec, e, x)
        bad = np.flatnonzero(~((eps * (1.0 - x) < f) & (f < 1.0 - x)))
        if bad.size:
            fail("between_linear", e, x[bad[0]])
        fp = _eval_f(spec, e, np.minimum(x + step, 1.0))
        fm = _eval_f(spec, e, np.maximum(x - step, 0.0))
        d1 = (fp - fm) / (2.0 * step)
        bad = np.flatnonzero(~((-1.0 + eps < d1) & (d1 < -eps)))
        if bad.size:
            fail("slope_bounds", e, x[bad[0]])
        d2 = (fp - 2.0 * f + fm) / step**2
        bad = np.flatnonzero(np.abs(d2) > curvature_bound)
        if bad.size:
            fail("bounded_curvature", e, x[bad[0]])
        if abs(float(_eval_f(spec, e, np.array(1.0)))) > tol:
            fail("vanishes_at_one", e, 1.0)
    return report
