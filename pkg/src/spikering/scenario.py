"""Scenario files, deterministic seeding, output artifacts and sweeps.

A scenario is a JSON object validated against :data:`SCENARIO_SCHEMA`.
Seeds are unsigned 64-bit integers; every random stream is a
``numpy.random.PCG64`` generator seeded with :func:`derive_seed`, which
mixes the scenario seed and a stream key through SplitMix64.
"""
from __future__ import annotations

import copy
import csv
import dataclasses
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from . import analysis, dynamics, solvers
from .dynamics import PhaseConfiguration, RunLimits, Tolerances, Trajectory
from .errors import InvalidSpecError, ScenarioError, SpikeRingError, UsageError
from .influence import (
    KINDS,
    TRAPEZOID_KINDS,
    InfluenceSpec,
    realize_noise,
    v_strictly_increasing,
)

U64 = (1 << 64) - 1

# stream keys for derive_seed
STREAM_INITIAL = 1
STREAM_NOISE = 2


# -- seeding -------------------------------------------------------------------

def splitmix64(x: int) -> int:
    """One SplitMix64 output for state ``x`` (Steele, Lea and Flood 2014)."""
    x = (x + 0x9E3779B97F4A7C15) & U64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & U64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & U64
    return x ^ (x >> 31)


def derive_seed(seed: int, *keys: int) -> int:
    """Fold ``keys`` into ``seed``; distinct key paths give unrelated seeds."""
    state = seed & U64
    for key in keys:
        state = splitmix64(state ^ splitmix64(key & U64))
    return state


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


# -- schema ------------------------------------------------------------------

_unit_open = {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}
_unit_half = {"type": "number", "exclusiveMinimum": 0, "maximum": 1}
_positive = {"type": "number", "exclusiveMinimum": 0}

_KIND_RULES = {
    "linear_v": {"a": _unit_half},
    "trapezoid": {"h": _unit_open},
    "affine_decay": {"beta": _unit_open},
    "quadratic_decay": {"b0": {"type": "number"}, "b1": {"type": "number"}},
    "linear_dominating_trapezoid": {"h": _unit_open, "H": _unit_half},
    "perturbed_trapezoid": {"h": _unit_open, "noise_half_width": {"type": "number", "minimum": 0}},
    "heterogeneous_linear": {"a_per_neuron": {"type": "array", "minItems": 1, "items": _unit_half}},
}
_ALL_PARAMS = ("a", "h", "beta", "b0", "b1", "H", "noise_half_width", "a_per_neuron")

ANALYSES = ("classify", "fixed_point", "rate", "gap_audit")


def _influence_schema():
    branches = []
    for kind, rules in _KIND_RULES.items():
        forbidden = [p for p in _ALL_PARAMS if p not in rules]
        branches.append({
            "if": {"properties": {"kind": {"const": kind}}},
            "then": {
                "required": list(rules),
                "properties": {**rules, **{p: {"not": {}} for p in forbidden}},
            },
        })
    return {
        "type": "object",
        "required": ["kind"],
        "additionalProperties": False,
        "properties": {
            "kind": {"enum": list(KINDS)},
            **{p: True for p in _ALL_PARAMS},
            "epsilon": _unit_open,
        },
        "allOf": branches,
    }


SCENARIO_SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["n", "influence"],
    "additionalProperties": False,
    "properties": {
        "id": {"type": "string", "minLength": 1},
        "n": {"type": "integer", "minimum": 1},
        "influence": _influence_schema(),
        "initial": {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["uniform_random", "explicit", "equally_spaced"]},
                "phases": {"type": "array", "items": {"type": "number", "minimum": 0, "exclusiveMaximum": 1}},
                "seed": {"type": "integer", "minimum": 0, "maximum": U64},
            },
            "allOf": [
                {"if": {"properties": {"kind": {"const": "explicit"}}},
                 "then": {"required": ["phases"]},
                 "else": {"properties": {"phases": {"not": {}}}}},
            ],
        },
        "run": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "max_events": {"type": "integer", "minimum": 1},
                "stop_on_stationary": {"type": "boolean"},
                "stop_on_single_cluster": {"type": "boolean"},
            },
        },
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"merge": _positive, "fire": _positive},
        },
        "seed": {"type": "integer", "minimum": 0, "maximum": U64},
        "analysis": {"type": "array", "items": {"enum": list(ANALYSES)}, "uniqueItems": True},
        "measure": {
            "type": "object",
            "required": ["regime"],
            "additionalProperties": False,
            "properties": {
                "regime": {"enum": list(analysis.REGIMES)},
                "alpha": _positive,
                "eta": _unit_open,
                "cdf_points": {"type": "integer", "minimum": 2},
            },
        },
    },
}

SWEEP_SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["base"],
    "additionalProperties": False,
    "properties": {
        "base": {"type": "object"},
        "axes": {"type": "object", "additionalProperties": {"type": "array", "minItems": 1}},
        "seeds_per_cell": {"type": "integer", "minimum": 1},
        "master_seed": {"type": "integer", "minimum": 0, "maximum": U64},
        "cell_seeds": {"type": "object", "additionalProperties": {"type": "integer", "minimum": 0, "maximum": U64},
                       "propertyNames": {"pattern": "^[0-9]+$"}},
    },
}

_validator = jsonschema.Draft202012Validator(SCENARIO_SCHEMA)
_sweep_validator = jsonschema.Draft202012Validator(SWEEP_SCHEMA)


def _pointer(path) -> str:
    return "".join(f"/{p}" for p in path)


def _schema_errors(validator, data, prefix=""):
    errs = sorted(validator.iter_errors(data), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    out = []
    for e in errs:
        msg = "field not allowed for this kind" if e.validator == "not" else e.message
        out.append((prefix + _pointer(e.absolute_path), msg))
    return out


# -- config types ---------------------------------------------------------------

@dataclass(frozen=True)
class InitialCondition:
    kind: str = "equally_spaced"
    phases: tuple[float, ...] | None = None
    seed: int | None = None


@dataclass(frozen=True)
class MeasureConfig:
    regime: str
    alpha: float | None = None
    eta: float = 0.05
    cdf_points: int | None = None


@dataclass(frozen=True)
class ScenarioConfig:
    n: int
    influence: InfluenceSpec
    id: str = "scenario"
    initial: InitialCondition = InitialCondition()
    run: RunLimits = RunLimits()
    tolerances: Tolerances = Tolerances()
    seed: int = 0
    analysis: tuple[str, ...] | None = None
    measure: MeasureConfig | None = None

    def analyses(self) -> tuple[str, ...]:
        """Requested analyses, or the defaults for the influence kind."""
        if self.analysis is not None:
            return self.analysis
        return ("classify",) if self.influence.kind in TRAPEZOID_KINDS else ("fixed_point",)


def _load_json(text):
    if isinstance(text, (bytes, bytearray)):
        text = text.decode("utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError([("", f"invalid JSON: {exc}")]) from None


def scenario_from_dict(data: Any, prefix: str = "") -> ScenarioConfig:
    errors = _schema_errors(_validator, data, prefix)
    if errors:
        raise ScenarioError(errors)
    n = data["n"]
    inf = dict(data["influence"])
    if "a_per_neuron" in inf and len(inf["a_per_neuron"]) != n:
        errors.append((prefix + "/influence/a_per_neuron",
                       f"arity: expected {n} entries (one per neuron), got {len(inf['a_per_neuron'])}"))
    init = data.get("initial", {"kind": "equally_spaced"})
    if init["kind"] == "explicit":
        ph = init["phases"]
        if len(ph) != n:
            errors.append((prefix + "/initial/phases", f"arity: expected {n} phases, got {len(ph)}"))
        if any(b < a for a, b in zip(ph, ph[1:])):
            errors.append((prefix + "/initial/phases", "phases must be sorted"))
    if errors:
        raise ScenarioError(errors)
    try:
        spec = InfluenceSpec(**inf)
    except InvalidSpecError as exc:
        raise ScenarioError([(prefix + "/influence", str(exc))]) from None
    run = data.get("run", {})
    tol = data.get("tolerances", {})
    meas = data.get("measure")
    if meas is not None:
        if meas["regime"] == "density_alpha" and "alpha" not in meas:
            raise ScenarioError([(prefix + "/measure/alpha", "density_alpha needs alpha")])
        meas = MeasureConfig(meas["regime"], meas.get("alpha"), meas.get("eta", 0.05), meas.get("cdf_points"))
    return ScenarioConfig(
        n=n,
        influence=spec,
        id=data.get("id", "scenario"),
        initial=InitialCondition(init["kind"],
                                 tuple(float(p) for p in init["phases"]) if "phases" in init else None,
                                 init.get("seed")),
        run=RunLimits(run.get("max_events", RunLimits.max_events),
                      run.get("stop_on_stationary", True), run.get("stop_on_single_cluster", True)),
        tolerances=Tolerances(tol.get("fire", Tolerances.fire), tol.get("merge", Tolerances.merge)),
        seed=data.get("seed", 0),
        analysis=tuple(data["analysis"]) if "analysis" in data else None,
        measure=meas,
    )


def parse_scenario(text) -> ScenarioConfig:
    """Parse and validate scenario JSON.

    Raises :class:`ScenarioError` whose ``errors`` list pairs a JSON
    pointer (``/influence/h``) with a message.  Unknown fields are errors.
    """
    return scenario_from_dict(_load_json(text))


def scenario_to_dict(cfg: ScenarioConfig) -> dict:
    spec = cfg.influence
    inf = {"kind": spec.kind}
    for p in (*_ALL_PARAMS, "epsilon"):
        v = getattr(spec, p)
        if v is not None:
            inf[p] = list(v) if isinstance(v, tuple) else v
    init = {"kind": cfg.initial.kind}
    if cfg.initial.phases is not None:
        init["phases"] = list(cfg.initial.phases)
    if cfg.initial.seed is not None:
        init["seed"] = cfg.initial.seed
    out = {
        "id": cfg.id,
        "n": cfg.n,
        "influence": inf,
        "initial": init,
        "run": {"max_events": cfg.run.max_events, "stop_on_stationary": cfg.run.stop_on_stationary,
                "stop_on_single_cluster": cfg.run.stop_on_single_cluster},
        "tolerances": {"merge": cfg.tolerances.merge, "fire": cfg.tolerances.fire},
        "seed": cfg.seed,
    }
    if cfg.analysis is not None:
        out["analysis"] = list(cfg.analysis)
    if cfg.measure is not None:
        m = {"regime": cfg.measure.regime, "eta": cfg.measure.eta}
        if cfg.measure.alpha is not None:
            m["alpha"] = cfg.measure.alpha
        if cfg.measure.cdf_points is not None:
            m["cdf_points"] = cfg.measure.cdf_points
        out["measure"] = m
    return out


def dump_scenario(cfg: ScenarioConfig) -> str:
    return json.dumps(scenario_to_dict(cfg), indent=2, sort_keys=True)


# -- running -------------------------------------------------------------------

def initial_configuration(cfg: ScenarioConfig) -> PhaseConfiguration:
    init = cfg.initial
    if init.kind == "equally_spaced":
        phases = np.arange(cfg.n) / cfg.n
    elif init.kind == "explicit":
        phases = np.array(init.phases)
    else:
        seed = init.seed if init.seed is not None else derive_seed(cfg.seed, STREAM_INITIAL)
        phases = make_rng(seed).random(cfg.n)
    return PhaseConfiguration.from_phases(phases, merge_tol=cfg.tolerances.merge)


def realized_spec(cfg: ScenarioConfig) -> InfluenceSpec:
    """The influence with per-neuron noise drawn from the scenario seed."""
    return realize_noise(cfg.influence, cfg.n, make_rng(derive_seed(cfg.seed, STREAM_NOISE)))


def simulate(cfg: ScenarioConfig) -> Trajectory:
    return dynamics.run(initial_configuration(cfg), realized_spec(cfg), cfg.run, cfg.tolerances,
                        scenario_id=cfg.id, seed=cfg.seed)


def _f17(x: float) -> str:
    if not math.isfinite(x):
        raise InvalidSpecError(f"non-finite value {x} in output")
    s = format(x, ".17g")
    return s if any(c in s for c in ".en") else s + ".0"


def _ids(ms) -> str:
    return "[" + ",".join(str(m) for m in ms) + "]"


def event_line(ev: dynamics.EventRecord) -> str:
    """One JSONL record with floats at 17 significant digits."""
    merges = ",".join(f"[{_ids(a)},{_ids(b)}]" for a, b in ev.merge_events)
    clusters = ",".join(f'{{"m":{c.size},"x":{_f17(c.x)}}}' for c in ev.post_state.clusters)
    return (f'{{"event":{ev.event_index},"t":{_f17(ev.time)},"fired":{_ids(ev.fired_members)},'
            f'"merges":[{merges}],"clusters":[{clusters}],"cascade_depth":{ev.cascade_depth}}}')


EVENT_CSV_HEADER = ("event", "t", "fired", "k", "sizes", "phases", "cascade_depth")


def event_row(ev: dynamics.EventRecord) -> list[str]:
    st = ev.post_state
    return [str(ev.event_index), _f17(ev.time), " ".join(map(str, ev.fired_members)), str(st.k),
            " ".join(map(str, st.sizes)), " ".join(_f17(c.x) for c in st.clusters), str(ev.cascade_depth)]


def write_events(traj: Trajectory, path: Path, fmt: str = "jsonl") -> Path:
    path = Path(path)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            if fmt == "jsonl":
                for ev in traj.events:
                    fh.write(event_line(ev) + "\n")
            elif fmt == "csv":
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(EVENT_CSV_HEADER)
                for ev in traj.events:
                    w.writerow(event_row(ev))
            else:
                raise UsageError(f"unknown format {fmt!r}")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc
    return path


def jsonable(obj):
    """Plain JSON types from nested dataclasses, tuples and numpy scalars."""
    if dataclasses.is_dataclass(obj):
        return jsonable(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def write_json(obj, path: Path) -> Path:
    path = Path(path)
    try:
        path.write_text(json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc
    return path


def _fixed_point_for(spec: InfluenceSpec, n: int):
    """Fixed point as a function of the neuron order (ids by increasing y)."""
    if spec.kind == "heterogeneous_linear":
        a = np.array(spec.a_per_neuron)
        return lambda order: solvers.fixed_point_heterogeneous(a[list(order)]).y_star
    y = solvers.fixed_point(spec, n).y_star
    return lambda order: y


def _summary_base(cfg: ScenarioConfig, traj: Trajectory) -> dict:
    fin = traj.final
    return {
        "id": cfg.id,
        "seed": cfg.seed,
        "n": cfg.n,
        "influence": scenario_to_dict(cfg)["influence"],
        "termination": traj.termination,
        "events": len(traj.events),
        "final": {"k": fin.k, "sizes": list(fin.sizes), "phases": [float(x) for x in fin.phases]},
    }


def _classification(cfg, spec, traj):
    if spec.kind not in TRAPEZOID_KINDS:
        return None
    if traj.termination not in ("stationary", "single_cluster"):
        return {"classification": None, "reason": f"not terminated ({traj.termination})"}
    return analysis.classify_terminal(traj, spec.h, cfg.n).to_dict()


def summarize(cfg: ScenarioConfig, traj: Trajectory, spec: InfluenceSpec | None = None,
              analyses: tuple[str, ...] | None = None) -> dict:
    """Summary JSON for a finished trajectory: terminal verdict and requested analyses."""
    spec = realized_spec(cfg) if spec is None else spec
    analyses = cfg.analyses() if analyses is None else analyses
    out = _summary_base(cfg, traj)
    if spec.kind == "perturbed_trapezoid":
        out["xi"] = list(spec.xi)
    out["classification"] = None
    if "classify" in analyses or spec.kind in TRAPEZOID_KINDS:
        rep = _classification(cfg, spec, traj)
        if rep is not None:
            out["terminal"] = rep
            out["classification"] = rep["classification"]
    if "gap_audit" in analyses and spec.kind == "trapezoid":
        a = analysis.gap_audit(traj, spec.h)
        out["gap_audit"] = {"rotations_checked": a.rotations_checked, "max_error": a.max_error,
                            "violations": a.violations, "merged": a.merged, "events_to_merge": a.events_to_merge}
    isolated = traj.final.k == cfg.n and cfg.n > 1
    fp_ok = spec.kind not in TRAPEZOID_KINDS and v_strictly_increasing(spec)
    if ("fixed_point" in analyses or "rate" in analyses) and fp_ok and isolated:
        fp = _fixed_point_for(spec, cfg.n)
        y, order = analysis.aligned_y(traj.final)
        ref = fp(order)
        out["fixed_point"] = {"y_star": [float(v) for v in ref], "order": list(order),
                              "distance": float(np.max(np.abs(y - ref)))}
        if "rate" in analyses:
            stride = cfg.n if spec.per_emitter else 1
            out["rate"] = analysis.convergence_rate(traj, fp, stride=stride).to_dict()
    return out


@dataclass
class ScenarioResult:
    trajectory: Trajectory | None
    summary: dict
    paths: dict = field(default_factory=dict)


def run_scenario(cfg: ScenarioConfig, out_dir=None, fmt: str = "jsonl",
                 analyses: tuple[str, ...] | None = None) -> ScenarioResult:
    """Simulate, write the event log and ``summary.json`` into ``out_dir``.

    Output is byte-identical for identical configs.
    """
    spec = realized_spec(cfg)
    traj = dynamics.run(initial_configuration(cfg), spec, cfg.run, cfg.tolerances,
                        scenario_id=cfg.id, seed=cfg.seed)
    summary = summarize(cfg, traj, spec, analyses)
    paths = {}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths["events"] = write_events(traj, out / f"events.{fmt}", fmt)
        paths["summary"] = write_json(summary, out / "summary.json")
    return ScenarioResult(traj, summary, paths)


def solve_scenario(cfg: ScenarioConfig, out_dir=None) -> ScenarioResult:
    """Fixed point of the scenario's influence at size ``n`` plus independent checks."""
    spec = cfg.influence
    if spec.kind == "perturbed_trapezoid":
        spec = realized_spec(cfg)
    res = solvers.fixed_point(spec, cfg.n)
    summary = {"id": cfg.id, "n": cfg.n, "influence": scenario_to_dict(cfg)["influence"], **res.to_dict()}
    if cfg.n > 1:
        ver = solvers.verify_fixed_point(res, spec)
        summary["verification"] = {"engine_residual": ver.engine_residual, "map_residual": ver.map_residual}
    if cfg.n == 2 and not spec.per_emitter and v_strictly_increasing(spec):
        tp = solvers.two_particle_analysis(spec)
        summary["two_particle"] = {"y_star": tp.y_star, "two_cycle": tp.two_cycle, "c0_c1": tp.c0_c1,
                                   "even_limit": tp.even_limit, "odd_limit": tp.odd_limit, "basin": tp.basin}
    paths = {}
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        paths["summary"] = write_json(summary, Path(out_dir) / "summary.json")
    return ScenarioResult(None, summary, paths)


def measure_scenario(cfg: ScenarioConfig, out_dir=None) -> ScenarioResult:
    """Compare the fixed point's empirical measure with the configured regime."""
    if cfg.measure is None:
        raise UsageError("scenario has no 'measure' block")
    m = cfg.measure
    res = solvers.fixed_point(cfg.influence, cfg.n)
    rep = analysis.regime_compare(res.y_star, m.regime, m.alpha, m.eta)
    summary = {"id": cfg.id, "n": cfg.n, "influence": scenario_to_dict(cfg)["influence"],
               "measure": rep.to_dict(), "method": res.method, "residual": res.residual}
    paths = {}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths["summary"] = write_json(summary, out / "summary.json")
        if m.cdf_points:
            table = analysis.cdf_table(res.y_star, m.cdf_points)
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(["y", "F"])
            for y, f in table:
                w.writerow([_f17(y), _f17(f)])
            paths["cdf"] = out / "cdf.csv"
            paths["cdf"].write_text(buf.getvalue(), encoding="utf-8")
    return ScenarioResult(None, summary, paths)


# -- sweeps --------------------------------------------------------------------

@dataclass(frozen=True)
class SweepConfig:
    base: dict
    axes: dict = field(default_factory=dict)
    seeds_per_cell: int = 1
    master_seed: int = 0
    cell_seeds: dict = field(default_factory=dict)   # cell index -> seed override

    def cells(self) -> list[dict]:
        """Axis assignments in lexicographic order of value indices (first axis slowest)."""
        names = list(self.axes)
        out = [{}]
        for name in names:
            out = [{**c, name: v} for c in out for v in self.axes[name]]
        return out

    def cell_seed(self, cell: int) -> int:
        return self.cell_seeds.get(cell, derive_seed(self.master_seed, cell))


def _known_path(path: str) -> bool:
    node = SCENARIO_SCHEMA
    for part in path.split("."):
        props = node.get("properties", {}) if isinstance(node, dict) else {}
        if part not in props:
            return False
        node = props[part]
        if node is True:
            node = {}
    return True


def parse_sweep(text) -> SweepConfig:
    data = _load_json(text)
    errors = _schema_errors(_sweep_validator, data)
    if errors:
        raise ScenarioError(errors)
    for name in data.get("axes", {}):
        if not _known_path(name) or name == "seed":
            errors.append((f"/axes/{name}", "axis does not name a scenario field"))
    if errors:
        raise ScenarioError(errors)
    probe = copy.deepcopy(data["base"])
    for name, values in data.get("axes", {}).items():
        _set_path(probe, name, values[0])
    probe.setdefault("seed", 0)
    errors = _schema_errors(_validator, probe, "/base")
    if errors:
        raise ScenarioError(errors)
    return SweepConfig(data["base"], data.get("axes", {}), data.get("seeds_per_cell", 1),
                       data.get("master_seed", 0), {int(k): v for k, v in data.get("cell_seeds", {}).items()})


def _set_path(d: dict, path: str, value):
    parts = path.split(".")
    for p in parts[:-1]:
        d = d.setdefault(p, {})
    d[parts[-1]] = value


SWEEP_COLUMNS = ("cell", "seed_index", "seed", "params", "k", "events", "termination",
                 "classification", "prod_a", "contraction", "error")


def _run_cell(job) -> list[dict]:
    sweep, cell, params = job
    rows = []
    cell_seed = sweep.cell_seed(cell)
    data = copy.deepcopy(sweep.base)
    for name, value in params.items():
        _set_path(data, name, value)
    for s in range(sweep.seeds_per_cell):
        seed = derive_seed(cell_seed, s)
        row = dict.fromkeys(SWEEP_COLUMNS)
        row.update(cell=cell, seed_index=s, seed=seed, params=params)
        try:
            cfg = scenario_from_dict({**data, "seed": seed})
            res = run_scenario(cfg, analyses=("classify", "rate") if cfg.influence.kind == "heterogeneous_linear"
                               else None)
            row.update(k=res.trajectory.final.k, events=len(res.trajectory.events),
                       termination=res.trajectory.termination,
                       classification=res.summary.get("classification"))
            if cfg.influence.kind == "heterogeneous_linear":
                row["prod_a"] = float(np.prod(cfg.influence.a_per_neuron))
                rate = res.summary.get("rate")
                if rate:
                    row["contraction"] = rate["per_rotation_contraction"]
        except ScenarioError as exc:
            row["error"] = "; ".join(f"{p or '/'}: {m}" for p, m in exc.errors)
        except (SpikeRingError, ValueError, ArithmeticError) as exc:
            row["error"] = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    return rows


def sweep_workers() -> int:
    env = os.environ.get("SPIKERING_THREADS")
    cpus = os.cpu_count() or 1
    if env:
        try:
            return max(1, min(int(env), cpus))
        except ValueError:
            raise UsageError(f"SPIKERING_THREADS must be an integer, got {env!r}") from None
    return cpus


def run_sweep(sweep: SweepConfig, workers: int | None = None) -> list[dict]:
    """One row per (cell, seed), ordered by cell then seed index.

    Cell ``c`` uses seed ``derive_seed(master_seed, c)`` (or its override)
    and seed index ``s`` within it ``derive_seed(cell_seed, s)``, so changing
    one cell's seed leaves every other row untouched.
    """
    jobs = [(sweep, c, params) for c, params in enumerate(sweep.cells())]
    workers = sweep_workers() if workers is None else workers
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            chunks = list(pool.map(_run_cell, jobs))
    else:
        chunks = [_run_cell(j) for j in jobs]
    return [row for chunk in chunks for row in chunk]


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return _f17(v)
    if isinstance(v, (dict, list)):
        return json.dumps(v, sort_keys=True, separators=(",", ":"))
    return str(v)


def write_sweep(rows: list[dict], path: Path, fmt: str = "csv") -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if fmt == "csv":
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SWEEP_COLUMNS)
            for r in rows:
                w.writerow([_cell(r[c]) for c in SWEEP_COLUMNS])
        elif fmt == "jsonl":
            for r in rows:
                fh.write(json.dumps({c: r[c] for c in SWEEP_COLUMNS}, sort_keys=True) + "\n")
        else:
            raise UsageError(f"unknown format {fmt!r}")
    return path
