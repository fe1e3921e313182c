"""Derivative-free search over control parameters for squeezing objectives.

A SearchSpec names a scalar objective, a template configuration and the
parameters allowed to vary inside box bounds.  Optimization is seeded
Latin-hypercube multistart around Nelder-Mead; infeasible or singular
configurations are penalized with +inf so the simplex can retreat from
them, and the returned optimum is the best point ever evaluated.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Union

import numpy as np
from scipy import optimize as sp_optimize
from scipy.stats import qmc

from .errors import (
    AtomSqueezeError,
    ExceptionalCase,
    InvalidConfig,
    InvalidPoint,
    NoFeasiblePoint,
)
from .model import (
    ControlConfig,
    atomic_squeezing,
    config_from_dict,
    parse_angle,
)
from .dynamics import is_exceptional, steady_state
from .spectrum import sigma2, spectrum_minimum, spectrum_value

FREE_PARAMETER_NAMES = (
    "omega_rabi", "delta_omega", "theta1", "theta2", "c", "phi",
    "alpha1_sq", "alpha2_sq",
)
ANGLE_PARAMETERS = ("theta1", "theta2", "phi")
OBJECTIVES = ("spectrum_at_mu", "spectrum_min", "atomic_squeezing_eq", "sigma2")


@dataclass
class SearchSpec:
    """What to minimize, over which parameters, from which template."""

    objective: Union[str, Callable]
    template: ControlConfig
    free_parameters: "dict[str, tuple[float, float]]"
    channel: int = 1
    mu0: float = 0.0
    multistart: int = 32
    extra_starts: list = field(default_factory=list)
    seed: int = 0
    tolerance: float = 1e-8

    def __post_init__(self):
        if isinstance(self.objective, str) and self.objective not in OBJECTIVES:
            raise InvalidConfig(
                f"unknown objective {self.objective!r}; "
                f"expected one of {', '.join(OBJECTIVES)} or a callable"
            )
        if not self.free_parameters:
            raise InvalidConfig("free_parameters must not be empty")
        for name, bounds in self.free_parameters.items():
            if name not in FREE_PARAMETER_NAMES:
                raise InvalidConfig(
                    f"{name!r} is not a searchable parameter; "
                    f"allowed: {', '.join(FREE_PARAMETER_NAMES)}"
                )
            lo, hi = bounds
            if not lo < hi:
                raise InvalidConfig(f"bounds for {name} must satisfy lo < hi")
        if self.channel not in (1, 2):
            raise InvalidConfig(f"channel must be 1 or 2, got {self.channel}")
        if self.multistart < 0:
            raise InvalidConfig("multistart must be >= 0")
        if self.multistart + len(self.extra_starts) < 1:
            raise InvalidConfig("need at least one start point")
        for start in self.extra_starts:
            missing = set(self.free_parameters) - set(start)
            if missing:
                raise InvalidConfig(
                    f"extra start is missing parameters: {sorted(missing)}"
                )

    @property
    def parameter_names(self):
        return tuple(self.free_parameters)


@dataclass
class SearchResult:
    point: dict
    value: float
    trace: list  # dicts: start, point, value, feasible

    def to_json(self, path=None):
        payload = {
            "best_point": self.point,
            "best_value": self.value,
            "n_evaluations": len(self.trace),
            "trace": self.trace,
        }
        if path is None:
            return payload
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
        return payload


def _wrap_angle(value: float) -> float:
    return float((value + np.pi) % (2 * np.pi) - np.pi)


def _point_dict(spec: SearchSpec, point) -> dict:
    if isinstance(point, Mapping):
        missing = set(spec.parameter_names) - set(point)
        if missing:
            raise InvalidPoint(f"point is missing parameters: {sorted(missing)}")
        return {name: float(point[name]) for name in spec.parameter_names}
    values = list(point)
    if len(values) != len(spec.parameter_names):
        raise InvalidPoint(
            f"point has {len(values)} coordinates, spec has "
            f"{len(spec.parameter_names)} free parameters"
        )
    return {name: float(v) for name, v in zip(spec.parameter_names, values)}


def _config_at(spec: SearchSpec, params: dict) -> ControlConfig:
    """Template updated with the point; angles wrapped, channel fractions
    rebalanced through the unobserved channel when splits are free."""
    updates = {}
    for name, value in params.items():
        updates[name] = _wrap_angle(value) if name in ANGLE_PARAMETERS else value
    cfg = replace(spec.template, **updates)
    if "alpha1_sq" in params or "alpha2_sq" in params:
        rest = 1.0 - cfg.alpha1_sq - cfg.alpha2_sq
        if rest < -1e-12:
            raise InvalidPoint(
                f"channel fractions exceed 1 by {-rest:.3g} at {params}"
            )
        cfg = replace(cfg, alpha0_sq=max(rest, 0.0))
    return cfg


def _objective_value(spec: SearchSpec, cfg: ControlConfig, params: dict) -> float:
    if callable(spec.objective):
        return float(spec.objective(cfg, params))
    if spec.objective == "spectrum_at_mu":
        return spectrum_value(cfg, spec.channel, spec.mu0)
    if spec.objective == "spectrum_min":
        return spectrum_minimum(cfg, spec.channel)[1]
    if spec.objective == "atomic_squeezing_eq":
        return atomic_squeezing(steady_state(cfg))
    return sigma2(cfg)


def evaluate_objective(spec: SearchSpec, point) -> float:
    """Scalar objective at one point.

    Bound violations and invalid configurations raise InvalidPoint; a
    point on the singular det A = 0 manifold evaluates to +inf so that
    callers can treat it as infinitely bad without exception handling.
    """
    params = _point_dict(spec, point)
    for name, value in params.items():
        if name in ANGLE_PARAMETERS:
            continue
        lo, hi = spec.free_parameters[name]
        if not lo <= value <= hi:
            raise InvalidPoint(f"{name} = {value} outside bounds [{lo}, {hi}]")
    try:
        cfg = _config_at(spec, params)
    except InvalidConfig as exc:
        raise InvalidPoint(str(exc)) from None
    try:
        if not callable(spec.objective) and is_exceptional(cfg):
            return math.inf
        return float(_objective_value(spec, cfg, params))
    except ExceptionalCase:
        return math.inf


def _start_points(spec: SearchSpec) -> np.ndarray:
    names = spec.parameter_names
    lows = np.array([spec.free_parameters[n][0] for n in names])
    highs = np.array([spec.free_parameters[n][1] for n in names])
    rows = []
    if spec.multistart > 0:
        sampler = qmc.LatinHypercube(d=len(names), seed=spec.seed)
        unit = sampler.random(spec.multistart)
        rows.append(qmc.scale(unit, lows, highs))
    for start in spec.extra_starts:
        rows.append(np.array([[float(start[n]) for n in names]]))
    return np.vstack(rows)


def optimize(spec: SearchSpec) -> SearchResult:
    """Multistart Nelder-Mead minimization of the objective.

    Every evaluated point lands in the trace, and the reported optimum is
    the best entry overall, so the result can never be worse than the
    best initial sample.  Ties resolve to the lowest start index, making
    the merge independent of execution order.  Raises NoFeasiblePoint if
    no start ever produced a finite value.
    """
    names = spec.parameter_names
    starts = _start_points(spec)
    trace = []

    def make_wrapped(start_index):
        def wrapped(x):
            params = {n: float(v) for n, v in zip(names, x)}
            try:
                value = evaluate_objective(spec, params)
            except (InvalidPoint, AtomSqueezeError):
                value = math.inf
            trace.append({
                "start": start_index,
                "point": params,
                "value": value if math.isfinite(value) else None,
                "feasible": math.isfinite(value),
            })
            return value
        return wrapped

    d = len(names)
    for si, x0 in enumerate(starts):
        wrapped = make_wrapped(si)
        with warnings.catch_warnings():
            # an all-infinite simplex makes the convergence check compute
            # inf - inf; that is the intended penalty mechanism, not an error
            warnings.filterwarnings(
                "ignore", message="invalid value encountered",
                category=RuntimeWarning,
            )
            sp_optimize.minimize(
                wrapped, np.asarray(x0, dtype=float), method="Nelder-Mead",
                options={
                    "xatol": spec.tolerance,
                    "fatol": spec.tolerance,
                    "maxfev": 4000 * d,
                    "disp": False,
                },
            )

    best = None
    for entry in trace:
        if not entry["feasible"]:
            continue
        if best is None or entry["value"] < best["value"] or (
                entry["value"] == best["value"] and entry["start"] < best["start"]):
            best = entry
    if best is None:
        raise NoFeasiblePoint(
            f"all {len(starts)} starts were infeasible for objective "
            f"{spec.objective!r}"
        )
    point = {
        n: (_wrap_angle(v) if n in ANGLE_PARAMETERS else v)
        for n, v in best["point"].items()
    }
    return SearchResult(point=point, value=best["value"], trace=trace)


def spec_from_dict(data: dict) -> SearchSpec:
    """Build a SearchSpec from a plain JSON-style mapping.

    Expected keys: objective, template (flat config object), free_parameters
    as {name: [lo, hi]}, and optionally channel, mu0, multistart,
    extra_starts, seed, tolerance.  Angle bounds and starts accept 'pi*'
    literals.
    """
    known = {"objective", "template", "free_parameters", "channel", "mu0",
             "multistart", "extra_starts", "seed", "tolerance"}
    unknown = sorted(set(data) - known)
    if unknown:
        raise InvalidConfig(f"unknown search spec keys: {', '.join(unknown)}")
    try:
        objective = data["objective"]
        template = config_from_dict(dict(data["template"]))
        raw_free = dict(data["free_parameters"])
    except KeyError as exc:
        raise InvalidConfig(f"search spec is missing key {exc}") from None
    free = {}
    for name, bounds in raw_free.items():
        lo, hi = bounds
        if name in ANGLE_PARAMETERS:
            lo, hi = parse_angle(lo), parse_angle(hi)
        free[name] = (float(lo), float(hi))
    extra = []
    for start in data.get("extra_starts", []):
        extra.append({
            n: parse_angle(v) if n in ANGLE_PARAMETERS else float(v)
            for n, v in dict(start).items()
        })
    return SearchSpec(
        objective=objective,
        template=template,
        free_parameters=free,
        channel=int(data.get("channel", 1)),
        mu0=parse_angle(data.get("mu0", 0.0)) if isinstance(data.get("mu0"), str)
        else float(data.get("mu0", 0.0)),
        multistart=int(data.get("multistart", 32)),
        extra_starts=extra,
        seed=int(data.get("seed", 0)),
        tolerance=float(data.get("tolerance", 1e-8)),
    )


def load_search_spec(path) -> SearchSpec:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidConfig(f"search spec {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise InvalidConfig(f"search spec {path} must hold a JSON object")
    return spec_from_dict(data)
