"""JSON run configurations and built-in presets.

A configuration has the shape::

    {
      "schema": 1,
      "problem": {"name": "quadratic_saddle", "params": {...}, "seed": 0},
      "preconditioner": {"N1": {"type": "scaled_identity", "tau": 0.5},
                         "N2": {"type": "diagonal", "d": [...]},
                         "Q": {"type": "scaled_coupling", "factor": -2.0}},
      "solver": {"algorithm": "projected", "theta": 1.0, "tol": 1e-8, ...},
      "output": {"trace_path": "trace.csv", "summary_path": "summary.json"},
      "allow_unverified": false
    }

``problem.name`` is a catalog name or ``"custom"``, in which case
``params`` holds ``f``, ``g`` (``{"kind", "params"}``), ``coupling``
(``{"kind", "K", "a", "b", "tight_L"}``) and optionally ``known_solution``.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass

import jsonschema

from . import coupling as cp
from . import functions as fns
from . import preconditioner as pc
from . import problems as pb
from .core import PrimalDualPoint
from .exceptions import ConfigError
from .solver import SolverConfig

__all__ = ["SCHEMA", "RunConfig", "load", "parse", "apply_override", "PRESETS", "preset"]

_number = {"type": "number"}
_diag_block = {
    "oneOf": [
        {"type": "object", "required": ["type", "tau"], "additionalProperties": False,
         "properties": {"type": {"const": "scaled_identity"}, "tau": {"type": "number", "exclusiveMinimum": 0}}},
        {"type": "object", "required": ["type", "d"], "additionalProperties": False,
         "properties": {"type": {"const": "diagonal"},
                        "d": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1}}},
    ]
}
_q_block = {
    "oneOf": [
        {"type": "object", "required": ["type", "entries"], "additionalProperties": False,
         "properties": {"type": {"const": "matrix"}, "entries": {"type": "array"}}},
        {"type": "object", "required": ["type", "factor"], "additionalProperties": False,
         "properties": {"type": {"const": "scaled_coupling"}, "factor": _number}},
    ]
}

SCHEMA = {
    "type": "object",
    "required": ["schema", "problem", "preconditioner"],
    "additionalProperties": False,
    "properties": {
        "schema": {"const": 1},
        "name": {"type": "string"},
        "problem": {
            "type": "object", "required": ["name"], "additionalProperties": False,
            "properties": {
                "name": {"enum": list(pb.CATALOG) + ["custom"]},
                "params": {"type": "object"},
                "seed": {"type": ["integer", "null"]},
            },
        },
        "preconditioner": {
            "type": "object", "required": ["N1", "N2"], "additionalProperties": False,
            "properties": {"N1": _diag_block, "N2": _diag_block, "Q": _q_block},
        },
        "solver": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "algorithm": {"enum": ["projected", "relaxed"]},
                "theta": {"oneOf": [
                    {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 2},
                    {"type": "object", "required": ["mode"], "additionalProperties": False,
                     "properties": {"mode": {"const": "adaptive"},
                                    "eps_theta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}}},
                ]},
                "stepsize": {"oneOf": [{"const": "halfspace"}, {"type": "number", "exclusiveMinimum": 0}]},
                "correction": {"oneOf": [
                    {"type": "object", "required": ["type"], "additionalProperties": False,
                     "properties": {"type": {"const": "identity"}}},
                    {"type": "object", "required": ["type", "sigma", "theta"], "additionalProperties": False,
                     "properties": {"type": {"const": "generalized_pd"},
                                    "sigma": {"type": "number", "exclusiveMinimum": 0},
                                    "theta": _number}},
                ]},
                "tol": {"type": "number", "minimum": 0},
                "max_iter": {"type": "integer", "minimum": 0},
                "clamp_stepsize": {"type": "boolean"},
                "x0": {"type": "array", "items": _number},
                "y0": {"type": "array", "items": _number},
                "reference": {
                    "type": "object", "required": ["kind", "tau", "sigma", "theta_pd"], "additionalProperties": False,
                    "properties": {"kind": {"enum": ["pdhg", "generalized_pd"]},
                                   "tau": {"type": "number", "exclusiveMinimum": 0},
                                   "sigma": {"type": "number", "exclusiveMinimum": 0},
                                   "theta_pd": _number},
                },
            },
        },
        "output": {
            "type": "object", "additionalProperties": False,
            "properties": {"trace_path": {"type": "string"}, "summary_path": {"type": "string"}},
        },
        "allow_unverified": {"type": "boolean"},
    },
}


@dataclass
class RunConfig:
    raw: dict
    problem: pb.ProblemInstance
    spec: pc.PreconditionerSpec
    solver: SolverConfig
    u0: PrimalDualPoint | None
    reference: dict | None
    trace_path: str | None
    summary_path: str | None

    @property
    def name(self) -> str:
        return self.raw.get("name", self.problem.name)


def _custom_problem(params: dict, seed) -> pb.ProblemInstance:
    phi = cp.from_dict(params["coupling"])
    f = fns.from_dict(params["f"], phi.n)
    g = fns.from_dict(params["g"], phi.m)
    sol = params.get("known_solution")
    sol = PrimalDualPoint(sol["x"], sol["y"]) if sol is not None else None
    monotone = phi.a >= 0 and phi.b >= 0
    return pb.ProblemInstance("custom", f, g, phi, known_solution=sol, monotone=monotone, seed=seed,
                              params=params)


def _path(err: jsonschema.ValidationError) -> str:
    return "/".join(str(p) for p in err.absolute_path) or "<root>"


def parse(raw: dict) -> RunConfig:
    """Validate ``raw`` against :data:`SCHEMA` and build the run objects."""
    errors = sorted(jsonschema.Draft202012Validator(SCHEMA).iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        raise ConfigError("; ".join(f"{_path(e)}: {e.message}" for e in errors))
    try:
        pblock = raw["problem"]
        if pblock["name"] == "custom":
            problem = _custom_problem(pblock.get("params", {}), pblock.get("seed"))
        else:
            problem = pb.from_dict(pblock)
        spec = pc.from_dict(raw["preconditioner"], problem.phi)
        s = raw.get("solver", {})
        theta = s.get("theta", 1.0)
        corr = s.get("correction", {"type": "identity"})
        step = s.get("stepsize", "halfspace")
        solver = SolverConfig(
            algorithm=s.get("algorithm", "projected"),
            theta_mode="adaptive" if isinstance(theta, dict) else "constant",
            theta=1.0 if isinstance(theta, dict) else float(theta),
            eps_theta=theta.get("eps_theta", 0.05) if isinstance(theta, dict) else 0.05,
            stepsize=None if step == "halfspace" else float(step),
            correction=corr["type"],
            corr_sigma=float(corr.get("sigma", 1.0)),
            corr_theta=float(corr.get("theta", 1.0)),
            tol=float(s.get("tol", 1e-8)),
            max_iter=int(s.get("max_iter", 1000)),
            allow_unverified=bool(raw.get("allow_unverified", False)),
            clamp_stepsize=bool(s.get("clamp_stepsize", False)),
        )
        u0 = None
        if "x0" in s or "y0" in s:
            x0 = s.get("x0", [1.0] * problem.n)
            y0 = s.get("y0", [1.0] * problem.m)
            if len(x0) != problem.n or len(y0) != problem.m:
                raise ConfigError(f"solver/x0,y0: expected lengths {problem.n} and {problem.m}")
            u0 = PrimalDualPoint(x0, y0)
    except ConfigError:
        raise
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc
    out = raw.get("output", {})
    return RunConfig(raw, problem, spec, solver, u0, s.get("reference"),
                     out.get("trace_path"), out.get("summary_path"))


def load(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse(raw)


def apply_override(raw: dict, assignment: str) -> dict:
    """Apply ``dotted.key=value``; the value is parsed as JSON when possible."""
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r} is not key=value")
    key, value = assignment.split("=", 1)
    try:
        value = json.loads(value)
    except json.JSONDecodeError:
        pass
    out = copy.deepcopy(raw)
    node = out
    parts = key.split(".")
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise ConfigError(f"override {key!r} descends into a non-object")
    node[parts[-1]] = value
    return out


def _scaled_tau(problem: pb.ProblemInstance, factor: float) -> float:
    # tau with (1/tau) = factor * (gamma + 5L/4): comfortably inside mu > gamma + L/4
    L = cp.lipschitz_L(problem.phi)
    gamma = cp.weak_mono_gamma(problem.phi)
    return 1.0 / (factor * (gamma + 1.25 * L))


def _quadratic(name, a, b, tau, tol, max_iter, theta=1.0):
    return {
        "schema": 1, "name": name,
        "problem": {"name": "quadratic_saddle", "params": {"K": [[1.0]], "a": a, "b": b, "fw": 1.0, "gw": 1.0}},
        "preconditioner": {"N1": {"type": "scaled_identity", "tau": tau},
                           "N2": {"type": "scaled_identity", "tau": tau},
                           "Q": {"type": "scaled_coupling", "factor": 0.0}},
        "solver": {"algorithm": "projected", "theta": theta, "tol": tol, "max_iter": max_iter,
                   "x0": [1.0], "y0": [1.0]},
    }


def _matrix_game_5x5():
    problem = pb.random_matrix_game(5, 5, seed=0)
    tau = round(_scaled_tau(problem, 1.5), 6)
    return {
        "schema": 1, "name": "matrix_game_5x5",
        "problem": {"name": "matrix_game", "params": {"m": 5, "n": 5}, "seed": 0},
        "preconditioner": {"N1": {"type": "scaled_identity", "tau": tau},
                           "N2": {"type": "scaled_identity", "tau": tau},
                           "Q": {"type": "scaled_coupling", "factor": 0.0}},
        "solver": {"algorithm": "projected", "theta": 1.0, "tol": 1e-6, "max_iter": 5000,
                   "x0": [0.2] * 5, "y0": [0.2] * 5},
    }


def _lasso_small():
    return {
        "schema": 1, "name": "lasso_small",
        "problem": {"name": "l1_bilinear", "params": {"random_orthogonal": 4, "lam": 0.5}, "seed": 0},
        "preconditioner": {"N1": {"type": "scaled_identity", "tau": 0.5},
                           "N2": {"type": "scaled_identity", "tau": 0.5},
                           "Q": {"type": "scaled_coupling", "factor": 0.0}},
        "solver": {"algorithm": "projected", "theta": 1.0, "tol": 1e-10, "max_iter": 5000,
                   "x0": [0.0] * 4, "y0": [0.0] * 4},
    }


def _recovery(name, theta_pd, generalized):
    problem = pb.from_dict({"name": "l1_bilinear", "params": {"random_gaussian": [6, 4], "lam": 0.1}, "seed": 0})
    step = round(0.9 / problem.phi.K.norm(), 6)
    solver = {"algorithm": "relaxed", "tol": 1e-8, "max_iter": 5000,
              "x0": [0.0] * 4, "y0": [0.0] * 6,
              "reference": {"kind": "generalized_pd" if generalized else "pdhg",
                            "tau": step, "sigma": step, "theta_pd": theta_pd}}
    if generalized:
        solver["correction"] = {"type": "generalized_pd", "sigma": step, "theta": theta_pd}
    return {
        "schema": 1, "name": name,
        "problem": {"name": "l1_bilinear", "params": {"random_gaussian": [6, 4], "lam": 0.1}, "seed": 0},
        "preconditioner": {"N1": {"type": "scaled_identity", "tau": step},
                           "N2": {"type": "scaled_identity", "tau": step},
                           "Q": {"type": "scaled_coupling", "factor": -(theta_pd + 1.0)}},
        "solver": solver,
        # the recovered schemes sit outside the projection method's hypotheses
        "allow_unverified": True,
    }


PRESETS = {
    "quadratic_monotone": lambda: _quadratic("quadratic_monotone", 0.0, 0.0, 0.5, 1e-10, 1000),
    "quadratic_weak": lambda: _quadratic("quadratic_weak", -0.2, -0.1, 1.0 / 3.0, 1e-8, 5000),
    "quadratic_strong": lambda: _quadratic("quadratic_strong", 1.0, 1.0, 0.2, 1e-13, 200, theta=0.5),
    "matrix_game_5x5": _matrix_game_5x5,
    "pdhg_recovery": lambda: _recovery("pdhg_recovery", 1.0, False),
    "generalized_pd_recovery": lambda: _recovery("generalized_pd_recovery", 0.5, True),
    "lasso_small": _lasso_small,
}


def preset(name: str) -> dict:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}") from None
