"""Run configuration files: schema, validation, defaults, round-trip.

Configs are single YAML files with nested sections; unknown keys are
rejected with the offending path.  The resolved configuration (defaults
filled in) can be written back out and re-loaded to reproduce a run.

Sections and defaults::

    problem:
      kind: example1            # example1 | example2 | custom
      d: 2                      # example kinds: space dimension (2 or 3)
      n: 64                     # grid points per direction (int or list)
      source: discrete_manufactured   # example1: also analytic_manufactured | none
      # kind=custom only (no source term; custom sources are code-level):
      u0: sech_pulse            # sech_pulse | zero
      nu: ..., eta: ..., gamma: ..., kappa: ..., zeta: ...
      alphas: [...], domain: [[a, b], ...], final_time: ...
    run:
      scheme: lbdf2             # lbdf2 | strang | krogstad
      engine: spectral          # spectral | iterative_baseline
      steps: 25
      fd_order: 2               # 2 | 4
      precision: double         # double | single
      snapshot_times: []
    solver:                     # iterative engine hyperparameters
      tol: 1.0e-6
      maxit: 20
      krylov_m: 10
      xi_over_tau: 0.1
    convergence:                # the `convergence` command
      steps_list: [15, 20, 25, 30, 35]
      mode: auto                # auto | exact | self
      reference_factor: 8
    bench:                      # the `bench` command
      n_list: []                # empty: use problem.n
      schemes: []               # empty: use run.scheme
      steps: 0                  # 0: use run.steps
    output:
      directory: out
"""

from __future__ import annotations

import copy
from functools import reduce

import numpy as np
import yaml

from .integrators import RunConfig
from .problem import (
    FcgleParams,
    GridProblem,
    SourceSpec,
    example1_setup,
    example2_setup,
    sech,
)


class ConfigError(ValueError):
    """Invalid or unreadable run configuration."""


DEFAULTS = {
    "problem": {
        "kind": "example1",
        "d": 2,
        "n": 64,
        "source": "discrete_manufactured",
        "u0": "sech_pulse",
        "nu": None,
        "eta": None,
        "gamma": None,
        "kappa": None,
        "zeta": None,
        "alphas": None,
        "domain": None,
        "final_time": None,
    },
    "run": {
        "scheme": "lbdf2",
        "engine": "spectral",
        "steps": 25,
        "fd_order": 2,
        "precision": "double",
        "snapshot_times": [],
    },
    "solver": {
        "tol": 1.0e-6,
        "maxit": 20,
        "krylov_m": 10,
        "xi_over_tau": 0.1,
    },
    "convergence": {
        "steps_list": [15, 20, 25, 30, 35],
        "mode": "auto",
        "reference_factor": 8,
    },
    "bench": {
        "n_list": [],
        "schemes": [],
        "steps": 0,
        "engines": ["spectral", "iterative_baseline"],
    },
    "output": {
        "directory": "out",
    },
}

_CHOICES = {
    "problem.kind": ("example1", "example2", "custom"),
    "problem.source": ("discrete_manufactured", "analytic_manufactured", "none"),
    "problem.u0": ("sech_pulse", "zero"),
    "run.scheme": ("lbdf2", "strang", "krogstad"),
    "run.engine": ("spectral", "iterative_baseline"),
    "run.precision": ("double", "single"),
    "convergence.mode": ("auto", "exact", "self"),
}


def load_config(path) -> dict:
    """Read, validate and default-fill a YAML config file."""
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must be a mapping of sections")
    return resolve_config(raw)


def resolve_config(raw: dict) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    for section, values in raw.items():
        if section not in cfg:
            raise ConfigError(f"unknown config section {section!r}")
        if values is None:
            continue
        if not isinstance(values, dict):
            raise ConfigError(f"section {section!r} must be a mapping")
        for key, value in values.items():
            if key not in cfg[section]:
                raise ConfigError(f"unknown config key {section}.{key}")
            cfg[section][key] = value
    _validate(cfg)
    return cfg


def _validate(cfg: dict) -> None:
    for path, allowed in _CHOICES.items():
        section, key = path.split(".")
        value = cfg[section][key]
        if value not in allowed:
            raise ConfigError(f"{path} must be one of {allowed}, got {value!r}")
    run = cfg["run"]
    if run["fd_order"] not in (2, 4):
        raise ConfigError(f"run.fd_order must be 2 or 4, got {run['fd_order']!r}")
    if not isinstance(run["steps"], int) or run["steps"] < 1:
        raise ConfigError(f"run.steps must be a positive integer, got {run['steps']!r}")
    prob = cfg["problem"]
    if prob["kind"] == "custom":
        for key in ("nu", "eta", "gamma", "kappa", "zeta", "alphas", "domain", "final_time"):
            if prob[key] is None:
                raise ConfigError(f"problem.{key} is required for kind=custom")
    elif prob["kind"] == "example2" and prob["source"].endswith("manufactured") \
            and prob["source"] != DEFAULTS["problem"]["source"]:
        raise ConfigError("example2 has no source term; manufactured sources apply to example1")
    steps_list = cfg["convergence"]["steps_list"]
    if not isinstance(steps_list, list) or any(not isinstance(s, int) or s < 1 for s in steps_list):
        raise ConfigError("convergence.steps_list must be a list of positive integers")
    engines = cfg["bench"]["engines"]
    if (not isinstance(engines, list) or len(engines) != 2
            or any(e not in ("spectral", "iterative_baseline") for e in engines)):
        raise ConfigError("bench.engines must be a pair drawn from "
                          "{spectral, iterative_baseline}")


def dump_config(cfg: dict) -> str:
    """Serialized form of a resolved config; re-loading reproduces the run."""
    printable = {
        section: {k: v for k, v in values.items() if v is not None}
        for section, values in cfg.items()
    }
    return yaml.safe_dump(printable, sort_keys=True)


def build_problem(cfg: dict, fd_order: int | None = None) -> GridProblem:
    try:
        return _build_problem(cfg, fd_order)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _build_problem(cfg: dict, fd_order: int | None) -> GridProblem:
    prob = cfg["problem"]
    fd = fd_order if fd_order is not None else cfg["run"]["fd_order"]
    n = prob["n"]
    if prob["kind"] == "example1":
        source = prob["source"]
        if source == "none":
            # regression aid: example1 parameters without the source term
            base = example1_setup(prob["d"], n, fd_order=fd)
            return GridProblem(params=base.params, shape=base.shape, fd_order=fd,
                               u0=base.u0, source=SourceSpec())
        return example1_setup(prob["d"], n, fd_order=fd, source_mode=source)
    if prob["kind"] == "example2":
        return example2_setup(prob["d"], n, fd_order=fd)
    params = FcgleParams(
        nu=float(prob["nu"]), eta=float(prob["eta"]), gamma=float(prob["gamma"]),
        kappa=float(prob["kappa"]), zeta=float(prob["zeta"]),
        alphas=tuple(float(a) for a in prob["alphas"]),
        domain=tuple((float(a), float(b)) for a, b in prob["domain"]),
        final_time=float(prob["final_time"]),
    )
    shape = tuple(int(v) for v in n) if isinstance(n, (list, tuple)) else (int(n),) * params.d
    problem = GridProblem(params=params, shape=shape, fd_order=fd,
                          u0=np.empty(0), source=SourceSpec())
    if prob["u0"] == "zero":
        problem.u0 = np.zeros(shape, dtype=np.complex128, order="F")
    else:
        vectors = [sech(ax) * np.exp(1j * ax) for ax in problem.axes]
        problem.u0 = np.asfortranarray(np.atleast_1d(reduce(np.multiply.outer, vectors)))
    return problem


def build_run_config(cfg: dict, steps: int | None = None, scheme: str | None = None,
                     engine: str | None = None) -> RunConfig:
    run = cfg["run"]
    solver = cfg["solver"]
    return RunConfig(
        scheme=scheme if scheme is not None else run["scheme"],
        engine=engine if engine is not None else run["engine"],
        steps=steps if steps is not None else run["steps"],
        snapshot_times=tuple(float(t) for t in run["snapshot_times"]),
        precision=run["precision"],
        fd_order=run["fd_order"],
        tol=float(solver["tol"]),
        maxit=int(solver["maxit"]),
        krylov_m=int(solver["krylov_m"]),
        xi_over_tau=float(solver["xi_over_tau"]),
    )
