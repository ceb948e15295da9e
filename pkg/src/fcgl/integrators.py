"""Constant-step time marching in the spectral-filter formulation.

Three stiff-resistant schemes share one driver:

* ``lbdf2``    -- two-step BDF with extrapolated nonlinearity (second order);
                  the resolvent filters R_tau and R_{2 tau/3} are built once.
* ``strang``   -- Strang splitting composing the exact nonlinear flow around
                  the exact linear propagator exp(tau K) (second order).
* ``krogstad`` -- four-stage exponential Runge-Kutta scheme (fourth order);
                  the phi-function filters P_{ell,theta} are built once.

Every per-step action of a matrix function is a fixed number of Tucker
operators plus pointwise work, so the cost per step is constant and the
loop is deterministic for a fixed BLAS thread count.  The matching
vector-oriented engines live in :mod:`fcgl.baseline` and are selected with
``engine='iterative_baseline'``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import problem as problem_mod
from .kronspec import SpectralCache
from .problem import GridProblem, discrete_l2_error, exact_flow, make_nonlinearity
from .tensorops import mu_mode_product, tucker

SCHEMES = ("lbdf2", "strang", "krogstad")
ENGINES = ("spectral", "iterative_baseline")


class BlowUpError(RuntimeError):
    """State became non-finite during time stepping."""

    def __init__(self, step: int, t: float):
        super().__init__(f"non-finite state detected after step {step} (t = {t:.6g})")
        self.step = step
        self.t = t


class IncompatibleSchemeError(ValueError):
    """Scheme cannot integrate this problem (e.g. splitting with a source)."""


@dataclass(frozen=True)
class RunConfig:
    """Time-marching configuration.

    ``fd_order`` is recorded for problem construction (the grid problem owns
    its discretization); the integrators never re-discretize.
    """

    scheme: str
    steps: int
    engine: str = "spectral"
    snapshot_times: tuple[float, ...] = ()
    precision: str = "double"
    fd_order: int = 2
    tol: float = 1e-6
    maxit: int = 20
    krylov_m: int = 10
    xi_over_tau: float = 0.1

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if self.engine not in ENGINES:
            raise ValueError(f"unknown engine {self.engine!r}; expected one of {ENGINES}")
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if self.precision not in ("double", "single"):
            raise ValueError(f"precision must be 'double' or 'single', got {self.precision!r}")


@dataclass
class RunResult:
    final: np.ndarray
    tau: float
    steps: int
    error: float | None = None
    step_errors: list | None = None
    snapshots: list = field(default_factory=list)
    precompute_seconds: float = 0.0
    loop_seconds: float = 0.0
    total_seconds: float = 0.0
    step_seconds: list = field(default_factory=list)
    iteration_stats: dict | None = None
    solver_ok: bool = True


def _dtypes(precision: str):
    if precision == "single":
        return np.complex64, np.float32
    return np.complex128, np.float64


class SpectralKit:
    """Per-run spectral data (diagonalizations, filters, small exponentials)
    cast once to the run precision; state-sized data stays at that precision."""

    def __init__(self, problem: GridProblem, precision: str = "double"):
        self.cdtype, self.rdtype = _dtypes(precision)
        op = problem.operator()
        self.cache = SpectralCache(op)
        self.q = [np.asfortranarray(f.q.astype(self.rdtype, copy=False)) for f in self.cache.factors]
        self.qt = [np.asfortranarray(f.q.T.astype(self.rdtype, copy=False)) for f in self.cache.factors]
        self.a = [op.a_matrix(mu).astype(self.cdtype, copy=False) for mu in range(1, op.d + 1)]

    def to_eigen(self, v):
        return tucker(v, self.qt)

    def from_eigen(self, v):
        return tucker(v, self.q)

    def resolvent(self, theta):
        return self.cache.resolvent_filter(theta).astype(self.cdtype, copy=False)

    def phi(self, ell, theta):
        return self.cache.phi_filter(ell, theta).astype(self.cdtype, copy=False)

    def small_exponentials(self, theta):
        return [self.cache.small_exponential(mu, theta).astype(self.cdtype, copy=False)
                for mu in range(1, self.cache.op.d + 1)]

    def apply_K(self, u):
        out = None
        for mu, a in enumerate(self.a, start=1):
            term = mu_mode_product(u, a, mu)
            out = term if out is None else out + term
        return out

    def apply_filter(self, filt, v):
        return self.from_eigen(filt * self.to_eigen(v))


class Lbdf2Spectral:
    """Backward-forward Euler start, then the linearized two-step BDF."""

    stats = None

    def __init__(self, problem: GridProblem, config: RunConfig, tau: float):
        self.kit = SpectralKit(problem, config.precision)
        self.g = make_nonlinearity(problem, self.kit.cdtype)
        self.tau = tau
        self.r_tau = self.kit.resolvent(tau)
        self.r_23 = self.kit.resolvent(2.0 * tau / 3.0)
        self.prev = None

    def step(self, n, t, u):
        tau = self.tau
        if n == 0:
            new = self.kit.apply_filter(self.r_tau, u + tau * self.g(0.0, u))
        else:
            extrapolated = 2.0 * u - self.prev
            rhs = (4.0 / 3.0) * u - (1.0 / 3.0) * self.prev \
                + (2.0 * tau / 3.0) * self.g(t + tau, extrapolated)
            new = self.kit.apply_filter(self.r_23, rhs)
        self.prev = u
        return new


class StrangSpectral:
    """Half nonlinear flow, full linear propagator, half nonlinear flow.

    The two split subproblems (linear, and gain plus cubic) leave no slot
    for a source term, so only source-free problems are accepted.
    """

    stats = None

    def __init__(self, problem: GridProblem, config: RunConfig, tau: float):
        require_source_free(problem, "strang")
        self.kit = SpectralKit(problem, config.precision)
        self.params = problem.params
        self.tau = tau
        self.exps = self.kit.small_exponentials(tau)

    def step(self, n, t, u):
        half = self.tau / 2.0
        w = exact_flow(self.params, half, u)
        w = tucker(w, self.exps)
        return exact_flow(self.params, half, w)


class KrogstadSpectral:
    """Four-stage exponential Runge-Kutta scheme in eigencoordinates.

    Nonlinear increments are transformed into the eigenbasis once per stage
    and each stage output transformed back: two Tucker operators per stage
    plus one for the stiff residual.
    """

    stats = None

    def __init__(self, problem: GridProblem, config: RunConfig, tau: float):
        self.kit = SpectralKit(problem, config.precision)
        self.g = make_nonlinearity(problem, self.kit.cdtype)
        self.tau = tau
        self.p1_half = self.kit.phi(1, tau / 2.0)
        self.p2_half = self.kit.phi(2, tau / 2.0)
        self.p1 = self.kit.phi(1, tau)
        self.p2 = self.kit.phi(2, tau)
        self.p3 = self.kit.phi(3, tau)

    def step(self, n, t, u):
        kit, tau, g = self.kit, self.tau, self.g
        gu = g(t, u)
        fhat = kit.to_eigen(kit.apply_K(u) + gu)
        p1f_half = self.p1_half * fhat
        u2 = u + (tau / 2.0) * kit.from_eigen(p1f_half)
        d2 = kit.to_eigen(g(t + tau / 2.0, u2) - gu)
        u3 = u + tau * kit.from_eigen(0.5 * p1f_half + self.p2_half * d2)
        d3 = kit.to_eigen(g(t + tau / 2.0, u3) - gu)
        p1f = self.p1 * fhat
        u4 = u + tau * kit.from_eigen(p1f + 2.0 * (self.p2 * d3))
        d4 = kit.to_eigen(g(t + tau, u4) - gu)
        new = u + tau * kit.from_eigen(
            p1f + self.p2 * (2.0 * d2 + 2.0 * d3 - d4) + self.p3 * (4.0 * (d4 - d2 - d3))
        )
        return new


def require_source_free(problem: GridProblem, scheme: str) -> None:
    if problem.source.mode != "none":
        raise IncompatibleSchemeError(
            f"the {scheme} splitting integrates the source-free equation; "
            f"problem has source mode {problem.source.mode!r}")


_SPECTRAL_STEPPERS = {
    "lbdf2": Lbdf2Spectral,
    "strang": StrangSpectral,
    "krogstad": KrogstadSpectral,
}


def make_spectral_stepper(problem: GridProblem, config: RunConfig, tau: float):
    return _SPECTRAL_STEPPERS[config.scheme](problem, config, tau)


def time_loop(problem: GridProblem, config: RunConfig, make_stepper) -> RunResult:
    """Precompute phase (timed separately), then the constant-step loop.

    Snapshots are captured at the step nearest each requested time; a
    non-finite state aborts with the offending step index.
    """
    t_start = time.perf_counter()
    params = problem.params
    tau = params.final_time / config.steps
    cdtype, _ = _dtypes(config.precision)

    stepper = make_stepper(problem, config, tau)
    precompute = time.perf_counter() - t_start

    want = {}
    for t_req in config.snapshot_times:
        idx = min(max(int(round(t_req / tau)), 0), config.steps)
        want.setdefault(idx, []).append(t_req)

    track_error = problem.source.manufactured
    exact_at = (lambda t: problem_mod.exact_solution(problem, t)) if track_error else None
    h = problem.steps

    u = np.asfortranarray(problem.u0.astype(cdtype, copy=True))
    snapshots = []
    step_errors = [] if track_error else None
    if 0 in want:
        snapshots.extend((t_req, u.copy()) for t_req in want[0])

    step_seconds = []
    t_loop = time.perf_counter()
    for n in range(config.steps):
        t_step = time.perf_counter()
        u = stepper.step(n, n * tau, u)
        step_seconds.append(time.perf_counter() - t_step)
        if not np.isfinite(u).all():
            raise BlowUpError(n + 1, (n + 1) * tau)
        if track_error:
            step_errors.append(discrete_l2_error(u.astype(np.complex128, copy=False),
                                                 exact_at((n + 1) * tau), h))
        if n + 1 in want:
            snapshots.extend((t_req, u.copy()) for t_req in want[n + 1])
    loop_seconds = time.perf_counter() - t_loop

    stats = getattr(stepper, "stats", None)
    result = RunResult(
        final=u,
        tau=tau,
        steps=config.steps,
        error=step_errors[-1] if track_error else None,
        step_errors=step_errors,
        snapshots=snapshots,
        precompute_seconds=precompute,
        loop_seconds=loop_seconds,
        total_seconds=time.perf_counter() - t_start,
        step_seconds=step_seconds,
        iteration_stats=summarize_stats(stats) if stats else None,
        solver_ok=not (stats and stats.get("failures")),
    )
    return result


def summarize_stats(stats: dict) -> dict:
    out = {}
    for kind in ("outer", "inner"):
        seq = stats.get(kind) or []
        if seq:
            out[f"{kind}_mean"] = float(np.mean(seq))
            out[f"{kind}_min"] = int(np.min(seq))
            out[f"{kind}_max"] = int(np.max(seq))
            out[f"{kind}_count"] = len(seq)
    out["failures"] = int(len(stats.get("failures") or []))
    return out


def run(problem: GridProblem, config: RunConfig) -> RunResult:
    """Run one scheme/engine combination on a grid problem."""
    if config.engine == "spectral":
        factory = make_spectral_stepper
    else:
        from .baseline import make_vector_stepper
        factory = make_vector_stepper
    return time_loop(problem, config, factory)


def lbdf2_run(problem: GridProblem, config: RunConfig) -> RunResult:
    return run(problem, replace(config, scheme="lbdf2"))


def strang_run(problem: GridProblem, config: RunConfig) -> RunResult:
    return run(problem, replace(config, scheme="strang"))


def krogstad_run(problem: GridProblem, config: RunConfig) -> RunResult:
    return run(problem, replace(config, scheme="krogstad"))


def reference_solution(problem: GridProblem, finest_steps: int, factor: int = 8,
                       precision: str = "double") -> np.ndarray:
    """Self-convergence reference: the fourth-order scheme on the same grid
    at ``factor`` times the finest step count."""
    cfg = RunConfig(scheme="krogstad", steps=finest_steps * factor,
                    precision=precision, fd_order=problem.fd_order)
    return run(problem, cfg).final


def fit_order(taus, errors) -> float:
    """Least-squares slope of log(error) against log(tau)."""
    taus = np.asarray(taus, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if taus.size < 2 or np.any(errors <= 0):
        return float("nan")
    slope = np.polyfit(np.log(taus), np.log(errors), 1)[0]
    return float(slope)
